"""Few-photon Fock states and their evolution through linear-optical unitaries."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

TOL_UNITARY = 1e-10
TOL_AMP = 1e-12
MAX_PERMANENT = 6
MAX_PHOTONS = 4

FockState = tuple[int, ...]


def _check_state(state: Sequence[int], modes: int) -> FockState:
    state = tuple(int(x) for x in state)
    if len(state) != modes:
        raise ValueError(f"occupation vector {state} does not have {modes} modes")
    if any(x < 0 for x in state):
        raise ValueError(f"negative occupation in {state}")
    return state


@functools.lru_cache(maxsize=None)
def fock_basis(modes: int, photons: int) -> tuple[FockState, ...]:
    """All occupation vectors of ``photons`` over ``modes``, lexicographically sorted."""
    if modes < 1 or photons < 0:
        raise ValueError("need modes >= 1 and photons >= 0")
    states = []
    for combo in itertools.combinations_with_replacement(range(modes), photons):
        occ = [0] * modes
        for m in combo:
            occ[m] += 1
        states.append(tuple(occ))
    return tuple(sorted(states))


@dataclass(frozen=True)
class FockVector:
    """Superposition of Fock states over a fixed number of modes.

    Attributes:
        modes: number of optical modes.
        amplitudes: read-only mapping from occupation tuple to amplitude.
        normalized: False marks a vector that is deliberately not unit norm.
    """

    modes: int
    amplitudes: Mapping[FockState, complex]
    normalized: bool = True
    photons: int = field(init=False)

    def __post_init__(self) -> None:
        if self.modes < 1:
            raise ValueError("modes must be positive")
        amps = {}
        counts = set()
        for key, val in dict(self.amplitudes).items():
            key = _check_state(key, self.modes)
            counts.add(sum(key))
            amps[key] = complex(val)
        if len(counts) > 1:
            raise ValueError(f"mixed photon numbers {sorted(counts)}")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))
        object.__setattr__(self, "photons", counts.pop() if counts else 0)
        if self.normalized and amps:
            n2 = self.norm_squared()
            if abs(n2 - 1.0) > 1e-9:
                raise ValueError(f"vector flagged normalized has norm^2 {n2}")

    @classmethod
    def from_dense(cls, modes: int, photons: int, vec: np.ndarray,
                   normalized: bool = True) -> "FockVector":
        basis = fock_basis(modes, photons)
        return cls(modes, {s: a for s, a in zip(basis, vec) if a != 0}, normalized)

    def to_dense(self) -> np.ndarray:
        basis = fock_basis(self.modes, self.photons)
        return np.array([self.amplitudes.get(s, 0.0) for s in basis], dtype=complex)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def amplitude(self, state: Sequence[int]) -> complex:
        return self.amplitudes.get(tuple(state), 0j)

    def normalize(self) -> "FockVector":
        n = math.sqrt(self.norm_squared())
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.modes, {k: v / n for k, v in self.amplitudes.items()})

    @property
    def is_empty(self) -> bool:
        return not any(abs(a) > 0 for a in self.amplitudes.values())


def check_unitary(U: np.ndarray, tol: float = TOL_UNITARY) -> np.ndarray:
    """Return ``U`` as a complex array, raising ValueError if it is not unitary."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    dev = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])))
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max deviation {dev:.3g})")
    return U


def _ryser(M: np.ndarray) -> complex:
    # Gray-code Ryser: row sums updated one column at a time.
    n = M.shape[0]
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    sign = -1 if n % 2 else 1
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        diff = gray ^ prev
        j = diff.bit_length() - 1
        if gray & diff:
            row_sums += M[:, j]
        else:
            row_sums -= M[:, j]
        prev = gray
        parity = -1 if bin(gray).count("1") % 2 else 1
        total += parity * np.prod(row_sums)
    return sign * total


def permanent(M: np.ndarray) -> complex:
    """Matrix permanent for square matrices up to 6x6.

    Minor expansion is used up to 3x3 and Ryser's formula with Gray-code
    ordering above that.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n > MAX_PERMANENT:
        raise ValueError(f"permanent limited to n <= {MAX_PERMANENT}, got {n}")
    if n == 0:
        return 1 + 0j
    if n == 1:
        return complex(M[0, 0])
    if n == 2:
        return complex(M[0, 0] * M[1, 1] + M[0, 1] * M[1, 0])
    if n == 3:
        return complex(
            M[0, 0] * (M[1, 1] * M[2, 2] + M[1, 2] * M[2, 1])
            + M[0, 1] * (M[1, 0] * M[2, 2] + M[1, 2] * M[2, 0])
            + M[0, 2] * (M[1, 0] * M[2, 1] + M[1, 1] * M[2, 0])
        )
    return complex(_ryser(M))


def _expand(state: FockState) -> list[int]:
    return [m for m, k in enumerate(state) for _ in range(k)]


def _norm_factor(state: FockState) -> float:
    return math.prod(math.factorial(k) for k in state)


def transition_matrix(U: np.ndarray, photons: int) -> np.ndarray:
    """Matrix of <t|U|s> over the lexicographic basis of ``photons`` photons."""
    U = np.asarray(U, dtype=complex)
    basis = fock_basis(U.shape[0], photons)
    out = np.empty((len(basis), len(basis)), dtype=complex)
    rows = [_expand(t) for t in basis]
    for j, s in enumerate(basis):
        cols = _expand(s)
        sub = U[:, cols]
        ns = _norm_factor(s)
        for i, t in enumerate(basis):
            out[i, j] = permanent(sub[rows[i], :]) / math.sqrt(ns * _norm_factor(t))
    return out


def evolve(U: np.ndarray, psi: FockVector, tol: float = TOL_UNITARY) -> FockVector:
    """Apply the mode unitary ``U`` to ``psi``.

    Creation operators transform as a_j^dag -> sum_i U[i, j] a_i^dag, so the
    amplitude <t|U|s> is per(U[t, s]) / sqrt(prod s! prod t!).
    """
    U = check_unitary(U, tol)
    if U.shape[0] != psi.modes:
        raise ValueError(f"unitary acts on {U.shape[0]} modes, state has {psi.modes}")
    if psi.photons > MAX_PHOTONS:
        raise ValueError(f"evolve supports at most {MAX_PHOTONS} photons")
    basis = fock_basis(psi.modes, psi.photons)
    rows = [_expand(t) for t in basis]
    tnorm = np.sqrt([_norm_factor(t) for t in basis])
    out = np.zeros(len(basis), dtype=complex)
    for s, amp in psi.amplitudes.items():
        if amp == 0:
            continue
        sub = U[:, _expand(s)]
        col = np.array([permanent(sub[r, :]) for r in rows])
        out += amp * col / (tnorm * math.sqrt(_norm_factor(s)))
    return FockVector.from_dense(psi.modes, psi.photons, out, normalized=psi.normalized)


def postselect(psi: FockVector, kept_modes: Iterable[int],
               required: Mapping[int, int]) -> tuple[FockVector | None, float]:
    """Condition ``psi`` on the occupation ``required`` of the non-kept modes.

    Args:
        psi: normalized state.
        kept_modes: modes that remain after detection.
        required: occupation for every mode not in ``kept_modes``.

    Returns:
        The renormalized conditional state on ``kept_modes`` (None when the
        branch is impossible) and the branch probability.
    """
    kept = sorted(set(kept_modes))
    req = {int(k): int(v) for k, v in required.items()}
    if set(kept) & set(req) or set(kept) | set(req) != set(range(psi.modes)):
        raise ValueError("kept modes and required modes must partition all modes")
    if sum(req.values()) > psi.photons:
        raise ValueError("required pattern has more photons than the state")
    cond: dict[FockState, complex] = {}
    for s, a in psi.amplitudes.items():
        if all(s[m] == k for m, k in req.items()):
            key = tuple(s[m] for m in kept)
            cond[key] = cond.get(key, 0j) + a
    prob = float(sum(abs(a) ** 2 for a in cond.values()))
    if prob <= TOL_AMP ** 2:
        return None, 0.0
    scale = 1.0 / math.sqrt(prob)
    return FockVector(len(kept), {k: v * scale for k, v in cond.items()}), prob


TERMS = ("const", "z1", "z2", "z1z2")


def two_photon_output_table(U: np.ndarray) -> dict[tuple[str, int], complex]:
    """Bilinear coefficients of the two-photon output on modes 1 and 4.

    The input is (z1 a1^dag + a2^dag)(z2 a3^dag + a4^dag)|0> and the detected
    photon sits in mode 3 (1-indexed). Keys are ``(term, mode)`` with term in
    ``TERMS`` and mode in {1, 4}.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4):
        raise ValueError("two_photon_output_table needs a 4x4 matrix")
    u = lambda i, j: U[i - 1, j - 1]
    table = {}
    for out in (1, 4):
        table[("const", out)] = u(out, 2) * u(3, 4) + u(3, 2) * u(out, 4)
        table[("z1", out)] = u(out, 1) * u(3, 4) + u(3, 1) * u(out, 4)
        table[("z2", out)] = u(out, 3) * u(3, 2) + u(out, 2) * u(3, 3)
        table[("z1z2", out)] = u(out, 1) * u(3, 3) + u(3, 1) * u(out, 3)
    return table


def dual_rail_input(amplitudes: Sequence[tuple[complex, complex]],
                    pairs: Sequence[tuple[int, int]], modes: int | None = None) -> FockVector:
    """Product state with one photon per qubit.

    Args:
        amplitudes: (alpha, beta) per photon, normalized.
        pairs: (mode of |0>, mode of |1>) per photon; all modes distinct.
        modes: total mode count, defaulting to the largest mode used plus one.
    """
    used = [m for p in pairs for m in p]
    if len(set(used)) != len(used):
        raise ValueError("dual-rail mode pairs must be disjoint")
    modes = max(used) + 1 if modes is None else modes
    amps: dict[FockState, complex] = {tuple([0] * modes): 1 + 0j}
    for (c0, c1), (m0, m1) in zip(amplitudes, pairs):
        new: dict[FockState, complex] = {}
        for occ, a in amps.items():
            for m, c in ((m0, c0), (m1, c1)):
                if c == 0:
                    continue
                o = list(occ)
                o[m] += 1
                # distinct modes, so no bosonic normalization factor
                new[tuple(o)] = new.get(tuple(o), 0j) + a * c
        amps = new
    return FockVector(modes, amps)
