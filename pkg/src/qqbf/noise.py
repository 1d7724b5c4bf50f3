"""Partial photon distinguishability.

Closed-form output states of the product and addition blocks as a function
of the two-photon indistinguishability C_I, and a Gram-matrix simulator
for up to three photons through any mode unitary.

Convention: C_I is the squared overlap |<xi_1|xi_2>|^2 (the HOM
visibility). A Gram matrix holds the overlaps themselves, so a two-photon
Gram matrix with off-diagonal sqrt(C_I) corresponds to C_I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .blocks import R_ADD
from .fock import check_unitary, permanent
from .qubit import (
    Indeterminate,
    PointLike,
    as_point,
    fidelity_mixed,
    validate_density,
)

PSD_TOL = 1e-10


@dataclass(frozen=True)
class OverlapSpec:
    """Pairwise overlaps <xi_j|xi_k> of the photons' internal states.

    Attributes:
        gram: Hermitian PSD matrix with unit diagonal.
        c_same_pair: overlap between photons 1 and 2 (informational).
        c_cross_pair: overlap between photon 3 and photons 1, 2 (informational).
    """

    gram: np.ndarray
    c_same_pair: float | None = None
    c_cross_pair: float | None = None

    def __post_init__(self) -> None:
        g = np.array(self.gram, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gram must be square")
        if np.max(np.abs(g - g.conj().T)) > PSD_TOL:
            raise ValueError("gram must be Hermitian")
        if np.max(np.abs(np.diag(g) - 1)) > PSD_TOL:
            raise ValueError("gram diagonal must be 1")
        if np.max(np.abs(g)) > 1 + PSD_TOL:
            raise ValueError("overlaps must satisfy |gram_ij| <= 1")
        if np.linalg.eigvalsh(g).min() < -PSD_TOL:
            raise ValueError("gram must be positive semidefinite")
        g.flags.writeable = False
        object.__setattr__(self, "gram", g)

    @property
    def photons(self) -> int:
        return self.gram.shape[0]

    @classmethod
    def ideal(cls, photons: int) -> "OverlapSpec":
        return cls(np.ones((photons, photons)))

    @classmethod
    def distinguishable(cls, photons: int) -> "OverlapSpec":
        return cls(np.eye(photons))

    @classmethod
    def two_photon(cls, c_i: float) -> "OverlapSpec":
        """Two photons with indistinguishability (squared overlap) ``c_i``."""
        if not 0.0 <= c_i <= 1.0:
            raise ValueError("C_I must lie in [0, 1]")
        g = math.sqrt(c_i)
        return cls(np.array([[1.0, g], [g, 1.0]]))

    @classmethod
    def pairs(cls, c_same_pair: float, c_cross_pair: float) -> "OverlapSpec":
        """Three photons: 1 and 2 from the same pair, 3 from another.

        The two values are used directly as Gram entries.
        """
        a, b = c_same_pair, c_cross_pair
        g = np.array([[1.0, a, b], [a, 1.0, b], [b, b, 1.0]])
        return cls(g, a, b)

    def factor(self, tol: float = 1e-12) -> np.ndarray:
        """Internal-state vectors as rows, with <v_j|v_k> = gram[j, k]."""
        w, Q = np.linalg.eigh(self.gram)
        keep = w > tol
        L = Q[:, keep] * np.sqrt(w[keep])
        return L.conj()

    def to_json(self) -> dict:
        g = self.gram
        if np.all(g.imag == 0):
            gram = g.real.tolist()
        else:
            gram = [[[float(x.real), float(x.imag)] for x in row] for row in g]
        return {"gram": gram, "c_same_pair": self.c_same_pair, "c_cross_pair": self.c_cross_pair}

    @classmethod
    def from_json(cls, obj: Mapping) -> "OverlapSpec":
        extra = set(obj) - {"gram", "c_same_pair", "c_cross_pair"}
        if extra:
            raise ValueError(f"unknown overlap fields {sorted(extra)}")
        if obj.get("gram") is not None:
            g = np.array(obj["gram"])
            if g.ndim == 3:
                g = g[..., 0] + 1j * g[..., 1]
            return cls(g, obj.get("c_same_pair"), obj.get("c_cross_pair"))
        return cls.pairs(float(obj["c_same_pair"]), float(obj["c_cross_pair"]))


class NoisyOutcome(NamedTuple):
    branch: object
    rho: np.ndarray | None
    probability: float


def _check_c(c_i: float) -> None:
    if not 0.0 <= c_i <= 1.0:
        raise ValueError("C_I must lie in [0, 1]")


def _check_r(R: float) -> None:
    if not 0.0 < R < 1.0:
        raise ValueError("reflectivity must lie strictly between 0 and 1")


def _normalize(M: np.ndarray):
    tr = float(np.trace(M).real)
    if tr <= 1e-300:
        return None, 0.0
    return M / tr, tr


# ---------------------------------------------------------------------------
# product block

def product_density(z1: PointLike, z2: PointLike, c_i: float, branch: str = "+") -> NoisyOutcome:
    """Output state of a product branch: coherences are scaled by C_I."""
    _check_c(c_i)
    if branch not in ("+", "-"):
        raise ValueError("product branch must be '+' or '-'")
    p, q = as_point(z1), as_point(z2)
    a, b = p.alpha * q.alpha, p.beta * q.beta
    sign = 1 if branch == "+" else -1
    M = np.array([[abs(a) ** 2, sign * a * b.conjugate() * c_i],
                  [sign * a.conjugate() * b * c_i, abs(b) ** 2]])
    rho, tr = _normalize(M)
    return NoisyOutcome(branch, rho, tr / 2)


def product_fidelity(z1: PointLike, z2: PointLike, c_i: float) -> float:
    """F = 1 - 2|z1 z2|^2 / (1 + |z1 z2|^2)^2 (1 - C_I), for both branches."""
    _check_c(c_i)
    p, q = as_point(z1), as_point(z2)
    x, y = abs(p.alpha * q.alpha) ** 2, abs(p.beta * q.beta) ** 2
    if x + y == 0:
        raise ValueError("product target is indeterminate")
    return float(1 - 2 * x * y / (x + y) ** 2 * (1 - c_i))


# ---------------------------------------------------------------------------
# addition block
#
# Everything below is written for normalized projective pairs: with
# w = b1 b2, x1 = a1 b2 and x2 = a2 b1 one has z_k = x_k / w, and the
# (1+|z1|^2)(1+|z2|^2) normalization becomes 1.

def _pairs(z1, z2):
    p, q = as_point(z1), as_point(z2)
    w = p.beta * q.beta
    x1, x2 = p.alpha * q.beta, q.alpha * p.beta
    return p, q, w, x1, x2


def addition_density(z1: PointLike, z2: PointLike, R: float = R_ADD,
                     c_i: float = 1.0) -> NoisyOutcome:
    """Sum-branch output state for splitter reflectivity R."""
    _check_r(R)
    _check_c(c_i)
    T = 1 - R
    _, _, w, x1, x2 = _pairs(z1, z2)
    s = x1 + x2
    k = math.sqrt(R * T)
    d = 1 - c_i
    cross = 2 * (x1 * x2.conjugate()).real
    M = np.array([
        [R * T * abs(s) ** 2 - R * T * cross * d,
         k * (R - T) * s * w.conjugate() + k * (T * x2 - R * x1) * w.conjugate() * d],
        [0, ((R - T) ** 2 + 2 * R * T * d) * abs(w) ** 2],
    ], dtype=complex)
    M[1, 0] = M[0, 1].conjugate()
    rho, tr = _normalize(M)
    return NoisyOutcome("S", rho, tr)


def harmonic_density(z1: PointLike, z2: PointLike, R: float = R_ADD,
                     c_i: float = 1.0) -> NoisyOutcome:
    """Harmonic-branch output state for splitter reflectivity R."""
    _check_r(R)
    _check_c(c_i)
    T = 1 - R
    p, q, w, x1, x2 = _pairs(z1, z2)
    s = x1 + x2
    k = math.sqrt(R * T)
    d = 1 - c_i
    cross = 2 * (x1 * x2.conjugate()).real
    prod2 = abs(p.alpha * q.alpha) ** 2
    # |z1|^2 z2 |w|^2 and z1 |z2|^2 |w|^2
    u = abs(p.alpha) ** 2 * q.alpha * q.beta.conjugate()
    v = p.alpha * p.beta.conjugate() * abs(q.alpha) ** 2
    M = np.array([
        [prod2 * ((R - T) ** 2 + 2 * R * T * d),
         k * (T - R) * (u + v) + k * (R * u - T * v) * d],
        [0, R * T * abs(s) ** 2 - R * T * cross * d],
    ], dtype=complex)
    M[1, 0] = M[0, 1].conjugate()
    rho, tr = _normalize(M)
    return NoisyOutcome("I", rho, tr)


def addition_fidelity(z1: PointLike, z2: PointLike, R: float = R_ADD,
                      c_i: float = 1.0) -> float:
    """Fidelity of the sum branch to z1 + z2."""
    _check_r(R)
    _check_c(c_i)
    T = 1 - R
    _, _, w, x1, x2 = _pairs(z1, z2)
    n_noisy = _sum_trace(x1, x2, w, R, c_i)
    n_ideal = R * T * abs(x1 + x2) ** 2 + (R - T) ** 2 * abs(w) ** 2
    if n_noisy * n_ideal == 0:
        raise ValueError("sum target is indeterminate")
    num = 2 * R * T * abs(R * x1 + T * x2) ** 2 * abs(w) ** 2 * (1 - c_i)
    return float(1 - num / (n_noisy * n_ideal))


def _sum_trace(x1, x2, w, R, c_i):
    T = 1 - R
    d = 1 - c_i
    return (R * T * abs(x1 + x2) ** 2 - 2 * R * T * (x1 * x2.conjugate()).real * d
            + ((R - T) ** 2 + 2 * R * T * d) * abs(w) ** 2)


def harmonic_fidelity(z1: PointLike, z2: PointLike, R: float = R_ADD,
                      c_i: float = 1.0) -> float:
    """Fidelity of the harmonic branch to -z1 z2 / (z1 + z2)."""
    _check_r(R)
    _check_c(c_i)
    T = 1 - R
    p, q, w, x1, x2 = _pairs(z1, z2)
    prod2 = abs(p.alpha * q.alpha) ** 2
    d = 1 - c_i
    n_noisy = (prod2 * ((R - T) ** 2 + 2 * R * T * d)
               + R * T * abs(x1 + x2) ** 2 - 2 * R * T * (x1 * x2.conjugate()).real * d)
    n_ideal = prod2 * (R - T) ** 2 + R * T * abs(x1 + x2) ** 2
    if n_noisy * n_ideal == 0:
        raise ValueError("harmonic target is indeterminate")
    num = 2 * R * T * abs(R * x1 + T * x2) ** 2 * prod2 * d
    return float(1 - num / (n_noisy * n_ideal))


class ConcatDiagonals(NamedTuple):
    d11: float
    d22: float
    offdiag_zero: bool


def distinguishable_concat_diagonals(kind: str, z1: PointLike, z2: PointLike, z3: PointLike,
                                     R: float = R_ADD) -> ConcatDiagonals:
    """Un-normalized output populations of two chained blocks with C_I = 0.

    ``kind`` names the blocks in the order they act: P for product, S for
    sum. With k = RT / (R^2 + T^2) the populations of |0> and |1> are

        PP: |z1 z2 z3|^2 vs 1
        SS: k^2 (|z1|^2 + |z2|^2) + k |z3|^2 vs 1
        SP: k (|z1|^2 + |z2|^2) |z3|^2 vs 1
        PS: k (|z1 z2|^2 + |z3|^2) vs 1
    """
    _check_r(R)
    T = 1 - R
    k = R * T / (R ** 2 + T ** 2)
    pts = [as_point(z) for z in (z1, z2, z3)]
    if any(p.is_infinite for p in pts):
        raise ValueError("diagonals are defined for finite inputs")
    a1, a2, a3 = (abs(p.z) ** 2 for p in pts)
    table = {
        "PP": (a1 * a2 * a3, True),
        "SS": (k * k * (a1 + a2) + k * a3, False),
        "SP": (k * (a1 + a2) * a3, True),
        "PS": (k * (a1 * a2 + a3), False),
    }
    if kind not in table:
        raise ValueError(f"kind must be one of {sorted(table)}")
    d11, zero = table[kind]
    return ConcatDiagonals(float(d11), 1.0, zero)


# ---------------------------------------------------------------------------
# Gram-matrix simulator

def simulate_partial(U: np.ndarray, photons: Sequence[PointLike],
                     pairs: Sequence[tuple[int, int]], spec: OverlapSpec,
                     postselection: Mapping[tuple[int, ...], object],
                     output_modes: tuple[int, int]) -> list[NoisyOutcome]:
    """Post-selected output qubit for partially distinguishable photons.

    Photon k enters in the dual-rail state ``photons[k]`` on ``pairs[k]``
    and carries an internal vector v_k with <v_j|v_k> = gram[j, k]. For a
    detection pattern with one photon in each herald mode and one in an
    output rail, the amplitude for internal labels b is the permanent of
    G[j, k] = F[mode_j, k] v_k[b_j], with F the spatial transfer of each
    photon. Tracing over the labels gives the output density matrix.

    Args:
        U: mode unitary.
        photons: input qubit per photon (at most 3).
        pairs: (|0> mode, |1> mode) per photon.
        spec: overlaps between the photons.
        postselection: herald modes (one photon each) -> branch label.
        output_modes: (|0> rail, |1> rail) of the output qubit.

    Returns:
        One outcome per branch; ``rho`` is None for impossible branches.
    """
    U = check_unitary(U)
    pts = [as_point(z) for z in photons]
    n = len(pts)
    if n > 3:
        raise ValueError("simulate_partial supports at most 3 photons")
    if spec.photons != n or len(pairs) != n:
        raise ValueError("photon count, mode pairs and gram size must agree")
    V = spec.factor()
    d = V.shape[1]
    C = np.zeros((U.shape[0], n), dtype=complex)
    for k, (p, (m0, m1)) in enumerate(zip(pts, pairs)):
        C[m0, k] += p.alpha
        C[m1, k] += p.beta
    F = U @ C
    labels = np.array(list(np.ndindex(*([d] * n))), dtype=int).reshape(-1, n)
    out = []
    for herald, branch in postselection.items():
        herald = tuple(herald)
        if len(herald) != n - 1 or set(herald) & set(output_modes):
            raise ValueError(f"herald pattern {herald} is not compatible with {n} photons")
        amps = np.zeros((2, len(labels)), dtype=complex)
        for r, o in enumerate(output_modes):
            rows = F[list(herald) + [o], :]
            for i, b in enumerate(labels):
                amps[r, i] = permanent(rows * V[:, b].T)
        rho, prob = _normalize(amps @ amps.conj().T)
        out.append(NoisyOutcome(branch, rho, prob))
    return out


def noisy_preset(name: str, zs: Sequence[PointLike], spec: OverlapSpec) -> list[NoisyOutcome]:
    """Gram-matrix simulation of every branch of a mesh preset."""
    from .mesh import preset

    p = preset(name)
    return simulate_partial(p.unitary(), zs, p.input_pairs, spec,
                            {h: lab for h, lab in p.branches.items()}, p.output_modes)


def preset_fidelity(name: str, zs: Sequence[PointLike], spec: OverlapSpec,
                    herald: tuple[int, ...] | None = None) -> float:
    """F_D of one preset branch (the main one by default)."""
    from .mesh import preset

    p = preset(name)
    herald = p.main if herald is None else tuple(herald)
    target = p.expected(p.branches[herald], zs)
    if isinstance(target, Indeterminate):
        raise ValueError("target is indeterminate for these inputs")
    res = simulate_partial(p.unitary(), zs, p.input_pairs, spec,
                           {herald: p.branches[herald]}, p.output_modes)[0]
    if res.rho is None:
        raise ValueError("branch has zero probability")
    return fidelity_mixed(res.rho, target)


def is_physical(rho: np.ndarray, tol: float = 1e-10) -> bool:
    try:
        validate_density(rho, tol)
    except ValueError:
        return False
    return True
