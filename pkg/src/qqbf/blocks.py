"""Four-mode, two-photon interferometers for the field operations on z.

Mode convention (0-indexed): qubit 1 on modes (0, 1) with its |0> rail on
mode 0, qubit 2 on modes (2, 3) with its |0> rail on mode 2. The output
qubit is read on modes (0, 3) and a single photon is detected on mode 1 or
mode 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .fock import TOL_UNITARY, check_unitary, dual_rail_input, evolve, postselect
from .qubit import (
    INDETERMINATE,
    FieldResult,
    Indeterminate,
    PointLike,
    RiemannPoint,
    as_point,
    field_add,
    field_harmonic,
    field_inv,
    field_mul,
    field_neg,
    fidelity_pure,
    result_to_json,
)

R_ADD = (5 + math.sqrt(5)) / 10
OUTPUT_MODES = (0, 3)
HERALD_MODES = (1, 2)

PRODUCT = "product"
ADDITION = "addition"

# detection pattern on HERALD_MODES -> branch label
PRODUCT_RULES = {(0, 1): "+", (1, 0): "-"}
ADDITION_RULES = {(0, 1): "S", (1, 0): "I"}

TARGETS: dict[str, Callable[[RiemannPoint, RiemannPoint], FieldResult]] = {
    "+": field_mul,
    "-": lambda a, b: _neg(field_mul(a, b)),
    "S": field_add,
    "I": field_harmonic,
}


def _neg(r: FieldResult) -> FieldResult:
    return r if isinstance(r, Indeterminate) else field_neg(r)


@dataclass(frozen=True)
class BlockUnitary:
    """A 4x4 block interferometer together with its branch semantics."""

    matrix: np.ndarray
    kind: str
    phases: tuple[float, ...] = ()
    branch_rules: Mapping[tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = check_unitary(self.matrix, TOL_UNITARY)
        if m.shape != (4, 4):
            raise ValueError("block matrix must be 4x4")
        if self.kind not in (PRODUCT, ADDITION):
            raise ValueError(f"unknown block kind {self.kind!r}")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        rules = dict(self.branch_rules) or dict(
            PRODUCT_RULES if self.kind == PRODUCT else ADDITION_RULES)
        object.__setattr__(self, "branch_rules", rules)


class BranchOutcome(NamedTuple):
    branch: str
    output: FieldResult
    probability: float
    target: FieldResult


def inversion(z: PointLike) -> RiemannPoint:
    """1/z, realized by swapping the two rails."""
    return field_inv(z)


def product_unitary(phi1: float = 0.0, phi2: float = 0.0, phi3: float = 0.0,
                    phi4: float = 0.0, swapped: bool = False) -> BlockUnitary:
    """Product block; with zero phases a 50/50 mixer on the two inner modes.

    ``swapped`` gives the variant where the two qubits exchange roles.
    """
    e = lambda x: np.exp(1j * x)
    s = 1 / math.sqrt(2)
    U = np.array([
        [e(phi1 + phi2 - phi3), 0, 0, 0],
        [0, -e(phi2) * s, e(phi3) * s, 0],
        [0, e(-phi3 - phi4) * s, e(-phi2 - phi4) * s, 0],
        [0, 0, 0, e(phi1)],
    ], dtype=complex)
    if swapped:
        U = U[:, [2, 3, 0, 1]]
    return BlockUnitary(U, PRODUCT, (phi1, phi2, phi3, phi4))


def addition_unitary(phi1: float = 0.0, phi2: float = 0.0, phi5: float = 0.0,
                     phi6: float = 0.0) -> BlockUnitary:
    """Addition block: two splitters of reflectivity (5 +- sqrt 5)/10."""
    e = lambda x: np.exp(1j * x)
    a = math.sqrt(5 + math.sqrt(5))
    b = math.sqrt(5 - math.sqrt(5))
    U = np.array([
        [-a * e(phi1), 0, b * e(phi2), 0],
        [b * e(-phi2 - phi5), 0, a * e(-phi1 - phi5), 0],
        [0, -a * e(-phi2 - phi6), 0, b * e(-phi1 - phi6)],
        [0, b * e(phi1), 0, a * e(phi2)],
    ], dtype=complex) / math.sqrt(10)
    return BlockUnitary(U, ADDITION, (phi1, phi2, phi5, phi6))


def run_block(block: BlockUnitary, z1: PointLike, z2: PointLike) -> list[BranchOutcome]:
    """Simulate the block on |z1>|z2> and return one outcome per branch.

    Branches whose ideal target is indeterminate are reported with zero
    probability without running the simulation.
    """
    p1, p2 = as_point(z1), as_point(z2)
    targets = {lab: TARGETS[lab](p1, p2) for lab in block.branch_rules.values()}
    if all(isinstance(t, Indeterminate) for t in targets.values()):
        return [BranchOutcome(lab, INDETERMINATE, 0.0, targets[lab])
                for lab in block.branch_rules.values()]
    psi = dual_rail_input([(p1.alpha, p1.beta), (p2.alpha, p2.beta)], [(0, 1), (2, 3)])
    out_state = evolve(block.matrix, psi)
    results = []
    for pattern, lab in block.branch_rules.items():
        if isinstance(targets[lab], Indeterminate):
            results.append(BranchOutcome(lab, INDETERMINATE, 0.0, targets[lab]))
            continue
        req = dict(zip(HERALD_MODES, pattern))
        cond, prob = postselect(out_state, OUTPUT_MODES, req)
        if cond is None:
            results.append(BranchOutcome(lab, INDETERMINATE, 0.0, targets[lab]))
            continue
        point = RiemannPoint(cond.amplitude((1, 0)), cond.amplitude((0, 1)))
        results.append(BranchOutcome(lab, point, prob, targets[lab]))
    return results


def p_product(z1: PointLike, z2: PointLike) -> float:
    """Success probability of each product branch."""
    p, q = as_point(z1), as_point(z2)
    return float((abs(p.alpha * q.alpha) ** 2 + abs(p.beta * q.beta) ** 2) / 2)


def p_addition(z1: PointLike, z2: PointLike) -> tuple[float, float]:
    """Success probabilities (P_S, P_I) of the sum and harmonic branches."""
    p, q = as_point(z1), as_point(z2)
    s = abs(p.alpha * q.beta + q.alpha * p.beta) ** 2
    ps = (s + abs(p.beta * q.beta) ** 2) / 5
    pi = (s + abs(p.alpha * q.alpha) ** 2) / 5
    return float(ps), float(pi)


class ConditionReport(NamedTuple):
    residuals: np.ndarray
    common_value: complex
    nonzero: bool

    def passed(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.residuals < tol) and self.nonzero)


def check_product_conditions(U: np.ndarray, tol: float = 1e-12) -> ConditionReport:
    """Residuals of the seven conditions that make a 4x4 unitary a product block.

    The last entry compares the two surviving coefficients, whose common
    value must also be nonzero.
    """
    U = np.asarray(U, dtype=complex)
    u = lambda i, j: U[i - 1, j - 1]
    res = np.abs([
        u(1, 2) * u(3, 4) + u(3, 2) * u(1, 4),
        u(1, 1) * u(3, 4) + u(3, 1) * u(1, 4),
        u(4, 1) * u(3, 4) + u(4, 4) * u(3, 1),
        u(1, 3) * u(3, 2) + u(1, 2) * u(3, 3),
        u(4, 3) * u(3, 2) + u(4, 2) * u(3, 3),
        u(4, 1) * u(3, 3) + u(4, 3) * u(3, 1),
        0,
    ])
    lhs = u(4, 2) * u(3, 4) + u(4, 4) * u(3, 2)
    rhs = u(1, 1) * u(3, 3) + u(3, 1) * u(1, 3)
    res[6] = abs(lhs - rhs)
    common = (lhs + rhs) / 2
    return ConditionReport(res, complex(common), bool(abs(lhs) > tol and abs(rhs) > tol))


def check_sum_conditions(U: np.ndarray, tol: float = 1e-12) -> ConditionReport:
    """Residuals of the six conditions that make a 4x4 unitary an addition block.

    The last entry is the spread of the three coefficients that must agree
    (and be nonzero) for the output to be z1 + z2.
    """
    U = np.asarray(U, dtype=complex)
    u = lambda i, j: U[i - 1, j - 1]
    res = np.abs([
        u(1, 2) * u(3, 4) + u(3, 2) * u(1, 4),
        u(4, 1) * u(3, 4) + u(4, 4) * u(3, 1),
        u(4, 3) * u(3, 2) + u(4, 2) * u(3, 3),
        u(1, 1) * u(3, 3) + u(3, 1) * u(1, 3),
        u(4, 1) * u(3, 3) + u(4, 3) * u(3, 1),
        0,
    ])
    c = np.array([
        u(4, 2) * u(3, 4) + u(4, 4) * u(3, 2),
        u(1, 1) * u(3, 4) + u(3, 1) * u(1, 4),
        u(1, 3) * u(3, 2) + u(1, 2) * u(3, 3),
    ])
    res[5] = max(abs(c[0] - c[1]), abs(c[1] - c[2]), abs(c[0] - c[2]))
    return ConditionReport(res, complex(c.mean()), bool(np.all(np.abs(c) > tol)))


def block_to_json(block: BlockUnitary) -> dict:
    return {
        "kind": block.kind,
        "phases": list(block.phases),
        "matrix": [[[float(x.real), float(x.imag)] for x in row] for row in block.matrix],
        "branch_rules": [{"pattern": list(k), "branch": v} for k, v in block.branch_rules.items()],
    }


def block_from_json(obj: dict) -> BlockUnitary:
    m = np.array([[complex(re, im) for re, im in row] for row in obj["matrix"]])
    rules = {tuple(r["pattern"]): r["branch"] for r in obj.get("branch_rules", [])}
    return BlockUnitary(m, obj["kind"], tuple(obj.get("phases", ())), rules)


def outcome_to_json(o: BranchOutcome) -> dict:
    fid = None
    if isinstance(o.output, RiemannPoint) and isinstance(o.target, RiemannPoint):
        fid = fidelity_pure(o.output, o.target)
    return {
        "branch": o.branch,
        "output": result_to_json(o.output),
        "target": result_to_json(o.target),
        "probability": o.probability,
        "fidelity": fid,
    }
