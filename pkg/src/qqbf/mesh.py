"""Six-mode rectangular Mach-Zehnder meshes.

Nodes BS1..BS15 sit in six layers. Even layers hold nodes on modes (0,1),
(2,3), (4,5) and odd layers on (1,2), (3,4). Each node applies
``mzi_matrix(theta, phi)``, whose phase sits on the upper output arm.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .fock import TOL_UNITARY, check_unitary
from .qubit import PointLike, as_point, to_bloch

MODES = 6
LAYOUT: tuple[tuple[int, int], ...] = tuple(
    (layer, top)
    for layer in range(MODES)
    for top in ((0, 2, 4) if layer % 2 == 0 else (1, 3))
)
TWO_PI = 2 * math.pi


def mzi_matrix(theta: float, phi: float) -> np.ndarray:
    """Programmable beam splitter with reflectivity sin^2(theta/2).

    theta = pi is the bar state and theta = 0 the cross state.
    """
    s, c = math.sin(theta / 2), math.cos(theta / 2)
    e = cmath.exp(1j * phi)
    return 1j * cmath.exp(1j * theta / 2) * np.array([[s * e, c * e], [c, -s]])


def projector_matrix(theta: float, phi: float) -> np.ndarray:
    """Beam splitter with the phase on the upper input arm.

    A click on output 0 projects the incoming qubit onto from_bloch(theta, -phi).
    """
    s, c = math.sin(theta / 2), math.cos(theta / 2)
    e = cmath.exp(1j * phi)
    return 1j * cmath.exp(1j * theta / 2) * np.array([[s * e, c], [c * e, -s]])


def reflectivity(theta: float) -> float:
    return math.sin(theta / 2) ** 2


def theta_for(R: float) -> float:
    """Inverse of :func:`reflectivity` on [0, pi]."""
    if not 0.0 <= R <= 1.0:
        raise ValueError("reflectivity must lie in [0, 1]")
    return 2 * math.asin(math.sqrt(R))


@dataclass(frozen=True)
class MZISetting:
    theta: float
    phi: float
    layer: int
    top_mode: int

    @property
    def reflectivity(self) -> float:
        return reflectivity(self.theta)


@dataclass(frozen=True)
class MeshProgram:
    """Fifteen node settings in layout order plus optional phase layers.

    ``input_phases`` act before the first layer and ``output_phases`` after
    the last one.
    """

    nodes: tuple[MZISetting, ...]
    output_phases: tuple[float, ...] | None = None
    input_phases: tuple[float, ...] | None = None
    modes: int = field(default=MODES)

    def __post_init__(self) -> None:
        if self.modes != MODES:
            raise ValueError("only 6-mode meshes are supported")
        nodes = tuple(self.nodes)
        if tuple((n.layer, n.top_mode) for n in nodes) != LAYOUT:
            raise ValueError("node positions do not follow the rectangular layout")
        object.__setattr__(self, "nodes", nodes)
        for name in ("output_phases", "input_phases"):
            val = getattr(self, name)
            if val is not None:
                val = tuple(float(x) for x in val)
                if len(val) != MODES:
                    raise ValueError(f"{name} needs {MODES} entries")
                object.__setattr__(self, name, val)

    @classmethod
    def from_settings(cls, settings, output_phases=None, input_phases=None) -> "MeshProgram":
        """Build from 15 (theta, phi) pairs in layout order."""
        settings = list(settings)
        if len(settings) != len(LAYOUT):
            raise ValueError(f"expected {len(LAYOUT)} settings, got {len(settings)}")
        nodes = tuple(MZISetting(float(t), float(p), l, m)
                      for (t, p), (l, m) in zip(settings, LAYOUT))
        return cls(nodes, output_phases, input_phases)

    def settings(self) -> list[tuple[float, float]]:
        return [(n.theta, n.phi) for n in self.nodes]


def embed(block: np.ndarray, top: int, modes: int = MODES) -> np.ndarray:
    U = np.eye(modes, dtype=complex)
    U[top:top + 2, top:top + 2] = block
    return U


def compose(program: MeshProgram) -> np.ndarray:
    """Mode unitary of the program, applying nodes in layout order."""
    U = np.eye(MODES, dtype=complex)
    if program.input_phases is not None:
        U = np.diag(np.exp(1j * np.asarray(program.input_phases)))
    for n in program.nodes:
        t = n.top_mode
        U[t:t + 2, :] = mzi_matrix(n.theta, n.phi) @ U[t:t + 2, :]
    if program.output_phases is not None:
        U = np.exp(1j * np.asarray(program.output_phases))[:, None] * U
    return U


def _null_right(U, row, col, right):
    # U <- U G on columns (col, col+1) so that U[row, col] = 0
    x, y = U[row, col], U[row, col + 1]
    n = math.hypot(abs(x), abs(y))
    G = np.eye(2, dtype=complex) if n == 0 else np.array([[y, x.conjugate()], [-x, y.conjugate()]]) / n
    U[:, col:col + 2] = U[:, col:col + 2] @ G
    right.append((col, G.conj().T))


def _null_left(U, row, col, left):
    # U <- G U on rows (row-1, row) so that U[row, col] = 0
    x, y = U[row - 1, col], U[row, col]
    n = math.hypot(abs(x), abs(y))
    G = np.eye(2, dtype=complex) if n == 0 else np.array([[x.conjugate(), y.conjugate()], [-y, x]]) / n
    U[row - 1:row + 1, :] = G @ U[row - 1:row + 1, :]
    left.append((row - 1, G.conj().T))


def _factor_node(W: np.ndarray, eps: float = 1e-13):
    # W = mzi_matrix(theta, phi) @ diag(e^{ia}, e^{ib})
    s, c = abs(W[0, 0]), abs(W[1, 0])
    theta = 2 * math.atan2(s, c)
    g = 1j * cmath.exp(1j * theta / 2)
    a = cmath.phase(W[1, 0] / g) if c > eps else 0.0
    if s > eps:
        b = cmath.phase(-W[1, 1] / g)
        phi = cmath.phase(W[0, 0] / g) - a
    else:
        b = 0.0
        phi = cmath.phase(W[0, 1] / g)
    return theta, phi % TWO_PI, a, b


def decompose(U: np.ndarray, tol: float = TOL_UNITARY) -> MeshProgram:
    """Rectangular-mesh program realizing ``U`` exactly.

    Elements are nulled alternately from the right and the left, the
    leftover diagonal is moved to the output, and each 2x2 block is written
    as a node followed by phases that are pushed towards the input.
    """
    U = check_unitary(U, tol).copy()
    if U.shape != (MODES, MODES):
        raise ValueError("decompose expects a 6x6 unitary")
    N = MODES
    left, right = [], []
    for i in range(N - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                _null_right(U, N - 1 - j, i - j, right)
        else:
            for j in range(1, i + 2):
                _null_left(U, N + j - i - 2, j - 1, left)
    d = np.diag(U).copy()
    # U_orig = left^dag-product . D . right^dag-product; move D to the output.
    seq = [(m, G) for m, G in right]
    for m, G in reversed(left):
        dd = d[m:m + 2]
        seq.append((m, (dd.conj()[:, None] * G) * dd[None, :]))
    # seq is in time order; schedule into layers
    busy = [-1] * N
    slots: dict[tuple[int, int], np.ndarray] = {}
    for m, G in seq:
        layer = max(busy[m], busy[m + 1]) + 1
        if layer % 2 != m % 2:
            layer += 1
        slots[(layer, m)] = G
        busy[m] = busy[m + 1] = layer
    if set(slots) != set(LAYOUT):
        raise RuntimeError("elimination did not produce the rectangular layout")
    pending = np.ones(N, dtype=complex)
    settings: list[tuple[float, float]] = [(0.0, 0.0)] * len(LAYOUT)
    for k in range(len(LAYOUT) - 1, -1, -1):
        layer, m = LAYOUT[k]
        W = pending[m:m + 2, None] * slots[(layer, m)]
        theta, phi, a, b = _factor_node(W)
        settings[k] = (theta, phi)
        pending[m:m + 2] = cmath.exp(1j * a), cmath.exp(1j * b)
    out = np.angle(d) % TWO_PI
    inp = np.angle(pending) % TWO_PI
    return MeshProgram.from_settings(settings, tuple(out), tuple(inp))


def round_trip_residual(U: np.ndarray, program: MeshProgram) -> float:
    """Frobenius distance between ``U`` and the composed program."""
    return float(np.linalg.norm(compose(program) - U))


def prepare_settings(z: PointLike) -> tuple[float, float]:
    """(theta, phi) such that a photon in the upper input arm leaves in |z>."""
    return to_bloch(as_point(z))


def program_to_json(p: MeshProgram) -> dict:
    obj = {
        "modes": p.modes,
        "nodes": [{"layer": n.layer, "top_mode": n.top_mode, "theta": n.theta, "phi": n.phi}
                  for n in p.nodes],
        "output_phases": None if p.output_phases is None else list(p.output_phases),
    }
    if p.input_phases is not None:
        obj["input_phases"] = list(p.input_phases)
    return obj


def program_from_json(obj: dict) -> MeshProgram:
    allowed = {"modes", "nodes", "output_phases", "input_phases"}
    extra = set(obj) - allowed
    if extra:
        raise ValueError(f"unknown program fields {sorted(extra)}")
    nodes = tuple(MZISetting(float(n["theta"]), float(n["phi"]), int(n["layer"]), int(n["top_mode"]))
                  for n in obj["nodes"])
    return MeshProgram(nodes, obj.get("output_phases"), obj.get("input_phases"),
                       int(obj.get("modes", MODES)))


# ---------------------------------------------------------------------------
# Presets
#
# Each preset fixes all 15 nodes. The preparation layer (BS1-3) and the
# projector (BS15) are left in the bar state, so qubits enter directly on
# the mode pairs listed in ``input_pairs`` and leave on modes (3, 4) with the
# |0> rail on mode 3. Only the evolution nodes BS4..BS14 and the output phase
# on mode 3 differ between presets.

R_ADD = (5 + math.sqrt(5)) / 10
_DELTA = math.atan(0.5)  # half the theta gap between reflectivities R_ADD and 1 - R_ADD


def _bar(phi=0.0):
    return (math.pi, phi)


def _cross(phi=0.0):
    return (0.0, phi)


def _split(R, phi=0.0):
    return (theta_for(R), phi)


def _neg(r):
    from .qubit import Indeterminate, field_neg

    return r if isinstance(r, Indeterminate) else field_neg(r)


def _op(label):
    from .qubit import Indeterminate, field_add, field_harmonic, field_mul

    def lift(f):
        def g(a, b):
            if isinstance(a, Indeterminate) or isinstance(b, Indeterminate):
                return a if isinstance(a, Indeterminate) else b
            return f(a, b)
        return g

    table = {
        "+": field_mul,
        "-": lambda a, b: _neg(field_mul(a, b)),
        "S": field_add,
        "I": field_harmonic,
    }
    return lift(table[label])


@dataclass(frozen=True)
class Preset:
    """A documented evolution-stage configuration of the mesh.

    Attributes:
        name: preset name.
        program: 15-node program with the output phase layer.
        input_pairs: (|0> mode, |1> mode) for each input qubit.
        branches: herald modes (each holding one photon) -> branch labels,
            one label per elementary block in the order they act.
        main: herald pattern of the reference branch.
    """

    name: str
    program: MeshProgram
    input_pairs: tuple[tuple[int, int], ...]
    branches: dict
    main: tuple[int, ...]
    output_modes: tuple[int, int] = (3, 4)

    @property
    def n_inputs(self) -> int:
        return len(self.input_pairs)

    def unitary(self) -> np.ndarray:
        return compose(self.program)

    def expected(self, labels: tuple[str, ...], zs):
        """Ideal output of a branch for inputs ``zs`` (points or numbers)."""
        from .qubit import field_inv

        zs = [as_point(z) for z in zs]
        if self.name == "Inversion":
            return field_inv(zs[0])
        out = _op(labels[0])(zs[0], zs[1])
        if len(labels) > 1:
            out = _op(labels[1])(out, zs[2])
        return out


def _preset(name, evolution, out_phase, pairs, branches, main):
    settings = [_bar()] * 3 + list(evolution) + [_bar()]
    phases = (0.0, 0.0, 0.0, out_phase % TWO_PI, 0.0, 0.0)
    return Preset(name, MeshProgram.from_settings(settings, phases), tuple(pairs), branches, main)


_PAIRS3 = ((0, 1), (2, 3), (4, 5))

PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        _preset("Inversion",
                [_bar(), _cross(), _bar(), _cross(), _bar(), _bar(), _cross(),
                 _bar(), _bar(), _bar(), _bar()],
                0.0, [(2, 3)], {(): ()}, ()),
        _preset("Product",
                [_bar(), _split(0.5), _bar(), _cross(), _cross(), _bar(), _bar(),
                 _bar(), _bar(), _bar(), _bar()],
                math.pi, [(2, 3), (4, 5)], {(2,): ("+",), (5,): ("-",)}, (2,)),
        _preset("Addition",
                [_bar(), _cross(math.pi), _bar(), _split(R_ADD), _split(R_ADD), _bar(),
                 _bar(), _bar(), _bar(), _bar(), _bar()],
                math.pi / 2, [(2, 3), (4, 5)], {(5,): ("S",), (2,): ("I",)}, (5,)),
        _preset("ProductThenAddition",
                [_split(0.5), _cross(), _cross(), _cross(), _split(R_ADD), _split(R_ADD),
                 _bar(), _bar(), _cross(), _bar(), _bar()],
                3 * math.pi / 2, _PAIRS3,
                {(0, 5): ("+", "S"), (2, 5): ("-", "S"), (0, 1): ("+", "I"), (1, 2): ("-", "I")},
                (0, 5)),
        _preset("AdditionThenProduct",
                [_cross(), _bar(math.pi), _split(R_ADD), _split(1 - R_ADD), _bar(), _cross(),
                 _split(0.5), _bar(), _cross(), _cross(), _bar()],
                -_DELTA, _PAIRS3,
                {(1, 2): ("S", "+"), (1, 5): ("S", "-"), (0, 2): ("I", "+"), (0, 5): ("I", "-")},
                (1, 2)),
        _preset("ProductProduct",
                [_split(0.5), _split(0.5), _cross(), _bar(), _cross(), _cross(), _bar(),
                 _bar(), _cross(), _bar(), _bar()],
                0.0, _PAIRS3,
                {(0, 2): ("+", "+"), (0, 5): ("+", "-"), (1, 2): ("-", "+"), (1, 5): ("-", "-")},
                (0, 2)),
        _preset("AdditionAddition",
                [_cross(), _bar(math.pi), _split(R_ADD), _split(1 - R_ADD), _bar(), _cross(),
                 _cross(_DELTA), _bar(), _split(R_ADD), _split(R_ADD), _bar()],
                math.pi / 2 - _DELTA, _PAIRS3,
                {(1, 5): ("S", "S"), (1, 2): ("S", "I"), (0, 5): ("I", "S"), (0, 2): ("I", "I")},
                (1, 5)),
    )
}


def preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


class PresetOutcome(NamedTuple):
    herald: tuple[int, ...]
    labels: tuple[str, ...]
    output: object
    probability: float
    target: object


def run_preset(p: Preset, zs) -> list[PresetOutcome]:
    """Pure-state simulation of a preset on the input qubits ``zs``."""
    from .fock import dual_rail_input, evolve, postselect
    from .qubit import INDETERMINATE, Indeterminate, RiemannPoint

    pts = [as_point(z) for z in zs]
    if len(pts) != p.n_inputs:
        raise ValueError(f"{p.name} takes {p.n_inputs} inputs")
    psi = dual_rail_input([(q.alpha, q.beta) for q in pts], p.input_pairs, MODES)
    out = evolve(p.unitary(), psi)
    o0, o1 = p.output_modes
    others = [m for m in range(MODES) if m not in p.output_modes]
    results = []
    for herald, labels in p.branches.items():
        target = p.expected(labels, pts)
        req = {m: int(m in herald) for m in others}
        cond, prob = postselect(out, p.output_modes, req)
        if cond is None or isinstance(target, Indeterminate):
            results.append(PresetOutcome(herald, labels, INDETERMINATE, prob, target))
            continue
        point = RiemannPoint(cond.amplitude((1, 0)), cond.amplitude((0, 1)))
        results.append(PresetOutcome(herald, labels, point, prob, target))
    return results
