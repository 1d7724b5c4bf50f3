"""Dual-rail qubits parametrized by a point z on the Riemann sphere.

The state |z> is proportional to z|0> + |1>, with z = inf meaning |0>.
Points are stored as a normalized projective pair (alpha, beta) with
z = alpha / beta.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ZERO_TOL = 1e-14


@dataclass(frozen=True)
class RiemannPoint:
    """Pure qubit state alpha|0> + beta|1> in canonical form.

    The pair is unit norm and beta is real and non-negative; when beta is
    zero, alpha is 1.
    """

    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        a, b = complex(self.alpha), complex(self.beta)
        n = math.hypot(abs(a), abs(b))
        if n == 0 or not math.isfinite(n):
            raise ValueError("projective pair must be finite and not (0, 0)")
        a, b = a / n, b / n
        if abs(b) <= ZERO_TOL:
            a, b = 1 + 0j, 0j
        else:
            ph = b / abs(b)
            a, b = a / ph, complex(abs(b))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_complex(cls, z: complex | float) -> "RiemannPoint":
        z = complex(z)
        if cmath.isinf(z):
            return cls(1, 0)
        if cmath.isnan(z):
            raise ValueError("z is NaN")
        return cls(z, 1)

    @property
    def is_infinite(self) -> bool:
        return self.beta == 0

    @property
    def z(self) -> complex:
        """Stereographic coordinate; complex infinity is returned as inf."""
        if self.is_infinite:
            return complex(math.inf, 0)
        return self.alpha / self.beta

    def vector(self) -> np.ndarray:
        """State vector in the {|0>, |1>} basis."""
        return np.array([self.alpha, self.beta], dtype=complex)

    def isclose(self, other: "RiemannPoint", tol: float = 1e-10) -> bool:
        return 1.0 - fidelity_pure(self, other) <= tol

    def __repr__(self) -> str:
        return "RiemannPoint(inf)" if self.is_infinite else f"RiemannPoint({self.z:.6g})"


class Indeterminate:
    """Result of an undefined operation such as 0 * inf."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INDETERMINATE"

    def __reduce__(self):
        return (Indeterminate, ())


INDETERMINATE = Indeterminate()
FieldResult = Union[RiemannPoint, Indeterminate]
PointLike = Union[RiemannPoint, complex, float, int, str]


def as_point(z: PointLike) -> RiemannPoint:
    """Coerce a number, "inf" or an existing point to a RiemannPoint."""
    if isinstance(z, RiemannPoint):
        return z
    if isinstance(z, str):
        return parse_point(z)
    return RiemannPoint.from_complex(z)


def parse_point(text: str) -> RiemannPoint:
    """Parse literals such as "1", "-0.5+2i", "1j" or "inf"."""
    t = text.strip().lower().replace(" ", "")
    if t in ("inf", "+inf", "infinity", "oo"):
        return RiemannPoint(1, 0)
    try:
        return RiemannPoint.from_complex(complex(t.replace("i", "j")))
    except ValueError:
        raise ValueError(f"cannot parse complex literal {text!r}") from None


def _result(a: complex, b: complex) -> FieldResult:
    scale = max(abs(a), abs(b))
    if scale <= ZERO_TOL:
        return INDETERMINATE
    return RiemannPoint(a, b)


def field_mul(z1: PointLike, z2: PointLike) -> FieldResult:
    p, q = as_point(z1), as_point(z2)
    return _result(p.alpha * q.alpha, p.beta * q.beta)


def field_add(z1: PointLike, z2: PointLike) -> FieldResult:
    p, q = as_point(z1), as_point(z2)
    return _result(p.alpha * q.beta + q.alpha * p.beta, p.beta * q.beta)


def field_neg(z: PointLike) -> RiemannPoint:
    p = as_point(z)
    return RiemannPoint(-p.alpha, p.beta)


def field_inv(z: PointLike) -> FieldResult:
    p = as_point(z)
    return RiemannPoint(p.beta, p.alpha)


def field_harmonic(z1: PointLike, z2: PointLike) -> FieldResult:
    """-z1 z2 / (z1 + z2), the output of the addition block's second branch."""
    p, q = as_point(z1), as_point(z2)
    return _result(-p.alpha * q.alpha, p.alpha * q.beta + q.alpha * p.beta)


def from_bloch(theta: float, phi: float) -> RiemannPoint:
    """Point with z = tan(theta/2) e^{i phi}."""
    return RiemannPoint(math.sin(theta / 2) * cmath.exp(1j * phi), math.cos(theta / 2))


def to_bloch(z: PointLike) -> tuple[float, float]:
    """Inverse of :func:`from_bloch`, with phi in [0, 2 pi)."""
    p = as_point(z)
    theta = 2 * math.atan2(abs(p.alpha), abs(p.beta))
    phi = cmath.phase(p.alpha) % (2 * math.pi) if abs(p.alpha) > 0 else 0.0
    return theta, phi


def sample_haar(rng: np.random.Generator) -> RiemannPoint:
    """Uniform point on the Bloch sphere.

    h is drawn on (-1, 1] and phi on [0, 2 pi); |z|^2 = (1 - h)/(1 + h).
    """
    h = -rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * math.pi)
    return RiemannPoint(math.sqrt((1 - h) / 2) * cmath.exp(1j * phi), math.sqrt((1 + h) / 2))


def fidelity_pure(a: PointLike, b: PointLike) -> float:
    p, q = as_point(a), as_point(b)
    return float(min(1.0, abs(p.alpha * q.alpha.conjugate() + p.beta * q.beta.conjugate()) ** 2))


def validate_density(rho: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Check that ``rho`` is a 2x2 Hermitian, unit-trace, PSD matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"qubit density must be 2x2, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real}")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def density(z: PointLike) -> np.ndarray:
    v = as_point(z).vector()
    return np.outer(v, v.conj())


def fidelity_mixed(rho: np.ndarray, target: PointLike) -> float:
    """<target|rho|target>."""
    rho = validate_density(rho)
    v = as_point(target).vector()
    return float(np.clip((v.conj() @ rho @ v).real, 0.0, 1.0))


def point_to_json(z: PointLike) -> dict | str:
    p = as_point(z)
    if p.is_infinite:
        return "inf"
    w = p.z
    return {"re": float(w.real), "im": float(w.imag)}


def point_from_json(obj) -> RiemannPoint:
    if isinstance(obj, str):
        if obj.strip().lower() != "inf":
            raise ValueError(f"unexpected point literal {obj!r}")
        return RiemannPoint(1, 0)
    if isinstance(obj, dict) and set(obj) == {"re", "im"}:
        return RiemannPoint.from_complex(complex(obj["re"], obj["im"]))
    if isinstance(obj, (int, float)):
        return RiemannPoint.from_complex(obj)
    raise ValueError(f"cannot decode point from {obj!r}")


def result_to_json(r: FieldResult):
    return "indeterminate" if isinstance(r, Indeterminate) else point_to_json(r)
