"""Monte-Carlo detection counts, fidelity estimators and ensemble studies.

Count model: ``shots`` input events are spread over ``shots / brightness``
source pulses at repetition rate ``rep_rate``. Each detector also clicks on
uncorrelated background with probability ``accidental_rate`` per pulse.
Accidental coincidences between an output detector x and the herald y are
Poisson with mean N_x N_y / pulses, the same law the estimator subtracts.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .blocks import p_addition, p_product
from .mesh import preset as get_preset
from .noise import OverlapSpec, simulate_partial
from .qubit import (
    Indeterminate,
    PointLike,
    RiemannPoint,
    as_point,
    density,
    field_inv,
    fidelity_mixed,
    point_to_json,
    sample_haar,
)

REP_RATE = 7.6e7
BRIGHTNESS = 1e-4


@dataclass(frozen=True)
class CountRecord:
    """Coincidences and singles for one post-selected configuration.

    Attributes:
        c0: coincidences between the herald and the detector matching the target.
        c1: coincidences between the herald and the orthogonal detector.
        singles0, singles1, singles_y: singles of the two output detectors
            and of the herald detector.
        rep_rate: source repetition rate in Hz.
        exposure: exposure time in s.
        branch: post-selection channel label.
    """

    c0: int
    c1: int
    singles0: int
    singles1: int
    singles_y: int
    rep_rate: float = REP_RATE
    exposure: float = 1.0
    branch: str = "+"

    def __post_init__(self) -> None:
        if min(self.c0, self.c1, self.singles0, self.singles1, self.singles_y) < 0:
            raise ValueError("counts must be non-negative")
        if self.rep_rate <= 0 or self.exposure <= 0:
            raise ValueError("rep_rate and exposure must be positive")


class FidelityEstimate(NamedTuple):
    value: float
    sigma: float
    clamped: bool = False


def sample_counts(probability: float, rho: np.ndarray, target: PointLike, shots: int,
                  accidental_rate: float, rng: np.random.Generator, *,
                  brightness: float = BRIGHTNESS, rep_rate: float = REP_RATE,
                  branch: str = "+") -> CountRecord:
    """Draw coincidences and singles for a branch with output state ``rho``.

    The output qubit is projected on ``target``; detector 0 clicks with
    probability <target|rho|target>.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= probability <= 1:
        raise ValueError("probability must lie in [0, 1]")
    if accidental_rate < 0 or not 0 < brightness <= 1:
        raise ValueError("invalid accidental rate or brightness")
    F = fidelity_mixed(rho, target)
    p0, p1 = probability * F, probability * (1 - F)
    c0, c1, _ = rng.multinomial(shots, [p0, p1, max(0.0, 1 - p0 - p1)])
    pulses = shots / brightness
    bg = rng.poisson(pulses * accidental_rate, size=3)
    n0, n1 = c0 + bg[0], c1 + bg[1]
    ny = c0 + c1 + bg[2]
    mean_y = shots * probability + pulses * accidental_rate
    acc0 = rng.poisson((shots * p0 + pulses * accidental_rate) * mean_y / pulses)
    acc1 = rng.poisson((shots * p1 + pulses * accidental_rate) * mean_y / pulses)
    return CountRecord(int(c0 + acc0), int(c1 + acc1), int(n0 + acc0), int(n1 + acc1),
                       int(ny + acc0 + acc1), rep_rate, pulses / rep_rate, branch)


def fidelity_measured(rec: CountRecord) -> FidelityEstimate:
    """F_M = C0 / (C0 + C1) with first-order Poisson error."""
    tot = rec.c0 + rec.c1
    if tot == 0:
        raise ValueError("no coincidences recorded")
    sigma = math.sqrt(rec.c0 * rec.c1 / tot ** 3)
    return FidelityEstimate(rec.c0 / tot, sigma)


def accidental_estimate(n_x: float, n_y: float, rep_rate: float, exposure: float) -> float:
    """Expected accidental coincidences N_x N_y / (f T)."""
    if rep_rate <= 0 or exposure <= 0:
        raise ValueError("rep_rate and exposure must be positive")
    return n_x * n_y / (rep_rate * exposure)


def _corrected(c0, c1, n0, n1, ny, f, t):
    a0 = accidental_estimate(n0, ny, f, t)
    a1 = accidental_estimate(n1, ny, f, t)
    A, B = c0 - a0, c1 - a1
    clamped = A < 0 or B < 0
    return max(A, 0.0), max(B, 0.0), a0, a1, clamped


def fidelity_corrected(rec: CountRecord) -> FidelityEstimate:
    """F_C after subtracting the accidental estimate from both coincidences.

    Negative corrected counts are clamped to zero and flagged. The error
    propagates Poisson noise of the coincidences and of the singles.
    """
    A, B, a0, a1, clamped = _corrected(rec.c0, rec.c1, rec.singles0, rec.singles1,
                                       rec.singles_y, rec.rep_rate, rec.exposure)
    if A + B <= 0:
        raise ValueError("corrected coincidences are not positive")

    def var_acc(a, nx):
        if a == 0:
            return 0.0
        return a * a * ((1 / nx if nx else 0.0) + (1 / rec.singles_y if rec.singles_y else 0.0))

    var_a = rec.c0 + var_acc(a0, rec.singles0)
    var_b = rec.c1 + var_acc(a1, rec.singles1)
    sigma = math.sqrt(B * B * var_a + A * A * var_b) / (A + B) ** 2
    return FidelityEstimate(A / (A + B), sigma, clamped)


def fidelity_bootstrap(rec: CountRecord, rng: np.random.Generator, n_resamples: int = 1000,
                       corrected: bool = True) -> FidelityEstimate:
    """Parametric bootstrap: resample every count as Poisson around its value."""
    c0 = rng.poisson(rec.c0, n_resamples)
    c1 = rng.poisson(rec.c1, n_resamples)
    vals = []
    if corrected:
        n0 = rng.poisson(rec.singles0, n_resamples)
        n1 = rng.poisson(rec.singles1, n_resamples)
        ny = rng.poisson(rec.singles_y, n_resamples)
        for k in range(n_resamples):
            A, B, *_ = _corrected(c0[k], c1[k], n0[k], n1[k], ny[k], rec.rep_rate, rec.exposure)
            if A + B > 0:
                vals.append(A / (A + B))
        centre = fidelity_corrected(rec)
    else:
        tot = c0 + c1
        vals = list(c0[tot > 0] / tot[tot > 0])
        centre = fidelity_measured(rec)
    return FidelityEstimate(centre.value, float(np.std(vals, ddof=1)), centre.clamped)


# ---------------------------------------------------------------------------
# ensembles

BLOCK_OPS = ("inversion", "product", "anti-product", "addition", "harmonic")

_BLOCK_SETUP = {
    "product": ("+", (2,)),
    "anti-product": ("-", (1,)),
    "addition": ("S", (2,)),
    "harmonic": ("I", (1,)),
}


def _block_branch(op: str, zs, spec: OverlapSpec):
    from .blocks import addition_unitary, product_unitary
    from .qubit import field_add, field_harmonic, field_mul, field_neg

    label, herald = _BLOCK_SETUP[op]
    U = product_unitary().matrix if op in ("product", "anti-product") else addition_unitary().matrix
    target = {"+": lambda: field_mul(*zs),
              "-": lambda: field_mul(*zs),
              "S": lambda: field_add(*zs),
              "I": lambda: field_harmonic(*zs)}[label]()
    if label == "-" and not isinstance(target, Indeterminate):
        target = field_neg(target)
    res = simulate_partial(U, zs, [(0, 1), (2, 3)], spec, {herald: label}, (0, 3))[0]
    return label, res.rho, res.probability, target


def theory_probability(op: str, zs) -> float:
    if op == "inversion":
        return 1.0
    if op in ("product", "anti-product"):
        return p_product(*zs)
    ps, pi = p_addition(*zs)
    return ps if op == "addition" else pi


def run_operation(op: str, zs: Sequence[PointLike], spec: OverlapSpec | None = None):
    """(branch label, rho, probability, target) for a block op or preset name."""
    zs = [as_point(z) for z in zs]
    if op == "inversion":
        t = field_inv(zs[0])
        return "", density(t), 1.0, t
    if op in _BLOCK_SETUP:
        return _block_branch(op, zs, spec or OverlapSpec.ideal(2))
    p = get_preset(op)
    spec = spec or OverlapSpec.ideal(p.n_inputs)
    labels = p.branches[p.main]
    target = p.expected(labels, zs)
    res = simulate_partial(p.unitary(), zs, p.input_pairs, spec, {p.main: labels},
                           p.output_modes)[0]
    return "".join(labels), res.rho, res.probability, target


def n_inputs(op: str) -> int:
    if op == "inversion":
        return 1
    if op in _BLOCK_SETUP:
        return 2
    return get_preset(op).n_inputs


@dataclass
class EnsembleReport:
    config: dict
    samples: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"config": self.config, "samples": self.samples, "aggregates": self.aggregates}

    def dumps(self) -> str:
        return dumps(self.to_json())


def _histogram(values, bins, upper):
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper))
    mass = counts / max(1, counts.sum())
    return {"edges": edges.tolist(), "mass": mass.tolist()}


def characterize(op: str, n_samples: int = 1000, shots: int | None = None,
                 spec: OverlapSpec | None = None, seed: int = 0,
                 accidental_rate: float = 0.0, bins: int = 20) -> EnsembleReport:
    """Haar-sample inputs and estimate the output fidelity of one branch.

    Args:
        op: a block operation from ``BLOCK_OPS`` or a preset name.
        n_samples: number of input tuples.
        shots: input events per sample; None feeds exact probabilities to
            the estimator.
        spec: photon overlaps; ideal when omitted.
        seed: master seed; each sample gets its own child stream.
        accidental_rate: background clicks per pulse and detector.
        bins: histogram bins for the success probability.
    """
    k = n_inputs(op)
    children = np.random.SeedSequence(seed).spawn(n_samples)
    samples = []
    fids, probs, theory = [], [], []
    for child in children:
        rng = np.random.default_rng(child)
        zs = [sample_haar(rng) for _ in range(k)]
        label, rho, prob, target = run_operation(op, zs, spec)
        entry: dict[str, Any] = {"inputs": [point_to_json(z) for z in zs], "branch": label}
        if rho is None or isinstance(target, Indeterminate):
            entry.update(probability=prob, fidelity=None, sigma=None)
            samples.append(entry)
            continue
        if shots is None:
            F, sigma, rate = fidelity_mixed(rho, target), 0.0, prob
        else:
            rec = sample_counts(prob, rho, target, shots, accidental_rate, rng, branch=label)
            est = fidelity_corrected(rec) if accidental_rate > 0 else fidelity_measured(rec)
            F, sigma = est.value, est.sigma
            rate = (rec.c0 + rec.c1) / shots
        entry.update(probability=prob, success_rate=rate, fidelity=F, sigma=sigma)
        if op in BLOCK_OPS:
            entry["theory_probability"] = theory_probability(op, zs)
            theory.append(entry["theory_probability"])
        samples.append(entry)
        fids.append(F)
        probs.append(rate)
    fids = np.array(fids)
    upper = 0.2 if op in ("addition", "harmonic") else (1.0 if op == "inversion" else 0.5)
    upper = max(upper, max(probs, default=0.0))
    agg = {
        "n_samples": n_samples,
        "n_valid": int(fids.size),
        "mean_fidelity": float(fids.mean()) if fids.size else None,
        "fidelity_std_error": float(fids.std(ddof=1) / math.sqrt(fids.size)) if fids.size > 1 else 0.0,
        "probability_histogram": _histogram(probs, bins, upper),
    }
    if theory:
        agg["theory_histogram"] = _histogram(theory, bins, upper)
    config = {"op": op, "n_samples": n_samples, "shots": shots, "seed": seed,
              "accidental_rate": accidental_rate,
              "overlap": None if spec is None else spec.to_json()}
    return EnsembleReport(config, samples, agg)


# ---------------------------------------------------------------------------
# critical-point sweeps

def sweep_critical(op: str, points: int = 101, half_width: float = 2.0) -> list[tuple[float, float, float]]:
    """Success probability on a real grid around the critical point.

    The product is swept over (x, y) = (z1, 1/z2) and the addition (sum
    branch) over (1/z1, 1/z2); the critical point is the grid centre.
    """
    if points < 3 or points % 2 == 0:
        raise ValueError("points must be an odd integer >= 3")
    m = points // 2
    grid = half_width * np.arange(-m, m + 1) / m
    rows = []
    for x in grid:
        for y in grid:
            if op == "product":
                p = p_product(RiemannPoint(x, 1), RiemannPoint(1, y))
            elif op == "addition":
                p = p_addition(RiemannPoint(1, x), RiemannPoint(1, y))[0]
            else:
                raise ValueError("op must be 'product' or 'addition'")
            rows.append((float(x), float(y), float(p)))
    return rows


def sweep_to_csv(rows) -> str:
    lines = ["x,y,probability"]
    lines += [f"{x:.17g},{y:.17g},{p:.17g}" for x, y, p in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON with 17 significant digits

_TOKEN = re.compile(r'"@@f(\d+)@@"')


def dumps(obj, indent: int | None = 2) -> str:
    """json.dumps with every float written to 17 significant digits."""
    floats: list[float] = []

    def walk(o):
        if isinstance(o, (bool, np.bool_)):
            return bool(o)
        if isinstance(o, (float, np.floating)):
            floats.append(float(o) + 0.0)  # drop the sign of -0.0
            return f"@@f{len(floats) - 1}@@"
        if isinstance(o, (int, np.integer)):
            return int(o)
        if isinstance(o, dict):
            return {str(k): walk(v) for k, v in o.items()}
        if isinstance(o, (list, tuple, np.ndarray)):
            return [walk(v) for v in o]
        return o

    text = json.dumps(walk(obj), indent=indent)

    def repl(m):
        x = floats[int(m.group(1))]
        return "null" if not math.isfinite(x) else format(x, ".17g")

    return _TOKEN.sub(repl, text)
