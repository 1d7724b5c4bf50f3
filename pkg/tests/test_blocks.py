import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qqbf.blocks import (
    R_ADD,
    BlockUnitary,
    addition_unitary,
    block_from_json,
    block_to_json,
    check_product_conditions,
    check_sum_conditions,
    inversion,
    outcome_to_json,
    p_addition,
    p_product,
    product_unitary,
    run_block,
)
from qqbf.fock import dual_rail_input, evolve
from qqbf.qubit import INDETERMINATE, Indeterminate, RiemannPoint, field_add, fidelity_pure, sample_haar

from conftest import haar_unitary

INF = RiemannPoint(1, 0)
GRID = [0, 1, 1j, -1, INF]
seeds = st.integers(0, 2**32 - 1)
phases = st.floats(-math.pi, math.pi)


def pair(seed):
    rng = np.random.default_rng(seed)
    return sample_haar(rng), sample_haar(rng)


def by_label(outcomes):
    return {o.branch: o for o in outcomes}


def test_product_spot_values():
    out = by_label(run_block(product_unitary(), 1, 1))
    assert out["+"].probability == pytest.approx(0.25, abs=1e-12)
    assert out["-"].probability == pytest.approx(0.25, abs=1e-12)
    assert out["+"].output.isclose(RiemannPoint.from_complex(1))
    assert out["-"].output.isclose(RiemannPoint.from_complex(-1))


def test_addition_spot_values():
    out = by_label(run_block(addition_unitary(), 0, 0))
    assert out["S"].probability == pytest.approx(0.2, abs=1e-12)
    assert out["S"].output.isclose(RiemannPoint.from_complex(0))
    assert out["I"].probability == 0
    assert out["I"].output is INDETERMINATE


def test_product_zero_times_infinity():
    for o in run_block(product_unitary(), 0, INF):
        assert o.probability == 0
        assert o.output is INDETERMINATE and o.target is INDETERMINATE


@given(seeds, phases, phases, phases, phases)
def test_product_branches_hit_targets(seed, a, b, c, d):
    z1, z2 = pair(seed)
    for o in run_block(product_unitary(a, b, c, d), z1, z2):
        assert 1 - fidelity_pure(o.output, o.target) < 1e-10
        assert o.probability == pytest.approx(p_product(z1, z2), abs=1e-12)


@given(seeds, phases, phases, phases, phases)
def test_addition_branches_hit_targets(seed, a, b, c, d):
    z1, z2 = pair(seed)
    ps, pi = p_addition(z1, z2)
    out = by_label(run_block(addition_unitary(a, b, c, d), z1, z2))
    assert out["S"].probability == pytest.approx(ps, abs=1e-12)
    assert out["I"].probability == pytest.approx(pi, abs=1e-12)
    for o in out.values():
        assert 1 - fidelity_pure(o.output, o.target) < 1e-10


@given(seeds)
def test_swapped_product_block(seed):
    z1, z2 = pair(seed)
    for o in run_block(product_unitary(swapped=True), z1, z2):
        assert 1 - fidelity_pure(o.output, o.target) < 1e-10


@pytest.mark.parametrize("z1", GRID)
@pytest.mark.parametrize("z2", GRID)
def test_degenerate_grid(z1, z2):
    for block, probs in ((product_unitary(), None), (addition_unitary(), p_addition(z1, z2))):
        for o in run_block(block, z1, z2):
            if isinstance(o.target, Indeterminate):
                assert o.probability == 0
                continue
            expect = p_product(z1, z2) if probs is None else probs[o.branch == "I"]
            assert o.probability == pytest.approx(expect, abs=1e-12)
            if o.probability > 0:
                assert 1 - fidelity_pure(o.output, o.target) < 1e-10


@given(seeds)
def test_probabilities_exhaustive(seed):
    z1, z2 = pair(seed)
    for block in (product_unitary(), addition_unitary()):
        psi = evolve(block.matrix, dual_rail_input([(z1.alpha, z1.beta), (z2.alpha, z2.beta)],
                                                   [(0, 1), (2, 3)]))
        branch = sum(o.probability for o in run_block(block, z1, z2))
        other = sum(abs(a) ** 2 for s, a in psi.amplitudes.items()
                    if not (s[0] + s[3] == 1 and (s[1], s[2]) in block.branch_rules))
        assert branch + other == pytest.approx(1, abs=1e-12)


def test_golden_ratio_factor():
    T = 1 - R_ADD
    assert R_ADD * T / (R_ADD - T) ** 2 == pytest.approx(1, abs=1e-12)
    out = by_label(run_block(addition_unitary(), 2 + 1j, -0.5))
    assert out["S"].output.isclose(field_add(2 + 1j, -0.5), 1e-12)


def test_inversion():
    assert inversion(0) == INF
    assert inversion(2).isclose(RiemannPoint.from_complex(0.5))


def test_canonical_blocks_satisfy_conditions():
    for phis in [(0, 0, 0, 0), (0.3, -1.2, 2.0, 0.7)]:
        rep = check_product_conditions(product_unitary(*phis).matrix)
        assert rep.passed() and rep.residuals.max() < 1e-12
        rep = check_sum_conditions(addition_unitary(*phis).matrix)
        assert rep.passed() and rep.residuals.max() < 1e-12
    assert abs(check_sum_conditions(addition_unitary().matrix).common_value) ** 2 == pytest.approx(0.2)


def test_identity_fails_product_conditions():
    rep = check_product_conditions(np.eye(4))
    assert not rep.passed()
    assert rep.residuals[6] == pytest.approx(1)


def test_random_unitaries_fail_conditions(rng):
    for _ in range(200):
        U = haar_unitary(rng, 4)
        assert check_product_conditions(U).residuals.max() > 1e-3
        assert check_sum_conditions(U).residuals.max() > 1e-3


def test_block_validation():
    with pytest.raises(ValueError):
        BlockUnitary(np.ones((4, 4)), "product")
    with pytest.raises(ValueError):
        BlockUnitary(np.eye(4), "division")
    with pytest.raises(ValueError):
        BlockUnitary(np.eye(3), "product")
    b = product_unitary()
    with pytest.raises(ValueError):
        b.matrix[0, 0] = 2


def test_block_json_round_trip():
    b = addition_unitary(0.1, 0.2, 0.3, 0.4)
    c = block_from_json(block_to_json(b))
    assert np.allclose(b.matrix, c.matrix, atol=1e-15)
    assert c.branch_rules == b.branch_rules and c.kind == b.kind


def test_outcome_json():
    out = [outcome_to_json(o) for o in run_block(addition_unitary(), 0, 0)]
    assert out[0]["fidelity"] == pytest.approx(1)
    assert out[1]["output"] == "indeterminate" and out[1]["fidelity"] is None
