import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qqbf.blocks import addition_unitary, p_addition, p_product, product_unitary
from qqbf.fock import FockVector, evolve
from qqbf.mesh import PRESETS, preset, run_preset
from qqbf.noise import (
    OverlapSpec,
    addition_density,
    addition_fidelity,
    distinguishable_concat_diagonals,
    harmonic_density,
    harmonic_fidelity,
    is_physical,
    noisy_preset,
    preset_fidelity,
    product_density,
    product_fidelity,
    simulate_partial,
)
from qqbf.qubit import (
    RiemannPoint,
    field_add,
    field_harmonic,
    field_mul,
    fidelity_mixed,
    sample_haar,
)

BLOCK_PAIRS = [(0, 1), (2, 3)]
seeds = st.integers(0, 2**32 - 1)
unit = st.floats(0, 1)


def internal_oracle(U, zs, pairs, gram, herald, output_modes):
    """Output qubit from an explicit (mode x internal label) Fock simulation."""
    w, Q = np.linalg.eigh(gram)
    V = (Q[:, w > 1e-12] * np.sqrt(w[w > 1e-12])).conj()
    n, d = V.shape
    modes = U.shape[0]
    pts = [z if isinstance(z, RiemannPoint) else RiemannPoint.from_complex(z) for z in zs]
    ops = {}
    for choice in itertools.product(*[[(m0, p.alpha), (m1, p.beta)] for p, (m0, m1) in zip(pts, pairs)]):
        for labels in itertools.product(range(d), repeat=n):
            coef = math.prod(c for _, c in choice) * math.prod(V[k, b] for k, b in enumerate(labels))
            key = tuple(sorted(m * d + b for (m, _), b in zip(choice, labels)))
            ops[key] = ops.get(key, 0) + coef
    amps = {}
    for key, c in ops.items():
        occ = [0] * (modes * d)
        for i in key:
            occ[i] += 1
        amps[tuple(occ)] = c * math.sqrt(math.prod(math.factorial(k) for k in occ))
    psi = FockVector(modes * d, amps, normalized=False)
    psi = FockVector(modes * d, {k: v / math.sqrt(psi.norm_squared()) for k, v in amps.items()})
    out = evolve(np.kron(U, np.eye(d)), psi)
    rho = np.zeros((2, 2), dtype=complex)
    groups = {}
    for occ, a in out.amplitudes.items():
        per_mode = [sum(occ[m * d:(m + 1) * d]) for m in range(modes)]
        want = [int(m in herald) for m in range(modes)]
        for r, o in enumerate(output_modes):
            test = list(want)
            test[o] += 1
            if per_mode == test:
                rest = tuple(x for m in range(modes) if m not in output_modes
                             for x in occ[m * d:(m + 1) * d])
                groups.setdefault((rest, tuple(occ[o * d:(o + 1) * d])), [0j, 0j])[r] += a
    for v in groups.values():
        rho += np.outer(v, np.conj(v))
    prob = float(np.trace(rho).real)
    return rho / prob, prob


def random_gram(rng, n):
    A = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    return A @ A.conj().T


@pytest.mark.parametrize("seed", range(4))
def test_gram_simulator_matches_internal_mode_oracle_two_photons(seed):
    rng = np.random.default_rng(seed)
    zs = [sample_haar(rng), sample_haar(rng)]
    gram = random_gram(rng, 2)
    spec = OverlapSpec(gram)
    for U, rules in ((product_unitary().matrix, {(2,): "+", (1,): "-"}),
                     (addition_unitary().matrix, {(2,): "S", (1,): "I"})):
        for o in simulate_partial(U, zs, BLOCK_PAIRS, spec, rules, (0, 3)):
            herald = [h for h, lab in rules.items() if lab == o.branch][0]
            rho, prob = internal_oracle(U, zs, BLOCK_PAIRS, gram, herald, (0, 3))
            assert np.abs(rho - o.rho).max() < 1e-10
            assert o.probability == pytest.approx(prob, abs=1e-12)


@pytest.mark.parametrize("name", ["ProductThenAddition", "AdditionThenProduct"])
def test_gram_simulator_matches_internal_mode_oracle_three_photons(name):
    rng = np.random.default_rng(11)
    p = preset(name)
    zs = [sample_haar(rng) for _ in range(3)]
    gram = random_gram(rng, 3)
    rho, prob = internal_oracle(p.unitary(), zs, p.input_pairs, gram, p.main, p.output_modes)
    o = simulate_partial(p.unitary(), zs, p.input_pairs, OverlapSpec(gram), {p.main: "m"},
                         p.output_modes)[0]
    assert np.abs(rho - o.rho).max() < 1e-10
    assert o.probability == pytest.approx(prob, abs=1e-12)


@given(seeds, unit)
def test_product_density_matches_simulation(seed, c):
    rng = np.random.default_rng(seed)
    z1, z2 = sample_haar(rng), sample_haar(rng)
    sim = simulate_partial(product_unitary().matrix, [z1, z2], BLOCK_PAIRS,
                           OverlapSpec.two_photon(c), {(2,): "+", (1,): "-"}, (0, 3))
    for o in sim:
        cf = product_density(z1, z2, c, o.branch)
        assert np.abs(cf.rho - o.rho).max() < 1e-10
        assert cf.probability == pytest.approx(o.probability, abs=1e-12)
        assert cf.probability == pytest.approx(p_product(z1, z2), abs=1e-12)
    f = fidelity_mixed(sim[0].rho, field_mul(z1, z2))
    assert product_fidelity(z1, z2, c) == pytest.approx(f, abs=1e-10)


@given(seeds, unit)
def test_addition_densities_match_simulation(seed, c):
    rng = np.random.default_rng(seed)
    z1, z2 = sample_haar(rng), sample_haar(rng)
    sim = simulate_partial(addition_unitary().matrix, [z1, z2], BLOCK_PAIRS,
                           OverlapSpec.two_photon(c), {(2,): "S", (1,): "I"}, (0, 3))
    a, h = addition_density(z1, z2, c_i=c), harmonic_density(z1, z2, c_i=c)
    assert np.abs(a.rho - sim[0].rho).max() < 1e-10
    assert np.abs(h.rho - sim[1].rho).max() < 1e-10
    assert a.probability == pytest.approx(sim[0].probability, abs=1e-12)
    assert h.probability == pytest.approx(sim[1].probability, abs=1e-12)
    assert addition_fidelity(z1, z2, c_i=c) == pytest.approx(fidelity_mixed(a.rho, field_add(z1, z2)), abs=1e-10)
    assert harmonic_fidelity(z1, z2, c_i=c) == pytest.approx(
        fidelity_mixed(h.rho, field_harmonic(z1, z2)), abs=1e-10)


@given(seeds)
def test_ideal_overlap_reproduces_pure_blocks(seed):
    rng = np.random.default_rng(seed)
    z1, z2 = sample_haar(rng), sample_haar(rng)
    assert addition_fidelity(z1, z2) == pytest.approx(1, abs=1e-12)
    assert addition_density(z1, z2).probability == pytest.approx(p_addition(z1, z2)[0], abs=1e-12)
    assert product_fidelity(z1, z2, 1.0) == pytest.approx(1, abs=1e-12)


@given(seeds, unit, st.floats(0.05, 0.95))
def test_noisy_states_are_physical(seed, c, R):
    rng = np.random.default_rng(seed)
    z1, z2 = sample_haar(rng), sample_haar(rng)
    for o in (product_density(z1, z2, c), addition_density(z1, z2, R, c), harmonic_density(z1, z2, R, c)):
        assert is_physical(o.rho)


def test_product_fidelity_value():
    assert product_fidelity(1, 1, 0.9) == pytest.approx(0.95, abs=1e-15)
    assert product_fidelity(0, 1, 0.0) == 1


def test_indeterminate_closed_forms_raise():
    with pytest.raises(ValueError):
        product_fidelity(0, RiemannPoint(1, 0), 0.5)
    with pytest.raises(ValueError):
        product_density(1, 1, 1.5)
    with pytest.raises(ValueError):
        addition_density(1, 1, R=0.0)


@pytest.mark.parametrize("name,kind", [("ProductProduct", "PP"), ("AdditionAddition", "SS"),
                                       ("AdditionThenProduct", "SP"), ("ProductThenAddition", "PS")])
def test_distinguishable_concat_diagonals(name, kind):
    rng = np.random.default_rng(5)
    p = PRESETS[name]
    for _ in range(5):
        zs = rng.normal(size=3) + 1j * rng.normal(size=3)
        o = simulate_partial(p.unitary(), zs, p.input_pairs, OverlapSpec.distinguishable(3),
                             {p.main: "m"}, p.output_modes)[0]
        dd = distinguishable_concat_diagonals(kind, *zs)
        assert o.rho[0, 0].real / o.rho[1, 1].real == pytest.approx(dd.d11 / dd.d22, rel=1e-10)
        if dd.offdiag_zero:
            assert abs(o.rho[0, 1]) < 1e-12


def test_distinguishable_concat_rejects():
    with pytest.raises(ValueError):
        distinguishable_concat_diagonals("QQ", 1, 1, 1)
    with pytest.raises(ValueError):
        distinguishable_concat_diagonals("PP", 1, RiemannPoint(1, 0), 1)


def test_overlap_spec_validation():
    with pytest.raises(ValueError):
        OverlapSpec(np.array([[1, 2], [2, 1]]))
    with pytest.raises(ValueError):
        OverlapSpec(np.array([[1, 0.5], [0.4, 1]]))
    with pytest.raises(ValueError):
        OverlapSpec(np.array([[2, 0], [0, 1]]))
    with pytest.raises(ValueError):
        OverlapSpec.two_photon(1.2)
    with pytest.raises(ValueError):
        OverlapSpec.from_json({"gram": [[1]], "bogus": 1})


def test_overlap_spec_json_round_trip():
    spec = OverlapSpec.pairs(1.0, 0.9)
    back = OverlapSpec.from_json(spec.to_json())
    assert np.allclose(back.gram, spec.gram)
    assert OverlapSpec.from_json({"c_same_pair": 1.0, "c_cross_pair": 0.9}).gram[0, 2] == 0.9
    g = random_gram(np.random.default_rng(0), 3)
    assert np.allclose(OverlapSpec.from_json(OverlapSpec(g).to_json()).gram, g)


def test_overlap_factor_reproduces_gram():
    g = random_gram(np.random.default_rng(1), 3)
    V = OverlapSpec(g).factor()
    assert np.allclose(V.conj() @ V.T, g, atol=1e-12)


def test_simulate_partial_rejects_mismatch():
    with pytest.raises(ValueError):
        simulate_partial(product_unitary().matrix, [1, 1], BLOCK_PAIRS, OverlapSpec.ideal(3),
                         {(2,): "+"}, (0, 3))
    with pytest.raises(ValueError):
        simulate_partial(product_unitary().matrix, [1, 1], BLOCK_PAIRS, OverlapSpec.ideal(2),
                         {(0,): "+"}, (0, 3))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_ideal_overlap_matches_pure_presets(name):
    rng = np.random.default_rng(2)
    p = preset(name)
    zs = [sample_haar(rng) for _ in range(p.n_inputs)]
    pure = {o.herald: o for o in run_preset(p, zs)}
    for (herald, _), o in zip(p.branches.items(), noisy_preset(name, zs, OverlapSpec.ideal(p.n_inputs))):
        assert o.probability == pytest.approx(pure[herald].probability, abs=1e-12)
        assert fidelity_mixed(o.rho, pure[herald].output) == pytest.approx(1, abs=1e-10)


# Frozen values from the simulator with intra-pair overlap 1 and cross-pair overlap 0.9.
TABLE_VALUES = [
    ("ProductThenAddition", (1, 1, 0), 0.9695069150682689),
    ("ProductThenAddition", (0, 0, 1), 0.7909972866124037),
    ("ProductThenAddition", (1, 1, 1), 0.924),
    ("ProductThenAddition", (0, 0, 0), 1.0),
    ("ProductThenAddition", ("inf", "inf", 0), 1.0),
    ("AdditionThenProduct", (1, 0, 1), 0.905),
    ("AdditionThenProduct", (0, 1, 1), 0.905),
    ("AdditionThenProduct", (1, 1, 1), 0.9392),
    ("AdditionThenProduct", (0, 0, 1), 1.0),
    ("AdditionThenProduct", ("inf", 0, 1), 1.0),
]


@pytest.mark.parametrize("name,zs,value", TABLE_VALUES)
def test_three_photon_fidelities_frozen(name, zs, value):
    assert preset_fidelity(name, zs, OverlapSpec.pairs(1.0, 0.9)) == pytest.approx(value, abs=1e-10)


def test_preset_fidelity_rejects_indeterminate():
    with pytest.raises(ValueError):
        preset_fidelity("ProductThenAddition", (0, "inf", 1), OverlapSpec.pairs(1.0, 0.9))


def test_fully_distinguishable_product_loses_coherence():
    o = product_density(1, 1, 0.0)
    assert np.allclose(o.rho, np.eye(2) / 2)
