"""Simulation and compilation toolkit for photonic quantum-to-quantum Bernoulli factories."""

from .blocks import (
    R_ADD,
    BlockUnitary,
    BranchOutcome,
    addition_unitary,
    check_product_conditions,
    check_sum_conditions,
    inversion,
    p_addition,
    p_product,
    product_unitary,
    run_block,
)
from .fock import FockVector, evolve, fock_basis, permanent, postselect, transition_matrix
from .mesh import (
    PRESETS,
    MeshProgram,
    MZISetting,
    compose,
    decompose,
    mzi_matrix,
    preset,
    round_trip_residual,
    run_preset,
)
from .noise import (
    OverlapSpec,
    addition_density,
    harmonic_density,
    preset_fidelity,
    product_density,
    simulate_partial,
)
from .pipeline import characterize, fidelity_corrected, fidelity_measured, sample_counts, sweep_critical
from .qubit import INDETERMINATE, Indeterminate, RiemannPoint, fidelity_mixed, fidelity_pure, sample_haar

__version__ = "0.1.0"

__all__ = [
    "BlockUnitary",
    "BranchOutcome",
    "FockVector",
    "INDETERMINATE",
    "Indeterminate",
    "MZISetting",
    "MeshProgram",
    "OverlapSpec",
    "PRESETS",
    "R_ADD",
    "RiemannPoint",
    "addition_density",
    "addition_unitary",
    "characterize",
    "check_product_conditions",
    "check_sum_conditions",
    "compose",
    "decompose",
    "evolve",
    "fidelity_corrected",
    "fidelity_measured",
    "fidelity_mixed",
    "fidelity_pure",
    "fock_basis",
    "harmonic_density",
    "inversion",
    "mzi_matrix",
    "p_addition",
    "p_product",
    "permanent",
    "postselect",
    "preset",
    "preset_fidelity",
    "product_density",
    "product_unitary",
    "round_trip_residual",
    "run_block",
    "run_preset",
    "sample_counts",
    "sample_haar",
    "simulate_partial",
    "sweep_critical",
    "transition_matrix",
]
