"""Random Lindblad superoperators: spectra, steady states, scaling analysis.

The package samples Liouvillians of Lindblad form with a Gaussian random
Hamiltonian and traceless Ginibre jump operators, diagonalizes them
exactly, extracts the steady state, and compares the resulting spectral
and steady-state statistics against built-in analytic reference laws and
a finite-size scaling-exponent framework.
"""

from ._version import __version__
from .ensembles import (
    BasisSet,
    ModelParams,
    dissipation_matrix,
    jumps_from_coefficients,
    make_basis,
    sample_coefficients,
    sample_hamiltonian,
    sample_jump_operators,
    stream_rng,
)
from .errors import DegenerateSpectrumError, NumericalError, PositivityError
from .liouvillian import (
    Superoperator,
    apply_direct,
    build_from_dissipation_matrix,
    build_liouvillian,
    dump_superoperator,
    load_superoperator,
    real_representation,
)
from .spectra import (
    DensityCut,
    SpectralSummary,
    Spectrum,
    density_cut,
    diagonalize,
    gap_distribution,
    geff,
    g_for_geff,
    marginal_density,
    summarize,
)
from .steadystate import (
    EffectiveHamiltonian,
    RatioStatistics,
    SteadyState,
    effective_hamiltonian,
    extract_steady_state,
    purity_and_variance,
    ratio_moment_statistic,
    spacing_ratios,
)
from .oracles import (
    Chi2EntryLaw,
    MarchenkoPasturLaw,
    SemicircleLaw,
    catalan_number,
    chi2_entry_law,
    classical_generator,
    gap_strong,
    gap_weak,
    mp_convolution_density,
    ratio_reference,
    semicircle_self_convolution,
    x_spread_strong,
)
from .analysis import (
    ExponentRecord,
    builtin_exponent_table,
    check_exponent_constraint,
    collapse_quality,
    extrapolate_largeN,
    fit_power_law,
    optimize_exponents,
)
from .sweep import SweepConfig, SweepResult, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
