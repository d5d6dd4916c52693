"""Steady-state extraction and spectral statistics of rho_0.

The steady state is the trace-one eigenmatrix at the zero eigenvalue.  Two
extraction routes are provided: devectorizing the zero-mode eigenvector of
a full diagonalization, and inverse iteration on the real Hermitian-basis
form of L (an LU factorization instead of a full eigensolve, the route of
choice when only rho_0 is needed).  Both end with hermitization, trace
normalization, a positivity check, and a residual check against the direct
Lindblad action.

Derived observables: purity P_0 = Tr(rho_0^2), eigenvalue variance
sigma^2 (P_0 - 1/n = n sigma^2 holds identically), the effective
Hamiltonian eps_i = -log p_i, and the adjacent spacing ratios
r_i = s_i / s_{i-1} which are scale-free and need no unfolding.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateSpectrumError, NumericalError, PositivityError
from .liouvillian import apply_direct, coords_to_matrix, real_representation

__all__ = [
    "SteadyState",
    "EffectiveHamiltonian",
    "RatioStatistics",
    "extract_steady_state",
    "purity_and_variance",
    "effective_hamiltonian",
    "spacing_ratios",
    "ratio_moment_statistic",
]

#: Steady-state residual bound, relative to ||L||_F ||rho||_F.
RESIDUAL_RTOL = 1e-8
#: Eigenvalues of rho_0 below this are a solver failure, not noise.
POSITIVITY_TOL = -1e-8
#: Default cutoff below which p_i are excluded from -log p_i.
DEFAULT_P_MIN = 1e-12


@dataclass
class SteadyState:
    """Trace-one positive steady state with its eigenvalues.

    ``probabilities`` are the eigenvalues p_i sorted ascending; ``residual``
    is ||L(rho_0)|| / (||L||_F ||rho_0||_F) from the direct action.
    """

    rho: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    min_eigenvalue: float
    residual: float
    params: object = None

    @property
    def n(self):
        return self.rho.shape[0]

    @property
    def purity(self):
        return float(np.sum(self.probabilities**2))

    @property
    def variance(self):
        return float(np.var(self.probabilities))


def _finalize(rho_raw, superop, params):
    rho = 0.5 * (rho_raw + rho_raw.conj().T)
    trace = float(np.trace(rho).real)
    if abs(trace) < 1e-14 * np.linalg.norm(rho):
        raise NumericalError("steady-state candidate has (near-)zero trace")
    rho = rho / trace  # also flips sign when the raw vector came out negated
    probs = np.linalg.eigvalsh(rho)
    if probs.min() < POSITIVITY_TOL:
        raise PositivityError(
            f"steady-state eigenvalue {probs.min():.3e} below {POSITIVITY_TOL}; "
            "zero mode was likely misidentified"
        )
    residual = float(
        np.linalg.norm(apply_direct(superop.hamiltonian, superop.jumps, rho))
        / (superop.frobenius_norm * np.linalg.norm(rho))
    )
    if residual > RESIDUAL_RTOL:
        raise NumericalError(
            f"steady-state residual {residual:.3e} exceeds {RESIDUAL_RTOL}"
        )
    return SteadyState(
        rho=rho,
        probabilities=probs,
        min_eigenvalue=float(probs.min()),
        residual=residual,
        params=params,
    )


def _kernel_vector(lu_piv, start):
    v = sla.lu_solve(lu_piv, start, check_finite=False)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise NumericalError("inverse iteration produced a non-finite vector")
    v = sla.lu_solve(lu_piv, v / norm, check_finite=False)
    return v / np.linalg.norm(v)


def _steady_by_inverse_iteration(superop, check_unique):
    """Kernel vector of the real form via LU-based inverse iteration.

    The start vector vec(1) has guaranteed overlap with the steady state
    (its coefficient is Tr rho_0 = 1).  A second start is used to detect a
    degenerate stationary subspace.
    """
    real_form = real_representation(superop)
    nsq = real_form.shape[0]
    n = superop.n
    try:
        lu_piv = sla.lu_factor(real_form, check_finite=False)
    except sla.LinAlgError as exc:  # exactly singular pivot: tiny shift
        shift = np.finfo(float).eps * superop.frobenius_norm
        real_form[np.diag_indices(nsq)] -= shift
        lu_piv = sla.lu_factor(real_form, check_finite=False)
        del exc

    start = np.zeros(nsq)
    start[:n] = 1.0 / np.sqrt(n)  # vec(identity) in the Hermitian basis
    v = _kernel_vector(lu_piv, start)

    if check_unique:
        rng = np.random.default_rng(1)
        other = _kernel_vector(lu_piv, rng.normal(size=nsq))
        overlap = abs(float(other @ v))
        if overlap < 1.0 - 1e-6:
            raise DegenerateSpectrumError(
                f"stationary subspace is degenerate (kernel overlap {overlap:.6f})"
            )
    return coords_to_matrix(v, n)


def extract_steady_state(superop, spectrum=None, check_unique=True):
    """Extract rho_0 from the zero mode and validate it.

    When ``spectrum`` carries right eigenvectors the zero-mode column is
    devectorized; otherwise (or when ``spectrum`` is None) the kernel is
    found by inverse iteration on the real form.  Either way the result is
    hermitized, trace-normalized, and checked for positivity
    (min p_i >= -1e-8) and for the residual bound
    ||L(rho_0)|| <= 1e-8 ||L||_F ||rho_0||_F via the direct action.
    """
    params = getattr(superop, "params", None)
    if spectrum is not None and spectrum.right_vectors is not None:
        if spectrum.degenerate_zero_modes > 1:
            raise DegenerateSpectrumError(
                f"zero mode is {spectrum.degenerate_zero_modes}-fold degenerate"
            )
        raw = spectrum.right_vectors[:, spectrum.zero_mode_index].reshape(
            superop.n, superop.n
        )
        return _finalize(raw, superop, params)
    if spectrum is not None and spectrum.degenerate_zero_modes > 1:
        raise DegenerateSpectrumError(
            f"zero mode is {spectrum.degenerate_zero_modes}-fold degenerate"
        )
    raw = _steady_by_inverse_iteration(superop, check_unique)
    return _finalize(raw, superop, params)


def purity_and_variance(state):
    """(P_0, sigma^2) with the identity P_0 - 1/n = n sigma^2 enforced."""
    probs = state.probabilities
    purity = float(np.sum(probs**2))
    variance = float(np.var(probs))
    n = probs.size
    defect = abs(purity - 1.0 / n - n * variance)
    if defect > 1e-12:
        raise NumericalError(
            f"purity/variance identity violated by {defect:.3e} "
            "(trace normalization is off)"
        )
    return purity, variance


@dataclass
class EffectiveHamiltonian:
    """Sorted spectrum eps_i = -log p_i of the steady state."""

    epsilons: np.ndarray = field(repr=False)
    discarded_count: int
    p_min: float

    def __len__(self):
        return self.epsilons.size


def effective_hamiltonian(state, p_min=DEFAULT_P_MIN):
    """-log of the steady-state eigenvalues above ``p_min``, ascending.

    Discarded levels are counted, never silently dropped; fewer than four
    retained levels make ratio statistics impossible and raise.
    """
    if not p_min > 0:
        raise ValueError(f"p_min must be > 0, got {p_min}")
    probs = state.probabilities
    keep = probs > p_min
    discarded = int(probs.size - keep.sum())
    if keep.sum() < 4:
        raise NumericalError(
            f"only {int(keep.sum())} levels above p_min={p_min:g}; "
            "ratio statistics need at least 4"
        )
    eps = np.sort(-np.log(probs[keep]))
    return EffectiveHamiltonian(epsilons=eps, discarded_count=discarded, p_min=p_min)


@dataclass
class RatioStatistics:
    """Adjacent spacing ratios r_i = s_i / s_{i-1} and their moments.

    The histogram is clipped to [0, r_max] for display only; the moments
    always use every ratio (the Poisson law has a heavy tail and truncation
    would bias sigma_r).
    """

    ratios: np.ndarray = field(repr=False)
    mean: float
    std: float
    merged_count: int
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    @property
    def statistic(self):
        """(sigma_r / <r>)^(-1); order unity for RMT, -> 0 for Poisson."""
        return self.mean / self.std if self.std else float("inf")


_DEGENERACY_TOL = 1e-14


def spacing_ratios(eff, r_max=10.0, bins=50):
    """Ratios of consecutive level spacings of the effective Hamiltonian.

    Spacings below 1e-14 are treated as degeneracies: merged and counted.
    The ratios are invariant under eps -> a * eps + b with a > 0, which is
    why no unfolding is required.
    """
    eps = eff.epsilons if isinstance(eff, EffectiveHamiltonian) else np.sort(
        np.asarray(eff, dtype=float)
    )
    spacings = np.diff(eps)
    merged = int(np.sum(spacings < _DEGENERACY_TOL))
    spacings = spacings[spacings >= _DEGENERACY_TOL]
    if spacings.size < 2:
        raise NumericalError(
            f"{spacings.size + 1} distinct levels left after merging; "
            "need at least 3 for one ratio"
        )
    ratios = spacings[1:] / spacings[:-1]
    clipped = ratios[ratios <= r_max]
    if clipped.size:
        counts, edges = np.histogram(clipped, bins=bins, range=(0.0, r_max))
        density = counts / (ratios.size * np.diff(edges))
    else:
        edges = np.linspace(0.0, r_max, bins + 1)
        density = np.zeros(bins)
    return RatioStatistics(
        ratios=ratios,
        mean=float(ratios.mean()),
        std=float(ratios.std()),
        merged_count=merged,
        edges=edges,
        density=density,
    )


def ratio_moment_statistic(pooled):
    """(sigma_r / <r>)^(-1) over a pooled ensemble of >= 1000 ratios.

    Accepts RatioStatistics objects, ratio arrays, or a mix.
    """
    chunks = []
    for item in pooled if isinstance(pooled, (list, tuple)) else [pooled]:
        if isinstance(item, RatioStatistics):
            chunks.append(item.ratios)
        else:
            chunks.append(np.asarray(item, dtype=float))
    ratios = np.concatenate(chunks)
    if ratios.size < 1000:
        raise ValueError(f"need >= 1000 pooled ratios, got {ratios.size}")
    std = ratios.std()
    return float(ratios.mean() / std) if std else float("inf")
