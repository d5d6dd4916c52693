"""Exact diagonalization and global spectral observables.

The n^2 eigenvalues Lambda_alpha of the superoperator are obtained with a
dense general eigensolver applied to the real Hermitian-basis form of L
(see :mod:`randliou.liouvillian`).  The summary observables follow the
conventions

    R   = sum_alpha Lambda_alpha / n^2          (center of mass)
    X^2 = sum_alpha Re(Lambda_alpha - R)^2 / n^2
    Y^2 = sum_alpha Im(Lambda_alpha)^2 / n^2
    gap = -Re of the runner-up after excluding exactly the zero mode,

with the zero mode included in R, X, Y.  The zero mode is identified as
the eigenvalue of largest real part; uniqueness is asserted through a gap
of at least ``tol_zero = 1e-10 ||L||_F`` to the runner-up.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateSpectrumError, NumericalError
from .liouvillian import Superoperator, real_representation

__all__ = [
    "Spectrum",
    "SpectralSummary",
    "DensityCut",
    "GapDistribution",
    "geff",
    "g_for_geff",
    "diagonalize",
    "summarize",
    "density_cut",
    "preset_cuts",
    "marginal_density",
    "gap_distribution",
    "SUMMARY_FIELDS",
    "write_summary_table",
    "spectrum_record",
]

#: Header of the per-realization summary table export.
SUMMARY_FIELDS = ("N", "beta", "r", "g", "g_eff", "R", "X", "Y", "gap", "realization")


def geff(params):
    """Effective dissipation strength (2 r beta n)^(1/4) g."""
    return params.g_eff


def g_for_geff(g_eff, n, beta, r):
    """Bare coupling g reproducing the given g_eff (round-trips to 1e-14)."""
    return g_eff / (2.0 * r * beta * n) ** 0.25


@dataclass
class Spectrum:
    """All n^2 eigenvalues of one Liouvillian instance.

    ``right_vectors`` (columns aligned with ``eigenvalues``) are retained
    only on request; ``max_residual`` is the worst ||L v - Lambda v|| / ||v||
    over the checked eigenpairs, or None when the check was skipped.
    """

    eigenvalues: np.ndarray = field(repr=False)
    n: int
    zero_mode_index: int
    frobenius_norm: float
    max_residual: float | None = None
    right_vectors: np.ndarray | None = field(default=None, repr=False)
    degenerate_zero_modes: int = 1

    @property
    def tol_zero(self):
        return 1e-10 * self.frobenius_norm

    @property
    def zero_mode(self):
        return self.eigenvalues[self.zero_mode_index]

    def nonzero_eigenvalues(self):
        """Eigenvalues with exactly the zero mode removed."""
        return np.delete(self.eigenvalues, self.zero_mode_index)


def _sample_residuals(real_form, eigenvalues, sample, rng):
    """Eigenpair residuals via shifted inverse iteration on the real form.

    Conjugate eigenvalue pairs of a real matrix share their residual, so
    only one representative per pair is solved for.
    """
    order = np.argsort(eigenvalues.imag)
    upper = [i for i in order if eigenvalues[i].imag >= 0.0]
    picks = rng.choice(len(upper), size=min((sample + 1) // 2, len(upper)), replace=False)
    worst = 0.0
    nsq = real_form.shape[0]
    for pick in picks:
        lam = eigenvalues[upper[pick]]
        if lam.imag == 0.0:
            lam = lam.real
            shifted = real_form.copy()
        else:
            shifted = real_form.astype(complex)
        shifted[np.diag_indices(nsq)] -= lam
        vec0 = rng.normal(size=nsq)
        try:
            # exactly zero pivots (shift at a defective point) surface as
            # warnings and non-finite solves; those picks are skipped
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                with np.errstate(all="ignore"):
                    lu = sla.lu_factor(shifted, check_finite=False)
                    v = sla.lu_solve(lu, vec0, check_finite=False)
                    norm0 = np.linalg.norm(v)
                    if not np.isfinite(norm0) or norm0 == 0.0:
                        continue
                    v = sla.lu_solve(lu, v / norm0, check_finite=False)
        except (sla.LinAlgError, ValueError):
            continue
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm == 0.0:
            continue
        v = v / norm
        worst = max(worst, float(np.linalg.norm(real_form @ v - lam * v)))
    return worst


def _coords_columns_to_vec(columns, n):
    """Map Hermitian-basis coordinate columns to row-stacked vec columns."""
    from .liouvillian import hermitian_basis_indices

    diag, upper, lower = hermitian_basis_indices(n)
    npair = upper.size
    s = 1.0 / np.sqrt(2.0)
    out = np.zeros((n * n, columns.shape[1]), dtype=complex)
    out[diag, :] = columns[:n, :]
    sym = columns[n:n + npair, :] * s
    asym = columns[n + npair:, :] * s
    out[upper, :] = sym + 1j * asym
    out[lower, :] = sym - 1j * asym
    return out


def diagonalize(superop, vectors=False, residual_sample=10, allow_degenerate=False):
    """Full dense eigendecomposition of one Liouvillian.

    Parameters
    ----------
    superop : Superoperator
    vectors : bool
        Keep right eigenvectors (mapped back to the row-stacked complex
        coordinates).  Memory is n^2 x n^2 complex; off by default.
    residual_sample : int
        Number of eigenpairs whose residual is verified.  With vectors the
        computed eigenvectors are used directly; without, residuals come
        from shifted inverse iteration.  0 skips the check.
    allow_degenerate : bool
        Diagnostic escape hatch for instances with a degenerate stationary
        subspace (e.g. vanishing dissipation); the default raises.

    Raises
    ------
    DegenerateSpectrumError
        Zero mode not separated from the runner-up by ``tol_zero``.
    NumericalError
        Dissipativity, zero-mode or trace-identity checks fail.
    """
    if not isinstance(superop, Superoperator):
        raise TypeError("diagonalize expects a Superoperator")
    real_form = real_representation(superop)
    fro = superop.frobenius_norm
    tol_zero = superop.tol_zero

    if vectors:
        eigenvalues, real_vecs = np.linalg.eig(real_form)
    else:
        eigenvalues = np.linalg.eigvals(real_form)
        real_vecs = None

    # Independent solver check: the eigenvalue sum must reproduce Tr L.
    trace_dev = abs(eigenvalues.sum() - np.trace(superop.matrix))
    if trace_dev > 1e-8 * max(fro, 1e-300):
        raise NumericalError(
            f"eigenvalue sum deviates from Tr L by {trace_dev:.3e} (||L||_F {fro:.3e})"
        )

    order = np.argsort(eigenvalues.real)
    zero_idx = int(order[-1])
    lam0 = eigenvalues[zero_idx]
    if abs(lam0) > tol_zero:
        raise NumericalError(
            f"largest-real-part eigenvalue {lam0:.3e} exceeds tol_zero {tol_zero:.3e}"
        )
    if eigenvalues.real.max() > tol_zero:
        raise NumericalError("positive real parts beyond tol_zero: not dissipative")

    # Uniqueness: runner-up real part separated from the zero mode by tol_zero.
    runners_up = int(np.sum(eigenvalues.real > lam0.real - tol_zero))
    # Diagnostic multiplicity of the stationary eigenvalue itself.
    degenerate = int(np.sum(np.abs(eigenvalues - lam0) <= tol_zero))
    if runners_up > 1 and not allow_degenerate:
        raise DegenerateSpectrumError(
            f"{runners_up} eigenvalues within tol_zero of the zero mode's real part"
        )

    max_residual = None
    if residual_sample:
        rng = np.random.default_rng(0)
        if vectors:
            picks = rng.choice(
                eigenvalues.size, size=min(residual_sample, eigenvalues.size), replace=False
            )
            worst = 0.0
            for pick in picks:
                v = real_vecs[:, pick]
                worst = max(
                    worst,
                    float(
                        np.linalg.norm(real_form @ v - eigenvalues[pick] * v)
                        / np.linalg.norm(v)
                    ),
                )
            max_residual = worst
        else:
            max_residual = _sample_residuals(
                real_form, eigenvalues, residual_sample, rng
            )
        if max_residual > 1e-8 * max(fro, 1e-300):
            raise NumericalError(
                f"eigenpair residual {max_residual:.3e} exceeds 1e-8 ||L||_F"
            )

    right = None
    if vectors:
        right = _coords_columns_to_vec(real_vecs, superop.n)

    return Spectrum(
        eigenvalues=eigenvalues,
        n=superop.n,
        zero_mode_index=zero_idx,
        frobenius_norm=fro,
        max_residual=max_residual,
        right_vectors=right,
        degenerate_zero_modes=degenerate,
    )


@dataclass(frozen=True)
class SpectralSummary:
    """Center of mass, axis spreads, and spectral gap of one spectrum."""

    R: float
    R_imag: float
    X: float
    Y: float
    gap: float
    g_eff: float | None = None

    def as_dict(self):
        return {
            "R": self.R,
            "R_imag": self.R_imag,
            "X": self.X,
            "Y": self.Y,
            "gap": self.gap,
        }


def summarize(spectrum, params=None):
    """R, X, Y over all n^2 eigenvalues; gap excludes exactly the zero mode."""
    lam = spectrum.eigenvalues
    center = lam.sum() / lam.size
    x = float(np.sqrt(np.mean((lam.real - center.real) ** 2)))
    y = float(np.sqrt(np.mean(lam.imag**2)))
    rest = spectrum.nonzero_eigenvalues()
    gap = float(-rest.real.max()) if rest.size else 0.0
    return SpectralSummary(
        R=float(center.real),
        R_imag=float(center.imag),
        X=x,
        Y=y,
        gap=gap,
        g_eff=params.g_eff if params is not None else None,
    )


@dataclass
class DensityCut:
    """Histogram of one spectral cut or marginal.

    ``axis`` is "real" for a cut at Re(Lambda) = c (the histogram then runs
    along the imaginary direction) and "imag" for a cut at Im(Lambda) = c.
    For marginals ``strip_width`` is None and c is 0.
    """

    axis: str
    c: float
    strip_width: float | None
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    count: int = 0
    total: int = 0
    empty: bool = False

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self):
        return float(np.sum(self.density * np.diff(self.edges)))


def _histogram(values, bins):
    if bins is None:
        bins = "fd" if values.size > 3 and np.ptp(values) > 0 else 10
    counts, edges = np.histogram(values, bins=bins)
    return counts.astype(float), edges


def density_cut(spectrum, axis, c, strip_width=None, bins=None):
    """Density along a strip cut of the spectrum.

    Eigenvalues with |coordinate - c| <= strip_width / 2 along ``axis`` are
    collected and the orthogonal coordinate is histogrammed, normalized so
    the integral equals (points in strip) / n^2.  The default strip width
    is max(X, Y) / 25.
    """
    if axis not in ("real", "imag"):
        raise ValueError(f"axis must be 'real' or 'imag', got {axis!r}")
    lam = spectrum.eigenvalues
    if strip_width is None:
        summary = summarize(spectrum)
        strip_width = max(summary.X, summary.Y) / 25.0
    if not strip_width > 0:
        raise ValueError(f"strip_width must be > 0, got {strip_width}")
    along = lam.real if axis == "real" else lam.imag
    across = lam.imag if axis == "real" else lam.real
    keep = np.abs(along - c) <= 0.5 * strip_width
    selected = across[keep]
    if selected.size == 0:
        return DensityCut(
            axis=axis,
            c=float(c),
            strip_width=float(strip_width),
            edges=np.array([0.0, 1.0]),
            density=np.zeros(1),
            count=0,
            total=lam.size,
            empty=True,
        )
    counts, edges = _histogram(selected, bins)
    widths = np.diff(edges)
    density = counts / (lam.size * widths)
    return DensityCut(
        axis=axis,
        c=float(c),
        strip_width=float(strip_width),
        edges=edges,
        density=density,
        count=int(selected.size),
        total=lam.size,
    )


def preset_cuts(spectrum, summary=None, strip_width=None, bins=None):
    """The four standard cuts: Re = R, R + X and Im = 0, Y."""
    if summary is None:
        summary = summarize(spectrum)
    return {
        "re_R": density_cut(spectrum, "real", summary.R, strip_width, bins),
        "re_R_plus_X": density_cut(
            spectrum, "real", summary.R + summary.X, strip_width, bins
        ),
        "im_0": density_cut(spectrum, "imag", 0.0, strip_width, bins),
        "im_Y": density_cut(spectrum, "imag", summary.Y, strip_width, bins),
    }


def marginal_density(spectrum, axis, bins=None, omit_zero_mode=False):
    """Integrated density of the real or imaginary parts, unit mass.

    ``axis`` is "imag" for rho_I and "real" for rho_R; ``omit_zero_mode``
    drops exactly the zero eigenvalue (one point).
    """
    if axis not in ("real", "imag"):
        raise ValueError(f"axis must be 'real' or 'imag', got {axis!r}")
    lam = spectrum.nonzero_eigenvalues() if omit_zero_mode else spectrum.eigenvalues
    values = lam.real if axis == "real" else lam.imag
    if bins is not None and np.isscalar(bins) and bins < 10:
        raise ValueError(f"need at least 10 bins, got {bins}")
    counts, edges = _histogram(values, bins)
    widths = np.diff(edges)
    mass = counts.sum()
    density = counts / (mass * widths) if mass else counts
    return DensityCut(
        axis=axis,
        c=0.0,
        strip_width=None,
        edges=edges,
        density=density,
        count=int(mass),
        total=values.size,
    )


@dataclass
class GapDistribution:
    """Raw and mean-rescaled gap histograms over an ensemble."""

    gaps: np.ndarray = field(repr=False)
    mean: float
    std: float
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    scaled_edges: np.ndarray = field(repr=False)
    scaled_density: np.ndarray = field(repr=False)

    @property
    def relative_width(self):
        """sigma_Delta / <Delta>; shrinks with n as the gap sharpens."""
        return self.std / self.mean if self.mean else float("inf")


def gap_distribution(gaps, bins=None):
    """Gap statistics over >= 20 realizations.

    ``gaps`` may be raw gap values, SpectralSummary objects, or Spectrum
    objects (summarized on the fly).
    """
    values = []
    for item in gaps:
        if isinstance(item, Spectrum):
            values.append(summarize(item).gap)
        elif isinstance(item, SpectralSummary):
            values.append(item.gap)
        else:
            values.append(float(item))
    values = np.asarray(values, dtype=float)
    if values.size < 20:
        raise ValueError(f"need >= 20 realizations, got {values.size}")
    counts, edges = _histogram(values, bins)
    mass = counts.sum()
    density = counts / (mass * np.diff(edges))
    mean = float(values.mean())
    scaled = values / mean if mean else values
    s_counts, s_edges = _histogram(scaled, bins)
    s_density = s_counts / (s_counts.sum() * np.diff(s_edges))
    return GapDistribution(
        gaps=values,
        mean=mean,
        std=float(values.std()),
        edges=edges,
        density=density,
        scaled_edges=s_edges,
        scaled_density=s_density,
    )


def _fmt(value):
    return format(float(value), ".17g")


def write_summary_table(path, rows):
    """Delimiter-separated per-realization table with the documented header.

    Each row is (params, summary); numbers are written with 17 significant
    digits for replay fidelity.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for params, summary in rows:
            writer.writerow(
                [
                    params.n,
                    params.beta,
                    params.r,
                    _fmt(params.g),
                    _fmt(params.g_eff),
                    _fmt(summary.R),
                    _fmt(summary.X),
                    _fmt(summary.Y),
                    _fmt(summary.gap),
                    params.realization,
                ]
            )


def spectrum_record(params, spectrum, summary=None):
    """One-per-line structured record (dict, JSON-serializable)."""
    if summary is None:
        summary = summarize(spectrum, params)
    return {
        "n": params.n,
        "beta": params.beta,
        "r": params.r,
        "g": params.g,
        "g_eff": params.g_eff,
        "seed": params.seed,
        "realization": params.realization,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in spectrum.eigenvalues],
        "summary": summary.as_dict(),
        "max_residual": spectrum.max_residual,
    }


def write_spectrum_records(path, records):
    """Append JSON-lines spectrum records to ``path``."""
    with open(path, "a") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
