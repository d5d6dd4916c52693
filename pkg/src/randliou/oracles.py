"""Closed-form and semi-analytic reference laws.

Contents:

* Wigner semicircle law and the self-convolution describing the marginal
  density of imaginary parts in the perturbative regime (the difference of
  two independent semicircle variables).
* Marchenko-Pastur law with endpoints xi_pm = (1 +- sqrt(r))^2, and the
  convolution of two unit-ratio MP laws, which is the (shifted, halved)
  limiting density governing the real parts at strong dissipation for a
  single channel; its moments obey
  m_k = (-1/2)^k sum_j C(k, j) Cat_j Cat_{k-j} with Catalan numbers Cat_j.
* Limiting gap formulas: beta n g^2 (1 - sqrt(r))^2 at strong dissipation
  (gapless for r = 1) and beta n r g^2 at weak dissipation (exact for
  large r), plus the X-spread scale 4 beta n sqrt(r) g^2.
* The classical stochastic generator obtained from first-order degenerate
  perturbation theory, A_nm = sum_l |W^(l)_nm|^2 off the diagonal with
  columns summing to zero; entries follow a chi^2 law with k = r beta
  degrees of freedom, mean k g^2 and variance 2 k g^4.
* Reference spacing-ratio laws: Poisson P(r) = 1/(1+r)^2 and the
  Wigner-like surmises P_beta(r) ~ (r + r^2)^beta / (1 + r + r^2)^(1+3beta/2),
  normalized numerically.  The unitary-class moment target is
  sigma_r^2/<r>^2 = 256 pi^2 / (27 sqrt(3) - 4 pi)^2 - 1 ~= 1.160.

All densities normalize to unit mass; quadrature uses sin^2 substitutions
to remove the inverse-square-root endpoint singularities.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import integrate, stats
from scipy.interpolate import PchipInterpolator

__all__ = [
    "catalan_number",
    "SemicircleLaw",
    "MarchenkoPasturLaw",
    "NumericDensity",
    "semicircle_self_convolution",
    "mp_convolution_density",
    "mp_convolution_moment_series",
    "gap_strong",
    "gap_weak",
    "x_spread_strong",
    "classical_generator",
    "Chi2EntryLaw",
    "chi2_entry_law",
    "RatioLaw",
    "ratio_reference",
]


def catalan_number(k):
    """Catalan number C_k = binom(2k, k) / (k + 1)."""
    return comb(2 * k, k) // (k + 1)


@dataclass(frozen=True)
class SemicircleLaw:
    """Unit-mass semicircle on |E| <= endpoint, variance endpoint^2 / 4."""

    endpoint: float

    @classmethod
    def for_hamiltonian(cls, n, beta):
        """Endpoint 2 sqrt(beta n / 2) of the unit-variance Gaussian ensemble."""
        return cls(endpoint=float(np.sqrt(2.0 * beta * n)))

    @property
    def variance(self):
        return self.endpoint**2 / 4.0

    def pdf(self, e):
        arr = np.atleast_1d(np.asarray(e, dtype=float))
        out = np.zeros_like(arr)
        inside = np.abs(arr) < self.endpoint
        out[inside] = (
            2.0 / (np.pi * self.endpoint**2) * np.sqrt(self.endpoint**2 - arr[inside] ** 2)
        )
        return out if np.ndim(e) else float(out[0])

    def cdf(self, e):
        e = np.clip(np.asarray(e, dtype=float) / self.endpoint, -1.0, 1.0)
        return 0.5 + (e * np.sqrt(1.0 - e**2) + np.arcsin(e)) / np.pi


@dataclass(frozen=True)
class MarchenkoPasturLaw:
    """Density of the channel-summed Wishart matrix, unit mass for r >= 1.

    rho(x) = sqrt((xi_plus - x)(x - xi_minus)) / (2 pi x) on [xi_minus,
    xi_plus] with xi_pm = (1 +- sqrt(r))^2; mean r, variance r.  For r = 1
    the moments are the Catalan numbers.
    """

    r: int = 1

    @property
    def xi_minus(self):
        return (1.0 - np.sqrt(self.r)) ** 2

    @property
    def xi_plus(self):
        return (1.0 + np.sqrt(self.r)) ** 2

    def pdf(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(arr)
        inside = (arr > self.xi_minus) & (arr < self.xi_plus)
        xi = arr[inside]
        out[inside] = np.sqrt((self.xi_plus - xi) * (xi - self.xi_minus)) / (
            2.0 * np.pi * xi
        )
        return out if np.ndim(x) else float(out[0])

    def moment(self, k):
        """k-th moment by quadrature (sin^2 substitution kills endpoints)."""
        lo, hi = self.xi_minus, self.xi_plus

        def integrand(theta):
            x = lo + (hi - lo) * np.sin(theta) ** 2
            jac = (hi - lo) * 2.0 * np.sin(theta) * np.cos(theta)
            return x**k * self.pdf(x) * jac

        value, _ = integrate.quad(integrand, 0.0, np.pi / 2, limit=200)
        return value


class NumericDensity:
    """Tabulated density with interpolated CDF, for overlays and KS tests.

    ``pdf`` evaluates the exact quadrature integrand; ``cdf`` interpolates
    a cumulative table built on ``grid`` (monotone PCHIP, clipped to [0, 1]).
    """

    def __init__(self, pdf_callable, support, grid=None, grid_points=2001):
        self._pdf = pdf_callable
        self.support = (float(support[0]), float(support[1]))
        if grid is None:
            grid = np.linspace(self.support[0], self.support[1], grid_points)
        values = np.array([pdf_callable(x) for x in grid])
        cumulative = integrate.cumulative_trapezoid(values, grid, initial=0.0)
        self.mass = float(cumulative[-1])
        self._cdf = PchipInterpolator(grid, np.clip(cumulative / self.mass, 0.0, 1.0))
        self.grid = grid
        self.grid_values = values

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            return self._pdf(float(x))
        return np.array([self._pdf(v) for v in x])

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            x <= self.support[0],
            0.0,
            np.where(x >= self.support[1], 1.0, self._cdf(np.clip(x, *self.support))),
        )
        return out if out.ndim else float(out)

    def moment(self, k, **quad_kwargs):
        value, _ = integrate.quad(
            lambda x: x**k * self._pdf(x),
            self.support[0],
            self.support[1],
            limit=quad_kwargs.pop("limit", 400),
            **quad_kwargs,
        )
        return value


def semicircle_self_convolution(endpoint, grid_points=2001):
    """Density of E_1 - E_2 for independent semicircle variables.

    Support [-2 endpoint, 2 endpoint]; symmetric; variance endpoint^2 / 2.
    This is the perturbative-regime marginal of imaginary parts when
    ``endpoint = sqrt(2 beta n)``.
    """
    law = SemicircleLaw(endpoint=float(endpoint))
    e_star = law.endpoint

    def pdf(s):
        s = abs(float(s))
        if s >= 2.0 * e_star:
            return 0.0
        lo, hi = s - e_star, e_star

        def integrand(theta):
            e = lo + (hi - lo) * np.sin(theta) ** 2
            jac = (hi - lo) * 2.0 * np.sin(theta) * np.cos(theta)
            return law.pdf(e) * law.pdf(e - s) * jac

        value, _ = integrate.quad(integrand, 0.0, np.pi / 2, limit=200, epsabs=1e-10)
        return value

    return NumericDensity(pdf, (-2.0 * e_star, 2.0 * e_star), grid_points=grid_points)


def mp_convolution_density(grid_points=2001):
    """Limiting real-part density at strong single-channel dissipation.

    rho(x) = 2 int_{nu_m}^{nu_M} mp(nu) mp(-nu - 2x) dnu with
    nu_m = max(0, -2x - 4), nu_M = min(4, -2x); support (-4, 0).  Equals
    the law of -(nu_1 + nu_2)/2 for independent unit-ratio MP variables.
    """
    law = MarchenkoPasturLaw(r=1)

    def pdf(x):
        x = float(x)
        if x <= -4.0 or x >= 0.0:
            return 0.0
        nu_lo = max(0.0, -2.0 * x - 4.0)
        nu_hi = min(4.0, -2.0 * x)
        if nu_hi <= nu_lo:
            return 0.0

        def integrand(theta):
            nu = nu_lo + (nu_hi - nu_lo) * np.sin(theta) ** 2
            jac = (nu_hi - nu_lo) * 2.0 * np.sin(theta) * np.cos(theta)
            return 2.0 * law.pdf(nu) * law.pdf(-nu - 2.0 * x) * jac

        value, _ = integrate.quad(integrand, 0.0, np.pi / 2, limit=200, epsabs=1e-10)
        return value

    # denser grid near the kink at x = -2 and the endpoints
    grid = np.unique(
        np.concatenate(
            [
                np.linspace(-4.0, 0.0, grid_points),
                -2.0 + 1e-9 * np.array([-1.0, 0.0, 1.0]),
            ]
        )
    )
    return NumericDensity(pdf, (-4.0, 0.0), grid=grid)


def mp_convolution_moment_series(k):
    """Moment oracle (-1/2)^k sum_j C(k, j) Cat_j Cat_{k-j}."""
    total = sum(comb(k, j) * catalan_number(j) * catalan_number(k - j) for j in range(k + 1))
    return (-0.5) ** k * total


def gap_strong(params):
    """Strong-dissipation mean gap beta n g^2 (1 - sqrt(r))^2; zero at r = 1."""
    return params.beta * params.n * params.g**2 * (1.0 - np.sqrt(params.r)) ** 2


def gap_weak(params):
    """Weak-dissipation mean gap beta n r g^2 (exact only as r grows;
    treat r = 2 comparisons with a wider tolerance)."""
    return params.beta * params.n * params.r * params.g**2


def x_spread_strong(params):
    """Strong-dissipation scale of X: 4 beta n sqrt(r) g^2, up to an O(1)
    constant (the oracle pins only the scaling)."""
    return 4.0 * params.beta * params.n * np.sqrt(params.r) * params.g**2


def classical_generator(jumps):
    """First-order generator on the stationary subspace.

    A_nm = sum_l |W^(l)_nm|^2 for n != m, diagonal fixed by column sums:
    A_mm = -sum_{k != m} A_km.  Valid generator of a classical stochastic
    equation: nonnegative off-diagonal, columns summing to zero.  The jump
    operators should be expressed in the eigenbasis of H; for statistical
    tests any fixed basis is equivalent (the Gaussian ensemble is basis
    invariant).
    """
    mats = [np.asarray(w) for w in jumps]
    n = mats[0].shape[0]
    gen = np.zeros((n, n))
    for w in mats:
        gen += np.abs(w) ** 2
    np.fill_diagonal(gen, 0.0)
    np.fill_diagonal(gen, -gen.sum(axis=0))
    return gen


@dataclass(frozen=True)
class Chi2EntryLaw:
    """Law of the off-diagonal generator entries: chi^2_k scaled by g^2.

    Equivalently Gamma(k/2, scale 2 g^2); mean k g^2, variance 2 k g^4.
    """

    k: int
    g: float
    dist: object = field(repr=False, default=None)

    @property
    def mean(self):
        return self.k * self.g**2

    @property
    def variance(self):
        return 2.0 * self.k * self.g**4

    def pdf(self, x):
        return self.dist.pdf(x)

    def cdf(self, x):
        return self.dist.cdf(x)


def chi2_entry_law(k, g):
    """chi^2 with k = r beta degrees of freedom, per-degree variance g^2."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not g > 0:
        raise ValueError(f"g must be > 0, got {g}")
    return Chi2EntryLaw(k=int(k), g=float(g), dist=stats.chi2(int(k), scale=g * g))


@dataclass
class RatioLaw:
    """Reference spacing-ratio distribution with numeric moments.

    ``statistic`` is (sigma_r / <r>)^(-1); zero marks the Poisson case
    (whose moments diverge), otherwise it is finite and of order unity.
    """

    kind: str
    mean: float
    second_moment: float
    _pdf: object = field(repr=False, default=None)
    _cdf: object = field(repr=False, default=None)

    def pdf(self, x):
        return self._pdf(np.asarray(x, dtype=float))

    def cdf(self, x):
        return self._cdf(np.asarray(x, dtype=float))

    @property
    def variance_over_mean_sq(self):
        """sigma_r^2 / <r>^2 (infinite in the Poisson case)."""
        if not np.isfinite(self.mean) or not np.isfinite(self.second_moment):
            return float("inf")
        return self.second_moment / self.mean**2 - 1.0

    @property
    def statistic(self):
        ratio = self.variance_over_mean_sq
        return 0.0 if not np.isfinite(ratio) else 1.0 / np.sqrt(ratio)

    def truncated_moment(self, order, cutoff):
        """int_0^cutoff r^order P(r) dr; grows without bound with the cutoff
        for Poisson moments of order >= 1."""
        value, _ = integrate.quad(
            lambda x: x**order * float(self._pdf(x)), 0.0, cutoff, limit=400
        )
        return value


_SURMISE_KINDS = {"gue-surmise": 2, "gue": 2, "goe-surmise": 1, "goe": 1}


def _surmise_law(kind, beta):
    def raw(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(
                x < 0, 0.0, (x + x**2) ** beta / (1.0 + x + x**2) ** (1.0 + 1.5 * beta)
            )

    norm, _ = integrate.quad(raw, 0.0, np.inf, limit=400)

    def pdf(x):
        return raw(x) / norm

    # CDF table: linear near the bulk, log-spaced into the power-law tail.
    grid = np.unique(np.concatenate([np.linspace(0.0, 20.0, 4001), np.geomspace(20.0, 1e6, 2000)]))
    pdf_values = pdf(grid)
    cumulative = integrate.cumulative_trapezoid(pdf_values, grid, initial=0.0)
    cdf_interp = PchipInterpolator(grid, np.clip(cumulative / cumulative[-1], 0.0, 1.0))

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 0.0, np.where(x >= grid[-1], 1.0, cdf_interp(np.clip(x, 0, grid[-1]))))

    mean, _ = integrate.quad(lambda x: x * pdf(x), 0.0, np.inf, limit=400)
    if beta >= 2:
        second, _ = integrate.quad(lambda x: x * x * pdf(x), 0.0, np.inf, limit=400)
    else:
        second = float("inf")  # orthogonal-class tail ~ r^-3: divergent
    return RatioLaw(kind=kind, mean=mean, second_moment=second, _pdf=pdf, _cdf=cdf)


def ratio_reference(kind):
    """Reference ratio law: 'poisson', 'gue-surmise', or 'goe-surmise'.

    Poisson is exact, P(r) = 1/(1+r)^2 with CDF r/(1+r) and median 1; the
    surmise densities are normalized numerically.
    """
    kind = kind.lower()
    if kind == "poisson":

        def pdf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, 0.0, 1.0 / (1.0 + x) ** 2)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, 0.0, x / (1.0 + x))

        return RatioLaw(
            kind=kind,
            mean=float("inf"),
            second_moment=float("inf"),
            _pdf=pdf,
            _cdf=cdf,
        )
    if kind in _SURMISE_KINDS:
        return _surmise_law(kind, _SURMISE_KINDS[kind])
    raise ValueError(f"unknown ratio law {kind!r}")
