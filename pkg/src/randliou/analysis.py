"""Scaling-exponent framework, large-n extrapolation, and collapse fitting.

Each observable Q (decay-rate spread X, gap Delta, steady-state variance
sigma^2) shows three regimes in g_eff with size-dependent boundaries
(beta n)^kappa.  Within the outer regimes Q follows
Q ~ g_eff^2 (beta n)^nu f[(beta n)^(-kappa) g_eff] with scaling functions
approaching power laws x^0 / x^lambda on the matching side, which forces

    lambda (kappa_greater - kappa_less) = nu_D - nu_P.

The builtin exponent table carries both channel classes (r = 1 and r > 1).
For the steady-state variance the literature scaling forms carry no
explicit g_eff^2 prefactor; its nu values refer to plain
Q ~ (beta n)^nu f(...), which the collapse helpers support through
``geff_squared_prefactor=False``.

Large-n limits are estimated as the y-intercept of a least-squares line in
(beta n)^(-1).
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "ExponentRecord",
    "ExtrapolationResult",
    "PowerLawFit",
    "CollapseFit",
    "check_exponent_constraint",
    "builtin_exponent_table",
    "extrapolate_largeN",
    "fit_power_law",
    "collapse_quality",
    "optimize_exponents",
]


@dataclass(frozen=True)
class ExponentRecord:
    """One observable's scaling exponents (nu_P, nu_C, nu_D, lambda, kappas).

    ``lam`` is None where the crossover exponent is undefined (the gap for
    r > 1, whose two asymptotic regimes share nu and kappa so no matching
    power law exists).  ``geff_squared_prefactor`` records the convention
    the nu values refer to.
    """

    observable: str
    r_class: str  # "r=1" or "r>1"
    nu_p: float
    nu_c: float
    nu_d: float
    lam: float | None
    kappa_less: float
    kappa_greater: float
    geff_squared_prefactor: bool = True

    @property
    def defined(self):
        return self.lam is not None


def check_exponent_constraint(record, tol=1e-12):
    """Evaluate lambda (kappa_greater - kappa_less) - (nu_D - nu_P).

    Returns (ok, residual); raises on records with missing exponents.
    """
    if record.lam is None:
        raise ValueError(
            f"lambda undefined for {record.observable} ({record.r_class}); "
            "constraint not applicable"
        )
    for name in ("nu_p", "nu_d", "kappa_less", "kappa_greater"):
        if getattr(record, name) is None:
            raise ValueError(f"missing exponent {name}")
    residual = record.lam * (record.kappa_greater - record.kappa_less) - (
        record.nu_d - record.nu_p
    )
    return abs(residual) <= tol, float(residual)


def builtin_exponent_table():
    """The six (observable, channel-class) exponent rows.

    X rows: nu = (0, 1/2, 1/2), lambda = 2, kappa = (-1/4, 0) for both
    classes.  Gap rows: nu_P' = nu_C' = 1/2 with nu_D' = 1/2 (r > 1,
    lambda undefined) or nu_D' = -3/2, lambda = -8/3, kappa_greater = 3/4
    (r = 1).  Steady-state variance rows (no g_eff^2 prefactor):
    nu = (-3, -2, -2), lambda = 2, kappa = (-1/2, 0) for r > 1 and
    nu = (-3, -2, -1), lambda = 8/5, kappa = (-1/2, 3/4) for r = 1.
    """
    return [
        ExponentRecord("X", "r=1", 0.0, 0.5, 0.5, 2.0, -0.25, 0.0),
        ExponentRecord("X", "r>1", 0.0, 0.5, 0.5, 2.0, -0.25, 0.0),
        ExponentRecord("gap", "r=1", 0.5, 0.5, -1.5, -8.0 / 3.0, 0.0, 0.75),
        ExponentRecord("gap", "r>1", 0.5, 0.5, 0.5, None, 0.0, 0.0),
        ExponentRecord(
            "sigma2", "r=1", -3.0, -2.0, -1.0, 1.6, -0.5, 0.75, geff_squared_prefactor=False
        ),
        ExponentRecord(
            "sigma2", "r>1", -3.0, -2.0, -2.0, 2.0, -0.5, 0.0, geff_squared_prefactor=False
        ),
    ]


@dataclass(frozen=True)
class ExtrapolationResult:
    """Least-squares line y = intercept + slope / (beta n)."""

    intercept: float
    slope: float
    residual: float


def extrapolate_largeN(values, beta):
    """Infinite-size estimate from a linear fit in (beta n)^(-1).

    ``values`` maps n -> observable value (scalars or arrays averaged on
    the fly); needs at least three distinct sizes.
    """
    sizes = sorted(values)
    if len(sizes) < 3:
        raise ValueError(f"need >= 3 distinct sizes, got {len(sizes)}")
    x = np.array([1.0 / (beta * n) for n in sizes])
    y = np.array([float(np.mean(values[n])) for n in sizes])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return ExtrapolationResult(
        intercept=float(coef[0]), slope=float(coef[1]), residual=residual
    )


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    stderr: float


def fit_power_law(x, y, window=None):
    """Least squares of log y on log x, optionally inside a window on x.

    Requires at least four positive points; ``stderr`` is the standard
    error of the fitted exponent.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, y = x[keep], y[keep]
    if x.size < 4:
        raise ValueError(f"need >= 4 points in the window, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ValueError("all x identical; exponent undetermined")
    coef, cov = np.polyfit(lx, ly, 1, cov=True)
    stderr = float(np.sqrt(cov[0, 0])) if np.isfinite(cov[0, 0]) else 0.0
    return PowerLawFit(
        exponent=float(coef[0]), amplitude=float(np.exp(coef[1])), stderr=stderr
    )


def _rescaled_curves(curves, beta, nu, kappa, geff_squared_prefactor):
    rescaled = {}
    for n, (g_eff, q) in curves.items():
        g_eff = np.asarray(g_eff, dtype=float)
        q = np.asarray(q, dtype=float)
        if np.any(g_eff <= 0) or np.any(q <= 0):
            raise ValueError("collapse needs positive g_eff and Q values")
        bn = float(beta * n)
        x = np.log(g_eff) - kappa * np.log(bn)
        y = np.log(q) - nu * np.log(bn)
        if geff_squared_prefactor:
            y = y - 2.0 * np.log(g_eff)
        order = np.argsort(x)
        rescaled[n] = (x[order], y[order])
    return rescaled


def collapse_quality(curves, nu, kappa, beta, geff_squared_prefactor=True, grid_points=50):
    """Mean squared log-deviation from the pointwise median after rescaling.

    Curves are given as {n: (g_eff array, Q array)}; each is replotted as
    Q / (g_eff^2 (beta n)^nu) against g_eff (beta n)^(-kappa) and compared
    on the common overlap window.  Zero means perfect collapse.
    """
    if len(curves) < 2:
        raise ValueError("need >= 2 curves to measure a collapse")
    rescaled = _rescaled_curves(curves, beta, nu, kappa, geff_squared_prefactor)
    lo = max(x.min() for x, _ in rescaled.values())
    hi = min(x.max() for x, _ in rescaled.values())
    if hi <= lo:
        raise ValueError("rescaled curves do not overlap")
    grid = np.linspace(lo, hi, grid_points)
    stack = np.array([np.interp(grid, x, y) for x, y in rescaled.values()])
    median = np.median(stack, axis=0)
    return float(np.mean((stack - median) ** 2))


@dataclass(frozen=True)
class CollapseFit:
    nu: float
    kappa: float
    quality: float
    converged: bool
    degenerate: bool


def optimize_exponents(
    curves,
    beta,
    initial=(0.0, 0.0),
    geff_squared_prefactor=True,
    xatol=1e-4,
    max_iterations=2000,
):
    """Derivative-free minimization of :func:`collapse_quality` over (nu, kappa).

    Nelder-Mead from ``initial``; flat data leaves kappa undetermined,
    which is flagged through ``degenerate`` (quality insensitive to a
    +-0.1 kappa probe).  Non-convergence returns the best point, flagged.
    """

    def objective(point):
        try:
            return collapse_quality(
                curves, point[0], point[1], beta, geff_squared_prefactor
            )
        except ValueError:
            return np.inf

    result = optimize.minimize(
        objective,
        x0=np.asarray(initial, dtype=float),
        method="Nelder-Mead",
        options={"xatol": xatol, "fatol": 1e-12, "maxiter": max_iterations},
    )
    nu, kappa = (float(v) for v in result.x)
    quality = float(result.fun)
    probe = max(abs(objective((nu, kappa + 0.1)) - quality),
                abs(objective((nu, kappa - 0.1)) - quality))
    degenerate = probe <= max(10.0 * quality, 1e-12)
    return CollapseFit(
        nu=nu,
        kappa=kappa,
        quality=quality,
        converged=bool(result.success),
        degenerate=degenerate,
    )
