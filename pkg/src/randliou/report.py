"""Figure-preset reports: delimited plot data plus rendered figures.

Each preset reads a completed sweep directory and writes the plot-ready
CSV files for one figure family, alongside a PNG rendering of the same
data (disable with ``figures=False``):

* ``fig1``: X and Y against g_eff per size, plus spectrum scatter panels
  when eigenvalues were recorded.
* ``fig2``: spectral density cuts at Re = R, R + X and Im = 0, Y and the
  marginals rho_I / rho_R with their analytic overlays (semicircle
  self-convolution, fitted Gaussian).  Needs recorded eigenvalues.
* ``fig3``: mean spectral gap against g_eff per size with the weak- and
  strong-dissipation oracle lines.
* ``fig4``: steady-state variance curves, effective-Hamiltonian level
  densities, the spacing-ratio histogram against the Poisson and
  unitary-surmise references, and the moment statistic against
  g_eff sqrt(n).  Needs steady-state observables.

Missing observables or an empty results directory raise before any file
is written; no partial reports are left behind.
"""

import csv
from pathlib import Path

import numpy as np

from .ensembles import ModelParams
from .errors import NumericalError
from .oracles import (
    SemicircleLaw,
    gap_strong,
    gap_weak,
    ratio_reference,
    semicircle_self_convolution,
)
from .sweep import aggregate_records, load_records

__all__ = ["PRESETS", "report", "ReportError"]

PRESETS = ("fig1", "fig2", "fig3", "fig4")


class ReportError(NumericalError):
    """The sweep directory lacks the data a preset needs."""


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _require(records, key, preset):
    if not any(key in r for r in records):
        raise ReportError(f"preset {preset} needs the '{key}' observable")


def _load(results_dir):
    records = load_records(results_dir)
    if not records:
        raise ReportError(f"no completed records under {results_dir}")
    return records


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _sizes(rows):
    return sorted({row["n"] for row in rows})


def report(results_dir, preset, out_dir=None, figures=True):
    """Write one preset's CSV plot data (and PNG) from a sweep directory.

    Returns the list of files written.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir / "report"
    records = _load(results_dir)
    builder = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4}[preset]
    staged = builder(records)  # raises before anything is written
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, header, rows in staged["tables"]:
        path = out_dir / name
        _write_csv(path, header, rows)
        written.append(path)
    if figures:
        path = out_dir / f"{preset}.png"
        staged["draw"](path)
        written.append(path)
    return written


# ---------------------------------------------------------------- fig1


def _fig1(records):
    _require(records, "summary", "fig1")
    rows = aggregate_records(records)
    spread_rows = [
        (
            r["g_eff"],
            r["n"],
            r["mean_X"],
            r["se_X"],
            r["mean_Y"],
            r["se_Y"],
        )
        for r in rows
        if "mean_X" in r
    ]
    if not spread_rows:
        raise ReportError("fig1 needs summary observables")
    tables = [
        (
            "fig1_spread.csv",
            ("g_eff", "N", "mean_X", "se_X", "mean_Y", "se_Y"),
            spread_rows,
        )
    ]
    scatter = _scatter_panels(records)
    for label, eigenvalues in scatter:
        tables.append(
            (
                f"fig1_scatter_{label}.csv",
                ("re", "im"),
                [(z[0], z[1]) for z in eigenvalues],
            )
        )

    def draw(path):
        plt = _pyplot()
        n_panels = 2 + len(scatter)
        fig, axes = plt.subplots(1, n_panels, figsize=(4 * n_panels, 3.4))
        axes = np.atleast_1d(axes)
        for idx, (label, eigenvalues) in enumerate(scatter):
            ax = axes[idx]
            pts = np.asarray(eigenvalues)
            ax.scatter(pts[:, 0], pts[:, 1], s=2, alpha=0.5)
            ax.set_title(f"spectrum, {label}")
            ax.set_xlabel("Re $\\Lambda$")
            ax.set_ylabel("Im $\\Lambda$")
        data = np.asarray(spread_rows, dtype=float)
        for col, ax, name in ((2, axes[-2], "X"), (4, axes[-1], "Y")):
            for n in sorted(set(data[:, 1])):
                sel = data[data[:, 1] == n]
                ax.errorbar(
                    sel[:, 0], sel[:, col], yerr=sel[:, col + 1],
                    marker="o", ms=3, label=f"N={int(n)}",
                )
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("$g_{eff}$")
            ax.set_ylabel(name)
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    return {"tables": tables, "draw": draw}


def _scatter_panels(records):
    with_eigs = [r for r in records if "eigenvalues" in r]
    if not with_eigs:
        return []
    n_max = max(r["n"] for r in with_eigs)
    at_nmax = [r for r in with_eigs if r["n"] == n_max and r["realization"] == 0]
    at_nmax.sort(key=lambda r: r["g_eff"])
    if not at_nmax:
        return []
    picks = sorted({0, len(at_nmax) // 2, len(at_nmax) - 1})
    return [
        (f"geff_{at_nmax[i]['g_eff']:.6g}", at_nmax[i]["eigenvalues"]) for i in picks
    ]


# ---------------------------------------------------------------- fig2


def _hist(values, bins=60):
    counts, edges = np.histogram(values, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    mass = counts.sum()
    density = counts / (mass * np.diff(edges)) if mass else counts.astype(float)
    return centers, density


def _fig2(records):
    _require(records, "eigenvalues", "fig2")
    with_eigs = [r for r in records if "eigenvalues" in r]
    n_max = max(r["n"] for r in with_eigs)
    geffs = sorted({r["g_eff"] for r in with_eigs if r["n"] == n_max})
    target = geffs[0]  # weakest point: where the perturbative overlays apply
    pool = [r for r in with_eigs if r["n"] == n_max and r["g_eff"] == target]
    beta = pool[0]["beta"]
    eigenvalues = np.array(
        [complex(re, im) for r in pool for re, im in r["eigenvalues"]]
    )
    re, im = eigenvalues.real, eigenvalues.imag
    center = re.mean()
    x_spread = re.std()
    y_spread = np.sqrt(np.mean(im**2))
    width = max(x_spread, y_spread) / 25.0

    def cut(along, across, c):
        keep = np.abs(along - c) <= width / 2
        if not keep.any():
            return np.array([c]), np.array([0.0])
        return _hist(across[keep])

    tables = []
    cuts = {}
    for name, along, across, c in (
        ("re_R", re, im, center),
        ("re_R_plus_X", re, im, center + x_spread),
        ("im_0", im, re, 0.0),
        ("im_Y", im, re, y_spread),
    ):
        centers, density = cut(along, across, c)
        cuts[name] = (centers, density)
        tables.append(
            (f"fig2_cut_{name}.csv", ("coordinate", "density"), list(zip(centers, density)))
        )

    # marginals with oracle overlays (zero modes excluded: one per record)
    nonzero = []
    for r in pool:
        eigs = np.array([complex(a, b) for a, b in r["eigenvalues"]])
        nonzero.append(np.delete(eigs, int(np.argmax(eigs.real))))
    nonzero = np.concatenate(nonzero)
    conv = semicircle_self_convolution(SemicircleLaw.for_hamiltonian(n_max, beta).endpoint)
    centers_i, density_i = _hist(nonzero.imag)
    tables.append(
        (
            "fig2_marginal_imag.csv",
            ("coordinate", "density", "oracle_convolution"),
            list(zip(centers_i, density_i, conv.pdf(centers_i))),
        )
    )
    centers_r, density_r = _hist(nonzero.real)
    mu, sigma = nonzero.real.mean(), nonzero.real.std()
    gauss = np.exp(-0.5 * ((centers_r - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
    tables.append(
        (
            "fig2_marginal_real.csv",
            ("coordinate", "density", "gaussian_fit"),
            list(zip(centers_r, density_r, gauss)),
        )
    )

    def draw(path):
        plt = _pyplot()
        fig, axes = plt.subplots(2, 3, figsize=(12, 6.5))
        for ax, (name, (centers, density)) in zip(axes.flat, cuts.items()):
            ax.plot(centers, density, drawstyle="steps-mid")
            ax.set_title(f"cut {name}")
        ax = axes.flat[4]
        ax.plot(centers_i, density_i, drawstyle="steps-mid", label="data")
        ax.plot(centers_i, conv.pdf(centers_i), label="semicircle conv")
        ax.set_title("$\\varrho_I$")
        ax.legend(fontsize=7)
        ax = axes.flat[5]
        ax.plot(centers_r, density_r, drawstyle="steps-mid", label="data")
        ax.plot(centers_r, gauss, label="gaussian")
        ax.set_title("$\\varrho_R$")
        ax.legend(fontsize=7)
        fig.suptitle(f"N={n_max}, $g_{{eff}}$={target:.3g}, pooled {len(pool)} realizations")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    return {"tables": tables, "draw": draw}


# ---------------------------------------------------------------- fig3


def _fig3(records):
    _require(records, "summary", "fig3")
    rows = aggregate_records(records)
    data = []
    for row in rows:
        if "mean_gap" not in row:
            continue
        params = ModelParams(
            n=row["n"], beta=row["beta"], r=row["r"], g=row["g"], seed=0
        )
        data.append(
            (
                row["g_eff"],
                row["n"],
                row["mean_gap"],
                row["se_gap"],
                gap_weak(params),
                gap_strong(params),
            )
        )
    if not data:
        raise ReportError("fig3 needs summary observables")
    tables = [
        (
            "fig3_gap.csv",
            ("g_eff", "N", "mean_gap", "stderr", "oracle_weak", "oracle_strong"),
            data,
        )
    ]

    def draw(path):
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 3.8))
        arr = np.asarray(data, dtype=float)
        for n in sorted(set(arr[:, 1])):
            sel = arr[arr[:, 1] == n]
            ax.errorbar(sel[:, 0], sel[:, 2], yerr=sel[:, 3], marker="o", ms=3,
                        label=f"N={int(n)}")
            ax.plot(sel[:, 0], sel[:, 4], ls="--", lw=0.8, color="gray")
            ax.plot(sel[:, 0], sel[:, 5], ls=":", lw=0.8, color="black")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("$g_{eff}$")
        ax.set_ylabel("$\\langle\\Delta\\rangle$")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    return {"tables": tables, "draw": draw}


# ---------------------------------------------------------------- fig4


def _fig4(records):
    _require(records, "steady", "fig4")
    rows = aggregate_records(records)
    var_rows = [
        (r["g_eff"], r["n"], r["mean_variance"], r["se_variance"])
        for r in rows
        if "mean_variance" in r
    ]
    if not var_rows:
        raise ReportError("fig4 needs steady-state observables")
    tables = [
        (
            "fig4a_variance.csv",
            ("g_eff", "N", "mean_variance", "stderr"),
            var_rows,
        )
    ]

    n_max = max(r["n"] for r in records)
    level_panels = []
    with_levels = [r for r in records if "levels" in r and r["n"] == n_max]
    if with_levels:
        geffs = sorted({r["g_eff"] for r in with_levels})
        for tag, target in (("weak", geffs[0]), ("strong", geffs[-1])):
            pool = np.concatenate(
                [r["levels"] for r in with_levels if r["g_eff"] == target]
            )
            centers, density = _hist(pool)
            level_panels.append((tag, target, centers, density))
            tables.append(
                (
                    f"fig4_levels_{tag}.csv",
                    ("epsilon", "density"),
                    list(zip(centers, density)),
                )
            )

    ratio_panels = []
    with_ratios = [r for r in records if "ratios" in r and r["n"] == n_max]
    if with_ratios:
        poisson = ratio_reference("poisson")
        surmise = ratio_reference("gue-surmise")
        geffs = sorted({r["g_eff"] for r in with_ratios})
        edges = np.linspace(0.0, 10.0, 51)
        centers = 0.5 * (edges[1:] + edges[:-1])
        for tag, target in (("weak", geffs[0]), ("strong", geffs[-1])):
            pooled = np.concatenate(
                [r["ratios"] for r in with_ratios if r["g_eff"] == target]
            )
            counts, _ = np.histogram(pooled, bins=edges)
            density = counts / (pooled.size * np.diff(edges))
            ratio_panels.append((tag, target, centers, density))
            tables.append(
                (
                    f"fig4d_ratios_{tag}.csv",
                    ("r", "density", "poisson", "gue_surmise"),
                    list(zip(centers, density, poisson.pdf(centers), surmise.pdf(centers))),
                )
            )
        stat_rows = []
        for row in rows:
            if "ratio_std" in row and row["ratio_std"] > 0:
                stat_rows.append(
                    (
                        row["g_eff"],
                        row["n"],
                        row["g_eff"] * np.sqrt(row["n"]),
                        row["ratio_mean"] / row["ratio_std"],
                    )
                )
        if stat_rows:
            tables.append(
                (
                    "fig4e_ratio_statistic.csv",
                    ("g_eff", "N", "geff_sqrtN", "statistic"),
                    stat_rows,
                )
            )

    def draw(path):
        plt = _pyplot()
        fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.6))
        ax = axes[0]
        arr = np.asarray(var_rows, dtype=float)
        for n in sorted(set(arr[:, 1])):
            sel = arr[arr[:, 1] == n]
            ax.errorbar(sel[:, 0], sel[:, 2], yerr=sel[:, 3], marker="o", ms=3,
                        label=f"N={int(n)}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("$g_{eff}$")
        ax.set_ylabel("$\\sigma^2_{\\rho_0}$")
        ax.legend(fontsize=7)
        ax = axes[1]
        for tag, target, centers, density in level_panels:
            ax.plot(centers, density, drawstyle="steps-mid",
                    label=f"{tag} ($g_{{eff}}$={target:.3g})")
        ax.set_xlabel("$\\varepsilon$")
        ax.set_ylabel("$\\varrho(\\varepsilon)$")
        if level_panels:
            ax.legend(fontsize=7)
        ax = axes[2]
        for tag, target, centers, density in ratio_panels:
            ax.plot(centers, density, drawstyle="steps-mid", label=tag)
        if ratio_panels:
            grid = np.linspace(0.0, 10.0, 400)
            ax.plot(grid, ratio_reference("poisson").pdf(grid), "k--", lw=0.8,
                    label="Poisson")
            ax.plot(grid, ratio_reference("gue-surmise").pdf(grid), "k:", lw=0.8,
                    label="GUE surmise")
            ax.legend(fontsize=7)
        ax.set_xlabel("r")
        ax.set_ylabel("P(r)")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)

    return {"tables": tables, "draw": draw}
