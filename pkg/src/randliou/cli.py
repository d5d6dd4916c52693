"""Command-line interface.

Subcommands: ``build`` (assemble one instance and dump L), ``spectrum``
(diagonalize one instance), ``steady`` (steady-state report), ``sweep``
(seeded ensemble sweep from flags or a JSON config), ``oracle`` (tabulate
any analytic law), ``collapse`` (exponent fitting on a sweep directory),
``report`` (figure presets).  Worker count can be forced with the
RANDLIOU_WORKERS environment variable.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from ._version import __version__
from .analysis import (
    builtin_exponent_table,
    check_exponent_constraint,
    optimize_exponents,
)
from .ensembles import ModelParams, sample_hamiltonian, sample_jump_operators
from .errors import NumericalError
from .liouvillian import build_liouvillian, dump_superoperator
from .oracles import (
    MarchenkoPasturLaw,
    SemicircleLaw,
    chi2_entry_law,
    gap_strong,
    gap_weak,
    mp_convolution_density,
    ratio_reference,
    semicircle_self_convolution,
    x_spread_strong,
)
from .report import PRESETS, report
from .spectra import diagonalize, spectrum_record, summarize
from .steadystate import effective_hamiltonian, extract_steady_state, spacing_ratios
from .sweep import ENV_WORKERS, OBSERVABLES, SweepConfig, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_instance_args(parser):
    parser.add_argument("--n", type=int, required=True, help="Hilbert-space dimension")
    parser.add_argument("--beta", type=int, default=2, choices=(1, 2), help="Dyson index")
    parser.add_argument("--r", type=int, default=2, help="number of jump operators")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--g", type=float, help="bare dissipation strength")
    group.add_argument("--geff", type=float, help="effective strength (2 r beta N)^(1/4) g")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--realization", type=int, default=0, help="realization index")


def _params_from(args):
    if args.geff is not None:
        return ModelParams.from_geff(
            args.n, args.beta, args.r, args.geff, args.seed, args.realization
        )
    return ModelParams(args.n, args.beta, args.r, args.g, args.seed, args.realization)


def _build_instance(params):
    hamiltonian = sample_hamiltonian(params)
    jumps = sample_jump_operators(params)
    return build_liouvillian(hamiltonian, jumps, params=params)


def _cmd_build(args):
    params = _params_from(args)
    superop = _build_instance(params)
    dump_superoperator(superop, args.out)
    print(
        f"wrote {args.out}: n={params.n} beta={params.beta} r={params.r} "
        f"g={params.g:.6g} g_eff={params.g_eff:.6g} "
        f"||L||_F={superop.frobenius_norm:.6g} trace_defect={superop.trace_defect():.3e}"
    )
    return EXIT_OK


def _cmd_spectrum(args):
    params = _params_from(args)
    superop = _build_instance(params)
    spectrum = diagonalize(
        superop, vectors=args.vectors, residual_sample=args.residual_sample
    )
    summary = summarize(spectrum, params)
    record = spectrum_record(params, spectrum, summary)
    if args.out:
        with open(args.out, "a") as fh:
            fh.write(json.dumps(record) + "\n")
    print(
        f"n={params.n} g_eff={params.g_eff:.6g}: R={summary.R:.6g} "
        f"X={summary.X:.6g} Y={summary.Y:.6g} gap={summary.gap:.6g} "
        f"zero_mode={spectrum.zero_mode:.3e}"
    )
    return EXIT_OK


def _cmd_steady(args):
    params = _params_from(args)
    superop = _build_instance(params)
    state = extract_steady_state(superop)
    eff = effective_hamiltonian(state, p_min=args.p_min)
    stats = spacing_ratios(eff)
    if args.out:
        record = {
            "n": params.n,
            "beta": params.beta,
            "r": params.r,
            "g": params.g,
            "g_eff": params.g_eff,
            "seed": params.seed,
            "realization": params.realization,
            "probabilities": [float(p) for p in state.probabilities],
            "purity": state.purity,
            "variance": state.variance,
            "residual": state.residual,
            "epsilons": [float(e) for e in eff.epsilons],
            "discarded": eff.discarded_count,
            "ratios": [float(v) for v in stats.ratios],
            "ratio_mean": stats.mean,
            "ratio_std": stats.std,
        }
        with open(args.out, "a") as fh:
            fh.write(json.dumps(record) + "\n")
    print(
        f"n={params.n} g_eff={params.g_eff:.6g}: purity={state.purity:.6g} "
        f"variance={state.variance:.6g} min_p={state.min_eigenvalue:.3e} "
        f"residual={state.residual:.3e} ratio_mean={stats.mean:.4f}"
    )
    return EXIT_OK


def _cmd_sweep(args):
    if args.config:
        config = SweepConfig.from_json(args.config)
        if args.out:
            config = SweepConfig.from_dict({**config.to_dict(), "out_dir": args.out})
    else:
        missing = [
            flag
            for flag, value in (
                ("--n-list", args.n_list),
                ("--out", args.out),
            )
            if not value
        ]
        if args.geff_min is None and not args.geff_list:
            missing.append("--geff-min/--geff-max/--geff-points or --geff-list")
        if missing:
            _usage(f"missing {', '.join(missing)}")
            return EXIT_USAGE
        if args.geff_list:
            grid = tuple(float(v) for v in args.geff_list.split(","))
        else:
            grid = SweepConfig.log_grid(args.geff_min, args.geff_max, args.geff_points)
        config = SweepConfig(
            n_list=tuple(int(v) for v in args.n_list.split(",")),
            beta=args.beta,
            r=args.r,
            realizations=args.realizations,
            seed=args.seed,
            out_dir=args.out,
            geff_grid=grid,
            observables=tuple(args.observables.split(",")),
            workers=args.workers,
            blas_threads=args.blas_threads,
            residual_sample=args.residual_sample,
        )
    workers_env = os.environ.get(ENV_WORKERS)
    if workers_env:
        config = SweepConfig.from_dict({**config.to_dict(), "workers": int(workers_env)})
    result = run_sweep(config, progress=not args.quiet)
    print(
        f"sweep complete: {result.completed} realizations "
        f"({result.failed} failed) -> {result.out_dir}"
    )
    return EXIT_OK


def _usage(message):
    print(f"error: {message}", file=sys.stderr)
    return False


def _parse_grid(spec):
    try:
        lo, hi, count = spec.split(":")
        return np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise ValueError(f"grid must be 'min:max:count', got {spec!r}") from exc


def _cmd_oracle(args):
    params = None
    if args.n is not None:
        params = ModelParams(
            n=args.n, beta=args.beta, r=args.r, g=args.g if args.g else 1.0, seed=0
        )
        if args.geff is not None:
            params = ModelParams.from_geff(args.n, args.beta, args.r, args.geff, 0)
    law = args.law
    if law in ("gap-strong", "gap-weak", "x-strong"):
        if params is None or (args.g is None and args.geff is None):
            return _usage(f"{law} needs --n/--beta/--r and --g or --geff") or EXIT_USAGE
        value = {"gap-strong": gap_strong, "gap-weak": gap_weak, "x-strong": x_spread_strong}[
            law
        ](params)
        print(f"{law}({params.n},{params.beta},{params.r},g={params.g:.6g}) = {value:.17g}")
        return EXIT_OK

    grid = _parse_grid(args.grid) if args.grid else None
    if law == "semicircle":
        dist = SemicircleLaw.for_hamiltonian(args.n, args.beta) if args.n else SemicircleLaw(
            args.estar or 2.0
        )
        if grid is None:
            grid = np.linspace(-dist.endpoint, dist.endpoint, 401)
        values = dist.pdf(grid)
    elif law == "semicircle-convolution":
        endpoint = (
            SemicircleLaw.for_hamiltonian(args.n, args.beta).endpoint
            if args.n
            else (args.estar or 2.0)
        )
        dist = semicircle_self_convolution(endpoint)
        if grid is None:
            grid = np.linspace(*dist.support, 401)
        values = dist.pdf(grid)
    elif law == "mp":
        dist = MarchenkoPasturLaw(r=args.r)
        if grid is None:
            grid = np.linspace(max(dist.xi_minus, 1e-9), dist.xi_plus, 401)
        values = dist.pdf(grid)
    elif law == "mp-convolution":
        dist = mp_convolution_density()
        if grid is None:
            grid = np.linspace(-4.0, 0.0, 401)
        values = dist.pdf(grid)
    elif law == "chi2":
        if args.g is None:
            return _usage("chi2 needs --g (and --k)") or EXIT_USAGE
        dist = chi2_entry_law(args.k, args.g)
        if grid is None:
            grid = np.linspace(0.0, dist.mean + 8 * np.sqrt(dist.variance), 401)
        values = dist.pdf(grid)
    elif law.startswith("ratio-"):
        dist = ratio_reference(law.removeprefix("ratio-"))
        if grid is None:
            grid = np.linspace(0.0, 10.0, 401)
        values = dist.pdf(grid)
    else:
        return _usage(f"unknown law {law!r}") or EXIT_USAGE

    writer = csv.writer(open(args.out, "w", newline="")) if args.out else csv.writer(sys.stdout)
    writer.writerow(("x", "density"))
    for x, v in zip(grid, values):
        writer.writerow((format(float(x), ".17g"), format(float(v), ".17g")))
    return EXIT_OK


def _cmd_collapse(args):
    if args.check_table:
        for record in builtin_exponent_table():
            if not record.defined:
                print(f"{record.observable} ({record.r_class}): lambda undefined, skipped")
                continue
            ok, residual = check_exponent_constraint(record)
            print(
                f"{record.observable} ({record.r_class}): constraint "
                f"{'ok' if ok else 'VIOLATED'} (residual {residual:.2e})"
            )
        return EXIT_OK
    from .sweep import aggregate_records, load_records

    records = load_records(args.results)
    if not records:
        raise NumericalError(f"no records under {args.results}")
    rows = aggregate_records(records)
    key = {"X": "mean_X", "gap": "mean_gap", "sigma2": "mean_variance"}[args.observable]
    curves = {}
    for row in rows:
        if key not in row:
            continue
        curves.setdefault(row["n"], ([], []))
        curves[row["n"]][0].append(row["g_eff"])
        curves[row["n"]][1].append(row[key])
    if len(curves) < 2:
        raise NumericalError("collapse needs >= 2 sizes with the chosen observable")
    beta = rows[0]["beta"]
    fit = optimize_exponents(
        {n: (np.array(x), np.array(y)) for n, (x, y) in curves.items()},
        beta,
        initial=(args.nu0, args.kappa0),
        geff_squared_prefactor=not args.no_geff_prefactor,
    )
    print(
        f"{args.observable}: nu={fit.nu:.4f} kappa={fit.kappa:.4f} "
        f"quality={fit.quality:.3e} converged={fit.converged} degenerate={fit.degenerate}"
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(
                {
                    "observable": args.observable,
                    "nu": fit.nu,
                    "kappa": fit.kappa,
                    "quality": fit.quality,
                    "converged": fit.converged,
                    "degenerate": fit.degenerate,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
    return EXIT_OK


def _cmd_report(args):
    written = report(args.results, args.preset, args.out, figures=not args.no_figures)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="randliou", description=__doc__)
    parser.add_argument("--version", action="version", version=f"randliou {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build one instance and dump L")
    _add_instance_args(p_build)
    p_build.add_argument("--out", required=True, help="binary dump path")
    p_build.set_defaults(func=_cmd_build)

    p_spec = sub.add_parser("spectrum", help="diagonalize one instance")
    _add_instance_args(p_spec)
    p_spec.add_argument("--vectors", action="store_true", help="keep right eigenvectors")
    p_spec.add_argument("--residual-sample", type=int, default=10)
    p_spec.add_argument("--out", help="append a JSON-lines spectrum record here")
    p_spec.set_defaults(func=_cmd_spectrum)

    p_steady = sub.add_parser("steady", help="steady-state report for one instance")
    _add_instance_args(p_steady)
    p_steady.add_argument("--p-min", type=float, default=1e-12)
    p_steady.add_argument("--out", help="append a JSON-lines steady record here")
    p_steady.set_defaults(func=_cmd_steady)

    p_sweep = sub.add_parser("sweep", help="run a seeded ensemble sweep")
    p_sweep.add_argument("--config", help="JSON sweep configuration")
    p_sweep.add_argument("--n-list", help="comma-separated sizes")
    p_sweep.add_argument("--beta", type=int, default=2, choices=(1, 2))
    p_sweep.add_argument("--r", type=int, default=2)
    p_sweep.add_argument("--geff-min", type=float)
    p_sweep.add_argument("--geff-max", type=float)
    p_sweep.add_argument("--geff-points", type=int)
    p_sweep.add_argument("--geff-list", help="comma-separated explicit g_eff grid")
    p_sweep.add_argument("--realizations", type=int, default=20)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--observables", default="spectrum,steady",
                         help=f"comma-separated subset of {','.join(OBSERVABLES)}")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--blas-threads", type=int, default=1)
    p_sweep.add_argument("--residual-sample", type=int, default=10)
    p_sweep.add_argument("--out", help="output directory")
    p_sweep.add_argument("--quiet", action="store_true")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="tabulate an analytic law")
    p_oracle.add_argument(
        "--law",
        required=True,
        choices=(
            "semicircle",
            "semicircle-convolution",
            "mp",
            "mp-convolution",
            "gap-strong",
            "gap-weak",
            "x-strong",
            "chi2",
            "ratio-poisson",
            "ratio-gue",
            "ratio-goe",
        ),
    )
    p_oracle.add_argument("--n", type=int)
    p_oracle.add_argument("--beta", type=int, default=2, choices=(1, 2))
    p_oracle.add_argument("--r", type=int, default=2)
    p_oracle.add_argument("--g", type=float)
    p_oracle.add_argument("--geff", type=float)
    p_oracle.add_argument("--k", type=int, default=4, help="chi2 degrees of freedom")
    p_oracle.add_argument("--estar", type=float, help="semicircle endpoint override")
    p_oracle.add_argument("--grid", help="tabulation grid min:max:count")
    p_oracle.add_argument("--out", help="CSV output (default stdout)")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_collapse = sub.add_parser("collapse", help="fit collapse exponents on a sweep")
    p_collapse.add_argument("--results", help="sweep output directory")
    p_collapse.add_argument("--observable", choices=("X", "gap", "sigma2"), default="X")
    p_collapse.add_argument("--nu0", type=float, default=0.0)
    p_collapse.add_argument("--kappa0", type=float, default=0.0)
    p_collapse.add_argument("--no-geff-prefactor", action="store_true",
                            help="rescale Q/(beta N)^nu instead of Q/(g_eff^2 (beta N)^nu)")
    p_collapse.add_argument("--check-table", action="store_true",
                            help="validate the builtin exponent table and exit")
    p_collapse.add_argument("--out", help="write the fit as JSON here")
    p_collapse.set_defaults(func=_cmd_collapse)

    p_report = sub.add_parser("report", help="figure-preset plot data + figures")
    p_report.add_argument("--results", required=True, help="sweep output directory")
    p_report.add_argument("--preset", required=True, choices=PRESETS)
    p_report.add_argument("--out", help="report directory (default <results>/report)")
    p_report.add_argument("--no-figures", action="store_true", help="CSV only")
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
