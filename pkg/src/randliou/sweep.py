"""Seeded ensemble sweeps with crash-safe persistence.

A sweep walks (n, coupling grid, realization) triples, runs the
sample -> build -> diagonalize -> summarize -> steady-state pipeline per
realization, and appends one JSON record per completed realization to
``records.jsonl`` in the output directory.  Killing a sweep loses at most
the in-flight realizations; rerunning with the same configuration resumes
from what is on disk.  On completion the record file is rewritten in task
order and the aggregate tables are emitted, so finished directories are
byte-identical across runs and across worker counts.

Workers are separate spawned processes with their BLAS thread count pinned
through the environment (default 1 thread per worker); this is what makes
results independent of how many workers happen to run.  Realization k at
every grid point reuses the same random-matrix draws (streams are keyed by
(seed, realization, stream) only), which gives smooth curves in g_eff via
common random numbers.

The grid is specified in g_eff by default, the coordinate in which all
regime boundaries are expressed; a bare-g grid is accepted too.
"""

import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from ._version import __version__
from .ensembles import ModelParams, sample_hamiltonian, sample_jump_operators
from .errors import NumericalError
from .liouvillian import build_liouvillian
from .spectra import SUMMARY_FIELDS, diagonalize, summarize
from .steadystate import (
    effective_hamiltonian,
    extract_steady_state,
    spacing_ratios,
)

__all__ = [
    "OBSERVABLES",
    "SweepConfig",
    "SweepResult",
    "run_sweep",
    "load_records",
    "load_failures",
    "aggregate_records",
    "ENV_WORKERS",
]

#: Recordable observables. "spectrum" drives the diagonalization (summary
#: fields), "eigenvalues" additionally persists them; "steady" extracts
#: rho_0 (purity/variance), "levels" persists the -log p_i spectrum and
#: "ratios" the spacing ratios (both imply "steady").
OBSERVABLES = ("spectrum", "eigenvalues", "steady", "levels", "ratios")

ENV_WORKERS = "RANDLIOU_WORKERS"

_BLAS_ENV_NAMES = (
    "OPENBLAS_NUM_THREADS",
    "OMP_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


@dataclass(frozen=True)
class SweepConfig:
    """Full sweep specification; serialized verbatim into config.json.

    Exactly one of ``geff_grid`` / ``g_grid`` must be set.  ``workers``
    does not alter results and is excluded from the resume identity check.
    """

    n_list: tuple
    beta: int
    r: int
    realizations: int
    seed: int
    out_dir: str
    geff_grid: tuple | None = None
    g_grid: tuple | None = None
    observables: tuple = ("spectrum", "steady")
    workers: int = 1
    blas_threads: int = 1
    residual_sample: int = 10
    p_min: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.geff_grid is not None:
            object.__setattr__(self, "geff_grid", tuple(float(g) for g in self.geff_grid))
        if self.g_grid is not None:
            object.__setattr__(self, "g_grid", tuple(float(g) for g in self.g_grid))
        object.__setattr__(self, "observables", tuple(self.observables))
        if not self.n_list:
            raise ValueError("n_list must be non-empty")
        if (self.geff_grid is None) == (self.g_grid is None):
            raise ValueError("set exactly one of geff_grid / g_grid")
        grid = self.grid
        if not grid:
            raise ValueError("coupling grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("coupling grid must be strictly increasing")
        if any(g <= 0 for g in grid):
            raise ValueError("couplings must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ValueError(f"unknown observables {sorted(unknown)}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def grid(self):
        return self.geff_grid if self.geff_grid is not None else self.g_grid

    @property
    def grid_is_geff(self):
        return self.geff_grid is not None

    def params_for(self, n, grid_index, realization):
        value = self.grid[grid_index]
        if self.grid_is_geff:
            return ModelParams.from_geff(
                n, self.beta, self.r, value, self.seed, realization
            )
        return ModelParams(n, self.beta, self.r, value, self.seed, realization)

    @staticmethod
    def log_grid(geff_min, geff_max, points):
        """Log-spaced g_eff grid with explicit endpoints."""
        if points < 1:
            raise ValueError("points must be >= 1")
        if points == 1:
            if geff_min != geff_max:
                raise ValueError("single-point grid needs geff_min == geff_max")
            return (float(geff_min),)
        return tuple(np.geomspace(geff_min, geff_max, points))

    def to_dict(self):
        return {"version": __version__, **asdict(self)}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data.pop("version", None)
        lists = {k: data.pop(k) for k in ("n_list", "geff_grid", "g_grid", "observables") if k in data}
        return cls(
            n_list=tuple(lists.get("n_list", ())),
            geff_grid=tuple(lists["geff_grid"]) if lists.get("geff_grid") else None,
            g_grid=tuple(lists["g_grid"]) if lists.get("g_grid") else None,
            observables=tuple(lists.get("observables", ("spectrum", "steady"))),
            **data,
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def resume_identity(self):
        data = self.to_dict()
        for transient in ("version", "workers", "out_dir"):
            data.pop(transient, None)
        return data


def _needs_spectrum(observables):
    return "spectrum" in observables or "eigenvalues" in observables


def _needs_steady(observables):
    return bool({"steady", "levels", "ratios"} & set(observables))


def run_realization(config_dict, n, grid_index, realization):
    """Compute one realization's record; importable for standalone replay."""
    config = SweepConfig.from_dict(config_dict)
    params = config.params_for(n, grid_index, realization)
    record = {
        "n": params.n,
        "beta": params.beta,
        "r": params.r,
        "g": params.g,
        "g_eff": params.g_eff,
        "seed": params.seed,
        "grid_index": grid_index,
        "realization": realization,
    }
    hamiltonian = sample_hamiltonian(params)
    jumps = sample_jump_operators(params)
    superop = build_liouvillian(hamiltonian, jumps, params=params)
    if _needs_spectrum(config.observables):
        spectrum = diagonalize(superop, residual_sample=config.residual_sample)
        summary = summarize(spectrum, params)
        record["summary"] = summary.as_dict()
        record["max_residual"] = spectrum.max_residual
        if "eigenvalues" in config.observables:
            record["eigenvalues"] = [
                [float(z.real), float(z.imag)] for z in spectrum.eigenvalues
            ]
    if _needs_steady(config.observables):
        state = extract_steady_state(superop)
        record["steady"] = {
            "purity": state.purity,
            "variance": state.variance,
            "min_p": state.min_eigenvalue,
            "residual": state.residual,
        }
        if "levels" in config.observables or "ratios" in config.observables:
            eff = effective_hamiltonian(state, p_min=config.p_min)
            record["steady"]["discarded"] = eff.discarded_count
            if "levels" in config.observables:
                record["levels"] = [float(e) for e in eff.epsilons]
            if "ratios" in config.observables:
                stats = spacing_ratios(eff)
                record["ratios"] = [float(v) for v in stats.ratios]
                record["steady"]["ratio_mean"] = stats.mean
                record["steady"]["ratio_std"] = stats.std
    return record


def _task(payload):
    config_dict, n, grid_index, realization = payload
    try:
        record = run_realization(config_dict, n, grid_index, realization)
        return (n, grid_index, realization), record, None
    except (NumericalError, np.linalg.LinAlgError, sla.LinAlgError) as exc:
        failure = {
            "n": n,
            "grid_index": grid_index,
            "realization": realization,
            "seed": config_dict["seed"],
            "error": type(exc).__name__,
            "message": str(exc),
        }
        return (n, grid_index, realization), None, failure


@contextmanager
def _pinned_blas_env(threads):
    saved = {name: os.environ.get(name) for name in _BLAS_ENV_NAMES}
    for name in _BLAS_ENV_NAMES:
        os.environ[name] = str(threads)
    try:
        yield
    finally:
        for name, value in saved.items():
            if value is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = value


def _read_jsonl(path):
    items = []
    if not path.exists():
        return items
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                items.append(json.loads(line))
            except json.JSONDecodeError:
                # torn tail from a killed run; the realization is redone
                break
    return items


def _rewrite_sorted(path, items, key):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        for item in sorted(items, key=key):
            fh.write(json.dumps(item) + "\n")
    os.replace(tmp, path)


_TASK_KEY = ("n", "grid_index", "realization")


def _task_key(item):
    return tuple(item[k] for k in _TASK_KEY)


@dataclass
class SweepResult:
    """Aggregated sweep outcome plus where everything was persisted."""

    config: SweepConfig
    rows: list = field(repr=False)
    completed: int
    failed: int
    out_dir: Path
    records_path: Path
    aggregate_path: Path

    def table(self):
        """Rows keyed by (n, g_eff)."""
        return {(row["n"], row["g_eff"]): row for row in self.rows}


def run_sweep(config, progress=False):
    """Run (or resume) a sweep; returns the aggregated :class:`SweepResult`.

    Deterministic for a given master seed: every realization draws from
    its own (seed, realization, stream) generator, records are keyed by
    (n, grid_index, realization), and the final files are sorted in task
    order.  Failed realizations are logged to ``failures.jsonl`` with seed
    and error class, never aborting the sweep.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_path = out_dir / "config.json"
    if config_path.exists():
        existing = SweepConfig.from_json(config_path)
        if existing.resume_identity() != config.resume_identity():
            raise ValueError(
                f"{config_path} holds a different sweep; refusing to mix results"
            )
    else:
        config.write_json(config_path)

    records_path = out_dir / "records.jsonl"
    failures_path = out_dir / "failures.jsonl"
    records = _read_jsonl(records_path)
    failures = _read_jsonl(failures_path)
    done = {_task_key(r) for r in records} | {_task_key(f) for f in failures}

    tasks = [
        (n, gi, k)
        for n in config.n_list
        for gi in range(len(config.grid))
        for k in range(config.realizations)
    ]
    pending = [t for t in tasks if t not in done]

    config_dict = config.to_dict()
    if pending:
        with _pinned_blas_env(config.blas_threads):
            context = get_context("spawn")
            with ProcessPoolExecutor(
                max_workers=config.workers, mp_context=context
            ) as pool, open(records_path, "a") as rec_fh, open(
                failures_path, "a"
            ) as fail_fh:
                futures = {
                    pool.submit(_task, (config_dict, n, gi, k)): (n, gi, k)
                    for n, gi, k in pending
                }
                finished = 0
                for future in as_completed(futures):
                    key, record, failure = future.result()
                    if record is not None:
                        rec_fh.write(json.dumps(record) + "\n")
                        rec_fh.flush()
                        records.append(record)
                    else:
                        fail_fh.write(json.dumps(failure) + "\n")
                        fail_fh.flush()
                        failures.append(failure)
                    finished += 1
                    if progress:
                        n, gi, k = key
                        state = "ok" if record is not None else "FAILED"
                        print(
                            f"[{finished}/{len(pending)}] n={n} "
                            f"grid={gi} realization={k}: {state}",
                            file=sys.stderr,
                        )

    _rewrite_sorted(records_path, records, _task_key)
    if failures:
        _rewrite_sorted(failures_path, failures, _task_key)
    elif failures_path.exists() and failures_path.stat().st_size == 0:
        failures_path.unlink()

    rows = aggregate_records(records)
    aggregate_path = out_dir / "aggregate.csv"
    _write_aggregate(aggregate_path, rows)
    if any("summary" in r for r in records):
        _write_summaries(out_dir / "summaries.csv", records)
    return SweepResult(
        config=config,
        rows=rows,
        completed=len(records),
        failed=len(failures),
        out_dir=out_dir,
        records_path=records_path,
        aggregate_path=aggregate_path,
    )


def load_records(out_dir):
    """All completed realization records of a sweep directory, task order."""
    return sorted(_read_jsonl(Path(out_dir) / "records.jsonl"), key=_task_key)


def load_failures(out_dir):
    return sorted(_read_jsonl(Path(out_dir) / "failures.jsonl"), key=_task_key)


_SUMMARY_KEYS = ("gap", "X", "Y", "R")
_STEADY_KEYS = ("purity", "variance")


def aggregate_records(records):
    """Per-(n, grid point) means and standard errors, plus pooled ratios."""
    groups = {}
    for record in records:
        groups.setdefault((record["n"], record["grid_index"]), []).append(record)
    rows = []
    for (n, grid_index), bunch in sorted(groups.items()):
        first = bunch[0]
        row = {
            "n": n,
            "beta": first["beta"],
            "r": first["r"],
            "g": first["g"],
            "g_eff": first["g_eff"],
            "grid_index": grid_index,
            "realizations": len(bunch),
        }
        for key in _SUMMARY_KEYS:
            values = [b["summary"][key] for b in bunch if "summary" in b]
            if values:
                row[f"mean_{key}"] = float(np.mean(values))
                row[f"se_{key}"] = _stderr(values)
        for key in _STEADY_KEYS:
            values = [b["steady"][key] for b in bunch if "steady" in b]
            if values:
                row[f"mean_{key}"] = float(np.mean(values))
                row[f"se_{key}"] = _stderr(values)
        pooled = [r for b in bunch for r in b.get("ratios", [])]
        if pooled:
            pooled = np.asarray(pooled)
            row["ratio_count"] = int(pooled.size)
            row["ratio_mean"] = float(pooled.mean())
            row["ratio_std"] = float(pooled.std())
        rows.append(row)
    return rows


def _stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _write_aggregate(path, rows):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in columns])


def _write_summaries(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for record in records:
            if "summary" not in record:
                continue
            summary = record["summary"]
            writer.writerow(
                [
                    record["n"],
                    record["beta"],
                    record["r"],
                    _fmt(record["g"]),
                    _fmt(record["g_eff"]),
                    _fmt(summary["R"]),
                    _fmt(summary["X"]),
                    _fmt(summary["Y"]),
                    _fmt(summary["gap"]),
                    record["realization"],
                ]
            )
