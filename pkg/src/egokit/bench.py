"""Benchmark harness and command-line interface.

Runs seeded repetitions of the three optimizer variants on the shifted
benchmark functions, streams per-evaluation records to CSV, and aggregates
per-evaluation-index medians across repetitions.  The same base seed yields
the identical initial design for every algorithm (the design substream does
not depend on the algorithm), and repeated invocations with the same
configuration produce byte-identical files.

CSV schemas:

    records:   run_id,eval_index,x_0..x_{d-1},f,best_so_far,provenance
    aggregate: eval_index,median_best
    trace:     theta,x_0..x_{d-1},f,group
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .design import BENCHMARK_NAMES, BoxDomain, lhs, make_benchmark
from .kriging import DesignOfExperiments, IllConditionedModelError
from .optimizers import (
    ConvergenceRecord,
    LoopConfig,
    SweepTrace,
    run_ego,
    run_ensemble_ego,
    run_greedy_sweep,
)

ALGORITHMS = ("ego", "ensemble", "greedy-sweep")

#: Number of bands a sweep grid is split into for trace group labels.
THETA_GROUPS = 8


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


@dataclass
class RunConfig:
    """One benchmark invocation: algorithm, function, budgets, seeds.

    ``budget`` counts objective evaluations for ``ego`` and iterations for
    ``ensemble`` and ``greedy-sweep``.  Unset fields take the protocol
    defaults: initial design of 3*d points, 70*d evaluations (ego), 15*d
    iterations (ensemble/greedy-sweep), 5 repetitions for ego, 8 for
    ensemble, 1 for greedy-sweep, and an EI search budget of 2000*d.
    """

    algorithm: str
    function: str
    dimension: int
    domain_lower: float = -5.0
    domain_upper: float = 5.0
    init_size: int | None = None
    budget: int | None = None
    repetitions: int | None = None
    base_seed: int = 0
    ei_search_budget: int | None = None
    output_path: str = "results"
    theta_min: float = 0.01
    theta_max: float = 20.0
    theta_step: float = 0.1
    theta_count: int | None = None
    ensemble_q: int = 5
    densify_on_updated_doe: bool = False
    midpoint_lhs: bool = False

    def finalize(self) -> "RunConfig":
        """Fill protocol defaults and validate; returns self."""
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm '{self.algorithm}'; choose from {ALGORITHMS}")
        if self.function not in BENCHMARK_NAMES:
            raise ConfigError(f"unknown function '{self.function}'; choose from {BENCHMARK_NAMES}")
        if self.dimension < 1:
            raise ConfigError("dimension must be >= 1")
        if not self.domain_lower < self.domain_upper:
            raise ConfigError("domain_lower must be < domain_upper")
        d = self.dimension
        if self.init_size is None:
            self.init_size = 3 * d
        if self.budget is None:
            self.budget = 70 * d if self.algorithm == "ego" else 15 * d
        if self.repetitions is None:
            self.repetitions = {"ego": 5, "ensemble": 8, "greedy-sweep": 1}[self.algorithm]
        if self.ei_search_budget is None:
            self.ei_search_budget = 2000 * d
        for name in ("init_size", "budget", "repetitions", "ei_search_budget"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.algorithm == "ego" and self.budget < self.init_size:
            raise ConfigError("ego budget must cover the initial design")
        if self.algorithm == "ensemble" and self.init_size < 2:
            raise ConfigError("ensemble needs an initial design of at least 2 points")
        if self.ensemble_q < 2:
            raise ConfigError("ensemble_q must be >= 2")
        if not (0 < self.theta_min < self.theta_max):
            raise ConfigError("need 0 < theta_min < theta_max")
        if self.theta_step <= 0:
            raise ConfigError("theta_step must be positive")
        return self

    @property
    def domain(self) -> BoxDomain:
        return BoxDomain.cube(self.domain_lower, self.domain_upper, self.dimension)

    @property
    def prefix(self) -> str:
        return f"{self.algorithm.replace('-', '_')}_{self.function}_d{self.dimension}"

    def theta_grid(self) -> np.ndarray:
        if self.theta_count is not None:
            if self.theta_count < 1:
                raise ConfigError("theta_count must be >= 1")
            return self.theta_min + self.theta_step * np.arange(self.theta_count)
        count = int(math.floor((self.theta_max - self.theta_min) / self.theta_step + 1e-9)) + 1
        return self.theta_min + self.theta_step * np.arange(count)


def _fmt(value: float) -> str:
    # Locale-independent, round-trip exact float formatting.
    return format(float(value), ".17g")


def record_header(dimension: int) -> str:
    coords = ",".join(f"x_{j}" for j in range(dimension))
    return f"run_id,eval_index,{coords},f,best_so_far,provenance"


def record_row(rec: ConvergenceRecord) -> str:
    coords = ",".join(_fmt(v) for v in rec.x)
    return (f"{rec.run_id},{rec.eval_index},{coords},"
            f"{_fmt(rec.f)},{_fmt(rec.best_so_far)},{rec.provenance}")


def initial_design(config: RunConfig, repetition: int) -> DesignOfExperiments:
    """Evaluated initial design for one repetition.

    Uses a dedicated substream of ``base_seed + repetition`` that does not
    depend on the algorithm, so different algorithms under the same seed
    start from the identical design.
    """
    doe_stream, _ = np.random.SeedSequence(config.base_seed + repetition).spawn(2)
    fn = make_benchmark(config.function, config.dimension)
    X = lhs(config.init_size, config.domain, np.random.default_rng(doe_stream),
            midpoint=config.midpoint_lhs)
    y = np.array([fn(x) for x in X])
    return DesignOfExperiments(X, y)


def _algorithm_rng(config: RunConfig, repetition: int) -> np.random.Generator:
    _, algo_stream = np.random.SeedSequence(config.base_seed + repetition).spawn(2)
    return np.random.default_rng(algo_stream)


def run_repetition(config: RunConfig, repetition: int,
                   on_record=None) -> tuple[list[ConvergenceRecord], list[SweepTrace]]:
    """Run one seeded repetition; returns its records (and traces for sweeps)."""
    fn = make_benchmark(config.function, config.dimension)
    doe = initial_design(config, repetition)
    rng = _algorithm_rng(config, repetition)
    loop = LoopConfig(
        domain=config.domain,
        ei_search_budget=config.ei_search_budget,
        densify_on_updated_doe=config.densify_on_updated_doe,
        run_id=f"{config.prefix}_rep{repetition:02d}",
    )
    traces: list[SweepTrace] = []
    if config.algorithm == "ego":
        records = run_ego(fn, doe, config.budget, loop, rng, on_record=on_record)
    elif config.algorithm == "ensemble":
        records = run_ensemble_ego(fn, doe, config.budget, loop, rng,
                                   q=config.ensemble_q, on_record=on_record)
    else:
        records, traces = run_greedy_sweep(fn, doe, config.theta_grid(),
                                           config.budget, loop, rng,
                                           on_record=on_record)
    return records, traces


def _write_manifest(config: RunConfig, path: Path, failures: dict[int, str]) -> None:
    lines = []
    for f in sorted(fields(RunConfig), key=lambda f: f.name):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    if config.algorithm == "ensemble":
        lines.append(f"t_threshold = {math.ceil(0.7 * config.budget)}")
    for rep in sorted(failures):
        lines.append(f"failure_rep{rep:02d} = {failures[rep]}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_trace_files(config: RunConfig, repetition: int,
                       traces: list[SweepTrace], out: Path) -> list[Path]:
    paths = []
    d = config.dimension
    coords = ",".join(f"x_{j}" for j in range(d))
    for t, trace in enumerate(traces, start=1):
        path = out / f"{config.prefix}_rep{repetition:02d}_trace_iter{t:03d}.csv"
        grid_size = trace.thetas.size
        rows = [f"theta,{coords},f,group"]
        for i in range(grid_size):
            group = 1 + i * THETA_GROUPS // grid_size
            xs = ",".join(_fmt(v) for v in trace.candidates[i])
            rows.append(f"{_fmt(trace.thetas[i])},{xs},{_fmt(trace.f_values[i])},{group}")
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def run_benchmark(config: RunConfig) -> dict:
    """Execute all repetitions, write per-repetition and aggregate CSVs.

    Numerical failures abort the affected repetition only; its partial
    records stay flushed to disk, the failure is noted in the manifest, and
    the benchmark is reported as failed after the remaining repetitions
    complete.  Returns a summary dict with file paths and a ``failures``
    map; the CLI turns a nonempty map into a nonzero exit code.
    """
    config.finalize()
    if config.algorithm == "greedy-sweep" and config.dimension > 2:
        print(f"warning: greedy-sweep probes the objective {config.theta_grid().size} "
              f"times per iteration; dimensions above 2 get expensive", file=sys.stderr)
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)

    rep_paths: list[Path] = []
    trace_paths: list[Path] = []
    failures: dict[int, str] = {}
    for rep in range(config.repetitions):
        path = out / f"{config.prefix}_rep{rep:02d}.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(record_header(config.dimension) + "\n")
            try:
                _, traces = run_repetition(
                    config, rep,
                    on_record=lambda rec: handle.write(record_row(rec) + "\n"))
            except IllConditionedModelError as exc:
                failures[rep] = str(exc)
        rep_paths.append(path)
        if config.algorithm == "greedy-sweep" and rep not in failures:
            # traces from a failed repetition are dropped with its error
            trace_paths.extend(_write_trace_files(config, rep, traces, out))

    manifest_path = out / f"{config.prefix}_manifest.txt"
    _write_manifest(config, manifest_path, failures)
    complete = [p for i, p in enumerate(rep_paths) if i not in failures]
    aggregate_path = out / f"{config.prefix}_median.csv"
    if complete:
        write_aggregate(complete, aggregate_path)
    return {
        "records": rep_paths,
        "aggregate": aggregate_path if complete else None,
        "manifest": manifest_path,
        "traces": trace_paths,
        "failures": failures,
    }


def emit_sweep_trace(config: RunConfig) -> list[Path]:
    """Run a greedy-sweep benchmark and return its trace file paths.

    Warns when the dimension is above 2 (the sweep evaluates the objective
    once per grid length-scale per iteration).
    """
    config.finalize()
    if config.algorithm != "greedy-sweep":
        raise ConfigError("sweep traces require algorithm 'greedy-sweep'")
    result = run_benchmark(config)
    if result["failures"]:
        raise IllConditionedModelError(
            float("nan"), 0, float("nan"),
            f"sweep repetitions failed: {sorted(result['failures'])}")
    return result["traces"]


def read_best_curve(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """(eval_index, best_so_far) columns of a records CSV."""
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        idx_col = header.index("eval_index")
        best_col = header.index("best_so_far")
        indices, bests = [], []
        for line in handle:
            parts = line.strip().split(",")
            indices.append(int(parts[idx_col]))
            bests.append(float(parts[best_col]))
    return np.asarray(indices, dtype=int), np.asarray(bests, dtype=float)


def median_best_curve(curves: list[tuple[np.ndarray, np.ndarray]],
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Per-evaluation-index median of best-so-far across repetitions.

    Best-so-far is a step function of the evaluation count, so repetitions
    that stopped early carry their last value forward to the longest run.
    """
    if not curves:
        raise ValueError("no curves to aggregate")
    horizon = max(int(idx[-1]) for idx, _ in curves)
    table = np.empty((len(curves), horizon))
    for row, (idx, best) in enumerate(curves):
        expanded = np.full(horizon, np.nan)
        expanded[idx - 1] = best
        # records are contiguous from 1, but be safe and forward-fill
        last = np.nan
        for i in range(horizon):
            if np.isnan(expanded[i]):
                expanded[i] = last
            else:
                last = expanded[i]
        table[row] = expanded
    medians = np.median(table, axis=0)
    return np.arange(1, horizon + 1), medians


def write_aggregate(rep_paths: list[Path], out_file: Path) -> Path:
    curves = [read_best_curve(p) for p in rep_paths]
    index, medians = median_best_curve(curves)
    rows = ["eval_index,median_best"]
    rows.extend(f"{i},{_fmt(m)}" for i, m in zip(index, medians))
    out_file.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return out_file


def aggregate_directory(in_dir: Path, out_file: Path) -> Path:
    """Recompute the aggregate median file from per-repetition CSVs."""
    in_dir = Path(in_dir)
    rep_paths = sorted(in_dir.glob("*_rep[0-9][0-9].csv"))
    if not rep_paths:
        raise ConfigError(f"no per-repetition CSV files found in {in_dir}")
    prefixes = {p.name.rsplit("_rep", 1)[0] for p in rep_paths}
    if len(prefixes) > 1:
        raise ConfigError(
            f"multiple run prefixes in {in_dir}: {sorted(prefixes)}; aggregate one at a time")
    return write_aggregate(rep_paths, Path(out_file))


# ----------------------------------------------------------------------
# CLI
# ----------------------------------------------------------------------

_CONFIG_FILE_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in ("algorithm", "function", "output_path"):
        return raw
    if name in ("densify_on_updated_doe", "midpoint_lhs"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key '{name}' expects a boolean, got '{raw}'")
    if raw.lower() in ("none", ""):
        return None
    try:
        if name in ("domain_lower", "domain_upper", "theta_min", "theta_max", "theta_step"):
            return float(raw)
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"config key '{name}': cannot parse '{raw}'") from exc


def parse_config_file(path: Path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_FILE_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
        values[key] = _coerce(key, raw)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egokit",
        description="Kriging-based EGO benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a benchmark configuration")
    run.add_argument("--algorithm", choices=ALGORITHMS)
    run.add_argument("--function", choices=BENCHMARK_NAMES)
    run.add_argument("--dim", type=int, dest="dimension")
    run.add_argument("--budget", type=int,
                     help="evaluations for ego, iterations for ensemble/greedy-sweep")
    run.add_argument("--reps", type=int, dest="repetitions")
    run.add_argument("--seed", type=int, dest="base_seed")
    run.add_argument("--out", dest="output_path")
    run.add_argument("--config", help="flat key=value config file; flags override it")
    run.add_argument("--init-size", type=int, dest="init_size")
    run.add_argument("--ei-budget", type=int, dest="ei_search_budget")
    run.add_argument("--domain-lower", type=float, dest="domain_lower")
    run.add_argument("--domain-upper", type=float, dest="domain_upper")
    run.add_argument("--theta-min", type=float, dest="theta_min")
    run.add_argument("--theta-max", type=float, dest="theta_max")
    run.add_argument("--theta-step", type=float, dest="theta_step")
    run.add_argument("--theta-count", type=int, dest="theta_count")
    run.add_argument("--q", type=int, dest="ensemble_q",
                     help="ensemble size before densification")
    run.add_argument("--densify-after-append", action="store_true", default=None,
                     dest="densify_on_updated_doe",
                     help="fit the densified models after appending the selected points")
    run.add_argument("--midpoint-lhs", action="store_true", default=None,
                     dest="midpoint_lhs")

    agg = sub.add_parser("aggregate", help="recompute medians from per-repetition CSVs")
    agg.add_argument("--in", dest="in_dir", required=True)
    agg.add_argument("--out", dest="out_file", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(Path(args.config)))
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    for required in ("algorithm", "function", "dimension"):
        if required not in values:
            raise ConfigError(f"missing required setting '{required}' "
                              "(flag or config file)")
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = config_from_args(args)
            result = run_benchmark(config)
            for rep, msg in sorted(result["failures"].items()):
                print(f"error: repetition {rep} failed: {msg}", file=sys.stderr)
            print(f"wrote {len(result['records'])} record file(s) to {config.output_path}")
            if result["failures"]:
                return 1
            return 0
        if args.command == "aggregate":
            out = aggregate_directory(Path(args.in_dir), Path(args.out_file))
            print(f"wrote {out}")
            return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IllConditionedModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
