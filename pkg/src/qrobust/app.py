"""
Main application for qrobust.

Purpose: Wire generators, solvers, the flattener and the benchmark harness
into the generate | solve | flatten | bench | profile subcommands.
"""
import logging
import os
import sys
from pathlib import Path

from . import __version__
from ._cli import CLI, argument
from .bench import (
    RecordStatus,
    emit_csv,
    emit_profile_csv,
    emit_svg,
    parse_csv,
    performance_profile,
    run_grid,
)
from .bench.profile import DEFAULT_RESOLUTION_MS
from .dep import DEFAULT_SCENARIO_CAP, flatten
from .errors import EXIT_INTERNAL, EXIT_LIMIT, EXIT_OK, ConfigError, OracleMismatchError
from .loader import GridLoader, load_params_file
from .problems import FAMILIES, MODELS, get_family
from .qipfile import format_number, read_qlp, write, write_qlp
from .search import (
    INFINITY,
    MoveOrdering,
    SearchConfig,
    SolveStatus,
    oracle_solve,
    solve,
)

SEED_ENV = "QROBUST_SEED"
PARAM_FLAGS = ("n", "p", "T", "N", "B", "U", "alpha", "beta")

logger = logging.getLogger(__name__)

app = CLI(name="qrobust", description="Multistage robust discrete optimization via quantified integer programs",
          version=__version__)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _format_value(value) -> str:
    if value is None:
        return "none"
    if value is INFINITY:
        return "INFEASIBLE"
    return format_number(value)


@app.command("generate", help="Generate a model instance as a .qlp file")
@argument("--family", required=True, choices=sorted(FAMILIES), help="instance family")
@argument("--model", required=True, choices=MODELS, help="model variant")
@argument("--n", type=int, help="items (sel, kna) or partition size (ass)")
@argument("--p", type=int, help="items to select (sel)")
@argument("--T", type=int, help="periods")
@argument("--N", type=int, help="scenarios per period (sel, ass)")
@argument("--B", type=int, help="basic order options (lot)")
@argument("--U", type=int, help="urgent order options (lot)")
@argument("--alpha", type=int, help="per-period budget (kna)")
@argument("--beta", type=int, help="total budget (kna)")
@argument("--seed", type=int, help=f"generator seed (default ${SEED_ENV} or 0)")
@argument("--params-file", help="key=value parameter file; flags override it")
@argument("--cap", type=int, default=DEFAULT_SCENARIO_CAP, help="scenario leaf cap for dep models")
@argument("--out", default="-", help="output path (default stdout)")
def generate(args):
    family = get_family(args.family)
    values = load_params_file(args.params_file) if args.params_file else {}
    for key in PARAM_FLAGS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    if args.seed is not None:
        values["seed"] = args.seed
    values.setdefault("seed", _default_seed())
    params = family.params(values)
    instance = family.build(args.model, params, cap=args.cap)
    _emit(write(instance), args.out)
    if args.out not in (None, "-"):
        print(f"wrote {args.out} ({instance.num_vars} variables)")
    return EXIT_OK


@app.command("solve", help="Solve a .qlp instance by game-tree search")
@argument("--in", dest="path", required=True, help="instance file")
@argument("--time-limit", type=int, default=60_000, help="time limit in ms")
@argument("--node-limit", type=int, help="node budget")
@argument("--ordering", choices=[m.value for m in MoveOrdering], default=MoveOrdering.OBJECTIVE_GUIDED.value,
          help="existential move ordering")
@argument("--no-bounds", action="store_true", help="disable bound pruning")
@argument("--oracle", action="store_true", help="check the value against exhaustive minimax")
def solve_command(args):
    instance = read_qlp(args.path)
    config = SearchConfig(
        time_limit_ms=args.time_limit,
        move_ordering=MoveOrdering(args.ordering),
        bounds_enabled=not args.no_bounds,
        node_limit=args.node_limit,
    )
    result = solve(instance, config)
    print(f"status: {result.status.value}")
    if result.status is SolveStatus.TIME_LIMIT:
        print(f"bound: {_format_value(result.value)}")
    else:
        print(f"value: {_format_value(result.value)}")
    if result.first_stage:
        print("first stage: " + " ".join(f"{instance.var_names[j]}={v}" for j, v in sorted(result.first_stage.items())))
    print(f"nodes: {result.nodes}")
    print(f"time_ms: {result.elapsed_ms}")
    if result.status is SolveStatus.TIME_LIMIT:
        return EXIT_LIMIT
    if args.oracle:
        check = oracle_solve(instance)
        if check.value != result.value:
            raise OracleMismatchError(
                f"search value {_format_value(result.value)} differs from oracle value {_format_value(check.value)}")
        print(f"oracle: agrees ({check.nodes} nodes)")
    return EXIT_OK


@app.command("flatten", help="Expand a .qlp instance into its deterministic equivalent")
@argument("--in", dest="path", required=True, help="instance file")
@argument("--out", default="-", help="output path (default stdout)")
@argument("--cap", type=int, default=DEFAULT_SCENARIO_CAP, help="scenario leaf cap")
def flatten_command(args):
    instance = read_qlp(args.path)
    mip = flatten(instance, args.cap)
    if args.out in (None, "-"):
        _emit(write(mip), args.out)
        stream = sys.stderr
    else:
        write_qlp(mip, args.out)
        stream = sys.stdout
    print(f"leaves: {mip.num_leaves}", file=stream)
    print(f"variables: {mip.num_vars}", file=stream)
    print(f"rows: {len(mip.rows)}", file=stream)
    return EXIT_OK


@app.command("bench", help="Run a benchmark grid and write records CSV")
@argument("--grid", required=True, help="grid specification (YAML)")
@argument("--out", default="-", help="records CSV path (default stdout)")
@argument("--jobs", type=int, help="worker processes (overrides the grid)")
@argument("--time-limit", type=int, help="time limit in ms (overrides the grid)")
def bench(args):
    spec = GridLoader().load_file(args.grid)
    if args.time_limit is not None:
        if args.time_limit <= 0:
            raise ConfigError(f"time limit must be positive, got {args.time_limit}")
        spec.time_limit_ms = args.time_limit
    if args.jobs is not None and args.jobs <= 0:
        raise ConfigError(f"jobs must be positive, got {args.jobs}")
    records = run_grid(spec, jobs=args.jobs)
    _emit(emit_csv(records), args.out)
    failed = [r for r in records if r.status is RecordStatus.ERROR]
    if failed:
        print(f"Error: {len(failed)} run(s) failed, first {failed[0].instance_id} "
              f"{failed[0].model}/{failed[0].solver}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


@app.command("profile", help="Compute a performance profile from records CSV")
@argument("--in", dest="path", required=True, help="records CSV")
@argument("--out", default="-", help="profile CSV path (default stdout)")
@argument("--svg", help="also write an SVG step plot")
@argument("--by", choices=["label", "model", "solver"], default="label", help="profile grouping key")
@argument("--solvers", help="comma-separated labels to include (default all)")
@argument("--resolution-ms", type=int, default=DEFAULT_RESOLUTION_MS, help="time unit in ms")
def profile(args):
    path = Path(args.path)
    if not path.exists():
        raise ConfigError(f"File not found: {path}")
    records = parse_csv(path.read_text(encoding="utf-8"))
    labels = [s.strip() for s in args.solvers.split(",") if s.strip()] if args.solvers else None
    table = performance_profile(records, labels=labels, by=args.by, resolution_ms=args.resolution_ms)
    _emit(emit_profile_csv(table), args.out)
    if args.svg:
        Path(args.svg).write_text(emit_svg(table), encoding="utf-8", newline="\n")
    return EXIT_OK


def main(argv=None) -> int:
    return app.main(argv)


def run():
    """Entry point for the console script."""
    app.run()


if __name__ == "__main__":
    run()
