import argparse
import logging
import os
import sys
from typing import List, Optional

# Add the parent directory to the Python path so we can import from src
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.cim_core.engine.config_loader import get_default_value, get_oracle_entries, load_run_config
from src.cim_core.errors import ConfigError, EdgeListParseError, NodeRangeError, ResourceCapError
from src.cimbs.model.graph import generate_synthetic, save_edge_list
from src.cimbs.model.rrset import generate, moments_report, relaxation_factors
from src.cimbs.solvers.oracles import run_oracle_suite
from src.cimbs.solvers.optimize import build_optimizer
from src.cimbs.solvers.pipeline import SolveConfig, build_problem, load_graph, solve, sweep_points
from src.cimbs.solvers.reporting import ResultRow, write_plot_data, write_results
from src.cimbs.utils.rng import SeedStreams

# Configure logging for better debugging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EXIT_CONFIG = 2


def _open_out(path: Optional[str]):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_solve(args) -> int:
    config = load_run_config(args.config, overrides={"seed": args.seed})
    graph, strategy, scenario, base_budget = build_problem(config)
    points = sweep_points(config)
    master = SeedStreams(config["seed"])

    rows: List[ResultRow] = []
    for algorithm in config["algo.kind"]:
        solve_config = SolveConfig.from_run_config(config, algorithm, workers=args.workers)
        label = build_optimizer(solve_config.optimizer_spec()).label
        for index, (k, lam) in enumerate(points):
            budget = base_budget.with_budget(k, lam)
            try:
                solution = solve(graph, strategy, budget, solve_config, master.child("point", index))
                rows.append(ResultRow.from_solution(solution, k, lam, timings=not args.no_timings))
            except ResourceCapError as e:
                logger.warning(f"{label} at k={k}, lambda={lam}: {str(e)}")
                rows.append(ResultRow.from_cap_error(label, k, lam, e))

    out = _open_out(args.out)
    try:
        write_results(rows, out)
    finally:
        if out is not sys.stdout:
            out.close()

    if args.plot_dir:
        write_plot_data(rows, args.plot_dir, base_k=points[0][0], base_lambda=points[0][1])
    logger.info(f"Wrote {len(rows)} result rows")
    return 0


def cmd_moments(args) -> int:
    if args.count < 1:
        raise ConfigError("--count must be at least 1")
    config = load_run_config(args.config, overrides={"seed": args.seed})
    graph = load_graph(config)
    collection = generate(graph, args.count, SeedStreams(config["seed"]).child("moments"),
                          config["mc.chunk_size"], args.workers)
    nu1, nu2, nu3 = moments_report(collection)
    factors = relaxation_factors(collection)

    print(f"nu1={nu1:.4f} nu2={nu2:.4f} nu3={nu3:.4f}")
    print("relaxation factors: n/nu1={:.2f} n^2/nu2={:.2f} nu1*n/nu2={:.2f} nu1*n^2/nu3={:.2f}".format(*factors))

    out = _open_out(args.out)
    try:
        out.write("rr_sets,nu1,nu2,nu3,n_over_nu1,n2_over_nu2,nu1_n_over_nu2,nu1_n2_over_nu3\n")
        out.write(",".join(repr(float(v)) if i else str(v)
                           for i, v in enumerate((collection.theta, nu1, nu2, nu3) + factors)) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_oracle(args) -> int:
    if args.config:
        seed = load_run_config(args.config, overrides={"seed": args.seed})["seed"]
    else:
        seed = args.seed if args.seed is not None else get_default_value("seed")

    entries = None
    if args.names:
        # named entries run even when the YAML leaves them disabled
        declared = {entry["name"]: entry for entry in get_oracle_entries(enabled_only=False)}
        entries = [declared.get(name, {"name": name}) for name in args.names]
    results = run_oracle_suite(entries, seed=seed)

    print(f"{'oracle':<38} {'result':<6} {'max error':>12} {'tolerance':>12} {'seconds':>9}")
    for r in results:
        print(f"{r.name:<38} {'pass' if r.passed else 'FAIL':<6} {r.max_error:>12.4g} {r.tolerance:>12.4g} "
              f"{r.seconds:>9.2f}")
        if not r.passed:
            print(f"    at {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def cmd_gen_graph(args) -> int:
    graph = generate_synthetic(args.kind, args.n, args.param, args.seed or 0)
    if args.out:
        with open(args.out, "wb") as f:
            save_edge_list(graph, f)
    else:
        save_edge_list(graph, sys.stdout.buffer)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='CIM-BS solver: continuous influence maximization with budget saving')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    commands = parser.add_subparsers(dest='command', required=True)

    def common(sub, config_required=True):
        sub.add_argument('--config', required=config_required, help='Run config file (key = value lines)')
        sub.add_argument('--out', help='Output file (default: stdout)')
        sub.add_argument('--workers', type=int, default=os.cpu_count() or 1,
                         help='Worker processes for Monte Carlo and RR sampling (default: CPU count)')
        sub.add_argument('--seed', type=int, help='Override the master seed')

    solve_parser = commands.add_parser('solve', help='Run the configured solvers over the sweep')
    common(solve_parser)
    solve_parser.add_argument('--plot-dir', help='Also write plot-data CSV files to this directory')
    solve_parser.add_argument('--no-timings', action='store_true', help='Write runtime_seconds as 0.0')
    solve_parser.set_defaults(handler=cmd_solve)

    moments_parser = commands.add_parser('moments', help='RR-set size moments and relaxation factors')
    common(moments_parser)
    moments_parser.add_argument('--count', type=int, default=10000, help='Number of RR sets (default: 10000)')
    moments_parser.set_defaults(handler=cmd_moments)

    oracle_parser = commands.add_parser('oracle', help='Run the built-in verification oracles')
    common(oracle_parser, config_required=False)
    oracle_parser.add_argument('--name', dest='names', action='append',
                               help='Run only this oracle entry, even if disabled (repeatable)')
    oracle_parser.set_defaults(handler=cmd_oracle)

    gen_parser = commands.add_parser('gen-graph', help='Write a synthetic weighted-cascade graph as an edge list')
    gen_parser.add_argument('--kind', default='erdos_renyi', choices=['erdos_renyi', 'scale_free_like'])
    gen_parser.add_argument('--n', type=int, default=100, help='Node count')
    gen_parser.add_argument('--param', type=float, default=0.05,
                            help='Edge probability (erdos_renyi) or attachments per node (scale_free_like)')
    gen_parser.add_argument('--seed', type=int, default=0)
    gen_parser.add_argument('--out', help='Output file (default: stdout)')
    gen_parser.set_defaults(handler=cmd_gen_graph)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return args.handler(args)
    except (ConfigError, EdgeListParseError, NodeRangeError) as e:
        logger.error(f"Configuration error: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
