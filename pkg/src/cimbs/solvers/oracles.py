"""
Verification oracles: exact and brute-force references for the solver's
estimators, gradients, proximal operators and approximation ratios.

Each oracle is registered by the name used in the `oracles:` list of
solver-config.yaml and returns (max_error, detail); it passes when max_error
is within the entry's tolerance.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import cvxpy as cp
import numpy as np

from src.cim_core.algorithms.algorithm_decorator import registering_decorator_factory
from src.cim_core.algorithms.registry import AlgorithmRegistry
from src.cim_core.engine.config_loader import get_oracle_entries
from src.cim_core.errors import ResourceCapError
from src.cimbs.model.budget import BudgetModel, is_feasible, project, prox, s_value
from src.cimbs.model.diffusion import ExactInfluence, estimate_g
from src.cimbs.model.graph import DirectedGraph, assign_weighted_cascade, build_graph, generate_synthetic
from src.cimbs.model.objective import ObjectiveBundle, bar_g, grad_hat_g, hat_g, stochastic_grad_samples
from src.cimbs.model.rrset import generate
from src.cimbs.model.strategy import IndependentActivation, StrategyModel, build_scenario
from src.cimbs.solvers.pipeline import SolveConfig, solve
from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)

oracle_registry = AlgorithmRegistry("oracle")
register_oracle = registering_decorator_factory(oracle_registry)

# solver tolerances tight enough for a 1e-6 comparison against the closed forms
QP_SOLVER_TOLERANCES = {"tol_gap_abs": 1e-12, "tol_gap_rel": 1e-12, "tol_feas": 1e-12}


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    seconds: float
    detail: str = ""


def fixture_graphs() -> Dict[str, DirectedGraph]:
    """Tiny graphs (n <= 6, m <= 8) with explicit and weighted-cascade probabilities."""
    return {
        "path3": build_graph(3, [(0, 1, 0.5), (1, 2, 0.25)]),
        "triangle": build_graph(3, [(0, 1, 0.7), (1, 2, 0.6), (2, 0, 0.5), (0, 2, 0.3)]),
        "star5_wc": assign_weighted_cascade(build_graph(5, [(0, 1, 0), (0, 2, 0), (0, 3, 0), (0, 4, 0),
                                                            (1, 2, 0), (3, 4, 0)])),
        "diamond4_wc": assign_weighted_cascade(build_graph(4, [(0, 1, 0), (0, 2, 0), (1, 3, 0), (2, 3, 0),
                                                               (3, 0, 0)])),
        "mixed6": build_graph(6, [(0, 1, 1.0), (1, 2, 0.4), (2, 3, 0.0), (3, 4, 0.9), (4, 5, 0.2),
                                  (5, 0, 0.6), (1, 4, 0.5), (2, 5, 0.3)]),
    }


def ratio_fixture() -> Tuple[DirectedGraph, IndependentActivation]:
    """An 8-node weighted-cascade graph with a two-segment strategy model."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (0, 4), (2, 6), (7, 3)]
    graph = assign_weighted_cascade(build_graph(8, [(u, v, 0.0) for u, v in edges]))
    strategy = IndependentActivation(8, 2, np.arange(8), [0, 0, 0, 0, 1, 1, 1, 1], ["quadratic"] * 8)
    return graph, strategy


def personalized(graph: DirectedGraph) -> IndependentActivation:
    return build_scenario(graph, "personalized")[0]


def random_feasible(budget: BudgetModel, rng: np.random.Generator) -> np.ndarray:
    """A random point of P: a box draw scaled into the budget when needed."""
    upper = np.where(np.isfinite(budget.upper), budget.upper, budget.k)
    x = rng.random(budget.d) * upper
    return project(budget, x) if not is_feasible(budget, x) else x


def grid_opt(graph: DirectedGraph, strategy: StrategyModel, budget: BudgetModel,
             resolution: float = 0.01) -> Tuple[np.ndarray, float]:
    """
    Maximise exact g + s over a dense grid of P (d <= 2).

    Returns:
        (argmax, value) over the grid points that are feasible.
    """
    if budget.d > 2:
        raise ValueError(f"grid search supports d <= 2, got d={budget.d}")
    exact = ExactInfluence(graph)
    axes = []
    for j in range(budget.d):
        hi = min(float(budget.upper[j]), float(strategy.upper[j]), budget.k)
        axes.append(np.linspace(0.0, hi, int(round(hi / resolution)) + 1))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, budget.d)

    best_x, best_value = np.zeros(budget.d), -math.inf
    for x in mesh:
        if not is_feasible(budget, x):
            continue
        value = exact.g(strategy, x) + s_value(budget, x)
        if value > best_value:
            best_x, best_value = x.copy(), value
    logger.debug(f"grid_opt: {len(mesh)} points, OPT={best_value:.6f} at {best_x}")
    return best_x, best_value


def qp_prox_oracle(budget: BudgetModel, z: np.ndarray, eta: float) -> np.ndarray:
    """argmin over P of eta*lambda*c(y) + 0.5*||z - y||^2 by a conic solve; eta = 0 gives the projection."""
    y = cp.Variable(budget.d)
    cost = cp.norm1(y) if budget.cost_kind == "one_norm" else cp.norm(y, 2)
    constraints = [y >= 0, cost <= budget.k]
    capped = np.flatnonzero(np.isfinite(budget.upper))
    if capped.size:
        constraints.append(y[capped] <= budget.upper[capped])
    problem = cp.Problem(cp.Minimize(eta * budget.lam * cost + 0.5 * cp.sum_squares(z - y)), constraints)
    problem.solve(solver=cp.CLARABEL, **QP_SOLVER_TOLERANCES)
    return np.asarray(y.value, dtype=float)


def _relative_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(analytic - reference)) / max(1.0, float(np.max(np.abs(reference)))))


def _central_differences(func, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (func(x + e) - func(x - e)) / (2.0 * step)
    return grad


def _rr_fixtures(seed: int, rr_sets: int):
    graph = generate_synthetic("erdos_renyi", 30, 0.1, seed=1)
    streams = SeedStreams(seed).child("oracle", "rr")
    collection = generate(graph, rr_sets, streams)
    for kind, d in (("personalized", None), ("segment", 3)):
        strategy, _ = build_scenario(graph, kind, d, seed=seed)
        budget = BudgetModel("one_norm", float(strategy.d), 1.0, strategy.d, strategy.upper)
        yield kind, ObjectiveBundle(collection, strategy, budget)


@register_oracle("exact_g_vs_monte_carlo")
def _exact_g_vs_monte_carlo(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    sims, points = int(options.get("sims", 20000)), int(options.get("points", 3))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for name, graph in fixture_graphs().items():
        strategy = personalized(graph)
        exact = ExactInfluence(graph)
        for i in range(points):
            x = rng.random(strategy.d)
            estimate = estimate_g(graph, strategy, x, sims, SeedStreams(seed).child("oracle", name, i))
            diff = abs(estimate.mean - exact.g(strategy, x))
            score = diff / estimate.std_error if estimate.std_error > 0 else (0.0 if diff < 1e-12 else math.inf)
            if score > worst:
                worst, where = score, f"{name} point {i}: |diff|={diff:.4g}, se={estimate.std_error:.4g}"
    return worst, where


@register_oracle("grad_hat_g_vs_finite_differences")
def _grad_hat_g(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    step, points = float(options.get("step", 1e-5)), int(options.get("points", 5))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for kind, bundle in _rr_fixtures(seed, int(options.get("rr_sets", 50))):
        for i in range(points):
            x = 0.05 + 0.9 * rng.random(bundle.strategy.d)
            error = _relative_error(grad_hat_g(bundle, x), _central_differences(lambda y: hat_g(bundle, y), x, step))
            if error > worst:
                worst, where = error, f"{kind} point {i}"
    return worst, where


@register_oracle("exact_grad_g_vs_finite_differences")
def _exact_grad_g(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    step, points = float(options.get("step", 1e-5)), int(options.get("points", 3))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for name, graph in fixture_graphs().items():
        strategy = personalized(graph)
        exact = ExactInfluence(graph)
        for i in range(points):
            x = 0.05 + 0.9 * rng.random(strategy.d)
            error = _relative_error(exact.grad(strategy, x),
                                    _central_differences(lambda y: exact.g(strategy, y), x, step))
            if error > worst:
                worst, where = error, f"{name} point {i}"
    return worst, where


@register_oracle("prox_vs_qp")
def _prox_vs_qp(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    instances, max_dim = int(options.get("instances", 200)), int(options.get("max_dim", 10))
    perturb = float(options.get("perturb", 0.0))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for i in range(instances):
        d = int(rng.integers(1, max_dim + 1))
        kind = ("one_norm", "two_norm")[i % 2]
        upper = np.ones(d) if rng.random() < 0.5 else None
        budget = BudgetModel(kind, float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.0, 3.0)), d, upper)
        z = rng.normal(0.5, 1.0, d)
        eta = float(rng.uniform(0.01, 1.0))
        for label, ours, reference in (("prox", prox(budget, z, eta), qp_prox_oracle(budget, z, eta)),
                                       ("project", project(budget, z), qp_prox_oracle(budget, z, 0.0))):
            error = float(np.max(np.abs(ours + perturb - reference)))
            if error > worst:
                worst, where = error, f"instance {i} ({label}, {kind}, d={d}, capped={upper is not None})"
    return worst, where


@register_oracle("sandwich_bound")
def _sandwich_bound(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    points = int(options.get("points", 100))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for kind, bundle in _rr_fixtures(seed, int(options.get("rr_sets", 200))):
        for i in range(points):
            x = random_feasible(bundle.budget, rng)
            hat, bar = hat_g(bundle, x), bar_g(bundle, x)
            violation = max((1.0 - 1.0 / math.e) * bar - hat, hat - bar, 0.0)
            if violation > worst:
                worst, where = violation, f"{kind} point {i}: hat={hat:.6g}, bar={bar:.6g}"
    return worst, where


@register_oracle("stochastic_grad_g_vs_exact")
def _stochastic_grad_g(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    """
    Mean of many stochastic gradient draws against the exact gradient, in
    standard errors; any draw above n^2 * L_h, or a total variance above
    4 * L_h^2 * n^4, scores inf.
    """
    draws = int(options.get("draws", 100000))
    rng = np.random.default_rng(seed)
    worst, where = 0.0, ""
    for name, graph in fixture_graphs().items():
        strategy = personalized(graph)
        n, l_h = graph.n, strategy.lipschitz
        x = 0.05 + 0.9 * rng.random(strategy.d)
        stream = SeedStreams(seed).child("oracle", "sgrad", name).generator(0)
        samples = stochastic_grad_samples(graph, strategy, x, draws, stream)
        largest = float(np.linalg.norm(samples, axis=1).max())
        variance = float(samples.var(axis=0, ddof=1).sum())
        if largest > n * n * l_h + 1e-9 or variance > 4.0 * l_h ** 2 * n ** 4:
            return math.inf, f"{name}: max norm {largest:.4g}, variance {variance:.4g} (L_h={l_h:g}, n={n})"

        diff = np.abs(samples.mean(axis=0) - ExactInfluence(graph).grad(strategy, x))
        se = samples.std(axis=0, ddof=1) / math.sqrt(draws)
        scores = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff < 1e-12, 0.0, math.inf))
        j = int(np.argmax(scores))
        if scores[j] > worst:
            worst, where = float(scores[j]), f"{name} dim {j}: |diff|={diff[j]:.4g}, se={se[j]:.4g}"
    return worst, where


@register_oracle("grid_opt_ratio")
def _grid_opt_ratio(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    """Number of master seeds in which a gradient solver ends below (alpha - eps) * OPT."""
    epsilon, ell = float(options.get("epsilon", 0.3)), float(options.get("ell", 2.0))
    resolution = float(options.get("resolution", 0.01))
    seeds = int(options.get("seeds", 10))
    iteration_cap = int(options.get("iteration_cap", 5000))
    graph, strategy = ratio_fixture()
    exact = ExactInfluence(graph)

    optima = []
    for lam in (0.0, 2.0):
        budget = BudgetModel("one_norm", 1.0, lam, 2, strategy.upper)
        optima.append((budget, grid_opt(graph, strategy, budget, resolution)[1]))

    failed, where = 0, ""
    for master in range(seed, seed + seeds):
        misses = []
        for budget, opt in optima:
            for algorithm, alpha in (("proxgrad_ris", 0.5), ("uppergrad_ris", 1.0 - 1.0 / math.e)):
                config = SolveConfig(algorithm=algorithm, epsilon=epsilon, ell=ell, seed=master, eval_sims=10,
                                     eval_runs=1, iteration_cap=iteration_cap)
                solution = solve(graph, strategy, budget, config)
                value = exact.g(strategy, solution.x) + s_value(budget, solution.x)
                logger.info(f"grid_opt_ratio: seed {master} {algorithm} lambda={budget.lam}: "
                            f"value={value:.4f} OPT={opt:.4f}")
                if value < (alpha - epsilon) * opt:
                    misses.append(f"{algorithm} lambda={budget.lam:g} value={value:.4g} OPT={opt:.4g}")
        if misses:
            failed += 1
            where = f"seed {master}: " + "; ".join(misses)
    return float(failed), where or f"all {seeds} seeds reached the ratio"


TREND_LABELS = ("uppergrad_ris_heu", "proxgrad_ris_heu", "greedy_ris")


def trend_verdict(stats: Dict[str, Tuple[float, float]]) -> Tuple[float, bool]:
    """
    Judge the budget-balance ordering from (mean, std_error) per label.

    Returns:
        (how many pooled standard errors greedy_ris is ahead of
        uppergrad_ris_heu, clamped at 0; whether uppergrad >= proxgrad >=
        greedy holds with each comparison allowed 2 pooled standard errors)
    """
    upper, proximal, greedy = (stats[label] for label in TREND_LABELS)

    def ahead(a, b) -> bool:
        return a[0] >= b[0] - 2.0 * math.hypot(a[1], b[1])

    gap, pooled = greedy[0] - upper[0], math.hypot(greedy[1], upper[1])
    score = gap / pooled if pooled > 0 else (math.inf if gap > 0 else 0.0)
    return max(0.0, score), ahead(upper, proximal) and ahead(proximal, greedy)


@register_oracle("balance_trend")
def _balance_trend(options: Dict[str, Any], seed: int) -> Tuple[float, str]:
    """Heuristic gradient solvers against greedy on a synthetic weighted-cascade graph, personalized scenario."""
    graph = generate_synthetic(options.get("kind", "scale_free_like"), int(options.get("n", 500)),
                               float(options.get("param", 3)), seed=seed)
    strategy = personalized(graph)
    lambdas = [float(lam) for lam in options.get("lambdas", [0.0, 2.0, 5.0])]
    k, runs = float(options.get("k", 10.0)), int(options.get("runs", 5))

    stats: Dict[float, Dict[str, Tuple[float, float]]] = {}
    for lam in lambdas:
        budget = BudgetModel("one_norm", k, lam, strategy.d, strategy.upper)
        stats[lam] = {}
        for label in TREND_LABELS:
            algorithm = label.replace("_heu", "")
            config = SolveConfig(algorithm=algorithm, termination="heuristic" if label.endswith("_heu") else "theory",
                                 epsilon=float(options.get("epsilon", 0.3)), seed=seed,
                                 eval_sims=int(options.get("sims", 1000)), eval_runs=runs,
                                 iteration_cap=int(options.get("iteration_cap", 20000)),
                                 workers=int(options.get("workers", 1)))
            try:
                solution = solve(graph, strategy, budget, config)
            except ResourceCapError as e:
                return math.inf, f"{label} lambda={lam:g}: {e}"
            evaluation = solution.report.evaluation
            stats[lam][label] = (evaluation.mean, evaluation.std / math.sqrt(runs))
            logger.info(f"balance_trend: lambda={lam:g} {label}: {evaluation.mean:.4f} +- {stats[lam][label][1]:.3g}")

    lam = max(lambdas)
    score, ordered = trend_verdict(stats[lam])
    if not ordered:
        logger.warning(f"balance_trend: ordering {' >= '.join(TREND_LABELS)} did not hold at lambda={lam:g}")
    summary = ", ".join(f"{label}={mean:.4g}+-{se:.2g}" for label, (mean, se) in stats[lam].items())
    return score, f"lambda={lam:g}: {summary}; ordering {'held' if ordered else 'did not hold'}"


def run_oracle_suite(entries: Optional[List[Dict[str, Any]]] = None, seed: int = 0) -> List[OracleResult]:
    """Run the given oracle entries (default: the enabled entries of solver-config.yaml)."""
    entries = get_oracle_entries() if entries is None else entries
    results = []
    for entry in entries:
        name = entry["name"]
        tolerance = float(entry.get("tolerance", 0.0))
        check = oracle_registry.get(name)
        start = time.perf_counter()
        if check is None:
            results.append(OracleResult(name, False, math.inf, tolerance, 0.0, f"unknown oracle '{name}'"))
            logger.warning(f"Oracle '{name}' is not registered")
            continue

        max_error, detail = check(entry.get("options", {}) or {}, seed)
        passed = max_error <= tolerance
        result = OracleResult(name, passed, max_error, tolerance, time.perf_counter() - start, detail)
        if passed:
            logger.info(f"Oracle {name}: pass (max error {max_error:.3g} <= {tolerance:g}, {result.seconds:.2f}s)")
        else:
            logger.warning(f"Oracle {name}: FAIL (max error {max_error:.3g} > {tolerance:g}) at {detail}")
        results.append(result)
    return results
