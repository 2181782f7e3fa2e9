"""
End-to-end solver: sampling procedure, optimizer and out-of-sample evaluation.

solve() sizes an RR collection with the sampling procedure, runs the chosen
optimizer on it with additive target epsilon * LB, and evaluates the returned
strategy mix by Monte Carlo on fresh seed streams.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.cim_core.errors import ConfigError
from src.cimbs.model.budget import BudgetModel, s_value
from src.cimbs.model.diffusion import estimate_g
from src.cimbs.model.graph import DirectedGraph, generate_synthetic, read_edge_list_file
from src.cimbs.model.objective import ObjectiveBundle
from src.cimbs.model.rrset import DEFAULT_THETA_CAP, RESAMPLE_MODES, sampling_procedure
from src.cimbs.model.strategy import Scenario, StrategyModel, build_scenario
from src.cimbs.solvers.optimize import OptimizerSpec, SamplingAdapter, Trace, build_optimizer
from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveConfig:
    algorithm: str = "proxgrad_ris"
    epsilon: float = 0.3
    ell: float = 1.0
    termination: str = "theory"
    heu_threshold: float = 0.3
    greedy_step: float = 0.1
    resample_mode: str = "reuse"
    seed: int = 0
    eval_sims: int = 1000
    eval_runs: int = 5
    theta_cap: Optional[int] = DEFAULT_THETA_CAP
    iteration_cap: int = 1_000_000
    org_iterations: int = 2000
    org_eval_sims: int = 200
    chunk_size: int = 1000
    workers: Optional[int] = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.ell > 0:
            raise ConfigError(f"ell must be positive, got {self.ell}")
        if self.resample_mode not in RESAMPLE_MODES:
            raise ConfigError(f"Unknown resample mode: {self.resample_mode}")
        if self.eval_sims < 1 or self.eval_runs < 1:
            raise ConfigError("eval.sims and eval.runs must be at least 1")
        if self.chunk_size < 1:
            raise ConfigError("mc.chunk_size must be at least 1")
        if self.org_iterations < 0 or self.org_eval_sims < 1:
            raise ConfigError("org.iterations must be >= 0 and org.eval_sims >= 1")

    @classmethod
    def from_run_config(cls, config: Dict[str, Any], algorithm: str, workers: Optional[int] = 1) -> "SolveConfig":
        return cls(algorithm=algorithm,
                   epsilon=config["epsilon"],
                   ell=config["ell"],
                   termination=config["algo.termination"],
                   heu_threshold=config["algo.heu_threshold"],
                   greedy_step=config["algo.greedy_step"],
                   resample_mode=config["algo.resample"],
                   seed=config["seed"],
                   eval_sims=config["eval.sims"],
                   eval_runs=config["eval.runs"],
                   theta_cap=config["caps.theta"],
                   iteration_cap=config["caps.iterations"],
                   org_iterations=config["org.iterations"],
                   org_eval_sims=config["org.eval_sims"],
                   chunk_size=config["mc.chunk_size"],
                   workers=workers)

    def optimizer_spec(self) -> OptimizerSpec:
        return OptimizerSpec(kind=self.algorithm, termination=self.termination, heu_threshold=self.heu_threshold,
                             greedy_step=self.greedy_step, iteration_cap=self.iteration_cap,
                             org_iterations=self.org_iterations, org_eval_sims=self.org_eval_sims)


@dataclass
class Evaluation:
    mean: float
    std: float
    g_part: float
    s_part: float
    run_values: List[float] = field(default_factory=list)
    std_errors: List[float] = field(default_factory=list)


@dataclass
class RunReport:
    algorithm: str
    trace: Trace
    rr_sets: int = 0
    final_theta: int = 0
    lower_bound: float = 1.0
    loop_rounds: int = 0
    theta_history: List[int] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    evaluation: Optional[Evaluation] = None

    @property
    def iterations(self) -> int:
        return self.trace.iterations

    @property
    def truncated(self) -> bool:
        return self.trace.truncated

    @property
    def runtime_seconds(self) -> float:
        return sum(self.timings.values())


@dataclass
class Solution:
    x: np.ndarray
    value: float
    g_part: float
    s_part: float
    report: RunReport


def domain_budget(budget: BudgetModel, strategy: StrategyModel) -> BudgetModel:
    """The budget model with its caps tightened to the strategy domain."""
    if budget.d != strategy.d:
        raise ConfigError(f"budget dimension {budget.d} does not match strategy dimension {strategy.d}")
    upper = np.minimum(budget.upper, strategy.upper)
    return BudgetModel(budget.cost_kind, budget.k, budget.lam, budget.d, upper)


def evaluate(graph: DirectedGraph,
             strategy: StrategyModel,
             budget: BudgetModel,
             x: np.ndarray,
             sims: int,
             runs: int,
             streams: SeedStreams,
             chunk_size: int = 1000,
             workers: Optional[int] = 1) -> Evaluation:
    """
    Mean and standard deviation over runs of (Monte Carlo g(x) with sims simulations) + s(x).

    s is exact, so the spread of the value comes from the g part alone.
    """
    s_part = s_value(budget, x)
    g_means, errors = [], []
    for run in range(runs):
        estimate = estimate_g(graph, strategy, x, sims, streams.child("run", run), chunk_size, workers)
        g_means.append(estimate.mean)
        errors.append(estimate.std_error)

    values = [g + s_part for g in g_means]
    std = float(np.std(values, ddof=1)) if runs > 1 else 0.0
    evaluation = Evaluation(mean=float(np.mean(values)), std=std, g_part=float(np.mean(g_means)),
                            s_part=s_part, run_values=values, std_errors=errors)
    logger.info(f"Evaluation: value={evaluation.mean:.4f} +/- {evaluation.std:.4f} "
                f"(g={evaluation.g_part:.4f}, s={s_part:.4f}, {runs} x {sims} sims)")
    return evaluation


def solve(graph: DirectedGraph,
          strategy: StrategyModel,
          budget: BudgetModel,
          config: SolveConfig,
          streams: Optional[SeedStreams] = None) -> Solution:
    """
    Run one solver end to end.

    Raises:
        ConfigError: Invalid or contradictory configuration.
        ResourceCapError: The sampling procedure needs more RR sets than theta_cap.
    """
    streams = streams if streams is not None else SeedStreams(config.seed)
    optimizer = build_optimizer(config.optimizer_spec())
    if optimizer.route == "bar" and not strategy.independent:
        raise ConfigError(f"{config.algorithm} needs an independent-activation strategy model")
    budget = domain_budget(budget, strategy)
    timings: Dict[str, float] = {}

    logger.info(f"Solving with {optimizer.label}: n={graph.n}, d={strategy.d}, k={budget.k}, "
                f"lambda={budget.lam}, epsilon={config.epsilon}, ell={config.ell}")

    if optimizer.uses_rr_sets:
        l1, l2 = optimizer.lipschitz_pair(graph.n, strategy, budget)
        start = time.perf_counter()
        sampled = sampling_procedure(graph, budget, config.epsilon, config.ell, l1, l2,
                                     SamplingAdapter(optimizer, strategy, budget), streams.child("sampling"),
                                     resample_mode=config.resample_mode, theta_cap=config.theta_cap,
                                     chunk_size=config.chunk_size, workers=config.workers)
        timings["sampling"] = time.perf_counter() - start

        start = time.perf_counter()
        bundle = ObjectiveBundle(sampled.collection, strategy, budget)
        result = optimizer.run(bundle, config.epsilon * sampled.lower_bound)
        timings["optimize"] = time.perf_counter() - start
        report = RunReport(algorithm=optimizer.label, trace=result.trace, rr_sets=sampled.rr_sets_generated,
                           final_theta=sampled.collection.theta, lower_bound=sampled.lower_bound,
                           loop_rounds=sampled.loop_rounds, theta_history=sampled.theta_history)
    else:
        start = time.perf_counter()
        result = optimizer.run_on_graph(graph, strategy, budget, config.org_iterations, streams.child("original"),
                                        config.org_eval_sims, chunk_size=config.chunk_size)
        timings["optimize"] = time.perf_counter() - start
        report = RunReport(algorithm=optimizer.label, trace=result.trace)

    start = time.perf_counter()
    evaluation = evaluate(graph, strategy, budget, result.x, config.eval_sims, config.eval_runs,
                          streams.child("evaluate"), config.chunk_size, config.workers)
    timings["evaluate"] = time.perf_counter() - start
    report.timings = timings
    report.evaluation = evaluation

    return Solution(x=result.x, value=evaluation.mean, g_part=evaluation.g_part, s_part=evaluation.s_part,
                    report=report)


def load_graph(config: Dict[str, Any]) -> DirectedGraph:
    """Load graph.path or generate the configured synthetic graph."""
    if config.get("graph.path"):
        return read_edge_list_file(config["graph.path"], config["graph.weights"])
    if config["graph.weights"] == "explicit":
        logger.info("Synthetic graphs always carry weighted-cascade probabilities")
    return generate_synthetic(config["graph.synthetic.kind"], config["graph.synthetic.n"],
                              config["graph.synthetic.param"], config["graph.synthetic.seed"])


def build_problem(config: Dict[str, Any]) -> Tuple[DirectedGraph, StrategyModel, Scenario, BudgetModel]:
    """Graph, strategy model, scenario and base budget model of a run config."""
    graph = load_graph(config)
    strategy, scenario = build_scenario(graph, config["scenario.kind"], config["scenario.d"],
                                        config["scenario.size_bounds"], seed=config["seed"],
                                        max_attempts=config["caps.scenario_attempts"])
    budget = BudgetModel(config["cost.kind"], config["budget.k"], config["budget.lambda"], strategy.d,
                         strategy.upper)
    return graph, strategy, scenario, budget


def sweep_points(config: Dict[str, Any]) -> List[Tuple[float, float]]:
    """(k, lambda) pairs: the product of sweep.k and sweep.lambda, defaulting to the base values."""
    ks = config.get("sweep.k") or [config["budget.k"]]
    lams = config.get("sweep.lambda") or [config["budget.lambda"]]
    points = [(float(k), float(lam)) for k in ks for lam in lams]
    for k, lam in points:
        if not k > 0 or lam < 0 or math.isnan(lam):
            raise ConfigError(f"sweep point k={k}, lambda={lam} is out of range")
    return points
