"""
Approximate maximisers of the RR-set objective plus budget saving.

Optimizers are registered by kind with @register_optimizer and built from an
OptimizerSpec. Each declares its approximation ratio, the objective route it
climbs (hat g_R or bar g_R) and whether it consumes RR sets at all.

    proxgrad_ris   proximal gradient ascent on hat g_R + s         ratio 1/2
    uppergrad_ris  projected subgradient ascent on bar g_R + s      ratio 1 - 1/e
    greedy_ris     coordinate greedy with a fixed step              no guarantee
    proxgrad_org   stochastic proximal gradient on g + s itself     ratio 1/2, standalone
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.cim_core.algorithms.algorithm_decorator import register_optimizer
from src.cim_core.algorithms.registry import optimizer_registry
from src.cim_core.errors import ConfigError, UnsupportedModelError
from src.cimbs.model.budget import FEASIBILITY_TOL, BudgetModel, diameter, is_feasible, project, prox, s_value
from src.cimbs.model.diffusion import SpreadWorkspace, estimate_g
from src.cimbs.model.graph import DirectedGraph
from src.cimbs.model.objective import (ObjectiveBundle, combined, combined_supergradient, stochastic_grad_g,
                                       value_and_grad)
from src.cimbs.model.rrset import RRCollection
from src.cimbs.model.strategy import StrategyModel
from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)

TERMINATIONS = ("theory", "heuristic")
GREEDY_SAMPLING_ALPHA = 1.0 - 1.0 / math.e
MIN_SMOOTHNESS = 1e-12


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str
    termination: str = "theory"
    heu_threshold: float = 0.3
    greedy_step: float = 0.1
    iteration_cap: int = 1_000_000
    org_iterations: int = 2000
    org_eval_sims: int = 200
    step_override: Optional[float] = None

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ConfigError(f"Unknown termination mode: {self.termination}")
        if not self.heu_threshold > 0:
            raise ConfigError(f"heuristic threshold must be positive, got {self.heu_threshold}")
        if not self.greedy_step > 0:
            raise ConfigError(f"greedy step must be positive, got {self.greedy_step}")
        if self.iteration_cap < 1:
            raise ConfigError("iteration cap must be at least 1")
        if self.step_override is not None and not self.step_override > 0:
            raise ConfigError(f"step override must be positive, got {self.step_override}")


@dataclass
class Trace:
    """Recorded objective values with a running best."""

    values: List[float] = field(default_factory=list)
    best_index: int = -1
    best_x: Optional[np.ndarray] = None
    iterations: int = 0
    planned_iterations: int = 0
    truncated: bool = False

    @property
    def best_value(self) -> float:
        return self.values[self.best_index] if self.values else -math.inf

    def record(self, x: np.ndarray, value: float) -> None:
        if math.isnan(value):
            raise FloatingPointError("objective evaluated to NaN")
        self.values.append(value)
        if self.best_index < 0 or value > self.values[self.best_index]:
            self.best_index = len(self.values) - 1
            self.best_x = np.array(x, dtype=float)

    def flat(self, threshold: Optional[float]) -> bool:
        """True once the last two recorded values differ by less than threshold."""
        return threshold is not None and len(self.values) >= 2 and \
            abs(self.values[-1] - self.values[-2]) < threshold


@dataclass
class OptimizerResult:
    x: np.ndarray
    value: float
    hat_value: float
    trace: Trace


def _plan(required: float, cap: int, name: str) -> Tuple[int, bool]:
    """Clamp a theory iteration count to the cap; flags truncation."""
    if required > cap:
        logger.warning(f"{name}: theory needs {required:.4g} iterations, truncating to {cap}")
        return cap, True
    return int(required), False


def lipschitz_bounds(kind: str, n: int, strategy: StrategyModel, budget: BudgetModel) -> Tuple[float, float]:
    """(L1, L2) fed to the sampling procedure for an optimizer kind."""
    lam_part = budget.lam * budget.lipschitz
    if kind == "uppergrad_ris":
        if not strategy.independent:
            raise UnsupportedModelError("uppergrad_ris needs an independent-activation strategy model")
        value = n * n * math.sqrt(strategy.d) * strategy.q_lipschitz + lam_part
    else:
        value = n * n * strategy.lipschitz + lam_part
    return value, value


class Optimizer(ABC):
    name: str = ""
    alpha: Optional[float] = None
    route: str = "hat"
    uses_rr_sets: bool = True

    def __init__(self, spec: OptimizerSpec):
        self.spec = spec

    @property
    def label(self) -> str:
        return self.name

    @property
    def sampling_alpha(self) -> float:
        """Ratio used to size RR collections."""
        return self.alpha

    def lipschitz_pair(self, n: int, strategy: StrategyModel, budget: BudgetModel) -> Tuple[float, float]:
        return lipschitz_bounds(self.name, n, strategy, budget)

    @abstractmethod
    def run(self, bundle: ObjectiveBundle, additive_target: float,
            threshold: Optional[float] = None) -> OptimizerResult:
        """Maximise the route objective; threshold enables the flat-objective stop."""

    def _result(self, bundle: ObjectiveBundle, trace: Trace) -> OptimizerResult:
        x = trace.best_x
        hat_value = trace.best_value if self.route == "hat" else combined(bundle, x, "hat")
        logger.info(f"{self.label}: {trace.iterations} iterations (planned {trace.planned_iterations}, "
                    f"truncated={trace.truncated}), best value {trace.best_value:.6g}")
        return OptimizerResult(x=x, value=trace.best_value, hat_value=hat_value, trace=trace)


@register_optimizer("proxgrad_ris")
class ProximalGradient(Optimizer):
    """x+ = prox_{-eta s}(x + eta * grad hat g_R(x)) with eta = 1/beta."""

    name = "proxgrad_ris"
    alpha = 0.5
    route = "hat"

    def run(self, bundle, additive_target, threshold=None):
        if not additive_target > 0:
            raise ValueError(f"additive target must be positive, got {additive_target}")
        budget = bundle.budget
        beta = max(bundle.smoothness, MIN_SMOOTHNESS)
        eta = self.spec.step_override or 1.0 / beta
        delta = diameter(budget)
        planned, truncated = _plan(math.ceil(3.0 * beta * delta * delta / (4.0 * additive_target)),
                                   self.spec.iteration_cap, self.name)
        logger.debug(f"{self.name}: beta={beta:.4g} L={bundle.hat_lipschitz:.4g} eta={eta:.4g} T={planned}")

        trace = Trace(planned_iterations=planned, truncated=truncated)
        x = np.zeros(budget.d)
        value, grad = value_and_grad(bundle, x)
        trace.record(x, value + s_value(budget, x))
        for _ in range(planned):
            x = prox(budget, x + eta * grad, eta)
            value, grad = value_and_grad(bundle, x)
            trace.record(x, value + s_value(budget, x))
            trace.iterations += 1
            if trace.flat(threshold):
                break
        return self._result(bundle, trace)


@register_optimizer("uppergrad_ris")
class ProjectedSubgradient(Optimizer):
    """x+ = project(x + eta_t * (subgrad bar g_R(x) - lambda * grad c(x))), eta_t = Delta/(L sqrt t)."""

    name = "uppergrad_ris"
    alpha = 1.0 - 1.0 / math.e
    route = "bar"

    def run(self, bundle, additive_target, threshold=None):
        if not additive_target > 0:
            raise ValueError(f"additive target must be positive, got {additive_target}")
        if not bundle.strategy.independent:
            raise UnsupportedModelError("uppergrad_ris needs an independent-activation strategy model")
        budget = bundle.budget
        lipschitz = max(bundle.bar_lipschitz, MIN_SMOOTHNESS)
        delta = diameter(budget)
        planned, truncated = _plan(max(1, math.ceil(9.0 * (delta * lipschitz) ** 2 / additive_target ** 2)),
                                   self.spec.iteration_cap, self.name)
        logger.debug(f"{self.name}: L={lipschitz:.4g} T={planned}")

        trace = Trace(planned_iterations=planned, truncated=truncated)
        x = np.zeros(budget.d)
        trace.record(x, combined(bundle, x, "bar"))
        for t in range(1, planned + 1):
            step = self.spec.step_override or delta / (lipschitz * math.sqrt(t))
            x = project(budget, x + step * combined_supergradient(bundle, x, "bar"))
            trace.record(x, combined(bundle, x, "bar"))
            trace.iterations += 1
            if trace.flat(threshold):
                break
        return self._result(bundle, trace)


@register_optimizer("greedy_ris")
class GreedyCoordinate(Optimizer):
    """
    Start at 0 and repeatedly add `step` to the dimension with the largest
    gain in hat g_R + s; stop when no increment is feasible or no gain is
    positive. Ties go to the lowest dimension.
    """

    name = "greedy_ris"
    alpha = None
    route = "hat"

    @property
    def sampling_alpha(self) -> float:
        return GREEDY_SAMPLING_ALPHA

    def run(self, bundle, additive_target, threshold=None):
        budget = bundle.budget
        step = self.spec.greedy_step
        trace = Trace(planned_iterations=self.spec.iteration_cap)
        x = np.zeros(budget.d)
        current = combined(bundle, x, "hat")
        trace.record(x, current)

        while trace.iterations < self.spec.iteration_cap:
            best_gain, best_dim, best_value = -math.inf, -1, current
            for j in range(budget.d):
                candidate = x.copy()
                candidate[j] += step
                if not is_feasible(budget, candidate) or candidate[j] > bundle.strategy.upper[j] + FEASIBILITY_TOL:
                    continue
                value = combined(bundle, candidate, "hat")
                if value - current > best_gain:
                    best_gain, best_dim, best_value = value - current, j, value
            if best_dim < 0 or best_gain <= 0:
                break
            x[best_dim] += step
            current = best_value
            trace.record(x, current)
            trace.iterations += 1
        else:
            trace.truncated = True
            logger.warning(f"{self.name}: stopped at the iteration cap {self.spec.iteration_cap}")
        return self._result(bundle, trace)


@register_optimizer("proxgrad_org")
class StochasticProximalGradient(Optimizer):
    """
    Stochastic proximal gradient on g + s with unbiased marginal-gain
    gradients; runs on the graph directly and never consumes RR sets.
    """

    name = "proxgrad_org"
    alpha = 0.5
    route = "hat"
    uses_rr_sets = False

    def run(self, bundle, additive_target, threshold=None):
        raise UnsupportedModelError("proxgrad_org runs on the graph, use run_on_graph")

    def run_on_graph(self,
                     graph: DirectedGraph,
                     strategy: StrategyModel,
                     budget: BudgetModel,
                     iterations: int,
                     streams: SeedStreams,
                     eval_sims: int,
                     threshold: Optional[float] = None,
                     chunk_size: int = 1000) -> OptimizerResult:
        """
        Best iterate is picked by Monte Carlo estimates of g + s on every
        max(1, T/50)-th iterate and the last one; trace values are those estimates.
        """
        n = graph.n
        delta = diameter(budget)
        beta_g = strategy.smoothness * n * n + 2.0 * strategy.lipschitz ** 2 * n ** 3
        growth = 2.0 * math.sqrt(2.0) * strategy.lipschitz * n * n / delta
        thin = max(1, iterations // 50)
        rng = streams.child("gradient").generator(0)
        workspace = SpreadWorkspace(n)

        def evaluate(x: np.ndarray, t: int) -> float:
            est = estimate_g(graph, strategy, x, eval_sims, streams.child("evaluate", t), chunk_size)
            return est.mean + s_value(budget, x)

        trace = Trace(planned_iterations=iterations)
        x = np.zeros(budget.d)
        trace.record(x, evaluate(x, 0))
        for t in range(1, iterations + 1):
            mu = 1.0 / max(beta_g + growth * math.sqrt(t), MIN_SMOOTHNESS)
            h = strategy.values(x)
            direction = stochastic_grad_g(graph, strategy, x, rng, h, workspace)
            x = prox(budget, x + mu * direction, mu)
            trace.iterations += 1
            if t % thin == 0 or t == iterations:
                trace.record(x, evaluate(x, t))
                if trace.flat(threshold):
                    break

        logger.info(f"{self.name}: {trace.iterations} iterations, best estimated value {trace.best_value:.6g}")
        return OptimizerResult(x=trace.best_x, value=trace.best_value, hat_value=trace.best_value, trace=trace)


class HeuristicOptimizer(Optimizer):
    """Runs the inner optimizer but stops once consecutive objective values differ by < threshold."""

    def __init__(self, inner: Optimizer, threshold: float):
        if not threshold > 0:
            raise ConfigError(f"heuristic threshold must be positive, got {threshold}")
        super().__init__(inner.spec)
        self.inner = inner
        self.threshold = threshold
        self.name = inner.name
        self.route = inner.route
        self.uses_rr_sets = inner.uses_rr_sets
        self.alpha = None

    @property
    def label(self) -> str:
        return f"{self.inner.name}_heu"

    @property
    def sampling_alpha(self) -> float:
        return self.inner.sampling_alpha

    def run(self, bundle, additive_target, threshold=None):
        return self.inner.run(bundle, additive_target, self.threshold)

    def run_on_graph(self, *args, **kwargs) -> OptimizerResult:
        kwargs["threshold"] = self.threshold
        return self.inner.run_on_graph(*args, **kwargs)


def heuristic_wrap(inner: Optimizer, threshold: float = 0.3) -> HeuristicOptimizer:
    return HeuristicOptimizer(inner, threshold)


def build_optimizer(spec: OptimizerSpec) -> Optimizer:
    """
    Build the registered optimizer for spec.kind.

    Heuristic termination wraps iterative optimizers; greedy has its own stop
    rule and is returned unwrapped.
    """
    try:
        factory = optimizer_registry.require(spec.kind)
    except KeyError as e:
        raise ConfigError(str(e)) from e

    optimizer = factory(spec)
    if spec.termination == "heuristic" and optimizer.alpha is not None:
        return heuristic_wrap(optimizer, spec.heu_threshold)
    return optimizer


class SamplingAdapter:
    """Exposes an optimizer as the (alpha, eps)-approximate algorithm of the sampling procedure."""

    def __init__(self, optimizer: Optimizer, strategy: StrategyModel, budget: BudgetModel):
        self.optimizer = optimizer
        self.strategy = strategy
        self.budget = budget
        self.alpha = optimizer.sampling_alpha
        self.calls = 0

    def __call__(self, collection: RRCollection, additive_target: float) -> Tuple[np.ndarray, float]:
        self.calls += 1
        bundle = ObjectiveBundle(collection, self.strategy, self.budget)
        result = self.optimizer.run(bundle, additive_target)
        return result.x, result.hat_value
