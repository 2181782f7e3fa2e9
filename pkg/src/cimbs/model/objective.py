"""
RR-set objectives for the budget-saving problem.

hat g_R(x) = (n/theta) * sum_R (1 - prod_{v in R} (1 - h_v(x)))   monotone DR-submodular estimator
bar g_R(x) = (n/theta) * sum_R min(1, sum_{v in R, j} q_vj(x_j))  concave upper bound (independent models)

Both are combined with s(x) = lambda (k - c(x)); gradients are exact, with
leave-one-out products taken from segment_products.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.cim_core.errors import UnsupportedModelError
from src.cimbs.model.budget import BudgetModel, cost_subgradient, s_value
from src.cimbs.model.diffusion import SpreadWorkspace, draw_seeds, marginal_gain_on, sample_live_edge
from src.cimbs.model.graph import DirectedGraph
from src.cimbs.model.rrset import RRCollection
from src.cimbs.model.segments import segment_products
from src.cimbs.model.strategy import IndependentActivation, StrategyModel

logger = logging.getLogger(__name__)

ROUTES = ("hat", "bar")


@dataclass(frozen=True, eq=False)
class ObjectiveBundle:
    collection: RRCollection
    strategy: StrategyModel
    budget: BudgetModel

    def __post_init__(self):
        if self.collection.theta < 1:
            raise ValueError("objectives need at least one RR set")
        if self.collection.n != self.strategy.n:
            raise ValueError("RR collection and strategy model disagree on n")
        if self.budget.d != self.strategy.d:
            raise ValueError("budget and strategy model disagree on d")

    @property
    def n(self) -> int:
        return self.collection.n

    @property
    def scale(self) -> float:
        return self.n / self.collection.theta

    @property
    def smoothness(self) -> float:
        """nu1*n*beta_h + nu2*n*L_h^2, the smoothness of hat g_R."""
        c = self.collection
        return c.nu1 * self.n * self.strategy.smoothness + c.nu2 * self.n * self.strategy.lipschitz ** 2

    @property
    def hat_lipschitz(self) -> float:
        """nu1*n*L_h + lambda*L_c, the Lipschitz constant of hat g_R + s."""
        return self.collection.nu1 * self.n * self.strategy.lipschitz + self.budget.lam * self.budget.lipschitz

    @property
    def bar_lipschitz(self) -> float:
        """nu1*n*sqrt(d)*L_q + lambda*L_c, the Lipschitz constant of bar g_R + s."""
        model = _require_independent(self.strategy)
        return (self.collection.nu1 * self.n * math.sqrt(model.d) * model.q_lipschitz
                + self.budget.lam * self.budget.lipschitz)


def _require_independent(strategy: StrategyModel) -> IndependentActivation:
    if not strategy.independent:
        raise UnsupportedModelError("the concave upper bound needs an independent-activation strategy model")
    return strategy


def _leave_one_out(bundle: ObjectiveBundle, h: np.ndarray):
    c = bundle.collection
    return segment_products(1.0 - h[c.nodes], c.ptr)


def hat_g(bundle: ObjectiveBundle, x: np.ndarray) -> float:
    full, _ = _leave_one_out(bundle, bundle.strategy.values(x))
    return float(bundle.scale * (1.0 - full).sum())


def grad_hat_g(bundle: ObjectiveBundle, x: np.ndarray) -> np.ndarray:
    return value_and_grad(bundle, x)[1]


def value_and_grad(bundle: ObjectiveBundle, x: np.ndarray) -> Tuple[float, np.ndarray]:
    """hat g_R(x) and its gradient from one pass over the collection."""
    h = bundle.strategy.values(x)
    full, loo = _leave_one_out(bundle, h)
    node_weights = np.bincount(bundle.collection.nodes, weights=loo, minlength=bundle.n)
    grad = bundle.scale * bundle.strategy.weighted_grad(node_weights, x)
    return float(bundle.scale * (1.0 - full).sum()), grad


def _coverage_sums(bundle: ObjectiveBundle, model: IndependentActivation, x: np.ndarray) -> np.ndarray:
    c = bundle.collection
    per_node = model.q_sums(x)
    return np.add.reduceat(per_node[c.nodes], c.ptr[:-1])


def bar_g(bundle: ObjectiveBundle, x: np.ndarray) -> float:
    model = _require_independent(bundle.strategy)
    sums = _coverage_sums(bundle, model, x)
    return float(bundle.scale * np.minimum(1.0, sums).sum())


def subgrad_bar_g(bundle: ObjectiveBundle, x: np.ndarray) -> np.ndarray:
    """Sum over unsaturated RR sets (coverage < 1) of the q-gradients of their members."""
    model = _require_independent(bundle.strategy)
    c = bundle.collection
    sums = _coverage_sums(bundle, model, x)
    open_sets = (sums < 1.0).astype(float)
    node_weights = np.bincount(c.nodes, weights=open_sets[c.set_index], minlength=bundle.n)
    _, dq = model.q_entries(x)
    grad = np.bincount(model.entry_dim, weights=node_weights[model.entry_node] * dq, minlength=model.d)
    return bundle.scale * grad


def estimator(bundle: ObjectiveBundle, x: np.ndarray, which: str = "hat") -> float:
    if which == "hat":
        return hat_g(bundle, x)
    if which == "bar":
        return bar_g(bundle, x)
    raise ValueError(f"Unknown objective route: {which}")


def combined(bundle: ObjectiveBundle, x: np.ndarray, which: str = "hat") -> float:
    """hat g_R + s or bar g_R + s."""
    return estimator(bundle, x, which) + s_value(bundle.budget, x)


def combined_supergradient(bundle: ObjectiveBundle, x: np.ndarray, which: str = "hat") -> np.ndarray:
    """(Super)gradient of estimator + s: the estimator part minus lambda times a subgradient of c."""
    if which == "hat":
        part = grad_hat_g(bundle, x)
    elif which == "bar":
        part = subgrad_bar_g(bundle, x)
    else:
        raise ValueError(f"Unknown objective route: {which}")
    return part - bundle.budget.lam * cost_subgradient(bundle.budget, x)


def decompose(bundle: ObjectiveBundle, x: np.ndarray, which: str = "hat") -> Tuple[float, float]:
    """(estimator part, budget-saving part); they sum to combined()."""
    return estimator(bundle, x, which), s_value(bundle.budget, x)


def stochastic_grad_g(graph: DirectedGraph,
                      strategy: StrategyModel,
                      x: np.ndarray,
                      rng: np.random.Generator,
                      h: Optional[np.ndarray] = None,
                      workspace: Optional[SpreadWorkspace] = None) -> np.ndarray:
    """
    One unbiased draw of the gradient of g.

    Picks u' uniformly, S ~ h(x) on the other nodes and one live-edge graph L,
    and returns n * |reach_L(u') minus reach_L(S)| * grad h_u'(x).
    """
    n = graph.n
    h = strategy.values(x) if h is None else h
    u_prime = int(rng.integers(n))
    others = h.copy()
    others[u_prime] = 0.0
    seeds = draw_seeds(others, rng)
    live = sample_live_edge(graph, rng)
    gain = marginal_gain_on(live, u_prime, seeds.tolist(), workspace)
    if gain == 0:
        return np.zeros(strategy.d)
    return n * gain * strategy.h_grad(u_prime, x)


def stochastic_grad_samples(graph: DirectedGraph,
                            strategy: StrategyModel,
                            x: np.ndarray,
                            count: int,
                            rng: np.random.Generator) -> np.ndarray:
    """count independent draws of stochastic_grad_g at x, one per row."""
    if count < 1:
        raise ValueError(f"draw count must be at least 1, got {count}")
    h = strategy.values(x)
    workspace = SpreadWorkspace(graph.n)
    return np.stack([stochastic_grad_g(graph, strategy, x, rng, h, workspace) for _ in range(count)])
