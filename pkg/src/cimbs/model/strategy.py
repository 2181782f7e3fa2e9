"""
Strategy activation models h_v(x).

A strategy mix x is a d-dimensional vector of marketing effort. A strategy
model maps x to per-node seed probabilities h_v(x) and supplies the sparse
Jacobian of h together with its Lipschitz and smoothness constants.

The independent-activation model composes h_v(x) = 1 - prod_j (1 - q_vj(x_j))
from concave, nondecreasing activation functions q registered by id.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.cim_core.algorithms.algorithm_decorator import register_activation
from src.cim_core.algorithms.registry import activation_registry
from src.cim_core.errors import ConfigError, DomainError
from src.cimbs.model.graph import DirectedGraph
from src.cimbs.model.segments import segment_products

logger = logging.getLogger(__name__)

DOMAIN_TOL = 1e-9


class ActivationFunction(ABC):
    """Concave, nondecreasing q with q(0) = 0 mapping [0, upper] into [0, 1]."""

    name: str = ""
    lipschitz: float = 0.0
    smoothness: float = 0.0
    upper: float = math.inf

    def check_domain(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < -DOMAIN_TOL) or np.any(x > self.upper + DOMAIN_TOL):
            bad = x[(x < -DOMAIN_TOL) | (x > self.upper + DOMAIN_TOL)]
            raise DomainError(f"activation '{self.name}' is defined on [0, {self.upper}], got {bad[:3]}")
        return np.clip(x, 0.0, self.upper)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._value(self.check_domain(x))

    def derivative(self, x: np.ndarray) -> np.ndarray:
        return self._derivative(self.check_domain(x))

    @abstractmethod
    def _value(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _derivative(self, x: np.ndarray) -> np.ndarray:
        ...


@register_activation("quadratic")
class QuadraticActivation(ActivationFunction):
    """q(x) = 2x - x^2 on [0, 1]."""

    name = "quadratic"
    lipschitz = 2.0
    smoothness = 2.0
    upper = 1.0

    def _value(self, x):
        return 2.0 * x - x * x

    def _derivative(self, x):
        return 2.0 - 2.0 * x


@register_activation("saturating")
class SaturatingActivation(ActivationFunction):
    """q(x) = 1 - exp(-x) on [0, inf)."""

    name = "saturating"
    lipschitz = 1.0
    smoothness = 1.0
    upper = math.inf

    def _value(self, x):
        return -np.expm1(-x)

    def _derivative(self, x):
        return np.exp(-x)


def get_activation(q_id: str) -> ActivationFunction:
    """Instantiate a registered activation function by id."""
    try:
        return activation_registry.require(q_id)()
    except KeyError as e:
        raise ConfigError(str(e)) from e


def q_quadratic(x: float) -> Tuple[float, float]:
    """Value and derivative of 2x - x^2; raises DomainError outside [0, 1]."""
    q = QuadraticActivation()
    arr = np.asarray([x], dtype=float)
    return float(q.value(arr)[0]), float(q.derivative(arr)[0])


class StrategyModel(ABC):
    """
    Per-node activation h_v(x) over a d-dimensional strategy domain.

    Subclasses provide the vector of h values and the nonzero Jacobian entries;
    dense single-node accessors are derived from those.
    """

    independent = False

    def __init__(self, n: int, d: int, upper: Sequence[float], lipschitz: float, smoothness: float):
        self.n = int(n)
        self.d = int(d)
        self.upper = np.asarray(upper, dtype=float)
        self.lipschitz = float(lipschitz)
        self.smoothness = float(smoothness)
        if self.upper.shape != (self.d,):
            raise ValueError(f"upper must have length d={self.d}")

    def check_domain(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DomainError(f"strategy mix must have shape ({self.d},), got {x.shape}")
        if np.any(x < -DOMAIN_TOL) or np.any(x > self.upper + DOMAIN_TOL):
            raise DomainError("strategy mix lies outside the domain [0, upper]")
        return np.clip(x, 0.0, self.upper)

    @abstractmethod
    def values(self, x: np.ndarray) -> np.ndarray:
        """h_v(x) for every node, shape (n,)."""

    @abstractmethod
    def grad_entries(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzero Jacobian entries as (node, dim, d h_node / d x_dim)."""

    def h_value(self, v: int, x: np.ndarray) -> float:
        return float(self.values(x)[v])

    def h_grad(self, v: int, x: np.ndarray) -> np.ndarray:
        nodes, dims, partials = self.grad_entries(x)
        grad = np.zeros(self.d)
        mask = nodes == v
        np.add.at(grad, dims[mask], partials[mask])
        return grad

    def weighted_grad(self, node_weights: np.ndarray, x: np.ndarray) -> np.ndarray:
        """sum_v node_weights[v] * grad h_v(x)."""
        nodes, dims, partials = self.grad_entries(x)
        grad = np.zeros(self.d)
        np.add.at(grad, dims, node_weights[nodes] * partials)
        return grad

    @property
    def q_lipschitz(self) -> Optional[float]:
        return None


class IndependentActivation(StrategyModel):
    """
    h_v(x) = 1 - prod over v's entries (j, q) of (1 - q(x_j)).

    Nodes without entries have h_v = 0.
    """

    independent = True

    def __init__(self, n: int, d: int, entry_node: Sequence[int], entry_dim: Sequence[int],
                 entry_q: Sequence[str]):
        entry_node = np.asarray(entry_node, dtype=np.int64)
        entry_dim = np.asarray(entry_dim, dtype=np.int64)
        if not (len(entry_node) == len(entry_dim) == len(entry_q)):
            raise ValueError("entry arrays must have equal length")
        if entry_node.size and (entry_node.min() < 0 or entry_node.max() >= n):
            raise ValueError("entry node outside [0, n)")
        if entry_dim.size and (entry_dim.min() < 0 or entry_dim.max() >= d):
            raise ValueError("entry dimension outside [0, d)")

        order = np.argsort(entry_node, kind="stable")
        self.entry_node = entry_node[order]
        self.entry_dim = entry_dim[order]
        q_ids = [entry_q[i] for i in order]

        self.q_functions: List[ActivationFunction] = []
        index_of = {}
        for q_id in q_ids:
            if q_id not in index_of:
                index_of[q_id] = len(self.q_functions)
                self.q_functions.append(get_activation(q_id))
        self.entry_q = np.asarray([index_of[q_id] for q_id in q_ids], dtype=np.int64)

        counts = np.bincount(self.entry_node, minlength=n)
        self.node_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.node_ptr[1:])
        self.max_dims_per_node = int(counts.max()) if n else 0

        upper = np.full(d, math.inf)
        for dim, qi in zip(self.entry_dim, self.entry_q):
            upper[dim] = min(upper[dim], self.q_functions[qi].upper)

        l_q = max((q.lipschitz for q in self.q_functions), default=0.0)
        beta_q = max((q.smoothness for q in self.q_functions), default=0.0)
        self._l_q = l_q
        dims = self.max_dims_per_node
        lipschitz = l_q * math.sqrt(dims) if dims else 0.0
        smoothness = beta_q + l_q * l_q * (dims - 1) if dims else 0.0
        super().__init__(n, d, upper, lipschitz, smoothness)

    @property
    def q_lipschitz(self) -> Optional[float]:
        return self._l_q

    def q_entries(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """q_vj(x_j) and q'_vj(x_j) for every entry."""
        x = self.check_domain(x)
        xs = x[self.entry_dim]
        q = np.empty_like(xs)
        dq = np.empty_like(xs)
        for qi, func in enumerate(self.q_functions):
            mask = self.entry_q == qi
            q[mask] = func.value(xs[mask])
            dq[mask] = func.derivative(xs[mask])
        return np.clip(q, 0.0, 1.0), dq

    def values(self, x: np.ndarray) -> np.ndarray:
        q, _ = self.q_entries(x)
        full, _ = segment_products(1.0 - q, self.node_ptr)
        return 1.0 - full

    def grad_entries(self, x: np.ndarray):
        q, dq = self.q_entries(x)
        _, loo = segment_products(1.0 - q, self.node_ptr)
        return self.entry_node, self.entry_dim, dq * loo

    def q_sums(self, x: np.ndarray) -> np.ndarray:
        """sum_j q_vj(x_j) per node."""
        q, _ = self.q_entries(x)
        return np.bincount(self.entry_node, weights=q, minlength=self.n)


@dataclass(frozen=True)
class Scenario:
    kind: str
    segment_of: Optional[np.ndarray] = None
    size_bounds: Optional[Tuple[int, int]] = None

    def segment_sizes(self, d: int) -> Optional[np.ndarray]:
        if self.segment_of is None:
            return None
        return np.bincount(self.segment_of, minlength=d)


def build_scenario(graph: DirectedGraph,
                   kind: str,
                   d: Optional[int] = None,
                   size_bounds: Optional[Sequence[int]] = None,
                   seed: int = 0,
                   q_id: str = "quadratic",
                   max_attempts: int = 1000) -> Tuple[IndependentActivation, Scenario]:
    """
    Build the strategy model of an experiment scenario.

    personalized: one dimension per node (d = n, any d argument is ignored).
    segment: every node joins one of d segments uniformly at random; the whole
    assignment is redrawn until every segment size lies within size_bounds.

    Raises:
        ConfigError: Unknown kind, n < d, or bounds not met within max_attempts.
    """
    n = graph.n
    if kind == "personalized":
        if d is not None and d != n:
            logger.debug(f"Personalized scenario uses d=n={n}; ignoring d={d}")
        model = IndependentActivation(n, n, np.arange(n), np.arange(n), [q_id] * n)
        return model, Scenario(kind="personalized")

    if kind != "segment":
        raise ConfigError(f"Unknown scenario kind: {kind}")
    if d is None or d < 1:
        raise ConfigError("segment scenario needs d >= 1")
    if n < d:
        raise ConfigError(f"segment scenario needs n >= d (n={n}, d={d})")

    bounds = tuple(size_bounds) if size_bounds else None
    if bounds is not None and len(bounds) != 2:
        raise ConfigError(f"size bounds must be a (low, high) pair, got {size_bounds}")

    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        segment_of = rng.integers(0, d, size=n)
        sizes = np.bincount(segment_of, minlength=d)
        if bounds is None or (sizes.min() >= bounds[0] and sizes.max() <= bounds[1]):
            logger.info(f"Segment assignment accepted after {attempt} attempt(s): sizes={sizes.tolist()}")
            model = IndependentActivation(n, d, np.arange(n), segment_of, [q_id] * n)
            return model, Scenario(kind="segment", segment_of=segment_of, size_bounds=bounds)

    raise ConfigError(f"No segment assignment with sizes in {bounds} for n={n}, d={d} "
                      f"after {max_attempts} attempts")


def constants(model: StrategyModel) -> Tuple[float, float, Optional[float]]:
    """(L_h, beta_h, L_q) of a strategy model; L_q is None for non-independent models."""
    return model.lipschitz, model.smoothness, model.q_lipschitz
