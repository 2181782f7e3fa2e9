"""
Reverse-reachable (RR) sets and the sampling procedure that sizes them.

An RR set is the set of nodes that reach a uniformly random root in one
live-edge sample. Collections are stored flat (CSR): one node array plus a
pointer array, so objective evaluations are vectorised numpy reductions.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from src.cim_core.errors import ConfigError, ResourceCapError
from src.cimbs.model.budget import BudgetModel
from src.cimbs.model.diffusion import TRIGGERING_MODEL, IndependentCascade
from src.cimbs.model.graph import DirectedGraph
from src.cimbs.utils.parallel import map_chunks
from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)

RESAMPLE_MODES = ("reuse", "fresh")
DEFAULT_THETA_CAP = 10_000_000


@dataclass(frozen=True)
class RRSet:
    root: int
    nodes: np.ndarray

    def __len__(self) -> int:
        return int(self.nodes.size)


@dataclass(frozen=True, eq=False)
class RRCollection:
    """theta RR sets; set i is nodes[ptr[i]:ptr[i+1]]."""

    n: int
    nodes: np.ndarray
    ptr: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "RRCollection":
        return cls(n, np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64))

    @classmethod
    def from_sets(cls, n: int, sets: Sequence[Sequence[int]]) -> "RRCollection":
        sizes = np.asarray([len(s) for s in sets], dtype=np.int64)
        ptr = np.zeros(len(sets) + 1, dtype=np.int64)
        np.cumsum(sizes, out=ptr[1:])
        nodes = np.concatenate([np.asarray(s, dtype=np.int64) for s in sets]) if len(sets) else \
            np.zeros(0, dtype=np.int64)
        return cls(n, nodes, ptr)

    @property
    def theta(self) -> int:
        return int(self.ptr.size - 1)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.diff(self.ptr)

    @cached_property
    def set_index(self) -> np.ndarray:
        """Owning RR set of every entry in nodes."""
        return np.repeat(np.arange(self.theta, dtype=np.int64), self.sizes)

    def moment(self, order: int) -> float:
        if self.theta == 0:
            raise ValueError("moments of an empty RR collection are undefined")
        return float(np.mean(self.sizes.astype(float) ** order))

    @property
    def nu1(self) -> float:
        return self.moment(1)

    @property
    def nu2(self) -> float:
        return self.moment(2)

    @property
    def nu3(self) -> float:
        return self.moment(3)

    def get(self, i: int) -> np.ndarray:
        return self.nodes[self.ptr[i]:self.ptr[i + 1]]

    def concat(self, other: "RRCollection") -> "RRCollection":
        if other.n != self.n:
            raise ValueError("cannot merge RR collections over different node counts")
        ptr = np.concatenate([self.ptr, other.ptr[1:] + self.ptr[-1]])
        return RRCollection(self.n, np.concatenate([self.nodes, other.nodes]), ptr)


@dataclass
class SamplingOutput:
    collection: RRCollection
    lower_bound: float
    loop_rounds: int
    theta_history: List[int] = field(default_factory=list)
    rr_sets_generated: int = 0


class ApproximateAlgorithm(Protocol):
    """An (alpha, eps)-approximate maximiser of the RR-set objective plus s."""

    alpha: float

    def __call__(self, collection: RRCollection, additive_target: float) -> Tuple[np.ndarray, float]:
        """Return (y, (hat g_R + s)(y))."""


def sample_rr(graph: DirectedGraph, rng: np.random.Generator,
              model: IndependentCascade = TRIGGERING_MODEL) -> RRSet:
    """One RR set: uniform root, reverse BFS flipping each frontier in-edge lazily."""
    if graph.n < 1:
        raise ValueError("RR sampling needs at least one node")
    root = int(rng.integers(graph.n))
    return RRSet(root, np.asarray(_reverse_bfs(graph, root, rng, model, set()), dtype=np.int64))


def _reverse_bfs(graph: DirectedGraph, root: int, rng: np.random.Generator,
                 model: IndependentCascade, visited: set) -> List[int]:
    visited.clear()
    visited.add(root)
    order = [root]
    stack = [root]
    while stack:
        v = stack.pop()
        for u in model.sample_in_edges(graph, v, rng):
            if u not in visited:
                visited.add(u)
                order.append(u)
                stack.append(u)
    return order


def _rr_chunk(graph: DirectedGraph, count: int, rng: np.random.Generator):
    nodes: List[int] = []
    sizes = np.empty(count, dtype=np.int64)
    visited: set = set()
    n = graph.n
    for i in range(count):
        root = int(rng.integers(n))
        members = _reverse_bfs(graph, root, rng, TRIGGERING_MODEL, visited)
        sizes[i] = len(members)
        nodes.extend(members)
    return np.asarray(nodes, dtype=np.int64), sizes


def generate(graph: DirectedGraph,
             count: int,
             streams: SeedStreams,
             chunk_size: int = 1000,
             workers: Optional[int] = 1) -> RRCollection:
    """Generate count independent RR sets; identical output for any worker count."""
    if count < 0:
        raise ValueError(f"RR set count must be non-negative, got {count}")
    if count == 0:
        return RRCollection.empty(graph.n)

    parts = map_chunks(_rr_chunk, graph, count, streams, chunk_size, workers)
    nodes = np.concatenate([part[0] for part in parts])
    sizes = np.concatenate([part[1] for part in parts])
    ptr = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    return RRCollection(graph.n, nodes, ptr)


def moments_report(collection: RRCollection) -> Tuple[float, float, float]:
    return collection.nu1, collection.nu2, collection.nu3


def relaxation_factors(collection: RRCollection, n: Optional[int] = None) -> Tuple[float, float, float, float]:
    """n/nu1, n^2/nu2, nu1*n/nu2 and nu1*n^2/nu3: the gaps closed by using moments instead of n."""
    n = collection.n if n is None else n
    nu1, nu2, nu3 = moments_report(collection)
    return n / nu1, n * n / nu2, nu1 * n / nu2, nu1 * n * n / nu3


def covering_log(budget: BudgetModel, radius: float) -> float:
    """Log of the covering-number bound (3k/r)^d of P, clamped at 0."""
    if not radius > 0:
        raise ValueError(f"covering radius must be positive, got {radius}")
    if math.isinf(radius):
        return 0.0
    return max(0.0, budget.d * math.log(3.0 * budget.k / radius))


def round_count(n: int, lam: float, k: float) -> int:
    """Number of lower-bound search rounds, floor(log2(n + lam*k)) - 1 (at least 0)."""
    return max(0, math.floor(math.log2(n + lam * k)) - 1)


def theta_round(n: int, x_i: float, epsilon: float, ell: float, budget: BudgetModel, l2: float) -> int:
    """RR sets needed in a search round with guess x_i."""
    eps_prime = math.sqrt(2.0) * epsilon / 3.0
    radius = (epsilon / 3.0) * x_i / l2 if l2 > 0 else math.inf
    log_terms = (covering_log(budget, radius) + ell * math.log(n) + math.log(2.0)
                 + math.log(math.log2(n + budget.lam * budget.k)))
    return math.ceil(n * (2.0 + 2.0 * eps_prime / 3.0) * log_terms / (eps_prime ** 2 * x_i))


def theta_one(n: int, lower_bound: float, epsilon: float, ell: float, alpha: float) -> float:
    return 8.0 * n * math.log(4.0 * n ** ell) / (lower_bound * (alpha - epsilon / 3.0) ** 2 * epsilon ** 2 / 9.0)


def theta_two(n: int, lower_bound: float, epsilon: float, ell: float, alpha: float,
              budget: BudgetModel, l1: float, l2: float) -> float:
    alpha_prime = alpha - epsilon / 3.0
    radius = (epsilon / 3.0) * lower_bound / (l1 + l2) if l1 + l2 > 0 else math.inf
    log_terms = math.log(4.0) + ell * math.log(n) + covering_log(budget, radius)
    gap = epsilon / 3.0 - 0.25 * (alpha - epsilon / 3.0) ** 2 * epsilon / 3.0
    return 2.0 * alpha_prime * n * log_terms / (gap ** 2 * lower_bound)


def _check_cap(required: int, cap: Optional[int], what: str) -> None:
    if cap is not None and required > cap:
        raise ResourceCapError(f"{what} needs {required} RR sets, above the cap of {cap}", required, cap)


def sampling_procedure(graph: DirectedGraph,
                       budget: BudgetModel,
                       epsilon: float,
                       ell: float,
                       l1: float,
                       l2: float,
                       algorithm: ApproximateAlgorithm,
                       streams: SeedStreams,
                       resample_mode: str = "reuse",
                       theta_cap: Optional[int] = DEFAULT_THETA_CAP,
                       chunk_size: int = 1000,
                       workers: Optional[int] = 1) -> SamplingOutput:
    """
    Find a lower bound LB on the optimum and size the final RR collection.

    Each round halves the guess x_i = (n + lam*k)/2^i, grows (reuse) or redraws
    (fresh) the collection to theta_i sets, and runs the supplied algorithm with
    additive target eps*x_i/3; the first round whose value clears
    (1 + eps' + eps/3)*x_i fixes LB. The returned collection is a fresh draw of
    max(theta1, theta2) sets.

    Raises:
        ConfigError: Parameters outside their ranges.
        ResourceCapError: A round or the final draw needs more than theta_cap sets.
    """
    n = graph.n
    alpha = algorithm.alpha
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not ell > 0:
        raise ConfigError(f"ell must be positive, got {ell}")
    if resample_mode not in RESAMPLE_MODES:
        raise ConfigError(f"Unknown resample mode: {resample_mode}")
    if not alpha > epsilon / 3.0:
        raise ConfigError(f"approximation ratio {alpha} must exceed epsilon/3 = {epsilon / 3.0}")

    eps_prime = math.sqrt(2.0) * epsilon / 3.0
    scale = n + budget.lam * budget.k
    rounds = round_count(n, budget.lam, budget.k)
    threshold_factor = 1.0 + eps_prime + epsilon / 3.0

    lower_bound = 1.0
    collection = RRCollection.empty(n)
    history: List[int] = []
    generated = 0
    executed = 0

    for i in range(1, rounds + 1):
        executed = i
        x_i = scale / 2.0 ** i
        theta_i = theta_round(n, x_i, epsilon, ell, budget, l2)
        _check_cap(theta_i, theta_cap, f"sampling round {i}")
        history.append(theta_i)

        round_streams = streams.child("round", i)
        if resample_mode == "reuse":
            extra = max(0, theta_i - collection.theta)
            collection = collection.concat(generate(graph, extra, round_streams, chunk_size, workers))
            generated += extra
        else:
            collection = generate(graph, theta_i, round_streams, chunk_size, workers)
            generated += theta_i

        _, value = algorithm(collection, epsilon * x_i / 3.0)
        logger.info(f"Sampling round {i}/{rounds}: x_i={x_i:.4g} theta_i={theta_i} value={value:.4g}")
        if value >= threshold_factor * x_i:
            lower_bound = max(1.0, value / threshold_factor)
            logger.info(f"Lower bound found in round {i}: LB={lower_bound:.4g}")
            break

    t1 = theta_one(n, lower_bound, epsilon, ell, alpha)
    t2 = theta_two(n, lower_bound, epsilon, ell, alpha, budget, l1, l2)
    theta_final = math.ceil(max(t1, t2))
    _check_cap(theta_final, theta_cap, "final collection")
    logger.info(f"Final RR collection: theta1={t1:.4g} theta2={t2:.4g} -> {theta_final} sets (LB={lower_bound:.4g})")

    final = generate(graph, theta_final, streams.child("final"), chunk_size, workers)
    return SamplingOutput(collection=final, lower_bound=lower_bound, loop_rounds=executed,
                          theta_history=history, rr_sets_generated=generated + theta_final)
