"""
Forward diffusion under the independent-cascade triggering model.

Live-edge sampling, reachability spread, chunked Monte Carlo estimation of
sigma(S) and g(x), and brute-force enumeration oracles for tiny graphs.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.cim_core.errors import EnumerationLimitError
from src.cimbs.model.graph import DirectedGraph
from src.cimbs.model.strategy import StrategyModel
from src.cimbs.utils.parallel import map_chunks
from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)

EXACT_G_MAX_EDGES = 20
EXACT_GRAD_MAX_NODES = 10
EXACT_GRAD_MAX_EDGES = 16


class IndependentCascade:
    """
    Triggering model where each in-neighbour u of v joins v's triggering set
    independently with probability p(u, v).
    """

    name = "independent_cascade"

    def live_mask(self, graph: DirectedGraph, rng: np.random.Generator) -> np.ndarray:
        """Boolean mask over all edges; edge e is alive with probability p_e."""
        return rng.random(graph.m) < graph.prob

    def sample_in_edges(self, graph: DirectedGraph, v: int, rng: np.random.Generator) -> List[int]:
        """Sources of the live in-edges of v in one draw of v's triggering set."""
        pairs = graph.in_lists[v]
        if not pairs:
            return []
        draws = rng.random(len(pairs)).tolist()
        prob = graph.prob_list
        return [u for (u, e), r in zip(pairs, draws) if r < prob[e]]


TRIGGERING_MODEL = IndependentCascade()


@dataclass(frozen=True, eq=False)
class LiveEdgeGraph:
    graph: DirectedGraph
    alive: np.ndarray

    def __post_init__(self):
        if self.alive.shape != (self.graph.m,):
            raise ValueError(f"live mask must have length m={self.graph.m}, got {self.alive.shape}")

    @cached_property
    def alive_list(self) -> List[bool]:
        return self.alive.tolist()


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    std_error: float
    num_sims: int


class SpreadWorkspace:
    """Epoch-stamped visited array shared by consecutive BFS runs on one graph."""

    def __init__(self, n: int):
        self.stamp = [0] * n
        self.epoch = 0

    def next_epoch(self) -> int:
        self.epoch += 1
        return self.epoch


def sample_live_edge(graph: DirectedGraph, rng: np.random.Generator,
                     model: IndependentCascade = TRIGGERING_MODEL) -> LiveEdgeGraph:
    return LiveEdgeGraph(graph, model.live_mask(graph, rng))


def spread_on(live: LiveEdgeGraph, seeds: Iterable[int], workspace: Optional[SpreadWorkspace] = None) -> int:
    """Number of nodes reachable from seeds along alive edges, seeds included."""
    ws = workspace if workspace is not None else SpreadWorkspace(live.graph.n)
    epoch = ws.next_epoch()
    stamp = ws.stamp
    out_lists = live.graph.out_lists
    alive = live.alive_list

    stack = []
    for s in seeds:
        s = int(s)
        if stamp[s] != epoch:
            stamp[s] = epoch
            stack.append(s)
    count = len(stack)

    while stack:
        u = stack.pop()
        for v, e in out_lists[u]:
            if alive[e] and stamp[v] != epoch:
                stamp[v] = epoch
                count += 1
                stack.append(v)
    return count


def marginal_gain_on(live: LiveEdgeGraph, u_prime: int, seeds: Iterable[int],
                     workspace: Optional[SpreadWorkspace] = None) -> int:
    """|reach(u') minus reach(S)| in the live-edge graph; 0 when u' is a seed."""
    seeds = [int(s) for s in seeds]
    u_prime = int(u_prime)
    if u_prime in seeds:
        return 0

    ws = workspace if workspace is not None else SpreadWorkspace(live.graph.n)
    spread_on(live, seeds, ws)
    covered = ws.epoch
    stamp = ws.stamp
    if stamp[u_prime] == covered:
        return 0

    # Nodes reached from S close their whole forward cone, so the BFS stops there.
    epoch = ws.next_epoch()
    out_lists = live.graph.out_lists
    alive = live.alive_list
    stamp[u_prime] = epoch
    stack = [u_prime]
    count = 1
    while stack:
        u = stack.pop()
        for v, e in out_lists[u]:
            if alive[e] and stamp[v] != epoch and stamp[v] != covered:
                stamp[v] = epoch
                count += 1
                stack.append(v)
    return count


def sample_seed_set(strategy: StrategyModel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Node ids drawn independently with probability h_v(x)."""
    return draw_seeds(strategy.values(x), rng)


def draw_seeds(h: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return np.flatnonzero(rng.random(h.shape[0]) < h)


def _chunk_moments(values: np.ndarray) -> Tuple[int, float, float]:
    mean = float(values.mean())
    return values.size, mean, float(((values - mean) ** 2).sum())


def _merge_moments(parts: Sequence[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    """Pairwise count-weighted merge of (count, mean, sum of squared deviations)."""
    count, mean, m2 = 0, 0.0, 0.0
    for c, mu, sq in parts:
        if c == 0:
            continue
        total = count + c
        delta = mu - mean
        mean += delta * c / total
        m2 += sq + delta * delta * count * c / total
        count = total
    return count, mean, m2


def _estimate(parts: Sequence[Tuple[int, float, float]]) -> SpreadEstimate:
    count, mean, m2 = _merge_moments(parts)
    std_error = 0.0 if count <= 1 else float(np.sqrt(m2 / (count - 1) / count))
    return SpreadEstimate(mean=mean, std_error=std_error, num_sims=count)


def _sigma_chunk(payload, count: int, rng: np.random.Generator):
    graph, seeds = payload
    workspace = SpreadWorkspace(graph.n)
    values = np.empty(count)
    for i in range(count):
        values[i] = spread_on(sample_live_edge(graph, rng), seeds, workspace)
    return _chunk_moments(values)


def _g_chunk(payload, count: int, rng: np.random.Generator):
    graph, h = payload
    workspace = SpreadWorkspace(graph.n)
    values = np.empty(count)
    for i in range(count):
        seeds = draw_seeds(h, rng)
        live = sample_live_edge(graph, rng)
        values[i] = spread_on(live, seeds.tolist(), workspace) if seeds.size else 0
    return _chunk_moments(values)


def estimate_sigma(graph: DirectedGraph,
                   seeds: Iterable[int],
                   num_sims: int,
                   streams: SeedStreams,
                   chunk_size: int = 1000,
                   workers: Optional[int] = 1) -> SpreadEstimate:
    """Monte Carlo estimate of sigma(S) over num_sims live-edge samples."""
    if num_sims < 1:
        raise ValueError(f"num_sims must be at least 1, got {num_sims}")
    seeds = tuple(sorted({int(s) for s in seeds}))
    parts = map_chunks(_sigma_chunk, (graph, seeds), num_sims, streams, chunk_size, workers)
    return _estimate(parts)


def estimate_g(graph: DirectedGraph,
               strategy: StrategyModel,
               x: np.ndarray,
               num_sims: int,
               streams: SeedStreams,
               chunk_size: int = 1000,
               workers: Optional[int] = 1) -> SpreadEstimate:
    """Monte Carlo estimate of g(x): each simulation draws S ~ h(x), then one live-edge spread."""
    if num_sims < 1:
        raise ValueError(f"num_sims must be at least 1, got {num_sims}")
    h = strategy.values(x)
    parts = map_chunks(_g_chunk, (graph, h), num_sims, streams, chunk_size, workers)
    estimate = _estimate(parts)
    logger.debug(f"estimate_g: mean={estimate.mean:.4f} se={estimate.std_error:.4f} sims={num_sims}")
    return estimate


class ExactInfluence:
    """
    Exhaustive live-edge enumeration for tiny graphs.

    Only edges with 0 < p < 1 are enumerated; edges with p in {0, 1} have a
    fixed state. Every (live-edge graph, node v) pair contributes the bitmask of
    nodes reaching v, and equal masks are merged into one weight.
    """

    def __init__(self, graph: DirectedGraph, max_edges: int = EXACT_G_MAX_EDGES):
        prob = graph.prob
        uncertain = np.flatnonzero((prob > 0.0) & (prob < 1.0))
        if uncertain.size > max_edges:
            raise EnumerationLimitError(
                f"exact enumeration needs at most {max_edges} probabilistic edges, graph has {uncertain.size}")

        self.graph = graph
        self.num_enumerated = int(uncertain.size)
        weights = {}
        base = (prob >= 1.0).tolist()
        uncertain_list = uncertain.tolist()
        p_list = prob[uncertain].tolist()

        for state in range(1 << len(uncertain_list)):
            alive = list(base)
            weight = 1.0
            for bit, (e, p) in enumerate(zip(uncertain_list, p_list)):
                if state >> bit & 1:
                    alive[e] = True
                    weight *= p
                else:
                    weight *= 1.0 - p
            if weight == 0.0:
                continue
            for mask in self._reach_masks(alive):
                weights[mask] = weights.get(mask, 0.0) + weight

        self.masks = sorted(weights)
        self.weights = np.asarray([weights[mask] for mask in self.masks], dtype=float)
        self.members = np.asarray([[mask >> v & 1 for v in range(graph.n)] for mask in self.masks],
                                  dtype=bool).reshape(len(self.masks), graph.n)
        logger.debug(f"Enumerated {1 << self.num_enumerated} live-edge graphs into {len(self.masks)} reach masks")

    def _reach_masks(self, alive: List[bool]) -> List[int]:
        in_lists = self.graph.in_lists
        masks = []
        for v in range(self.graph.n):
            mask = 1 << v
            stack = [v]
            while stack:
                w = stack.pop()
                for u, e in in_lists[w]:
                    if alive[e] and not mask >> u & 1:
                        mask |= 1 << u
                        stack.append(u)
            masks.append(mask)
        return masks

    def g(self, strategy: StrategyModel, x: np.ndarray) -> float:
        h = strategy.values(x)
        untouched = np.where(self.members, 1.0 - h, 1.0).prod(axis=1)
        return float(self.weights @ (1.0 - untouched))

    def sigma(self, seeds: Iterable[int]) -> float:
        seed_mask = np.zeros(self.graph.n, dtype=bool)
        seed_mask[list(seeds)] = True
        return float(self.weights @ (self.members & seed_mask).any(axis=1))

    def sigma_all_subsets(self) -> np.ndarray:
        """sigma(S) for every subset S, indexed by the bitmask of S."""
        n = self.graph.n
        subsets = np.arange(1 << n, dtype=np.int64)
        masks = np.asarray(self.masks, dtype=np.int64)
        hits = (subsets[:, None] & masks[None, :]) != 0
        return hits.astype(float) @ self.weights

    def grad(self, strategy: StrategyModel, x: np.ndarray) -> np.ndarray:
        """Exact gradient of g via marginal gains over all seed sets."""
        n = self.graph.n
        if n > EXACT_GRAD_MAX_NODES or self.num_enumerated > EXACT_GRAD_MAX_EDGES:
            raise EnumerationLimitError(
                f"exact gradient needs n <= {EXACT_GRAD_MAX_NODES} and at most {EXACT_GRAD_MAX_EDGES} "
                f"probabilistic edges (n={n}, edges={self.num_enumerated})")

        sigma = self.sigma_all_subsets()
        subsets = np.arange(1 << n, dtype=np.int64)
        bits = ((subsets[:, None] >> np.arange(n)) & 1).astype(bool)
        h = strategy.values(x)
        probs = np.where(bits, h, 1.0 - h)

        coeff = np.zeros(n)
        for u in range(n):
            without = ~bits[:, u]
            base = subsets[without]
            gains = sigma[base | (1 << u)] - sigma[base]
            weight = np.prod(np.delete(probs[without], u, axis=1), axis=1)
            coeff[u] = float(weight @ gains)
        return strategy.weighted_grad(coeff, x)


def exact_g(graph: DirectedGraph, strategy: StrategyModel, x: np.ndarray) -> float:
    """Exact g(x) by live-edge enumeration (at most 20 probabilistic edges)."""
    return ExactInfluence(graph).g(strategy, x)


def exact_grad_g(graph: DirectedGraph, strategy: StrategyModel, x: np.ndarray) -> np.ndarray:
    """Exact gradient of g (n <= 10, at most 16 probabilistic edges)."""
    if graph.n > EXACT_GRAD_MAX_NODES:
        raise EnumerationLimitError(f"exact gradient needs n <= {EXACT_GRAD_MAX_NODES}, got n={graph.n}")
    return ExactInfluence(graph, max_edges=EXACT_GRAD_MAX_EDGES).grad(strategy, x)
