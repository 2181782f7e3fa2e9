"""
Directed influence graphs: construction, edge-list IO and edge probabilities.

Nodes are dense 0-based integers. Every graph keeps both an out-adjacency and
an in-adjacency in CSR form (pointer array + edge-index array), plus plain
Python neighbour lists for the BFS hot loops.
"""
import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Iterable, List, Tuple, Union

import networkx as nx
import numpy as np

from src.cim_core.errors import ConfigError, EdgeListParseError, NodeRangeError

logger = logging.getLogger(__name__)

WEIGHT_MODES = ("explicit", "weighted_cascade")
SYNTHETIC_KINDS = ("erdos_renyi", "scale_free_like")


def _csr(keys: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order.astype(np.int64)


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed graph with per-edge activation probabilities."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    out_ptr: np.ndarray = field(repr=False)
    out_edges: np.ndarray = field(repr=False)
    in_ptr: np.ndarray = field(repr=False)
    in_edges: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def edges(self) -> List[Tuple[int, int, float]]:
        return [(int(u), int(v), float(p)) for u, v, p in zip(self.src, self.dst, self.prob)]

    @cached_property
    def prob_list(self) -> List[float]:
        return self.prob.tolist()

    @cached_property
    def in_lists(self) -> List[List[Tuple[int, int]]]:
        """For each node v, the (source, edge index) pairs of edges into v."""
        src = self.src.tolist()
        lists: List[List[Tuple[int, int]]] = [[] for _ in range(self.n)]
        for v in range(self.n):
            for e in self.in_edges[self.in_ptr[v]:self.in_ptr[v + 1]].tolist():
                lists[v].append((src[e], e))
        return lists

    @cached_property
    def out_lists(self) -> List[List[Tuple[int, int]]]:
        """For each node u, the (target, edge index) pairs of edges out of u."""
        dst = self.dst.tolist()
        lists: List[List[Tuple[int, int]]] = [[] for _ in range(self.n)]
        for u in range(self.n):
            for e in self.out_edges[self.out_ptr[u]:self.out_ptr[u + 1]].tolist():
                lists[u].append((dst[e], e))
        return lists


def build_graph(n: int, edges: Iterable[Tuple[int, int, float]]) -> DirectedGraph:
    """
    Build a graph from (src, dst, p) triples.

    Duplicate (src, dst) pairs are dropped, keeping the first occurrence.

    Raises:
        NodeRangeError: If an endpoint lies outside [0, n).
        ValueError: If a probability lies outside [0, 1].
    """
    if n < 0:
        raise ValueError("n must be non-negative")

    seen = set()
    src, dst, prob = [], [], []
    for u, v, p in edges:
        u, v, p = int(u), int(v), float(p)
        if not (0 <= u < n and 0 <= v < n):
            raise NodeRangeError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"edge ({u}, {v}) has probability {p} outside [0, 1]")
        if (u, v) in seen:
            continue
        seen.add((u, v))
        src.append(u)
        dst.append(v)
        prob.append(p)

    src_arr = np.asarray(src, dtype=np.int64)
    dst_arr = np.asarray(dst, dtype=np.int64)
    out_ptr, out_edges = _csr(src_arr, n)
    in_ptr, in_edges = _csr(dst_arr, n)
    return DirectedGraph(n=n, src=src_arr, dst=dst_arr, prob=np.asarray(prob, dtype=float),
                         out_ptr=out_ptr, out_edges=out_edges, in_ptr=in_ptr, in_edges=in_edges)


def assign_weighted_cascade(graph: DirectedGraph) -> DirectedGraph:
    """Return a copy of the graph where every edge (u, v) has p = 1/indeg(v)."""
    indeg = graph.in_degree()
    prob = np.zeros(graph.m, dtype=float)
    if graph.m:
        prob = 1.0 / indeg[graph.dst]
    return DirectedGraph(n=graph.n, src=graph.src, dst=graph.dst, prob=prob,
                         out_ptr=graph.out_ptr, out_edges=graph.out_edges,
                         in_ptr=graph.in_ptr, in_edges=graph.in_edges)


def _content_lines(text: str):
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line_number, line.split()


def load_edge_list(source: Union[BinaryIO, bytes], weight_mode: str = "explicit") -> DirectedGraph:
    """
    Parse an edge list.

    Format: the first non-comment line is "n m", followed by m lines
    "src dst [p]". Lines starting with '#' are comments. The probability column
    is required for weight_mode="explicit" and ignored for "weighted_cascade".

    Raises:
        EdgeListParseError: Malformed input (carries the line number).
        NodeRangeError: An endpoint is >= n.
    """
    if weight_mode not in WEIGHT_MODES:
        raise ConfigError(f"Unknown weight mode: {weight_mode}")

    raw = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise EdgeListParseError(f"not UTF-8 text: {str(e)}", 0) from e

    lines = _content_lines(text)
    try:
        header_line, header = next(lines)
    except StopIteration:
        raise EdgeListParseError("missing 'n m' header", 0)
    if len(header) != 2:
        raise EdgeListParseError(f"expected 'n m' header, got {' '.join(header)!r}", header_line)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise EdgeListParseError(f"non-integer header {' '.join(header)!r}", header_line)
    if n < 0 or m < 0:
        raise EdgeListParseError("negative node or edge count", header_line)

    edges = []
    last_line = header_line
    for line_number, fields in lines:
        last_line = line_number
        if len(fields) not in (2, 3):
            raise EdgeListParseError(f"expected 'src dst [p]', got {len(fields)} fields", line_number)
        try:
            u, v = int(fields[0]), int(fields[1])
            p = float(fields[2]) if len(fields) == 3 else None
        except ValueError:
            raise EdgeListParseError(f"non-numeric field in {' '.join(fields)!r}", line_number)
        if u < 0 or v < 0:
            raise EdgeListParseError("negative node index", line_number)
        if u >= n or v >= n:
            raise NodeRangeError(f"line {line_number}: node index {max(u, v)} >= n={n}")
        if weight_mode == "explicit":
            if p is None:
                raise EdgeListParseError("missing probability (weight mode is explicit)", line_number)
            if not 0.0 <= p <= 1.0:
                raise EdgeListParseError(f"probability {p} outside [0, 1]", line_number)
        edges.append((u, v, 0.0 if weight_mode == "weighted_cascade" else p))

    if len(edges) != m:
        raise EdgeListParseError(f"header declares {m} edges but {len(edges)} were found", last_line)

    graph = build_graph(n, edges)
    if graph.m < m:
        logger.info(f"Dropped {m - graph.m} duplicate edges")
    if weight_mode == "weighted_cascade":
        graph = assign_weighted_cascade(graph)

    logger.info(f"Loaded graph with n={graph.n}, m={graph.m} ({weight_mode} weights)")
    return graph


def read_edge_list_file(path: str, weight_mode: str = "explicit") -> DirectedGraph:
    with open(path, "rb") as f:
        return load_edge_list(f, weight_mode)


def save_edge_list(graph: DirectedGraph, sink: BinaryIO) -> None:
    """Write the graph in the edge-list format read by load_edge_list."""
    buffer = io.StringIO()
    buffer.write(f"{graph.n} {graph.m}\n")
    for u, v, p in graph.edges():
        buffer.write(f"{u} {v} {p!r}\n")
    sink.write(buffer.getvalue().encode("utf-8"))


def generate_synthetic(kind: str, n: int, param: float, seed: int) -> DirectedGraph:
    """
    Generate a deterministic synthetic graph with weighted-cascade probabilities.

    Args:
        kind: "erdos_renyi" (param = directed edge probability in [0, 1]) or
              "scale_free_like" (param = Barabasi-Albert attachments per node,
              an integer in [1, n); each undirected edge becomes two arcs).
        n: Node count, at least 1.
        param: Generator parameter, see kind.
        seed: Generator seed.

    Raises:
        ConfigError: Unknown kind or parameter out of range.
    """
    if n < 1:
        raise ConfigError("n must be at least 1")

    if kind == "erdos_renyi":
        if not 0.0 <= param <= 1.0:
            raise ConfigError(f"erdos_renyi edge probability must lie in [0, 1], got {param}")
        nx_graph = nx.gnp_random_graph(n, param, seed=seed, directed=True)
        pairs = sorted(nx_graph.edges())
    elif kind == "scale_free_like":
        attachments = int(param)
        if attachments != param or not 1 <= attachments < n:
            raise ConfigError(f"scale_free_like attachments must be an integer in [1, {n}), got {param}")
        nx_graph = nx.barabasi_albert_graph(n, attachments, seed=seed)
        pairs = sorted({(u, v) for a, b in nx_graph.edges() for u, v in ((a, b), (b, a))})
    else:
        raise ConfigError(f"Unknown synthetic graph kind: {kind}")

    graph = assign_weighted_cascade(build_graph(n, ((u, v, 0.0) for u, v in pairs)))
    logger.info(f"Generated {kind} graph with n={graph.n}, m={graph.m} (param={param}, seed={seed})")
    return graph
