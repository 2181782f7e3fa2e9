"""
Tests for graph construction, edge-list IO and synthetic generation.
"""

import io

import numpy as np
import pytest

from src.cim_core.errors import ConfigError, EdgeListParseError, NodeRangeError
from src.cimbs.model.graph import (assign_weighted_cascade, build_graph, generate_synthetic, load_edge_list,
                                   read_edge_list_file, save_edge_list)


class TestBuildGraph:
    def test_adjacency(self):
        graph = build_graph(4, [(0, 1, 0.5), (0, 2, 0.1), (3, 1, 1.0)])
        assert graph.n == 4 and graph.m == 3
        assert [v for v, _ in graph.out_lists[0]] == [1, 2]
        assert sorted(u for u, _ in graph.in_lists[1]) == [0, 3]
        np.testing.assert_array_equal(graph.in_degree(), [0, 2, 1, 0])
        np.testing.assert_array_equal(graph.out_degree(), [2, 0, 0, 1])

    def test_duplicates_keep_first(self):
        graph = build_graph(2, [(0, 1, 0.2), (0, 1, 0.9)])
        assert graph.edges() == [(0, 1, 0.2)]

    def test_node_out_of_range(self):
        with pytest.raises(NodeRangeError):
            build_graph(2, [(0, 2, 0.5)])

    def test_probability_out_of_range(self):
        with pytest.raises(ValueError):
            build_graph(2, [(0, 1, 1.5)])

    def test_empty_graph(self):
        graph = build_graph(3, [])
        assert graph.m == 0
        assert graph.in_lists == [[], [], []]


def test_weighted_cascade_probabilities():
    graph = assign_weighted_cascade(build_graph(3, [(0, 2, 0.0), (1, 2, 0.0), (0, 1, 0.0)]))
    probs = {(u, v): p for u, v, p in graph.edges()}
    assert probs == {(0, 2): 0.5, (1, 2): 0.5, (0, 1): 1.0}


class TestLoadEdgeList:
    def test_explicit(self):
        graph = load_edge_list(b"# toy\n3 2\n0 1 0.5\n\n1 2 0.25\n")
        assert graph.edges() == [(0, 1, 0.5), (1, 2, 0.25)]

    def test_weighted_cascade_ignores_column(self):
        graph = load_edge_list(io.BytesIO(b"3 3\n0 2 0.9\n1 2\n0 1\n"), "weighted_cascade")
        probs = {(u, v): p for u, v, p in graph.edges()}
        assert probs[(0, 2)] == 0.5 and probs[(1, 2)] == 0.5 and probs[(0, 1)] == 1.0

    @pytest.mark.parametrize("data, line", [
        (b"", 0),
        (b"3\n", 1),
        (b"3 x\n", 1),
        (b"3 2\n0 1 0.5\n", 2),
        (b"3 1\n0 1\n", 2),
        (b"3 1\n0 1 1.5\n", 2),
        (b"3 1\n0 a 0.5\n", 2),
        (b"3 1\n0 1 0.5 7\n", 2),
    ])
    def test_parse_errors_carry_line_number(self, data, line):
        with pytest.raises(EdgeListParseError) as excinfo:
            load_edge_list(data)
        assert excinfo.value.line_number == line

    def test_node_range(self):
        with pytest.raises(NodeRangeError):
            load_edge_list(b"2 1\n0 2 0.5\n")

    def test_unknown_weight_mode(self):
        with pytest.raises(ConfigError):
            load_edge_list(b"1 0\n", "uniform")

    def test_save_then_load(self, tmp_path):
        graph = build_graph(4, [(0, 1, 0.1), (2, 3, 1.0 / 3.0), (3, 0, 1.0)])
        path = tmp_path / "g.txt"
        with open(path, "wb") as f:
            save_edge_list(graph, f)
        assert read_edge_list_file(str(path)).edges() == graph.edges()


class TestGenerateSynthetic:
    def test_erdos_renyi_is_deterministic(self):
        a = generate_synthetic("erdos_renyi", 50, 0.1, seed=4)
        b = generate_synthetic("erdos_renyi", 50, 0.1, seed=4)
        assert a.edges() == b.edges()
        assert a.edges() != generate_synthetic("erdos_renyi", 50, 0.1, seed=5).edges()

    def test_weighted_cascade_sums_to_one(self):
        graph = generate_synthetic("erdos_renyi", 40, 0.1, seed=1)
        totals = np.bincount(graph.dst, weights=graph.prob, minlength=graph.n)
        has_in = graph.in_degree() > 0
        np.testing.assert_allclose(totals[has_in], 1.0)

    def test_scale_free_like_is_symmetric(self):
        graph = generate_synthetic("scale_free_like", 30, 2, seed=0)
        pairs = {(u, v) for u, v, _ in graph.edges()}
        assert all((v, u) in pairs for u, v in pairs)

    @pytest.mark.parametrize("kind, n, param", [
        ("erdos_renyi", 10, 1.5),
        ("scale_free_like", 10, 0),
        ("scale_free_like", 10, 2.5),
        ("lattice", 10, 1),
        ("erdos_renyi", 0, 0.1),
    ])
    def test_rejects_bad_parameters(self, kind, n, param):
        with pytest.raises(ConfigError):
            generate_synthetic(kind, n, param, seed=0)
