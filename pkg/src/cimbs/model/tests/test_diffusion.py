"""
Tests for live-edge sampling, spread computation, Monte Carlo estimators
and the exact enumeration oracles.
"""

import itertools

import numpy as np
import pytest

from src.cim_core.errors import EnumerationLimitError
from src.cimbs.model.diffusion import (ExactInfluence, LiveEdgeGraph, SpreadWorkspace, _chunk_moments,
                                       _merge_moments, estimate_g, estimate_sigma, exact_g, exact_grad_g,
                                       marginal_gain_on, sample_live_edge, sample_seed_set, spread_on)
from src.cimbs.model.graph import build_graph
from src.cimbs.model.strategy import build_scenario
from src.cimbs.utils.rng import SeedStreams


def _dense_graph(n, p):
    return build_graph(n, [(u, v, p) for u, v in itertools.permutations(range(n), 2)])


class TestSpread:
    def test_certain_and_impossible_edges(self):
        graph = build_graph(3, [(0, 1, 1.0), (1, 2, 0.0)])
        live = sample_live_edge(graph, np.random.default_rng(0))
        assert live.alive.tolist() == [True, False]

    def test_spread_on_path(self, sure_path3):
        live = sample_live_edge(sure_path3, np.random.default_rng(0))
        workspace = SpreadWorkspace(3)
        assert spread_on(live, [0], workspace) == 3
        assert spread_on(live, [2], workspace) == 1
        assert spread_on(live, [], workspace) == 0
        assert spread_on(live, [1, 1, 2], workspace) == 2

    def test_live_mask_shape_checked(self, sure_path3):
        with pytest.raises(ValueError):
            LiveEdgeGraph(sure_path3, np.ones(3, dtype=bool))

    def test_marginal_gain(self, sure_path3):
        live = sample_live_edge(sure_path3, np.random.default_rng(0))
        workspace = SpreadWorkspace(3)
        assert marginal_gain_on(live, 0, [1], workspace) == 1
        assert marginal_gain_on(live, 0, [], workspace) == 3
        assert marginal_gain_on(live, 1, [1], workspace) == 0
        assert marginal_gain_on(live, 2, [0], workspace) == 0

    def test_sample_seed_set(self, personalized3):
        rng = np.random.default_rng(0)
        seeds = sample_seed_set(personalized3, np.array([1.0, 0.0, 1.0]), rng)
        assert seeds.tolist() == [0, 2]


class TestMonteCarlo:
    def test_sigma_on_certain_graph(self, sure_path3):
        estimate = estimate_sigma(sure_path3, [0], 50, SeedStreams(0))
        assert estimate.mean == 3.0
        assert estimate.std_error == 0.0
        assert estimate.num_sims == 50

    def test_g_at_zero(self, path3, personalized3):
        assert estimate_g(path3, personalized3, np.zeros(3), 100, SeedStreams(0)).mean == 0.0

    def test_sims_validated(self, path3, personalized3):
        with pytest.raises(ValueError):
            estimate_sigma(path3, [0], 0, SeedStreams(0))
        with pytest.raises(ValueError):
            estimate_g(path3, personalized3, np.zeros(3), 0, SeedStreams(0))

    def test_worker_count_does_not_change_estimates(self, triangle):
        strategy = build_scenario(triangle, "personalized")[0]
        x = np.array([0.3, 0.6, 0.1])
        streams = SeedStreams(7).child("mc")
        inline = estimate_g(triangle, strategy, x, 900, streams, chunk_size=100, workers=1)
        pooled = estimate_g(triangle, strategy, x, 900, streams, chunk_size=100, workers=3)
        assert inline == pooled

    def test_chunk_moments_merge_exactly(self):
        values = np.random.default_rng(2).random(40) * 10
        parts = [_chunk_moments(values[i:i + 7]) for i in range(0, 40, 7)]
        count, mean, m2 = _merge_moments(parts)
        assert count == 40
        assert mean == pytest.approx(values.mean())
        assert m2 == pytest.approx(((values - values.mean()) ** 2).sum())

    def test_split_count_keeps_all_simulations(self, triangle):
        estimate = estimate_sigma(triangle, [0], 40, SeedStreams(1), chunk_size=7)
        assert estimate.num_sims == 40
        assert 1.0 <= estimate.mean <= 3.0
        assert estimate.std_error > 0.0

    def test_estimate_g_agrees_with_exact(self, path3, personalized3):
        x = np.array([0.5, 0.2, 0.7])
        estimate = estimate_g(path3, personalized3, x, 20000, SeedStreams(3))
        assert abs(estimate.mean - exact_g(path3, personalized3, x)) < 5.0 * estimate.std_error


class TestExactInfluence:
    def test_sigma_on_path(self, path3):
        exact = ExactInfluence(path3)
        assert exact.sigma([0]) == pytest.approx(1.625)
        assert exact.sigma([]) == 0.0
        assert exact.sigma([0, 1, 2]) == pytest.approx(3.0)
        by_subset = exact.sigma_all_subsets()
        assert by_subset[0b001] == pytest.approx(1.625)
        assert by_subset[0b010] == pytest.approx(1.25)
        assert by_subset[0b111] == pytest.approx(3.0)

    def test_g_with_integral_strategy(self, path3, personalized3):
        assert exact_g(path3, personalized3, np.array([1.0, 0.0, 0.0])) == pytest.approx(1.625)
        assert exact_g(path3, personalized3, np.zeros(3)) == 0.0

    def test_g_is_sigma_average(self, path3, personalized3):
        x = np.array([0.5, 0.2, 0.7])
        h = personalized3.values(x)
        exact = ExactInfluence(path3)
        expected = 0.0
        for bits in itertools.product((0, 1), repeat=3):
            weight = np.prod([h[v] if b else 1.0 - h[v] for v, b in enumerate(bits)])
            expected += weight * exact.sigma([v for v, b in enumerate(bits) if b])
        assert exact.g(personalized3, x) == pytest.approx(expected)

    def test_fixed_edges_are_not_enumerated(self):
        graph = _dense_graph(6, 1.0)
        exact = ExactInfluence(graph)
        assert exact.num_enumerated == 0
        assert exact.sigma([3]) == pytest.approx(6.0)

    def test_enumeration_limit(self):
        with pytest.raises(EnumerationLimitError):
            ExactInfluence(_dense_graph(6, 0.5))

    def test_gradient_matches_finite_differences(self, triangle):
        strategy = build_scenario(triangle, "personalized")[0]
        exact = ExactInfluence(triangle)
        x = np.array([0.3, 0.6, 0.1])
        step = 1e-6
        numeric = np.array([(exact.g(strategy, x + step * e) - exact.g(strategy, x - step * e)) / (2 * step)
                            for e in np.eye(3)])
        np.testing.assert_allclose(exact_grad_g(triangle, strategy, x), numeric, atol=1e-6)

    def test_gradient_size_limit(self):
        graph = build_graph(11, [(i, i + 1, 0.5) for i in range(10)])
        strategy = build_scenario(graph, "personalized")[0]
        with pytest.raises(EnumerationLimitError):
            exact_grad_g(graph, strategy, np.zeros(11))
