"""
Tests for segmented leave-one-out products, activation functions and
strategy models.
"""

import math

import numpy as np
import pytest

from src.cim_core.errors import ConfigError, DomainError
from src.cimbs.model.graph import generate_synthetic
from src.cimbs.model.segments import segment_products
from src.cimbs.model.strategy import (IndependentActivation, QuadraticActivation, SaturatingActivation,
                                      build_scenario, constants, get_activation, q_quadratic)


class TestSegmentProducts:
    def test_full_and_leave_one_out_with_zeros(self):
        factors = np.array([0.5, 0.2, 0.0, 0.3, 0.0, 0.0, 0.4])
        ptr = np.array([0, 2, 4, 4, 7])
        full, loo = segment_products(factors, ptr)
        np.testing.assert_allclose(full, [0.1, 0.0, 1.0, 0.0])
        np.testing.assert_allclose(loo, [0.2, 0.5, 0.3, 0.0, 0.0, 0.0, 0.0])

    def test_no_entries(self):
        full, loo = segment_products(np.zeros(0), np.zeros(3, dtype=np.int64))
        np.testing.assert_array_equal(full, [1.0, 1.0])
        assert loo.size == 0


class TestActivations:
    def test_quadratic(self):
        assert q_quadratic(0.5) == (0.75, 1.0)
        assert q_quadratic(0.0) == (0.0, 2.0)
        assert q_quadratic(1.0) == (1.0, 0.0)

    @pytest.mark.parametrize("x", [-0.1, 1.5])
    def test_quadratic_domain(self, x):
        with pytest.raises(DomainError):
            q_quadratic(x)

    def test_saturating(self):
        q = SaturatingActivation()
        np.testing.assert_allclose(q.value(np.array([0.0, 1.0])), [0.0, 1.0 - math.exp(-1.0)])
        np.testing.assert_allclose(q.derivative(np.array([2.0])), [math.exp(-2.0)])
        assert math.isinf(q.upper)

    def test_registry_lookup(self):
        assert isinstance(get_activation("quadratic"), QuadraticActivation)
        with pytest.raises(ConfigError):
            get_activation("cubic")


class TestIndependentActivation:
    @pytest.fixture
    def model(self):
        # node 0 listens to both dimensions, node 1 to dimension 1, node 2 to none
        return IndependentActivation(3, 2, [0, 0, 1], [0, 1, 1], ["quadratic"] * 3)

    def test_values(self, model):
        np.testing.assert_allclose(model.values(np.array([0.5, 0.5])), [0.9375, 0.75, 0.0])
        assert model.h_value(0, np.array([1.0, 0.0])) == 1.0

    def test_gradients(self, model):
        x = np.array([0.5, 0.5])
        np.testing.assert_allclose(model.h_grad(0, x), [0.25, 0.25])
        np.testing.assert_allclose(model.h_grad(1, x), [0.0, 1.0])
        np.testing.assert_allclose(model.h_grad(2, x), [0.0, 0.0])
        np.testing.assert_allclose(model.weighted_grad(np.array([1.0, 2.0, 0.0]), x), [0.25, 2.25])

    def test_constants(self, model):
        lipschitz, smoothness, l_q = constants(model)
        assert lipschitz == pytest.approx(2.0 * math.sqrt(2.0))
        assert smoothness == pytest.approx(6.0)
        assert l_q == 2.0
        np.testing.assert_array_equal(model.upper, [1.0, 1.0])

    def test_q_sums(self, model):
        np.testing.assert_allclose(model.q_sums(np.array([0.5, 0.5])), [1.5, 0.75, 0.0])

    @pytest.mark.parametrize("x", [np.array([0.5]), np.array([0.5, 1.2]), np.array([-0.5, 0.0])])
    def test_domain(self, model, x):
        with pytest.raises(DomainError):
            model.values(x)

    def test_bad_entries(self):
        with pytest.raises(ValueError):
            IndependentActivation(2, 1, [0, 2], [0, 0], ["quadratic"] * 2)


class TestBuildScenario:
    @pytest.fixture
    def graph(self):
        return generate_synthetic("erdos_renyi", 40, 0.1, seed=2)

    def test_personalized_ignores_d(self, graph):
        model, scenario = build_scenario(graph, "personalized", d=5)
        assert model.d == graph.n
        assert model.independent
        assert scenario.kind == "personalized"
        np.testing.assert_allclose(model.values(np.full(graph.n, 0.5)), 0.75)

    def test_segment_respects_bounds(self, graph):
        model, scenario = build_scenario(graph, "segment", 2, (15, 25), seed=3)
        sizes = scenario.segment_sizes(2)
        assert sizes.sum() == 40
        assert sizes.min() >= 15 and sizes.max() <= 25
        assert model.d == 2

    def test_segment_is_deterministic(self, graph):
        a = build_scenario(graph, "segment", 3, seed=9)[1]
        b = build_scenario(graph, "segment", 3, seed=9)[1]
        np.testing.assert_array_equal(a.segment_of, b.segment_of)

    def test_unreachable_bounds(self, graph):
        with pytest.raises(ConfigError):
            build_scenario(graph, "segment", 2, (21, 40), seed=0, max_attempts=20)

    @pytest.mark.parametrize("kind, d", [("segment", 41), ("segment", 0), ("clustered", 2)])
    def test_rejects(self, graph, kind, d):
        with pytest.raises(ConfigError):
            build_scenario(graph, kind, d)


@pytest.mark.parametrize("kind", ["personalized", "segment"])
def test_activation_probabilities_are_monotone_with_diminishing_returns(kind):
    graph = generate_synthetic("erdos_renyi", 20, 0.1, seed=4)
    model = build_scenario(graph, kind, 3, seed=4)[0]
    rng = np.random.default_rng(21)
    delta = 0.1
    for _ in range(30):
        y = rng.random(model.d) * (1.0 - delta)
        x = y * rng.random(model.d)
        assert np.all(model.values(x) <= model.values(y) + 1e-12)
        step = np.zeros(model.d)
        step[int(rng.integers(model.d))] = delta
        low = model.values(x + step) - model.values(x)
        high = model.values(y + step) - model.values(y)
        assert np.all(low >= high - 1e-12)
