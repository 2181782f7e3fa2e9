"""
Tests for the RR-set objectives, their gradients and the stochastic gradient of g.
"""

import math

import numpy as np
import pytest

from src.cim_core.errors import UnsupportedModelError
from src.cimbs.conftest import ClippedLinear
from src.cimbs.model.budget import BudgetModel
from src.cimbs.model.diffusion import exact_grad_g
from src.cimbs.model.graph import generate_synthetic
from src.cimbs.model.objective import (ObjectiveBundle, bar_g, combined, combined_supergradient, decompose,
                                       estimator, grad_hat_g, hat_g, stochastic_grad_g, stochastic_grad_samples,
                                       subgrad_bar_g, value_and_grad)
from src.cimbs.model.rrset import RRCollection, generate
from src.cimbs.model.strategy import build_scenario
from src.cimbs.utils.rng import SeedStreams


@pytest.fixture
def bundle(path3):
    strategy = build_scenario(path3, "personalized")[0]
    collection = RRCollection.from_sets(3, [[0], [1, 0], [2]])
    return ObjectiveBundle(collection, strategy, BudgetModel("one_norm", 2.0, 0.5, 3, strategy.upper))


X = np.array([0.5, 0.5, 0.0])


class TestHatG:
    def test_value(self, bundle):
        assert hat_g(bundle, X) == pytest.approx(1.6875)
        assert hat_g(bundle, np.zeros(3)) == 0.0

    def test_gradient(self, bundle):
        np.testing.assert_allclose(grad_hat_g(bundle, X), [1.25, 0.25, 2.0])
        value, grad = value_and_grad(bundle, X)
        assert value == pytest.approx(1.6875)
        np.testing.assert_allclose(grad, [1.25, 0.25, 2.0])

    def test_gradient_with_saturated_node(self, bundle):
        # h_0 = 1 zeroes the product of every set holding node 0
        x = np.array([1.0, 0.5, 0.3])
        step = 1e-6
        numeric = [(hat_g(bundle, x + step * e) - hat_g(bundle, x - step * e)) / (2 * step) for e in np.eye(3)[1:]]
        np.testing.assert_allclose(grad_hat_g(bundle, x)[1:], numeric, atol=1e-6)

    def test_scale(self, path3):
        strategy = build_scenario(path3, "personalized")[0]
        collection = RRCollection.from_sets(3, [[0], [0], [1, 0], [2], [2], [2]])
        bundle = ObjectiveBundle(collection, strategy, BudgetModel("one_norm", 2.0, 0.5, 3))
        assert bundle.scale == 0.5
        assert hat_g(bundle, X) == pytest.approx(0.5 * (0.75 * 2 + 0.9375))


class TestBarG:
    def test_value_and_subgradient(self, bundle):
        assert bar_g(bundle, X) == pytest.approx(1.75)
        np.testing.assert_allclose(subgrad_bar_g(bundle, X), [1.0, 0.0, 2.0])

    def test_sandwich(self, bundle):
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.random(3)
            hat, bar = hat_g(bundle, x), bar_g(bundle, x)
            assert (1.0 - 1.0 / math.e) * bar <= hat + 1e-12
            assert hat <= bar + 1e-12

    def test_needs_independent_model(self, path3):
        bundle = ObjectiveBundle(RRCollection.from_sets(3, [[0]]), ClippedLinear(3),
                                 BudgetModel("one_norm", 1.0, 1.0, 3))
        assert hat_g(bundle, np.full(3, 0.5)) == pytest.approx(1.5)
        with pytest.raises(UnsupportedModelError):
            bar_g(bundle, np.full(3, 0.5))
        with pytest.raises(UnsupportedModelError):
            bundle.bar_lipschitz


class TestCombined:
    def test_combined_and_decompose(self, bundle):
        assert combined(bundle, X) == pytest.approx(2.1875)
        assert combined(bundle, X, "bar") == pytest.approx(2.25)
        assert decompose(bundle, X) == pytest.approx((1.6875, 0.5))
        assert estimator(bundle, X, "bar") == pytest.approx(1.75)

    def test_supergradient(self, bundle):
        np.testing.assert_allclose(combined_supergradient(bundle, X), [0.75, -0.25, 1.5])
        np.testing.assert_allclose(combined_supergradient(bundle, X, "bar"), [0.5, -0.5, 1.5])

    def test_unknown_route(self, bundle):
        with pytest.raises(ValueError):
            estimator(bundle, X, "tilde")
        with pytest.raises(ValueError):
            combined_supergradient(bundle, X, "tilde")

    def test_constants(self, bundle):
        assert bundle.smoothness == pytest.approx(32.0)
        assert bundle.hat_lipschitz == pytest.approx(8.0 + 0.5 * math.sqrt(3.0))
        assert bundle.bar_lipschitz == pytest.approx(8.5 * math.sqrt(3.0))

    def test_bundle_validation(self, path3):
        strategy = build_scenario(path3, "personalized")[0]
        with pytest.raises(ValueError):
            ObjectiveBundle(RRCollection.empty(3), strategy, BudgetModel("one_norm", 1.0, 1.0, 3))
        with pytest.raises(ValueError):
            ObjectiveBundle(RRCollection.from_sets(4, [[0]]), strategy, BudgetModel("one_norm", 1.0, 1.0, 3))
        with pytest.raises(ValueError):
            ObjectiveBundle(RRCollection.from_sets(3, [[0]]), strategy, BudgetModel("one_norm", 1.0, 1.0, 2))


def test_stochastic_gradient_on_certain_path(sure_path3):
    strategy = build_scenario(sure_path3, "personalized")[0]
    rng = np.random.default_rng(0)
    seen = set()
    for _ in range(50):
        grad = stochastic_grad_g(sure_path3, strategy, np.zeros(3), rng)
        nonzero = np.flatnonzero(grad)
        assert nonzero.size == 1
        u = int(nonzero[0])
        # n * |reach(u)| * dh_u/dx_u with h = 0 everywhere
        assert grad[u] == pytest.approx(3 * (3 - u) * 2.0)
        seen.add(u)
    assert seen == {0, 1, 2}


def test_stochastic_samples_need_a_positive_count(triangle):
    strategy = build_scenario(triangle, "personalized")[0]
    with pytest.raises(ValueError):
        stochastic_grad_samples(triangle, strategy, np.zeros(3), 0, np.random.default_rng(0))


@pytest.mark.slow
def test_stochastic_gradient_is_unbiased_and_bounded(triangle):
    strategy = build_scenario(triangle, "personalized")[0]
    x = np.array([0.3, 0.5, 0.2])
    draws = stochastic_grad_samples(triangle, strategy, x, 100000, SeedStreams(5).generator(0))
    n = triangle.n
    assert np.linalg.norm(draws, axis=1).max() <= n * n * strategy.lipschitz + 1e-9
    variance = draws.var(axis=0, ddof=1)
    assert variance.sum() <= 4.0 * strategy.lipschitz ** 2 * n ** 4
    se = np.sqrt(variance / draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - exact_grad_g(triangle, strategy, x)) <= 4.0 * se + 1e-12)


@pytest.fixture(params=["personalized", "segment"])
def sampled_bundle(request):
    graph = generate_synthetic("erdos_renyi", 30, 0.1, seed=1)
    strategy = build_scenario(graph, request.param, 3, seed=1)[0]
    collection = generate(graph, 50, SeedStreams(0))
    return ObjectiveBundle(collection, strategy, BudgetModel("one_norm", 1.0, 0.0, strategy.d, strategy.upper))


class TestEstimatorShape:
    """Monotonicity, DR-submodularity and Lipschitz bounds of hat g_R; concavity of bar g_R."""

    DELTA = 0.1

    def test_hat_g_is_monotone(self, sampled_bundle):
        rng = np.random.default_rng(11)
        d = sampled_bundle.strategy.d
        for _ in range(30):
            x = rng.random(d)
            y = x + rng.random(d) * (1.0 - x)
            assert hat_g(sampled_bundle, x) <= hat_g(sampled_bundle, y) + 1e-12

    def test_hat_g_has_diminishing_returns(self, sampled_bundle):
        rng = np.random.default_rng(12)
        d = sampled_bundle.strategy.d
        for _ in range(30):
            y = rng.random(d) * (1.0 - self.DELTA)
            x = y * rng.random(d)
            j = int(rng.integers(d))
            step = np.zeros(d)
            step[j] = self.DELTA
            low = hat_g(sampled_bundle, x + step) - hat_g(sampled_bundle, x)
            high = hat_g(sampled_bundle, y + step) - hat_g(sampled_bundle, y)
            assert low >= high - 1e-9

    def test_hat_g_gradient_is_nonnegative(self, sampled_bundle):
        rng = np.random.default_rng(13)
        for _ in range(30):
            assert grad_hat_g(sampled_bundle, rng.random(sampled_bundle.strategy.d)).min() >= -1e-9

    def test_hat_g_respects_its_lipschitz_constant(self, sampled_bundle):
        rng = np.random.default_rng(14)
        d = sampled_bundle.strategy.d
        for _ in range(30):
            x, y = rng.random(d), rng.random(d)
            ratio = abs(hat_g(sampled_bundle, x) - hat_g(sampled_bundle, y)) / np.linalg.norm(x - y)
            assert ratio <= sampled_bundle.hat_lipschitz + 1e-6

    def test_bar_g_is_midpoint_concave(self, sampled_bundle):
        rng = np.random.default_rng(15)
        d = sampled_bundle.strategy.d
        for _ in range(30):
            x, y = rng.random(d), rng.random(d)
            middle = bar_g(sampled_bundle, 0.5 * (x + y))
            assert middle >= 0.5 * (bar_g(sampled_bundle, x) + bar_g(sampled_bundle, y)) - 1e-9

    def test_bar_g_lies_below_its_tangent(self, sampled_bundle):
        rng = np.random.default_rng(16)
        d = sampled_bundle.strategy.d
        for _ in range(30):
            x, y = rng.random(d), rng.random(d)
            tangent = bar_g(sampled_bundle, x) + subgrad_bar_g(sampled_bundle, x) @ (y - x)
            assert bar_g(sampled_bundle, y) <= tangent + 1e-9
