"""
Shared fixtures for the solver tests.
"""

import pytest

from src.cimbs.model.budget import BudgetModel
from src.cimbs.model.graph import generate_synthetic
from src.cimbs.model.objective import ObjectiveBundle
from src.cimbs.model.rrset import RRCollection
from src.cimbs.model.strategy import build_scenario
from src.cimbs.solvers.pipeline import SolveConfig


@pytest.fixture
def strategy3(path3):
    return build_scenario(path3, "personalized")[0]


@pytest.fixture
def make_bundle(strategy3):
    """Bundle over three hand-made RR sets with a one-norm budget of k and lam."""
    def make(k=1.0, lam=0.5, strategy=None):
        strategy = strategy or strategy3
        collection = RRCollection.from_sets(3, [[0], [1, 0], [2]])
        return ObjectiveBundle(collection, strategy, BudgetModel("one_norm", k, lam, 3, strategy.upper))
    return make


@pytest.fixture
def small_problem():
    """A 12-node graph with a two-segment strategy model and a unit budget."""
    graph = generate_synthetic("erdos_renyi", 12, 0.2, seed=0)
    strategy, _ = build_scenario(graph, "segment", 2, seed=0)
    budget = BudgetModel("one_norm", 1.0, 0.5, 2, strategy.upper)
    return graph, strategy, budget


@pytest.fixture
def quick_config():
    def make(**overrides):
        params = dict(algorithm="proxgrad_ris", epsilon=0.6, ell=1.0, seed=3, eval_sims=50, eval_runs=2,
                      iteration_cap=100, org_iterations=20, org_eval_sims=20, chunk_size=500)
        params.update(overrides)
        return SolveConfig(**params)
    return make
