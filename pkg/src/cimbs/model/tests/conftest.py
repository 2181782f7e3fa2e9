"""
Shared fixtures for the model tests: tiny hand-checkable graphs and strategy models.
"""

import pytest

from src.cimbs.model.graph import build_graph
from src.cimbs.model.strategy import build_scenario


@pytest.fixture
def sure_path3():
    """0 -> 1 -> 2 with every edge certain."""
    return build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def triangle():
    return build_graph(3, [(0, 1, 0.7), (1, 2, 0.6), (2, 0, 0.5), (0, 2, 0.3)])


@pytest.fixture
def personalized3(path3):
    return build_scenario(path3, "personalized")[0]
