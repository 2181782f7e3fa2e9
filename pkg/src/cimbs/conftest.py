"""
Fixtures and test doubles shared by the model and solver tests.
"""

import numpy as np
import pytest

from src.cimbs.model.graph import build_graph
from src.cimbs.model.strategy import StrategyModel


class ClippedLinear(StrategyModel):
    """h_v(x) = x_v on the unit box; not an independent-activation model."""

    def __init__(self, n):
        super().__init__(n, n, np.ones(n), 1.0, 0.0)

    def values(self, x):
        return self.check_domain(x).copy()

    def grad_entries(self, x):
        nodes = np.arange(self.n)
        return nodes, nodes, np.ones(self.n)


@pytest.fixture
def path3():
    """0 -> 1 -> 2 with p = 0.5 and 0.25: sigma({0}) = 1.625."""
    return build_graph(3, [(0, 1, 0.5), (1, 2, 0.25)])
