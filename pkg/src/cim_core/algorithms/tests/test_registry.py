"""
Tests for the algorithm registries and the registering decorators.
"""

import pytest

from src.cim_core.algorithms.algorithm_decorator import registering_decorator_factory
from src.cim_core.algorithms.registry import AlgorithmRegistry, activation_registry, optimizer_registry


class TestAlgorithmRegistry:
    def test_register_get_require(self):
        registry = AlgorithmRegistry("widget")
        factory = lambda: "made"
        registry.register("w", factory)
        assert registry.get("w") is factory
        assert registry.require("w")() == "made"
        assert registry.get("missing") is None
        assert registry.names() == ["w"]

    def test_require_unknown_lists_known_names(self):
        registry = AlgorithmRegistry("widget")
        registry.register("b", object)
        registry.register("a", object)
        with pytest.raises(KeyError) as excinfo:
            registry.require("c")
        assert "a, b" in str(excinfo.value)

    def test_overwrite_and_unregister(self):
        registry = AlgorithmRegistry("widget")
        registry.register("w", int)
        registry.register("w", float)
        assert registry.get("w") is float
        assert registry.unregister("w") is True
        assert registry.unregister("w") is False


def test_decorator_registers_and_returns_factory():
    registry = AlgorithmRegistry("widget")
    register = registering_decorator_factory(registry)

    @register("double")
    def double(x):
        return 2 * x

    assert double(3) == 6
    assert registry.require("double") is double


def test_builtin_registrations():
    # Importing the modules runs their decorators.
    import src.cimbs.model.strategy  # noqa: F401
    import src.cimbs.solvers.optimize  # noqa: F401

    assert {"quadratic", "saturating"} <= set(activation_registry.names())
    assert {"proxgrad_ris", "uppergrad_ris", "greedy_ris", "proxgrad_org"} <= set(optimizer_registry.names())
