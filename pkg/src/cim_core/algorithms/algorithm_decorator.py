"""
Registering decorators for activation functions and optimizers.

Decorating a factory registers it with the matching global registry and
returns the factory unchanged.
"""

import logging
from typing import Any, Callable

from src.cim_core.algorithms.registry import AlgorithmRegistry, activation_registry, optimizer_registry

# Set up logger
logger = logging.getLogger(__name__)


def registering_decorator_factory(registry: AlgorithmRegistry) -> Callable[[str], Callable]:
    """
    Create a decorator that registers factories with the given registry.

    Args:
        registry: The registry the decorated factories are added to.

    Returns:
        A decorator taking the registration name.
    """
    def decorator(name: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
        def wrapper(factory: Callable[..., Any]) -> Callable[..., Any]:
            registry.register(name, factory)
            logger.debug(f"Registered '{factory.__name__}' as {registry.kind} '{name}'")
            return factory

        return wrapper

    return decorator


register_activation = registering_decorator_factory(activation_registry)
register_optimizer = registering_decorator_factory(optimizer_registry)
