"""
Registry module for pluggable algorithm components.

Activation functions are registered by id and optimizers by kind; both use the
same small name -> factory registry.
"""

import logging
from typing import Any, Callable, Dict, Optional

# Set up logger
logger = logging.getLogger(__name__)


class AlgorithmRegistry:
    """
    A named registry of factories.

    This class provides methods to register, retrieve, and manage entries.
    """

    def __init__(self, kind: str):
        """Initialize an empty registry for entries of the given kind."""
        self.kind = kind
        self._entries: Dict[str, Callable[..., Any]] = {}

    def register(self, name: str, factory: Callable[..., Any]) -> None:
        """
        Register a factory under a name.

        Re-registering a name overwrites the previous entry with a warning.
        """
        if name in self._entries:
            logger.warning(f"{self.kind} '{name}' is already registered. Overwriting.")

        self._entries[name] = factory
        logger.debug(f"Registered {self.kind}: {name}")

    def get(self, name: str) -> Optional[Callable[..., Any]]:
        """Get a factory by name, or None if it is not registered."""
        return self._entries.get(name)

    def require(self, name: str) -> Callable[..., Any]:
        """
        Get a factory by name.

        Raises:
            KeyError: If nothing is registered under the name.
        """
        factory = self._entries.get(name)
        if factory is None:
            known = ", ".join(sorted(self._entries)) or "none"
            raise KeyError(f"Unknown {self.kind} '{name}' (registered: {known})")
        return factory

    def names(self) -> list[str]:
        return sorted(self._entries)

    def unregister(self, name: str) -> bool:
        """
        Unregister an entry.

        Returns:
            True if the entry was removed, False if it wasn't registered.
        """
        if name in self._entries:
            del self._entries[name]
            logger.debug(f"Unregistered {self.kind}: {name}")
            return True
        return False


# Global registries
activation_registry = AlgorithmRegistry("activation function")
optimizer_registry = AlgorithmRegistry("optimizer")
