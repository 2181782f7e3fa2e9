"""
Utilities for randomness and parallel execution.
"""

from src.cimbs.utils.rng import SeedStreams
from src.cimbs.utils.parallel import map_chunks, chunk_sizes

__all__ = ['SeedStreams', 'map_chunks', 'chunk_sizes']
