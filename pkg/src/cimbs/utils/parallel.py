"""
Chunked parallel map with worker-count independent results.

Work of `total` independent tasks is cut into fixed-size chunks; chunk i always
draws from stream i, and partial results come back in chunk order, so the
merged result does not depend on how many workers ran.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional

from src.cimbs.utils.rng import SeedStreams

logger = logging.getLogger(__name__)


def chunk_sizes(total: int, chunk_size: int) -> List[int]:
    """Split `total` tasks into chunks of at most `chunk_size`."""
    if total < 0:
        raise ValueError("total must be non-negative")
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _run_chunk(args):
    task, payload, count, streams, index = args
    return task(payload, count, streams.generator(index))


def map_chunks(task: Callable[[Any, int, Any], Any],
               payload: Any,
               total: int,
               streams: SeedStreams,
               chunk_size: int = 1000,
               workers: Optional[int] = 1) -> List[Any]:
    """
    Run `task(payload, count, rng)` over all chunks and return the partial results.

    Args:
        task: Module-level callable (it must pickle when workers > 1).
        payload: Read-only data shared by every chunk.
        total: Number of independent tasks.
        streams: Stream family; chunk i uses streams.generator(i).
        chunk_size: Tasks per chunk; fixes the stream assignment.
        workers: Process count; 1 or None runs inline.

    Returns:
        Partial results in chunk order.
    """
    sizes = chunk_sizes(total, chunk_size)
    jobs = [(task, payload, count, streams, index) for index, count in enumerate(sizes)]

    if not workers or workers <= 1 or len(jobs) <= 1:
        return [_run_chunk(job) for job in jobs]

    logger.debug(f"Running {len(jobs)} chunks on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_run_chunk, jobs))
