"""
Segmented products with leave-one-out terms.

Both h_v(x) = 1 - prod_j (1 - q_vj) and the RR-set estimator need, per
segment, the product of its factors and, per entry, the product of the other
factors in its segment. Zero factors are counted instead of divided by.
"""
from typing import Tuple

import numpy as np


def segment_products(factors: np.ndarray, ptr: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Args:
        factors: Entry values, grouped contiguously by segment.
        ptr: CSR pointer array of length K+1 (segment s is ptr[s]:ptr[s+1]).

    Returns:
        (full, loo): full[s] is the product over segment s (1 for empty
        segments); loo[e] is the product over e's segment without entry e.
    """
    num_segments = ptr.shape[0] - 1
    lengths = np.diff(ptr)
    full = np.ones(num_segments)
    if factors.size == 0:
        return full, np.zeros(0)

    zero = factors == 0.0
    safe = np.where(zero, 1.0, factors)
    nonempty = lengths > 0
    starts = ptr[:-1][nonempty]

    prod_nonzero = np.ones(num_segments)
    prod_nonzero[nonempty] = np.multiply.reduceat(safe, starts)
    zero_count = np.zeros(num_segments, dtype=np.int64)
    zero_count[nonempty] = np.add.reduceat(zero.astype(np.int64), starts)

    full = np.where(zero_count == 0, prod_nonzero, 0.0)

    segment_of = np.repeat(np.arange(num_segments), lengths)
    entry_prod = prod_nonzero[segment_of]
    entry_zeros = zero_count[segment_of]
    loo = np.where(entry_zeros == 0, entry_prod / safe,
                   np.where((entry_zeros == 1) & zero, entry_prod, 0.0))
    return full, loo
