"""Array views of a scenario for the compiled engines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..kernel import Scenario

NEVER = np.iinfo(np.int64).max


@dataclass(frozen=True)
class GraphArrays:
    n: int
    words: int
    bits: np.ndarray  # n x words uint64 adjacency rows
    indptr: np.ndarray
    indices: np.ndarray
    wake: np.ndarray
    crash: np.ndarray  # NEVER for nodes that never crash
    last_event: int


def graph_arrays(s: Scenario) -> GraphArrays:
    n = s.n
    words = max(1, (n + 63) // 64)
    bits = np.zeros((n, words), dtype=np.uint64)
    nb = s.neighbors
    counts = np.array([len(a) for a in nb], dtype=np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    indices = np.concatenate(nb).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
    rows = np.repeat(np.arange(n, dtype=np.int64), counts)
    np.bitwise_or.at(bits, (rows, indices >> 6), np.left_shift(np.uint64(1), (indices & 63).astype(np.uint64)))
    return GraphArrays(n, words, bits, indptr, indices, s.wake_array.copy(), s.crash_array.copy(), s.last_event)


@njit(cache=True)
def set_bit(row, v):
    row[v >> 6] |= np.uint64(1) << np.uint64(v & 63)


@njit(cache=True)
def touches(bits, v, row):
    """True if node ``v``'s adjacency row intersects the bitset ``row``."""
    for w in range(row.shape[0]):
        if bits[v, w] & row[w]:
            return True
    return False


@njit(cache=True)
def all_stable(bits, n, alive, mis, busy_row, anchor_row):
    """Per-round stability predicate over the participating subgraph.

    ``busy_row`` is the bitset of participating nodes that are not inactive;
    ``anchor_row`` is scratch. Stable MIS nodes are exactly the anchors
    (an MIS node adjacent to another MIS node is never an anchor, and an
    anchor has no MIS neighbor), so no further closure is needed.
    """
    for w in range(anchor_row.shape[0]):
        anchor_row[w] = 0
    for v in range(n):
        if alive[v] and mis[v] and not touches(bits, v, busy_row):
            set_bit(anchor_row, v)
    for v in range(n):
        if not alive[v]:
            continue
        if (anchor_row[v >> 6] >> np.uint64(v & 63)) & np.uint64(1):
            continue
        if not touches(bits, v, anchor_row):
            return False
    return True
