"""Counter-based per-node random streams.

Every node gets a key derived from ``(seed, node)``; the draw for a round is a
pure function of ``(key, round)``. The reference kernel and the compiled
engines share these functions, so both produce bit-identical traces.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_ROUND_SALT = np.uint64(0xD6E8FEB86659FD93)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def node_key(seed, node):
    """Stream key for ``node`` under trial ``seed``."""
    return _mix(_mix(seed + _GAMMA) ^ (np.uint64(node + 1) * _GAMMA))


@njit(cache=True)
def uniform(key, t):
    """Uniform double in [0, 1) for round ``t`` of the stream ``key``."""
    z = _mix(key ^ ((np.uint64(t) + np.uint64(1)) * _ROUND_SALT))
    return float(z >> _S11) * _INV53


def as_seed(seed: int) -> np.uint64:
    """Reduce any Python integer seed to the 64-bit domain used by the streams."""
    return np.uint64(int(seed) % (1 << 64))


@njit(cache=True)
def node_keys(seed, n):
    out = np.empty(n, dtype=np.uint64)
    for v in range(n):
        out[v] = node_key(seed, v)
    return out


class NodeStream:
    """Python view of one node's stream; ``draw(t)`` is idempotent per round."""

    __slots__ = ("key",)

    def __init__(self, seed: int, node: int) -> None:
        self.key = np.uint64(node_key(as_seed(seed), node))

    def draw(self, t: int) -> float:
        return uniform(self.key, np.uint64(t))
