"""Compiled runner for the uniform listen-then-beep-once behaviors."""

from __future__ import annotations

import numpy as np
from numba import njit

from .._rng import as_seed, node_keys, uniform
from ..kernel import Scenario, Trace
from ..scenarios import UniformBehavior
from ._graph import graph_arrays, set_bit, touches


@njit(cache=True)
def _run_uniform(bits, wake, crash, seed, beeps, l, p, cap):
    n = wake.shape[0]
    words = bits.shape[1] if n else 1
    keys = node_keys(seed, n)
    state = np.full((cap, n), -1, dtype=np.int8)
    action = np.full((cap, n), -1, dtype=np.int8)
    obs = np.full((cap, n), -1, dtype=np.int8)
    prob = np.zeros((cap, n), dtype=np.float64)
    age = np.zeros(n, dtype=np.int64)
    heard_any = np.zeros(n, dtype=np.bool_)
    beep = np.zeros(n, dtype=np.bool_)
    row = np.zeros(words, dtype=np.uint64)
    for t in range(cap):
        for w in range(words):
            row[w] = 0
        for v in range(n):
            beep[v] = False
            if not (wake[v] <= t and t < crash[v]):
                continue
            state[t, v] = 0
            if beeps and age[v] == l - 1 and not heard_any[v]:
                prob[t, v] = p
                if uniform(keys[v], np.uint64(t)) < p:
                    beep[v] = True
                    set_bit(row, v)
        for v in range(n):
            if not (wake[v] <= t and t < crash[v]):
                continue
            if beep[v]:
                action[t, v] = 1
            else:
                action[t, v] = 0
                h = touches(bits, v, row)
                obs[t, v] = 1 if h else 0
                if h:
                    heard_any[v] = True
            age[v] += 1
    return state, action, obs, prob


def run_uniform(scenario: Scenario, behavior: UniformBehavior, seed: int, cap: int) -> Trace:
    """Same trace as the reference kernel running ``uniform_factory(behavior)``."""
    if cap < 1:
        raise ValueError("round cap must be at least 1")
    g = graph_arrays(scenario)
    state, action, obs, prob = _run_uniform(
        g.bits, g.wake, g.crash, as_seed(seed), behavior.mode == "beep-after-l", behavior.l, behavior.p, cap
    )
    k = np.zeros(state.shape, dtype=np.int64)
    return Trace(scenario, seed, state, action, obs, prob, k, {})
