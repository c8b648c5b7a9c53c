"""Compiled Luby-triple simulation with online k and adjacency statistics."""

from __future__ import annotations

import numpy as np
from numba import njit

from .._rng import node_keys, uniform
from ..protocols.luby import K_LIMIT
from ._graph import all_stable, set_bit, touches

S_ROUNDS = 0
S_STABLE_FROM = 1
S_MAX_K = 2
S_K_FORM = 3  # k values not of the form k0 * 2^j
S_K_DECREASE = 4
S_ADJ_ROUNDS = 5  # rounds with an adjacent MIS pair
S_UNEQUAL_K = 6  # (round, pair) instances of adjacent MIS nodes with different k
S_UNEQUAL_ENTRY = 7  # ... with different MIS entry rounds
N_STATS = 8


@njit(cache=True)
def _is_form(k, k0):
    if k < k0 or k % k0:
        return False
    q = k // k0
    return (q & (q - 1)) == 0


@njit(cache=True)
def _double(k):
    return k * 2 if k <= K_LIMIT // 2 else k


@njit(cache=True)
def run_luby(bits, indptr, indices, wake, crash, last_event, seed, k0, literal, cap, tail, record):
    n = wake.shape[0]
    words = bits.shape[1] if n else 1
    keys = node_keys(seed, n)
    R = cap if record else 1
    rec_state = np.full((R, n), -1, dtype=np.int8)
    rec_action = np.full((R, n), -1, dtype=np.int8)
    rec_obs = np.full((R, n), -1, dtype=np.int8)
    rec_prob = np.zeros((R, n), dtype=np.float64)
    rec_k = np.zeros((R, n), dtype=np.int64)
    rec_since = np.full((R, n), -1, dtype=np.int64)

    stats = np.zeros(N_STATS, dtype=np.int64)
    stats[S_STABLE_FROM] = -1
    state = np.zeros(n, dtype=np.int8)
    k = np.zeros(n, dtype=np.int64)
    pending = np.zeros(n, dtype=np.bool_)
    since = np.full(n, -1, dtype=np.int64)
    joined = np.zeros(n, dtype=np.bool_)
    alive = np.zeros(n, dtype=np.bool_)
    mis = np.zeros(n, dtype=np.bool_)
    beep = np.zeros(n, dtype=np.bool_)
    listened = np.zeros(n, dtype=np.bool_)
    snapshot = np.full(n, -1, dtype=np.int8)
    beep_row = np.zeros(words, dtype=np.uint64)
    busy_row = np.zeros(words, dtype=np.uint64)
    mis_row = np.zeros(words, dtype=np.uint64)
    anchor_row = np.zeros(words, dtype=np.uint64)

    t = 0
    while t < cap:
        slot = t % 3
        start = t - slot
        for w in range(words):
            busy_row[w] = 0
            mis_row[w] = 0
            beep_row[w] = 0
        for v in range(n):
            was = alive[v]
            alive[v] = wake[v] <= t and t < crash[v]
            if alive[v] and not was:
                state[v] = 0
                k[v] = k0
                pending[v] = False
                since[v] = -1
                joined[v] = False
                if not _is_form(k0, k0):
                    stats[S_K_FORM] += 1
            mis[v] = alive[v] and state[v] == 2
            if alive[v] and state[v] >= 1:
                set_bit(busy_row, v)
            if mis[v]:
                set_bit(mis_row, v)
            if alive[v] and k[v] > stats[S_MAX_K]:
                stats[S_MAX_K] = k[v]
            if record and alive[v]:
                rec_state[t, v] = state[v]
                rec_k[t, v] = k[v]
                rec_since[t, v] = since[v]
                if joined[v] or slot == 0:
                    bnd = start % k[v] == 0
                    if slot == 0:
                        rb = bnd if literal else not bnd
                        rec_prob[t, v] = 1.0 if rb else 0.0
                    elif slot == 1:
                        rec_prob[t, v] = 1.0 if state[v] == 2 else 0.0
                    else:
                        rec_prob[t, v] = 0.5 if state[v] >= 1 else 0.0

        stable = all_stable(bits, n, alive, mis, busy_row, anchor_row)
        adj_round = False
        for v in range(n):
            if not mis[v] or not touches(bits, v, mis_row):
                continue
            adj_round = True
            for j in range(indptr[v], indptr[v + 1]):
                u = indices[j]
                if u > v and mis[u]:
                    if k[u] != k[v]:
                        stats[S_UNEQUAL_K] += 1
                    if since[u] != since[v]:
                        stats[S_UNEQUAL_ENTRY] += 1
        if adj_round:
            stats[S_ADJ_ROUNDS] += 1
        if stable:
            if stats[S_STABLE_FROM] < 0:
                stats[S_STABLE_FROM] = t
                for v in range(n):
                    snapshot[v] = state[v] if alive[v] else -1
            if not record and t >= last_event and t - stats[S_STABLE_FROM] + 1 >= tail:
                t += 1
                break
        else:
            stats[S_STABLE_FROM] = -1

        # act
        for v in range(n):
            beep[v] = False
            listened[v] = False
            if not alive[v]:
                continue
            if not joined[v]:
                if slot:
                    listened[v] = True
                    continue
                joined[v] = True
            bnd = start % k[v] == 0
            b = False
            if slot == 0:
                b = bnd if literal else not bnd
                if b and bnd:  # literal: promote at own boundary
                    if state[v] == 0:
                        pending[v] = True
                    elif state[v] == 1:
                        state[v] = 2
                        since[v] = t
            elif slot == 1:
                b = state[v] == 2
            elif state[v] >= 1:
                b = uniform(keys[v], np.uint64(t)) < 0.5
            beep[v] = b
            if b:
                set_bit(beep_row, v)
        # observe
        for v in range(n):
            if not alive[v]:
                continue
            if beep[v]:
                if record:
                    rec_action[t, v] = 1
                continue
            heard = touches(bits, v, beep_row)
            if record:
                rec_action[t, v] = 0
                rec_obs[t, v] = 1 if heard else 0
            if listened[v]:
                continue  # not yet joined
            old_k = k[v]
            if slot == 0:
                if literal:
                    if heard:
                        k[v] = _double(k[v])
                elif heard:
                    k[v] = _double(k[v])
                    if state[v] == 1:
                        state[v] = 0
                elif state[v] == 0:
                    pending[v] = True
                elif state[v] == 1:
                    state[v] = 2
                    since[v] = t
            elif slot == 1:
                if heard:
                    state[v] = 0
                    pending[v] = False
                elif pending[v]:
                    state[v] = 1
                    pending[v] = False
            elif heard:
                if state[v] == 2:
                    k[v] = _double(k[v])
                state[v] = 0
            if k[v] != old_k:
                if k[v] < old_k:
                    stats[S_K_DECREASE] += 1
                if not _is_form(k[v], k0):
                    stats[S_K_FORM] += 1
        t += 1

    stats[S_ROUNDS] = t
    return stats, snapshot, k.copy(), rec_state, rec_action, rec_obs, rec_prob, rec_k, rec_since
