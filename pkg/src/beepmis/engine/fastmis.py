"""Compiled FastMIS simulation with online trace statistics."""

from __future__ import annotations

import numpy as np
from numba import njit

from .._rng import node_keys, uniform
from ._graph import all_stable, set_bit, touches

LAMBDAS = (0.25, 0.5, 1.0, 2.0)

# indices into the integer stats vector
S_ROUNDS = 0  # rounds simulated
S_STABLE_FROM = 1  # start of the final all-stable streak, -1 if none
S_EPISODES = 2  # adjacent-MIS episodes (per node)
S_UNRESOLVED = 3  # episodes still open when the run ended
S_MAX_EPISODE = 4  # longest closed episode
S_LONG_EPISODES = 5  # closed episodes longer than the resolve limit
S_ADJ_ROUNDS = 6  # rounds containing an adjacent MIS pair
S_COMPETING = 7  # competing (node, round) pairs
S_COMPETING_HIGH = 8  # ... with open-neighborhood potential >= 1/2
S_FIRST_ADJ = 9  # first round with an adjacent MIS pair, -1 if none
N_STATS = 10


@njit(cache=True)
def _level(pos, L, P, top):
    if pos < L:
        return 0
    if pos < 2 * L:
        return 1 << (1 + (pos - L) // P)
    return top


@njit(cache=True)
def run_fastmis(
    bits, indptr, indices, wake, crash, last_event, seed, N, c, cap, tail,
    record, resolve_limit,
):
    n = wake.shape[0]
    words = bits.shape[1] if n else 1
    logn = 0
    while (1 << (logn + 1)) <= N:
        logn += 1
    P = c * logn
    L = c * logn * logn
    top = 4 * N
    unit = 1.0 / (8 * N)
    keys = node_keys(seed, n)

    R = cap if record else 1
    rec_state = np.full((R, n), -1, dtype=np.int8)
    rec_action = np.full((R, n), -1, dtype=np.int8)
    rec_obs = np.full((R, n), -1, dtype=np.int8)
    rec_prob = np.zeros((R, n), dtype=np.float64)
    rec_level = np.full((R, n), -1, dtype=np.int64)

    stats = np.zeros(N_STATS, dtype=np.int64)
    stats[S_STABLE_FROM] = -1
    stats[S_FIRST_ADJ] = -1
    nl = len(LAMBDAS)
    audit = np.zeros((2, nl), dtype=np.int64)  # declared / MIS excluded
    first_violation = np.full((2, nl, 3), -1, dtype=np.int64)  # round, node, low round
    high = np.empty(nl, dtype=np.int64)
    low = np.empty(nl, dtype=np.int64)
    for i in range(nl):
        high[i] = int(LAMBDAS[i] * 8 * N + 0.5)
        low[i] = int((LAMBDAS[i] / 2 - 0.125) * 8 * N + 0.5)  # violation: E < low
    last_low = np.full((2, nl, n), -1, dtype=np.int64)

    pos = np.zeros(n, dtype=np.int64)
    beep_first = np.zeros(n, dtype=np.bool_)
    alive = np.zeros(n, dtype=np.bool_)
    lev = np.zeros(n, dtype=np.int64)
    lev_x = np.zeros(n, dtype=np.int64)  # level with MIS-loop nodes zeroed
    E = np.zeros(n, dtype=np.int64)  # closed-neighborhood potential, units of 1/(8N)
    E_x = np.zeros(n, dtype=np.int64)
    mis = np.zeros(n, dtype=np.bool_)
    beep = np.zeros(n, dtype=np.bool_)
    conf_start = np.full(n, -1, dtype=np.int64)
    snapshot = np.full(n, -1, dtype=np.int8)
    beep_row = np.zeros(words, dtype=np.uint64)
    busy_row = np.zeros(words, dtype=np.uint64)
    mis_row = np.zeros(words, dtype=np.uint64)
    anchor_row = np.zeros(words, dtype=np.uint64)
    thr_half = 4 * N

    t = 0
    while t < cap:
        for w in range(words):
            busy_row[w] = 0
            mis_row[w] = 0
            beep_row[w] = 0
        for v in range(n):
            was = alive[v]
            alive[v] = wake[v] <= t and t < crash[v]
            if alive[v] and not was:
                pos[v] = 0
                beep_first[v] = False
            nl_v = _level(pos[v], L, P, top) if alive[v] else 0
            st = -1
            if alive[v]:
                st = 0 if pos[v] < L else (1 if pos[v] < 2 * L else 2)
            mis[v] = st == 2
            nx = 0 if mis[v] else nl_v
            d = nl_v - lev[v]
            dx = nx - lev_x[v]
            if d != 0 or dx != 0:
                E[v] += d
                E_x[v] += dx
                for j in range(indptr[v], indptr[v + 1]):
                    E[indices[j]] += d
                    E_x[indices[j]] += dx
                lev[v] = nl_v
                lev_x[v] = nx
            if st >= 1:
                set_bit(busy_row, v)
            if st == 2:
                set_bit(mis_row, v)
            if record:
                rec_state[t, v] = st
                if alive[v]:
                    rec_prob[t, v] = nl_v * unit
                    rec_level[t, v] = nl_v

        # statistics over the pre-action configuration of round t
        stable = all_stable(bits, n, alive, mis, busy_row, anchor_row)
        adj_round = False
        for v in range(n):
            if not alive[v]:
                if conf_start[v] >= 0:  # crashed while in conflict
                    dur = t - conf_start[v]
                    stats[S_MAX_EPISODE] = max(stats[S_MAX_EPISODE], dur)
                    if dur > resolve_limit:
                        stats[S_LONG_EPISODES] += 1
                    conf_start[v] = -1
                continue
            for a in range(2):
                Ev = E[v] if a == 0 else E_x[v]
                for i in range(nl):
                    if Ev < low[i]:
                        last_low[a, i, v] = t
                    elif Ev >= high[i] and last_low[a, i, v] >= 0 and t - last_low[a, i, v] <= P:
                        if audit[a, i] == 0:
                            first_violation[a, i, 0] = t
                            first_violation[a, i, 1] = v
                            first_violation[a, i, 2] = last_low[a, i, v]
                        audit[a, i] += 1
            if lev[v] > 0 and not mis[v]:
                stats[S_COMPETING] += 1
                if E[v] - lev[v] >= thr_half:
                    stats[S_COMPETING_HIGH] += 1
            conflict = mis[v] and touches(bits, v, mis_row)
            if conflict:
                adj_round = True
                if conf_start[v] < 0:
                    conf_start[v] = t
                    stats[S_EPISODES] += 1
            elif conf_start[v] >= 0:
                dur = t - conf_start[v]
                stats[S_MAX_EPISODE] = max(stats[S_MAX_EPISODE], dur)
                if dur > resolve_limit:
                    stats[S_LONG_EPISODES] += 1
                conf_start[v] = -1
        if adj_round:
            stats[S_ADJ_ROUNDS] += 1
            if stats[S_FIRST_ADJ] < 0:
                stats[S_FIRST_ADJ] = t
        if stable:
            if stats[S_STABLE_FROM] < 0:
                stats[S_STABLE_FROM] = t
                for v in range(n):
                    snapshot[v] = 2 if mis[v] else (0 if alive[v] else -1)
            if not record and t >= last_event and t - stats[S_STABLE_FROM] + 1 >= tail:
                t += 1
                break
        else:
            stats[S_STABLE_FROM] = -1

        # act
        for v in range(n):
            if not alive[v]:
                continue
            p = pos[v]
            b = False
            if p >= L:
                u = uniform(keys[v], np.uint64(t))
                if p < 2 * L:
                    b = u < lev[v] * unit
                elif (p - 2 * L) % 2 == 0:
                    beep_first[v] = u < 0.5
                    b = beep_first[v]
                else:
                    b = not beep_first[v]
            beep[v] = b
            if b:
                set_bit(beep_row, v)
        # observe
        for v in range(n):
            if not alive[v]:
                continue
            if beep[v]:
                pos[v] += 1
                if record:
                    rec_action[t, v] = 1
                continue
            heard = touches(bits, v, beep_row)
            if record:
                rec_action[t, v] = 0
                rec_obs[t, v] = 1 if heard else 0
            if heard:
                pos[v] = 0
            else:
                pos[v] += 1
        t += 1

    stats[S_ROUNDS] = t
    for v in range(n):
        if conf_start[v] >= 0:
            stats[S_UNRESOLVED] += 1
    return stats, audit, first_violation, snapshot, rec_state, rec_action, rec_obs, rec_prob, rec_level
