"""Compiled simulation of the 11-round-block wake-up protocol."""

from __future__ import annotations

import numpy as np
from numba import njit

from .._rng import node_keys, uniform
from ..protocols.luby import K_LIMIT
from ..protocols.wakeup import BLOCK, C_OFF, FULL, M_OFF, R_OFF, T_OFF
from ._graph import all_stable, set_bit, touches

S_ROUNDS = 0
S_STABLE_FROM = 1
S_MAX_K = 2
S_K_CAP = 3  # rounds x nodes with k above the evaluable boundary
S_K_FORM = 4  # k values that are not powers of two
S_ADJ_ROUNDS = 5
S_UNEQUAL_K = 6
S_UNEQUAL_ENTRY = 7
S_FAULTS = 8  # rejected alignments
S_REFRAMES = 9
S_MIN_KNOWN = 10  # fewest known time bits among participating nodes at the end
N_STATS = 11

WAITING, FRAMING, ALIGNED = 0, 1, 2
K_NONE, K_ZERO, K_T, K_TKNOWN, K_TRIPLE = 0, 1, 2, 3, 4


@njit(cache=True)
def _known_parity(n_low, m):
    if m < 2 or n_low == 0:
        return -1
    b = 0
    while (n_low >> b) & 1 == 0:
        b += 1
    if b > m - 2:
        return -1
    return 1 if ((n_low >> b) & 3) == 1 else 0


@njit(cache=True)
def _align_ring(row, total, H, need, lvl):
    """Phase of the last ``need`` ring entries (mod 2^(lvl+2)), or -1 on a fault."""
    base = total - need
    s = 0
    d = 1
    hit_start = 0
    for j in range(lvl + 1):
        alt = np.zeros(2, dtype=np.bool_)
        for h in range(2):
            st = s + h * d
            cnt = 0
            ok = True
            prev = -1
            i = st
            while i < need:
                bit = row[(base + i) % H]
                if prev >= 0 and bit == prev:
                    ok = False
                prev = bit
                cnt += 1
                i += 2 * d
            alt[h] = ok and cnt >= 2
        if alt[0] == alt[1]:
            return -1
        if alt[0]:
            hit_start = s
            s = s + d
        else:
            hit_start = s + d
        d *= 2
    i0 = hit_start
    n_hi = (1 << lvl) | (0 if row[(base + i0) % H] == 1 else (1 << (lvl + 1)))
    mod = 1 << (lvl + 2)
    return ((n_hi - i0) % mod + mod) % mod


@njit(cache=True)
def run_w2(bits, indptr, indices, wake, crash, last_event, seed, k0, literal, cap, tail, record):
    n = wake.shape[0]
    words = bits.shape[1] if n else 1
    keys = node_keys(seed, n)
    H = cap // BLOCK + 2
    R = cap if record else 1
    rec_state = np.full((R, n), -1, dtype=np.int8)
    rec_action = np.full((R, n), -1, dtype=np.int8)
    rec_obs = np.full((R, n), -1, dtype=np.int8)
    rec_prob = np.zeros((R, n), dtype=np.float64)
    rec_k = np.zeros((R, n), dtype=np.int64)
    rec_since = np.full((R, n), -1, dtype=np.int64)
    rec_known = np.full((R, n), -1, dtype=np.int64)
    rec_cap = np.full((R, n), -1, dtype=np.int64)
    rec_aligned = np.full((R, n), -1, dtype=np.int64)

    stats = np.zeros(N_STATS, dtype=np.int64)
    stats[S_STABLE_FROM] = -1
    alive = np.zeros(n, dtype=np.bool_)
    mode = np.zeros(n, dtype=np.int64)
    wait_bits = np.zeros((n, 4), dtype=np.int64)
    wait_len = np.zeros(n, dtype=np.int64)
    last_bit = np.zeros(n, dtype=np.int64)  # framing: previous wire bit
    off = np.zeros(n, dtype=np.int64)
    m = np.zeros(n, dtype=np.int64)
    n_low = np.zeros(n, dtype=np.int64)
    hist = np.zeros((n, H), dtype=np.int8)
    htotal = np.zeros(n, dtype=np.int64)
    hlen = np.zeros(n, dtype=np.int64)
    state = np.zeros(n, dtype=np.int8)
    k = np.zeros(n, dtype=np.int64)
    kcap = np.zeros(n, dtype=np.int64)
    pending = np.zeros(n, dtype=np.bool_)
    since = np.full(n, -1, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    kind = np.zeros(n, dtype=np.int64)
    tbit = np.zeros(n, dtype=np.int64)
    beep = np.zeros(n, dtype=np.bool_)
    mis = np.zeros(n, dtype=np.bool_)
    snapshot = np.full(n, -1, dtype=np.int8)
    beep_row = np.zeros(words, dtype=np.uint64)
    busy_row = np.zeros(words, dtype=np.uint64)
    mis_row = np.zeros(words, dtype=np.uint64)
    anchor_row = np.zeros(words, dtype=np.uint64)

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
                mode[v] = WAITING
                wait_len[v] = 0
                off[v] = 0
                m[v] = 0
                n_low[v] = 0
                htotal[v] = 0
                hlen[v] = 0
                state[v] = 0
                k[v] = k0
                kcap[v] = 1
                pending[v] = False
                since[v] = -1
                active[v] = False
            st = state[v] if active[v] else 0
            mis[v] = alive[v] and st == 2
            if alive[v] and st >= 1:
                set_bit(busy_row, v)
            if mis[v]:
                set_bit(mis_row, v)
            if not alive[v]:
                continue
            if k[v] > stats[S_MAX_K]:
                stats[S_MAX_K] = k[v]
            if k[v] & (k[v] - 1):
                stats[S_K_FORM] += 1
            if active[v] and k[v] > (1 << m[v]):
                stats[S_K_CAP] += 1
            if record:
                rec_state[t, v] = st
                rec_k[t, v] = k[v]
                rec_since[t, v] = since[v]
                rec_known[t, v] = m[v]
                rec_cap[t, v] = (1 << m[v]) if active[v] else -1
                rec_aligned[t, v] = 1 if mode[v] == ALIGNED else 0
                p = 0.0
                o = off[v]
                if mode[v] == ALIGNED and o >= 2:
                    if o % 2 == 0:
                        p = 1.0
                    elif o == T_OFF:
                        p = 1.0 if _known_parity(n_low[v], m[v]) == 1 else 0.0
                    elif active[v]:
                        bnd = n_low[v] % k[v] == 0
                        if o == R_OFF:
                            rb = bnd if literal else not bnd
                            p = 1.0 if rb else 0.0
                        elif o == M_OFF:
                            p = 1.0 if state[v] == 2 else 0.0
                        else:
                            p = 0.5 if state[v] >= 1 else 0.0
                rec_prob[t, v] = p

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
                    snapshot[v] = (state[v] if active[v] else 0) if alive[v] else -1
            if not record and t >= last_event and t - stats[S_STABLE_FROM] + 1 >= tail:
                t += 1
                break
        else:
            stats[S_STABLE_FROM] = -1

        # act
        for v in range(n):
            beep[v] = False
            kind[v] = K_NONE
            if not alive[v] or mode[v] != ALIGNED:
                continue
            o = off[v]
            b = False
            if o < 2:
                kind[v] = K_ZERO
            elif o % 2 == 0:
                b = True
            elif o == T_OFF:
                tb = _known_parity(n_low[v], m[v])
                if tb < 0:
                    kind[v] = K_T
                else:
                    kind[v] = K_TKNOWN
                    tbit[v] = tb
                    b = tb == 1
            elif active[v]:
                kind[v] = K_TRIPLE
                bnd = n_low[v] % k[v] == 0
                if o == R_OFF:
                    b = bnd if literal else not bnd
                    if b and bnd:
                        if state[v] == 0:
                            pending[v] = True
                        elif state[v] == 1:
                            state[v] = 2
                            since[v] = t
                elif o == M_OFF:
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
            heard = False
            if not beep[v]:
                heard = touches(bits, v, beep_row)
            if record:
                rec_action[t, v] = 1 if beep[v] else 0
                rec_obs[t, v] = -1 if beep[v] else (1 if heard else 0)
            hb = 1 if heard else 0
            if mode[v] == WAITING:
                wait_bits[v, wait_len[v]] = hb
                wait_len[v] += 1
                if wait_len[v] < 4:
                    continue
                anyb = False
                for i in range(4):
                    if wait_bits[v, i]:
                        anyb = True
                if not anyb:
                    m[v] = FULL
                    n_low[v] = 0
                    kcap[v] = 1 << FULL
                    mode[v] = ALIGNED
                    off[v] = BLOCK - 1
                else:
                    end = -1
                    for i in range(1, 4):
                        if wait_bits[v, i - 1] == 0 and wait_bits[v, i] == 0:
                            end = i
                    if end >= 0:
                        mode[v] = ALIGNED
                        off[v] = 1 + (3 - end)
                    else:
                        mode[v] = FRAMING
                        last_bit[v] = wait_bits[v, 3]
                        continue
            elif mode[v] == FRAMING:
                if last_bit[v] == 0 and hb == 0:
                    mode[v] = ALIGNED
                    off[v] = 1
                else:
                    last_bit[v] = hb
                    continue
            else:
                kd = kind[v]
                if kd == K_ZERO and heard:
                    stats[S_REFRAMES] += 1
                    mode[v] = FRAMING
                    last_bit[v] = 1
                    htotal[v] = 0
                    hlen[v] = 0
                    if m[v] != FULL:
                        m[v] = 0
                        n_low[v] = 0
                    state[v] = 0
                    k[v] = k0
                    kcap[v] = 1 << m[v]
                    pending[v] = False
                    since[v] = -1
                    active[v] = False
                    continue
                if kd == K_T or kd == K_TKNOWN:
                    bit = hb if kd == K_T else tbit[v]
                    hist[v, htotal[v] % H] = bit
                    htotal[v] += 1
                    hlen[v] += 1
                    if m[v] == FULL:
                        hlen[v] = 1
                    else:
                        lvl = max(0, m[v] - 1)
                        need = BLOCK << lvl
                        if hlen[v] >= need:
                            hlen[v] = need
                            ph = _align_ring(hist[v], htotal[v], H, need, lvl)
                            if ph < 0:
                                stats[S_FAULTS] += 1
                            else:
                                m_new = lvl + 2
                                n_cur = (ph + need - 1) % (1 << m_new)
                                if m[v] > 0 and n_cur % (1 << m[v]) != n_low[v]:
                                    stats[S_FAULTS] += 1
                                else:
                                    m[v] = m_new
                                    n_low[v] = n_cur
                                    kcap[v] = 1 << m_new
                elif kd == K_TRIPLE and not beep[v]:
                    o = off[v]
                    lim = min(kcap[v], K_LIMIT)
                    if o == R_OFF:
                        if literal:
                            if heard and 2 * k[v] <= lim:
                                k[v] *= 2
                        elif heard:
                            if 2 * k[v] <= lim:
                                k[v] *= 2
                            if state[v] == 1:
                                state[v] = 0
                        elif state[v] == 0:
                            pending[v] = True
                        elif state[v] == 1:
                            state[v] = 2
                            since[v] = t
                    elif o == M_OFF:
                        if heard:
                            state[v] = 0
                            pending[v] = False
                        elif pending[v]:
                            state[v] = 1
                            pending[v] = False
                    elif heard:
                        if state[v] == 2 and 2 * k[v] <= lim:
                            k[v] *= 2
                        state[v] = 0
            # advance the block clock
            off[v] = (off[v] + 1) % BLOCK
            if off[v] == 0:
                n_low[v] = (n_low[v] + 1) % (1 << m[v])
                if not active[v] and m[v] >= 1 and k[v] <= (1 << m[v]):
                    active[v] = True
        t += 1

    stats[S_ROUNDS] = t
    mk = FULL
    for v in range(n):
        if alive[v] and m[v] < mk:
            mk = m[v]
    stats[S_MIN_KNOWN] = mk
    return (stats, snapshot, k.copy(), rec_state, rec_action, rec_obs, rec_prob, rec_k, rec_since,
            rec_known, rec_cap, rec_aligned)
