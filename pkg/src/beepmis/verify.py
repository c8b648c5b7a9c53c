"""Trace-level checks: MIS validity, stability, and beep-potential analytics.

Everything here reads recorded traces and is written for clarity rather than
speed; the compiled engines compute the same quantities online and are tested
against these functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kernel import ASLEEP, COMPETING, INACTIVE, MIS, Scenario, Trace

NEVER = -1


@dataclass
class Verdict:
    independent: bool
    maximal: bool
    stable_from: np.ndarray | None = None
    violations: list[tuple[int, tuple[int, ...], str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.independent and self.maximal


def mis_violations(
    scenario: Scenario, state: np.ndarray, alive: np.ndarray, t: int = 0
) -> list[tuple[int, tuple[int, ...], str]]:
    """Independence and maximality violations of the MIS-state set among ``alive`` nodes."""
    out: list[tuple[int, tuple[int, ...], str]] = []
    in_mis = (state == MIS) & alive
    e = scenario.edges
    both = in_mis[e[:, 0]] & in_mis[e[:, 1]]
    for u, v in e[both].tolist():
        out.append((t, (u, v), "adjacent MIS nodes"))
    covered = np.zeros(scenario.n, dtype=bool)
    covered[e[in_mis[e[:, 1]], 0]] = True
    covered[e[in_mis[e[:, 0]], 1]] = True
    for v in np.flatnonzero(alive & ~in_mis & ~covered).tolist():
        out.append((t, (v,), "uncovered node"))
    return out


def check_mis(trace: Trace, t: int) -> Verdict:
    if not 0 <= t < trace.rounds:
        raise IndexError(f"round {t} outside trace of {trace.rounds} rounds")
    alive = trace.scenario.participating(t)
    viol = mis_violations(trace.scenario, trace.state[t], alive, t)
    return Verdict(
        independent=not any(r == "adjacent MIS nodes" for _, _, r in viol),
        maximal=not any(r == "uncovered node" for _, _, r in viol),
        stable_from=stability_rounds(trace),
        violations=viol,
    )


# -- stability -------------------------------------------------------------------


def stable_mask(scenario: Scenario, state: np.ndarray, alive: np.ndarray) -> np.ndarray:
    """Nodes satisfying the recursive stability predicate in one round.

    An MIS node is stable if all its neighbors are inactive or if it has a
    stable MIS neighbor; any node with a stable MIS neighbor is stable. The
    closure is computed as a fixpoint, so MIS chains without an anchor stay
    unstable.
    """
    adj = scenario.adjacency & alive[None, :] & alive[:, None]
    mis = (state == MIS) & alive
    inactive = (state == INACTIVE) & alive
    blocking = adj & ~inactive[None, :]
    anchor = mis & ~blocking.any(axis=1)
    stable_mis = anchor.copy()
    while True:
        grown = stable_mis | (mis & (adj & stable_mis[None, :]).any(axis=1))
        if np.array_equal(grown, stable_mis):
            break
        stable_mis = grown
    covered = (adj & stable_mis[None, :]).any(axis=1)
    return (stable_mis | covered) & alive


def stable_matrix(trace: Trace) -> np.ndarray:
    """``rounds x nodes``: stable, or not participating (vacuously stable)."""
    alive = trace.participating()
    out = np.ones_like(alive)
    for t in range(trace.rounds):
        out[t] = stable_mask(trace.scenario, trace.state[t], alive[t]) | ~alive[t]
    return out


def _suffix_start(col: np.ndarray) -> int:
    """First index from which ``col`` is all true, or NEVER."""
    if col.size == 0 or not col[-1]:
        return NEVER
    bad = np.flatnonzero(~col)
    return int(bad[-1]) + 1 if bad.size else 0


def stability_rounds(trace: Trace) -> np.ndarray:
    """Per node, the earliest round it is stable for the rest of the trace (NEVER if not).

    Rounds before a node's wake-up and after its crash count as stable.
    """
    m = stable_matrix(trace)
    out = np.array([_suffix_start(m[:, v]) for v in range(trace.scenario.n)], dtype=np.int64)
    wake = trace.scenario.wake_array
    return np.where(out == NEVER, NEVER, np.maximum(out, np.minimum(wake, trace.rounds)))


def stability_round(trace: Trace, node: int) -> int | None:
    r = int(stability_rounds(trace)[node])
    return None if r == NEVER else r


def stabilization_round(trace: Trace) -> int | None:
    """Earliest round from which every participating node is stable until the trace ends."""
    m = stable_matrix(trace)
    r = _suffix_start(m.all(axis=1))
    return None if r == NEVER else r


# -- beep potential ----------------------------------------------------------------


def beep_potential(trace: Trace, nodes: Iterable[int], t: int) -> float:
    idx = np.fromiter(nodes, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    awake = trace.scenario.participating(t)[idx]
    return float(trace.beep_prob[t, idx][awake].sum())


def neighborhood_potentials(trace: Trace, closed: bool = True, exclude_mis: bool = False) -> np.ndarray:
    """``rounds x nodes`` array of E over each node's (closed) neighborhood."""
    b = np.where(trace.participating(), trace.beep_prob, 0.0)
    if exclude_mis:
        b = np.where(trace.state == MIS, 0.0, b)
    a = trace.scenario.adjacency.astype(np.float64)
    if closed:
        a = a + np.eye(trace.scenario.n)
    return b @ a


@dataclass(frozen=True)
class SlowChangeViolation:
    round: int
    node: int
    lam: float
    low_round: int  # a round in the look-back window where E fell too low
    e_high: float
    e_low: float


def slow_change_audit(
    trace: Trace,
    lambdas: Sequence[float],
    window: int,
    exclude_mis: bool = False,
    tol: float = 1e-12,
) -> list[SlowChangeViolation]:
    """Rounds ``t`` with ``E(t) >= lam`` preceded within ``window`` rounds by ``E < lam/2 - 1/8``.

    Audited sets are closed neighborhoods. One violation is reported per
    (node, lam, t), naming the latest offending earlier round.
    """
    E = neighborhood_potentials(trace, closed=True, exclude_mis=exclude_mis)
    out: list[SlowChangeViolation] = []
    for lam in lambdas:
        low = E < lam / 2 - 0.125 - tol
        for v in range(trace.scenario.n):
            last_low = NEVER
            for t in range(trace.rounds):
                if low[t, v]:
                    last_low = t
                elif E[t, v] >= lam - tol and last_low != NEVER and t - last_low <= window:
                    out.append(SlowChangeViolation(t, v, lam, last_low, float(E[t, v]), float(E[last_low, v])))
    return out


def competing_potential_stat(trace: Trace, threshold: float = 0.5) -> float:
    """Fraction of competing (node, round) pairs whose open-neighborhood potential is >= threshold."""
    comp = (trace.state == COMPETING) & trace.participating()
    total = int(comp.sum())
    if total == 0:
        return 0.0
    E = neighborhood_potentials(trace, closed=False)
    return float((comp & (E >= threshold)).sum()) / total


# -- adjacent MIS nodes ------------------------------------------------------------


@dataclass(frozen=True)
class AdjacentMIS:
    u: int
    v: int
    start: int
    end: int | None  # first round at which they are no longer both MIS


def adjacent_mis_events(trace: Trace) -> list[AdjacentMIS]:
    mis = (trace.state == MIS) & trace.participating()
    out = []
    for u, v in trace.scenario.edges.tolist():
        both = mis[:, u] & mis[:, v]
        if not both.any():
            continue
        d = np.diff(np.concatenate(([False], both, [False])).astype(np.int8))
        starts = np.flatnonzero(d == 1)
        ends = np.flatnonzero(d == -1)
        for s, e in zip(starts, ends):
            out.append(AdjacentMIS(u, v, int(s), None if e >= trace.rounds else int(e)))
    return out


def adjacent_mis_structure(trace: Trace) -> list[tuple[int, tuple[int, int], str]]:
    """Rounds in which adjacent MIS nodes differ in ``k`` or in their MIS entry round."""
    mis = (trace.state == MIS) & trace.participating()
    since = trace.extras.get("mis_since")
    out = []
    for u, v in trace.scenario.edges.tolist():
        for t in np.flatnonzero(mis[:, u] & mis[:, v]):
            t = int(t)
            if trace.k[t, u] != trace.k[t, v]:
                out.append((t, (u, v), "unequal k"))
            if since is not None and since[t, u] != since[t, v]:
                out.append((t, (u, v), "unequal entry round"))
    return out


# -- k checks --------------------------------------------------------------------------


def k_form_violations(trace: Trace, k0: int = 6) -> list[tuple[int, int, int]]:
    """Recorded ``k`` values of participating nodes not of the form ``k0 * 2^j``."""
    alive = trace.participating()
    k = trace.k
    q, r = np.divmod(k, k0)
    bad = alive & ((k < k0) | (r != 0) | ((q & (q - 1)) != 0))
    return [(int(t), int(v), int(k[t, v])) for t, v in zip(*np.nonzero(bad))]


def k_monotone_violations(trace: Trace) -> list[tuple[int, int, int, int]]:
    alive = trace.participating()
    both = alive[1:] & alive[:-1]
    dec = both & (trace.k[1:] < trace.k[:-1])
    return [(int(t) + 1, int(v), int(trace.k[t, v]), int(trace.k[t + 1, v])) for t, v in zip(*np.nonzero(dec))]


def k_propagation_violations(trace: Trace, factor: int = 2) -> list[tuple[int, int, int, int]]:
    """Edges where a smaller ``k`` fails to catch up with a neighbor's within ``factor * k`` rounds.

    Checked from every round at which the gap opens or changes; the window
    must be crash-free and inside the trace. Entries are ``(round, u, v, k_u)``
    with ``k_u > k_v``.
    """
    alive = trace.participating()
    k = trace.k
    T = trace.rounds
    out = []
    for a, b in trace.scenario.edges.tolist():
        for u, v in ((a, b), (b, a)):
            gap = alive[:, u] & alive[:, v] & (k[:, u] > k[:, v]) & (k[:, v] > 0)
            prev_key = None
            for t in np.flatnonzero(gap):
                t = int(t)
                key = (int(k[t, u]), int(k[t, v]))
                if key == prev_key and gap[t - 1]:
                    continue
                prev_key = key
                ku = key[0]
                end = t + factor * ku
                if end >= T or not (alive[t : end + 1, u].all() and alive[t : end + 1, v].all()):
                    continue
                if not (k[t : end + 1, v] >= ku).any():
                    out.append((t, u, v, ku))
    return out


def k_cap_violations(trace: Trace) -> list[tuple[int, int, int, int]]:
    """Rounds where a node's ``k`` exceeds the largest boundary it can evaluate."""
    if "k_cap" not in trace.extras:
        return []
    cap = trace.extras["k_cap"]
    alive = trace.participating() & (cap >= 0)
    bad = alive & (trace.k > cap)
    return [(int(t), int(v), int(trace.k[t, v]), int(cap[t, v])) for t, v in zip(*np.nonzero(bad))]


def awake_states(trace: Trace) -> dict[str, int]:
    """Count of (node, round) pairs per state, for reports."""
    names = {ASLEEP: "asleep", INACTIVE: "inactive", COMPETING: "competing", MIS: "mis"}
    vals, counts = np.unique(trace.state, return_counts=True)
    return {names[int(v)]: int(c) for v, c in zip(vals, counts)}


# -- lower-bound construction mechanics ---------------------------------------------


def _groups(trace: Trace) -> dict[str, np.ndarray]:
    meta = trace.scenario.meta
    if meta.get("construction") != "case1":
        raise ValueError("trace does not come from a case-1 construction")
    return {name: np.asarray(nodes, dtype=np.int64) for name, nodes in meta["groups"].items()}


def case1_collisions(trace: Trace) -> list[tuple[int, int]]:
    """``(j, round)`` pairs where U_j sees no sub-clique with two or more beepers.

    Checked over each U clique's first ``k - 1`` awake rounds; the adjacent
    sub-cliques of U_j are C_i(j) for all i. An empty list means every U node
    had a multi-beeper neighbor sub-clique in each of those rounds.
    """
    g = _groups(trace)
    k = int(trace.scenario.meta["k"])
    beeps = trace.action == 1
    out = []
    for j in range(1, k + 1):
        u = g[f"U{j}"]
        w = int(trace.scenario.wake_array[u[0]])
        for r in range(w, w + k - 1):
            if r >= trace.rounds:
                out.append((j, r))
                continue
            if not any(beeps[r, g[f"C{i}({j})"]].sum() >= 2 for i in range(1, k)):
                out.append((j, r))
    return out


def case1_subclique_liveness(trace: Trace) -> list[tuple[int, int]]:
    """``(i, j)`` sub-cliques with fewer than two beepers in C_i's scheduled beep round."""
    g = _groups(trace)
    meta = trace.scenario.meta
    k, l = int(meta["k"]), int(meta["l"])
    beeps = trace.action == 1
    out = []
    for i in range(1, k):
        for j in range(1, k + 1):
            nodes = g[f"C{i}({j})"]
            r = int(trace.scenario.wake_array[nodes[0]]) + l - 1
            if r >= trace.rounds or beeps[r, nodes].sum() < 2:
                out.append((i, j))
    return out
