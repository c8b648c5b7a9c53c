"""Graph families, wake-up schedules and the lower-bound constructions.

The lower-bound executions are built from cliques joined by complete
bipartite links; ``scale`` stands in for the ``log n`` factor in the clique
sizes. Node behavior in those executions is the uniform dichotomy: a node
either stays silent forever, or listens for ``l - 1`` rounds and beeps with
probability ``p`` in round ``l`` after waking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .kernel import INACTIVE, NodeProtocol, Scenario, ScenarioError

FAMILIES = ("complete", "path", "ring", "grid", "gnp", "grown")
WAKE_POLICIES = ("synchronous", "staggered", "random", "simple-wakeup")


# -- uniform behaviors -------------------------------------------------------


@dataclass(frozen=True)
class UniformBehavior:
    mode: str = "beep-after-l"
    l: int = 1
    p: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in ("silent-forever", "beep-after-l"):
            raise ValueError(f"unknown behavior mode {self.mode!r}")
        if self.l < 1:
            raise ValueError("l must be a positive integer")
        if not 0 < self.p <= 1:
            raise ValueError("p must lie in (0, 1]")


class UniformNode(NodeProtocol):
    """Beeps at most once, in its ``l``-th awake round, if it heard only silence."""

    state = INACTIVE

    def __init__(self, behavior: UniformBehavior) -> None:
        self.b = behavior
        self.age = 0  # awake rounds completed
        self.heard_any = False

    def prob(self, t: int) -> float:
        b = self.b
        if b.mode == "beep-after-l" and self.age == b.l - 1 and not self.heard_any:
            return b.p
        return 0.0

    def act(self, t: int, u: float) -> bool:
        return u < self.prob(t)

    def observe(self, t: int, heard: bool | None) -> None:
        if heard:
            self.heard_any = True
        self.age += 1


def uniform_factory(behavior: UniformBehavior):
    return lambda node, scenario: UniformNode(behavior)


# -- helpers -------------------------------------------------------------------


def _clique(nodes: Sequence[int]) -> list[tuple[int, int]]:
    return list(combinations(nodes, 2))


def _biclique(a: Sequence[int], b: Sequence[int]) -> list[tuple[int, int]]:
    return [(u, v) for u in a for v in b]


# -- lower-bound constructions ----------------------------------------------


def gen_case1(k: int, l: int, p: float, scale: int) -> Scenario:
    """Cliques C_1..C_{k-1} (each split into k sub-cliques) and U_1..U_k.

    Sub-clique C_i(j) is completely joined to U_j. C_i wakes in round i and all
    U_j wake in round l.
    """
    if not (k > l >= 1):
        raise ScenarioError(f"case 1 needs k > l >= 1, got k={k}, l={l}")
    if scale < 1 or not 0 < p <= 1:
        raise ScenarioError("scale must be >= 1 and p in (0, 1]")
    sub = scale * math.ceil(1 / p)
    nxt = 0
    wake: list[int] = []
    edges: list[tuple[int, int]] = []
    C: dict[int, list[list[int]]] = {}
    for i in range(1, k):
        C[i] = []
        for j in range(1, k + 1):
            C[i].append(list(range(nxt, nxt + sub)))
            nxt += sub
            wake += [i] * sub
        edges += _clique([v for part in C[i] for v in part])
    U: dict[int, list[int]] = {}
    for j in range(1, k + 1):
        U[j] = list(range(nxt, nxt + scale))
        nxt += scale
        wake += [l] * scale
        edges += _clique(U[j])
        for i in range(1, k):
            edges += _biclique(C[i][j - 1], U[j])
    groups = {f"C{i}({j})": C[i][j - 1] for i in C for j in range(1, k + 1)}
    groups.update({f"U{j}": U[j] for j in U})
    return Scenario(
        nxt, tuple(edges), tuple(wake), name=f"case1-k{k}-l{l}",
        meta={"construction": "case1", "k": k, "l": l, "p": p, "scale": scale, "groups": groups},
    )


def case2_s_range(j: int, m: int) -> range:
    """S-cliques joined to U_j, clamped to the m-1 cliques that exist."""
    if j >= m:
        return range(0)
    return range(max(1, m - j), m)  # m-j .. m, clamped to [1, m-1]


def gen_case2(k: int, m: int, l: int, p: float, p2: float, scale: int) -> Scenario:
    """Cliques U_1..U_k (size scale*ceil(1/p2)) and S_1..S_{m-1} (size scale*ceil(1/p)).

    S_i wakes in round i, U_j in round l + j. U_j is joined to U_i for
    ``max(1, j-q) <= i <= j-1`` with ``q = k // 4`` and, when ``j < m``, to S_h
    for ``h`` in ``m-j .. m`` clamped to ``1 .. m-1``.
    """
    if k <= 4 or m < 2 or l < 1 or scale < 1:
        raise ScenarioError(f"case 2 needs k > 4, m >= 2, l >= 1, scale >= 1 (k={k}, m={m}, l={l})")
    if not (0 < p <= 1 and 0 < p2 <= 1):
        raise ScenarioError("probabilities must lie in (0, 1]")
    q = k // 4
    nxt = 0
    wake: list[int] = []
    edges: list[tuple[int, int]] = []
    S: dict[int, list[int]] = {}
    s_size = scale * math.ceil(1 / p)
    u_size = scale * math.ceil(1 / p2)
    for i in range(1, m):
        S[i] = list(range(nxt, nxt + s_size))
        nxt += s_size
        wake += [i] * s_size
        edges += _clique(S[i])
    U: dict[int, list[int]] = {}
    for j in range(1, k + 1):
        U[j] = list(range(nxt, nxt + u_size))
        nxt += u_size
        wake += [l + j] * u_size
        edges += _clique(U[j])
        for i in range(max(1, j - q), j):
            edges += _biclique(U[i], U[j])
        for h in case2_s_range(j, m):
            edges += _biclique(S[h], U[j])
    groups = {f"S{i}": S[i] for i in S}
    groups.update({f"U{j}": U[j] for j in U})
    return Scenario(
        nxt, tuple(edges), tuple(wake), name=f"case2-k{k}-m{m}-l{l}",
        meta={"construction": "case2", "k": k, "m": m, "l": l, "q": q, "p": p, "p2": p2,
              "scale": scale, "groups": groups},
    )


# -- standard families -----------------------------------------------------------


def graph_edges(family: str, n: int, rng: np.random.Generator, **params) -> np.ndarray:
    """Edge list of the family as an ``m x 2`` array."""
    return np.asarray(_family_edges(family, n, rng, **params), dtype=np.int64).reshape(-1, 2)


def _family_edges(family: str, n: int, rng: np.random.Generator, **params):
    if family == "complete":
        return _clique(range(n))
    if family == "path":
        return [(i, i + 1) for i in range(n - 1)]
    if family == "ring":
        if n < 3:
            raise ScenarioError("a ring needs at least 3 nodes")
        return [(i, (i + 1) % n) for i in range(n)]
    if family == "grid":
        side = params.get("width") or math.isqrt(n)
        if side * (n // side) != n:
            raise ScenarioError(f"grid of {n} nodes needs a width dividing n (got {side})")
        rows = n // side
        e = []
        for r in range(rows):
            for c in range(side):
                v = r * side + c
                if c + 1 < side:
                    e.append((v, v + 1))
                if r + 1 < rows:
                    e.append((v, v + side))
        return e
    if family == "gnp":
        p = float(params.get("p", 0.5))
        if not 0 <= p <= 1:
            raise ScenarioError("gnp edge probability must lie in [0, 1]")
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < p
        return np.stack([iu[keep], ju[keep]], axis=1)
    raise ScenarioError(f"unknown graph family {family!r}")


def _bfs_layers(n: int, edges: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Layer index of every node in a BFS from a random root of each component."""
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges.tolist():
        adj[u].append(v)
        adj[v].append(u)
    layer = np.full(n, -1, dtype=np.int64)
    for root in rng.permutation(n):
        if layer[root] >= 0:
            continue
        layer[root] = 0
        frontier = [int(root)]
        while frontier:
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if layer[v] < 0:
                        layer[v] = layer[u] + 1
                        nxt.append(v)
            frontier = nxt
    return layer


def wake_schedule(
    policy: str, n: int, edges: np.ndarray, rng: np.random.Generator, **params
) -> list[int]:
    if policy == "synchronous":
        return [0] * n
    if policy == "staggered":
        step = int(params.get("step", 1))
        if step < 0:
            raise ScenarioError("stagger step must be non-negative")
        return [i * step for i in range(n)]
    if policy == "random":
        window = int(params.get("window", 1))
        if window < 1:
            raise ScenarioError("random wake window must be >= 1")
        return rng.integers(0, window, size=n).tolist()
    if policy == "simple-wakeup":
        delta = int(params["delta"])
        if delta < 1:
            raise ScenarioError("delta must be >= 1")
        return (_bfs_layers(n, edges, rng) * delta).tolist()
    raise ScenarioError(f"unknown wake policy {policy!r}")


def gen_standard(
    family: str,
    n: int,
    wake_policy: str = "synchronous",
    seed: int = 0,
    **params,
) -> Scenario:
    """A graph from ``family`` with a wake schedule from ``wake_policy``.

    Extra keyword arguments go to the family (``p``, ``width``) and the policy
    (``step``, ``window``, ``delta``).
    """
    if n < 0:
        raise ScenarioError("n must be non-negative")
    rng = np.random.default_rng(seed)
    if family == "grown":
        return gen_grown(n, seed=seed, **params)
    edges = graph_edges(family, n, rng, **params)
    wake = wake_schedule(wake_policy, n, edges, rng, **params)
    meta = {"family": family, "wake_policy": wake_policy, "seed": seed}
    meta.update({k: v for k, v in params.items()})
    return Scenario(n, edges, tuple(wake), name=f"{family}-{n}-{wake_policy}", meta=meta)


def gen_grown(
    n: int,
    seed: int = 0,
    initial: int | None = None,
    batch: int | None = None,
    attach: int = 2,
    p_initial: float = 0.3,
    delta: int | None = None,
    delta_unit: int = 11,
) -> Scenario:
    """An incrementally grown graph under simple wake-up dynamics.

    ``initial`` nodes form a G(n0, p_initial) graph awake at round 0. The rest
    arrive in batches; a newcomer links to one node of an earlier batch (old by
    the time it wakes) and to ``attach - 1`` further random awake nodes,
    possibly in its own batch. Batch ``b`` wakes at ``b * delta * delta_unit``;
    when ``delta`` is omitted it is set to ``2 * ceil(log2 d_max)`` of the final
    graph, in units of ``delta_unit`` rounds.
    """
    rng = np.random.default_rng(seed)
    n0 = initial if initial is not None else max(1, n // 8)
    n0 = min(n0, n)
    bsize = batch if batch is not None else max(1, n // 16)
    batch_of = np.zeros(n, dtype=np.int64)
    edges = set(map(tuple, graph_edges("gnp", n0, rng, p=p_initial).tolist()))
    for v in range(n0, n):
        batch_of[v] = 1 + (v - n0) // bsize
    for v in range(n0, n):
        older = np.flatnonzero(batch_of[:v] < batch_of[v])
        old = int(rng.choice(older))
        edges.add((old, v))
        others = [u for u in range(v) if u != old]
        extra = min(attach - 1, len(others))
        if extra > 0:
            for u in rng.choice(others, size=extra, replace=False):
                edges.add((int(u), v))
    edge_list = sorted(edges)
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edge_list:
        deg[u] += 1
        deg[v] += 1
    d_max = int(deg.max()) if n else 0
    if delta is None:
        delta = 2 * max(1, math.ceil(math.log2(max(2, d_max))))
    wake = (batch_of * delta * delta_unit).tolist()
    return Scenario(
        n, tuple(edge_list), tuple(wake), name=f"grown-{n}",
        meta={"family": "grown", "wake_policy": "simple-wakeup", "delta": delta,
              "delta_unit": delta_unit, "delta_rounds": delta * delta_unit, "seed": seed},
    )


# -- validation -----------------------------------------------------------------


def simple_wakeup_violations(scenario: Scenario, delta_rounds: int) -> list[tuple[int, str]]:
    """Nodes breaking the simple wake-up rules for ``delta_rounds``.

    Nodes awake at the earliest wake round form the initial graph. Every later
    node needs a neighbor that has been awake for at least ``delta_rounds``
    when it wakes; a crashing node may only have neighbors that are old at the
    crash round.
    """
    out = []
    if scenario.n == 0:
        return out
    wake = scenario.wake_array
    crash = scenario.crash_array
    t0 = int(wake.min())
    for v in range(scenario.n):
        nb = scenario.neighbors[v]
        if wake[v] > t0:
            ok = [(wake[u] <= wake[v] - delta_rounds) and crash[u] > wake[v] for u in nb]
            if not any(ok):
                out.append((v, "no old neighbor at wake"))
        c = scenario.crash[v]
        if c is not None:
            alive = [u for u in nb if wake[u] <= c < crash[u]]
            if any(c - wake[u] < delta_rounds for u in alive):
                out.append((v, "crash next to a young node"))
    return out
