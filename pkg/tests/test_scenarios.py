import math

import numpy as np
import pytest

from beepmis.kernel import Scenario, ScenarioError, run
from beepmis.scenarios import (
    UniformBehavior, case2_s_range, gen_case1, gen_case2, gen_grown, gen_standard, graph_edges,
    simple_wakeup_violations, uniform_factory,
)


def groups(sc):
    return {k: set(v) for k, v in sc.meta["groups"].items()}


def adjacent(sc, a, b):
    A = sc.adjacency
    return all(A[u, v] for u in a for v in b)


def disjoint(sc, a, b):
    A = sc.adjacency
    return not any(A[u, v] for u in a for v in b)


# -- case 1 ---------------------------------------------------------------------------


def test_case1_reference_sizes():
    sc = gen_case1(8, 1, 0.5, 6)
    g = groups(sc)
    cs = [n for n in g if n.startswith("C")]
    us = [n for n in g if n.startswith("U")]
    assert len(cs) == 7 * 8 and len(us) == 8
    assert all(len(g[c]) == 12 for c in cs)
    assert all(len(g[u]) == 6 for u in us)
    assert sc.n == 7 * 96 + 8 * 6 == 720


def test_case1_wiring_and_wake():
    sc = gen_case1(4, 2, 0.5, 2)
    g = groups(sc)
    w = sc.wake_array
    for i in range(1, 4):
        clique = set().union(*(g[f"C{i}({j})"] for j in range(1, 5)))
        A = sc.adjacency[np.ix_(sorted(clique), sorted(clique))]
        assert A.sum() == len(clique) * (len(clique) - 1)
        assert (w[list(clique)] == i).all()
        for j in range(1, 5):
            for jj in range(1, 5):
                link = adjacent if jj == j else disjoint
                assert link(sc, g[f"C{i}({j})"], g[f"U{jj}"])
    for j in range(1, 5):
        assert (w[list(g[f"U{j}"])] == 2).all()
        for jj in range(j + 1, 5):
            assert disjoint(sc, g[f"U{j}"], g[f"U{jj}"])


def test_case1_minimal_instance():
    sc = gen_case1(2, 1, 1.0, 1)
    g = groups(sc)
    assert set(g) == {"C1(1)", "C1(2)", "U1", "U2"}
    assert sc.n == 4
    assert sc.edges.tolist() == [[0, 1], [0, 2], [1, 3]]


def test_case1_node_count_order():
    for k in (3, 5, 9):
        for scale in (1, 3):
            sc = gen_case1(k, 1, 0.5, scale)
            assert sc.n == (k - 1) * k * scale * 2 + k * scale


@pytest.mark.parametrize("k,l", [(2, 2), (3, 5), (3, 0)])
def test_case1_rejects(k, l):
    with pytest.raises(ScenarioError):
        gen_case1(k, l, 0.5, 1)


# -- case 2 ---------------------------------------------------------------------------


def test_case2_reference_wiring():
    sc = gen_case2(8, 3, 1, 0.5, 0.5, 6)
    g = groups(sc)
    assert sc.meta["q"] == 2
    assert all(len(g[f"U{j}"]) == 12 for j in range(1, 9))
    assert all(len(g[f"S{i}"]) == 12 for i in (1, 2))
    for j in range(1, 9):
        for i in range(1, 9):
            if i == j:
                continue
            linked = max(1, j - 2) <= i <= j - 1 or max(1, i - 2) <= j <= i - 1
            assert (adjacent if linked else disjoint)(sc, g[f"U{i}"], g[f"U{j}"])
        for h in (1, 2):
            want = h in case2_s_range(j, 3)
            assert (adjacent if want else disjoint)(sc, g[f"S{h}"], g[f"U{j}"])
    w = sc.wake_array
    assert all((w[list(g[f"S{i}"])] == i).all() for i in (1, 2))
    assert all((w[list(g[f"U{j}"])] == 1 + j).all() for j in range(1, 9))


def test_case2_first_u_has_no_predecessors():
    # U_1 links only to the later cliques that list it as a predecessor
    sc = gen_case2(8, 3, 1, 0.5, 0.5, 2)
    g = groups(sc)
    linked = [j for j in range(2, 9) if adjacent(sc, g["U1"], g[f"U{j}"])]
    assert linked == [2, 3]
    assert all(disjoint(sc, g["U1"], g[f"U{j}"]) for j in range(4, 9))


def test_case2_s_range_clamped():
    assert list(case2_s_range(1, 3)) == [2]
    assert list(case2_s_range(2, 3)) == [1, 2]
    assert list(case2_s_range(3, 3)) == []
    assert list(case2_s_range(1, 6)) == [5]


def test_case2_node_count_order():
    for k, m, scale in ((5, 2, 1), (8, 3, 4), (12, 6, 2)):
        sc = gen_case2(k, m, 1, 0.5, 0.25, scale)
        assert sc.n == (m - 1) * 2 * scale + k * 4 * scale


@pytest.mark.parametrize("k,m", [(4, 3), (8, 1)])
def test_case2_rejects(k, m):
    with pytest.raises(ScenarioError):
        gen_case2(k, m, 1, 0.5, 0.5, 1)


# -- standard families ----------------------------------------------------------------


def test_gnp_synchronous():
    sc = gen_standard("gnp", 64, "synchronous", seed=0, p=0.5)
    assert sc.n == 64 and (sc.wake_array == 0).all()
    assert 0.4 < len(sc.edges) / (64 * 63 / 2) < 0.6


def test_same_seed_same_graph():
    assert gen_standard("gnp", 40, seed=3, p=0.3) == gen_standard("gnp", 40, seed=3, p=0.3)
    assert gen_standard("gnp", 40, seed=3, p=0.3) != gen_standard("gnp", 40, seed=4, p=0.3)


@pytest.mark.parametrize("family,n,m", [("complete", 6, 15), ("path", 6, 5), ("ring", 6, 6), ("grid", 16, 24)])
def test_family_edge_counts(family, n, m):
    assert len(graph_edges(family, n, np.random.default_rng(0))) == m


def test_simple_wakeup_path():
    sc = gen_standard("path", 12, "simple-wakeup", seed=1, delta=8)
    assert simple_wakeup_violations(sc, 8) == []
    w = sc.wake_array
    for v in range(12):
        if w[v] > w.min():
            assert any(w[u] <= w[v] - 8 for u in sc.neighbors[v])


def test_staggered_clique_growth():
    sc = gen_standard("complete", 5, "staggered", step=1)
    assert sc.wake_array.tolist() == [0, 1, 2, 3, 4]


def test_random_wake_window():
    sc = gen_standard("ring", 30, "random", seed=2, window=7)
    assert sc.wake_array.min() >= 0 and sc.wake_array.max() < 7


@pytest.mark.parametrize("family,params", [("cube", {}), ("gnp", {"p": 1.5}), ("grid", {"width": 5})])
def test_invalid_family_params(family, params):
    with pytest.raises(ScenarioError):
        gen_standard(family, 12, seed=0, **params)


def test_invalid_wake_policy():
    with pytest.raises(ScenarioError):
        gen_standard("path", 5, "sometimes")


# -- grown graphs -------------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_grown_graph_is_simple_wakeup(seed):
    sc = gen_grown(128, seed=seed)
    delta = sc.meta["delta_rounds"]
    assert delta == 11 * 2 * math.ceil(math.log2(sc.d_max))
    assert simple_wakeup_violations(sc, delta) == []


def test_crash_next_to_young_node_flagged():
    sc = Scenario(3, [(0, 1), (1, 2)], (0, 0, 10), crash=(None, 12, None))
    assert (1, "crash next to a young node") in simple_wakeup_violations(sc, 5)


# -- uniform behaviors ----------------------------------------------------------------------


def test_beep_after_l_beeps_once_at_age_l():
    sc = Scenario(1, [], (3,))
    tr = run(sc, uniform_factory(UniformBehavior("beep-after-l", 2, 1.0)), 0, 10)
    assert np.flatnonzero(tr.action[:, 0] == 1).tolist() == [4]


def test_beep_after_l_suppressed_by_heard_beep():
    sc = Scenario(2, [(0, 1)], (0, 1))
    tr = run(sc, uniform_factory(UniformBehavior("beep-after-l", 2, 1.0)), 0, 6)
    assert np.flatnonzero(tr.action[:, 0] == 1).tolist() == [1]
    assert np.flatnonzero(tr.action[:, 1] == 1).tolist() == []


def test_silent_forever():
    sc = gen_case1(3, 1, 0.5, 1)
    tr = run(sc, uniform_factory(UniformBehavior("silent-forever")), 0, 8)
    assert not (tr.action == 1).any()


def test_uniform_behavior_rejects():
    with pytest.raises(ValueError):
        UniformBehavior("loud")
    with pytest.raises(ValueError):
        UniformBehavior("beep-after-l", 0)
