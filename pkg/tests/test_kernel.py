import numpy as np
import pytest

from beepmis.kernel import (
    BEEP, LISTEN, MIS, NodeProtocol, Scenario, ScenarioError, ScheduleError, Trace, run, step,
)
from beepmis._rng import NodeStream
from beepmis.protocols import fastmis_factory, luby_factory


class Fixed(NodeProtocol):
    def __init__(self, beep: bool) -> None:
        self.beep = beep
        self.heard: list[bool | None] = []

    def prob(self, t: int) -> float:
        return float(self.beep)

    def act(self, t: int, u: float) -> bool:
        return self.beep

    def observe(self, t: int, heard: bool | None) -> None:
        self.heard.append(heard)


def streams(n):
    return {v: NodeStream(0, v) for v in range(n)}


def test_adjacent_beepers_get_no_feedback():
    sc = Scenario(2, [(0, 1)], (0, 0))
    p = {0: Fixed(True), 1: Fixed(True)}
    action, obs = step(sc, p, 0, streams(2))
    assert action.tolist() == [BEEP, BEEP]
    assert obs.tolist() == [-1, -1]
    assert p[0].heard == [None] and p[1].heard == [None]


def test_isolated_listener_hears_silence():
    sc = Scenario(1, [], (0,))
    p = {0: Fixed(False)}
    _, obs = step(sc, p, 0, streams(1))
    assert obs.tolist() == [0] and p[0].heard == [False]


def test_star_center_gets_one_observation():
    sc = Scenario(4, [(0, 1), (0, 2), (0, 3)], (0, 0, 0, 0))
    p = {0: Fixed(False), 1: Fixed(True), 2: Fixed(True), 3: Fixed(True)}
    action, obs = step(sc, p, 0, streams(4))
    assert action[0] == LISTEN and obs[0] == 1
    assert p[0].heard == [True]


def test_sleeping_neighbor_does_not_count():
    sc = Scenario(2, [(0, 1)], (0, 5))
    p = {0: Fixed(False)}
    _, obs = step(sc, p, 0, streams(2))
    assert obs.tolist() == [0, -1]


def test_acting_before_wake_rejected():
    sc = Scenario(2, [(0, 1)], (0, 5))
    with pytest.raises(ScheduleError):
        step(sc, {0: Fixed(False), 1: Fixed(True)}, 0, streams(2))


def test_acting_after_crash_rejected():
    sc = Scenario(1, [], (0,), crash=(3,))
    with pytest.raises(ScheduleError):
        step(sc, {0: Fixed(False)}, 3, streams(1))


def test_empty_scenario_empty_trace():
    tr = run(Scenario(0, [], ()), fastmis_factory(16), 0, 10)
    assert tr.state.size == 0 and tr.scenario.n == 0


def test_lone_fastmis_node_enters_mis_at_576():
    tr = run(Scenario(1, [], (0,)), fastmis_factory(16, 18), 0, 600)
    col = tr.state[:, 0]
    assert (col[:576] != MIS).all()
    assert (col[576:] == MIS).all()


def test_same_seed_same_trace():
    sc = Scenario(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], (0, 1, 2, 3, 4))
    a = run(sc, luby_factory(), 7, 200)
    b = run(sc, luby_factory(), 7, 200)
    c = run(sc, luby_factory(), 8, 200)
    assert a.same_as(b)
    assert not a.same_as(c)


def test_cap_must_be_positive():
    with pytest.raises(ValueError):
        run(Scenario(1, [], (0,)), fastmis_factory(16), 0, 0)


def test_scenario_normalizes_edges():
    sc = Scenario(3, [(1, 0), (0, 1), (2, 1)], (0, 0, 0))
    assert sc.edges.tolist() == [[0, 1], [1, 2]]
    assert [nb.tolist() for nb in sc.neighbors] == [[1], [0, 2], [1]]
    assert sc.d_max == 2


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 3)], [(-1, 0)]])
def test_scenario_rejects_bad_edges(edges):
    with pytest.raises(ScenarioError):
        Scenario(3, edges, (0, 0, 0))


def test_scenario_rejects_crash_before_wake():
    with pytest.raises(ScenarioError):
        Scenario(1, [], (5,), crash=(3,))


def test_scenario_file_round_trip(tmp_path):
    sc = Scenario(3, [(0, 1), (1, 2)], (0, 2, 4), crash=(None, None, 9), name="p3", meta={"x": 1})
    sc.save(tmp_path / "s.json")
    assert Scenario.load(tmp_path / "s.json") == sc


def test_trace_export_import(tmp_path):
    sc = Scenario(3, [(0, 1), (1, 2)], (0, 1, 2))
    tr = run(sc, luby_factory(), 3, 60)
    tr.export_csv(tmp_path / "t.csv")
    back = Trace.import_csv(tmp_path / "t.csv", sc, seed=3)
    for f in ("state", "action", "observation", "beep_prob"):
        assert np.array_equal(getattr(back, f), getattr(tr, f))
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "round,node,state,action,observation,beep_prob"


def test_trace_archive_is_lossless(tmp_path):
    sc = Scenario(3, [(0, 1), (1, 2)], (0, 1, 2))
    tr = run(sc, luby_factory(), 3, 60)
    tr.save(tmp_path / "t.npz")
    assert Trace.load(tmp_path / "t.npz").same_as(tr)
