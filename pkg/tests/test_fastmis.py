import itertools

import numpy as np
import pytest

from beepmis.kernel import COMPETING, INACTIVE, MIS, Scenario, run
from beepmis.protocols import FastMIS, fastmis_factory
from beepmis.protocols.fastmis import FastMISConfig, round_up_pow2


def advance(node: FastMIS, rounds: int) -> None:
    for t in range(rounds):
        node.act(t, 0.99)
        node.observe(t, False)


def test_schedule_lengths():
    cfg = FastMISConfig(16, 18)
    assert cfg.inactive_len == 288
    assert cfg.phase_len == 72
    assert cfg.mis_entry == 576


def test_fresh_node_listens_288_rounds_unconditionally():
    node = FastMIS(FastMISConfig(16, 18))
    for t in range(288):
        assert node.state == INACTIVE and node.beep_prob == 0
        assert node.act(t, 0.0) is False  # even the smallest draw cannot beep
        node.observe(t, False)
    assert node.state == COMPETING


@pytest.mark.parametrize("phase,prob", [(1, 2 / 128), (2, 1 / 32), (3, 8 / 128), (4, 1 / 8)])
def test_phase_probabilities(phase, prob):
    node = FastMIS(FastMISConfig(16, 18))
    advance(node, 288 + (phase - 1) * 72)
    assert node.phase == phase
    assert node.beep_prob == pytest.approx(prob)
    advance(node, 71)
    assert node.phase == phase


def test_inactive_probability_zero_and_mis_loop_half():
    node = FastMIS(FastMISConfig(16, 18))
    assert node.beep_prob == 0
    advance(node, 576)
    assert node.state == MIS
    assert node.beep_prob == 0.5


@pytest.mark.parametrize("when", [10, 300, 500, 700])
def test_heard_beep_restarts_from_any_stage(when):
    node = FastMIS(FastMISConfig(16, 18))
    advance(node, when)
    node.act(when, 0.99)
    node.observe(when, True)
    assert node.pos == 0 and node.state == INACTIVE


def test_mis_loop_pairs_beep_and_listen():
    node = FastMIS(FastMISConfig(16, 18))
    advance(node, 576)
    for u in (0.1, 0.9, 0.3, 0.7):
        first = node.act(0, u)
        node.observe(0, None if first else False)
        second = node.act(1, 0.5)
        node.observe(1, None if second else False)
        assert first != second
        assert first == (u < 0.5)


def test_lone_node_stays_in_mis_loop():
    tr = run(Scenario(1, [], (0,)), fastmis_factory(16), 3, 3000)
    assert (tr.state[576:, 0] == MIS).all()


def mis_pair():
    a, b = FastMIS(FastMISConfig(16, 18)), FastMIS(FastMISConfig(16, 18))
    advance(a, 576)
    advance(b, 576)
    return a, b


def play_block(a, b, ua, ub):
    for t in range(2):
        ba, bb = a.act(t, ua if t == 0 else 0.5), b.act(t, ub if t == 0 else 0.5)
        a.observe(t, None if ba else bb)
        b.observe(t, None if bb else ba)


def test_opposite_coins_restart_the_first_listener():
    # a restart is immediate, so the node that listens first drops out before its beep slot
    a, b = mis_pair()
    play_block(a, b, 0.1, 0.9)
    assert a.state == MIS and b.state == INACTIVE


def test_equal_coins_keep_both():
    a, b = mis_pair()
    play_block(a, b, 0.1, 0.2)
    assert a.state == MIS and b.state == MIS


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_adjacent_pair_survival_probability(k):
    # enumerate every coin outcome over k blocks
    survive = 0
    for coins in itertools.product([0.25, 0.75], repeat=2 * k):
        a, b = mis_pair()
        for i in range(k):
            play_block(a, b, coins[2 * i], coins[2 * i + 1])
        survive += a.state == MIS and b.state == MIS
    assert survive / 4**k == pytest.approx(2.0**-k)


@pytest.mark.parametrize("N,c", [(12, 18), (1, 18), (16, 0)])
def test_config_rejects(N, c):
    with pytest.raises(ValueError):
        FastMISConfig(N, c)


@pytest.mark.parametrize("n,N", [(1, 2), (2, 2), (3, 4), (16, 16), (17, 32)])
def test_round_up_pow2(n, N):
    assert round_up_pow2(n) == N


def test_declared_probability_matches_empirical_rate():
    # phase 1 of N=2 with c=400: p = 2/16; count beeps of an isolated node
    node = FastMIS(FastMISConfig(2, 400))
    rng = np.random.default_rng(0)
    advance(node, 400)
    beeps = 0
    for t in range(400):
        beeps += node.act(t, rng.random())
        node.observe(t, None)
    assert abs(beeps / 400 - 1 / 8) < 0.05
