import itertools

import numpy as np
import pytest

from beepmis import verify
from beepmis.kernel import BEEP, COMPETING, INACTIVE, MIS, Scenario, run
from beepmis.protocols import LubyBeep, luby_factory
from beepmis.protocols.luby import COMPETE, MIS_BIT, RESTART, K_LIMIT, LubyConfig, TripleLogic


def test_isolated_node_schedule():
    tr = run(Scenario(1, [], (0,)), luby_factory(), 0, 40)
    s = tr.state[:, 0]
    assert s[0] == INACTIVE and s[1] == INACTIVE
    assert (s[2:7] == COMPETING).all()
    assert (s[7:] == MIS).all()
    assert tr.extras["mis_since"][7, 0] == 6
    mis_bits = tr.action[7::3, 0]
    assert (mis_bits == BEEP).all()


def test_late_waker_joins_at_next_triple():
    tr = run(Scenario(1, [], (4,)), luby_factory(), 0, 30)
    assert tr.action[4, 0] == 0 and tr.action[5, 0] == 0  # listens until its first triple
    assert tr.state[:, 0][14] == MIS  # boundary 6 promotes, boundary 12 makes it MIS


def logic_in(state, k=6):
    lg = TripleLogic(k)
    lg.state = state
    return lg


def test_competing_node_hearing_mis_bit_becomes_inactive():
    lg = logic_in(COMPETING)
    assert lg.act(MIS_BIT, False, 0.0, 1) is False
    lg.observe(True, 1)
    assert lg.state == INACTIVE and lg.k == 6


def test_mis_node_hearing_competing_bit_doubles():
    lg = logic_in(MIS)
    assert lg.act(COMPETE, False, 0.9, 2) is False
    lg.observe(True, 2)
    assert lg.state == INACTIVE and lg.k == 12


def test_inactive_node_hearing_competing_bit_keeps_k():
    lg = logic_in(INACTIVE)
    lg.act(COMPETE, False, 0.1, 2)
    lg.observe(True, 2)
    assert lg.k == 6


def test_restart_bit_at_boundary_is_listened():
    lg = logic_in(COMPETING)
    assert lg.act(RESTART, True, 0.0, 0) is False
    lg.observe(True, 0)
    assert lg.state == INACTIVE and lg.k == 12


def test_restart_bit_off_boundary_is_beeped():
    lg = logic_in(INACTIVE)
    assert lg.act(RESTART, False, 0.9, 3) is True
    assert lg.prob(RESTART, False) == 1.0 and lg.prob(RESTART, True) == 0.0


def test_silent_restart_promotes_competing_to_mis():
    lg = logic_in(COMPETING)
    lg.act(RESTART, True, 0.0, 12)
    lg.observe(False, 12)
    assert lg.state == MIS and lg.mis_since == 12


def test_inactive_promotion_waits_for_silent_mis_bit():
    lg = logic_in(INACTIVE)
    lg.act(RESTART, True, 0.0, 0)
    lg.observe(False, 0)
    assert lg.state == INACTIVE
    lg.act(MIS_BIT, True, 0.0, 1)
    lg.observe(True, 1)
    assert lg.state == INACTIVE  # knocked out by an MIS neighbor


def test_competing_tie_probability_is_half():
    # two adjacent competing nodes survive the competing bit together iff their coins agree
    survive = 0
    for ua, ub in itertools.product([0.25, 0.75], repeat=2):
        a, b = logic_in(COMPETING), logic_in(COMPETING)
        ba, bb = a.act(COMPETE, False, ua, 2), b.act(COMPETE, False, ub, 2)
        a.observe(None if ba else bb, 2)
        b.observe(None if bb else ba, 2)
        survive += a.state == COMPETING and b.state == COMPETING
    assert survive / 4 == 0.5


@pytest.mark.parametrize("slot,state,p", [(MIS_BIT, MIS, 1.0), (MIS_BIT, COMPETING, 0.0),
                                          (COMPETE, COMPETING, 0.5), (COMPETE, MIS, 0.5), (COMPETE, INACTIVE, 0.0)])
def test_declared_probabilities(slot, state, p):
    assert logic_in(state).prob(slot, False) == p


def big_k_factory(big: dict[int, int]):
    def make(node, scenario):
        proto = LubyBeep(LubyConfig())
        proto.logic.k = big.get(node, 6)
        return proto
    return make


def test_larger_k_propagates_to_neighbor():
    sc = Scenario(2, [(0, 1)], (0, 0))
    tr = run(sc, big_k_factory({0: 24}), 1, 200)
    reached = np.flatnonzero(tr.k[:, 1] >= 24)
    assert reached.size and reached[0] <= 48
    assert verify.k_propagation_violations(tr) == []


def test_equal_k_no_propagation_violations():
    sc = Scenario(4, [(0, 1), (1, 2), (2, 3)], (0, 0, 0, 0))
    tr = run(sc, luby_factory(), 2, 300)
    assert verify.k_propagation_violations(tr) == []


def test_k_values_are_k0_powers_and_monotone():
    sc = Scenario(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)], (0, 0, 3, 5, 9, 9))
    for seed in range(5):
        tr = run(sc, luby_factory(), seed, 400)
        assert verify.k_form_violations(tr, 6) == []
        assert verify.k_monotone_violations(tr) == []
        stab = verify.stabilization_round(tr)
        assert stab is not None and verify.check_mis(tr, stab).ok


def test_literal_semantics_saturates():
    lg = TripleLogic(6, "literal")
    lg.k = K_LIMIT
    lg.double()
    assert lg.k == K_LIMIT


def test_literal_semantics_runs():
    sc = Scenario(3, [(0, 1), (1, 2)], (0, 0, 0))
    tr = run(sc, luby_factory(6, "literal"), 0, 200)
    assert tr.rounds == 200


@pytest.mark.parametrize("k0,sem", [(4, "proof"), (0, "proof"), (6, "other")])
def test_config_rejects(k0, sem):
    with pytest.raises(ValueError):
        LubyConfig(k0, sem)


def test_rounds_must_increase():
    p = LubyBeep()
    p.act(0, 0.5)
    with pytest.raises(ValueError):
        p.act(0, 0.5)
