"""Compiled simulators for FastMIS, Luby triples and the 11-round-block protocol.

``simulate`` runs one seeded trial. Without ``record`` it stops once every
node has been stable for ``tail`` rounds after the last wake/crash event and
returns online statistics only; with ``record`` it plays all ``cap`` rounds
and also returns a :class:`~beepmis.kernel.Trace` identical to the reference
kernel's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._rng import as_seed
from ..kernel import Scenario, Trace
from ..protocols.fastmis import FastMISConfig
from ..verify import mis_violations
from . import fastmis as _fm
from . import luby as _lb
from . import w2 as _w2
from ._graph import graph_arrays

PROTOCOLS = ("fastmis", "luby", "w2")


@dataclass
class RunResult:
    protocol: str
    seed: int
    rounds: int
    stabilization: int | None
    violations: list[tuple[int, tuple[int, ...], str]]
    stats: dict[str, int | float | list]
    final_k: np.ndarray | None = None
    trace: Trace | None = field(default=None, repr=False)
    stable_state: np.ndarray | None = field(default=None, repr=False)  # node states at stabilization

    @property
    def timed_out(self) -> bool:
        return self.stabilization is None

    @property
    def mis_ok(self) -> bool:
        return not self.violations


def default_tail(protocol: str, **params) -> int:
    """Rounds of continued stability required after the last event before stopping early."""
    if protocol == "fastmis":
        return 200
    if protocol == "luby":
        return 200
    return 64 * 11


def _verdict(scenario: Scenario, stable_from: int, snapshot: np.ndarray):
    if stable_from < 0:
        return None, []
    alive = scenario.participating(stable_from)
    return stable_from, mis_violations(scenario, snapshot, alive, stable_from)


def simulate(
    protocol: str,
    scenario: Scenario,
    seed: int,
    cap: int,
    *,
    record: bool = False,
    tail: int | None = None,
    **params,
) -> RunResult:
    """Run one trial. ``params``: ``N``, ``c`` (fastmis); ``k0``, ``semantics`` (luby, w2)."""
    if cap < 1:
        raise ValueError("round cap must be at least 1")
    g = graph_arrays(scenario)
    key = as_seed(seed)
    tail = default_tail(protocol) if tail is None else tail
    args = (g.bits, g.indptr, g.indices, g.wake, g.crash, g.last_event, key)
    if protocol == "fastmis":
        cfg = FastMISConfig(int(params["N"]), int(params.get("c", 18)))
        limit = int(params.get("resolve_limit", 200))
        stats, audit, first, snap, *rec = _fm.run_fastmis(*args, cfg.N, cfg.c, cap, tail, record, limit)
        st = {
            "slow_change": dict(zip(map(str, _fm.LAMBDAS), audit[0].tolist())),
            "slow_change_pre_mis": dict(zip(map(str, _fm.LAMBDAS), audit[1].tolist())),
            "slow_change_first": first[0].tolist(),
            "adjacent_mis_episodes": int(stats[_fm.S_EPISODES]),
            "adjacent_mis_unresolved": int(stats[_fm.S_UNRESOLVED]),
            "adjacent_mis_longest": int(stats[_fm.S_MAX_EPISODE]),
            "adjacent_mis_slow": int(stats[_fm.S_LONG_EPISODES]),
            "adjacent_mis_rounds": int(stats[_fm.S_ADJ_ROUNDS]),
            "first_adjacent_mis": int(stats[_fm.S_FIRST_ADJ]),
            "competing_pairs": int(stats[_fm.S_COMPETING]),
            "competing_high_potential": int(stats[_fm.S_COMPETING_HIGH]),
        }
        final_k = None
        names = ("level",)
    elif protocol in ("luby", "w2"):
        sem = params.get("semantics", "proof")
        if sem not in ("proof", "literal"):
            raise ValueError(f"unknown restart-bit semantics {sem!r}")
        if protocol == "luby":
            k0 = int(params.get("k0", 6))
            stats, snap, final_k, *rec = _lb.run_luby(*args, k0, sem == "literal", cap, tail, record)
            st = {
                "max_k": int(stats[_lb.S_MAX_K]),
                "k_form_violations": int(stats[_lb.S_K_FORM]),
                "k_decreases": int(stats[_lb.S_K_DECREASE]),
                "adjacent_mis_rounds": int(stats[_lb.S_ADJ_ROUNDS]),
                "adjacent_mis_unequal_k": int(stats[_lb.S_UNEQUAL_K]),
                "adjacent_mis_unequal_entry": int(stats[_lb.S_UNEQUAL_ENTRY]),
            }
            names = ("mis_since",)
        else:
            k0 = int(params.get("k0", 2))
            stats, snap, final_k, *rec = _w2.run_w2(*args, k0, sem == "literal", cap, tail, record)
            st = {
                "max_k": int(stats[_w2.S_MAX_K]),
                "k_cap_violations": int(stats[_w2.S_K_CAP]),
                "k_form_violations": int(stats[_w2.S_K_FORM]),
                "adjacent_mis_rounds": int(stats[_w2.S_ADJ_ROUNDS]),
                "adjacent_mis_unequal_k": int(stats[_w2.S_UNEQUAL_K]),
                "adjacent_mis_unequal_entry": int(stats[_w2.S_UNEQUAL_ENTRY]),
                "alignment_faults": int(stats[_w2.S_FAULTS]),
                "reframes": int(stats[_w2.S_REFRAMES]),
                "min_known_bits": int(stats[_w2.S_MIN_KNOWN]),
            }
            names = ("mis_since", "known_bits", "k_cap", "aligned")
    else:
        raise ValueError(f"no compiled engine for protocol {protocol!r}; choose from {PROTOCOLS}")

    stable_from, viol = _verdict(scenario, int(stats[1]), snap)
    trace = None
    if record:
        state, action, obs, prob = rec[:4]
        if protocol == "fastmis":
            k = np.zeros(state.shape, dtype=np.int64)
            extras = {"level": rec[4]}
        else:
            k = rec[4]
            extras = dict(zip(names, rec[5:]))
        trace = Trace(scenario, seed, state, action, obs, prob, k, extras)
    snap = None if stable_from is None else snap
    return RunResult(protocol, seed, int(stats[0]), stable_from, viol, st, final_k, trace, snap)
