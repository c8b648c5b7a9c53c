"""Synchronous beeping-model kernel.

A round has two phases: every participating node acts (beep or listen), then
every listener learns whether at least one neighbor in the participating
subgraph beeped. Beepers, sleepers and crashed nodes receive no observation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from ._rng import NodeStream

# state codes stored in traces
ASLEEP = -1
INACTIVE = 0
COMPETING = 1
MIS = 2

# action codes
ABSENT = -1
LISTEN = 0
BEEP = 1


class Observation(IntEnum):
    NONE = -1
    SILENCE = 0
    HEARD = 1


STATE_NAMES = {ASLEEP: "asleep", INACTIVE: "inactive", COMPETING: "competing", MIS: "mis"}
ACTION_NAMES = {ABSENT: "asleep", LISTEN: "listen", BEEP: "beep"}
OBS_NAMES = {-1: "none", 0: "silence", 1: "heard-beep"}


class ScenarioError(ValueError):
    pass


class ScheduleError(RuntimeError):
    """A node was asked to act while not participating."""


@dataclass(frozen=True, eq=False)
class Scenario:
    """Static graph plus the adversary's wake/crash script.

    ``edges`` may be any sequence of pairs; it is stored as a sorted, read-only
    ``m x 2`` int64 array with ``u < v`` in each row. ``crash[v]`` is ``None``
    for nodes that never crash. A node participates in rounds
    ``wake[v] <= t < crash[v]``.
    """

    n: int
    edges: np.ndarray
    wake: tuple[int, ...]
    crash: tuple[int | None, ...] = ()
    name: str = ""
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ScenarioError("node count must be non-negative")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        loops = np.flatnonzero(e[:, 0] == e[:, 1])
        if loops.size:
            raise ScenarioError(f"self-loop at node {e[loops[0], 0]}")
        bad = np.flatnonzero(((e < 0) | (e >= self.n)).any(axis=1))
        if bad.size:
            raise ScenarioError(f"edge ({e[bad[0], 0]}, {e[bad[0], 1]}) out of range")
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        keys = np.unique(lo * max(1, self.n) + hi)
        pairs = np.stack([keys // max(1, self.n), keys % max(1, self.n)], axis=1)
        pairs.setflags(write=False)
        object.__setattr__(self, "edges", pairs)
        if len(self.wake) != self.n:
            raise ScenarioError("every node needs a wake round")
        object.__setattr__(self, "wake", tuple(int(w) for w in self.wake))
        if any(w < 0 for w in self.wake):
            raise ScenarioError("wake rounds must be non-negative")
        crash = tuple(self.crash) if self.crash else (None,) * self.n
        if len(crash) != self.n:
            raise ScenarioError("crash schedule has the wrong length")
        crash = tuple(None if c is None else int(c) for c in crash)
        for v, c in enumerate(crash):
            if c is not None and c <= self.wake[v]:
                raise ScenarioError(f"node {v} crashes at {c}, not after its wake round {self.wake[v]}")
        object.__setattr__(self, "crash", crash)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and self.wake == other.wake
            and self.crash == other.crash
            and self.name == other.name
        )

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def neighbors(self) -> tuple[np.ndarray, ...]:
        e = self.edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=self.n)
        return tuple(np.split(dst[order], np.cumsum(counts)[:-1])) if self.n else ()

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges
        a[e[:, 0], e[:, 1]] = True
        a[e[:, 1], e[:, 0]] = True
        return a

    @cached_property
    def wake_array(self) -> np.ndarray:
        return np.array(self.wake, dtype=np.int64)

    @cached_property
    def crash_array(self) -> np.ndarray:
        big = np.iinfo(np.int64).max
        return np.array([big if c is None else c for c in self.crash], dtype=np.int64)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors], dtype=np.int64)

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @property
    def last_event(self) -> int:
        """Last round at which the participating subgraph changes."""
        events = list(self.wake) + [c for c in self.crash if c is not None]
        return max(events) if events else 0

    def participating(self, t: int) -> np.ndarray:
        return (self.wake_array <= t) & (t < self.crash_array)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "nodes": self.n,
            "edges": self.edges.tolist(),
            "wake": {str(v): w for v, w in enumerate(self.wake)},
        }
        crash = {str(v): c for v, c in enumerate(self.crash) if c is not None}
        if crash:
            d["crash"] = crash
        if self.meta:
            d["meta"] = dict(self.meta)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        n = int(d["nodes"])
        wake_map = {int(k): int(v) for k, v in d["wake"].items()}
        missing = set(range(n)) - set(wake_map)
        if missing:
            raise ScenarioError(f"nodes without a wake round: {sorted(missing)[:5]}")
        crash_map = {int(k): int(v) for k, v in d.get("crash", {}).items()}
        return cls(
            n=n,
            edges=d["edges"],
            wake=tuple(wake_map[v] for v in range(n)),
            crash=tuple(crash_map.get(v) for v in range(n)),
            name=d.get("name", ""),
            meta=d.get("meta", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


class NodeProtocol:
    """Per-node state machine driven by the kernel.

    Each round the kernel reads ``state``, ``prob(t)`` and ``k`` (the values
    that hold while the node acts), calls ``act`` with the global round and
    the node's draw for that round, and then ``observe`` with ``True``/``False``
    for a listener or ``None`` for a beeper.
    """

    state: int = INACTIVE
    k: int = 0

    def prob(self, t: int) -> float:
        """Probability with which the node beeps in round ``t``."""
        raise NotImplementedError

    def act(self, t: int, u: float) -> bool:
        raise NotImplementedError

    def observe(self, t: int, heard: bool | None) -> None:
        raise NotImplementedError

    def extras(self) -> dict[str, int]:
        """Additional per-round integer fields to record."""
        return {}


ProtocolFactory = Callable[[int, Scenario], NodeProtocol]


def step(
    scenario: Scenario,
    protocols: Mapping[int, NodeProtocol],
    t: int,
    streams: Mapping[int, NodeStream],
) -> tuple[np.ndarray, np.ndarray]:
    """Run round ``t``; returns ``(actions, observations)`` as int8 arrays."""
    alive = scenario.participating(t)
    for v in protocols:
        if not alive[v]:
            raise ScheduleError(f"node {v} is not participating in round {t}")
    action = np.full(scenario.n, ABSENT, dtype=np.int8)
    for v, proto in protocols.items():
        action[v] = BEEP if proto.act(t, streams[v].draw(t)) else LISTEN
    beeping = action == BEEP
    obs = np.full(scenario.n, -1, dtype=np.int8)
    for v, proto in protocols.items():
        if action[v] == LISTEN:
            nb = scenario.neighbors[v]
            heard = bool(beeping[nb].any()) if len(nb) else False
            obs[v] = int(heard)
            proto.observe(t, heard)
        else:
            proto.observe(t, None)
    return action, obs


@dataclass
class Trace:
    """Per-round, per-node record of a run (arrays are ``rounds x nodes``)."""

    scenario: Scenario
    seed: int
    state: np.ndarray
    action: np.ndarray
    observation: np.ndarray
    beep_prob: np.ndarray
    k: np.ndarray
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.state.shape[0]

    def same_as(self, other: "Trace") -> bool:
        if self.seed != other.seed or self.scenario != other.scenario:
            return False
        fields = ("state", "action", "observation", "beep_prob", "k")
        if not all(np.array_equal(getattr(self, f), getattr(other, f)) for f in fields):
            return False
        if set(self.extras) != set(other.extras):
            return False
        return all(np.array_equal(self.extras[x], other.extras[x]) for x in self.extras)

    def participating(self) -> np.ndarray:
        t = np.arange(self.rounds)[:, None]
        s = self.scenario
        return (s.wake_array[None, :] <= t) & (t < s.crash_array[None, :])

    def rows(self) -> Iterable[dict]:
        for t in range(self.rounds):
            for v in range(self.scenario.n):
                yield {
                    "round": t,
                    "node": v,
                    "state": STATE_NAMES[int(self.state[t, v])],
                    "action": ACTION_NAMES[int(self.action[t, v])],
                    "observation": OBS_NAMES[int(self.observation[t, v])],
                    "beep_prob": float(self.beep_prob[t, v]),
                }

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["round", "node", "state", "action", "observation", "beep_prob"])
            w.writeheader()
            w.writerows(self.rows())

    @classmethod
    def import_csv(cls, path: str | Path, scenario: Scenario, seed: int = 0) -> "Trace":
        """Rebuild a trace from the tabular export; ``k`` and extras are not part of it and stay zero."""
        codes = {
            "state": {v: k for k, v in STATE_NAMES.items()},
            "action": {v: k for k, v in ACTION_NAMES.items()},
            "observation": {v: k for k, v in OBS_NAMES.items()},
        }
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rounds = 1 + max((int(r["round"]) for r in rows), default=-1)
        tr = empty_trace(scenario, seed, rounds)
        arrays = {"state": tr.state, "action": tr.action, "observation": tr.observation}
        for r in rows:
            t, v = int(r["round"]), int(r["node"])
            if not 0 <= v < scenario.n:
                raise ScenarioError(f"trace row for node {v} outside the scenario")
            for name, arr in arrays.items():
                arr[t, v] = codes[name][r[name]]
            tr.beep_prob[t, v] = float(r["beep_prob"])
        return tr

    def save(self, path: str | Path) -> None:
        """Lossless ``.npz`` archive including the scenario, ``k`` and extras."""
        np.savez_compressed(
            path,
            scenario=np.array(json.dumps(self.scenario.to_dict())),
            seed=np.array(self.seed),
            state=self.state, action=self.action, observation=self.observation,
            beep_prob=self.beep_prob, k=self.k,
            **{f"extra_{x}": a for x, a in self.extras.items()},
        )

    @classmethod
    def load(cls, path: str | Path) -> "Trace":
        with np.load(path) as z:
            return cls(
                scenario=Scenario.from_dict(json.loads(str(z["scenario"]))),
                seed=int(z["seed"]),
                state=z["state"], action=z["action"], observation=z["observation"],
                beep_prob=z["beep_prob"], k=z["k"],
                extras={x[6:]: z[x] for x in z.files if x.startswith("extra_")},
            )


def empty_trace(scenario: Scenario, seed: int, rounds: int, extra_names: Iterable[str] = ()) -> Trace:
    shape = (rounds, scenario.n)
    return Trace(
        scenario=scenario,
        seed=seed,
        state=np.full(shape, ASLEEP, dtype=np.int8),
        action=np.full(shape, ABSENT, dtype=np.int8),
        observation=np.full(shape, -1, dtype=np.int8),
        beep_prob=np.zeros(shape, dtype=np.float64),
        k=np.zeros(shape, dtype=np.int64),
        extras={x: np.full(shape, -1, dtype=np.int64) for x in extra_names},
    )


def run(scenario: Scenario, factory: ProtocolFactory, seed: int, cap: int) -> Trace:
    """Simulate rounds ``0 .. cap-1``; nodes are instantiated at their wake round."""
    if cap < 1:
        raise ValueError("round cap must be at least 1")
    streams = {v: NodeStream(seed, v) for v in range(scenario.n)}
    protocols: dict[int, NodeProtocol] = {}
    trace = None
    extra_names: list[str] = []
    for t in range(cap):
        for v in range(scenario.n):
            if scenario.wake[v] == t:
                protocols[v] = factory(v, scenario)
            if scenario.crash[v] == t:
                protocols.pop(v, None)
        if trace is None and protocols:
            extra_names = list(next(iter(protocols.values())).extras())
            trace = empty_trace(scenario, seed, cap, extra_names)
        if trace is None:
            continue
        for v, p in protocols.items():
            trace.state[t, v] = p.state
            trace.beep_prob[t, v] = p.prob(t)
            trace.k[t, v] = p.k
            for name, val in p.extras().items():
                trace.extras[name][t, v] = val
        action, obs = step(scenario, protocols, t, streams)
        trace.action[t] = action
        trace.observation[t] = obs
    if trace is None:
        trace = empty_trace(scenario, seed, cap if scenario.n else 0)
    return trace
