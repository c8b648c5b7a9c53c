"""Luby-style MIS over beep triples with synchronized clocks.

Every triple starting at ``t = 0 (mod 3)`` carries a Restart bit, an MIS bit
and a Competing bit. ``k`` starts at 6 and only doubles. Promotions
(inactive -> competing -> MIS) happen at k-boundaries ``t = 0 (mod k)``.

Restart-bit semantics: with the default ``proof`` semantics a node listens on
the Restart bit at its own boundaries and beeps it otherwise, so a node with a
larger ``k`` beeps at a smaller-k neighbor's boundary and drags it upward. The
``literal`` semantics (beep exactly at boundaries) is kept for experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..kernel import COMPETING, INACTIVE, MIS, NodeProtocol

RESTART, MIS_BIT, COMPETE = 0, 1, 2
K_LIMIT = 1 << 62  # k saturates here (only reachable under literal semantics)


@dataclass(frozen=True)
class LubyConfig:
    k0: int = 6
    semantics: str = "proof"

    def __post_init__(self) -> None:
        if self.k0 < 3 or self.k0 % 3:
            raise ValueError("initial k must be a positive multiple of 3")
        if self.semantics not in ("proof", "literal"):
            raise ValueError(f"unknown restart-bit semantics {self.semantics!r}")


class TripleLogic:
    """The triple state machine, parameterized by its own notion of time.

    ``slot`` is the position of the current bit within its triple and
    ``boundary`` says whether the triple starts at a k-boundary; callers map
    their clock onto these. ``k_cap`` bounds doubling (``None``: unbounded).
    """

    def __init__(self, k0: int, semantics: str = "proof", k_cap: int | None = None) -> None:
        self.state = INACTIVE
        self.k = k0
        self.semantics = semantics
        self.k_cap = k_cap
        self.pending = False  # inactive -> competing, confirmed by a silent MIS bit
        self.mis_since = -1
        self._beep = False
        self._slot = -1
        self._boundary = False

    def double(self) -> None:
        cap = K_LIMIT if self.k_cap is None else min(self.k_cap, K_LIMIT)
        if 2 * self.k <= cap:
            self.k *= 2

    def prob(self, slot: int, boundary: bool) -> float:
        if slot == RESTART:
            beeps = boundary if self.semantics == "literal" else not boundary
            return 1.0 if beeps else 0.0
        if slot == MIS_BIT:
            return 1.0 if self.state == MIS else 0.0
        return 0.5 if self.state in (COMPETING, MIS) else 0.0

    def act(self, slot: int, boundary: bool, u: float, now: int) -> bool:
        self._slot, self._boundary = slot, boundary
        if slot == RESTART:
            beep = boundary if self.semantics == "literal" else not boundary
            if beep and boundary:
                self._promote(now)  # literal: own boundary is never listened to
        elif slot == MIS_BIT:
            beep = self.state == MIS
        else:
            beep = self.state in (COMPETING, MIS) and u < 0.5
        self._beep = beep
        return beep

    def _promote(self, now: int) -> None:
        if self.state == INACTIVE:
            self.pending = True
        elif self.state == COMPETING:
            self.state = MIS
            self.mis_since = now

    def observe(self, heard: bool | None, now: int) -> None:
        slot = self._slot
        if slot == RESTART:
            if heard is None:
                return
            if self.semantics == "literal":
                if heard:
                    self.double()  # a non-boundary restart beep does not change state
                return
            if heard:
                self.double()
                if self.state == COMPETING:
                    self.state = INACTIVE
            else:
                self._promote(now)
        elif slot == MIS_BIT:
            if heard:
                self.state = INACTIVE
                self.pending = False
            elif self.pending:
                self.state = COMPETING
                self.pending = False
        else:
            if heard:
                if self.state == MIS:
                    self.double()
                self.state = INACTIVE


class LubyBeep(NodeProtocol):
    """Triple logic on the global round counter (synchronized clocks)."""

    def __init__(self, config: LubyConfig = LubyConfig()) -> None:
        self.cfg = config
        self.logic = TripleLogic(config.k0, config.semantics)
        self.joined = False
        self._t = -1

    @property
    def state(self) -> int:
        return self.logic.state

    @property
    def k(self) -> int:
        return self.logic.k

    def prob(self, t: int) -> float:
        if not self.joined and t % 3:
            return 0.0
        return self.logic.prob(t % 3, (t - t % 3) % self.logic.k == 0)

    def act(self, t: int, u: float) -> bool:
        if t <= self._t:
            raise ValueError("rounds must increase")
        self._t = t
        if not self.joined:
            if t % 3:
                return False
            self.joined = True
        start = t - t % 3
        return self.logic.act(t % 3, start % self.logic.k == 0, u, t)

    def observe(self, t: int, heard: bool | None) -> None:
        if self.joined:
            self.logic.observe(heard, t)

    def extras(self) -> dict[str, int]:
        return {"mis_since": self.logic.mis_since}


def luby_factory(k0: int = 6, semantics: str = "proof"):
    cfg = LubyConfig(k0, semantics)
    return lambda node, scenario: LubyBeep(cfg)
