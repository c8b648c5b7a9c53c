"""MIS under simple wake-up dynamics, where clocks are not shared.

Two protocols carry time over the wire and run the triple logic on top of it.

``W1`` sends blocks of the self-synchronizing time code (see ``codec``). A new
node decodes a full block counter from its neighbors' OR-ed stream, then runs
the triple logic on the data bits: data slot ``j`` of block ``b`` is simulated
round ``sum(width(i) for i < b) + j``. With a known degree bound the counter is
sent modulo ``2^w`` with three data bits per block.

``W2`` sends fixed 11-round blocks ``0 0 1 T 1 R 1 M 1 C 1``. ``T`` carries one
bit of the parity carry sequence at the block number ``n``; a node only sends
the bits it can compute from the low bits of ``n`` it knows and learns more
bits by aligning the ``T`` bits it has heard. ``R``, ``M`` and ``C`` are the
triple bits with ``k`` counted in blocks and boundaries at ``n = 0 (mod k)``.
``k`` never exceeds ``2^m`` when ``m`` low bits of ``n`` are known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..codec import (
    ALONE,
    ALONE_SILENCE,
    AlignmentFault,
    DecodedBlock,
    DecodeFault,
    StreamDecoder,
    align_window,
    time_width,
    window_length,
)
from ..kernel import INACTIVE, NodeProtocol
from .luby import COMPETE, MIS_BIT, RESTART, TripleLogic

FULL = 62  # bits of the block number known to a node that started the clock


def data_rounds_before(block: int) -> int:
    """Data bits sent in blocks ``0 .. block-1`` of the variable-width code."""
    if block <= 0:
        return 0
    total = 1  # block 0
    for m in range(1, block.bit_length() + 1):
        lo, hi = 1 << (m - 1), min(block, 1 << m)
        if hi > lo:
            total += m * (hi - lo)
    return total


def delta_time_bits(max_degree: int) -> int:
    """Width of the time field when the degree bound is known."""
    lg = math.ceil(math.log2(max(2, max_degree)))
    return max(2, math.ceil(math.log2(max(2, lg))))


# -- W1 -----------------------------------------------------------------------------


def w1_min_delta(last_event: int, max_degree: int | None = None) -> int:
    """Rounds a newcomer's old neighbor must have been awake: its own sync time
    (at most two blocks plus the closing header) for any block up to ``last_event``."""
    if max_degree is None:
        length = 3 + 4 * time_width(max(0, last_event))
    else:
        length = 3 + 2 * (delta_time_bits(max_degree) + 3)
    return ALONE_SILENCE + 2 * length + 2


@dataclass(frozen=True)
class W1Config:
    k0: int = 6
    semantics: str = "proof"
    max_degree: int | None = None  # set: fixed-width variant

    @property
    def time_bits(self) -> int | None:
        return None if self.max_degree is None else delta_time_bits(self.max_degree)

    @property
    def k_cap(self) -> int | None:
        w = self.time_bits
        return None if w is None else 3 << w


class W1(NodeProtocol):
    def __init__(self, config: W1Config = W1Config()) -> None:
        self.cfg = config
        w = config.time_bits
        self.decoder = StreamDecoder(w, None if w is None else 3)
        self.synced = False
        self.block = 0
        self.off = 0
        self.logic = TripleLogic(config.k0, config.semantics, config.k_cap)
        self.joined = False
        self._tau = -1
        self._kind: str | None = None

    # clock helpers
    def _time_bits(self, block: int) -> int:
        return self.cfg.time_bits or time_width(block)

    def _data_bits(self, block: int) -> int:
        return 3 if self.cfg.time_bits else time_width(block)

    def _block_len(self, block: int) -> int:
        return 3 + 2 * (self._time_bits(block) + self._data_bits(block))

    def _tau_base(self, block: int) -> int:
        return 3 * block if self.cfg.time_bits else data_rounds_before(block)

    @property
    def state(self) -> int:
        return self.logic.state

    @property
    def k(self) -> int:
        return self.logic.k

    def _slot(self) -> tuple[str, int]:
        """What the current offset carries: ('zero'|'one', bit) or ('data', tau)."""
        o = self.off
        if o < 2:
            return "zero", 0
        p = o - 2
        if p % 2 == 0:
            return "one", 1
        i = p // 2
        mt = self._time_bits(self.block)
        if i < mt:
            idx = self.block % (1 << mt) if self.cfg.time_bits else self.block
            return "one", (idx >> (mt - 1 - i)) & 1
        return "data", self._tau_base(self.block) + i - mt

    def _luby_view(self, tau: int) -> tuple[int, bool]:
        start = tau - tau % 3
        return tau % 3, start % self.logic.k == 0

    def prob(self, t: int) -> float:
        if not self.synced:
            return 0.0
        kind, val = self._slot()
        if kind != "data":
            return float(val)
        if not self.joined and val % 3:
            return 0.0
        return self.logic.prob(*self._luby_view(val))

    def act(self, t: int, u: float) -> bool:
        self._kind = None
        if not self.synced:
            return False
        kind, val = self._slot()
        self._kind = kind
        if kind != "data":
            return bool(val)
        if val <= self._tau:
            raise ValueError("simulated rounds must increase")
        self._tau = val
        if not self.joined:
            if val % 3:
                self._kind = None
                return False
            self.joined = True
        slot, boundary = self._luby_view(val)
        return self.logic.act(slot, boundary, u, t)

    def observe(self, t: int, heard: bool | None) -> None:
        if not self.synced:
            self._listen(bool(heard))
            return
        if self._kind == "data":
            self.logic.observe(heard, t)
        self.off += 1
        if self.off == self._block_len(self.block):
            self.block += 1
            self.off = 0

    def _listen(self, bit: bool) -> None:
        try:
            ev = self.decoder.feed(int(bit))
        except DecodeFault:
            # a framing error means neighbors are talking: never conclude "alone" now
            w = self.cfg.time_bits
            self.decoder = StreamDecoder(w, None if w is None else 3, detect_alone=False)
            return
        if ev == ALONE:
            self.synced, self.block, self.off = True, 0, 0
        elif isinstance(ev, DecodedBlock):
            # the decoder fires on the second header zero of the next block
            self.synced, self.block, self.off = True, ev.index + 1, 2

    def extras(self) -> dict[str, int]:
        cap = self.cfg.k_cap
        return {
            "mis_since": self.logic.mis_since,
            "synced": int(self.synced),
            "block": self.block if self.synced else -1,
            "k_cap": -1 if cap is None else cap,
        }


def w1_factory(k0: int = 6, semantics: str = "proof", max_degree: int | None = None):
    cfg = W1Config(k0, semantics, max_degree)
    return lambda node, scenario: W1(cfg)


# -- W2 -----------------------------------------------------------------------------

BLOCK = 11
T_OFF, R_OFF, M_OFF, C_OFF = 3, 5, 7, 9
TRIPLE_SLOT = {R_OFF: RESTART, M_OFF: MIS_BIT, C_OFF: COMPETE}
WAITING, FRAMING, ALIGNED = 0, 1, 2


@dataclass(frozen=True)
class W2Config:
    k0: int = 2
    semantics: str = "proof"

    def __post_init__(self) -> None:
        if self.k0 < 1 or self.k0 & (self.k0 - 1):
            raise ValueError("initial k (in blocks) must be a power of two")


def _known_parity(n_low: int, m: int) -> int | None:
    """B'(n) if it follows from ``n mod 2^m``, else None."""
    if m < 2 or n_low == 0:
        return None
    b = (n_low & -n_low).bit_length() - 1
    if b > m - 2:
        return None
    return 1 if ((n_low >> b) & 3) == 1 else 0


class W2(NodeProtocol):
    def __init__(self, config: W2Config = W2Config()) -> None:
        self.cfg = config
        self.mode = WAITING
        self.heard: list[int] = []  # wire bits heard while waiting
        self.off = 0
        self.m = 0  # low bits of the block number known
        self.n_low = 0  # block number mod 2^m
        self.history: list[int] = []  # T bits of consecutive blocks
        self.faults = 0
        self.logic = TripleLogic(config.k0, config.semantics, k_cap=1 << self.m)
        self.active = False  # taking part in R/M/C
        self._kind: str | tuple[str, int] | None = None

    @property
    def state(self) -> int:
        return self.logic.state if self.active else INACTIVE

    @property
    def k(self) -> int:
        return self.logic.k

    @property
    def k_cap(self) -> int:
        return 1 << self.m

    def _boundary(self) -> bool:
        return self.n_low % self.logic.k == 0

    def prob(self, t: int) -> float:
        if self.mode != ALIGNED:
            return 0.0
        o = self.off
        if o < 2:
            return 0.0
        if o % 2 == 0:
            return 1.0
        if o == T_OFF:
            return float(_known_parity(self.n_low, self.m) or 0)
        if not self.active:
            return 0.0
        return self.logic.prob(TRIPLE_SLOT[o], self._boundary())

    def act(self, t: int, u: float) -> bool:
        self._kind = None
        if self.mode != ALIGNED:
            return False
        o = self.off
        if o < 2:
            self._kind = "zero"
            return False
        if o % 2 == 0:
            return True
        if o == T_OFF:
            bit = _known_parity(self.n_low, self.m)
            self._kind = "T" if bit is None else ("Tknown", bit)
            return bit == 1
        if not self.active:
            return False
        self._kind = "triple"
        return self.logic.act(TRIPLE_SLOT[o], self._boundary(), u, t)

    def observe(self, t: int, heard: bool | None) -> None:
        if self.mode == WAITING:
            self._wait(bool(heard))
            return
        if self.mode == FRAMING:
            self.heard = self.heard[-1:] + [int(bool(heard))]
            if self.heard == [0, 0]:
                self._align(1)
            return
        kind = self._kind
        if kind == "zero" and heard:
            self._reframe()
            return
        if kind == "T":
            self._record(int(bool(heard)))
        elif isinstance(kind, tuple):
            self._record(kind[1])
        elif kind == "triple":
            self.logic.observe(heard, t)
        self._advance()

    # -- clock ------------------------------------------------------------------

    def _wait(self, bit: bool) -> None:
        self.heard.append(int(bit))
        if len(self.heard) < ALONE_SILENCE:
            return
        if not any(self.heard):
            # alone: this node starts the clock; the next round opens block 1
            self.m, self.n_low = FULL, 0
            self.logic.k_cap = 1 << FULL
            self.mode = ALIGNED
            self.off = BLOCK - 1
            self._advance()
            return
        h = self.heard
        ends = [i for i in range(1, len(h)) if h[i - 1] == 0 and h[i] == 0]
        if ends:
            self._align(1 + (len(h) - 1 - ends[-1]))
        else:
            self.mode = FRAMING
            self.heard = h[-1:]

    def _align(self, off_now: int) -> None:
        """Frame found; ``off_now`` is the offset of the round just observed."""
        self.mode = ALIGNED
        self.heard = []
        self.off = off_now
        self._advance()

    def _reframe(self) -> None:
        self.mode = FRAMING
        self.heard = [1]
        self.history = []
        if self.m != FULL:
            self.m, self.n_low = 0, 0
        self.logic = TripleLogic(self.cfg.k0, self.cfg.semantics, k_cap=1 << self.m)
        self.active = False

    def _advance(self) -> None:
        self.off = (self.off + 1) % BLOCK
        if self.off:
            return
        self.n_low = (self.n_low + 1) % (1 << self.m)
        if not self.active and self.m >= 1 and self.logic.k <= self.k_cap:
            self.active = True

    # -- time learning -------------------------------------------------------------

    def _record(self, bit: int) -> None:
        self.history.append(bit)
        if self.m == FULL:
            self.history = self.history[-1:]
            return
        lvl = max(0, self.m - 1)
        need = window_length(lvl)
        if len(self.history) < need:
            return
        window = self.history[-need:]
        self.history = window
        try:
            a = align_window(window, lvl)
        except AlignmentFault:
            self.faults += 1
            return
        m_new = lvl + 2
        n_cur = (a.phase_ext + need - 1) % (1 << m_new)
        if self.m and n_cur % (1 << self.m) != self.n_low:
            self.faults += 1
            return
        self.m, self.n_low = m_new, n_cur
        self.logic.k_cap = 1 << m_new

    def extras(self) -> dict[str, int]:
        return {
            "mis_since": self.logic.mis_since,
            "known_bits": self.m,
            "k_cap": self.k_cap if self.active else -1,
            "aligned": int(self.mode == ALIGNED),
        }


def w2_factory(k0: int = 2, semantics: str = "proof"):
    cfg = W2Config(k0, semantics)
    return lambda node, scenario: W2(cfg)
