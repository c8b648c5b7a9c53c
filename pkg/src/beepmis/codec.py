"""Self-synchronizing bit encodings used to disseminate time over beeps.

Two pieces live here:

* variable-length time/data blocks. On the wire a block is ``0, 0`` followed by
  ``1, b`` for every payload bit ``b`` and a closing ``1``. Because every
  payload bit is preceded by a one, two consecutive zeros only ever occur at a
  block start.
* the binary carry sequence ``B`` (trailing zeros of ``n``) and its parity
  sequence ``B'``, plus the window aligner that recovers the positions of small
  ``B`` values from a slice of ``B'`` whose start is unknown.

Sequences are 1-indexed, block indices are 0-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ALONE = "alone"
ALONE_SILENCE = 4


class DecodeFault(ValueError):
    """The bit stream violates the block framing."""


class WindowTooShort(ValueError):
    """Not enough consecutive B' bits to align the requested number of levels."""


class AlignmentFault(ValueError):
    """The window is not a slice of B' (no unique alternating split)."""


def time_width(block_index: int) -> int:
    """Number of time bits (and data bits) carried by block ``block_index``."""
    if block_index < 0:
        raise ValueError("block index must be non-negative")
    return max(1, int(block_index).bit_length())


def encode_block(block_index: int, data_bits: Sequence[int], time_bits: int | None = None) -> list[int]:
    """Wire bits of one block; ``time_bits`` fixes the time field width (counter taken modulo 2**time_bits)."""
    if time_bits is None:
        m = time_width(block_index)
        if len(data_bits) != m:
            raise ValueError(f"block {block_index} carries {m} data bits, got {len(data_bits)}")
    else:
        if time_bits < 1:
            raise ValueError("fixed time width must be >= 1")
        m = time_bits
        block_index %= 1 << m
    time = [(block_index >> (m - 1 - i)) & 1 for i in range(m)]
    wire = [0, 0]
    for b in time + [int(x) for x in data_bits]:
        if b not in (0, 1):
            raise ValueError("payload bits must be 0 or 1")
        wire += [1, b]
    wire.append(1)
    return wire


def encode_stream(blocks: Iterable[tuple[int, Sequence[int]]]) -> list[int]:
    out: list[int] = []
    for index, data in blocks:
        out += encode_block(index, data)
    return out


@dataclass(frozen=True)
class DecodedBlock:
    index: int
    data: tuple[int, ...]


class StreamDecoder:
    """Incremental decoder for a block stream joined at an arbitrary offset.

    ``feed`` returns ``ALONE`` when the first four bits are silent, a
    :class:`DecodedBlock` whenever a complete block has been framed, and
    ``None`` otherwise. A block is reported once the header of the following
    block has been heard, since only then is its length known. Framing
    errors raise :class:`DecodeFault`.
    """

    def __init__(
        self, time_bits: int | None = None, data_bits: int | None = None, detect_alone: bool = True
    ) -> None:
        if (time_bits is None) != (data_bits is None):
            raise ValueError("fixed-width decoding needs both time_bits and data_bits")
        self.time_bits = time_bits
        self.data_bits = data_bits
        self.alone = False
        self._head: list[int] | None = [] if detect_alone else None
        self._prev: int | None = None
        self._framed = False
        self._expect_sep = False
        self._payload: list[int] = []

    def feed(self, bit: int) -> DecodedBlock | str | None:
        if self.alone:
            return None
        bit = int(bit)
        if self._head is not None:
            self._head.append(bit)
            if len(self._head) < ALONE_SILENCE:
                return None
            head, self._head = self._head, None
            if not any(head):
                self.alone = True
                return ALONE
            out = None
            for b in head:
                out = self._step(b) or out
            return out
        return self._step(bit)

    def _step(self, bit: int) -> DecodedBlock | None:
        prev, self._prev = self._prev, bit
        if not self._framed:
            if prev == 0 and bit == 0:
                self._framed = True
                self._expect_sep = True
                self._payload = []
            return None
        if not self._expect_sep:
            self._payload.append(bit)
            self._expect_sep = True
            return None
        if bit == 1:
            self._expect_sep = False
            return None
        # zero where a separator belongs: the last payload bit was really the
        # first zero of the next header
        if not self._payload or self._payload[-1] != 0:
            raise DecodeFault("zero in separator position outside a block header")
        self._payload.pop()
        block = self._close(self._payload)
        self._payload = []
        return block

    def _close(self, p: list[int]) -> DecodedBlock:
        if self.time_bits is not None:
            if len(p) != self.time_bits + self.data_bits:
                raise DecodeFault(f"fixed-width block has {len(p)} payload bits")
            m = self.time_bits
        else:
            if len(p) == 0 or len(p) % 2:
                raise DecodeFault(f"block payload has odd or zero length {len(p)}")
            m = len(p) // 2
        index = 0
        for b in p[:m]:
            index = (index << 1) | b
        if self.time_bits is None and (time_width(index) != m or (m > 1 and p[0] == 0)):
            raise DecodeFault(f"time field {p[:m]} does not match its width {m}")
        return DecodedBlock(index, tuple(p[m:]))


def decode_stream(
    bits: Iterable[int], time_bits: int | None = None, data_bits: int | None = None
) -> list[DecodedBlock | str]:
    """Decode a whole stream; returns the emitted events in order."""
    dec = StreamDecoder(time_bits, data_bits)
    events = []
    for b in bits:
        ev = dec.feed(b)
        if ev is not None:
            events.append(ev)
    return events


# -- binary carry sequence ---------------------------------------------------


def carry(n: int) -> int:
    """B(n): number of trailing zeros of ``n`` in base 2."""
    if n < 1:
        raise ValueError("the carry sequence is defined for n >= 1")
    return (n & -n).bit_length() - 1


def parity_bit(n: int) -> int:
    """B'(n): parity of the occurrences of B(n) among B(1..n)."""
    # the numbers m <= n with B(m) = j are 2^j(2q+1); n is the (q+1)-th of them
    return 1 if ((n >> carry(n)) & 3) == 1 else 0


def carry_prefix(length: int) -> str:
    return "".join(str(carry(n)) for n in range(1, length + 1))


def parity_prefix(length: int) -> str:
    return "".join(str(parity_bit(n)) for n in range(1, length + 1))


def parity_slice(start: int, length: int) -> np.ndarray:
    """B'(start .. start+length-1) as an int8 array."""
    if start < 1:
        raise ValueError("the parity sequence is defined for n >= 1")
    m = np.arange(start, start + length, dtype=np.int64)
    while True:
        even = (m & 1) == 0
        if not even.any():
            break
        m = np.where(even, m >> 1, m)
    return ((m & 3) == 1).astype(np.int8)


# -- window alignment ----------------------------------------------------------


def window_length(levels: int) -> int:
    """Consecutive B' bits sufficient to locate every n with B(n) <= levels."""
    return 11 << levels


@dataclass(frozen=True)
class Alignment:
    """Result of aligning a B' window.

    ``levels[i]`` is B(s+i) when it is at most ``l`` and -1 otherwise, where
    ``s`` is the (unknown) sequence index of the window's first bit.
    ``phase`` is ``s mod 2**(l+1)``; ``phase_ext`` additionally uses the
    alternation phase of the top level and is ``s mod 2**(l+2)``.
    """

    l: int
    levels: np.ndarray
    phase: int
    phase_ext: int


def _alternating(x: np.ndarray) -> bool:
    return len(x) >= 2 and bool(np.all(x[1:] != x[:-1]))


def align_window(window: Sequence[int], l: int) -> Alignment:
    w = np.asarray(window, dtype=np.int8)
    if l < 0:
        raise ValueError("l must be non-negative")
    if len(w) < window_length(l):
        raise WindowTooShort(f"need {window_length(l)} bits for l={l}, got {len(w)}")
    levels = np.full(len(w), -1, dtype=np.int64)
    current = np.arange(len(w))
    for j in range(l + 1):
        a, b = current[0::2], current[1::2]
        alt_a, alt_b = _alternating(w[a]), _alternating(w[b])
        if alt_a == alt_b:
            raise AlignmentFault(f"no unique alternating subsequence at level {j}")
        hit, current = (a, b) if alt_a else (b, a)
        levels[hit] = j
    top = np.flatnonzero(levels == l)
    i0 = int(top[0])
    mod = 1 << (l + 1)
    phase = ((1 << l) - i0) % mod
    # B'(n) = 1 iff (n >> l) & 3 == 1 for B(n) = l, which fixes bit l+1 of n
    n_hi = (1 << l) | (0 if w[i0] == 1 else (1 << (l + 1)))
    phase_ext = (n_hi - i0) % (mod << 1)
    return Alignment(l, levels, phase, phase_ext)
