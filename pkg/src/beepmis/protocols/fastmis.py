"""MIS with a known upper bound N on the network size.

A node listens for ``c log^2 N`` rounds, then competes through ``log N``
phases of ``c log N`` rounds, beeping with probability ``2^i / 8N`` in phase
``i``. Hearing a beep while listening restarts it from the beginning. A node
that survives all phases enters the MIS loop: in every two-round block it
either beeps then listens or listens then beeps, with a fair coin.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..kernel import COMPETING, INACTIVE, MIS, NodeProtocol


def round_up_pow2(n: int) -> int:
    """Smallest power of two that is >= max(n, 2)."""
    return max(2, 1 << (max(1, int(n)) - 1).bit_length())


@dataclass(frozen=True)
class FastMISConfig:
    N: int
    c: int = 18

    def __post_init__(self) -> None:
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N} (round it up first)")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")

    @property
    def log_n(self) -> int:
        return self.N.bit_length() - 1

    @property
    def phase_len(self) -> int:
        return self.c * self.log_n

    @property
    def inactive_len(self) -> int:
        return self.c * self.log_n**2

    @property
    def mis_entry(self) -> int:
        """Rounds after a (re)start at which a node that hears nothing joins the MIS loop."""
        return 2 * self.inactive_len

    @property
    def unit(self) -> float:
        """Beep probabilities are integer multiples of ``1 / 8N``."""
        return 1.0 / (8 * self.N)

    @property
    def mis_level(self) -> int:
        return 4 * self.N

    def level(self, pos: int) -> int:
        """Beep probability at position ``pos`` after a restart, in units of ``1/8N``."""
        if pos < self.inactive_len:
            return 0
        if pos < self.mis_entry:
            return 1 << (1 + (pos - self.inactive_len) // self.phase_len)
        return self.mis_level


class FastMIS(NodeProtocol):
    def __init__(self, config: FastMISConfig) -> None:
        self.cfg = config
        self.pos = 0  # rounds since the last (re)start
        self.beep_first = False

    @property
    def state(self) -> int:
        if self.pos < self.cfg.inactive_len:
            return INACTIVE
        if self.pos < self.cfg.mis_entry:
            return COMPETING
        return MIS

    @property
    def phase(self) -> int:
        """Competition phase 1..log N, or 0 outside the competition."""
        if self.state != COMPETING:
            return 0
        return 1 + (self.pos - self.cfg.inactive_len) // self.cfg.phase_len

    @property
    def level(self) -> int:
        return self.cfg.level(self.pos)

    @property
    def beep_prob(self) -> float:
        return self.level * self.cfg.unit

    def prob(self, t: int) -> float:
        return self.beep_prob

    def act(self, t: int, u: float) -> bool:
        cfg = self.cfg
        if self.pos < cfg.inactive_len:
            return False
        if self.pos < cfg.mis_entry:
            return u < self.beep_prob
        if (self.pos - cfg.mis_entry) % 2 == 0:
            self.beep_first = u < 0.5
            return self.beep_first
        return not self.beep_first

    def observe(self, t: int, heard: bool | None) -> None:
        if heard:
            self.pos = 0
        else:
            self.pos += 1

    def extras(self) -> dict[str, int]:
        return {"level": self.level}


def fastmis_factory(N: int, c: int = 18):
    cfg = FastMISConfig(N, c)
    return lambda node, scenario: FastMIS(cfg)
