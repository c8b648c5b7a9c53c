from .fastmis import FastMIS, FastMISConfig, fastmis_factory, round_up_pow2
from .luby import LubyBeep, LubyConfig, TripleLogic, luby_factory
from .wakeup import W1, W2, W1Config, W2Config, w1_factory, w2_factory

__all__ = [
    "FastMIS",
    "FastMISConfig",
    "fastmis_factory",
    "round_up_pow2",
    "LubyBeep",
    "LubyConfig",
    "TripleLogic",
    "luby_factory",
    "W1",
    "W1Config",
    "w1_factory",
    "W2",
    "W2Config",
    "w2_factory",
]
