"""Named experiment presets, one per acceptance criterion.

Each ``criterion_<i>`` function runs its experiment with the full default
sizes and returns a :class:`CriterionResult`. Seed counts and sizes are
parameters so the same checks can run scaled down. Criteria 3 and 4 audit the
trials of criterion 1 and criterion 7 audits those of criterion 6; the shared
batches are cached per argument tuple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import codec, verify
from .engine import simulate
from .engine.uniform import run_uniform
from .harness import ExperimentConfig, Report, default_cap, fit_scaling, run_batch, sweep
from .kernel import Scenario
from .scenarios import UniformBehavior, gen_case1


# Known 70-character prefixes of the carry sequence and its parity sequence.
CARRY_PREFIX_70 = "0102010301020104010201030102010501020103010201040102010301020106010201"
PARITY_PREFIX_70 = "1101100111001001110110001100100111011001110010001101100011001001110110"


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict[str, Any] = field(default_factory=dict)

    def line(self) -> str:
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items() if not isinstance(v, (dict, list)))
        return f"criterion {self.number:>2} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {shown}"


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


# -- shared batches --------------------------------------------------------------------


@lru_cache(maxsize=8)
def correctness_reports(
    seeds: int = 1000,
    ns: tuple[int, ...] = (16, 64, 256),
    families: tuple[str, ...] = ("gnp", "path", "grid"),
    wakes: tuple[str, ...] = ("synchronous", "staggered"),
    stagger_step: int = 4,
) -> tuple[tuple[str, Report], ...]:
    """FastMIS with N = n, c = 18 on every (family, n, wake) combination."""
    out = []
    for family in families:
        for n in ns:
            for wake in wakes:
                spec: dict[str, Any] = {"family": family, "n": n, "wake": wake}
                if family == "gnp":
                    spec["p"] = 0.5
                if wake == "staggered":
                    spec["step"] = stagger_step
                cfg = ExperimentConfig("fastmis", spec, seeds, {"N": n, "c": 18})
                out.append((f"{family}-{n}-{wake}", run_batch(cfg)))
    return tuple(out)


@lru_cache(maxsize=4)
def luby_reports(seeds: int = 1000, ns: tuple[int, ...] = (64, 256, 1024)) -> tuple[tuple[int, Report], ...]:
    """Luby triples, k0 = 6, synchronous start on G(n, 1/2)."""
    out = []
    for n in ns:
        cfg = ExperimentConfig("luby", {"family": "gnp", "n": n, "p": 0.5}, seeds, {"k0": 6})
        out.append((n, run_batch(cfg)))
    return tuple(out)


# -- criteria ------------------------------------------------------------------------------


def criterion_1(seeds: int = 1000, ns: tuple[int, ...] = (16, 64, 256)) -> CriterionResult:
    reports = correctness_reports(seeds, tuple(ns))
    trials = sum(r.summary["trials"] for _, r in reports)
    bad = sum(r.summary["mis_violation_trials"] for _, r in reports)
    timeouts = sum(r.summary["timeouts"] for _, r in reports)
    worst = max(reports, key=lambda lr: lr[1].summary["timeout_rate"])
    rate = timeouts / trials
    return CriterionResult(
        1, "FastMIS correctness", bad == 0 and rate < 0.01,
        {"trials": trials, "mis_violation_trials": bad, "timeout_rate": rate,
         "worst_timeout_setting": worst[0], "worst_timeout_rate": worst[1].summary["timeout_rate"]},
    )


def lone_node_entry(seeds: int = 1000, N: int = 16, c: int = 18) -> list[int]:
    """Rounds from wake-up to MIS-loop entry of an isolated FastMIS node, one per seed."""
    out = []
    for seed in range(seeds):
        wake = seed % 7
        sc = Scenario(1, (), (wake,), name="lone")
        res = simulate("fastmis", sc, seed, 4 * c * int(math.log2(N)) ** 2, tail=1, N=N, c=c)
        out.append(-1 if res.stabilization is None else res.stabilization - wake)
    return out


def criterion_2(seeds: int = 1000) -> CriterionResult:
    entries = lone_node_entry(seeds)
    values = sorted(set(entries))
    return CriterionResult(
        2, "lone-node determinism", values == [576],
        {"seeds": seeds, "entry_rounds": " ".join(map(str, values))},
    )


def criterion_3(seeds: int = 1000, ns: tuple[int, ...] = (16, 64, 256)) -> CriterionResult:
    reports = correctness_reports(seeds, tuple(ns))
    counts: dict[str, int] = {}
    pre_mis: dict[str, int] = {}
    trials_hit = 0
    for _, rep in reports:
        for t in rep.trials:
            sc = t["stats"]["slow_change"]
            if any(sc.values()):
                trials_hit += 1
            for lam, v in sc.items():
                counts[lam] = counts.get(lam, 0) + v
            for lam, v in t["stats"]["slow_change_pre_mis"].items():
                pre_mis[lam] = pre_mis.get(lam, 0) + v
    total = sum(counts.values())
    metrics: dict[str, Any] = {"violations": total, "trials_with_violation": trials_hit}
    metrics.update({f"lambda_{lam}": v for lam, v in counts.items()})
    metrics["violations_excluding_mis_loop"] = sum(pre_mis.values())
    return CriterionResult(3, "slow-change audit", total == 0, metrics)


def criterion_4(seeds: int = 1000, ns: tuple[int, ...] = (16, 64, 256), limit: int = 200) -> CriterionResult:
    reports = correctness_reports(seeds, tuple(ns))
    trials = hit = episodes = unresolved = slow = 0
    longest = 0
    for _, rep in reports:
        for t in rep.trials:
            st = t["stats"]
            trials += 1
            hit += st["adjacent_mis_rounds"] > 0
            episodes += st["adjacent_mis_episodes"]
            unresolved += st["adjacent_mis_unresolved"]
            slow += st["adjacent_mis_slow"]
            longest = max(longest, st["adjacent_mis_longest"])
    freq = hit / trials
    ok = freq < 0.01 and unresolved == 0 and slow == 0 and longest <= limit
    return CriterionResult(
        4, "adjacent-MIS rarity", ok,
        {"trials": trials, "trials_with_adjacent_mis": hit, "frequency": freq, "episodes": episodes,
         "unresolved": unresolved, "longer_than_limit": slow, "longest": longest},
    )


def criterion_5(seeds: int = 200, ns: tuple[int, ...] = (64, 128, 256, 512), bound: float = 3.5) -> CriterionResult:
    cfg = ExperimentConfig("fastmis", {"family": "gnp", "p": 0.5, "wake": "synchronous"}, seeds, {"c": 18})
    res = sweep(cfg, ns)
    b = res.fit.exponent if res.fit else float("nan")
    timeouts = sum(r.summary["timeouts"] for r in res.reports.values())
    return CriterionResult(
        5, "FastMIS scaling", res.fit is not None and b <= bound,
        {"exponent": b, "residual": res.fit.residual if res.fit else float("nan"), "timeouts": timeouts,
         "medians": dict(res.points)},
    )


def criterion_6(seeds: int = 1000, ns: tuple[int, ...] = (64, 256, 1024), bound: float = 2.5) -> CriterionResult:
    reports = luby_reports(seeds, tuple(ns))
    bad = sum(r.summary["mis_violation_trials"] for _, r in reports)
    unequal = sum(r.summary["stats"].get("adjacent_mis_unequal_k", 0) for _, r in reports)
    points = [(n, r.summary["median_stabilization"]) for n, r in reports if r.stabilization_times]
    fit = fit_scaling(points) if len(points) >= 3 else None
    b = fit.exponent if fit else float("nan")
    return CriterionResult(
        6, "Luby-triple correctness and scaling", bad == 0 and unequal == 0 and fit is not None and b <= bound,
        {"mis_violation_trials": bad, "unequal_k_events": unequal, "exponent": b,
         "timeouts": sum(r.summary["timeouts"] for _, r in reports), "medians": dict(points)},
    )


def criterion_7(seeds: int = 1000, ns: tuple[int, ...] = (64, 256, 1024)) -> CriterionResult:
    reports = luby_reports(seeds, tuple(ns))
    form = sum(r.summary["stats"].get("k_form_violations", 0) for _, r in reports)
    dec = sum(r.summary["stats"].get("k_decreases", 0) for _, r in reports)
    over = {n: r.summary["stats"]["max_k"] for n, r in reports if r.summary["stats"]["max_k"] > 48 * math.log2(n)}
    return CriterionResult(
        7, "k boundedness", form == 0 and dec == 0 and not over,
        {"k_form_violations": form, "k_decreases": dec, "sizes_over_bound": len(over),
         "max_k": {n: r.summary["stats"]["max_k"] for n, r in reports}},
    )


def criterion_8() -> CriterionResult:
    b, bp = codec.carry_prefix(70), codec.parity_prefix(70)
    return CriterionResult(
        8, "sequence fidelity", b == CARRY_PREFIX_70 and bp == PARITY_PREFIX_70,
        {"carry_match": b == CARRY_PREFIX_70, "parity_match": bp == PARITY_PREFIX_70},
    )


def alignment_oracle(start: int, l: int) -> tuple[list[int], int, int]:
    """Brute-force expectation for a window of B' starting at sequence index ``start``."""
    length = codec.window_length(l)
    levels = [codec.carry(start + i) if codec.carry(start + i) <= l else -1 for i in range(length)]
    return levels, start % (1 << (l + 1)), start % (1 << (l + 2))


def codec_mismatches(t_max: int = 1 << 16, max_level: int = 8) -> dict[str, int]:
    """Round-trip failures over block indices ``< t_max`` and alignment failures for ``l <= max_level``."""
    rng = np.random.default_rng(0)
    sent = [(t, tuple(rng.integers(0, 2, size=codec.time_width(t)).tolist())) for t in range(t_max)]
    got = codec.decode_stream(codec.encode_stream(sent) + [0, 0])
    got = [(b.index, b.data) for b in got if isinstance(b, codec.DecodedBlock)]
    round_trip = sum(a != b for a, b in zip(sent, got)) + abs(len(sent) - len(got))
    align = 0
    for l in range(max_level + 1):
        length = codec.window_length(l)
        for start in range(1, (1 << (l + 3)) + 1):
            levels, phase, phase_ext = alignment_oracle(start, l)
            try:
                got = codec.align_window(codec.parity_slice(start, length), l)
            except ValueError:
                align += 1
                continue
            if got.levels.tolist() != levels or got.phase != phase or got.phase_ext != phase_ext:
                align += 1
    return {"round_trip": round_trip, "alignment": align}


def criterion_9(t_max: int = 1 << 16, max_level: int = 8) -> CriterionResult:
    m = codec_mismatches(t_max, max_level)
    return CriterionResult(9, "codec round-trip and alignment", not any(m.values()), m)


def case1_success_rate(seeds: int = 1000, k: int = 8, l: int = 1, p: float = 0.5, scale: int = 6) -> tuple[int, int]:
    """Trials (of ``seeds``) in which every U node hears a multi-beeper sub-clique in each early round."""
    sc = gen_case1(k, l, p, scale)
    behavior = UniformBehavior("beep-after-l", l, p)
    cap = k + l + 2
    ok = sum(not verify.case1_collisions(run_uniform(sc, behavior, seed, cap)) for seed in range(seeds))
    return ok, seeds


def criterion_10(seeds: int = 1000, target: float = 0.99) -> CriterionResult:
    ok, total = case1_success_rate(seeds)
    rate = ok / total
    return CriterionResult(
        10, "case-1 collision mechanics", rate >= target,
        {"trials": total, "successes": ok, "rate": rate},
    )


def criterion_11(seeds: int = 300, n: int = 256, timeout_bound: float = 0.02) -> CriterionResult:
    cfg = ExperimentConfig("w2", {"generator": "grown", "n": n}, seeds, {"k0": 2})
    rep = run_batch(cfg)
    s = rep.summary
    cap_viol = s["stats"].get("k_cap_violations", 0)
    return CriterionResult(
        11, "simple wake-up (W2)",
        s["mis_violation_trials"] == 0 and s["timeout_rate"] < timeout_bound and cap_viol == 0,
        {"trials": s["trials"], "mis_violation_trials": s["mis_violation_trials"], "timeout_rate": s["timeout_rate"],
         "k_cap_violations": cap_viol, "cap": default_cap("w2", n, {}),
         "median_stabilization": s.get("median_stabilization")},
    )


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}

PRESETS: dict[str, Callable[..., CriterionResult]] = {f"criterion-{i}": f for i, f in CRITERIA.items()}


def run_preset(name: str, **kwargs) -> CriterionResult:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](**kwargs)
