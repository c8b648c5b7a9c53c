"""Seeded trial batches, reports and scaling fits."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import verify
from .engine import PROTOCOLS as ENGINE_PROTOCOLS
from .engine import RunResult, simulate
from .kernel import Scenario, run
from .protocols import fastmis_factory, luby_factory, round_up_pow2, w1_factory, w2_factory
from .scenarios import (
    UniformBehavior,
    gen_case1,
    gen_case2,
    gen_grown,
    gen_standard,
    simple_wakeup_violations,
    uniform_factory,
)
from .protocols.wakeup import BLOCK, w1_min_delta

PROTOCOLS = ("fastmis", "luby", "w1", "w2", "uniform")
BACKENDS = ("engine", "reference")


class ConfigError(ValueError):
    """The experiment cannot be run as configured."""


def _log2(n: int) -> float:
    return math.log2(max(2, n))


def default_cap(protocol: str, n: int, params: Mapping[str, Any]) -> int:
    """FastMIS: 20 c log^2 N log n. Triple-based protocols: 500 log^2 n."""
    if protocol == "fastmis":
        N = int(params.get("N") or round_up_pow2(n))
        c = int(params.get("c", 18))
        return int(20 * c * _log2(N) ** 2 * math.ceil(_log2(n)))
    if protocol == "uniform":
        return 64
    return int(500 * math.ceil(_log2(n)) ** 2)


def make_scenario(spec: Mapping[str, Any] | str | Path | Scenario, seed: int = 0) -> Scenario:
    """Build a scenario from a file path or a generator spec such as
    ``{"generator": "standard", "family": "gnp", "n": 64, "p": 0.5, "wake": "synchronous"}``.
    """
    if isinstance(spec, Scenario):
        return spec
    if isinstance(spec, (str, Path)):
        return Scenario.load(spec)
    spec = dict(spec)
    gen = spec.pop("generator", "standard")
    if gen == "file":
        return Scenario.load(spec["path"])
    if gen == "standard":
        family = spec.pop("family")
        n = int(spec.pop("n"))
        wake = spec.pop("wake", "synchronous")
        return gen_standard(family, n, wake, seed=int(spec.pop("seed", seed)), **spec)
    if gen == "grown":
        n = int(spec.pop("n"))
        return gen_grown(n, seed=int(spec.pop("seed", seed)), **spec)
    if gen == "case1":
        return gen_case1(int(spec["k"]), int(spec["l"]), float(spec["p"]), int(spec["scale"]))
    if gen == "case2":
        return gen_case2(
            int(spec["k"]), int(spec["m"]), int(spec["l"]), float(spec["p"]), float(spec["p2"]), int(spec["scale"])
        )
    raise ConfigError(f"unknown scenario generator {gen!r}")


@dataclass
class ExperimentConfig:
    protocol: str
    scenario: Any  # generator spec, path, or Scenario
    seeds: int | list[int] = 10
    params: dict = field(default_factory=dict)
    cap: int | None = None
    backend: str = "engine"
    tail: int | None = None
    resample: bool = True  # regenerate random scenarios from each trial seed
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.cap is not None and self.cap < 1:
            raise ConfigError("round cap must be >= 1")
        if not self.seed_list():
            raise ConfigError("seed list must be non-empty")

    def seed_list(self) -> list[int]:
        if isinstance(self.seeds, int):
            return list(range(self.seeds))
        return [int(s) for s in self.seeds]

    def scenario_for(self, seed: int) -> Scenario:
        return make_scenario(self.scenario, seed if self.resample else 0)

    def to_dict(self) -> dict:
        d = asdict(self) if not isinstance(self.scenario, Scenario) else {
            **{k: v for k, v in asdict(self).items() if k != "scenario"},
            "scenario": self.scenario.name or "inline",
        }
        if isinstance(d.get("scenario"), Path):
            d["scenario"] = str(d["scenario"])
        return d


def validate(config: ExperimentConfig, scenario: Scenario) -> None:
    """Reject scenarios the protocol's preconditions do not cover."""
    if config.protocol == "w2" and scenario.n:
        delta = BLOCK * math.ceil(_log2(max(2, scenario.d_max)))
        bad = simple_wakeup_violations(scenario, delta)
        if bad:
            raise ConfigError(
                f"scenario breaks simple wake-up with delta={delta} rounds (ceil(log2 d_max) blocks): {bad[:3]}"
            )
    if config.protocol == "w1" and scenario.n:
        delta = w1_min_delta(scenario.last_event, config.params.get("max_degree"))
        bad = simple_wakeup_violations(scenario, delta)
        if bad:
            raise ConfigError(f"scenario breaks simple wake-up with delta={delta} rounds: {bad[:3]}")
    if config.protocol == "fastmis":
        N = int(config.params.get("N") or round_up_pow2(scenario.n))
        if N < scenario.n:
            raise ConfigError(f"size bound N={N} is below the node count {scenario.n}")


def _reference_factory(config: ExperimentConfig, scenario: Scenario):
    p = config.params
    if config.protocol == "fastmis":
        return fastmis_factory(int(p.get("N") or round_up_pow2(scenario.n)), int(p.get("c", 18)))
    if config.protocol == "luby":
        return luby_factory(int(p.get("k0", 6)), p.get("semantics", "proof"))
    if config.protocol == "w1":
        return w1_factory(int(p.get("k0", 6)), p.get("semantics", "proof"), p.get("max_degree"))
    if config.protocol == "w2":
        return w2_factory(int(p.get("k0", 2)), p.get("semantics", "proof"))
    b = UniformBehavior(p.get("mode", "beep-after-l"), int(p.get("l", 1)), float(p.get("p", 0.5)))
    return uniform_factory(b)


def _reference_stats(config: ExperimentConfig, trace) -> dict:
    st: dict[str, Any] = {}
    if config.protocol in ("luby", "w1", "w2"):
        st["max_k"] = int(trace.k.max()) if trace.k.size else 0
        st["adjacent_mis_unequal_k"] = sum(1 for _, _, r in verify.adjacent_mis_structure(trace) if r == "unequal k")
        st["k_cap_violations"] = len(verify.k_cap_violations(trace))
    if config.protocol == "luby":
        k0 = int(config.params.get("k0", 6))
        st["k_form_violations"] = len(verify.k_form_violations(trace, k0))
        st["k_decreases"] = len(verify.k_monotone_violations(trace))
    if config.protocol == "fastmis":
        N = int(config.params.get("N") or round_up_pow2(trace.scenario.n))
        window = int(config.params.get("c", 18)) * (N.bit_length() - 1)
        lams = (0.25, 0.5, 1.0, 2.0)
        for key, ex in (("slow_change", False), ("slow_change_pre_mis", True)):
            v = verify.slow_change_audit(trace, lams, window, exclude_mis=ex)
            st[key] = {str(l): sum(1 for x in v if x.lam == l) for l in lams}
        st["adjacent_mis_episodes"] = len(verify.adjacent_mis_events(trace))
        st["competing_potential_stat"] = verify.competing_potential_stat(trace)
    return st


def run_trial(
    config: ExperimentConfig, seed: int, record: bool = False, scenario: Scenario | None = None
) -> RunResult:
    """One seeded trial; with ``record`` the result carries the full trace."""
    if scenario is None:
        scenario = config.scenario_for(seed)
    validate(config, scenario)
    params = dict(config.params)
    cap = config.cap or default_cap(config.protocol, scenario.n, params)
    if config.protocol == "fastmis":
        params["N"] = int(params.get("N") or round_up_pow2(scenario.n))
    if config.backend == "engine" and config.protocol in ENGINE_PROTOCOLS:
        return simulate(config.protocol, scenario, seed, cap, record=record, tail=config.tail, **params)
    if config.protocol == "uniform" and config.backend == "engine":
        from .engine.uniform import run_uniform

        b = UniformBehavior(params.get("mode", "beep-after-l"), int(params.get("l", 1)), float(params.get("p", 0.5)))
        trace = run_uniform(scenario, b, seed, cap)
    else:
        trace = run(scenario, _reference_factory(config, scenario), seed, cap)
    stab = verify.stabilization_round(trace) if config.protocol != "uniform" else None
    viol = verify.check_mis(trace, stab).violations if stab is not None else []
    stats = _reference_stats(config, trace)
    final_k = trace.k[-1].copy() if trace.rounds else None
    snap = None
    if stab is not None:
        snap = np.where(trace.participating()[stab], trace.state[stab], -1).astype(np.int8)
    return RunResult(config.protocol, seed, trace.rounds, stab, viol, stats, final_k, trace, snap)


# -- reports --------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


@dataclass
class Report:
    config: dict
    trials: list[dict]
    summary: dict

    def to_dict(self) -> dict:
        return _jsonable({"config": self.config, "summary": self.summary, "trials": self.trials})

    def save(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @property
    def stabilization_times(self) -> list[int]:
        return [t["stabilization"] for t in self.trials if t["stabilization"] is not None]


def trial_record(res: RunResult, n: int) -> dict:
    return {
        "seed": res.seed,
        "n": n,
        "rounds": res.rounds,
        "stabilization": res.stabilization,
        "timed_out": res.timed_out,
        "mis_violations": len(res.violations),
        "violations": [[t, list(nodes), why] for t, nodes, why in res.violations[:10]],
        "stats": res.stats,
        "k_values": None if res.final_k is None else sorted(set(int(k) for k in res.final_k if k > 0)),
    }


def _summarize(protocol: str, trials: list[dict], finals: list[np.ndarray]) -> dict:
    times = np.array([t["stabilization"] for t in trials if t["stabilization"] is not None], dtype=float)
    s: dict[str, Any] = {
        "trials": len(trials),
        "stabilized": int(times.size),
        "timeouts": sum(t["timed_out"] for t in trials),
        "mis_violation_trials": sum(t["mis_violations"] > 0 for t in trials),
    }
    s["timeout_rate"] = s["timeouts"] / max(1, len(trials))
    if times.size:
        q = np.quantile(times, [0.0, 0.25, 0.5, 0.75, 0.95, 1.0])
        s["stabilization_quantiles"] = dict(zip(["min", "q25", "median", "q75", "q95", "max"], q.tolist()))
        s["median_stabilization"] = float(q[2])
    totals: dict[str, Any] = {}
    for t in trials:
        for key, val in t["stats"].items():
            if isinstance(val, dict):
                d = totals.setdefault(key, {})
                for kk, vv in val.items():
                    d[kk] = d.get(kk, 0) + vv
            elif isinstance(val, (int, float, np.integer, np.floating)) and not isinstance(val, bool):
                if key.startswith(("max_", "first_")) or key.endswith(("_longest", "_stat")):
                    totals[key] = max(totals.get(key, val), val)
                elif key.startswith("min_"):
                    totals[key] = min(totals.get(key, val), val)
                else:
                    totals[key] = totals.get(key, 0) + val
    s["stats"] = totals
    if finals:
        ks = np.concatenate([f[f > 0] for f in finals if f is not None]) if finals else np.array([])
        if ks.size:
            vals, counts = np.unique(ks, return_counts=True)
            s["k_histogram"] = {int(v): int(c) for v, c in zip(vals, counts)}
    return s


def run_batch(config: ExperimentConfig, progress=None) -> Report:
    """Run every seed in order; the report is a pure function of the config."""
    trials, finals = [], []
    for seed in config.seed_list():
        scenario = config.scenario_for(seed)
        res = run_trial(config, seed, scenario=scenario)
        trials.append(trial_record(res, scenario.n))
        if res.final_k is not None and config.protocol != "fastmis":
            finals.append(np.asarray(res.final_k))
        if progress is not None:
            progress(seed, res)
    rep = Report(config.to_dict(), trials, _summarize(config.protocol, trials, finals))
    if config.out_dir:
        rep.save(Path(config.out_dir) / "report.json")
    return rep


def replay(config: ExperimentConfig, seed: int) -> RunResult:
    """Re-run one trial with its trace recorded (full cap, no early stop)."""
    return run_trial(config, seed, record=True)


# -- scaling ------------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    residual: float


def fit_scaling(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Least-squares fit of ``T = a (log2 n)^b``; returns ``b``, ``a`` and the RMS log residual."""
    pts = sorted((float(n), float(t)) for n, t in points)
    if len(pts) < 3:
        raise ValueError("scaling fit needs at least 3 points")
    ns = np.array([p[0] for p in pts])
    ts = np.array([p[1] for p in pts])
    if np.any(np.diff(ns) <= 0):
        raise ValueError("n values must be strictly increasing")
    if np.any(ns <= 2) or np.any(ts <= 0):
        raise ValueError("need n > 2 and positive times for a log-log fit")
    x = np.log(np.log2(ns))
    y = np.log(ts)
    b, log_a = np.polyfit(x, y, 1)
    resid = y - (b * x + log_a)
    return ScalingFit(float(b), float(np.exp(log_a)), float(np.sqrt(np.mean(resid**2))))


@dataclass
class SweepResult:
    points: list[tuple[int, float]]
    fit: ScalingFit | None
    reports: dict[int, Report]

    def to_dict(self) -> dict:
        return _jsonable({
            "points": self.points,
            "fit": None if self.fit is None else asdict(self.fit),
            "reports": {n: r.summary for n, r in self.reports.items()},
        })


def sweep(config: ExperimentConfig, ns: Sequence[int]) -> SweepResult:
    """Run ``config`` at each size in ``ns`` (the scenario spec's ``n`` is replaced)."""
    if isinstance(config.scenario, (str, Path, Scenario)):
        raise ConfigError("a sweep needs a generator spec for the scenario")
    reports, points = {}, []
    for n in ns:
        spec = dict(config.scenario, n=int(n))
        params = dict(config.params)
        if config.protocol == "fastmis" and params.get("N_from_n", True):
            params["N"] = round_up_pow2(n)
        params.pop("N_from_n", None)
        cfg = ExperimentConfig(
            config.protocol, spec, config.seeds, params, config.cap, config.backend, config.tail, config.resample,
            None if config.out_dir is None else str(Path(config.out_dir) / f"n{n}"),
        )
        rep = run_batch(cfg)
        reports[int(n)] = rep
        if rep.stabilization_times:
            points.append((int(n), float(np.median(rep.stabilization_times))))
    fit = fit_scaling(points) if len(points) >= 3 else None
    return SweepResult(points, fit, reports)
