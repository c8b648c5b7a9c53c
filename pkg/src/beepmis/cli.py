"""Command-line entry point: ``beepmis <command> ...``.

Exit codes: 0 on success, 1 when a hard invariant is violated (MIS
violation, k safety or k form breach, failed preset), 2 on bad usage or a
rejected configuration.
"""

from __future__ import annotations

import argparse
import inspect
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import codec, verify
from .harness import PROTOCOLS, BACKENDS, ConfigError, ExperimentConfig, make_scenario, replay, run_batch, sweep
from .kernel import Scenario, ScenarioError, Trace
from .presets import PRESETS, run_preset

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

# stats whose nonzero total is a hard failure
HARD_STATS = ("k_cap_violations", "k_form_violations", "k_decreases")


def _value(text: str) -> Any:
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _key_values(items: Sequence[str]) -> dict[str, Any]:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        out[key] = _value(val)
    return out


# -- argument groups -------------------------------------------------------------------


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--generator", default="standard", choices=["standard", "grown", "case1", "case2", "file"])
    g.add_argument("--scenario", metavar="PATH", help="scenario file (implies --generator file)")
    g.add_argument("--family", default="gnp", help="graph family: gnp, path, ring, grid, complete")
    g.add_argument("-n", "--n", type=int, default=64, help="node count")
    g.add_argument("--wake", default="synchronous", help="synchronous, staggered, random, simple-wakeup")
    g.add_argument("--gen", action="append", default=[], metavar="KEY=VALUE",
                   help="extra generator parameter (p, step, window, delta, width, k, l, m, p2, scale, ...)")
    g.add_argument("--scenario-seed", type=int, help="use one fixed scenario instead of one per trial seed")


def _scenario_spec(a: argparse.Namespace) -> dict[str, Any] | str:
    if a.scenario:
        return a.scenario
    spec: dict[str, Any] = {"generator": a.generator}
    if a.generator == "standard":
        spec.update(family=a.family, n=a.n, wake=a.wake)
    elif a.generator == "grown":
        spec["n"] = a.n
    spec.update(_key_values(a.gen))
    return spec


def _experiment_args(p: argparse.ArgumentParser) -> None:
    _scenario_args(p)
    g = p.add_argument_group("experiment")
    g.add_argument("--protocol", default="fastmis", choices=PROTOCOLS)
    g.add_argument("--seeds", type=int, help="run seeds 0..SEEDS-1 (default 10; presets use their own count)")
    g.add_argument("--seed-list", help="comma-separated explicit seeds (overrides --seeds)")
    g.add_argument("--cap", type=int, help="round cap (default depends on protocol and n)")
    g.add_argument("--backend", default="engine", choices=BACKENDS)
    g.add_argument("--tail", type=int, help="stable rounds required before an early stop")
    g.add_argument("--N", type=int, help="FastMIS size bound (default: n rounded up to a power of two)")
    g.add_argument("--c", type=int, help="FastMIS schedule constant")
    g.add_argument("--k0", type=int, help="initial k for triple-based protocols")
    g.add_argument("--semantics", choices=["proof", "literal"], help="restart-bit semantics")
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="extra protocol parameter")
    g.add_argument("--out", metavar="DIR", help="output directory")


def _config(a: argparse.Namespace) -> ExperimentConfig:
    params = {k: getattr(a, k) for k in ("N", "c", "k0", "semantics") if getattr(a, k) is not None}
    params.update(_key_values(a.param))
    seeds: int | list[int] = 10 if a.seeds is None else a.seeds
    if a.seed_list:
        seeds = [int(s) for s in a.seed_list.split(",") if s.strip()]
    spec = _scenario_spec(a)
    resample = a.scenario_seed is None
    if not resample and isinstance(spec, dict):
        spec = dict(spec, seed=a.scenario_seed)
    return ExperimentConfig(a.protocol, spec, seeds, params, a.cap, a.backend, a.tail, resample, a.out)


def _hard_failures(summary: dict) -> dict[str, int]:
    out = {"mis_violation_trials": summary.get("mis_violation_trials", 0)}
    for key in HARD_STATS:
        out[key] = summary.get("stats", {}).get(key, 0)
    return {k: v for k, v in out.items() if v}


def _emit(obj: Any) -> None:
    print(json.dumps(obj, indent=1, default=lambda x: x.tolist() if isinstance(x, np.ndarray) else str(x)))


# -- commands --------------------------------------------------------------------------


def cmd_run(a: argparse.Namespace) -> int:
    if a.preset:
        takes_seeds = "seeds" in inspect.signature(PRESETS[a.preset]).parameters
        kwargs = {"seeds": a.seeds} if a.seeds is not None and takes_seeds else {}
        res = run_preset(a.preset, **kwargs)
        print(res.line())
        if a.out:
            Path(a.out).mkdir(parents=True, exist_ok=True)
            (Path(a.out) / f"{a.preset}.json").write_text(json.dumps(
                {"number": res.number, "name": res.name, "passed": res.passed, "metrics": res.metrics},
                indent=1, default=str))
        return EXIT_OK if res.passed else EXIT_VIOLATION
    rep = run_batch(_config(a))
    _emit(rep.summary)
    bad = _hard_failures(rep.summary)
    if bad:
        print(f"hard invariant violations: {bad}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_sweep(a: argparse.Namespace) -> int:
    res = sweep(_config(a), a.ns)
    d = res.to_dict()
    _emit({"points": d["points"], "fit": d["fit"]})
    if a.out:
        Path(a.out).mkdir(parents=True, exist_ok=True)
        (Path(a.out) / "sweep.json").write_text(json.dumps(d, indent=1))
    bad = {n: _hard_failures(r.summary) for n, r in res.reports.items()}
    bad = {n: b for n, b in bad.items() if b}
    if bad:
        print(f"hard invariant violations: {bad}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_replay(a: argparse.Namespace) -> int:
    res = replay(_config(a), a.seed)
    out = Path(a.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"trace-{a.protocol}-seed{a.seed}"
    res.trace.export_csv(stem.with_suffix(".csv"))
    res.trace.save(stem.with_suffix(".npz"))
    _emit({
        "seed": res.seed, "rounds": res.rounds, "stabilization": res.stabilization,
        "mis_violations": res.violations, "stats": res.stats,
        "files": [str(stem.with_suffix(".csv")), str(stem.with_suffix(".npz"))],
    })
    return EXIT_VIOLATION if res.violations else EXIT_OK


def cmd_gen_scenario(a: argparse.Namespace) -> int:
    sc = make_scenario(_scenario_spec(a), a.seed)
    if a.out:
        sc.save(a.out)
        print(f"{sc.name}: {sc.n} nodes, {len(sc.edges)} edges, d_max={sc.d_max}, last event {sc.last_event} -> {a.out}")
    else:
        _emit(sc.to_dict())
    return EXIT_OK


def audit_trace(trace: Trace, k0: int | None = None) -> dict[str, Any]:
    """All trace checks; ``hard`` lists the ones that must be empty."""
    stab = verify.stabilization_round(trace)
    report: dict[str, Any] = {"rounds": trace.rounds, "nodes": trace.scenario.n, "stabilization": stab}
    hard: dict[str, int] = {}
    if stab is not None:
        v = verify.check_mis(trace, stab)
        report["independent"], report["maximal"] = v.independent, v.maximal
        report["mis_violations"] = v.violations[:10]
        hard["mis_violations"] = len(v.violations)
    if trace.k.any():
        hard["k_decreases"] = len(verify.k_monotone_violations(trace))
        hard["k_cap_violations"] = len(verify.k_cap_violations(trace))
        if k0 is not None:
            hard["k_form_violations"] = len(verify.k_form_violations(trace, k0))
        report["adjacent_mis_structure"] = len(verify.adjacent_mis_structure(trace))
        report["max_k"] = int(trace.k.max())
    report["states"] = verify.awake_states(trace)
    report["hard"] = hard
    return report


def cmd_verify_trace(a: argparse.Namespace) -> int:
    path = Path(a.trace)
    if path.suffix == ".npz":
        trace = Trace.load(path)
    else:
        if not a.scenario:
            raise ConfigError("a tabular trace needs --scenario")
        trace = Trace.import_csv(path, Scenario.load(a.scenario))
    report = audit_trace(trace, a.k0)
    _emit(report)
    return EXIT_VIOLATION if any(report["hard"].values()) else EXIT_OK


def _bits(text: str) -> list[int]:
    bits = [int(ch) for ch in text if ch in "01"]
    if len(bits) != len(text.replace(" ", "")):
        raise ConfigError("bit strings may contain only 0, 1 and spaces")
    return bits


def cmd_codec(a: argparse.Namespace) -> int:
    if a.codec_cmd == "encode":
        print("".join(map(str, codec.encode_block(a.block, _bits(a.data), a.time_bits))))
    elif a.codec_cmd == "decode":
        for ev in codec.decode_stream(_bits(a.bits), a.time_bits, a.data_bits):
            if isinstance(ev, codec.DecodedBlock):
                print(f"block {ev.index} data {''.join(map(str, ev.data))}")
            else:
                print(ev)
    elif a.codec_cmd == "prefix":
        print(codec.carry_prefix(a.length))
        print(codec.parity_prefix(a.length))
    else:
        window = _bits(a.window) if a.window else codec.parity_slice(a.start, codec.window_length(a.l)).tolist()
        al = codec.align_window(window, a.l)
        _emit({"l": al.l, "phase": al.phase, "phase_ext": al.phase_ext, "levels": al.levels.tolist()})
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beepmis", description="Beeping-model MIS simulator and trace checker.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a seeded batch or a named acceptance preset")
    _experiment_args(r)
    r.add_argument("--preset", choices=sorted(PRESETS), help="run an acceptance preset instead")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a batch per size and fit T = a (log2 n)^b")
    _experiment_args(s)
    s.add_argument("--ns", type=int, nargs="+", required=True, help="sizes to sweep")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("replay", help="re-run one seed with its full trace recorded")
    _experiment_args(rp)
    rp.add_argument("--seed", type=int, required=True)
    rp.set_defaults(func=cmd_replay)

    g = sub.add_parser("gen-scenario", help="write a generated scenario file")
    _scenario_args(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", metavar="PATH", help="scenario file to write (default: print)")
    g.set_defaults(func=cmd_gen_scenario)

    v = sub.add_parser("verify-trace", help="check a recorded trace (.npz, or .csv with --scenario)")
    v.add_argument("trace")
    v.add_argument("--scenario", metavar="PATH")
    v.add_argument("--k0", type=int, help="check that every k is k0 * 2^j")
    v.set_defaults(func=cmd_verify_trace)

    c = sub.add_parser("codec", help="debug the block encoding and the parity-sequence aligner")
    csub = c.add_subparsers(dest="codec_cmd", required=True)
    e = csub.add_parser("encode")
    e.add_argument("--block", type=int, required=True)
    e.add_argument("--data", required=True, help="data bits, e.g. 101")
    e.add_argument("--time-bits", type=int)
    d = csub.add_parser("decode")
    d.add_argument("--bits", required=True)
    d.add_argument("--time-bits", type=int)
    d.add_argument("--data-bits", type=int)
    pf = csub.add_parser("prefix")
    pf.add_argument("--length", type=int, default=70)
    al = csub.add_parser("align")
    al.add_argument("--l", type=int, required=True)
    grp = al.add_mutually_exclusive_group(required=True)
    grp.add_argument("--window", help="window bits")
    grp.add_argument("--start", type=int, help="take the window from this sequence index")
    c.set_defaults(func=cmd_codec)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
