"""Command-line front end.

Exit codes: 0 clean / true, 1 property violated (deadlock, witness, not
equal, monitor violation, synthesis failure), 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import core
from .composition import AnalysisVerdict, check_compatibility, detect_deadlocks
from .errors import BehaviorError
from .modelio import ModelDocument, dump_log, load_log, load_path, save
from .osgi import (ExhaustiveDepthBounded, ExplorationSummary, SeededRandom, monitor, run)
from .synthesis import DEFAULT_MAX_RULES, SynthesisStatus, explain, synthesize

OK, VIOLATED, ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _load(path: str, kind: str, check: bool = True):
    doc = load_path(path, check)
    if doc.kind != kind:
        raise UsageError(f"{path}: expected a {kind} document, got {doc.kind}")
    return doc.payload


def _write(data: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _state(components, state) -> str:
    return "(" + ", ".join(f"{c}={loc}" for c, loc in zip(components, state)) + ")"


def _trace(steps) -> str:
    return " -> ".join(str(s) for s in steps) if steps else "<initial state>"


def format_verdict(v: AnalysisVerdict, what: str) -> str:
    lines = []
    suffix = "" if v.complete else " (exploration bound hit: verdict incomplete)"
    lines.append(f"explored {v.explored} state(s), {len(v.terminal)} terminal{suffix}")
    if what in ("deadlock", "all"):
        lines.append(f"deadlocks: {len(v.deadlocks)}")
        for s in v.deadlocks:
            lines.append(f"  {_state(v.components, s)}")
            lines.append(f"    trace: {_trace(v.traces.get(s))}")
    if what in ("compat", "all"):
        lines.append(f"incompatibilities: {len(v.incompatibilities)}")
        for w in v.incompatibilities:
            lines.append(f"  {w.sender} calls {w.label.name}, refused by {w.refuser} "
                         f"at {_state(v.components, w.state)}")
            lines.append(f"    trace: {_trace(v.traces.get(w.state))}")
    return "\n".join(lines) + "\n"


# --- commands --------------------------------------------------------------

def cmd_validate(args) -> int:
    bt = _load(args.file, "BehavioralType", check=False)
    problems = core.validate(bt)
    for p in problems:
        print(p)
    errors = [p for p in problems if not p.startswith("warning:")]
    if not errors:
        print("valid")
    return VIOLATED if errors else OK


def _transform(args, fn) -> int:
    bt = _load(args.file, "BehavioralType")
    _write(save(ModelDocument("BehavioralType", fn(bt))), args.output)
    return OK


def cmd_normalize(args) -> int:
    return _transform(args, core.normalize)


def cmd_minimize(args) -> int:
    return _transform(args, lambda bt: core.minimize(core.complete(bt)) if args.complete
                      else core.minimize(bt))


def cmd_complete(args) -> int:
    alphabet = _load(args.alphabet, "BehavioralType").alphabet
    return _transform(args, lambda bt: core.complete(bt, alphabet))


def _print_equality(result: core.EqualityResult) -> int:
    if result.equal:
        print("equal")
        for a, b in sorted(result.mapping.items()):
            print(f"  {a} -> {b}")
        return OK
    print(f"not equal: {result.first_difference}")
    return VIOLATED


def cmd_equal(args) -> int:
    a = _load(args.a, "BehavioralType")
    b = _load(args.b, "BehavioralType")
    return _print_equality(core.equals(a, b, args.names))


def cmd_refine(args) -> int:
    impl = _load(args.impl, "BehavioralType")
    spec = _load(args.spec, "BehavioralType")
    labels = [x for x in args.labels.split(",") if x] if args.labels else None
    result = core.refines(impl, spec, labels)
    if result.equal:
        print("refines")
        return OK
    print(f"does not refine: {result.first_difference}")
    return VIOLATED


def _verdict_out(args, verdict: AnalysisVerdict, what: str) -> int:
    if args.json:
        _write(save(ModelDocument("Verdict", verdict)), None)
    else:
        sys.stdout.write(format_verdict(verdict, what))
    bad = verdict.deadlocks if what == "deadlock" else verdict.incompatibilities
    return VIOLATED if bad else OK


def cmd_deadlock(args) -> int:
    system = _load(args.system, "ComponentSystem")
    return _verdict_out(args, detect_deadlocks(system, args.bound), "deadlock")


def cmd_compat(args) -> int:
    systems = [_load(p, "ComponentSystem") for p in args.systems]
    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        verdicts = list(pool.map(lambda s: check_compatibility(s, args.bound), systems))
    code = OK
    for path, v in zip(args.systems, verdicts):
        if len(systems) > 1 and not args.json:
            print(f"== {path}")
        code = max(code, _verdict_out(args, v, "compat"))
    return code


def cmd_synth(args) -> int:
    system = _load(args.system, "ComponentSystem")
    result = synthesize(system, args.max_rules, args.bound)
    if args.json:
        _write(save(ModelDocument("SynthesisResult", result)), None)
    else:
        sys.stdout.write(explain(result))
    return OK if result.status is SynthesisStatus.Solved else VIOLATED


def cmd_simulate(args) -> int:
    defn = _load(args.system, "SystemDef")
    if args.script:
        strategy = _load(args.script, "Script")
    elif args.exhaustive:
        strategy = ExhaustiveDepthBounded(args.depth)
    else:
        strategy = SeededRandom(args.seed, args.steps)
    result = run(defn, strategy)
    if isinstance(result, ExplorationSummary):
        print(f"depth {result.depth}: {len(result.traces)} maximal trace(s), "
              f"{len(result.terminal)} distinct terminal configuration(s), "
              f"{len(result.blocked)} blocked, {result.truncated} cut at the depth bound")
        return OK
    log = dump_log(result.log)
    if args.log:
        Path(args.log).write_text(log, encoding="utf-8")
        print(f"{len(result.steps)} step(s), {len(result.log)} event(s) written to {args.log}")
    else:
        sys.stdout.write(log)
    return OK


def cmd_monitor(args) -> int:
    events = load_log(Path(args.log).read_text(encoding="utf-8"))
    parts = args.subject.split("/")
    if len(parts) != 2:
        raise UsageError("SUBJECT must be BUNDLE/OBJECT")
    bt = _load(args.type, "BehavioralType")
    verdict = monitor(events, (parts[0], parts[1]), bt)
    if verdict.conformant:
        print(f"conformant ({verdict.checked} call(s) checked)")
        return OK
    ev = verdict.event
    print(f"violation at event {ev.seq}: call {ev.subject[2]} "
          f"({verdict.checked} call(s) checked)")
    return VIOLATED


def cmd_demo(args) -> int:
    from .demo import booking_demo

    sys.stdout.write(booking_demo())
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="behavtypes",
                                description="Behavioral types: checking, comparison, synthesis, "
                                            "simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="report invariant violations of a behavioral type")
    s.add_argument("file")
    s.set_defaults(fn=cmd_validate)

    for name, fn, help_ in (("normalize", cmd_normalize, "canonical renaming and edge order"),
                            ("minimize", cmd_minimize, "minimal deterministic complete form")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("file")
        s.add_argument("-o", "--output")
        if name == "minimize":
            s.add_argument("--complete", action="store_true",
                           help="complete over the declared alphabet first")
        s.set_defaults(fn=fn)

    s = sub.add_parser("complete", help="add an error location for missing labels")
    s.add_argument("file")
    s.add_argument("--alphabet", required=True, help="behavioral type whose alphabet to use")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_complete)

    s = sub.add_parser("equal", help="compare two behavioral types")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--names", action="store_true", help="also require equal location names")
    s.set_defaults(fn=cmd_equal)

    s = sub.add_parser("refine", help="compare after projecting onto a label set")
    s.add_argument("impl")
    s.add_argument("spec")
    s.add_argument("--labels", help="comma-separated label names (default: all)")
    s.set_defaults(fn=cmd_refine)

    for name, fn, help_ in (("deadlock", cmd_deadlock, "find reachable deadlock states"),
                            ("synth", cmd_synth, "synthesize priorities that remove bad states")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("system")
        s.add_argument("--json", action="store_true")
        s.add_argument("--bound", type=int, default=1_000_000)
        if name == "synth":
            s.add_argument("--max-rules", type=int, default=DEFAULT_MAX_RULES)
        s.set_defaults(fn=fn)

    s = sub.add_parser("compat", help="check call compatibility")
    s.add_argument("systems", nargs="+")
    s.add_argument("--json", action="store_true")
    s.add_argument("--bound", type=int, default=1_000_000)
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(fn=cmd_compat)

    s = sub.add_parser("simulate", help="run an OSGi system definition")
    s.add_argument("system")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--seed", type=int)
    mode.add_argument("--exhaustive", action="store_true")
    mode.add_argument("--script")
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--depth", type=int, default=10)
    s.add_argument("--log", help="write the event log here instead of stdout")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("monitor", help="check an event log against a behavioral type")
    s.add_argument("log")
    s.add_argument("subject", help="BUNDLE/OBJECT")
    s.add_argument("type")
    s.set_defaults(fn=cmd_monitor)

    s = sub.add_parser("demo", help="narrated walk-through")
    s.add_argument("name", choices=["booking"])
    s.set_defaults(fn=cmd_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else ERROR
    try:
        return args.fn(args)
    except (BehaviorError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
