"""End-to-end walk-through of the booking example, rendered as a commented transcript."""
from __future__ import annotations

from . import fixtures as fx
from .composition import apply_priorities, check_compatibility, detect_deadlocks
from .core import refines
from .osgi import SeededRandom, Script, monitor, run
from .registry import BEHAVIOR, ServiceRegistry, adapt_protocol
from .synthesis import explain, synthesize


def _state(components, state):
    return ", ".join(f"{c}={loc}" for c, loc in zip(components, state))


def booking_demo(seed: int = 7) -> str:
    out = []
    say = out.append

    say("# 1. Two protocol versions")
    say("# The caller (A) can open with newPrtcl or oldPrtcl; the callee (B) only accepts newPrtcl.")
    system = fx.protocol_pair()
    compat = check_compatibility(system)
    for w in compat.incompatibilities:
        say(f"incompatibility: {w.sender} may call {w.label.name}, refused by {w.refuser} "
            f"in ({_state(compat.components, w.state)})")
    result = synthesize(system)
    say("# Priority synthesis restricts the caller's choice:")
    out.extend("  " + line for line in explain(result).splitlines())
    restricted = apply_priorities(system, result.rules)
    say(f"after priorities: {len(check_compatibility(restricted).incompatibilities)} "
        f"incompatibilities, {len(detect_deadlocks(restricted).deadlocks)} deadlocks")
    choice = adapt_protocol(fx.protocol_caller(), fx.protocol_callee())
    say(f"runtime adaptation picks: {', '.join(lab.name for lab in choice)}")
    say(f"caller refines callee on {{newPrtcl}}: "
        f"{refines(fx.protocol_caller(), fx.protocol_callee(), ['newPrtcl']).equal}")

    say("")
    say("# 2. Discovery through the registry")
    registry = ServiceRegistry()
    registry.register("legacy", ["Booking"], {BEHAVIOR: [fx.protocol_callee()]})
    registry.register("modern", ["Booking"], {BEHAVIOR: [fx.callee_accepting_both()]})
    for m in registry.discover_compatible(fx.protocol_caller()):
        status = "clean" if m.verdict.clean else f"{m.verdict.witness_count} witness(es)"
        say(f"service {m.record.service_id} (owner {m.record.owner}): {status}")

    say("")
    say("# 3. Concurrent seat reservation on two flights, both starting at 'high'")
    booking = fx.booking_two_flights()
    verdict = detect_deadlocks(booking)
    say(f"explored {verdict.explored} product states")
    for s in verdict.deadlocks:
        say(f"deadlock: ({_state(verdict.components, s)})")
        say("  via " + " -> ".join(str(t) for t in verdict.traces[s]))

    say("")
    say("# 4. Simulating the OSGi booking system and monitoring a middleware process")
    res = run(fx.booking_system(), SeededRandom(seed, 200))
    kinds = {}
    for ev in res.log:
        kinds[ev.kind.value] = kinds.get(ev.kind.value, 0) + 1
    say(f"{len(res.steps)} steps, events: " + ", ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    mw = fx.middleware_outgoing()
    for obj in ("mw1", "mw2"):
        v = monitor(res.log, ("core", obj), mw)
        say(f"monitor core/{obj}: {'conformant' if v else 'violation'} ({v.checked} calls)")
    bad = run(fx.misordered_middleware_system(), Script(fx.misordered_script().steps))
    v = monitor(bad.log, ("core", "mw"), mw)
    say(f"misordered middleware: violation at event {v.event.seq} (call {v.event.subject[2]})")
    return "\n".join(out) + "\n"
