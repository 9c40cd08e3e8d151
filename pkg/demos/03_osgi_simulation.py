"""
Simulating an OSGi system
=========================

Bundles contain objects, objects contain methods, and method edges carry
actions: calls, and structural changes such as creating objects or adding
bundles.  The simulator runs one step at a time and records an event log,
which a monitor can check against a behavioral type.
"""
from collections import Counter

from behavtypes import fixtures as fx
from behavtypes.modelio import dump_log
from behavtypes.osgi import ExhaustiveDepthBounded, SeededRandom, enabled_steps, init_system, monitor, run

booking = fx.booking_system()

# Only the init bundle's activator runs at first.
state = init_system(booking)
print("enabled at start:", enabled_steps(booking, state))

# A seeded random run is reproducible.
result = run(booking, SeededRandom(seed=42, steps=250))
print(Counter(ev.kind.value for ev in result.log))
assert dump_log(result.log) == dump_log(run(booking, SeededRandom(42, 250)).log)

# Each middleware object's outgoing calls follow the middleware protocol.
protocol = fx.middleware_outgoing()
for obj in ("mw1", "mw2"):
    v = monitor(result.log, ("core", obj), protocol)
    print(obj, "conformant" if v else "violation", f"({v.checked} calls)")

# A handler that pays before reserving a seat is caught at the pay call.
bad = run(fx.misordered_middleware_system(), fx.misordered_script())
v = monitor(bad.log, ("core", "mw"), protocol)
print("misordered:", v.event.subject[2], "at event", v.event.seq)

# Two calls issued together can return in either order.
summary = run(fx.interleaving_system(), ExhaustiveDepthBounded(10))
for trace in summary.traces:
    print([type(s).__name__ + f"#{s.call_id}" for s in trace])
