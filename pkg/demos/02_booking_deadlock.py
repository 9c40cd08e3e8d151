"""
Seat booking on two flights
===========================

Two flights start with few seats left ("high").  Person 1 books AB then BC;
person 2 books BC then AB.  If each grabs its first seat, both flights are
full and neither person can continue.
"""
from behavtypes import fixtures as fx
from behavtypes.composition import detect_deadlocks, reachable, replay

system = fx.booking_two_flights()
print("components:", ", ".join(system.names))
print("shared labels:", len(system.shared_labels))

reach = reachable(system)
print("reachable product states:", len(reach.states))

verdict = detect_deadlocks(system)
for state in verdict.deadlocks:
    print("deadlock:", dict(zip(system.names, state)))
    trace = verdict.traces[state]
    for step in trace:
        print("   ", step)
    # The trace is a real execution: replaying it lands in the same state.
    assert replay(system, trace) == state
