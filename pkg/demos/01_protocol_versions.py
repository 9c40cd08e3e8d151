"""
Two protocol versions
=====================

A caller that can open either ``newPrtcl`` or ``oldPrtcl`` talks to a callee
that only understands ``newPrtcl``.  We compare the two types, find the
incompatibility, and synthesize a priority that removes it.
"""
from behavtypes import fixtures as fx
from behavtypes.composition import apply_priorities, check_compatibility, detect_deadlocks
from behavtypes.core import complete, equals, normalize, refines
from behavtypes.synthesis import explain, synthesize

caller, callee = fx.protocol_caller(), fx.protocol_callee()

# Normal form: breadth-first names, so newPrtcl leads to q1 and oldPrtcl to q2.
for e in normalize(caller).sorted_edges():
    print(e.source, e.label.name, e.dest)

# Completion sends every undeclared call to the error sink.
print(sorted((e.source, e.label.name, e.dest) for e in complete(callee).edges))

# The types differ, and the first difference is the old protocol at the start.
print(equals(caller, callee).first_difference)

# Restricted to newPrtcl, the caller is a refinement of the callee.
print("refines on newPrtcl:", refines(caller, callee, ["newPrtcl"]).equal)

# Composed, the caller may call oldPrtcl in a state where the callee refuses it.
system = fx.protocol_pair()
for w in check_compatibility(system).incompatibilities:
    print("witness:", w.state, w.sender, w.label.name, w.refuser)

# A single priority rule removes the offending branch.
result = synthesize(system)
print(explain(result))
fixed = apply_priorities(system, result.rules)
print("after:", len(check_compatibility(fixed).incompatibilities), "witnesses,",
      len(detect_deadlocks(fixed).deadlocks), "deadlocks")
