"""
Service discovery by behavior
=============================

Services register with a ``BEHAVIOR`` property holding their behavioral
types.  A client looks for a partner whose type is compatible with its own
and, failing a clean match, restricts its own choices at runtime.
"""
from behavtypes import fixtures as fx
from behavtypes.errors import NoCompatibleChoice
from behavtypes.registry import BEHAVIOR, ServiceRegistry, adapt_protocol

registry = ServiceRegistry()
registry.register("legacy-bundle", ["Booking"], {BEHAVIOR: [fx.protocol_callee()]})
registry.register("modern-bundle", ["Booking"], {BEHAVIOR: [fx.callee_accepting_both()]})
registry.register("other-bundle", ["Reporting"])

client = fx.protocol_caller()
for match in registry.discover_compatible(client, interface="Booking"):
    print(match.record.owner, "clean" if match.verdict.clean
          else f"{match.verdict.witness_count} witness(es)")

# Against the legacy service the client picks the new protocol.
print("choice:", [lab.name for lab in adapt_protocol(client, fx.protocol_callee())])

# A partner accepting neither protocol leaves no choice at all.
try:
    adapt_protocol(client, fx.callee_accepting_neither())
except NoCompatibleChoice as exc:
    print("no choice:", exc)

# When a bundle leaves, its services go with it.
print("removed:", registry.unregister_owner("legacy-bundle"), "remaining:", len(registry))
