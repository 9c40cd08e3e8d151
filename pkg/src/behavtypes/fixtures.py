"""Packaged example models: the two-protocol caller/callee pair and the flight booking system.

The files under ``behavtypes/fixtures/`` are generated from the builders in
this module (``python -m behavtypes.fixtures`` rewrites them); the test suite
checks the two never drift apart.  ``manifest.json`` records each file's
shape and the analysis outcome it is expected to produce.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .composition import ComponentSystem
from .core import BehavioralType, Label, call_in, call_out
from .modelio import ModelDocument, Script, load, save
from .osgi import (AddBundle, BundleDef, Call, CreateObject, DeleteObject, ExecuteStep,
                   MethodDef, MethodEdge, ObjectDef, RemoveBundle, ReturnStep, SystemDef)

OUTGOING = "calls:outgoing"
INCOMING = "calls:incoming"

RECONSTRUCTED = ("Reconstruction: only the constraints stated in the booking example are "
                 "fixed; the remaining shape is pinned by manifest.json.")


# --- two protocol versions -----------------------------------------------

def protocol_caller(target: str = "B") -> BehavioralType:
    """Caller able to start either protocol: ``newPrtcl`` or ``oldPrtcl``."""
    new, old = call_out("newPrtcl", target), call_out("oldPrtcl", target)
    return BehavioralType.build({new, old}, ["l0", "l1", "l2"], "l0",
                                [("l0", new, "l1"), ("l0", old, "l2")], OUTGOING)


def protocol_callee() -> BehavioralType:
    """Callee expecting ``newPrtcl``; ``oldPrtcl`` is declared but never accepted."""
    new, old = call_in("newPrtcl"), call_in("oldPrtcl")
    return BehavioralType.build({new, old}, ["l0", "l1"], "l0", [("l0", new, "l1")], INCOMING)


def callee_accepting_both() -> BehavioralType:
    """Peer that accepts either protocol."""
    new, old = call_in("newPrtcl"), call_in("oldPrtcl")
    return BehavioralType.build({new, old}, ["l0", "l1", "l2"], "l0",
                                [("l0", new, "l1"), ("l0", old, "l2")], INCOMING)


def callee_accepting_neither() -> BehavioralType:
    """Peer declaring both protocol calls but accepting neither."""
    return BehavioralType.build({call_in("newPrtcl"), call_in("oldPrtcl")}, ["l0"], "l0", [],
                                INCOMING)


def protocol_pair() -> ComponentSystem:
    return ComponentSystem([("A", protocol_caller("B")), ("B", protocol_callee())])


# --- seat reservation ----------------------------------------------------

SEAT_LEVELS = ("low", "medium", "high", "full")


def seat_reservation(reserve: str = "reserve", cancel: str = "cancel",
                     initial: str = "low", aspect: str = INCOMING) -> BehavioralType:
    """Load levels of one flight: reserve moves up, cancel moves down, full only cancels."""
    r, c = call_in(reserve), call_in(cancel)
    edges = []
    for lo, hi in zip(SEAT_LEVELS, SEAT_LEVELS[1:]):
        edges.append((lo, r, hi))
        edges.append((hi, c, lo))
    return BehavioralType.build({r, c}, SEAT_LEVELS, initial, edges, aspect)


def flight(route: str, persons=("p1", "p2"), initial: str = "high") -> BehavioralType:
    """Seat reservation instance for one flight, with one reserve/cancel pair per person."""
    alphabet, edges = set(), []
    for p in persons:
        proto = seat_reservation(f"{p}_reserve_{route}", f"{p}_cancel_{route}", initial)
        alphabet |= proto.alphabet
        edges.extend((e.source, e.label, e.dest) for e in proto.edges)
    return BehavioralType.build(alphabet, SEAT_LEVELS, initial, edges, INCOMING)


def person(pid: str, first: str, second: str) -> BehavioralType:
    """Reserve ``first`` then ``second``; after booking, release both seats again."""
    def lab(action: str, route: str) -> Label:
        return call_out(f"{pid}_{action}_{route}", f"flight_{route}")

    edges = [("idle", lab("reserve", first), "holding"),
             ("holding", lab("reserve", second), "booked"),
             ("booked", lab("cancel", first), "releasing"),
             ("releasing", lab("cancel", second), "idle")]
    return BehavioralType.build({e[1] for e in edges}, ["idle", "holding", "booked", "releasing"],
                                "idle", edges, OUTGOING)


def booking_two_flights() -> ComponentSystem:
    return ComponentSystem([
        ("flight_AB", flight("AB")),
        ("flight_BC", flight("BC")),
        ("person1", person("p1", "AB", "BC")),
        ("person2", person("p2", "BC", "AB")),
    ])


# --- middleware ----------------------------------------------------------

def middleware_outgoing() -> BehavioralType:
    """Outgoing calls of a middleware process towards ``db`` and ``pay``."""
    reserve, release = call_out("reserve_seat", "db"), call_out("release_seat", "db")
    confirm, cancel = call_out("confirm", "db"), call_out("cancel_booking", "db")
    pay, refund = call_out("pay", "pay"), call_out("refund", "pay")
    edges = [("idle", reserve, "seat_held"),
             ("seat_held", pay, "paid"),
             ("seat_held", release, "idle"),
             ("paid", confirm, "idle"),
             ("idle", cancel, "cancelling"),
             ("cancelling", refund, "idle")]
    return BehavioralType.build({reserve, release, confirm, cancel, pay, refund},
                                ["idle", "seat_held", "paid", "cancelling"], "idle", edges, OUTGOING)


# --- OSGi system definitions ---------------------------------------------

def _method(name, edges=(), locations=None, initial=None) -> MethodDef:
    """Method from ``(src, [actions], dst)`` triples; a bare name means one edge-less location."""
    edges = [MethodEdge(s, tuple(a), d) for s, a, d in edges]
    if locations is None:
        locs = []
        for e in edges:
            for loc in (e.source, e.dest):
                if loc not in locs:
                    locs.append(loc)
        locations = locs or ["m0"]
    return MethodDef(name, tuple(locations), initial or locations[0], tuple(edges))


def _activator(start_edges=()) -> ObjectDef:
    return ObjectDef("activator", (_method("start", start_edges), _method("stop")))


def _middleware_object(oid: str) -> ObjectDef:
    db = lambda m: Call(m, "db", "flightdb")  # noqa: E731
    handle = _method("handle", [
        ("h0", [db("reserve_seat")], "h1"),
        ("h1", [Call("pay", "pay", "payment")], "h2"),
        ("h2", [db("confirm")], "h3"),
        ("h1", [db("release_seat")], "h3"),
        ("h0", [db("cancel_booking")], "h4"),
        ("h4", [Call("refund", "pay", "payment")], "h3"),
    ], locations=["h0", "h1", "h2", "h3", "h4"])
    return ObjectDef(oid, (_method("init"), handle))


def _report_bundle() -> BundleDef:
    return BundleDef("report", (_activator([("r0", [], "r1")]),))


def booking_system(clients: Tuple[str, ...] = ("mw1", "mw2")) -> SystemDef:
    """Coordinator that repeatedly creates one middleware object per client and serves them."""
    core = lambda m, o: Call(m, o, "core")  # noqa: E731
    create = [CreateObject(_middleware_object(c), "core") for c in clients]
    init = [core("init", c) for c in clients]
    handle = [core("handle", c) for c in clients]
    delete = [DeleteObject(c, "core") for c in clients]
    serve = _method("serve", [
        ("c0", create, "c1"),
        ("c1", init, "c2"),
        ("c2", handle, "c3"),
        ("c3", delete, "c0"),
        ("c3", delete + [AddBundle(_report_bundle())], "c4"),
        ("c4", [Call("start", "activator", "report")], "c5"),
        ("c5", [RemoveBundle("report")], "c0"),
    ], locations=["c0", "c1", "c2", "c3", "c4", "c5"])
    coordinator = ObjectDef("coordinator", (_method("init"), serve))
    core_bundle = BundleDef("core", (
        _activator([("s0", [Call("start", "activator", "flightdb")], "s1"),
                    ("s1", [Call("start", "activator", "payment")], "s2"),
                    ("s2", [core("init", "coordinator")], "s3"),
                    ("s3", [core("serve", "coordinator")], "s4")]),
        coordinator))
    db = ObjectDef("db", (_method("init"), _method("reserve_seat", [("r0", [], "r1")]),
                          _method("release_seat"), _method("confirm"), _method("cancel_booking")))
    pay = ObjectDef("pay", (_method("init"), _method("pay", [("p0", [], "p1")]), _method("refund")))
    return SystemDef((core_bundle,
                      BundleDef("flightdb", (_activator(), db)),
                      BundleDef("payment", (_activator(), pay))), "core")


def misordered_middleware_system() -> SystemDef:
    """A middleware whose handler pays before touching the flight database."""
    handle = _method("handle", [("h0", [Call("pay", "pay", "services")], "h1"),
                                ("h1", [Call("reserve_seat", "db", "services")], "h2")],
                     locations=["h0", "h1", "h2"])
    core = BundleDef("core", (_activator([("s0", [Call("handle", "mw", "core")], "s1")]),
                              ObjectDef("mw", (_method("init"), handle))))
    services = BundleDef("services", (
        _activator(),
        ObjectDef("db", (_method("init"), _method("reserve_seat"))),
        ObjectDef("pay", (_method("init"), _method("pay")))))
    return SystemDef((core, services), "core")


def misordered_script() -> Script:
    return Script((
        ExecuteStep("core", "activator", 0, 0),   # start calls mw.handle (id 1)
        ExecuteStep("core", "mw", 1, 0),          # handle calls pay (id 2)
        ReturnStep("services", "pay", 2),
        ExecuteStep("core", "mw", 1, 1),          # handle calls reserve_seat (id 3)
        ReturnStep("services", "db", 3),
        ReturnStep("core", "mw", 1),
        ReturnStep("core", "activator", 0),
    ))


def interleaving_system() -> SystemDef:
    """``start`` calls two edge-less methods at once; they may return in either order."""
    worker = ObjectDef("worker", (_method("init"), _method("ping"), _method("pong")))
    start = [("s0", [Call("ping", "worker", "main"), Call("pong", "worker", "main")], "s1")]
    return SystemDef((BundleDef("main", (_activator(start), worker)),), "main")


# --- file set ------------------------------------------------------------

def documents() -> Dict[str, ModelDocument]:
    """Every fixture file name mapped to the document it must contain."""
    doc = ModelDocument
    return {
        "fig3_caller.btype": doc("BehavioralType", protocol_caller()),
        "fig3_callee.btype": doc("BehavioralType", protocol_callee()),
        "fig3.bsys": doc("ComponentSystem", protocol_pair()),
        "seat_reservation.btype": doc("BehavioralType", seat_reservation(), comment=RECONSTRUCTED),
        "middleware_outgoing.btype": doc("BehavioralType", middleware_outgoing(),
                                         comment=RECONSTRUCTED),
        "booking_two_flights.bsys": doc("ComponentSystem", booking_two_flights(),
                                        comment=RECONSTRUCTED),
        "booking.osys": doc("SystemDef", booking_system(), comment=RECONSTRUCTED),
        "middleware_misordered.osys": doc("SystemDef", misordered_middleware_system(),
                                          comment="Deliberately violates middleware_outgoing.btype."),
        "middleware_misordered.bscript": doc("Script", misordered_script(),
                                             comment="Run against middleware_misordered.osys."),
        "interleaving.osys": doc("SystemDef", interleaving_system()),
    }


MANIFEST = {
    "fig3_caller.btype": {"locations": 3, "edges": 2},
    "fig3_callee.btype": {"locations": 2, "edges": 1},
    "fig3.bsys": {"components": ["A", "B"], "compat": 1, "deadlock": 0,
                  "synth": ["A: oldPrtcl < newPrtcl"], "deadlock_after_synth": 0},
    "seat_reservation.btype": {"locations": 4, "edges": 6},
    "middleware_outgoing.btype": {"locations": 4, "edges": 6},
    "booking_two_flights.bsys": {"components": ["flight_AB", "flight_BC", "person1", "person2"],
                                 "deadlock": "found",
                                 "deadlock_state": ["full", "full", "holding", "holding"]},
    "booking.osys": {"bundles": ["core", "flightdb", "payment"]},
    "middleware_misordered.osys": {"monitor": {"subject": ["core", "mw"],
                                               "type": "middleware_outgoing.btype",
                                               "script": "middleware_misordered.bscript",
                                               "violation_at": "pay"}},
    "middleware_misordered.bscript": {"steps": 7},
    "interleaving.osys": {"maximal_traces": 2},
}


@dataclass(frozen=True)
class FixtureSet:
    directory: Path
    files: Dict[str, Path]
    manifest: Dict[str, dict]

    def load(self, name: str, check: bool = True):
        return load(self.files[name].read_bytes(), check).payload


def fixture_dir() -> Path:
    return Path(str(resources.files("behavtypes") / "fixtures"))


def fixtures(directory: Optional[Path] = None) -> FixtureSet:
    directory = Path(directory) if directory is not None else fixture_dir()
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    files = {name: directory / name for name in manifest}
    return FixtureSet(directory, files, manifest)


def write_fixtures(directory: Optional[Path] = None) -> List[Path]:
    directory = Path(directory) if directory is not None else fixture_dir()
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, d in documents().items():
        path = directory / name
        path.write_bytes(save(d))
        written.append(path)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps(MANIFEST, indent=2) + "\n", encoding="utf-8")
    written.append(manifest)
    return written


if __name__ == "__main__":
    for p in write_fixtures():
        print(p)
