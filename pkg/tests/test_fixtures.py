import pytest

from behavtypes import fixtures as fx
from behavtypes.composition import apply_priorities, check_compatibility, detect_deadlocks
from behavtypes.modelio import save
from behavtypes.osgi import ExhaustiveDepthBounded, monitor, run
from behavtypes.synthesis import synthesize

SET = fx.fixtures()


@pytest.mark.parametrize("name", sorted(fx.documents()))
def test_files_match_builders(name):
    assert SET.files[name].read_bytes() == save(fx.documents()[name])


def test_manifest_matches_module():
    assert SET.manifest == fx.MANIFEST


@pytest.mark.parametrize("name", [n for n in fx.MANIFEST if n.endswith(".btype")])
def test_type_shapes(name):
    bt = SET.load(name)
    want = SET.manifest[name]
    assert (len(bt.locations), len(bt.edges)) == (want["locations"], want["edges"])


def test_seat_levels_and_full_only_cancels():
    bt = SET.load("seat_reservation.btype")
    assert bt.locations == ("low", "medium", "high", "full")
    assert {e.label.name for e in bt.outgoing("full")} == {"cancel"}
    assert {e.label.name for e in bt.outgoing("low")} == {"reserve"}


def test_two_protocol_expectations():
    want = SET.manifest["fig3.bsys"]
    system = SET.load("fig3.bsys")
    assert list(system.names) == want["components"]
    assert len(check_compatibility(system).incompatibilities) == want["compat"]
    assert len(detect_deadlocks(system).deadlocks) == want["deadlock"]
    result = synthesize(system)
    assert [str(r) for r in result.rules] == want["synth"]
    restricted = apply_priorities(system, result.rules)
    assert len(detect_deadlocks(restricted).deadlocks) == want["deadlock_after_synth"]


def test_booking_expectations():
    want = SET.manifest["booking_two_flights.bsys"]
    system = SET.load("booking_two_flights.bsys")
    assert list(system.names) == want["components"]
    v = detect_deadlocks(system)
    assert tuple(want["deadlock_state"]) in v.deadlocks


def test_flights_start_high():
    system = SET.load("booking_two_flights.bsys")
    assert system.initial[:2] == ("high", "high")


def test_osgi_bundles_and_create_actions():
    defn = SET.load("booking.osys")
    assert [b.id for b in defn.bundles] == SET.manifest["booking.osys"]["bundles"]
    serve = defn.object("core", "coordinator").method("serve")
    created = [a.object.id for e in serve.edges for a in e.actions if type(a).__name__ == "CreateObject"]
    assert created == ["mw1", "mw2"]


def test_misordered_monitor_expectation():
    want = SET.manifest["middleware_misordered.osys"]["monitor"]
    script = SET.load(want["script"])
    assert len(script.steps) == SET.manifest["middleware_misordered.bscript"]["steps"]
    r = run(SET.load("middleware_misordered.osys"), script)
    v = monitor(r.log, tuple(want["subject"]), SET.load(want["type"]))
    assert v.event.subject[2] == want["violation_at"]


def test_interleaving_expectation():
    summary = run(SET.load("interleaving.osys"), ExhaustiveDepthBounded(10))
    assert len(summary.traces) == SET.manifest["interleaving.osys"]["maximal_traces"]


def test_regenerating_into_a_directory(tmp_path):
    fx.write_fixtures(tmp_path)
    fresh = fx.fixtures(tmp_path)
    for name in fx.MANIFEST:
        assert fresh.files[name].read_bytes() == SET.files[name].read_bytes()
