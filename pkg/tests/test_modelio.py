import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from behavtypes import fixtures as fx
from behavtypes.composition import ComponentSystem, analyze
from behavtypes.core import equals
from behavtypes.errors import ParseError, SchemaError, UnsupportedVersion
from behavtypes.modelio import (ModelDocument, dump_log, dumps, load, load_log, save)
from behavtypes.osgi import SeededRandom, run
from behavtypes.synthesis import synthesize


def test_caller_loads_with_three_locations_and_two_edges():
    bt = load(dumps(fx.protocol_caller())).payload
    assert len(bt.locations) == 3 and len(bt.edges) == 2
    assert equals(bt, fx.protocol_caller(), compare_location_names=True).equal


def test_truncated_document_is_a_parse_error():
    data = dumps(fx.protocol_caller())
    with pytest.raises(ParseError) as info:
        load(data[: len(data) // 2])
    assert info.value.line >= 1 and info.value.column >= 1


def test_future_version_rejected():
    doc = json.loads(dumps(fx.protocol_caller()))
    doc["format_version"] = 99
    with pytest.raises(UnsupportedVersion):
        load(json.dumps(doc))


def test_unknown_key_points_at_its_line():
    text = dumps(fx.protocol_caller()).decode()
    text = text.replace('"kind"', '"colour": "red",\n  "kind"', 1)
    with pytest.raises(SchemaError) as info:
        load(text)
    assert "colour" in str(info.value)
    assert info.value.line == 3


def test_invalid_model_rejected_unless_unchecked():
    doc = json.loads(dumps(fx.protocol_caller()))
    doc["initial"] = "nowhere"
    with pytest.raises(SchemaError):
        load(json.dumps(doc))
    assert load(json.dumps(doc), check=False).payload.initial == "nowhere"


def test_equal_documents_serialize_identically():
    assert dumps(fx.booking_two_flights()) == dumps(fx.booking_two_flights())


def test_comment_survives():
    doc = load(save(ModelDocument("BehavioralType", fx.protocol_callee(), comment="note")))
    assert doc.comment == "note"


@pytest.mark.parametrize("payload", [
    fx.protocol_pair(), fx.booking_two_flights(), fx.booking_system(), fx.misordered_script(),
    analyze(fx.protocol_pair()), synthesize(fx.protocol_pair()),
], ids=["system", "booking", "osgi", "script", "verdict", "synthesis"])
def test_round_trip_is_byte_stable(payload):
    once = dumps(payload)
    assert save(load(once)) == once


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_random_systems_round_trip(seed):
    system = ComponentSystem(oracles.random_system_parts(random.Random(seed)))
    once = dumps(system)
    back = load(once).payload
    assert dumps(back) == once
    assert analyze(back).deadlocks == analyze(system).deadlocks


def test_event_log_round_trip():
    log = run(fx.booking_system(), SeededRandom(3, 120)).log
    text = dump_log(log)
    assert tuple(load_log(text)) == tuple(log)
    assert all(json.loads(line)["seq"] == i for i, line in enumerate(text.splitlines()))
