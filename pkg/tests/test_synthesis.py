import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from behavtypes import fixtures as fx
from behavtypes.composition import ComponentSystem, analyze, apply_priorities
from behavtypes.core import BehavioralType, Label
from behavtypes.synthesis import SynthesisStatus, explain, synthesize


def test_clean_system_needs_no_rules():
    system = ComponentSystem({"A": fx.protocol_caller(), "B": fx.callee_accepting_both()})
    r = synthesize(system)
    assert r.status is SynthesisStatus.Solved and list(r.rules) == []


def test_two_protocol_pair():
    r = synthesize(fx.protocol_pair())
    assert r.status is SynthesisStatus.Solved
    assert [str(rule) for rule in r.rules] == ["A: oldPrtcl < newPrtcl"]
    assert r.residual.clean


def test_no_choice_point_is_unsolvable():
    x, y = Label("x"), Label("y")
    a = BehavioralType.build([x, y], ["a0", "a1"], "a0", [("a0", x, "a1")])
    b = BehavioralType.build([x, y], ["b0", "b1"], "b0", [("b0", y, "b1")])
    r = synthesize(ComponentSystem({"A": a, "B": b}))
    assert r.status is SynthesisStatus.Unsolvable and not r.candidates


def test_explain_solved_names_rule_and_sender():
    text = explain(synthesize(fx.protocol_pair()))
    assert "A: oldPrtcl < newPrtcl" in text
    assert "oldPrtcl" in text and "newPrtcl" in text


def test_explain_unsolvable_mentions_exhaustion():
    x, y = Label("x"), Label("y")
    a = BehavioralType.build([x, y], ["a0", "a1"], "a0", [("a0", x, "a1")])
    b = BehavioralType.build([x, y], ["b0", "b1"], "b0", [("b0", y, "b1")])
    text = explain(synthesize(ComponentSystem({"A": a, "B": b})))
    assert "exhaust" in text.lower()


def test_budget_exceeded_reported():
    r = synthesize(fx.protocol_pair(), max_rules=0)
    assert r.status is SynthesisStatus.BoundExceeded


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_solutions_are_sound_and_locally_minimal(seed):
    system = ComponentSystem(oracles.random_system_parts(random.Random(seed)))
    r = synthesize(system)
    if r.status is not SynthesisStatus.Solved:
        return
    assert analyze(apply_priorities(system, r.rules)).clean
    for k in range(len(r.rules)):
        for subset in itertools.combinations(r.rules, k):
            assert not analyze(apply_priorities(system, subset)).clean


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_synthesis_is_deterministic(seed):
    parts = oracles.random_system_parts(random.Random(seed))
    a = synthesize(ComponentSystem(parts))
    b = synthesize(ComponentSystem(parts))
    assert (a.status, list(a.rules)) == (b.status, list(b.rules))
