import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from behavtypes import fixtures as fx
from behavtypes.composition import (ComponentSystem, PriorityRule, analyze, apply_priorities,
                                    check_compatibility, detect_deadlocks, enabled, reachable,
                                    replay)
from behavtypes.core import BehavioralType, Label, call_in, call_out
from behavtypes.errors import StateArityMismatch, UnknownLabel, UnknownTarget


def ring(n, label="t"):
    lab = Label(label)
    locs = [f"r{i}" for i in range(n)]
    return BehavioralType.build([lab], locs, "r0",
                                [(locs[i], lab, locs[(i + 1) % n]) for i in range(n)])


def test_shared_label_moves_both():
    m = Label("m")
    a = BehavioralType.build([m], ["a0", "a1"], "a0", [("a0", m, "a1")])
    b = BehavioralType.build([m], ["b0", "b1"], "b0", [("b0", m, "b1")])
    (t,) = enabled(ComponentSystem({"A": a, "B": b}), ("a0", "b0"))
    assert t.name == "m" and t.target(("a0", "b0")) == ("a1", "b1")


def test_shared_label_needs_every_holder():
    m = Label("m")
    a = BehavioralType.build([m], ["a0", "a1"], "a0", [("a0", m, "a1")])
    b = BehavioralType.build([m], ["b0"], "b0", [])
    assert enabled(ComponentSystem({"A": a, "B": b}), ("a0", "b0")) == []


def test_two_protocols_at_start_only_new_is_enabled():
    system = fx.protocol_pair()
    assert [t.name for t in enabled(system, system.initial)] == ["newPrtcl"]


def test_arity_is_checked():
    with pytest.raises(StateArityMismatch):
        enabled(fx.protocol_pair(), ("l0",))


def test_unknown_call_target_rejected():
    bad = ComponentSystem({"A": fx.protocol_caller("Nobody"), "B": fx.protocol_callee()})
    with pytest.raises(UnknownTarget):
        check_compatibility(bad)


def test_single_component_state_count():
    assert len(reachable(ComponentSystem({"R": ring(5)})).states) == 5


def test_independent_components_multiply():
    system = ComponentSystem({"R": ring(3, "x"), "S": ring(4, "y")})
    assert len(reachable(system).states) == 12


def test_booking_state_count_matches_enumerator():
    system = fx.booking_two_flights()
    states, _, _ = oracles.naive_analysis(list(zip(system.names, system.types)))
    assert set(reachable(system).states) == states


def test_bound_truncates_and_flags():
    system = ComponentSystem({"R": ring(3, "x"), "S": ring(4, "y")})
    r = reachable(system, bound=5)
    assert len(r.states) == 5 and not r.complete
    assert not detect_deadlocks(system, bound=5).complete


def test_cycle_has_no_deadlock_and_no_terminal():
    v = detect_deadlocks(ComponentSystem({"R": ring(3)}))
    assert v.deadlocks == [] and v.terminal == []


def test_mutual_wait_deadlocks_at_start():
    x, y = Label("x"), Label("y")
    a = BehavioralType.build([x, y], ["a0", "a1"], "a0", [("a0", x, "a1")])
    b = BehavioralType.build([x, y], ["b0", "b1"], "b0", [("b0", y, "b1")])
    system = ComponentSystem({"A": a, "B": b})
    v = detect_deadlocks(system)
    assert v.deadlocks == [system.initial] and v.traces[system.initial] == ()


def test_booking_deadlock_found():
    v = detect_deadlocks(fx.booking_two_flights())
    assert v.deadlocks == [("full", "full", "holding", "holding")]


def test_two_protocol_witness():
    v = check_compatibility(fx.protocol_pair())
    (w,) = v.incompatibilities
    assert (w.state, w.sender, w.label.name, w.refuser) == (("l0", "l0"), "A", "oldPrtcl", "B")


def test_call_outside_receiver_contract_is_not_a_witness():
    caller = BehavioralType.build([call_out("ping", "B")], ["l0", "l1"], "l0",
                                  [("l0", call_out("ping", "B"), "l1")])
    callee = BehavioralType.build([call_in("other")], ["l0"], "l0", [])
    assert check_compatibility(ComponentSystem({"A": caller, "B": callee})).incompatibilities == []


def test_priority_removes_witness():
    system = fx.protocol_pair()
    rule = PriorityRule("A", call_out("oldPrtcl", "B"), call_out("newPrtcl", "B"))
    restricted = apply_priorities(system, [rule])
    assert [t.name for t in enabled(restricted, restricted.initial)] == ["newPrtcl"]
    assert check_compatibility(restricted).incompatibilities == []


def test_priority_with_unfireable_higher_changes_nothing():
    a = Label("a")
    b = Label("b")
    bt = BehavioralType.build([a, b], ["l0", "l1", "l2"], "l0",
                              [("l0", a, "l1"), ("l1", b, "l2")])
    system = ComponentSystem({"C": bt})
    restricted = apply_priorities(system, [PriorityRule("C", a, b)])
    assert reachable(restricted).states == reachable(system).states


def test_priority_rule_labels_checked():
    with pytest.raises(UnknownLabel):
        apply_priorities(fx.protocol_pair(), [PriorityRule("A", Label("zz"), Label("yy"))])


def test_empty_rules_change_nothing():
    system = fx.booking_two_flights()
    same = apply_priorities(system, [])
    for s in reachable(system).states:
        assert enabled(same, s) == enabled(system, s)


# --- properties over random systems -----------------------------------------

seeds = st.integers(0, 10**6)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_traces_replay_to_reported_states(seed):
    system = ComponentSystem(oracles.random_system_parts(random.Random(seed)))
    v = analyze(system)
    for s, trace in v.traces.items():
        assert replay(system, trace) == s


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 6))
def test_bound_is_monotone(seed, bound):
    system = ComponentSystem(oracles.random_system_parts(random.Random(seed)))
    small = set(reachable(system, bound).states)
    large = set(reachable(system, bound + 3).states)
    assert small <= large <= set(reachable(system).states)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_priorities_only_remove_transitions(seed):
    rng = random.Random(seed)
    parts = oracles.random_system_parts(rng)
    system = ComponentSystem(parts)
    name, bt = rng.choice(parts)
    labels = sorted(bt.alphabet)
    if len(labels) < 2:
        return
    lo, hi = rng.sample(labels, 2)
    restricted = apply_priorities(system, [PriorityRule(name, lo, hi)])
    for s in reachable(system).states:
        assert set(enabled(restricted, s)) <= set(enabled(system, s))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_component_order_does_not_change_verdicts(seed):
    parts = oracles.random_system_parts(random.Random(seed))
    flipped = list(reversed(parts))
    a, b = analyze(ComponentSystem(parts)), analyze(ComponentSystem(flipped))
    assert {tuple(reversed(s)) for s in a.deadlocks} == set(b.deadlocks)
    key = lambda w: (w.sender, w.label.name, w.refuser)  # noqa: E731
    assert {(tuple(reversed(w.state)),) + key(w) for w in a.incompatibilities} == \
        {(w.state,) + key(w) for w in b.incompatibilities}
