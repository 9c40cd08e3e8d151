"""Synchronized composition of behavioral types, deadlock and compatibility checks.

Components synchronize on label *names*: a name occurring in the alphabets of
two or more components (its participants) can only fire when every
participant fires an edge with that name at the same time.  Other names fire
locally.  ``tau`` labels never synchronize.

Compatibility is checked from the caller's side: a component offering a
``CallOut`` edge whose name the target declares, while the target has no edge
with that name at its current location, yields an incompatibility witness.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .core import BehavioralType, Edge, Label, LabelKind, validate
from .errors import (InvalidBehaviorModel, StateArityMismatch, UnknownComponent,
                     UnknownLabel, UnknownTarget)

DEFAULT_BOUND = 1_000_000

ProductState = Tuple[str, ...]


@dataclass(frozen=True)
class PriorityRule:
    """Within ``component``: when ``higher`` can fire, edges labeled ``lower`` are suppressed."""

    component: str
    lower: Label
    higher: Label

    @property
    def sort_key(self):
        return (self.component, self.lower.sort_key, self.higher.sort_key)

    def __str__(self) -> str:
        return f"{self.component}: {self.lower.name} < {self.higher.name}"


@dataclass(frozen=True)
class Move:
    component: int
    edge: Edge


@dataclass(frozen=True)
class JointTransition:
    name: str
    moves: Tuple[Move, ...]

    def target(self, state: ProductState) -> ProductState:
        nxt = list(state)
        for m in self.moves:
            nxt[m.component] = m.edge.dest
        return tuple(nxt)

    @property
    def sort_key(self):
        return (self.name, tuple((m.component, m.edge.label.sort_key, m.edge.dest)
                                 for m in self.moves))


@dataclass(frozen=True)
class TraceStep:
    """One joint transition in a witness trace: label name plus (component, destination) moves."""

    label: str
    moves: Tuple[Tuple[str, str], ...]

    @property
    def participants(self) -> Tuple[str, ...]:
        return tuple(c for c, _ in self.moves)

    def __str__(self) -> str:
        return f"{self.label} [{', '.join(self.participants)}]"


@dataclass(frozen=True)
class Incompatibility:
    state: ProductState
    sender: str
    label: Label
    refuser: str

    @property
    def sort_key(self):
        return (self.state, self.sender, self.label.sort_key, self.refuser)


@dataclass
class AnalysisVerdict:
    components: Tuple[str, ...]
    deadlocks: List[ProductState] = field(default_factory=list)
    incompatibilities: List[Incompatibility] = field(default_factory=list)
    traces: Dict[ProductState, Tuple[TraceStep, ...]] = field(default_factory=dict)
    explored: int = 0
    terminal: List[ProductState] = field(default_factory=list)
    complete: bool = True

    @property
    def clean(self) -> bool:
        return not self.deadlocks and not self.incompatibilities

    @property
    def witness_count(self) -> int:
        return len(self.deadlocks) + len(self.incompatibilities)

    def merged(self, other: "AnalysisVerdict") -> "AnalysisVerdict":
        traces = dict(self.traces)
        traces.update(other.traces)
        return AnalysisVerdict(self.components, list(self.deadlocks) + list(other.deadlocks),
                               list(self.incompatibilities) + list(other.incompatibilities),
                               traces, max(self.explored, other.explored),
                               self.terminal or other.terminal,
                               self.complete and other.complete)


class ComponentSystem:
    """Named behavioral types composed under shared-name synchronization.

    ``rules`` are priority rules applied on top of the plain composition; the
    underlying automata are never modified.
    """

    def __init__(self, components: Mapping[str, BehavioralType] | Iterable[Tuple[str, BehavioralType]],
                 rules: Sequence[PriorityRule] = ()):
        items = list(components.items()) if isinstance(components, Mapping) else list(components)
        names = [n for n, _ in items]
        if len(set(names)) != len(names):
            raise ValueError("component names must be unique")
        for name, bt in items:
            problems = [p for p in validate(bt) if not p.startswith("warning:")]
            if problems:
                raise InvalidBehaviorModel(f"component {name}: {problems[0]}", problems)
        self.names: Tuple[str, ...] = tuple(names)
        self.types: Tuple[BehavioralType, ...] = tuple(bt for _, bt in items)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.rules: Tuple[PriorityRule, ...] = tuple(rules)

        alphabets = [{lab.name for lab in bt.alphabet if lab.kind is not LabelKind.Tau}
                     for bt in self.types]
        self.participants: Dict[str, Tuple[int, ...]] = {}
        for i, names_i in enumerate(alphabets):
            for n in names_i:
                self.participants.setdefault(n, ())
                self.participants[n] += (i,)
        self.shared_labels: FrozenSet[str] = frozenset(
            n for n, parts in self.participants.items() if len(parts) >= 2)
        self._succ = [bt.successors() for bt in self.types]
        self._enabled_cache: Dict[ProductState, List[JointTransition]] = {}

    @property
    def components(self) -> Dict[str, BehavioralType]:
        return dict(zip(self.names, self.types))

    @property
    def initial(self) -> ProductState:
        return tuple(bt.initial for bt in self.types)

    def outgoing(self, component: int, location: str) -> List[Edge]:
        return self._succ[component].get(location, [])

    def with_rules(self, rules: Sequence[PriorityRule]) -> "ComponentSystem":
        return ComponentSystem(zip(self.names, self.types), rules)

    def without_rules(self) -> "ComponentSystem":
        return self if not self.rules else ComponentSystem(zip(self.names, self.types))

    def decode(self, state: ProductState) -> Dict[str, str]:
        return dict(zip(self.names, state))

    def __repr__(self) -> str:
        return f"ComponentSystem({list(self.names)!r}, rules={len(self.rules)})"


def _check_arity(system: ComponentSystem, state: ProductState) -> None:
    if len(state) != len(system.names):
        raise StateArityMismatch(f"state has {len(state)} entries, system has "
                                 f"{len(system.names)} components")


def _base_enabled(system: ComponentSystem, state: ProductState) -> List[JointTransition]:
    result: List[JointTransition] = []
    shared_done = set()
    for i, loc in enumerate(state):
        for e in system.outgoing(i, loc):
            name = e.label.name
            if e.label.kind is LabelKind.Tau or name not in system.shared_labels:
                result.append(JointTransition(name, (Move(i, e),)))
            elif name not in shared_done:
                shared_done.add(name)
                options = []
                for p in system.participants[name]:
                    opts = [Move(p, pe) for pe in system.outgoing(p, state[p])
                            if pe.label.name == name and pe.label.kind is not LabelKind.Tau]
                    if not opts:
                        break
                    options.append(opts)
                else:
                    for combo in itertools.product(*options):
                        result.append(JointTransition(name, tuple(combo)))
    result.sort(key=lambda t: t.sort_key)
    return result


def suppressed_labels(system: ComponentSystem, state: ProductState,
                      base: Optional[List[JointTransition]] = None) -> Dict[int, FrozenSet[Label]]:
    """Per component, labels whose edges the priority rules suppress in ``state``.

    A rule suppresses its lower label at a location whenever an edge with its
    higher label is fireable there in the unrestricted composition.
    """
    if not system.rules:
        return {}
    if base is None:
        base = _base_enabled(system, state)
    fireable: Dict[int, set] = {}
    for t in base:
        for m in t.moves:
            fireable.setdefault(m.component, set()).add(m.edge.label)
    out: Dict[int, set] = {}
    for rule in system.rules:
        c = system.index[rule.component]
        if rule.higher in fireable.get(c, ()):
            out.setdefault(c, set()).add(rule.lower)
    return {c: frozenset(labs) for c, labs in out.items()}


def enabled(system: ComponentSystem, state: ProductState) -> List[JointTransition]:
    """Joint transitions enabled in ``state``, in deterministic order."""
    state = tuple(state)
    _check_arity(system, state)
    cached = system._enabled_cache.get(state)
    if cached is not None:
        return cached
    base = _base_enabled(system, state)
    if system.rules:
        blocked = suppressed_labels(system, state, base)
        if blocked:
            base = [t for t in base
                    if not any(m.edge.label in blocked.get(m.component, ()) for m in t.moves)]
    system._enabled_cache[state] = base
    return base


def apply_priorities(system: ComponentSystem, rules: Sequence[PriorityRule]) -> ComponentSystem:
    """Return ``system`` with ``rules`` added to its priority layer."""
    for rule in rules:
        if rule.component not in system.index:
            raise UnknownComponent(rule.component)
        alphabet = system.types[system.index[rule.component]].alphabet
        for lab in (rule.lower, rule.higher):
            if lab not in alphabet:
                raise UnknownLabel(f"{rule.component} has no label {lab.name} ({lab.kind.value})")
        if rule.lower == rule.higher:
            raise ValueError(f"rule {rule} relates a label to itself")
    return system.with_rules(tuple(system.rules) + tuple(rules))


@dataclass
class Reachability:
    states: List[ProductState]
    transitions: List[Tuple[int, JointTransition, int]]
    parent: Dict[ProductState, Optional[Tuple[ProductState, JointTransition]]]
    complete: bool

    def trace_to(self, system: ComponentSystem, state: ProductState) -> Tuple[TraceStep, ...]:
        steps = []
        cur = state
        while self.parent[cur] is not None:
            prev, t = self.parent[cur]
            steps.append(TraceStep(t.name, tuple((system.names[m.component], m.edge.dest)
                                                 for m in t.moves)))
            cur = prev
        return tuple(reversed(steps))


def reachable(system: ComponentSystem, bound: Optional[int] = DEFAULT_BOUND) -> Reachability:
    """Breadth-first exploration from the initial product state.

    Stops adding states once ``bound`` states are known and flags the result
    incomplete.
    """
    init = system.initial
    states = [init]
    index = {init: 0}
    parent: Dict[ProductState, Optional[Tuple[ProductState, JointTransition]]] = {init: None}
    transitions = []
    complete_ = True
    queue = deque([init])
    while queue:
        s = queue.popleft()
        for t in enabled(system, s):
            nxt = t.target(s)
            if nxt not in index:
                if bound is not None and len(states) >= bound:
                    complete_ = False
                    continue
                index[nxt] = len(states)
                states.append(nxt)
                parent[nxt] = (s, t)
                queue.append(nxt)
            transitions.append((index[s], t, index[nxt]))
    return Reachability(states, transitions, parent, complete_)


def is_terminal(system: ComponentSystem, state: ProductState) -> bool:
    return all(not system.outgoing(i, loc) for i, loc in enumerate(state))


def detect_deadlocks(system: ComponentSystem, bound: Optional[int] = DEFAULT_BOUND,
                     reach: Optional[Reachability] = None) -> AnalysisVerdict:
    """Reachable non-terminal states in which no joint transition is enabled."""
    reach = reach or reachable(system, bound)
    verdict = AnalysisVerdict(system.names, explored=len(reach.states), complete=reach.complete)
    for s in reach.states:
        if is_terminal(system, s):
            verdict.terminal.append(s)
        elif not enabled(system, s):
            verdict.deadlocks.append(s)
            verdict.traces[s] = reach.trace_to(system, s)
    return verdict


def offered_edges(system: ComponentSystem, component: int, state: ProductState,
                  blocked: Optional[Dict[int, FrozenSet[Label]]] = None) -> List[Edge]:
    """Edges of ``component`` at its location that priorities do not suppress."""
    if blocked is None:
        blocked = suppressed_labels(system, state)
    drop = blocked.get(component, frozenset())
    return [e for e in system.outgoing(component, state[component]) if e.label not in drop]


def _check_targets(system: ComponentSystem) -> None:
    for name, bt in zip(system.names, system.types):
        for lab in bt.sorted_alphabet():
            if lab.kind is LabelKind.CallOut and lab.target is not None \
                    and lab.target not in system.index:
                raise UnknownTarget(f"{name}: call {lab.name} targets unknown component {lab.target}")


def incompatibilities_at(system: ComponentSystem, state: ProductState) -> List[Incompatibility]:
    blocked = suppressed_labels(system, state)
    found = []
    for i, sender in enumerate(system.names):
        for e in offered_edges(system, i, state, blocked):
            lab = e.label
            if lab.kind is not LabelKind.CallOut or lab.target is None:
                continue
            j = system.index[lab.target]
            if lab.name not in {x.name for x in system.types[j].alphabet}:
                continue
            if not any(te.label.name == lab.name for te in system.outgoing(j, state[j])):
                found.append(Incompatibility(state, sender, lab, lab.target))
    found = sorted(set(found), key=lambda w: w.sort_key)
    return found


def check_compatibility(system: ComponentSystem, bound: Optional[int] = DEFAULT_BOUND,
                        reach: Optional[Reachability] = None) -> AnalysisVerdict:
    """Reachable states where an offered call is declared but not accepted by its target."""
    _check_targets(system)
    reach = reach or reachable(system, bound)
    verdict = AnalysisVerdict(system.names, explored=len(reach.states), complete=reach.complete)
    for s in reach.states:
        if is_terminal(system, s):
            verdict.terminal.append(s)
        witnesses = incompatibilities_at(system, s)
        if witnesses:
            verdict.incompatibilities.extend(witnesses)
            verdict.traces[s] = reach.trace_to(system, s)
    return verdict


def analyze(system: ComponentSystem, bound: Optional[int] = DEFAULT_BOUND) -> AnalysisVerdict:
    """Deadlocks and incompatibilities from a single exploration."""
    _check_targets(system)
    reach = reachable(system, bound)
    return detect_deadlocks(system, reach=reach).merged(check_compatibility(system, reach=reach))


def replay(system: ComponentSystem, trace: Sequence[TraceStep]) -> ProductState:
    """Follow ``trace`` from the initial state; raises ValueError if a step is not enabled."""
    state = system.initial
    for k, step in enumerate(trace):
        for t in enabled(system, state):
            moves = tuple((system.names[m.component], m.edge.dest) for m in t.moves)
            if t.name == step.label and moves == tuple(step.moves):
                state = t.target(state)
                break
        else:
            raise ValueError(f"trace step {k} ({step}) not enabled in {state}")
    return state
