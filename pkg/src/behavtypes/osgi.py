"""Interpreter for a method-call semantics of OSGi systems.

A system definition is a set of bundles; bundles hold objects; objects hold
methods, and every method is an automaton whose edges carry an ordered action
list (method calls and the structure-changing operations add/remove bundle,
create/delete object).  A running system is a set of *active method states*
``(method, location, call id, call state)`` per object.

Transitions:

* execute: an active method with an empty call state takes one of its edges
  and performs the edge's actions; every call spawns a callee and leaves a
  pending entry in the caller's call state, so the caller blocks;
* return: an active method with an empty call state and no outgoing edge
  disappears and releases its callers.

Definitions and states are immutable; :func:`apply_step` returns new ones.
Data values are not modeled.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .core import BehavioralType, LabelKind, complete
from .errors import (DuplicateBundle, DuplicateObject, InconsistentState, InvalidSystemDef,
                     MissingBundle, MissingCallee, MissingObject, ScriptStepDisabled)


# --- definitions -----------------------------------------------------------

@dataclass(frozen=True)
class Call:
    method: str
    object: str
    bundle: str


@dataclass(frozen=True)
class AddBundle:
    bundle: "BundleDef"


@dataclass(frozen=True)
class RemoveBundle:
    bundle: str


@dataclass(frozen=True)
class CreateObject:
    object: "ObjectDef"
    bundle: str


@dataclass(frozen=True)
class DeleteObject:
    object: str
    bundle: str


Action = Union[Call, AddBundle, RemoveBundle, CreateObject, DeleteObject]


@dataclass(frozen=True)
class MethodEdge:
    source: str
    actions: Tuple[Action, ...]
    dest: str


@dataclass(frozen=True)
class MethodDef:
    name: str
    locations: Tuple[str, ...]
    initial: str
    edges: Tuple[MethodEdge, ...] = ()

    def outgoing(self, location: str) -> List[Tuple[int, MethodEdge]]:
        return [(i, e) for i, e in enumerate(self.edges) if e.source == location]


@dataclass(frozen=True)
class ObjectDef:
    id: str
    methods: Tuple[MethodDef, ...]

    def method(self, name: str) -> Optional[MethodDef]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    @property
    def constructor(self) -> MethodDef:
        return self.methods[0]


@dataclass(frozen=True)
class BundleDef:
    id: str
    objects: Tuple[ObjectDef, ...]
    activator: str = "activator"

    def object(self, oid: str) -> Optional[ObjectDef]:
        for o in self.objects:
            if o.id == oid:
                return o
        return None


@dataclass(frozen=True)
class SystemDef:
    bundles: Tuple[BundleDef, ...]
    init_bundle: str

    def bundle(self, bid: str) -> Optional[BundleDef]:
        for b in self.bundles:
            if b.id == bid:
                return b
        return None

    def object(self, bid: str, oid: str) -> Optional[ObjectDef]:
        b = self.bundle(bid)
        return b.object(oid) if b is not None else None


def _method_problems(m: MethodDef, where: str) -> List[str]:
    out = []
    locs = set(m.locations)
    if m.initial not in locs:
        out.append(f"{where}.{m.name}: initial location {m.initial} not in locations")
    for k, e in enumerate(m.edges):
        for end in (e.source, e.dest):
            if end not in locs:
                out.append(f"{where}.{m.name}: edge {k} references unknown location {end}")
        for a in e.actions:
            if isinstance(a, AddBundle):
                out.extend(bundle_problems(a.bundle))
            elif isinstance(a, CreateObject):
                out.extend(object_problems(a.object, a.bundle))
    return out


def object_problems(o: ObjectDef, bundle: str) -> List[str]:
    where = f"{bundle}/{o.id}"
    if not o.methods:
        return [f"{where}: an object needs at least a constructor"]
    out = []
    names = [m.name for m in o.methods]
    for n in sorted({n for n in names if names.count(n) > 1}):
        out.append(f"{where}: method {n} defined twice")
    for m in o.methods:
        out.extend(_method_problems(m, where))
    return out


def bundle_problems(b: BundleDef) -> List[str]:
    out = []
    ids = [o.id for o in b.objects]
    for oid in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(f"bundle {b.id}: object {oid} defined twice")
    act = b.object(b.activator)
    if act is None:
        out.append(f"bundle {b.id}: activator object {b.activator} missing")
    else:
        for needed in ("start", "stop"):
            if act.method(needed) is None:
                out.append(f"bundle {b.id}: activator lacks a {needed} method")
    for o in b.objects:
        out.extend(object_problems(o, b.id))
    return out


def validate_system(defn: SystemDef) -> List[str]:
    out = []
    ids = [b.id for b in defn.bundles]
    for bid in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(f"bundle {bid} defined twice")
    if defn.bundle(defn.init_bundle) is None:
        out.append(f"initial bundle {defn.init_bundle} not defined")
    for b in defn.bundles:
        out.extend(bundle_problems(b))
    return out


# --- states ----------------------------------------------------------------

class CallStatus(enum.Enum):
    Pending = "Pending"
    Returned = "Returned"


@dataclass(frozen=True)
class CallEntry:
    method: str
    call_id: int
    bundle: str
    object: str
    status: CallStatus = CallStatus.Pending


@dataclass(frozen=True)
class ActiveMethodState:
    method: str
    location: str
    id: int
    call_state: FrozenSet[CallEntry] = frozenset()

    @property
    def blocked(self) -> bool:
        return bool(self.call_state)


class EventKind(enum.Enum):
    Call = "Call"
    Step = "Step"
    Return = "Return"
    AddBundle = "AddBundle"
    RemoveBundle = "RemoveBundle"
    CreateObject = "CreateObject"
    DeleteObject = "DeleteObject"


Actor = Tuple[str, str, str, int]


@dataclass(frozen=True)
class TraceEvent:
    """One observable event.

    ``actor`` is ``(bundle, object, method, call id)`` of the method that caused
    it (None for system start).  ``subject`` depends on the kind: the callee
    ``(bundle, object, method, call id)`` for Call, the caller for Return,
    ``(from, to)`` for Step, ``(bundle,)`` or ``(bundle, object)`` for
    structural events.
    """

    seq: int
    kind: EventKind
    actor: Optional[Actor]
    subject: Tuple = ()
    note: str = ""


ObjectStates = Mapping[str, Mapping[str, FrozenSet[ActiveMethodState]]]


@dataclass(frozen=True)
class SystemState:
    objects: ObjectStates
    next_call_id: int = 0
    log: Tuple[TraceEvent, ...] = ()

    def object_state(self, bundle: str, obj: str) -> FrozenSet[ActiveMethodState]:
        return self.objects[bundle][obj]

    def active(self) -> List[Tuple[str, str, ActiveMethodState]]:
        return [(b, o, a) for b, objs in self.objects.items() for o, states in objs.items()
                for a in sorted(states, key=lambda x: x.id)]

    def find(self, call_id: int) -> Optional[Tuple[str, str, ActiveMethodState]]:
        for b, o, a in self.active():
            if a.id == call_id:
                return b, o, a
        return None

    def configuration(self) -> Tuple:
        """Hashable summary of the state without the event log."""
        return tuple((b, o, tuple(sorted(((a.method, a.location, a.id,
                                           tuple(sorted((e.call_id, e.status.value)
                                                        for e in a.call_state)))
                                          for a in states))))
                     for b, objs in self.objects.items() for o, states in objs.items())


@dataclass(frozen=True)
class ExecuteStep:
    bundle: str
    object: str
    call_id: int
    edge: int


@dataclass(frozen=True)
class ReturnStep:
    bundle: str
    object: str
    call_id: int


StepDescriptor = Union[ExecuteStep, ReturnStep]


def init_system(defn: SystemDef) -> SystemState:
    problems = validate_system(defn)
    if problems:
        raise InvalidSystemDef("; ".join(problems))
    objects = {b.id: {o.id: frozenset() for o in b.objects} for b in defn.bundles}
    init = defn.bundle(defn.init_bundle)
    start = init.object(init.activator).method("start")
    objects[init.id][init.activator] = frozenset([ActiveMethodState("start", start.initial, 0)])
    event = TraceEvent(0, EventKind.Call, None, (init.id, init.activator, "start", 0))
    return SystemState(objects, 1, (event,))


def _check_consistent(defn: SystemDef, state: SystemState) -> None:
    bundle_ids = {b.id for b in defn.bundles}
    if set(state.objects) != bundle_ids:
        raise InconsistentState(f"state bundles {sorted(state.objects)} != "
                                f"definition bundles {sorted(bundle_ids)}")
    for b in defn.bundles:
        if set(state.objects[b.id]) != {o.id for o in b.objects}:
            raise InconsistentState(f"bundle {b.id}: object states do not match its definition")
        for o in b.objects:
            for a in state.objects[b.id][o.id]:
                m = o.method(a.method)
                if m is None or a.location not in m.locations:
                    raise InconsistentState(f"{b.id}/{o.id}: active method {a.method}@{a.location} "
                                            "not in definition")


def enabled_steps(defn: SystemDef, state: SystemState) -> List[StepDescriptor]:
    _check_consistent(defn, state)
    steps: List[StepDescriptor] = []
    for b in defn.bundles:
        for o in b.objects:
            for a in sorted(state.objects[b.id][o.id], key=lambda x: x.id):
                if a.call_state:
                    continue
                edges = o.method(a.method).outgoing(a.location)
                if edges:
                    steps.extend(ExecuteStep(b.id, o.id, a.id, i) for i, _ in edges)
                else:
                    steps.append(ReturnStep(b.id, o.id, a.id))
    return steps


class _Work:
    """Mutable scratch copy used while applying one step."""

    def __init__(self, defn: SystemDef, state: SystemState):
        self.bundles: List[BundleDef] = list(defn.bundles)
        self.init_bundle = defn.init_bundle
        self.objects: Dict[str, Dict[str, FrozenSet[ActiveMethodState]]] = {
            b: dict(objs) for b, objs in state.objects.items()}
        self.next_id = state.next_call_id
        self.log: List[TraceEvent] = list(state.log)

    def emit(self, kind, actor, subject=(), note=""):
        self.log.append(TraceEvent(len(self.log), kind, actor, tuple(subject), note))

    def bundle(self, bid) -> Optional[BundleDef]:
        for b in self.bundles:
            if b.id == bid:
                return b
        return None

    def replace_ams(self, bid, oid, old, new):
        states = self.objects[bid][oid] - {old}
        if new is not None:
            states = states | {new}
        self.objects[bid][oid] = states

    def locate(self, call_id) -> Optional[Tuple[str, str, ActiveMethodState]]:
        for bid, objs in self.objects.items():
            for oid, states in objs.items():
                for a in states:
                    if a.id == call_id:
                        return bid, oid, a
        return None

    def release(self, matches, actor, note=""):
        """Mark matching pending entries Returned; clear fully returned call states."""
        callers = []
        for bid, objs in self.objects.items():
            for oid, states in list(objs.items()):
                for a in sorted(states, key=lambda x: x.id):
                    hit = [e for e in a.call_state if e.status is CallStatus.Pending and matches(e)]
                    if not hit:
                        continue
                    entries = {e if e not in hit else replace(e, status=CallStatus.Returned)
                               for e in a.call_state}
                    if all(e.status is CallStatus.Returned for e in entries):
                        entries = set()
                    self.replace_ams(bid, oid, a, replace(a, call_state=frozenset(entries)))
                    callers.append(((bid, oid, a.method, a.id), hit))
        return callers

    def abandon(self, matches, actor, what):
        for caller, hits in self.release(matches, actor):
            for e in hits:
                self.emit(EventKind.Return, (e.bundle, e.object, e.method, e.call_id), caller,
                          note=f"abandoned: {what} removed")

    def result(self) -> Tuple[SystemDef, SystemState]:
        defn = SystemDef(tuple(self.bundles), self.init_bundle)
        return defn, SystemState(self.objects, self.next_id, tuple(self.log))


def apply_step(defn: SystemDef, state: SystemState,
               step: StepDescriptor) -> Tuple[SystemDef, SystemState]:
    """Apply one enabled step; returns the (possibly changed) definition and new state."""
    if step not in enabled_steps(defn, state):
        raise ValueError(f"step not enabled: {step}")
    w = _Work(defn, state)
    ams = next(a for a in state.objects[step.bundle][step.object] if a.id == step.call_id)
    actor = (step.bundle, step.object, ams.method, ams.id)

    if isinstance(step, ReturnStep):
        w.replace_ams(step.bundle, step.object, ams, None)
        callers = w.release(lambda e: e.call_id == ams.id, actor)
        subject = callers[0][0] if callers else ()
        w.emit(EventKind.Return, actor, subject)
        return w.result()

    method = defn.object(step.bundle, step.object).method(ams.method)
    edge = method.edges[step.edge]
    current = replace(ams, location=edge.dest, call_state=frozenset())
    w.replace_ams(step.bundle, step.object, ams, current)
    w.emit(EventKind.Step, actor, (edge.source, edge.dest))

    def actor_alive():
        return w.locate(ams.id) is not None

    for action in edge.actions:
        if isinstance(action, Call):
            target = w.bundle(action.bundle)
            obj = target.object(action.object) if target is not None else None
            callee = obj.method(action.method) if obj is not None else None
            if callee is None:
                raise MissingCallee(f"{action.bundle}/{action.object}.{action.method} does not exist")
            cid = w.next_id
            w.next_id += 1
            w.objects[action.bundle][action.object] |= {
                ActiveMethodState(action.method, callee.initial, cid)}
            # a caller that removed its own unit no longer waits for anything
            if actor_alive():
                b, o, cur = w.locate(ams.id)
                entry = CallEntry(action.method, cid, action.bundle, action.object)
                w.replace_ams(b, o, cur, replace(cur, call_state=cur.call_state | {entry}))
            w.emit(EventKind.Call, actor, (action.bundle, action.object, action.method, cid))
        elif isinstance(action, AddBundle):
            new = action.bundle
            if w.bundle(new.id) is not None:
                raise DuplicateBundle(f"bundle {new.id} already present")
            w.bundles.append(new)
            w.objects[new.id] = {o.id: frozenset() for o in new.objects}
            w.emit(EventKind.AddBundle, actor, (new.id,))
        elif isinstance(action, RemoveBundle):
            bid = action.bundle
            if w.bundle(bid) is None:
                raise MissingBundle(f"bundle {bid} not present")
            w.bundles = [b for b in w.bundles if b.id != bid]
            del w.objects[bid]
            w.emit(EventKind.RemoveBundle, actor, (bid,))
            w.abandon(lambda e: e.bundle == bid, actor, f"bundle {bid}")
        elif isinstance(action, CreateObject):
            bid, new = action.bundle, action.object
            b = w.bundle(bid)
            if b is None:
                raise MissingBundle(f"bundle {bid} not present")
            if b.object(new.id) is not None:
                raise DuplicateObject(f"object {new.id} already in bundle {bid}")
            w.bundles = [replace(x, objects=x.objects + (new,)) if x.id == bid else x
                         for x in w.bundles]
            w.objects[bid][new.id] = frozenset()
            w.emit(EventKind.CreateObject, actor, (bid, new.id))
        elif isinstance(action, DeleteObject):
            bid, oid = action.bundle, action.object
            b = w.bundle(bid)
            if b is None:
                raise MissingBundle(f"bundle {bid} not present")
            if b.object(oid) is None:
                raise MissingObject(f"object {oid} not in bundle {bid}")
            w.bundles = [replace(x, objects=tuple(o for o in x.objects if o.id != oid))
                         if x.id == bid else x for x in w.bundles]
            del w.objects[bid][oid]
            w.emit(EventKind.DeleteObject, actor, (bid, oid))
            w.abandon(lambda e: e.bundle == bid and e.object == oid, actor, f"object {bid}/{oid}")
        else:  # pragma: no cover
            raise TypeError(f"unknown action {action!r}")
    return w.result()


# --- drivers ---------------------------------------------------------------

@dataclass(frozen=True)
class SeededRandom:
    seed: int
    steps: int = 1000


@dataclass(frozen=True)
class ExhaustiveDepthBounded:
    depth: int


@dataclass(frozen=True)
class Script:
    steps: Tuple[StepDescriptor, ...]


Strategy = Union[SeededRandom, ExhaustiveDepthBounded, Script]


@dataclass
class RunResult:
    defn: SystemDef
    state: SystemState
    steps: List[StepDescriptor]

    @property
    def log(self) -> Tuple[TraceEvent, ...]:
        return self.state.log

    @property
    def finished(self) -> bool:
        return not any(True for _ in self.state.active())


@dataclass
class ExplorationSummary:
    """Outcome of enumerating every interleaving up to a depth.

    ``traces`` holds every maximal step sequence (ended because nothing was
    enabled, or because the depth was reached).
    """

    depth: int
    traces: List[Tuple[StepDescriptor, ...]] = field(default_factory=list)
    terminal: List[Tuple] = field(default_factory=list)
    blocked: List[Tuple] = field(default_factory=list)
    truncated: int = 0


def run(defn: SystemDef, strategy: Strategy) -> Union[RunResult, ExplorationSummary]:
    state = init_system(defn)
    if isinstance(strategy, SeededRandom):
        rng = random.Random(strategy.seed)
        taken = []
        for _ in range(strategy.steps):
            options = enabled_steps(defn, state)
            if not options:
                break
            step = options[rng.randrange(len(options))]
            defn, state = apply_step(defn, state, step)
            taken.append(step)
        return RunResult(defn, state, taken)
    if isinstance(strategy, Script):
        for k, step in enumerate(strategy.steps):
            if step not in enabled_steps(defn, state):
                raise ScriptStepDisabled(k, step)
            defn, state = apply_step(defn, state, step)
        return RunResult(defn, state, list(strategy.steps))
    if isinstance(strategy, ExhaustiveDepthBounded):
        return _explore(defn, state, strategy.depth)
    raise TypeError(f"unknown strategy {strategy!r}")


def _explore(defn: SystemDef, state: SystemState, depth: int) -> ExplorationSummary:
    summary = ExplorationSummary(depth)
    terminal, blocked = {}, {}
    stack = [(defn, state, ())]
    while stack:
        d, s, path = stack.pop()
        options = enabled_steps(d, s)
        if not options or len(path) >= depth:
            summary.traces.append(path)
            if options:
                summary.truncated += 1
            else:
                key = (d, s.configuration())
                if any(True for _ in s.active()):
                    blocked.setdefault(key, None)
                else:
                    terminal.setdefault(key, None)
            continue
        for step in reversed(options):
            nd, ns = apply_step(d, s, step)
            stack.append((nd, ns, path + (step,)))
    summary.terminal = list(terminal)
    summary.blocked = list(blocked)
    return summary


# --- runtime monitoring ----------------------------------------------------

@dataclass(frozen=True)
class MonitorVerdict:
    conformant: bool
    checked: int
    event: Optional[TraceEvent] = None
    locations: FrozenSet[str] = frozenset()

    def __bool__(self) -> bool:
        return self.conformant


def call_direction(aspect: str) -> Optional[str]:
    if "outgoing" in aspect:
        return "outgoing"
    if "incoming" in aspect:
        return "incoming"
    return None


def observed_calls(log: Iterable[TraceEvent], subject: Tuple[str, str],
                   direction: Optional[str]) -> List[TraceEvent]:
    """Call events leaving (``outgoing``) or reaching (``incoming``) the subject object."""
    out = []
    for ev in log:
        if ev.kind is not EventKind.Call:
            continue
        sent = ev.actor is not None and tuple(ev.actor[:2]) == tuple(subject)
        received = tuple(ev.subject[:2]) == tuple(subject)
        if (direction == "outgoing" and sent) or (direction == "incoming" and received) \
                or (direction is None and (sent or received)):
            out.append(ev)
    return out


def monitor(log: Sequence[TraceEvent], subject: Tuple[str, str],
            bt: BehavioralType) -> MonitorVerdict:
    """Check the subject's observed calls against ``bt``.

    Calls whose method name is outside the type's alphabet are ignored; the
    first call that drives every run of the completed automaton into its
    error location is reported.
    """
    direction = call_direction(bt.aspect)
    prefer = {"outgoing": LabelKind.CallOut, "incoming": LabelKind.CallIn}.get(direction)
    names = {lab.name for lab in bt.alphabet}
    total = complete(bt)
    succ = total.successors()
    current = frozenset([total.initial])
    checked = 0
    for ev in observed_calls(log, subject, direction):
        name = ev.subject[2]
        if name not in names:
            continue
        checked += 1
        labels = [lab for lab in bt.alphabet if lab.name == name]
        if prefer is not None and any(lab.kind is prefer for lab in labels):
            labels = [lab for lab in labels if lab.kind is prefer]
        nxt = frozenset(e.dest for loc in current for e in succ.get(loc, ())
                        if e.label in labels)
        live = nxt - {total.error_location}
        if not live:
            return MonitorVerdict(False, checked, ev, nxt)
        current = live
    return MonitorVerdict(True, checked, None, current)
