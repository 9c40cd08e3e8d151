"""Canonical text format for every model kind.

Documents are JSON objects carrying ``format_version`` and ``kind`` followed by
the kind's own keys.  :func:`save` renders keys in a fixed order with
two-space indentation, sorted alphabets and edges, UTF-8 and a trailing
newline, so ``save(load(save(doc))) == save(doc)``.  Every load error carries
a 1-based line and column.

File extensions: ``.btype`` behavioral types, ``.bsys`` component systems,
``.osys`` OSGi system definitions, ``.bscript`` simulator scripts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import yaml

from .composition import AnalysisVerdict, ComponentSystem, Incompatibility, PriorityRule, TraceStep
from .core import BehavioralType, Edge, Label, LabelKind, validate
from .errors import ParseError, SchemaError, UnsupportedVersion
from .osgi import (AddBundle, BundleDef, Call, CreateObject, DeleteObject, EventKind,
                   ExecuteStep, MethodDef, MethodEdge, ObjectDef, RemoveBundle, ReturnStep, Script,
                   StepDescriptor, SystemDef, TraceEvent, validate_system)
from .synthesis import SynthesisResult, SynthesisStatus

FORMAT_VERSION = 1

KINDS = ("BehavioralType", "ComponentSystem", "SystemDef", "Script", "Verdict", "SynthesisResult")

EXTENSIONS = {".btype": "BehavioralType", ".bsys": "ComponentSystem", ".osys": "SystemDef",
              ".bscript": "Script"}


@dataclass
class ModelDocument:
    kind: str
    payload: Any
    format_version: int = FORMAT_VERSION
    comment: str = ""


# --- encoding --------------------------------------------------------------

def _label_json(lab: Label) -> Dict[str, Any]:
    d: Dict[str, Any] = {"name": lab.name, "kind": lab.kind.value}
    if lab.target is not None:
        d["target"] = lab.target
    return d


def _bt_body(bt: BehavioralType) -> Dict[str, Any]:
    by_name: Dict[str, int] = {}
    for lab in bt.alphabet:
        by_name[lab.name] = by_name.get(lab.name, 0) + 1

    def edge_label(lab: Label):
        if by_name.get(lab.name, 0) == 1 and lab in bt.alphabet:
            return lab.name
        return {"name": lab.name, "kind": lab.kind.value}

    body: Dict[str, Any] = {
        "aspect": bt.aspect,
        "alphabet": [_label_json(lab) for lab in bt.sorted_alphabet()],
        "locations": list(bt.locations),
        "initial": bt.initial,
    }
    if bt.error_location is not None:
        body["error_location"] = bt.error_location
    body["edges"] = [{"from": e.source, "label": edge_label(e.label), "to": e.dest}
                     for e in bt.sorted_edges()]
    return body


def _rule_json(rule: PriorityRule) -> Dict[str, Any]:
    return {"component": rule.component, "lower": _label_json(rule.lower),
            "higher": _label_json(rule.higher)}


def _action_json(a) -> Dict[str, Any]:
    if isinstance(a, Call):
        return {"op": "call", "bundle": a.bundle, "object": a.object, "method": a.method}
    if isinstance(a, AddBundle):
        return {"op": "add_bundle", "bundle": _bundle_json(a.bundle)}
    if isinstance(a, RemoveBundle):
        return {"op": "remove_bundle", "bundle": a.bundle}
    if isinstance(a, CreateObject):
        return {"op": "create_object", "bundle": a.bundle, "object": _object_json(a.object)}
    if isinstance(a, DeleteObject):
        return {"op": "delete_object", "bundle": a.bundle, "object": a.object}
    raise TypeError(f"unknown action {a!r}")


def _method_json(m: MethodDef) -> Dict[str, Any]:
    return {"name": m.name, "locations": list(m.locations), "initial": m.initial,
            "edges": [{"from": e.source, "to": e.dest, "actions": [_action_json(a) for a in e.actions]}
                      for e in m.edges]}


def _object_json(o: ObjectDef) -> Dict[str, Any]:
    return {"id": o.id, "methods": [_method_json(m) for m in o.methods]}


def _bundle_json(b: BundleDef) -> Dict[str, Any]:
    return {"id": b.id, "activator": b.activator, "objects": [_object_json(o) for o in b.objects]}


def step_json(s: StepDescriptor) -> Dict[str, Any]:
    if isinstance(s, ExecuteStep):
        return {"step": "execute", "bundle": s.bundle, "object": s.object,
                "call_id": s.call_id, "edge": s.edge}
    return {"step": "return", "bundle": s.bundle, "object": s.object, "call_id": s.call_id}


def _trace_json(trace: Sequence[TraceStep]) -> List[Dict[str, Any]]:
    return [{"label": t.label, "moves": [[c, d] for c, d in t.moves]} for t in trace]


def _verdict_body(v: AnalysisVerdict) -> Dict[str, Any]:
    return {
        "components": list(v.components),
        "complete": v.complete,
        "explored": v.explored,
        "terminal": [list(s) for s in v.terminal],
        "deadlocks": [{"state": list(s), "trace": _trace_json(v.traces.get(s, ()))}
                      for s in v.deadlocks],
        "incompatibilities": [{"state": list(w.state), "sender": w.sender,
                               "label": _label_json(w.label), "refuser": w.refuser,
                               "trace": _trace_json(v.traces.get(w.state, ()))}
                              for w in v.incompatibilities],
    }


def _body(doc: ModelDocument) -> Dict[str, Any]:
    p = doc.payload
    if doc.kind == "BehavioralType":
        return _bt_body(p)
    if doc.kind == "ComponentSystem":
        body: Dict[str, Any] = {"components": [{"name": n, "type": _bt_body(bt)}
                                               for n, bt in zip(p.names, p.types)]}
        if p.rules:
            body["priorities"] = [_rule_json(r) for r in p.rules]
        return body
    if doc.kind == "SystemDef":
        return {"init_bundle": p.init_bundle, "bundles": [_bundle_json(b) for b in p.bundles]}
    if doc.kind == "Script":
        return {"steps": [step_json(s) for s in p.steps]}
    if doc.kind == "Verdict":
        return _verdict_body(p)
    if doc.kind == "SynthesisResult":
        return {"status": p.status.value, "rules": [_rule_json(r) for r in p.rules],
                "residual": _verdict_body(p.residual)}
    raise ValueError(f"unknown document kind {doc.kind!r}")


def to_json(doc: ModelDocument) -> Dict[str, Any]:
    head: Dict[str, Any] = {"format_version": doc.format_version, "kind": doc.kind}
    if doc.comment:
        head["comment"] = doc.comment
    head.update(_body(doc))
    return head


def save(doc: ModelDocument) -> bytes:
    return (json.dumps(to_json(doc), indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def dumps(payload, comment: str = "") -> bytes:
    """Wrap a bare payload in a document of the matching kind and save it."""
    return save(ModelDocument(kind_of(payload), payload, comment=comment))


def kind_of(payload) -> str:
    if isinstance(payload, BehavioralType):
        return "BehavioralType"
    if isinstance(payload, ComponentSystem):
        return "ComponentSystem"
    if isinstance(payload, SystemDef):
        return "SystemDef"
    if isinstance(payload, Script):
        return "Script"
    if isinstance(payload, AnalysisVerdict):
        return "Verdict"
    if isinstance(payload, SynthesisResult):
        return "SynthesisResult"
    raise TypeError(f"no document kind for {type(payload).__name__}")


# --- decoding --------------------------------------------------------------

Path = Tuple[Union[str, int], ...]


def _positions(text: str) -> Dict[Path, Tuple[int, int]]:
    """Map JSON paths to 1-based (line, column) using a YAML node tree."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    out: Dict[Path, Tuple[int, int]] = {}

    def walk(node, path):
        out[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = k.value
                out[path + (key, "<key>")] = (k.start_mark.line + 1, k.start_mark.column + 1)
                walk(v, path + (key,))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))

    if root is not None:
        walk(root, ())
    return out


class _Reader:
    """Schema checking helper that reports positions for a path."""

    def __init__(self, positions):
        self.positions = positions

    def where(self, path: Path) -> Tuple[int, int]:
        p = tuple(path)
        while p:
            if p in self.positions:
                return self.positions[p]
            p = p[:-1]
        return self.positions.get((), (1, 1))

    def fail(self, path: Path, message: str):
        line, col = self.where(path)
        loc = "/".join(str(x) for x in path) or "<document>"
        raise SchemaError(f"{loc}: {message}", line, col)

    def obj(self, value, path, required: Sequence[str], optional: Sequence[str] = ()):
        if not isinstance(value, dict):
            self.fail(path, "expected an object")
        for key in value:
            if key not in required and key not in optional:
                line, col = self.positions.get(tuple(path) + (key, "<key>"), self.where(path))
                raise SchemaError(f"{'/'.join(map(str, path)) or '<document>'}: unknown key {key!r}",
                                  line, col)
        for key in required:
            if key not in value:
                self.fail(path, f"missing key {key!r}")
        return value

    def str(self, value, path, allow_empty=True) -> str:
        if not isinstance(value, str):
            self.fail(path, "expected a string")
        if not allow_empty and not value:
            self.fail(path, "expected a nonempty string")
        return value

    def int(self, value, path) -> int:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, "expected an integer")
        return value

    def bool(self, value, path) -> bool:
        if not isinstance(value, bool):
            self.fail(path, "expected a boolean")
        return value

    def list(self, value, path) -> list:
        if not isinstance(value, list):
            self.fail(path, "expected a list")
        return value

    def strs(self, value, path) -> List[str]:
        return [self.str(v, path + (i,)) for i, v in enumerate(self.list(value, path))]

    # domain pieces

    def label(self, value, path) -> Label:
        d = self.obj(value, path, ("name", "kind"), ("target",))
        name = self.str(d["name"], path + ("name",))
        kind_s = self.str(d["kind"], path + ("kind",))
        try:
            kind = LabelKind(kind_s)
        except ValueError:
            self.fail(path + ("kind",), f"unknown label kind {kind_s!r}")
        target = d.get("target")
        if target is not None:
            target = self.str(target, path + ("target",))
        return Label(name, kind, target)

    def behavioral_type(self, d, path, head=()) -> BehavioralType:
        self.obj(d, path, tuple(head) + ("aspect", "alphabet", "locations", "initial", "edges"),
                 ("comment", "error_location"))
        aspect = self.str(d["aspect"], path + ("aspect",))
        alphabet = [self.label(v, path + ("alphabet", i))
                    for i, v in enumerate(self.list(d["alphabet"], path + ("alphabet",)))]
        seen = set()
        for i, lab in enumerate(alphabet):
            if lab in seen:
                self.fail(path + ("alphabet", i), f"label {lab.name} ({lab.kind.value}) listed twice")
            seen.add(lab)
        by_name: Dict[str, List[Label]] = {}
        for lab in alphabet:
            by_name.setdefault(lab.name, []).append(lab)
        locations = self.strs(d["locations"], path + ("locations",))
        initial = self.str(d["initial"], path + ("initial",))
        error = d.get("error_location")
        if error is not None:
            error = self.str(error, path + ("error_location",))
        edges = []
        for i, e in enumerate(self.list(d["edges"], path + ("edges",))):
            ep = path + ("edges", i)
            self.obj(e, ep, ("from", "label", "to"))
            src = self.str(e["from"], ep + ("from",))
            dst = self.str(e["to"], ep + ("to",))
            raw = e["label"]
            if isinstance(raw, str):
                options = by_name.get(raw, [])
                if len(options) != 1:
                    self.fail(ep + ("label",), f"label {raw!r} is not declared exactly once "
                                               "in the alphabet; use {name, kind}")
                lab = options[0]
            else:
                lab = self.label(raw, ep + ("label",))
                lab = next((x for x in alphabet if x == lab), lab)
            edges.append(Edge(src, lab, dst))
        return BehavioralType(frozenset(alphabet), tuple(locations), initial, frozenset(edges),
                              aspect, error)

    def rule(self, value, path) -> PriorityRule:
        d = self.obj(value, path, ("component", "lower", "higher"))
        return PriorityRule(self.str(d["component"], path + ("component",)),
                            self.label(d["lower"], path + ("lower",)),
                            self.label(d["higher"], path + ("higher",)))

    def action(self, value, path):
        if not isinstance(value, dict) or "op" not in value:
            self.fail(path, "expected an action object with an 'op' key")
        op = value["op"]
        if op == "call":
            d = self.obj(value, path, ("op", "bundle", "object", "method"))
            return Call(self.str(d["method"], path + ("method",)),
                        self.str(d["object"], path + ("object",)),
                        self.str(d["bundle"], path + ("bundle",)))
        if op == "add_bundle":
            d = self.obj(value, path, ("op", "bundle"))
            return AddBundle(self.bundle(d["bundle"], path + ("bundle",)))
        if op == "remove_bundle":
            d = self.obj(value, path, ("op", "bundle"))
            return RemoveBundle(self.str(d["bundle"], path + ("bundle",)))
        if op == "create_object":
            d = self.obj(value, path, ("op", "bundle", "object"))
            return CreateObject(self.object(d["object"], path + ("object",)),
                                self.str(d["bundle"], path + ("bundle",)))
        if op == "delete_object":
            d = self.obj(value, path, ("op", "bundle", "object"))
            return DeleteObject(self.str(d["object"], path + ("object",)),
                                self.str(d["bundle"], path + ("bundle",)))
        self.fail(path + ("op",), f"unknown action {op!r}")

    def method(self, value, path) -> MethodDef:
        d = self.obj(value, path, ("name", "locations", "initial", "edges"))
        edges = []
        for i, e in enumerate(self.list(d["edges"], path + ("edges",))):
            ep = path + ("edges", i)
            self.obj(e, ep, ("from", "to", "actions"))
            actions = tuple(self.action(a, ep + ("actions", k))
                            for k, a in enumerate(self.list(e["actions"], ep + ("actions",))))
            edges.append(MethodEdge(self.str(e["from"], ep + ("from",)), actions,
                                    self.str(e["to"], ep + ("to",))))
        return MethodDef(self.str(d["name"], path + ("name",)),
                         tuple(self.strs(d["locations"], path + ("locations",))),
                         self.str(d["initial"], path + ("initial",)), tuple(edges))

    def object(self, value, path) -> ObjectDef:
        d = self.obj(value, path, ("id", "methods"))
        return ObjectDef(self.str(d["id"], path + ("id",)),
                         tuple(self.method(m, path + ("methods", i))
                               for i, m in enumerate(self.list(d["methods"], path + ("methods",)))))

    def bundle(self, value, path) -> BundleDef:
        d = self.obj(value, path, ("id", "activator", "objects"))
        return BundleDef(self.str(d["id"], path + ("id",)),
                         tuple(self.object(o, path + ("objects", i))
                               for i, o in enumerate(self.list(d["objects"], path + ("objects",)))),
                         self.str(d["activator"], path + ("activator",)))

    def step(self, value, path) -> StepDescriptor:
        if not isinstance(value, dict) or value.get("step") not in ("execute", "return"):
            self.fail(path, "expected a step with 'step': 'execute' or 'return'")
        if value["step"] == "execute":
            d = self.obj(value, path, ("step", "bundle", "object", "call_id", "edge"))
            return ExecuteStep(self.str(d["bundle"], path + ("bundle",)),
                               self.str(d["object"], path + ("object",)),
                               self.int(d["call_id"], path + ("call_id",)),
                               self.int(d["edge"], path + ("edge",)))
        d = self.obj(value, path, ("step", "bundle", "object", "call_id"))
        return ReturnStep(self.str(d["bundle"], path + ("bundle",)),
                          self.str(d["object"], path + ("object",)),
                          self.int(d["call_id"], path + ("call_id",)))

    def trace(self, value, path) -> Tuple[TraceStep, ...]:
        out = []
        for i, t in enumerate(self.list(value, path)):
            tp = path + (i,)
            self.obj(t, tp, ("label", "moves"))
            moves = []
            for k, mv in enumerate(self.list(t["moves"], tp + ("moves",))):
                pair = self.strs(mv, tp + ("moves", k))
                if len(pair) != 2:
                    self.fail(tp + ("moves", k), "expected [component, location]")
                moves.append((pair[0], pair[1]))
            out.append(TraceStep(self.str(t["label"], tp + ("label",)), tuple(moves)))
        return tuple(out)

    def verdict(self, d, path, head=()) -> AnalysisVerdict:
        self.obj(d, path, tuple(head) + ("components", "complete", "explored", "terminal",
                                         "deadlocks", "incompatibilities"), ("comment",))
        components = tuple(self.strs(d["components"], path + ("components",)))
        v = AnalysisVerdict(components, explored=self.int(d["explored"], path + ("explored",)),
                            complete=self.bool(d["complete"], path + ("complete",)))
        v.terminal = [tuple(self.strs(s, path + ("terminal", i)))
                      for i, s in enumerate(self.list(d["terminal"], path + ("terminal",)))]
        for i, item in enumerate(self.list(d["deadlocks"], path + ("deadlocks",))):
            ip = path + ("deadlocks", i)
            self.obj(item, ip, ("state", "trace"))
            s = tuple(self.strs(item["state"], ip + ("state",)))
            v.deadlocks.append(s)
            v.traces[s] = self.trace(item["trace"], ip + ("trace",))
        for i, item in enumerate(self.list(d["incompatibilities"], path + ("incompatibilities",))):
            ip = path + ("incompatibilities", i)
            self.obj(item, ip, ("state", "sender", "label", "refuser", "trace"))
            s = tuple(self.strs(item["state"], ip + ("state",)))
            v.incompatibilities.append(Incompatibility(
                s, self.str(item["sender"], ip + ("sender",)),
                self.label(item["label"], ip + ("label",)),
                self.str(item["refuser"], ip + ("refuser",))))
            v.traces[s] = self.trace(item["trace"], ip + ("trace",))
        return v


_HEAD = ("format_version", "kind")


def load(data: Union[bytes, str], check: bool = True) -> ModelDocument:
    """Parse a document.

    With ``check`` (the default) behavioral types must pass
    :func:`~behavtypes.core.validate` and systems their own validation; pass
    ``check=False`` to inspect invalid models.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", 1, exc.start + 1) from None
    else:
        text = data
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    r = _Reader(_positions(text))
    if not isinstance(raw, dict):
        r.fail((), "expected a document object")
    for key in _HEAD:
        if key not in raw:
            r.fail((), f"missing key {key!r}")
    version = raw["format_version"]
    if not isinstance(version, int) or isinstance(version, bool):
        r.fail(("format_version",), "expected an integer")
    if version != FORMAT_VERSION:
        line, col = r.where(("format_version",))
        raise UnsupportedVersion(f"format_version {version} is not supported "
                                 f"(expected {FORMAT_VERSION})", line, col)
    kind = raw["kind"]
    if kind not in KINDS:
        r.fail(("kind",), f"unknown kind {kind!r}")
    comment = raw.get("comment", "")
    if not isinstance(comment, str):
        r.fail(("comment",), "expected a string")

    if kind == "BehavioralType":
        payload = r.behavioral_type(raw, (), _HEAD)
        if check:
            problems = [p for p in validate(payload) if not p.startswith("warning:")]
            if problems:
                r.fail((), problems[0])
    elif kind == "ComponentSystem":
        r.obj(raw, (), _HEAD + ("components",), ("comment", "priorities"))
        comps = []
        for i, c in enumerate(r.list(raw["components"], ("components",))):
            cp = ("components", i)
            r.obj(c, cp, ("name", "type"))
            bt = r.behavioral_type(c["type"], cp + ("type",))
            if check:
                problems = [p for p in validate(bt) if not p.startswith("warning:")]
                if problems:
                    r.fail(cp + ("type",), problems[0])
            comps.append((r.str(c["name"], cp + ("name",), allow_empty=False), bt))
        names = [n for n, _ in comps]
        for i, n in enumerate(names):
            if names.index(n) != i:
                r.fail(("components", i, "name"), f"duplicate component name {n!r}")
        rules = [r.rule(x, ("priorities", i))
                 for i, x in enumerate(r.list(raw.get("priorities", []), ("priorities",)))]
        payload = ComponentSystem(comps, rules)
    elif kind == "SystemDef":
        r.obj(raw, (), _HEAD + ("init_bundle", "bundles"), ("comment",))
        payload = SystemDef(tuple(r.bundle(b, ("bundles", i))
                                  for i, b in enumerate(r.list(raw["bundles"], ("bundles",)))),
                            r.str(raw["init_bundle"], ("init_bundle",)))
        if check:
            problems = validate_system(payload)
            if problems:
                r.fail((), problems[0])
    elif kind == "Script":
        r.obj(raw, (), _HEAD + ("steps",), ("comment",))
        payload = Script(tuple(r.step(s, ("steps", i))
                               for i, s in enumerate(r.list(raw["steps"], ("steps",)))))
    elif kind == "Verdict":
        payload = r.verdict(raw, (), _HEAD)
    else:
        r.obj(raw, (), _HEAD + ("status", "rules", "residual"), ("comment",))
        try:
            status = SynthesisStatus(r.str(raw["status"], ("status",)))
        except ValueError:
            r.fail(("status",), f"unknown status {raw['status']!r}")
        rules = [r.rule(x, ("rules", i)) for i, x in enumerate(r.list(raw["rules"], ("rules",)))]
        residual = r.verdict(raw["residual"], ("residual",))
        payload = SynthesisResult(status, rules, residual)
    return ModelDocument(kind, payload, version, comment)


def load_path(path, check: bool = True) -> ModelDocument:
    with open(path, "rb") as fh:
        return load(fh.read(), check)


def load_type(path) -> BehavioralType:
    doc = load_path(path)
    if doc.kind != "BehavioralType":
        raise SchemaError(f"{path}: expected a BehavioralType document, got {doc.kind}")
    return doc.payload


# --- event logs (one JSON record per line) ---------------------------------

def event_json(ev: TraceEvent) -> str:
    rec: Dict[str, Any] = {"seq": ev.seq, "kind": ev.kind.value,
                           "actor": list(ev.actor) if ev.actor is not None else None,
                           "subject": list(ev.subject)}
    if ev.note:
        rec["note"] = ev.note
    return json.dumps(rec, ensure_ascii=False)


def dump_log(events: Iterable[TraceEvent]) -> str:
    return "".join(event_json(ev) + "\n" for ev in events)


def load_log(text: str) -> List[TraceEvent]:
    events = []
    last = -1
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, lineno, exc.colno) from None
        try:
            actor = rec["actor"]
            ev = TraceEvent(int(rec["seq"]), EventKind(rec["kind"]),
                            tuple(actor) if actor is not None else None,
                            tuple(rec["subject"]), rec.get("note", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed event record: {exc}", lineno, 1) from None
        if ev.seq <= last:
            raise SchemaError("event sequence numbers must increase", lineno, 1)
        last = ev.seq
        events.append(ev)
    return events
