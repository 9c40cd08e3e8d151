"""In-process service registry with behavior-based discovery and protocol adaptation.

Services are registered with a list of interface names and a property
dictionary.  The ``"BEHAVIOR"`` property holds the behavioral types that
describe the service; discovery pairs a required type with every registered
model of the complementary aspect (``calls:outgoing`` <-> ``calls:incoming``)
and ranks the candidates by their analysis verdict.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .composition import AnalysisVerdict, ComponentSystem, analyze
from .core import BehavioralType, Edge, Label, LabelKind, validate
from .errors import InvalidBehaviorModel, NoCompatibleChoice, UnknownService
from .synthesis import DEFAULT_MAX_RULES, SynthesisStatus, synthesize

BEHAVIOR = "BEHAVIOR"

_PAIRS = {"calls:outgoing": "calls:incoming", "calls:incoming": "calls:outgoing"}


def complementary_aspect(aspect: str) -> Optional[str]:
    return _PAIRS.get(aspect)


@dataclass(frozen=True)
class ServiceRecord:
    service_id: int
    interfaces: Tuple[str, ...]
    properties: Mapping[str, object]
    owner: str

    @property
    def behavior(self) -> List[BehavioralType]:
        return list(self.properties.get(BEHAVIOR, ()))


@dataclass
class Match:
    record: ServiceRecord
    model: BehavioralType
    verdict: AnalysisVerdict

    @property
    def sort_key(self):
        return (not self.verdict.clean, self.verdict.witness_count, self.record.service_id)


def _check_properties(properties: Mapping[str, object]) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for key, value in properties.items():
        if key == BEHAVIOR:
            models = list(value)
            for k, m in enumerate(models):
                if not isinstance(m, BehavioralType):
                    raise InvalidBehaviorModel(f"BEHAVIOR[{k}] is not a behavioral type")
                problems = [p for p in validate(m) if not p.startswith("warning:")]
                if problems:
                    raise InvalidBehaviorModel(f"BEHAVIOR[{k}]: {problems[0]}", problems)
            out[key] = tuple(models)
        elif isinstance(value, (str, int, float)) and not isinstance(value, bool):
            out[key] = value
        else:
            raise TypeError(f"property {key!r}: only strings, numbers and {BEHAVIOR} are supported")
    return out


class ServiceRegistry:
    """Thread-safe registry; every public operation is atomic."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: Dict[int, ServiceRecord] = {}
        self._next_id = 1

    def register(self, owner: str, interfaces: Sequence[str],
                 properties: Optional[Mapping[str, object]] = None) -> int:
        props = _check_properties(properties or {})
        with self._lock:
            sid = self._next_id
            self._next_id += 1
            self._records[sid] = ServiceRecord(sid, tuple(interfaces), props, owner)
            return sid

    def unregister(self, service_id: int) -> None:
        with self._lock:
            if service_id not in self._records:
                raise UnknownService(service_id)
            del self._records[service_id]

    def unregister_owner(self, owner: str) -> List[int]:
        """Drop every service of a departing bundle."""
        with self._lock:
            gone = sorted(sid for sid, r in self._records.items() if r.owner == owner)
            for sid in gone:
                del self._records[sid]
            return gone

    def get(self, service_id: int) -> ServiceRecord:
        with self._lock:
            try:
                return self._records[service_id]
            except KeyError:
                raise UnknownService(service_id) from None

    def query(self, interface: Optional[str] = None,
              aspect: Optional[str] = None) -> List[ServiceRecord]:
        with self._lock:
            records = [self._records[k] for k in sorted(self._records)]
        if interface is not None:
            records = [r for r in records if interface in r.interfaces]
        if aspect is not None:
            records = [r for r in records if any(m.aspect == aspect for m in r.behavior)]
        return records

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def discover_compatible(self, required: BehavioralType,
                            interface: Optional[str] = None) -> List[Match]:
        """Rank every complementary BEHAVIOR model against ``required``.

        Each model is checked on its own in a two-component system; clean
        verdicts come first, then fewer witnesses, then lower service id.
        """
        problems = [p for p in validate(required) if not p.startswith("warning:")]
        if problems:
            raise InvalidBehaviorModel(f"required type: {problems[0]}", problems)
        wanted = complementary_aspect(required.aspect)
        matches = []
        for record in self.query(interface):
            for model in record.behavior:
                if wanted is not None and model.aspect != wanted:
                    continue
                system = pair_system(required, model, peer_name=f"service{record.service_id}")
                matches.append(Match(record, model, analyze(system)))
        matches.sort(key=lambda m: m.sort_key)
        return matches


def retarget(bt: BehavioralType, target: str) -> BehavioralType:
    """Point every CallOut label of ``bt`` at ``target``."""
    def conv(lab: Label) -> Label:
        if lab.kind is LabelKind.CallOut:
            return Label(lab.name, lab.kind, target)
        return lab

    return replace(bt, alphabet=frozenset(conv(lab) for lab in bt.alphabet),
                   edges=frozenset(Edge(e.source, conv(e.label), e.dest) for e in bt.edges))


def pair_system(own: BehavioralType, peer: BehavioralType, own_name: str = "own",
                peer_name: str = "peer") -> ComponentSystem:
    """Two-component system in which each side's outgoing calls address the other."""
    return ComponentSystem([(own_name, retarget(own, peer_name)),
                            (peer_name, retarget(peer, own_name))])


def adapt_protocol(own: BehavioralType, peer: BehavioralType,
                   max_rules: int = DEFAULT_MAX_RULES) -> Tuple[Label, ...]:
    """Pick which of ``own``'s initial alternatives to use when talking to ``peer``.

    Synthesizes priorities for the pair and returns the labels at ``own``'s
    initial location that survive them, ordered by label.  An empty tuple
    means no restriction is needed.
    """
    system = pair_system(own, peer)
    result = synthesize(system, max_rules)
    if result.status is not SynthesisStatus.Solved:
        raise NoCompatibleChoice(f"no priority assignment makes the pair compatible "
                                 f"({result.status.value})")
    if not result.rules:
        return ()
    rules = [r for r in result.rules if r.component == "own"]
    offered = {e.label for e in own.outgoing(own.initial)}
    surviving = {lab for lab in offered
                 if not any(r.lower.name == lab.name and r.lower.kind is lab.kind
                            and Label(r.higher.name, r.higher.kind) in offered for r in rules)}
    return tuple(sorted(surviving, key=lambda lab: lab.sort_key))
