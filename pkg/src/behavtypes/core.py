"""Behavioral types: labeled automata describing one aspect of a component.

A behavioral type is a tuple ``(alphabet, locations, initial, edges)`` plus an
aspect string (``"calls:outgoing"``, ``"calls:incoming"``, ...) and an optional
error location.  Every operation in this module is a pure function returning
new values; inputs are never mutated.

The comparison pipeline is ``project -> complete -> minimize -> normalize ->
equals``.  For minimization the error location is the only rejecting location;
all other locations accept.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import AlphabetTooSmall, KeepNotSubset, NotComplete, NotDeterministic

ERROR_LOCATION = "__error"
TAU_NAME = "tau"


class LabelKind(enum.Enum):
    CallOut = "CallOut"
    CallIn = "CallIn"
    CreateObject = "CreateObject"
    DeleteObject = "DeleteObject"
    AddBundle = "AddBundle"
    RemoveBundle = "RemoveBundle"
    Internal = "Internal"
    Tau = "Tau"

    @property
    def order(self) -> int:
        return _KIND_ORDER[self]


_KIND_ORDER = {kind: i for i, kind in enumerate(LabelKind)}


@dataclass(frozen=True)
class Label:
    """An alphabet symbol.  Identity is ``(name, kind)``; ``target`` is metadata."""

    name: str
    kind: LabelKind = LabelKind.Internal
    target: Optional[str] = field(default=None, compare=False, hash=False)

    @property
    def sort_key(self) -> Tuple[str, int]:
        return (self.name, self.kind.order)

    def __lt__(self, other: "Label") -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return self.name


TAU = Label(TAU_NAME, LabelKind.Tau)


def call_out(name: str, target: Optional[str] = None) -> Label:
    return Label(name, LabelKind.CallOut, target)


def call_in(name: str) -> Label:
    return Label(name, LabelKind.CallIn)


@dataclass(frozen=True)
class Edge:
    source: str
    label: Label
    dest: str


@dataclass(frozen=True)
class BehavioralType:
    alphabet: FrozenSet[Label]
    locations: Tuple[str, ...]
    initial: str
    edges: FrozenSet[Edge]
    aspect: str = ""
    error_location: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "edges", frozenset(self.edges))

    @classmethod
    def build(cls, alphabet: Iterable[Label], locations: Iterable[str], initial: str,
              edges: Iterable[Tuple[str, Label, str]], aspect: str = "",
              error_location: Optional[str] = None) -> "BehavioralType":
        """Convenience constructor taking edges as plain triples."""
        return cls(frozenset(alphabet), tuple(locations), initial,
                   frozenset(Edge(s, lab, d) for s, lab, d in edges),
                   aspect, error_location)

    def outgoing(self, location: str) -> List[Edge]:
        return sorted((e for e in self.edges if e.source == location), key=_edge_local_key)

    def successors(self) -> Dict[str, List[Edge]]:
        out: Dict[str, List[Edge]] = {}
        for e in self.edges:
            out.setdefault(e.source, []).append(e)
        for edges in out.values():
            edges.sort(key=_edge_local_key)
        return out

    def sorted_alphabet(self) -> List[Label]:
        return sorted(self.alphabet, key=lambda lab: lab.sort_key)

    def sorted_edges(self) -> List[Edge]:
        """Edges ordered by (source position, label name, label kind, dest position)."""
        index = {loc: i for i, loc in enumerate(self.locations)}
        n = len(index)

        def key(e: Edge):
            return (index.get(e.source, n), e.source, e.label.sort_key,
                    index.get(e.dest, n), e.dest)

        return sorted(self.edges, key=key)

    def label_by_name(self, name: str) -> List[Label]:
        return sorted((lab for lab in self.alphabet if lab.name == name),
                      key=lambda lab: lab.sort_key)

    def is_deterministic(self) -> bool:
        seen = set()
        for e in self.edges:
            key = (e.source, e.label)
            if key in seen:
                return False
            seen.add(key)
        return True

    def reachable_locations(self) -> List[str]:
        succ = self.successors()
        order = [self.initial]
        seen = {self.initial}
        queue = deque(order)
        while queue:
            loc = queue.popleft()
            for e in succ.get(loc, ()):
                if e.dest not in seen:
                    seen.add(e.dest)
                    order.append(e.dest)
                    queue.append(e.dest)
        return order


def _edge_local_key(e: Edge):
    return (e.label.sort_key, e.dest)


@dataclass(frozen=True)
class Difference:
    """Why two behavioral types differ.

    ``left``/``right`` are the corresponding locations in each operand (None for
    alphabet-level differences).
    """

    left: Optional[str]
    right: Optional[str]
    label: Optional[Label]
    reason: str

    def __str__(self) -> str:
        parts = []
        if self.left is not None:
            parts.append(f"at ({self.left}, {self.right})")
        if self.label is not None:
            parts.append(f"on label {self.label.name}")
        return f"{' '.join(parts)}: {self.reason}" if parts else self.reason


@dataclass(frozen=True)
class EqualityResult:
    equal: bool
    mapping: Mapping[str, str]
    first_difference: Optional[Difference] = None

    def __bool__(self) -> bool:
        return self.equal


class ProjectionMode(enum.Enum):
    Delete = "Delete"
    Tau = "Tau"


def validate(bt: BehavioralType) -> List[str]:
    """Return one description per violated invariant (empty when valid).

    Entries starting with ``"warning:"`` flag legal but degenerate input.
    """
    problems: List[str] = []
    locs = set(bt.locations)
    if len(locs) != len(bt.locations):
        seen = set()
        for loc in bt.locations:
            if loc in seen:
                problems.append(f"location {loc} declared twice")
            seen.add(loc)
    for lab in bt.sorted_alphabet():
        if lab.kind is LabelKind.Tau:
            if lab.name != TAU_NAME:
                problems.append(f"tau label must be named {TAU_NAME!r}, got {lab.name!r}")
        elif not lab.name:
            problems.append(f"label of kind {lab.kind.value} has an empty name")
    if bt.initial not in locs:
        problems.append(f"initial location {bt.initial} not in locations")
    for e in bt.sorted_edges():
        if e.source not in locs:
            problems.append(f"edge source {e.source} not in locations")
        if e.dest not in locs:
            problems.append(f"edge destination {e.dest} not in locations")
        if e.label not in bt.alphabet:
            problems.append(f"edge label {e.label.name} ({e.label.kind.value}) not in alphabet")
    if bt.error_location is not None:
        if bt.error_location not in locs:
            problems.append(f"error location {bt.error_location} not in locations")
        for e in bt.sorted_edges():
            if e.source == bt.error_location and e.dest != bt.error_location:
                problems.append(f"error location {bt.error_location} has outgoing edge "
                                f"{e.label.name} to {e.dest}")
        if bt.error_location == bt.initial:
            problems.append("warning: initial location is the error location")
    return problems


def is_valid(bt: BehavioralType) -> bool:
    return not [p for p in validate(bt) if not p.startswith("warning:")]


def prune(bt: BehavioralType) -> BehavioralType:
    """Drop locations (and their edges) not reachable from the initial location."""
    keep = set(bt.reachable_locations())
    locations = tuple(loc for loc in bt.locations if loc in keep)
    edges = frozenset(e for e in bt.edges if e.source in keep)
    error = bt.error_location if bt.error_location in keep else None
    return replace(bt, locations=locations, edges=edges, error_location=error)


def project(bt: BehavioralType, keep: Iterable[Label],
            mode: ProjectionMode = ProjectionMode.Delete) -> BehavioralType:
    """Restrict ``bt`` to the labels in ``keep``.

    Edges with other labels are deleted (``Delete``) or relabeled ``tau``
    (``Tau``); unreachable locations are pruned afterwards.
    """
    keep = frozenset(keep)
    extra = keep - bt.alphabet
    if extra:
        names = ", ".join(lab.name for lab in sorted(extra, key=lambda x: x.sort_key))
        raise KeepNotSubset(f"labels not in alphabet: {names}")
    if mode is ProjectionMode.Delete:
        edges = frozenset(e for e in bt.edges if e.label in keep)
        alphabet = keep
    else:
        edges = frozenset(e if e.label in keep else Edge(e.source, TAU, e.dest)
                          for e in bt.edges)
        alphabet = keep | {TAU}
    return prune(replace(bt, alphabet=alphabet, edges=edges))


def complete(bt: BehavioralType, full_alphabet: Optional[Iterable[Label]] = None) -> BehavioralType:
    """Make ``bt`` total over ``full_alphabet`` by routing missing labels to an error sink."""
    full = bt.alphabet if full_alphabet is None else frozenset(full_alphabet)
    missing = bt.alphabet - full
    if missing:
        names = ", ".join(lab.name for lab in sorted(missing, key=lambda x: x.sort_key))
        raise AlphabetTooSmall(f"full alphabet lacks: {names}")
    error = bt.error_location
    locations = list(bt.locations)
    if error is None:
        error = ERROR_LOCATION
        taken = set(locations)
        suffix = 1
        while error in taken:
            error = f"{ERROR_LOCATION}{suffix}"
            suffix += 1
        locations.append(error)
    elif error not in locations:
        locations.append(error)
    present = {(e.source, e.label) for e in bt.edges}
    added = []
    ordered = sorted(full, key=lambda lab: lab.sort_key)
    for loc in locations:
        for lab in ordered:
            if (loc, lab) not in present:
                added.append(Edge(loc, lab, error))
    return replace(bt, alphabet=full, locations=tuple(locations),
                   edges=bt.edges | frozenset(added), error_location=error)


def is_complete(bt: BehavioralType) -> bool:
    present = {(e.source, e.label) for e in bt.edges}
    return all((loc, lab) in present for loc in bt.locations for lab in bt.alphabet)


def minimize(bt: BehavioralType) -> BehavioralType:
    """Merge language-equivalent locations of a deterministic, complete automaton.

    Uses Moore-style partition refinement starting from the split
    {error location} / {everything else}.  The result is normalized.
    """
    if not bt.is_deterministic():
        raise NotDeterministic("minimize requires a deterministic automaton")
    if not is_complete(bt):
        raise NotComplete("minimize requires a complete automaton; call complete() first")
    bt = prune(bt)
    labels = bt.sorted_alphabet()
    delta = {(e.source, e.label): e.dest for e in bt.edges}
    block = {loc: int(loc == bt.error_location) for loc in bt.locations}
    n_blocks = len(set(block.values()))
    while True:
        signatures: Dict[Tuple, int] = {}
        refined = {}
        for loc in bt.locations:
            sig = (block[loc],) + tuple(block[delta[(loc, lab)]] for lab in labels)
            refined[loc] = signatures.setdefault(sig, len(signatures))
        block = refined
        if len(signatures) == n_blocks:
            break
        n_blocks = len(signatures)

    rep: Dict[int, str] = {}
    for loc in bt.locations:
        rep.setdefault(block[loc], loc)
    names = {b: f"b{b}" for b in rep}
    edges = frozenset(Edge(names[b], lab, names[block[delta[(loc, lab)]]])
                      for b, loc in rep.items() for lab in labels)
    error = names[block[bt.error_location]] if bt.error_location is not None else None
    merged = replace(bt, locations=tuple(names[b] for b in sorted(rep)),
                     initial=names[block[bt.initial]], edges=edges, error_location=error)
    return normalize(merged)


def canonical_renaming(bt: BehavioralType) -> Dict[str, str]:
    """Map every location id (declared or referenced) to its canonical ``q<i>`` name.

    Breadth-first from the initial location, following outgoing edges ordered
    by (label name, label kind, destination id); locations not reached are
    appended in declaration order.
    """
    succ = bt.successors()
    order: List[str] = [bt.initial]
    seen = {bt.initial}
    queue = deque(order)

    def visit(start):
        queue.append(start)
        while queue:
            loc = queue.popleft()
            for e in succ.get(loc, ()):
                if e.dest not in seen:
                    seen.add(e.dest)
                    order.append(e.dest)
                    queue.append(e.dest)

    visit(bt.initial)
    queue.clear()
    stragglers = list(bt.locations) + sorted({e.source for e in bt.edges} | {e.dest for e in bt.edges})
    for loc in stragglers:
        if loc not in seen:
            seen.add(loc)
            order.append(loc)
            visit(loc)
    return {loc: f"q{i}" for i, loc in enumerate(order)}


def rename_locations(bt: BehavioralType, mapping: Mapping[str, str]) -> BehavioralType:
    def r(loc):
        return mapping.get(loc, loc)

    return replace(
        bt,
        locations=tuple(r(loc) for loc in bt.locations),
        initial=r(bt.initial),
        edges=frozenset(Edge(r(e.source), e.label, r(e.dest)) for e in bt.edges),
        error_location=None if bt.error_location is None else r(bt.error_location),
    )


def normalize(bt: BehavioralType) -> BehavioralType:
    """Canonical location names and order.

    Independent of the input's location names when ``bt`` is deterministic;
    with several same-label successors the tie breaks on the original ids.
    """
    mapping = canonical_renaming(bt)
    out = rename_locations(bt, mapping)
    rank = {name: int(name[1:]) for name in mapping.values()}
    return replace(out, locations=tuple(sorted(out.locations, key=lambda q: rank.get(q, -1))))


def equals(a: BehavioralType, b: BehavioralType,
           compare_location_names: bool = False) -> EqualityResult:
    """Structural equality of normal forms, with a location mapping as witness.

    Within one location pair, labels present on only one side are reported
    before same-name labels whose kind or successor disagrees.
    """
    ra, rb = canonical_renaming(a), canonical_renaming(b)
    inv_b = {q: loc for loc, q in rb.items()}
    na, nb = normalize(a), normalize(b)
    succ_a, succ_b = na.successors(), nb.successors()

    mapping: Dict[str, str] = {}
    for loc, q in ra.items():
        if q in inv_b:
            mapping[loc] = inv_b[q]
    inv_a = {q: loc for loc, q in ra.items()}

    def diff(qa, qb, label, reason):
        return EqualityResult(False, {}, Difference(inv_a.get(qa), inv_b.get(qb), label, reason))

    for q in [loc for loc in na.reachable_locations()]:
        ea = succ_a.get(q, [])
        eb = succ_b.get(q, [])
        names_a = {e.label.name for e in ea}
        names_b = {e.label.name for e in eb}
        only = sorted(names_a ^ names_b)
        if only:
            name = only[0]
            side = ea if name in names_a else eb
            lab = next(e.label for e in side if e.label.name == name)
            which = "first" if name in names_a else "second"
            return diff(q, q, lab, f"only the {which} operand offers it")
        ka = [(e.label.sort_key, e.dest) for e in ea]
        kb = [(e.label.sort_key, e.dest) for e in eb]
        if ka != kb:
            for (la, da), (lb, db), e in zip(ka, kb, ea):
                if (la, da) != (lb, db):
                    reason = ("label kinds differ" if la != lb
                              else f"successors differ ({inv_a.get(da)} vs {inv_b.get(db)})")
                    return diff(q, q, e.label, reason)
            longer = ea if len(ea) > len(eb) else eb
            return diff(q, q, longer[min(len(ea), len(eb))].label, "edge multiplicity differs")

    if na.edges != nb.edges:
        extra = sorted(na.edges ^ nb.edges, key=lambda e: (e.source, e.label.sort_key, e.dest))
        e = extra[0]
        return diff(e.source, e.source, e.label, "unreachable edges differ")
    if na.alphabet != nb.alphabet:
        lab = sorted(na.alphabet ^ nb.alphabet, key=lambda x: x.sort_key)[0]
        side = "first" if lab in na.alphabet else "second"
        return EqualityResult(False, {}, Difference(None, None, lab,
                                                    f"label only declared by the {side} operand"))
    if compare_location_names:
        for loc in sorted(mapping, key=lambda x: ra[x]):
            if mapping[loc] != loc:
                return EqualityResult(False, {}, Difference(loc, mapping[loc], None,
                                                            "location names differ"))
    return EqualityResult(True, mapping)


def direction_free(bt: BehavioralType) -> BehavioralType:
    """Identify a call with its counterpart: CallIn labels become CallOut, targets dropped.

    A method call is one artifact whether seen from the caller or the callee,
    so refinement compares the two views on equal footing.
    """
    def conv(lab: Label) -> Label:
        if lab.kind in (LabelKind.CallIn, LabelKind.CallOut):
            return Label(lab.name, LabelKind.CallOut)
        return Label(lab.name, lab.kind)

    return replace(bt, alphabet=frozenset(conv(lab) for lab in bt.alphabet),
                   edges=frozenset(Edge(e.source, conv(e.label), e.dest) for e in bt.edges))


def comparison_form(bt: BehavioralType, considered: Iterable[Label]) -> BehavioralType:
    """``normalize . minimize . complete . project`` onto ``considered``."""
    considered = frozenset(considered)
    kept = project(bt, considered & bt.alphabet, ProjectionMode.Delete)
    return normalize(minimize(complete(kept, considered)))


def refines(impl: BehavioralType, spec: BehavioralType,
            considered: Optional[Iterable] = None) -> EqualityResult:
    """Compare ``impl`` against ``spec`` restricted to the considered artifacts.

    ``considered`` holds label names or Labels (only the name is used); the
    default is every name either type uses.  Call labels are compared without
    direction (see :func:`direction_free`).
    """
    di, ds = direction_free(impl), direction_free(spec)
    universe = di.alphabet | ds.alphabet
    if considered is None:
        labels = universe
    else:
        names = {c.name if isinstance(c, Label) else str(c) for c in considered}
        labels = frozenset(lab for lab in universe if lab.name in names)
        unknown = names - {lab.name for lab in labels}
        if unknown:
            raise KeepNotSubset(f"considered labels used by neither type: {', '.join(sorted(unknown))}")
    return equals(comparison_form(di, labels), comparison_form(ds, labels), False)


def run_word(bt: BehavioralType, word: Sequence[Label]) -> FrozenSet[str]:
    """Set of locations reachable by reading ``word`` (empty set = stuck)."""
    succ = bt.successors()
    current = frozenset([bt.initial])
    for lab in word:
        current = frozenset(e.dest for loc in current for e in succ.get(loc, ()) if e.label == lab)
        if not current:
            break
    return current
