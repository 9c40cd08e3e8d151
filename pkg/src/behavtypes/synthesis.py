"""Search for priority rules that remove every deadlock and incompatibility.

The search is explicit and bounded: candidate rules come from the locations
visited by the shortest witness traces, and rule sets are tried in order of
increasing size (iterative deepening), lexicographically within one size.
The first rule set whose restricted system analyzes clean is returned.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .composition import (DEFAULT_BOUND, AnalysisVerdict, ComponentSystem, PriorityRule,
                          analyze, apply_priorities, replay)

DEFAULT_MAX_RULES = 4


class SynthesisStatus(enum.Enum):
    Solved = "Solved"
    Unsolvable = "Unsolvable"
    BoundExceeded = "BoundExceeded"


@dataclass
class SynthesisResult:
    status: SynthesisStatus
    rules: List[PriorityRule]
    residual: AnalysisVerdict
    original: Optional[AnalysisVerdict] = None
    candidates: List[PriorityRule] = field(default_factory=list)
    tried: int = 0

    @property
    def solved(self) -> bool:
        return self.status is SynthesisStatus.Solved


def candidate_rules(system: ComponentSystem, verdict: AnalysisVerdict) -> List[PriorityRule]:
    """Ordered label pairs at every choice point along the witness traces.

    A choice point is a (component, location) on a shortest trace, including
    the reported state itself, where the component offers edges with at least
    two distinct labels.
    """
    bad = list(dict.fromkeys(list(verdict.deadlocks) + [w.state for w in verdict.incompatibilities]))
    base = system.without_rules()
    visited = set()
    for s in bad:
        trace = verdict.traces.get(s, ())
        for k in range(len(trace) + 1):
            state = replay(base, trace[:k])
            for i, loc in enumerate(state):
                visited.add((i, loc))
    found = set()
    for i, loc in visited:
        labels = sorted({e.label for e in system.outgoing(i, loc)}, key=lambda x: x.sort_key)
        if len(labels) < 2:
            continue
        for lower, higher in itertools.permutations(labels, 2):
            found.add(PriorityRule(system.names[i], lower, higher))
    return sorted(found, key=lambda r: r.sort_key)


def _contradictory(rules: Sequence[PriorityRule]) -> bool:
    seen = {(r.component, r.lower, r.higher) for r in rules}
    return any((r.component, r.higher, r.lower) in seen for r in rules)


def synthesize(system: ComponentSystem, max_rules: int = DEFAULT_MAX_RULES,
               bound: Optional[int] = DEFAULT_BOUND) -> SynthesisResult:
    if max_rules < 0:
        raise ValueError("max_rules must be >= 0")
    original = analyze(system, bound)
    if original.clean:
        return SynthesisResult(SynthesisStatus.Solved, [], original, original)
    candidates = candidate_rules(system, original)
    tried = 0
    residual = original
    for size in range(1, min(max_rules, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            if _contradictory(combo):
                continue
            tried += 1
            verdict = analyze(apply_priorities(system, combo), bound)
            if verdict.clean:
                return SynthesisResult(SynthesisStatus.Solved, list(combo), verdict, original,
                                       candidates, tried)
    status = (SynthesisStatus.BoundExceeded if len(candidates) > max_rules
              else SynthesisStatus.Unsolvable)
    return SynthesisResult(status, [], residual, original, candidates, tried)


def _describe_state(components: Sequence[str], state) -> str:
    return "(" + ", ".join(f"{c}={loc}" for c, loc in zip(components, state)) + ")"


def explain(result: SynthesisResult) -> str:
    lines = [f"status: {result.status.value}"]
    orig = result.original
    if orig is not None:
        lines.append(f"original system: {len(orig.deadlocks)} deadlock(s), "
                     f"{len(orig.incompatibilities)} incompatibilit"
                     f"{'y' if len(orig.incompatibilities) == 1 else 'ies'}, "
                     f"{orig.explored} state(s) explored")
    if result.status is SynthesisStatus.Solved:
        if not result.rules:
            lines.append("no priorities needed: the system is already clean")
        else:
            lines.append("priorities:")
            for r in result.rules:
                lines.append(f"  {r}   (prefer {r.higher.name} over {r.lower.name} in {r.component})")
        if orig is not None and result.rules:
            lines.append("eliminated:")
            for s in orig.deadlocks:
                trace = " -> ".join(str(t) for t in orig.traces.get(s, ())) or "<initial>"
                lines.append(f"  deadlock {_describe_state(orig.components, s)} via {trace}")
            for w in orig.incompatibilities:
                trace = " -> ".join(str(t) for t in orig.traces.get(w.state, ())) or "<initial>"
                lines.append(f"  incompatibility: {w.sender} calls {w.label.name}, refused by "
                             f"{w.refuser} at {_describe_state(orig.components, w.state)} via {trace}")
    elif result.status is SynthesisStatus.Unsolvable:
        lines.append(f"candidate rules exhausted ({len(result.candidates)} candidate(s), "
                     f"{result.tried} rule set(s) tried); no priority assignment removes the conflicts")
    else:
        lines.append(f"rule budget reached with {len(result.candidates)} candidate(s) "
                     f"({result.tried} rule set(s) tried); raise max_rules to search further")
    return "\n".join(lines) + "\n"
