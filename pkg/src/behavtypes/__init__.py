"""Automata-based behavioral types for dynamically reconfigurable components."""
from .composition import (AnalysisVerdict, ComponentSystem, Incompatibility, JointTransition,
                          PriorityRule, TraceStep, analyze, apply_priorities, check_compatibility,
                          detect_deadlocks, enabled, reachable, replay)
from .core import (TAU, BehavioralType, Difference, Edge, EqualityResult, Label, LabelKind,
                   ProjectionMode, call_in, call_out, complete, equals, minimize, normalize,
                   project, refines, validate)
from .registry import ServiceRegistry, adapt_protocol
from .synthesis import SynthesisResult, SynthesisStatus, explain, synthesize

__version__ = "0.1.0"
