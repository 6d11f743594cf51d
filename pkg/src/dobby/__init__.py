"""Conversational tour-guide robot runtime.

A chat agent plans multi-step robot behavior through function calls; free-form
action strings are grounded to a fixed registry by embedding similarity,
validated and reordered against a symbolic world model, and executed
non-blockingly on a deterministic simulator with live cancellation.
"""
from .chat import ChatMessage, FunctionCall, FunctionDef, HistoryBuffer
from .correction import Corrected, NotCapable, reorder_plan
from .engine import AgentConfig, AgentEngine, compose_prompt
from .events import AgentEvent
from .executor import Executor
from .grounding import (
    Grounded,
    RegistryGrounder,
    TrigramEmbeddingProvider,
    Unmatched,
    cosine_similarity,
    ground_action,
    ground_plan,
)
from .session import Session, SessionConfig, SessionMetrics
from .sim import Destination, Pose, SimWorld, build_registry, load_destinations
from .world import (
    ActionRegistry,
    ActionSpec,
    Literal,
    PlanCheck,
    Predicate,
    WorldState,
    apply,
    check_plan,
    is_applicable,
    make_action,
)

__version__ = "0.1.0"

__all__ = [
    "ActionRegistry",
    "ActionSpec",
    "AgentConfig",
    "AgentEngine",
    "AgentEvent",
    "ChatMessage",
    "Corrected",
    "Destination",
    "Executor",
    "FunctionCall",
    "FunctionDef",
    "Grounded",
    "HistoryBuffer",
    "Literal",
    "NotCapable",
    "PlanCheck",
    "Pose",
    "Predicate",
    "RegistryGrounder",
    "Session",
    "SessionConfig",
    "SessionMetrics",
    "SimWorld",
    "TrigramEmbeddingProvider",
    "Unmatched",
    "WorldState",
    "apply",
    "build_registry",
    "check_plan",
    "compose_prompt",
    "cosine_similarity",
    "ground_action",
    "ground_plan",
    "is_applicable",
    "load_destinations",
    "make_action",
    "reorder_plan",
]
