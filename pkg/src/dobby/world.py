"""Symbolic world model: predicates, states, and actions with add/delete effects.

States are immutable fact sets. Actions carry positive/negative precondition
literals, added atoms, and delete patterns (an exact atom or a trailing
``prefix:*`` wildcard that clears every atom under that prefix).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PreconditionError

WILDCARD_SUFFIX = ":*"


def canonicalize(text: str) -> str:
    """Normalize an atom: lowercase, inner whitespace runs become ``_``."""
    return "_".join(text.strip().lower().split())


@dataclass(frozen=True, order=True)
class Predicate:
    """An atomic boolean fact, e.g. ``robot_at:apple_table``."""

    atom: str

    def __post_init__(self):
        canonical = canonicalize(self.atom)
        if not canonical:
            raise ValueError("predicate atom must be nonempty")
        object.__setattr__(self, "atom", canonical)

    def __str__(self) -> str:
        return self.atom


@dataclass(frozen=True)
class Literal:
    """A predicate with polarity; negative literals require absence."""

    predicate: Predicate
    positive: bool = True

    @classmethod
    def pos(cls, atom: str) -> "Literal":
        return cls(Predicate(atom), True)

    @classmethod
    def neg(cls, atom: str) -> "Literal":
        return cls(Predicate(atom), False)


@dataclass(frozen=True)
class WorldState:
    """An immutable set of true facts."""

    facts: frozenset[Predicate] = frozenset()

    @classmethod
    def of(cls, *atoms: str) -> "WorldState":
        return cls(frozenset(Predicate(a) for a in atoms))

    def holds(self, predicate: Predicate) -> bool:
        return predicate in self.facts

    def satisfies(self, literal: Literal) -> bool:
        present = literal.predicate in self.facts
        return present if literal.positive else not present

    def atoms(self) -> set[str]:
        return {p.atom for p in self.facts}

    def retract_matching(self, pattern: str) -> "WorldState":
        """Remove every fact matched by an exact atom or ``prefix:*`` pattern."""
        keep = frozenset(p for p in self.facts if not _pattern_matches(pattern, p.atom))
        return WorldState(keep)


def _pattern_matches(pattern: str, atom: str) -> bool:
    if pattern.endswith(WILDCARD_SUFFIX):
        return atom.startswith(pattern[: -len(WILDCARD_SUFFIX)] + ":")
    return atom == pattern


@dataclass(frozen=True)
class ActionSpec:
    """A titled action: precondition literals, added atoms, delete patterns.

    ``behavior`` names the simulated activity the executor runs for this
    action; the symbolic layer treats it as opaque.
    """

    title: str
    preconditions: frozenset[Literal] = frozenset()
    adds: frozenset[Predicate] = frozenset()
    deletes: frozenset[str] = frozenset()
    behavior: str = ""

    def __post_init__(self):
        if not self.title.strip():
            raise ValueError("action title must be nonempty")
        object.__setattr__(
            self,
            "deletes",
            frozenset(
                d if d.endswith(WILDCARD_SUFFIX) else canonicalize(d)
                for d in self.deletes
            ),
        )
        exact = {d for d in self.deletes if not d.endswith(WILDCARD_SUFFIX)}
        clash = {p.atom for p in self.adds} & exact
        if clash:
            raise ValueError(f"atoms in both adds and exact deletes: {sorted(clash)}")


def make_action(
    title: str,
    pre: list[str] = (),
    adds: list[str] = (),
    deletes: list[str] = (),
    behavior: str = "",
) -> ActionSpec:
    """Build an ActionSpec from atom strings; a leading ``!`` marks a negative
    precondition."""
    lits = frozenset(
        Literal.neg(a[1:]) if a.startswith("!") else Literal.pos(a) for a in pre
    )
    return ActionSpec(
        title=title,
        preconditions=lits,
        adds=frozenset(Predicate(a) for a in adds),
        deletes=frozenset(deletes),
        behavior=behavior,
    )


class ActionRegistry:
    """Actions keyed by unique title; iteration preserves insertion order."""

    def __init__(self, actions: list[ActionSpec] = ()):
        self._actions: dict[str, ActionSpec] = {}
        for action in actions:
            self.add(action)

    def add(self, action: ActionSpec) -> None:
        if action.title in self._actions:
            raise ValueError(f"duplicate action title: {action.title!r}")
        self._actions[action.title] = action

    def get(self, title: str) -> ActionSpec:
        return self._actions[title]

    def __contains__(self, title: str) -> bool:
        return title in self._actions

    def __len__(self) -> int:
        return len(self._actions)

    def __iter__(self):
        return iter(self._actions.values())

    @property
    def titles(self) -> list[str]:
        return list(self._actions.keys())


def is_applicable(state: WorldState, action: ActionSpec) -> bool:
    """True iff every precondition literal is satisfied in ``state``."""
    return all(state.satisfies(lit) for lit in action.preconditions)


def apply(state: WorldState, action: ActionSpec) -> WorldState:
    """Apply ``action``'s effects: delete patterns first, then adds.

    Raises :class:`PreconditionError` if the action is not applicable.
    """
    if not is_applicable(state, action):
        raise PreconditionError(f"action {action.title!r} is not applicable")
    facts = set(state.facts)
    for pattern in action.deletes:
        facts = {p for p in facts if not _pattern_matches(pattern, p.atom)}
    facts |= action.adds
    return WorldState(frozenset(facts))


@dataclass(frozen=True)
class PlanCheck:
    """Result of simulating a plan: valid, or the earliest failing index."""

    valid: bool
    failing_index: int | None = None
    final_state: WorldState = field(default_factory=WorldState)


def check_plan(state: WorldState, plan: list[ActionSpec]) -> PlanCheck:
    """Simulate ``plan`` in order; report the first inapplicable action."""
    current = state
    for index, action in enumerate(plan):
        if not is_applicable(current, action):
            return PlanCheck(valid=False, failing_index=index, final_state=current)
        current = apply(current, action)
    return PlanCheck(valid=True, final_state=current)
