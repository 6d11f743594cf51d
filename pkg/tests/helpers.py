"""Shared test utilities: instrumented backends/providers and domain generators."""
from __future__ import annotations

import random

from dobby.backends import ScriptedBackend, ScriptedStep
from dobby.chat import ChatMessage, FunctionCall
from dobby.grounding import TrigramEmbeddingProvider
from dobby.world import ActionSpec, Literal, Predicate, WorldState


def step(
    content: str = "",
    call: tuple[str, str] | None = None,
    user: str | None = None,
    system: str | None = None,
    turn: int | None = None,
) -> ScriptedStep:
    function_call = FunctionCall(name=call[0], arguments=call[1]) if call else None
    return ScriptedStep(
        response_content=content,
        response_call=function_call,
        turn_index=turn,
        user_contains=user,
        system_contains=system,
    )


def execute_plan_args(titles: list[str]) -> str:
    import json

    return json.dumps({"action_sequence": titles})


class RecordingBackend:
    """Wraps a scripted backend; snapshots every query payload."""

    def __init__(self, inner: ScriptedBackend):
        self.inner = inner
        self.payloads: list[list[ChatMessage]] = []
        self.function_lists: list[list] = []

    def complete(self, history, functions):
        self.payloads.append(list(history))
        self.function_lists.append(list(functions))
        return self.inner.complete(history, functions)

    @property
    def query_count(self) -> int:
        return len(self.payloads)


class CountingProvider:
    """Wraps the trigram provider; counts embed calls per text."""

    def __init__(self):
        self.inner = TrigramEmbeddingProvider()
        self.calls: list[str] = []

    def embed(self, text: str):
        self.calls.append(text)
        return self.inner.embed(text)

    def dimension(self) -> int:
        return self.inner.dimension()


def random_domain(rng: random.Random, max_atoms: int = 8, max_actions: int = 6):
    """A random propositional domain: initial state plus an action sequence.

    Actions draw preconditions (with occasional negative literals), adds, and
    deletes (occasionally a wildcard over a two-segment prefix) from a small
    atom pool, the shape the plan repair loop actually sees.
    """
    n_atoms = rng.randint(1, max_atoms)
    atoms = [f"a{i}" for i in range(n_atoms)]
    # a couple of two-segment atoms so wildcard deletes have something to hit
    if n_atoms >= 3:
        atoms[-1] = "loc:x"
        atoms[-2] = "loc:y"
    initial = WorldState(
        frozenset(Predicate(a) for a in atoms if rng.random() < 0.5)
    )
    n_actions = rng.randint(0, max_actions)
    actions = []
    for index in range(n_actions):
        pre = frozenset(
            Literal(Predicate(a), positive=rng.random() < 0.8)
            for a in rng.sample(atoms, k=rng.randint(0, min(2, n_atoms)))
        )
        adds = frozenset(
            Predicate(a) for a in rng.sample(atoms, k=rng.randint(0, min(2, n_atoms)))
        )
        delete_pool = [a for a in atoms if Predicate(a) not in adds]
        deletes = set(
            rng.sample(delete_pool, k=rng.randint(0, min(2, len(delete_pool))))
        )
        if rng.random() < 0.15:
            deletes.add("loc:*")
        actions.append(
            ActionSpec(
                title=f"act{index}",
                preconditions=pre,
                adds=adds,
                deletes=frozenset(deletes),
                behavior="noop",
            )
        )
    return initial, actions
