"""Maps free-form action strings to registered actions via embedding similarity.

The model proposes plans as plain text. Each candidate string is embedded and
matched against the action titles' embeddings by cosine similarity; a best
match below the caller's threshold is reported as unmatched so the agent can
be re-prompted.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import DimensionMismatchError, EmptyRegistryError, InvalidInputError, ZeroVectorError
from .world import ActionRegistry, ActionSpec

DEFAULT_THRESHOLD = 0.80


class EmbeddingProvider(Protocol):
    """Deterministic text-to-vector contract; equal text yields equal vectors."""

    def embed(self, text: str) -> np.ndarray: ...

    def dimension(self) -> int: ...


class TrigramEmbeddingProvider:
    """Deterministic offline provider: character-trigram bag of the lowercased
    text, trigrams hashed into 256 buckets (crc32), counts L2-normalized.

    Texts shorter than three characters use the whole text as a single gram so
    no input embeds to the zero vector.
    """

    DIM = 256

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise InvalidInputError("cannot embed empty text")
        lowered = text.lower()
        if len(lowered) < 3:
            grams = [lowered]
        else:
            grams = [lowered[i : i + 3] for i in range(len(lowered) - 2)]
        vector = np.zeros(self.DIM)
        for gram in grams:
            vector[zlib.crc32(gram.encode("utf-8")) % self.DIM] += 1.0
        return vector / np.linalg.norm(vector)

    def dimension(self) -> int:
        return self.DIM


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a,b) / (|a||b|), clamped to [-1, 1] to absorb rounding."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimensions differ: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


@dataclass(frozen=True)
class GroundedItem:
    action: ActionSpec
    similarity: float


@dataclass(frozen=True)
class Grounded:
    items: tuple[GroundedItem, ...]

    @property
    def actions(self) -> list[ActionSpec]:
        return [item.action for item in self.items]


@dataclass(frozen=True)
class Unmatched:
    index: int
    candidate: str
    best_title: str
    best_similarity: float


GroundingOutcome = Grounded | Unmatched


class TitleMatcher:
    """Best-match lookup over a fixed title list; title embeddings are cached
    once at construction, so matching n candidates costs n embed calls."""

    def __init__(self, titles: list[str], provider: EmbeddingProvider):
        if not titles:
            raise EmptyRegistryError("cannot match against an empty title list")
        self.titles = list(titles)
        self.provider = provider
        self._title_vectors = [provider.embed(t) for t in titles]

    def best(self, candidate: str) -> tuple[int, float]:
        """Index and similarity of the best title; earliest wins ties."""
        candidate_vector = self.provider.embed(candidate)
        best_index = 0
        best_sim = -2.0
        for index, title_vector in enumerate(self._title_vectors):
            sim = cosine_similarity(candidate_vector, title_vector)
            if sim > best_sim:
                best_index, best_sim = index, sim
        return best_index, best_sim


class RegistryGrounder:
    """Grounds candidate strings against one registry with cached title
    embeddings."""

    def __init__(self, registry: ActionRegistry, provider: EmbeddingProvider):
        if len(registry) == 0:
            raise EmptyRegistryError("cannot ground against an empty registry")
        self.registry = registry
        self._matcher = TitleMatcher(registry.titles, provider)

    def ground_action(self, candidate: str) -> tuple[ActionSpec, float]:
        index, similarity = self._matcher.best(candidate)
        return self.registry.get(self._matcher.titles[index]), similarity

    def ground_plan(
        self, candidates: list[str], threshold: float = DEFAULT_THRESHOLD
    ) -> GroundingOutcome:
        """Ground left to right; stop at the first candidate below threshold."""
        if not 0.0 < threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {threshold}")
        items: list[GroundedItem] = []
        for index, candidate in enumerate(candidates):
            action, similarity = self.ground_action(candidate)
            if similarity < threshold:
                return Unmatched(
                    index=index,
                    candidate=candidate,
                    best_title=action.title,
                    best_similarity=similarity,
                )
            items.append(GroundedItem(action=action, similarity=similarity))
        return Grounded(items=tuple(items))


def ground_action(
    candidate: str, registry: ActionRegistry, provider: EmbeddingProvider
) -> tuple[ActionSpec, float]:
    return RegistryGrounder(registry, provider).ground_action(candidate)


def ground_plan(
    candidates: list[str],
    registry: ActionRegistry,
    provider: EmbeddingProvider,
    threshold: float = DEFAULT_THRESHOLD,
) -> GroundingOutcome:
    return RegistryGrounder(registry, provider).ground_plan(candidates, threshold)
