"""Embedding grounding: cosine math, the trigram provider, and plan matching.

Frozen similarity values below were computed with an independent trigram-bag
oracle before the tests were wired (tolerances 1e-6 unless exactness holds by
construction).
"""
import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dobby.errors import DimensionMismatchError, EmptyRegistryError, InvalidInputError, ZeroVectorError
from dobby.grounding import (
    Grounded,
    RegistryGrounder,
    TrigramEmbeddingProvider,
    Unmatched,
    cosine_similarity,
    ground_action,
    ground_plan,
)
from dobby.world import ActionRegistry, make_action

from helpers import CountingProvider

TITLES = ["Drive to Apple", "Pickup Apple", "Return to User"]


@pytest.fixture
def registry() -> ActionRegistry:
    return ActionRegistry([make_action(t) for t in TITLES])


@pytest.fixture
def provider() -> TrigramEmbeddingProvider:
    return TrigramEmbeddingProvider()


def test_cosine_identical_unit_vectors():
    assert cosine_similarity(np.array([1.0, 0, 0]), np.array([1.0, 0, 0])) == 1.0


def test_cosine_orthogonal():
    assert cosine_similarity(np.array([1.0, 0]), np.array([0, 1.0])) == 0.0


def test_cosine_analytic_value():
    assert cosine_similarity(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
        1 / math.sqrt(2), abs=1e-6
    )


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine_similarity(np.array([1.0, 0]), np.array([1.0, 0, 0]))


def test_cosine_zero_vector():
    with pytest.raises(ZeroVectorError):
        cosine_similarity(np.zeros(3), np.array([1.0, 0, 0]))


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_cosine_symmetry(values):
    a = np.array(values)
    b = np.array([1.0, -2.0, 3.0, 0.5])
    if np.linalg.norm(a) == 0:
        return
    assert abs(cosine_similarity(a, b) - cosine_similarity(b, a)) <= 1e-12


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_cosine_scale_invariance(k):
    a = np.array([0.3, -1.2, 2.0, 0.0])
    b = np.array([1.0, 0.4, -0.2, 2.2])
    assert cosine_similarity(k * a, b) == pytest.approx(cosine_similarity(a, b), abs=1e-9)


def test_trigram_provider_deterministic(provider):
    first = provider.embed("Drive to Apple")
    second = provider.embed("Drive to Apple")
    assert np.array_equal(first, second)


def test_trigram_provider_case_insensitive(provider):
    assert np.array_equal(provider.embed("Return to user"), provider.embed("Return to User"))


def test_trigram_provider_rejects_empty(provider):
    with pytest.raises(InvalidInputError):
        provider.embed("")


def test_trigram_provider_short_text(provider):
    vector = provider.embed("ab")
    assert np.linalg.norm(vector) == pytest.approx(1.0)


def test_trigram_vectors_unit_norm_and_finite(provider):
    vector = provider.embed("some arbitrary phrase")
    assert np.all(np.isfinite(vector))
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    assert vector.size == provider.dimension() == 256


def test_exact_title_grounds_to_itself(registry, provider):
    for title in TITLES:
        action, similarity = ground_action(title, registry, provider)
        assert action.title == title
        assert similarity == pytest.approx(1.0, abs=1e-9)


def test_syntactic_variation_grounds_above_threshold(registry, provider):
    # frozen oracle: 0.818923 vs 0.372678 vs 0.272166
    action, similarity = ground_action("drive to the apple", registry, provider)
    assert action.title == "Drive to Apple"
    assert similarity == pytest.approx(0.818923, abs=1e-6)
    assert similarity > 0.80


def test_unrelated_text_falls_below_threshold(registry, provider):
    # frozen oracle: best is Drive to Apple at 0.222375
    action, similarity = ground_action("Fly to the moon", registry, provider)
    assert action.title == "Drive to Apple"
    assert similarity == pytest.approx(0.222375, abs=1e-6)
    assert similarity < 0.80


def test_empty_registry_rejected(provider):
    with pytest.raises(EmptyRegistryError):
        ground_action("anything", ActionRegistry(), provider)


def test_tie_breaks_by_registry_order(provider):
    # two registries, same two equally-similar titles in opposite order
    a = make_action("Alpha One")
    b = make_action("Alpha Two", behavior="x")
    candidate = "Alpha"
    first = ground_action(candidate, ActionRegistry([a, b]), provider)
    # "Alpha One"/"Alpha Two" share the candidate's trigrams equally
    sim_a = cosine_similarity(provider.embed(candidate), provider.embed(a.title))
    sim_b = cosine_similarity(provider.embed(candidate), provider.embed(b.title))
    assert sim_a == pytest.approx(sim_b, abs=1e-12)
    assert first[0].title == "Alpha One"
    swapped = ground_action(candidate, ActionRegistry([b, a]), provider)
    assert swapped[0].title == "Alpha Two"


def test_ground_plan_fig4_sequence(registry, provider):
    outcome = ground_plan(
        ["Drive to Apple", "Pickup Apple", "Return to user"], registry, provider, 0.80
    )
    assert isinstance(outcome, Grounded)
    assert [item.action.title for item in outcome.items] == TITLES
    # case difference on the last entry still matches exactly
    assert outcome.items[2].similarity == pytest.approx(1.0, abs=1e-9)


def test_ground_plan_empty(registry, provider):
    outcome = ground_plan([], registry, provider, 0.80)
    assert isinstance(outcome, Grounded)
    assert outcome.items == ()


def test_ground_plan_reports_first_unmatched(registry, provider):
    outcome = ground_plan(["Fly to Moon", "Drive to Apple"], registry, provider, 0.80)
    assert isinstance(outcome, Unmatched)
    assert outcome.index == 0
    assert outcome.candidate == "Fly to Moon"
    assert outcome.best_title == "Drive to Apple"
    assert outcome.best_similarity < 0.80


def test_ground_plan_grounded_respects_threshold_invariant(registry, provider):
    outcome = ground_plan(TITLES + ["drive to the apple"], registry, provider, 0.80)
    assert isinstance(outcome, Grounded)
    assert all(item.similarity >= 0.80 for item in outcome.items)


def test_monotone_threshold_property(registry, provider):
    """Success at threshold t implies identical success at every t' <= t."""
    rng = random.Random(7)
    grounder = RegistryGrounder(registry, provider)
    words = ["drive", "to", "the", "apple", "pickup", "user", "return", "moon", "fly"]
    for _ in range(200):
        candidate = " ".join(rng.sample(words, k=rng.randint(1, 4)))
        t = rng.uniform(0.05, 1.0)
        outcome = grounder.ground_plan([candidate], t)
        if isinstance(outcome, Grounded):
            for t_lower in (t / 2, t * 0.9, 0.05):
                again = grounder.ground_plan([candidate], t_lower)
                assert isinstance(again, Grounded)
                assert again == outcome


def test_title_embeddings_cached_once():
    provider = CountingProvider()
    grounder = RegistryGrounder(ActionRegistry([make_action(t) for t in TITLES]), provider)
    assert provider.calls == TITLES  # construction embeds each title once
    provider.calls.clear()
    outcome = grounder.ground_plan(["Drive to Apple", "Pickup Apple"], 0.5)
    assert isinstance(outcome, Grounded)
    assert provider.calls == ["Drive to Apple", "Pickup Apple"]  # n candidates, n calls
