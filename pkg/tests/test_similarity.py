"""Tests for the Jaro-Winkler helpers."""

import random
import string

import numpy as np
import pytest

from biblio_connectivity.similarity import jaro_winkler, similarity_block, similarity_matrix


def random_strings(rng: random.Random, count: int, alphabet: str = "abcde") -> list[str]:
    return ["".join(rng.choices(alphabet, k=rng.randint(0, 8))) for _ in range(count)]


def test_textbook_value():
    assert jaro_winkler("martha", "marhta") == pytest.approx(0.9611, abs=1e-4)


def test_identity_and_disjoint():
    assert jaro_winkler("feudalism", "feudalism") == 1.0
    assert jaro_winkler("", "") == 1.0
    assert jaro_winkler("abc", "xyz") == 0.0


def test_one_empty_string_scores_zero():
    assert jaro_winkler("", "giovanni") == 0.0
    assert jaro_winkler("giovanni", "") == 0.0


def test_single_initial_against_full_given_name():
    # Jaro 0.7083 plus a one-character prefix boost.
    assert jaro_winkler("giovanni", "g") == pytest.approx(0.7375, abs=1e-4)


def test_symmetric_and_bounded_over_random_pairs():
    rng = random.Random(20240101)
    for _ in range(10_000):
        a, b = random_strings(rng, 2)
        forward = jaro_winkler(a, b)
        assert forward == jaro_winkler(b, a)
        assert 0.0 <= forward <= 1.0
        assert (forward == 1.0) == (a == b)


def test_longer_common_prefix_never_lowers_the_score():
    rng = random.Random(7)
    for _ in range(500):
        tail_a = "".join(rng.choices(string.ascii_lowercase[4:15], k=rng.randint(1, 6)))
        tail_b = "".join(rng.choices(string.ascii_lowercase[15:], k=rng.randint(1, 6)))
        scores = [jaro_winkler("abcd"[:k] + tail_a, "abcd"[:k] + tail_b) for k in range(5)]
        assert all(later >= earlier - 1e-12 for earlier, later in zip(scores, scores[1:]))


def test_block_matches_pairwise_values_exactly():
    rng = random.Random(3)
    rows = random_strings(rng, 40)
    columns = random_strings(rng, 25)
    block = similarity_block(rows, columns)
    expected = np.array([[jaro_winkler(a, b) for b in columns] for a in rows])
    assert block.shape == (40, 25)
    assert np.array_equal(block, expected)


def test_matrix_is_exactly_symmetric():
    strings = random_strings(random.Random(11), 60, alphabet="abcdefgh")
    matrix = similarity_matrix(strings, workers=2)
    assert np.array_equal(matrix, matrix.T)
    assert np.all(np.diag(matrix) == 1.0)


def test_empty_block():
    assert similarity_block([], ["a"]).shape == (0, 1)


class TestPrefixBoostThreshold:
    # "ab" against a 20-character string starting with "ab": two matches, no
    # transpositions, Jaro = (2/2 + 2/20 + 2/2) / 3 = 0.7 exactly.
    LONG = "abcdefghijklmnopqrst"

    def test_boost_applies_at_exactly_the_threshold(self):
        assert jaro_winkler("ab", self.LONG) == pytest.approx(0.7 + 2 * 0.1 * 0.3, abs=1e-12)

    def test_no_boost_just_below_the_threshold(self):
        # One more character: Jaro = (1 + 2/21 + 1) / 3 < 0.7.
        jaro = (2 + 2 / 21) / 3
        assert jaro_winkler("ab", self.LONG + "u") == pytest.approx(jaro, abs=1e-12)

    def test_block_agrees_at_the_threshold(self):
        block = similarity_block(["ab"], [self.LONG, self.LONG + "u"])
        assert block[0, 0] == jaro_winkler("ab", self.LONG)
        assert block[0, 1] == jaro_winkler("ab", self.LONG + "u")
