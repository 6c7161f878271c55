"""Jaro-Winkler string similarity via RapidFuzz."""

from typing import Sequence

import numpy as np
from rapidfuzz.distance import Jaro, Prefix
from rapidfuzz.process import cdist

# Winkler prefix scale, longest prefix rewarded, and the Jaro similarity from
# which the boost applies (inclusive).
PREFIX_WEIGHT = 0.1
MAX_PREFIX = 4
BOOST_THRESHOLD = 0.7
# Jaro is a mean of three fractions; absorb float rounding at the threshold.
_BOOST_TOLERANCE = 1e-12


def _winkler(jaro, prefix):
    """Apply the prefix boost to Jaro similarities (scalars or arrays)."""
    boost = np.minimum(prefix, MAX_PREFIX) * PREFIX_WEIGHT * (1.0 - jaro)
    return np.where(jaro >= BOOST_THRESHOLD - _BOOST_TOLERANCE, jaro + boost, jaro)


def jaro_winkler(a: str, b: str) -> float:
    """
    Calculate Jaro-Winkler similarity between two strings.

    Args:
        a: First string
        b: Second string

    Returns:
        Similarity in [0, 1]; 1.0 iff the strings are equal, 0.0 when exactly one is empty.
    """
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    # Evaluate in a fixed argument order so the result is bit-for-bit symmetric.
    if a > b:
        a, b = b, a
    return float(_winkler(np.float64(Jaro.similarity(a, b)), Prefix.similarity(a, b)))


def similarity_block(
    rows: Sequence[str], columns: Sequence[str], workers: int = 1
) -> np.ndarray:
    """
    Jaro-Winkler similarities between every row string and every column string.

    Entry ``[i, j]`` equals ``jaro_winkler(rows[i], columns[j])`` exactly.
    """
    if not rows or not columns:
        return np.zeros((len(rows), len(columns)), dtype=np.float64)
    forward = cdist(rows, columns, scorer=Jaro.similarity, dtype=np.float64, workers=workers)
    backward = cdist(columns, rows, scorer=Jaro.similarity, dtype=np.float64, workers=workers).T
    prefix = cdist(rows, columns, scorer=Prefix.similarity, dtype=np.int32, workers=workers)

    left = np.asarray(rows, dtype=object)[:, None]
    right = np.asarray(columns, dtype=object)[None, :]
    matrix = _winkler(np.where(left <= right, forward, backward), prefix)
    empty = (left == "") | (right == "")
    matrix[empty] = 0.0
    matrix[left == right] = 1.0
    return matrix


def similarity_matrix(strings: Sequence[str], workers: int = 1) -> np.ndarray:
    """All-pairs Jaro-Winkler matrix over ``strings``."""
    return similarity_block(strings, strings, workers)
