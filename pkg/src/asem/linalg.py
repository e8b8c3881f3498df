"""Dense numerics foundation: matrix checks, row normalization, cosine similarity.

All operations work on 2-D float64 arrays (rows are items, columns are feature
dimensions) and are pure functions of their inputs.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeMismatchError, ZeroNormRowError

# Rows with an L2 norm below this are considered degenerate: normalizing them
# would divide by (effectively) zero.
ZERO_NORM_EPS = 1e-12

# Numeric slack admitted on the cosine range [-1, 1].
COSINE_RANGE_SLACK = 1e-9


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce ``values`` to a 2-D float64 array and check its invariants.

    Rejects non-2-D input, empty dimensions, and non-finite entries.
    """
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeMismatchError(f"{name} must be non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite values")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit shape checking (double-precision accumulation)."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"inner dimensions differ: {a.shape} x {b.shape}"
        )
    return a @ b


def l2_normalize_rows(m) -> tuple[np.ndarray, np.ndarray]:
    """L2-normalize each row of ``m``.

    Rows whose norm is below ``ZERO_NORM_EPS`` are returned unchanged; their
    indices are reported in the second return value so callers can decide
    whether that is fatal (training treats it as such).

    Returns:
        (normalized, zero_rows) where ``zero_rows`` is an int array of the
        indices of rows that were left unchanged.
    """
    m = as_matrix(m, "m")
    norms = np.linalg.norm(m, axis=1)
    zero_rows = np.flatnonzero(norms < ZERO_NORM_EPS)
    safe = np.where(norms < ZERO_NORM_EPS, 1.0, norms)
    return m / safe[:, None], zero_rows


def cosine_similarity_matrix(audio, text) -> np.ndarray:
    """Pairwise cosine similarity between audio-side rows and text-side rows.

    Entry (i, j) is dot(audio_i, text_j) / (||audio_i|| ||text_j||). Both
    inputs must have the same shape (b, d); the result is b x b with rows
    indexing audio items and columns indexing text items.
    """
    audio = as_matrix(audio, "audio")
    text = as_matrix(text, "text")
    if audio.shape != text.shape:
        raise ShapeMismatchError(
            f"audio and text shapes differ: {audio.shape} vs {text.shape}"
        )
    audio_n, zero_a = l2_normalize_rows(audio)
    if zero_a.size:
        raise ZeroNormRowError(zero_a)
    text_n, zero_t = l2_normalize_rows(text)
    if zero_t.size:
        raise ZeroNormRowError(zero_t)
    return audio_n @ text_n.T


def check_similarity_matrix(sims, name: str = "sims") -> np.ndarray:
    """Validate a square similarity matrix (finite entries, b x b)."""
    s = as_matrix(sims, name)
    if s.shape[0] != s.shape[1]:
        raise ShapeMismatchError(f"{name} must be square, got shape {s.shape}")
    return s
