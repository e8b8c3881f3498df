"""Bidirectional retrieval evaluation: recall at rank k over a paired pool.

Text-to-audio treats every caption as a query against all audio items; its
target is the single owning audio. Audio-to-text treats every audio item as a
query against all captions; with multiple ground-truth captions a query counts
as a hit when any of them ranks inside the cutoff.

Ranking convention throughout: optimistic competition rank, i.e.
1 + (number of candidates scoring strictly higher than the best target).
Ties therefore favor the target, and the rule is order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyCandidatesError, ShapeMismatchError, ZeroNormRowError
from .linalg import as_matrix, l2_normalize_rows

RECALL_KS = (1, 5, 10)


@dataclass(frozen=True)
class RetrievalIndex:
    """Pairing structure of an evaluation pool.

    ``text_to_audio[j]`` is the audio index owning caption j. Every caption
    belongs to exactly one audio and every audio owns at least one caption.
    """

    n_audio: int
    n_text: int
    text_to_audio: tuple[int, ...]

    def __post_init__(self):
        if self.n_audio < 1 or self.n_text < 1:
            raise ValueError("index needs at least one audio and one text")
        if len(self.text_to_audio) != self.n_text:
            raise ShapeMismatchError(
                f"text_to_audio has {len(self.text_to_audio)} entries for {self.n_text} texts"
            )
        owners = set()
        for j, a in enumerate(self.text_to_audio):
            if not 0 <= a < self.n_audio:
                raise ValueError(f"text {j} references audio {a} outside [0, {self.n_audio})")
            owners.add(a)
        if len(owners) != self.n_audio:
            missing = sorted(set(range(self.n_audio)) - owners)
            raise ValueError(f"audios without any caption: {missing[:10]}")

    def audio_to_texts(self) -> list[tuple[int, ...]]:
        """Caption indices grouped by owning audio."""
        groups: list[list[int]] = [[] for _ in range(self.n_audio)]
        for j, a in enumerate(self.text_to_audio):
            groups[a].append(j)
        return [tuple(g) for g in groups]


@dataclass(frozen=True)
class RecallReport:
    """R@1/5/10 in both directions, as fractions in [0, 1]."""

    t2a_r1: float
    t2a_r5: float
    t2a_r10: float
    a2t_r1: float
    a2t_r5: float
    a2t_r10: float

    def __post_init__(self):
        vals = self.as_tuple()
        if not all(0.0 <= v <= 1.0 for v in vals):
            raise ValueError(f"recalls must lie in [0, 1], got {vals}")
        if not (self.t2a_r1 <= self.t2a_r5 <= self.t2a_r10):
            raise ValueError("text-to-audio recalls must be nondecreasing in k")
        if not (self.a2t_r1 <= self.a2t_r5 <= self.a2t_r10):
            raise ValueError("audio-to-text recalls must be nondecreasing in k")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.t2a_r1, self.t2a_r5, self.t2a_r10,
                self.a2t_r1, self.a2t_r5, self.a2t_r10)


def sum_of_recalls(report: RecallReport) -> float:
    """Model-selection criterion: the six recall fractions summed."""
    return float(sum(report.as_tuple()))


def rank_of_target(scores, target_indices) -> int:
    """Optimistic competition rank of the best-scoring target.

    rank = 1 + count(candidates scoring strictly higher than the best target).
    All-equal scores therefore give rank 1.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise EmptyCandidatesError("scores must be a nonempty 1-D vector")
    if isinstance(target_indices, (int, np.integer)):
        target_indices = (target_indices,)
    targets = sorted({int(t) for t in target_indices})
    if not targets:
        raise EmptyCandidatesError("target set is empty")
    for t in targets:
        if not 0 <= t < scores.size:
            raise IndexError(f"target {t} outside [0, {scores.size})")
    best = scores[targets].max()
    return int(1 + (scores > best).sum())


def _validate_sims(index: RetrievalIndex, sims) -> np.ndarray:
    s = as_matrix(sims, "sims")
    if s.shape != (index.n_audio, index.n_text):
        raise ShapeMismatchError(
            f"sims shape {s.shape} does not match pool ({index.n_audio}, {index.n_text})"
        )
    return s


def _ranks_both_directions(index: RetrievalIndex, sims) -> tuple[np.ndarray, np.ndarray]:
    """(text-to-audio ranks per caption, audio-to-text ranks per audio)."""
    s = _validate_sims(index, sims)
    owners = np.asarray(index.text_to_audio, dtype=int)

    # each caption queries the audio pool down its own column
    target_scores = s[owners, np.arange(index.n_text)]
    t2a_ranks = 1 + (s > target_scores[None, :]).sum(axis=0)

    # each audio queries the caption pool along its row; best positive wins
    best_pos = np.full(index.n_audio, -np.inf)
    np.maximum.at(best_pos, owners, target_scores)
    a2t_ranks = 1 + (s > best_pos[:, None]).sum(axis=1)
    return t2a_ranks, a2t_ranks


def recall_at_k(index: RetrievalIndex, sims, k: int) -> tuple[float, float]:
    """(text-to-audio recall, audio-to-text recall) at cutoff ``k``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    t2a_ranks, a2t_ranks = _ranks_both_directions(index, sims)
    return (
        float((t2a_ranks <= k).mean()),
        float((a2t_ranks <= k).mean()),
    )


def make_recall_report(index: RetrievalIndex, sims) -> RecallReport:
    """R@1/5/10 in both directions from a full audios x texts score matrix."""
    t2a_ranks, a2t_ranks = _ranks_both_directions(index, sims)
    vals = []
    for ranks in (t2a_ranks, a2t_ranks):
        for k in RECALL_KS:
            vals.append(float((ranks <= k).mean()))
    return RecallReport(*vals)


def similarity_scores(audio_emb, text_emb) -> np.ndarray:
    """Rectangular cosine score matrix (n_audio x n_text) for evaluation pools."""
    audio = as_matrix(audio_emb, "audio_emb")
    text = as_matrix(text_emb, "text_emb")
    if audio.shape[1] != text.shape[1]:
        raise ShapeMismatchError(
            f"embedding dims differ: {audio.shape[1]} vs {text.shape[1]}"
        )
    audio_n, zero_a = l2_normalize_rows(audio)
    if zero_a.size:
        raise ZeroNormRowError(zero_a)
    text_n, zero_t = l2_normalize_rows(text)
    if zero_t.size:
        raise ZeroNormRowError(zero_t)
    return audio_n @ text_n.T
