"""Metric-learning objectives over a batch similarity matrix.

Each objective consumes a b x b similarity matrix ``sims`` (rows index audio
items, columns index text items, diagonal entries are the positive pairs) and
returns both the scalar loss and its exact gradient with respect to ``sims``.
Embedding gradients are obtained separately by chaining through
:func:`backprop_to_embeddings`, which lets every loss be finite-difference
checked in isolation.

Conventions shared by every objective:
  * hinge [x]+ = max(0, x), with subgradient 0 at x = 0;
  * hardest-negative selection by similarity, ties broken by lowest index;
  * both retrieval directions contribute (audio anchors over rows, text
    anchors over columns), and the total is averaged by the batch size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BatchTooSmallError, ShapeMismatchError, ZeroNormRowError
from .linalg import ZERO_NORM_EPS, as_matrix, check_similarity_matrix

OBJECTIVE_NAMES = ("triplet-sum", "triplet-max", "triplet-weighted", "nt-xent")

# Hyper-parameter defaults for the weighted objective's polynomials,
# ascending order (constant term first).
DEFAULT_POS_COEFFS = (0.5, -0.7, 0.2)
DEFAULT_NEG_COEFFS = (0.03, -0.4, 0.9)


@dataclass(frozen=True)
class TripletConfig:
    """Margin hyper-parameter for the hinge-based triplet objectives."""

    margin: float = 0.2

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


@dataclass(frozen=True)
class NtXentConfig:
    """Temperature hyper-parameter for the softmax contrastive objective."""

    temperature: float = 0.07

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class PolynomialWeights:
    """Polynomial coefficients for the weighted triplet objective.

    Coefficients are stored in ascending order: ``pos_coeffs[p]`` multiplies
    the positive similarity raised to the p-th power, ``neg_coeffs[q]`` the
    hardest-negative similarity raised to the q-th power.
    """

    pos_coeffs: tuple[float, ...] = DEFAULT_POS_COEFFS
    neg_coeffs: tuple[float, ...] = DEFAULT_NEG_COEFFS

    def __post_init__(self):
        object.__setattr__(self, "pos_coeffs", tuple(float(c) for c in self.pos_coeffs))
        object.__setattr__(self, "neg_coeffs", tuple(float(c) for c in self.neg_coeffs))
        if not self.pos_coeffs or not self.neg_coeffs:
            raise ValueError("coefficient lists must be non-empty")

    @property
    def pos_order(self) -> int:
        return len(self.pos_coeffs) - 1

    @property
    def neg_order(self) -> int:
        return len(self.neg_coeffs) - 1


@dataclass(frozen=True)
class LossResult:
    """Scalar loss value plus its gradient with respect to the similarity matrix."""

    value: float
    grad_s: np.ndarray = field(repr=False)


def _horner(x, coeffs):
    """Evaluate sum_k coeffs[k] * x**k (ascending coefficients) by Horner's scheme."""
    acc = np.full_like(np.asarray(x, dtype=np.float64), coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def _horner_derivative(x, coeffs):
    deriv = tuple(k * c for k, c in enumerate(coeffs))[1:]
    if not deriv:
        return np.zeros_like(np.asarray(x, dtype=np.float64))
    return _horner(x, deriv)


def positive_pair_weight(s, w: PolynomialWeights):
    """Polynomial weight applied to a positive-pair similarity score."""
    return _horner(s, w.pos_coeffs)


def negative_pair_weight(s, w: PolynomialWeights):
    """Polynomial weight applied to a negative-pair similarity score."""
    return _horner(s, w.neg_coeffs)


def triplet_sum(sims, cfg: TripletConfig = TripletConfig()) -> LossResult:
    """Hinge triplet loss summed over every negative in the batch.

    value = (1/B) sum_i sum_{j != i} [m + s_ij - s_ii]+ + [m + s_ji - s_ii]+
    """
    s = check_similarity_matrix(sims)
    b = s.shape[0]
    d = np.diag(s)
    off = ~np.eye(b, dtype=bool)

    arg_audio = cfg.margin + s - d[:, None]   # anchor = audio i, negative = text j
    arg_text = cfg.margin + s.T - d[:, None]  # anchor = text i, negative = audio j
    act_audio = (arg_audio > 0) & off
    act_text = (arg_text > 0) & off

    value = (arg_audio[act_audio].sum() + arg_text[act_text].sum()) / b

    grad = act_audio.astype(np.float64)
    grad += act_text.T
    np.fill_diagonal(grad, -(act_audio.sum(axis=1) + act_text.sum(axis=1)))
    return LossResult(float(value), grad / b)


def triplet_max(sims, cfg: TripletConfig = TripletConfig()) -> LossResult:
    """Hinge triplet loss over only the hardest negative per anchor.

    value = (1/B) sum_i max_{j != i} [m + s_ij - s_ii]+ + max_{j != i} [m + s_ji - s_ii]+

    Gradient flows only through the selected hardest negative per direction
    per anchor; with one negative (b = 2) this coincides with triplet_sum.
    """
    s = check_similarity_matrix(sims)
    b = s.shape[0]
    if b == 1:
        return LossResult(0.0, np.zeros((1, 1)))
    d = np.diag(s)

    masked = s.copy()
    np.fill_diagonal(masked, -np.inf)
    hardest_text = np.argmax(masked, axis=1)      # per audio anchor i: column j*
    hardest_audio = np.argmax(masked.T, axis=1)   # per text anchor i: row j*
    rows = np.arange(b)

    arg_audio = cfg.margin + masked[rows, hardest_text] - d
    arg_text = cfg.margin + masked.T[rows, hardest_audio] - d
    act_audio = arg_audio > 0
    act_text = arg_text > 0

    value = (arg_audio[act_audio].sum() + arg_text[act_text].sum()) / b

    grad = np.zeros((b, b))
    np.add.at(grad, (rows[act_audio], hardest_text[act_audio]), 1.0)
    np.add.at(grad, (hardest_audio[act_text], rows[act_text]), 1.0)
    np.add.at(grad, (rows, rows), -(act_audio.astype(float) + act_text))
    return LossResult(float(value), grad / b)


def triplet_weighted(sims, w: PolynomialWeights = PolynomialWeights()) -> LossResult:
    """Polynomially weighted hinge loss over the hardest negative per anchor.

    Per anchor the positive similarity and the hardest-negative similarity are
    each passed through their weight polynomial, summed, and hinged:

    value = (1/B) sum_i [P_pos(s_ii) + P_neg(max_{j != i} s_ij)]+
          + (1/B) sum_i [P_pos(s_ii) + P_neg(max_{j != i} s_ji)]+
    """
    s = check_similarity_matrix(sims)
    b = s.shape[0]
    if b < 2:
        raise BatchTooSmallError(
            f"hardest-negative selection needs b >= 2, got b={b}"
        )
    d = np.diag(s)

    masked = s.copy()
    np.fill_diagonal(masked, -np.inf)
    hardest_text = np.argmax(masked, axis=1)
    hardest_audio = np.argmax(masked.T, axis=1)
    rows = np.arange(b)
    neg_audio = masked[rows, hardest_text]     # hardest negative for audio anchors
    neg_text = masked.T[rows, hardest_audio]   # hardest negative for text anchors

    pos_w = positive_pair_weight(d, w)
    bracket_audio = pos_w + negative_pair_weight(neg_audio, w)
    bracket_text = pos_w + negative_pair_weight(neg_text, w)
    act_audio = bracket_audio > 0
    act_text = bracket_text > 0

    value = (bracket_audio[act_audio].sum() + bracket_text[act_text].sum()) / b

    pos_d = _horner_derivative(d, w.pos_coeffs)
    grad = np.zeros((b, b))
    np.add.at(
        grad,
        (rows[act_audio], hardest_text[act_audio]),
        _horner_derivative(neg_audio[act_audio], w.neg_coeffs),
    )
    np.add.at(
        grad,
        (hardest_audio[act_text], rows[act_text]),
        _horner_derivative(neg_text[act_text], w.neg_coeffs),
    )
    np.add.at(grad, (rows, rows), pos_d * (act_audio.astype(float) + act_text))
    return LossResult(float(value), grad / b)


def _log_softmax_diag(z):
    """Per-row log softmax evaluated at the diagonal, with max subtraction."""
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    return np.diag(z) - lse


def _softmax(z, axis):
    zmax = z.max(axis=axis, keepdims=True)
    e = np.exp(z - zmax)
    return e / e.sum(axis=axis, keepdims=True)


def nt_xent(sims, cfg: NtXentConfig = NtXentConfig()) -> LossResult:
    """Temperature-scaled softmax cross entropy over rows and columns.

    value = -(1/B) sum_i [ log softmax_row(s/tau)_ii + log softmax_col(s/tau)_ii ]

    Both softmax denominators include the positive term, and all exponentials
    use max subtraction so large s/tau ratios stay finite.
    """
    s = check_similarity_matrix(sims)
    b = s.shape[0]
    z = s / cfg.temperature

    value = -(_log_softmax_diag(z).sum() + _log_softmax_diag(z.T).sum()) / b

    eye = np.eye(b)
    grad = (_softmax(z, axis=1) - eye) + (_softmax(z, axis=0) - eye)
    return LossResult(float(value), grad / (b * cfg.temperature))


def objective_fn(
    name: str,
    margin: float = 0.2,
    temperature: float = 0.07,
    pos_coeffs=DEFAULT_POS_COEFFS,
    neg_coeffs=DEFAULT_NEG_COEFFS,
):
    """Bind an objective name and its hyper-parameters to a ``sims -> LossResult`` callable."""
    if name == "triplet-sum":
        cfg = TripletConfig(margin)
        return lambda s: triplet_sum(s, cfg)
    if name == "triplet-max":
        cfg = TripletConfig(margin)
        return lambda s: triplet_max(s, cfg)
    if name == "triplet-weighted":
        w = PolynomialWeights(tuple(pos_coeffs), tuple(neg_coeffs))
        return lambda s: triplet_weighted(s, w)
    if name == "nt-xent":
        cfg = NtXentConfig(temperature)
        return lambda s: nt_xent(s, cfg)
    raise ValueError(f"unknown objective {name!r}; expected one of {OBJECTIVE_NAMES}")


def backprop_to_embeddings(grad_s, audio_norm, text_norm, audio_raw, text_raw):
    """Chain a similarity-matrix gradient back to the raw (pre-normalization) embeddings.

    ``audio_norm``/``text_norm`` must be the row-normalized versions of
    ``audio_raw``/``text_raw`` and the similarity is their row-pair dot
    product. The normalization Jacobian (I/||x|| - x x^T/||x||^3) removes the
    radial component, so each returned gradient row is the tangential part of
    the chained gradient, scaled by the raw row norm.

    Returns:
        (grad_audio_raw, grad_text_raw)
    """
    g = check_similarity_matrix(grad_s, "grad_s")
    audio_norm = as_matrix(audio_norm, "audio_norm")
    text_norm = as_matrix(text_norm, "text_norm")
    audio_raw = as_matrix(audio_raw, "audio_raw")
    text_raw = as_matrix(text_raw, "text_raw")
    if audio_norm.shape != audio_raw.shape or text_norm.shape != text_raw.shape:
        raise ShapeMismatchError("normalized and raw embedding shapes differ")
    if audio_norm.shape != text_norm.shape:
        raise ShapeMismatchError(
            f"audio and text embedding shapes differ: {audio_norm.shape} vs {text_norm.shape}"
        )
    if g.shape[0] != audio_norm.shape[0]:
        raise ShapeMismatchError(
            f"grad_s batch {g.shape[0]} does not match embeddings batch {audio_norm.shape[0]}"
        )

    norms_a = np.linalg.norm(audio_raw, axis=1)
    norms_t = np.linalg.norm(text_raw, axis=1)
    bad = np.flatnonzero((norms_a < ZERO_NORM_EPS) | (norms_t < ZERO_NORM_EPS))
    if bad.size:
        raise ZeroNormRowError(bad)

    grad_audio_n = g @ text_norm
    grad_text_n = g.T @ audio_norm
    grad_audio = (
        grad_audio_n - (grad_audio_n * audio_norm).sum(axis=1, keepdims=True) * audio_norm
    ) / norms_a[:, None]
    grad_text = (
        grad_text_n - (grad_text_n * text_norm).sum(axis=1, keepdims=True) * text_norm
    ) / norms_t[:, None]
    return grad_audio, grad_text
