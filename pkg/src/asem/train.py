"""Training loop and multi-run comparison harness.

One run: for every batch, push both feature batches through their projection
heads, L2-normalize, form the cosine similarity matrix, apply the configured
objective, chain the gradient back through normalization and both heads, and
take one Adam step at the scheduled rate. After each epoch the run is scored
by sum-of-recalls on the validation split and the best-scoring checkpoint is
retained (ties keep the earliest epoch).

A comparison trains every (objective, seed) combination under an otherwise
identical configuration and aggregates per-objective mean and population
standard deviation of the test metrics. Failed runs are recorded and marked,
never silently retried.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import DatasetBundle, PairedDataset, load_dataset, plan_batches
from .exceptions import AsemError, NonFiniteLossError, ZeroNormRowError
from .linalg import l2_normalize_rows
from .losses import (
    DEFAULT_NEG_COEFFS,
    DEFAULT_POS_COEFFS,
    OBJECTIVE_NAMES,
    backprop_to_embeddings,
    objective_fn,
)
from .mlp import MlpParams, mlp_backward, mlp_forward, mlp_init
from .optim import AdamConfig, LrSchedule, adam_init, adam_step, lr_at_epoch
from .retrieval import RecallReport, make_recall_report, similarity_scores, sum_of_recalls

DEFAULT_SEEDS = (0, 1, 2)


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on, serializable as flat JSON."""

    dataset: str | None = None  # manifest path; may be substituted in-memory
    objective: str = "nt-xent"
    margin: float = 0.2
    temperature: float = 0.07
    pos_coeffs: tuple[float, ...] = DEFAULT_POS_COEFFS
    neg_coeffs: tuple[float, ...] = DEFAULT_NEG_COEFFS
    batch_size: int = 32
    epochs: int = 50
    base_lr: float = 1e-4
    lr_decay_factor: float = 0.1
    lr_decay_every: int = 20
    embedding_dim: int = 1024
    hidden_dim: int | None = None
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.objective not in OBJECTIVE_NAMES:
            raise ValueError(
                f"unknown objective {self.objective!r}; expected one of {OBJECTIVE_NAMES}"
            )
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.embedding_dim < 1:
            raise ValueError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        object.__setattr__(self, "pos_coeffs", tuple(float(c) for c in self.pos_coeffs))
        object.__setattr__(self, "neg_coeffs", tuple(float(c) for c in self.neg_coeffs))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("seeds must be non-empty")

    def loss(self):
        return objective_fn(
            self.objective,
            margin=self.margin,
            temperature=self.temperature,
            pos_coeffs=self.pos_coeffs,
            neg_coeffs=self.neg_coeffs,
        )

    def schedule(self) -> LrSchedule:
        return LrSchedule(
            base_lr=self.base_lr,
            decay_factor=self.lr_decay_factor,
            decay_every=self.lr_decay_every,
            total_epochs=self.epochs,
        )


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_sum_of_recalls: float
    lr: float


@dataclass(frozen=True)
class TrainResult:
    """Best checkpoint of one run plus its per-epoch trace."""

    audio_head: MlpParams = field(repr=False)
    text_head: MlpParams = field(repr=False)
    best_epoch: int | None
    metrics: tuple[EpochMetrics, ...]
    seed: int
    objective: str


def _embed(head: MlpParams, features) -> np.ndarray:
    y, _ = mlp_forward(head, features)
    return y


def evaluate_heads(audio_head: MlpParams, text_head: MlpParams, dataset: PairedDataset) -> RecallReport:
    """Embed a full split with both heads and score bidirectional recall."""
    sims = similarity_scores(
        _embed(audio_head, dataset.audio_features),
        _embed(text_head, dataset.text_features),
    )
    return make_recall_report(dataset.retrieval_index(), sims)


def _resolve_bundle(config: TrainConfig, bundle: DatasetBundle | None) -> DatasetBundle:
    if bundle is not None:
        return bundle
    if config.dataset is None:
        raise ValueError("config has no dataset path and no bundle was supplied")
    return load_dataset(config.dataset)


def train_one(config: TrainConfig, seed: int, bundle: DatasetBundle | None = None) -> TrainResult:
    """Train one run to completion, returning the validation-best checkpoint.

    Deterministic given (config, seed): head initialization draws from
    streams keyed by (seed, head) and batch plans from (seed, epoch).
    """
    bundle = _resolve_bundle(config, bundle)
    train = bundle.train
    if train is None:
        raise ValueError("dataset has no train split")

    audio_head = mlp_init(
        train.audio_dim, config.embedding_dim, config.hidden_dim, seed=[seed, 0]
    )
    text_head = mlp_init(
        train.text_dim, config.embedding_dim, config.hidden_dim, seed=[seed, 1]
    )
    if config.epochs == 0:
        return TrainResult(audio_head, text_head, None, (), seed, config.objective)

    if bundle.val is None:
        raise ValueError("dataset has no validation split for best-model selection")

    loss_fn = config.loss()
    schedule = config.schedule()
    adam_cfg = AdamConfig(lr=config.base_lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    params = audio_head.as_list() + text_head.as_list()
    state = adam_init(params)

    best = (-np.inf, None, None, None)  # (val score, epoch, audio head, text head)
    history: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        lr = lr_at_epoch(schedule, epoch)
        plan = plan_batches(train, config.batch_size, seed, epoch)
        batch_losses = []
        for batch_no, batch in enumerate(plan.batches):
            audio_rows = [train.pairs[i][1] for i in batch]
            text_rows = [train.pairs[i][0] for i in batch]
            x_audio = train.audio_features[audio_rows]
            x_text = train.text_features[text_rows]

            audio_head = MlpParams.from_list(params[:4])
            text_head = MlpParams.from_list(params[4:])
            y_audio, cache_audio = mlp_forward(audio_head, x_audio)
            y_text, cache_text = mlp_forward(text_head, x_text)

            audio_n, zero_a = l2_normalize_rows(y_audio)
            text_n, zero_t = l2_normalize_rows(y_text)
            if zero_a.size or zero_t.size:
                raise ZeroNormRowError(np.concatenate([zero_a, zero_t]))
            sims = audio_n @ text_n.T

            result = loss_fn(sims)
            if not np.isfinite(result.value):
                raise NonFiniteLossError(epoch, batch_no, result.value)
            batch_losses.append(result.value)

            grad_audio, grad_text = backprop_to_embeddings(
                result.grad_s, audio_n, text_n, y_audio, y_text
            )
            g_audio = mlp_backward(audio_head, cache_audio, grad_audio)
            g_text = mlp_backward(text_head, cache_text, grad_text)
            params, state = adam_step(
                params, g_audio.as_list() + g_text.as_list(), state, adam_cfg, lr=lr
            )

        audio_head = MlpParams.from_list(params[:4])
        text_head = MlpParams.from_list(params[4:])
        val_report = evaluate_heads(audio_head, text_head, bundle.val)
        val_score = sum_of_recalls(val_report)
        history.append(EpochMetrics(epoch, float(np.mean(batch_losses)), val_score, lr))
        if val_score > best[0]:
            best = (val_score, epoch, audio_head, text_head)

    _, best_epoch, best_audio, best_text = best
    return TrainResult(best_audio, best_text, best_epoch, tuple(history), seed, config.objective)


# --- comparison harness --------------------------------------------------------


@dataclass(frozen=True)
class SeedRun:
    """Outcome of one (objective, seed) training run."""

    seed: int
    error: str | None
    best_epoch: int | None
    test_report: RecallReport | None
    loss_curve: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class RunReport:
    """Per-objective aggregate over the configured seeds."""

    objective: str
    batch_size: int
    runs: tuple[SeedRun, ...]
    # six (mean, std) pairs in RecallReport field order; None if no run succeeded
    aggregates: tuple[tuple[float, float], ...] | None


def mean_std(values) -> tuple[float, float]:
    """Mean and population standard deviation (n divisor)."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("mean_std of empty sequence")
    return float(arr.mean()), float(arr.std(ddof=0))


def aggregate_reports(reports) -> tuple[tuple[float, float], ...]:
    """Per-metric (mean, population std) across RecallReports."""
    tuples = [r.as_tuple() for r in reports]
    return tuple(mean_std(col) for col in zip(*tuples))


def _run_for_comparison(config: TrainConfig, seed: int, bundle: DatasetBundle) -> SeedRun:
    try:
        result = train_one(config, seed, bundle)
        if bundle.test is None:
            raise ValueError("dataset has no test split")
        report = evaluate_heads(result.audio_head, result.text_head, bundle.test)
        return SeedRun(
            seed=seed,
            error=None,
            best_epoch=result.best_epoch,
            test_report=report,
            loss_curve=tuple(m.train_loss for m in result.metrics),
        )
    except (AsemError, ValueError) as exc:
        return SeedRun(seed=seed, error=f"{type(exc).__name__}: {exc}", best_epoch=None,
                       test_report=None, loss_curve=())


def run_comparison(
    config: TrainConfig,
    objectives=OBJECTIVE_NAMES,
    bundle: DatasetBundle | None = None,
    jobs: int = 1,
) -> tuple[RunReport, ...]:
    """Train every (objective, seed) combination and aggregate per objective.

    Failures are captured in their SeedRun; aggregation covers the successful
    seeds. Results are assembled in configuration order regardless of ``jobs``.
    """
    objectives = tuple(objectives)
    if not objectives:
        raise ValueError("need at least one objective")
    bundle = _resolve_bundle(config, bundle)

    tasks = [
        (obj, seed, replace(config, objective=obj))
        for obj in objectives
        for seed in config.seeds
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda t: _run_for_comparison(t[2], t[1], bundle), tasks))
    else:
        outcomes = [_run_for_comparison(cfg, seed, bundle) for _, seed, cfg in tasks]

    reports = []
    per_seed = len(config.seeds)
    for i, obj in enumerate(objectives):
        runs = tuple(outcomes[i * per_seed : (i + 1) * per_seed])
        succeeded = [r.test_report for r in runs if r.ok]
        aggregates = aggregate_reports(succeeded) if succeeded else None
        reports.append(RunReport(obj, config.batch_size, runs, aggregates))
    return tuple(reports)
