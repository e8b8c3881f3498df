"""Paired-feature datasets: synthetic generation, file ingestion, batch planning.

A dataset is a pair of feature matrices (one per modality) plus pair records
linking each text row to its owning audio row. Audio items may own several
captions; every caption belongs to exactly one audio item.

On disk a dataset is a JSON manifest naming one feature file per modality per
split. Feature files are either the binary container (magic "ASEF") or, for
small fixtures, TSV with an id column followed by the feature columns.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DanglingPairReferenceError,
    DuplicateTextPairingError,
    InfeasibleConstraintError,
    MissingFileError,
    ShapeMismatchError,
)
from .fileio import atomic_write_bytes
from .linalg import as_matrix, l2_normalize_rows
from .retrieval import RetrievalIndex

FEATURE_MAGIC = b"ASEF"
FEATURE_VERSION = 1
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class PairedDataset:
    """Feature matrices for one split plus the text-to-audio pairing."""

    audio_features: np.ndarray = field(repr=False)
    text_features: np.ndarray = field(repr=False)
    pairs: tuple[tuple[int, int], ...]  # (text_index, audio_index)
    split: str = "train"

    def __post_init__(self):
        audio = as_matrix(self.audio_features, "audio_features")
        text = as_matrix(self.text_features, "text_features")
        pairs = tuple((int(t), int(a)) for t, a in self.pairs)
        seen_texts = set()
        for t, a in pairs:
            if not (0 <= t < text.shape[0]) or not (0 <= a < audio.shape[0]):
                raise DanglingPairReferenceError(
                    f"pair (text {t}, audio {a}) outside feature tables "
                    f"({text.shape[0]} texts, {audio.shape[0]} audios)"
                )
            if t in seen_texts:
                raise DuplicateTextPairingError(f"text {t} appears in more than one pair")
            seen_texts.add(t)
        if len(seen_texts) != text.shape[0]:
            missing = sorted(set(range(text.shape[0])) - seen_texts)
            raise DanglingPairReferenceError(
                f"texts without a pair record: {missing[:10]}"
            )
        object.__setattr__(self, "audio_features", audio)
        object.__setattr__(self, "text_features", text)
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def n_audio(self) -> int:
        return self.audio_features.shape[0]

    @property
    def n_text(self) -> int:
        return self.text_features.shape[0]

    @property
    def audio_dim(self) -> int:
        return self.audio_features.shape[1]

    @property
    def text_dim(self) -> int:
        return self.text_features.shape[1]

    def retrieval_index(self) -> RetrievalIndex:
        """Pairing structure for evaluation (requires every audio to own a caption)."""
        owners = [0] * self.n_text
        for t, a in self.pairs:
            owners[t] = a
        return RetrievalIndex(self.n_audio, self.n_text, tuple(owners))


@dataclass(frozen=True)
class DatasetBundle:
    """Train/val/test splits of one dataset; absent splits are None."""

    name: str
    train: PairedDataset | None
    val: PairedDataset | None
    test: PairedDataset | None

    def split(self, name: str) -> PairedDataset | None:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}, expected one of {SPLIT_NAMES}")
        return getattr(self, name)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a seed-deterministic synthetic paired-feature dataset.

    Each concept draws a unit latent vector; the audio feature is a fixed
    random linear map of the latent plus Gaussian noise, and each caption
    feature is a different fixed map of the same latent plus independent
    noise. Splits take disjoint concept ranges: train first, then val, then
    test. ``identity_maps`` replaces both maps by the identity (requires all
    three dims equal), which makes noiseless features identical across
    modalities.
    """

    n_concepts: int = 256
    captions_per_audio: int = 1
    d_latent: int = 48
    d_audio: int = 128
    d_text: int = 96
    noise_sigma: float = 0.1
    seed: int = 0
    identity_maps: bool = False
    val_fraction: float = 0.15
    test_fraction: float = 0.15

    def __post_init__(self):
        if self.n_concepts < 1 or self.captions_per_audio < 1:
            raise ValueError("counts must be >= 1")
        if self.d_latent < 1 or self.d_audio < 1 or self.d_text < 1:
            raise ValueError("dimensions must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.identity_maps and not (self.d_latent == self.d_audio == self.d_text):
            raise ValueError("identity_maps requires d_latent == d_audio == d_text")
        if self.val_fraction < 0 or self.test_fraction < 0:
            raise ValueError("split fractions must be >= 0")
        if self.val_fraction + self.test_fraction >= 1.0:
            raise ValueError("val and test fractions must leave room for train")

    def split_sizes(self) -> tuple[int, int, int]:
        n_val = round(self.n_concepts * self.val_fraction)
        n_test = round(self.n_concepts * self.test_fraction)
        return self.n_concepts - n_val - n_test, n_val, n_test


def generate_synthetic(spec: SyntheticSpec, name: str = "synthetic") -> DatasetBundle:
    """Draw a dataset from ``spec``. Same spec, bit-identical result.

    Draw order is fixed (maps, latents, audio noise, caption noise) so adding
    splits or captions never reshuffles earlier draws.
    """
    rng = np.random.default_rng(spec.seed)
    n, cpa = spec.n_concepts, spec.captions_per_audio

    if spec.identity_maps:
        map_audio = np.eye(spec.d_latent)
        map_text = np.eye(spec.d_latent)
    else:
        scale = 1.0 / np.sqrt(spec.d_latent)
        map_audio = rng.normal(size=(spec.d_latent, spec.d_audio)) * scale
        map_text = rng.normal(size=(spec.d_latent, spec.d_text)) * scale

    latents, zero_rows = l2_normalize_rows(rng.normal(size=(n, spec.d_latent)))
    if zero_rows.size:
        # astronomically unlikely for Gaussian draws; fail loudly if it happens
        raise ValueError(f"degenerate zero-norm latents at rows {zero_rows.tolist()}")
    audio_noise = rng.normal(size=(n, spec.d_audio))
    caption_noise = rng.normal(size=(n * cpa, spec.d_text))

    audio_all = latents @ map_audio + spec.noise_sigma * audio_noise
    text_clean = np.repeat(latents @ map_text, cpa, axis=0)
    text_all = text_clean + spec.noise_sigma * caption_noise

    n_train, n_val, n_test = spec.split_sizes()
    bounds = (0, n_train, n_train + n_val, n)
    splits: list[PairedDataset | None] = []
    for si, split_name in enumerate(SPLIT_NAMES):
        lo, hi = bounds[si], bounds[si + 1]
        if hi == lo:
            splits.append(None)
            continue
        k = hi - lo
        pairs = tuple(
            (c * cpa + j, c) for c in range(k) for j in range(cpa)
        )
        splits.append(
            PairedDataset(
                audio_all[lo:hi].copy(),
                text_all[lo * cpa : hi * cpa].copy(),
                pairs,
                split=split_name,
            )
        )
    return DatasetBundle(name, *splits)


# --- feature file IO ---------------------------------------------------------


def write_features_binary(path, features) -> None:
    """Binary feature container: "ASEF" | version u32 | rows u32 | dim u32 | f64 row-major."""
    m = as_matrix(features, "features")
    header = FEATURE_MAGIC + struct.pack("<III", FEATURE_VERSION, m.shape[0], m.shape[1])
    atomic_write_bytes(str(path), header + np.ascontiguousarray(m, dtype="<f8").tobytes())


def read_features_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FEATURE_MAGIC:
        raise ValueError(f"{path}: not a feature file (bad magic {blob[:4]!r})")
    version, rows, dim = struct.unpack_from("<III", blob, 4)
    if version != FEATURE_VERSION:
        raise ValueError(f"{path}: unsupported feature file version {version}")
    expected = 16 + rows * dim * 8
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    data = np.frombuffer(blob, dtype="<f8", count=rows * dim, offset=16)
    return data.reshape(rows, dim).astype(np.float64)


def write_features_tsv(path, features, ids=None) -> None:
    """TSV alternative for small fixtures: id column then one column per dim."""
    m = as_matrix(features, "features")
    if ids is None:
        ids = [str(i) for i in range(m.shape[0])]
    ids = [str(i) for i in ids]
    if len(ids) != m.shape[0]:
        raise ShapeMismatchError(f"{len(ids)} ids for {m.shape[0]} rows")
    lines = []
    for row_id, row in zip(ids, m):
        lines.append(row_id + "\t" + "\t".join(repr(float(v)) for v in row))
    atomic_write_bytes(str(path), ("\n".join(lines) + "\n").encode())


def read_features_tsv(path) -> tuple[np.ndarray, dict[str, int]]:
    """Returns (features, id -> row map)."""
    rows = []
    id_map: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"{path}:{line_no + 1}: need an id and at least one value")
            row_id = parts[0]
            if row_id in id_map:
                raise ValueError(f"{path}:{line_no + 1}: duplicate id {row_id!r}")
            id_map[row_id] = len(rows)
            rows.append([float(v) for v in parts[1:]])
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ShapeMismatchError(f"{path}: inconsistent row widths {sorted(widths)}")
    return np.array(rows, dtype=np.float64), id_map


def read_features(path) -> tuple[np.ndarray, dict[str, int]]:
    """Dispatch on content: binary container or TSV. Returns (features, id map)."""
    if not os.path.exists(path):
        raise MissingFileError(f"feature file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == FEATURE_MAGIC:
        m = read_features_binary(path)
        return m, {str(i): i for i in range(m.shape[0])}
    return read_features_tsv(path)


# --- manifest IO --------------------------------------------------------------


def save_dataset(bundle: DatasetBundle, directory, file_format: str = "binary") -> str:
    """Write feature files plus ``manifest.json`` under ``directory``.

    Returns the manifest path. ``file_format`` is "binary" or "tsv".
    """
    if file_format not in ("binary", "tsv"):
        raise ValueError(f"file_format must be 'binary' or 'tsv', got {file_format!r}")
    os.makedirs(directory, exist_ok=True)
    ext = "asef" if file_format == "binary" else "tsv"
    manifest: dict = {"name": bundle.name, "splits": {}}
    dims_recorded = False
    for split_name in SPLIT_NAMES:
        ds = bundle.split(split_name)
        if ds is None:
            continue
        if not dims_recorded:
            manifest["audio_dim"] = ds.audio_dim
            manifest["text_dim"] = ds.text_dim
            dims_recorded = True
        audio_file = f"{split_name}_audio.{ext}"
        text_file = f"{split_name}_text.{ext}"
        writer = write_features_binary if file_format == "binary" else write_features_tsv
        writer(os.path.join(directory, audio_file), ds.audio_features)
        writer(os.path.join(directory, text_file), ds.text_features)
        manifest["splits"][split_name] = {
            "audio_features": audio_file,
            "text_features": text_file,
            "pairs": [{"text_id": str(t), "audio_id": str(a)} for t, a in ds.pairs],
        }
    if not dims_recorded:
        raise ValueError("bundle has no splits to save")
    manifest_path = os.path.join(directory, "manifest.json")
    atomic_write_bytes(manifest_path, (json.dumps(manifest, indent=2) + "\n").encode())
    return manifest_path


def _resolve_pairs(records, text_ids, audio_ids, where) -> tuple[tuple[int, int], ...]:
    pairs = []
    for rec in records:
        t_key, a_key = str(rec["text_id"]), str(rec["audio_id"])
        if t_key not in text_ids:
            raise DanglingPairReferenceError(
                f"{where}: pair references unknown text_id {t_key!r}"
            )
        if a_key not in audio_ids:
            raise DanglingPairReferenceError(
                f"{where}: pair references unknown audio_id {a_key!r}"
            )
        pairs.append((text_ids[t_key], audio_ids[a_key]))
    return tuple(pairs)


def load_dataset(manifest_path) -> DatasetBundle:
    """Load a dataset bundle from its manifest, validating shapes and pairing."""
    if not os.path.exists(manifest_path):
        raise MissingFileError(f"manifest not found: {manifest_path}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(manifest_path))
    name = manifest.get("name", "dataset")
    audio_dim = manifest.get("audio_dim")
    text_dim = manifest.get("text_dim")

    loaded: dict[str, PairedDataset | None] = {s: None for s in SPLIT_NAMES}
    for split_name, entry in manifest.get("splits", {}).items():
        if split_name not in SPLIT_NAMES:
            raise ValueError(f"manifest has unknown split {split_name!r}")
        audio_path = os.path.join(base, entry["audio_features"])
        text_path = os.path.join(base, entry["text_features"])
        for p, label in ((audio_path, "audio_features"), (text_path, "text_features")):
            if not os.path.exists(p):
                raise MissingFileError(f"split {split_name!r} {label}: {p} does not exist")
        audio, audio_ids = read_features(audio_path)
        text, text_ids = read_features(text_path)
        if audio_dim is not None and audio.shape[1] != audio_dim:
            raise ShapeMismatchError(
                f"split {split_name!r} audio dim {audio.shape[1]} != manifest {audio_dim}"
            )
        if text_dim is not None and text.shape[1] != text_dim:
            raise ShapeMismatchError(
                f"split {split_name!r} text dim {text.shape[1]} != manifest {text_dim}"
            )
        pairs = _resolve_pairs(entry["pairs"], text_ids, audio_ids, f"split {split_name!r}")
        seen = set()
        for rec, (t, _) in zip(entry["pairs"], pairs):
            if t in seen:
                raise DuplicateTextPairingError(
                    f"split {split_name!r}: text_id {rec['text_id']!r} paired more than once"
                )
            seen.add(t)
        loaded[split_name] = PairedDataset(audio, text, pairs, split=split_name)
    return DatasetBundle(name, loaded["train"], loaded["val"], loaded["test"])


def load_split(manifest_path, split_name: str) -> PairedDataset:
    ds = load_dataset(manifest_path).split(split_name)
    if ds is None:
        raise MissingFileError(f"manifest has no {split_name!r} split: {manifest_path}")
    return ds


# --- batch planning ------------------------------------------------------------


@dataclass(frozen=True)
class BatchPlan:
    """Epoch plan: groups of pair indices, each exactly ``batch_size`` long.

    Within any batch no two pairs share an audio item, so the batch similarity
    matrix has true positives only on its diagonal.
    """

    batches: tuple[tuple[int, ...], ...]
    batch_size: int
    n_dropped: int
    seed: int
    epoch: int


def plan_batches(dataset: PairedDataset, batch_size: int, seed: int, epoch: int) -> BatchPlan:
    """Deterministic collision-free batch assignment for one epoch.

    Pairs are shuffled by a (seed, epoch) keyed permutation, grouped by owning
    audio, and the groups dealt consecutively round-robin over the
    floor(N / B) batches; each batch keeps its first B assignments. Because a
    group's members land in consecutive batches modulo the batch count, no
    batch sees the same audio twice as long as no audio owns more captions
    than there are batches.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = dataset.n_pairs
    if n < batch_size:
        raise InfeasibleConstraintError(
            f"dataset has {n} pairs, fewer than batch_size {batch_size}"
        )
    n_batches = n // batch_size

    counts: dict[int, int] = {}
    for _, a in dataset.pairs:
        counts[a] = counts.get(a, 0) + 1
    worst = max(counts.values())
    if worst > n_batches:
        offender = max(counts, key=lambda a: counts[a])
        raise InfeasibleConstraintError(
            f"audio {offender} owns {worst} captions but the epoch has only "
            f"{n_batches} batches of size {batch_size}"
        )

    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(n)

    groups: dict[int, list[int]] = {}
    group_order: list[int] = []
    for idx in order:
        a = dataset.pairs[idx][1]
        if a not in groups:
            groups[a] = []
            group_order.append(a)
        groups[a].append(int(idx))

    assigned: list[list[int]] = [[] for _ in range(n_batches)]
    position = 0
    for a in group_order:
        for idx in groups[a]:
            assigned[position % n_batches].append(idx)
            position += 1

    batches = tuple(tuple(batch[:batch_size]) for batch in assigned)
    return BatchPlan(
        batches=batches,
        batch_size=batch_size,
        n_dropped=n - n_batches * batch_size,
        seed=seed,
        epoch=epoch,
    )
