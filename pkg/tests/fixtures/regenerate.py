"""Rebuild every committed fixture in this directory.

Run from the repository root:

    python3 tests/fixtures/regenerate.py

Produces, deterministically:
  acceptance_dataset/   256-concept synthetic dataset (binary features)
  acceptance_gate.json  recall gate calibrated from 12 verified training runs
  tiny_dataset/         30-concept noiseless dataset (TSV features)
  golden/               config + artifacts of one short reference training run

The gate is not asserted a priori: this script re-runs the full calibration
grid (4 objectives x 3 seeds, ~1 minute) and records what it observed next to
the gate value, so the committed number is always traceable to real runs.
"""

import json
import os
import shutil
import sys
import tempfile
import time

from asem.cli import main as cli_main
from asem.data import SyntheticSpec, generate_synthetic, save_dataset
from asem.fileio import atomic_write_text
from asem.losses import OBJECTIVE_NAMES
from asem.train import TrainConfig, evaluate_heads, train_one

HERE = os.path.dirname(os.path.abspath(__file__))

ACCEPTANCE_DATASET = {
    "n_concepts": 256,
    "captions_per_audio": 5,
    "d_latent": 48,
    "d_audio": 128,
    "d_text": 96,
    "noise_sigma": 0.05,
    "seed": 7,
}
ACCEPTANCE_RECIPE = {
    "batch_size": 32,
    "epochs": 50,
    "base_lr": 1e-4,
    "lr_decay_factor": 0.1,
    "lr_decay_every": 20,
    "embedding_dim": 256,
}
GATE = 0.80
CALIBRATION_SEEDS = (0, 1, 2)

TINY_DATASET = {
    "n_concepts": 30,
    "d_latent": 8,
    "d_audio": 8,
    "d_text": 8,
    "identity_maps": True,
    "noise_sigma": 0.0,
    "seed": 21,
    "val_fraction": 0.2,
    "test_fraction": 0.2,
}

GOLDEN_CONFIG = {
    "dataset": "tiny_dataset/manifest.json",
    "objective": "nt-xent",
    "batch_size": 6,
    "epochs": 3,
    "base_lr": 1e-3,
    "embedding_dim": 8,
    "seeds": [0],
}


def build_acceptance_dataset():
    out = os.path.join(HERE, "acceptance_dataset")
    spec = SyntheticSpec(**ACCEPTANCE_DATASET)
    bundle = generate_synthetic(spec, name="acceptance-256")
    if os.path.isdir(out):
        shutil.rmtree(out)
    save_dataset(bundle, out, file_format="binary")
    print(f"wrote {out}")
    return bundle


def calibrate_gate(bundle):
    """Train the full grid and commit the gate next to the observed evidence."""
    runs = []
    for objective in OBJECTIVE_NAMES:
        for seed in CALIBRATION_SEEDS:
            config = TrainConfig(objective=objective, **ACCEPTANCE_RECIPE)
            t0 = time.perf_counter()
            result = train_one(config, seed, bundle)
            elapsed = time.perf_counter() - t0
            report = evaluate_heads(result.audio_head, result.text_head, bundle.test)
            runs.append(
                {
                    "objective": objective,
                    "seed": seed,
                    "t2a_r1": report.t2a_r1,
                    "a2t_r1": report.a2t_r1,
                    "best_epoch": result.best_epoch,
                    "seconds": round(elapsed, 1),
                }
            )
            print(f"  {objective:16s} seed={seed} t2a_r1={report.t2a_r1:.4f} {elapsed:.1f}s")
    min_observed = min(r["t2a_r1"] for r in runs)
    if min_observed < GATE:
        raise SystemExit(
            f"calibration broke the gate: min observed {min_observed:.4f} < {GATE}"
        )
    payload = {
        "t2a_r1_gate": GATE,
        "dataset": ACCEPTANCE_DATASET,
        "recipe": ACCEPTANCE_RECIPE,
        "calibration": {
            "seeds": list(CALIBRATION_SEEDS),
            "runs": runs,
            "min_observed_t2a_r1": min_observed,
            "note": (
                "gate fixed below the minimum test-split text-to-audio R@1 "
                "observed across 4 objectives x 3 seeds under the recipe above; "
                "the value comes from these runs, not from an a-priori guess"
            ),
        },
    }
    path = os.path.join(HERE, "acceptance_gate.json")
    atomic_write_text(path, json.dumps(payload, indent=2) + "\n")
    print(f"wrote {path} (gate {GATE}, min observed {min_observed:.4f})")


def build_tiny_dataset():
    out = os.path.join(HERE, "tiny_dataset")
    bundle = generate_synthetic(SyntheticSpec(**TINY_DATASET), name="tiny")
    if os.path.isdir(out):
        shutil.rmtree(out)
    save_dataset(bundle, out, file_format="tsv")
    print(f"wrote {out}")


def build_golden_run():
    out = os.path.join(HERE, "golden")
    if os.path.isdir(out):
        shutil.rmtree(out)
    os.makedirs(out)
    atomic_write_text(
        os.path.join(out, "config.json"), json.dumps(GOLDEN_CONFIG, indent=2) + "\n"
    )
    manifest = os.path.join(HERE, "tiny_dataset", "manifest.json")
    with tempfile.TemporaryDirectory() as tmp:
        code = cli_main(
            ["train", "--config", os.path.join(out, "config.json"),
             "--set", f'dataset="{manifest}"', "--out", tmp]
        )
        if code != 0:
            raise SystemExit(f"golden training run failed with exit code {code}")
        for name in ("model.asem", "model.asem.json", "epochs.csv",
                     "report.csv", "report.txt"):
            shutil.copyfile(os.path.join(tmp, name), os.path.join(out, name))
    print(f"wrote {out}")


if __name__ == "__main__":
    only = set(sys.argv[1:])
    if not only or "acceptance" in only:
        bundle = build_acceptance_dataset()
        calibrate_gate(bundle)
    if not only or "tiny" in only:
        build_tiny_dataset()
    if not only or "golden" in only:
        build_golden_run()
