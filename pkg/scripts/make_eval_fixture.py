#!/usr/bin/env python3
"""Regenerate the golden evaluation fixture under tests/data/golden/.

The fixture freezes one full `eval` run: classification lists, image/text
embeddings, pooled feature matrices, and the exact report JSON the CLI
prints for them. Tests compare fresh CLI output byte-for-byte against the
frozen report, so regenerating this fixture (only needed when the metric
definitions deliberately change) re-freezes expected output.

Also writes a small projector fixture: a weight file plus one input/output
pair for the affine map.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from fairref.cli import main as cli_main
from fairref.conditioning import apply_projector, make_projector, save_projector
from fairref.store import write_matrix

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden"

AGES = ["<20", "20-29", "30-39", "40-49", "50-59", "60+"]


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.normal(size=(n, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(2024)

    prompts = ["Photo of a doctor", "Photo of a firefighter", "Photo of a teacher"]
    classifications = {}
    for p_index, prompt in enumerate(prompts):
        entries = []
        for i in range(6):
            if (p_index, i) in {(0, 5), (2, 2)}:
                entries.append(None)  # an image with no detectable face
                continue
            entries.append(
                {
                    "age_group": AGES[(p_index * 2 + i) % 6],
                    "gender": "male" if (i + p_index) % 2 == 0 else "female",
                    "skin_tone": (p_index * 3 + i) % 10 + 1,
                }
            )
        classifications[prompt] = entries
    (GOLDEN / "classifications.json").write_text(
        json.dumps(classifications, indent=2, sort_keys=True) + "\n"
    )

    embeddings = {}
    for prompt in prompts:
        count = len(classifications[prompt])
        text = unit_rows(rng, 1, 8)[0]
        images = unit_rows(rng, count, 8)
        embeddings[prompt] = {
            "text": [float(x) for x in text],
            "images": [[float(x) for x in row] for row in images],
        }
    (GOLDEN / "embeddings.json").write_text(
        json.dumps(embeddings, indent=2, sort_keys=True) + "\n"
    )

    write_matrix(GOLDEN / "gen_features.frg1", rng.normal(size=(48, 6)).astype(np.float32))
    write_matrix(GOLDEN / "real_features.frg1", rng.normal(size=(64, 6)).astype(np.float32))

    # freeze the CLI's report for these inputs
    report_path = GOLDEN / "report.json"
    exit_code = cli_main(
        [
            "eval",
            "--classifications",
            str(GOLDEN / "classifications.json"),
            "--embeddings",
            str(GOLDEN / "embeddings.json"),
            "--gen-features",
            str(GOLDEN / "gen_features.frg1"),
            "--real-features",
            str(GOLDEN / "real_features.frg1"),
            "--report-out",
            str(report_path),
        ]
    )
    if exit_code != 0:
        raise SystemExit(f"eval failed with exit code {exit_code}")

    # projector fixture: weights plus one exact input/output pair
    weight = rng.normal(size=(5, 8)).astype(np.float32)
    bias = rng.normal(size=5).astype(np.float32)
    projector = make_projector(weight, bias)
    save_projector(projector, GOLDEN / "projector.frgw")
    visual = unit_rows(rng, 1, 8)[0]
    token = apply_projector(projector, visual)
    (GOLDEN / "projector_io.json").write_text(
        json.dumps(
            {
                "input": [float(x) for x in visual],
                "output": [float(x) for x in token],
            },
            indent=2,
        )
        + "\n"
    )
    print(f"wrote fixture files to {GOLDEN}")


if __name__ == "__main__":
    main()
