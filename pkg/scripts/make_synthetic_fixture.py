#!/usr/bin/env python3
"""Generate the bundled synthetic fixture: a likelihood dump plus annotations.

Fifty article/summary pairs across five systems, with a latent per-pair
quality that drives both the token probabilities and the human judgments, so
metric-vs-human correlations on the fixture are positive but noisy.  Output
is deterministic for a given seed; the checked-in files under tests/data
were produced with the defaults.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

WORDS = (
    "the a on in over under city council mayor storm river bridge traffic "
    "report plan budget school team game season player coach vote election "
    "market price company deal factory workers strike union health hospital "
    "doctor study results flood rain week month officials said announced new"
).split()


def clip(value, low, high):
    return max(low, min(high, value))


def make_pair(i: int, rng: np.random.Generator) -> tuple[dict, dict]:
    pair_id = f"p{i:03d}"
    article = [str(w) for w in rng.choice(WORDS, size=int(rng.integers(25, 40)))]
    kind = "abstractive" if i % 5 < 3 else "extractive"
    if kind == "extractive":
        start = int(rng.integers(0, len(article) - 12))
        summary = article[start : start + int(rng.integers(6, 12))]
    else:
        summary = [
            str(rng.choice(article)) if rng.random() < 0.55 else str(rng.choice(WORDS))
            for _ in range(int(rng.integers(8, 14)))
        ]
    quality = clip(float(rng.beta(2.0, 2.0)) + (0.15 if kind == "extractive" else 0.0), 0.0, 1.0)

    length = int(rng.integers(3, 21))
    tokens = [summary[j % len(summary)] for j in range(length)]
    p_s2s = [clip(0.15 + 0.7 * quality + float(rng.normal(0, 0.12)), 0.02, 0.98) for _ in range(length)]
    p_lm = [clip(p * float(rng.uniform(0.25, 1.05)), 0.01, 0.97) for p in p_s2s]
    entropy_s2s = [round(float(v), 6) for v in rng.uniform(0.4, 3.5, size=length)]
    entropy_lm = [round(e * float(rng.uniform(0.9, 1.8)), 6) for e in entropy_s2s]

    record = {
        "id": pair_id,
        "tokens": tokens,
        "logp_s2s": [round(math.log(p), 6) for p in p_s2s],
        "logp_lm": [round(math.log(p), 6) for p in p_lm],
        "entropy_s2s": entropy_s2s,
        "entropy_lm": entropy_lm,
    }

    def likert():
        return round(clip(1.0 + 4.0 * (0.2 + 0.6 * quality + float(rng.normal(0, 0.15))), 1.0, 5.0), 3)

    annotation = {
        "id": pair_id,
        "article": " ".join(article),
        "summary": " ".join(summary),
        "system": f"sys{i // 10 + 1}",
        "kind": kind,
        "judgments": {
            "factuality": round(clip(quality + float(rng.normal(0, 0.12)), 0.0, 1.0), 3),
            "consistency": likert(),
            "coherence": likert(),
            "fluency": likert(),
            "relevance": likert(),
        },
    }
    return record, annotation


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("tests/data"))
    parser.add_argument("--n-pairs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=20240817)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    dump_path = args.out_dir / f"dump_{args.n_pairs}.jsonl"
    pairs_path = args.out_dir / f"pairs_{args.n_pairs}.jsonl"
    with open(dump_path, "w", encoding="utf-8") as dump_fh, open(
        pairs_path, "w", encoding="utf-8"
    ) as pairs_fh:
        for i in range(args.n_pairs):
            record, annotation = make_pair(i, rng)
            dump_fh.write(json.dumps(record) + "\n")
            pairs_fh.write(json.dumps(annotation) + "\n")
    print(f"wrote {dump_path} and {pairs_path}")


if __name__ == "__main__":
    main()
