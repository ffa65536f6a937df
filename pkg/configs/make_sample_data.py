"""Regenerates the sample corpora in configs/sample_data/ (deterministic)."""

from __future__ import annotations

import json
import random
from pathlib import Path

OUT = Path(__file__).parent / "sample_data"

LEMMA_LABELS = {
    "in": ["Locus", "Time", "Manner", "Goal|Locus", "Topic"],
    "for": ["Beneficiary", "Purpose", "Duration", "Topic"],
    "to": ["Goal", "Recipient", "Purpose", "Beneficiary|Goal"],
    "with": ["Means", "Accompanier", "Instrument", "Manner", "Theme"],
    "from": ["Source", "StartTime", "Originator|Source"],
    # multiword targets: first-token index, space-joined lemma
    "close to": ["Locus", "Goal"],
    "out of": ["Source", "Path"],
}

SUBJECTS = ["the cook", "my sister", "a neighbor", "the clerk", "our guide", "the driver"]
VERBS = ["waited", "walked", "argued", "paid", "stayed", "worked", "left", "smiled"]
OBJECTS = [
    "the station",
    "an old friend",
    "the morning",
    "a small fee",
    "the garden",
    "her notebook",
    "the market",
    "his answer",
]


def sentence(rng: random.Random, lemma: str) -> tuple[list[str], int]:
    left = f"{rng.choice(SUBJECTS)} {rng.choice(VERBS)}".split()
    right = rng.choice(OBJECTS).split()
    tokens = left + lemma.split() + right + ["."]
    return tokens, len(left)


def build(rng: random.Random, doc_count: int, per_lemma: int, start: int = 0) -> list[dict]:
    records = []
    s = start
    for lemma, labels in LEMMA_LABELS.items():
        for i in range(per_lemma):
            tokens, index = sentence(rng, lemma)
            records.append(
                {
                    "doc_id": f"doc{s % doc_count}",
                    "sent_id": f"s{s:03d}",
                    "tokens": tokens,
                    "targets": [
                        {"index": index, "lemma": lemma, "label": labels[i % len(labels)]}
                    ],
                }
            )
            s += 1
    return records


def write(path: Path, records: list[dict]) -> None:
    path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n", encoding="utf-8"
    )


def main() -> None:
    OUT.mkdir(exist_ok=True)
    rng = random.Random(20240601)
    write(OUT / "labeled.jsonl", build(rng, doc_count=6, per_lemma=14))
    unlabeled = build(rng, doc_count=2, per_lemma=3, start=1000)
    for rec in unlabeled:
        rec["doc_id"] = "pool-" + rec["doc_id"]
    write(OUT / "unlabeled.jsonl", unlabeled)
    print(f"wrote {OUT}/labeled.jsonl and {OUT}/unlabeled.jsonl")


if __name__ == "__main__":
    main()
