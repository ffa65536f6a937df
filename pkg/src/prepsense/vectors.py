"""Per-instance supersense probability vectors.

Covers the token-balanced jackknife document partition, vector providers
(a seeded gold-smoothed mock and an external-command adapter), the vector
store with split provenance, and cosine similarity.

Cosine is computed with plain left-to-right float accumulation so that
rankings are bit-for-bit reproducible across runs and platforms.
"""

from __future__ import annotations

import json
import math
import random
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .corpus import Corpus, LabelInventory, SupersenseLabel, corpus_subset, write_corpus
from .errors import DomainError, ProviderError, ValidationError

PROB_SUM_TOLERANCE = 1e-6
CLAMP_EPSILON = 1e-12
# Provenance split index for vectors predicted outside the jackknife scheme
# (e.g. targets predicted by a provider trained on the full labeled corpus).
UNSPLIT = -1


@dataclass(frozen=True)
class ProbabilityVector:
    """A distribution over the label inventory, aligned to inventory order."""

    instance_id: str
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.probs:
            raise ValidationError(f"{self.instance_id}: empty probability vector")
        if any(p < 0.0 for p in self.probs):
            raise ValidationError(f"{self.instance_id}: negative probability")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_SUM_TOLERANCE:
            raise ValidationError(
                f"{self.instance_id}: probabilities sum to {total:.8f}, not 1"
            )


def clamp_and_renormalize(probs: Iterable[float]) -> tuple[float, ...]:
    """Zero out tiny entries and rescale; tolerates sloppy float serialization."""
    cleaned = [0.0 if p < CLAMP_EPSILON else float(p) for p in probs]
    total = math.fsum(cleaned)
    if total <= 0.0:
        raise ValidationError("probability vector has no mass after clamping")
    return tuple(p / total for p in cleaned)


@dataclass(frozen=True)
class SplitAssignment:
    """A partition of documents into splits, keyed by doc_id."""

    n_splits: int
    assignment: dict[str, int]

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValidationError("n_splits must be positive")
        for doc, idx in self.assignment.items():
            if not 0 <= idx < self.n_splits:
                raise ValidationError(f"doc {doc!r} assigned to out-of-range split {idx}")

    def docs_in_split(self, split: int) -> list[str]:
        return sorted(d for d, i in self.assignment.items() if i == split)

    def docs_outside_split(self, split: int) -> list[str]:
        return sorted(d for d, i in self.assignment.items() if i != split)


def partition_jackknife(corpus: Corpus, n_splits: int = 5) -> SplitAssignment:
    """Greedy heaviest-first document partition, approximately token-balanced.

    Documents are taken in order of descending token count (ties by doc_id)
    and each goes to the currently lightest split (ties by lowest index).
    Deterministic; the resulting spread max-min never exceeds the largest
    document's token count.
    """
    if n_splits < 1:
        raise ValidationError("n_splits must be positive")
    if len(corpus.documents) < n_splits:
        raise ValidationError(
            f"corpus has {len(corpus.documents)} documents, fewer than {n_splits} splits"
        )
    order = sorted(corpus.documents.items(), key=lambda kv: (-kv[1], kv[0]))
    loads = [0] * n_splits
    assignment: dict[str, int] = {}
    for doc_id, count in order:
        lightest = min(range(n_splits), key=lambda i: (loads[i], i))
        assignment[doc_id] = lightest
        loads[lightest] += count
    return SplitAssignment(n_splits, assignment)


class VectorStore:
    """Write-once mapping instance_id -> vector, with split provenance."""

    def __init__(self, n_labels: int):
        if n_labels < 1:
            raise ValidationError("n_labels must be positive")
        self.n_labels = n_labels
        self.vectors: dict[str, ProbabilityVector] = {}
        self.provenance: dict[str, int] = {}

    def add(self, vector: ProbabilityVector, split: int = UNSPLIT) -> None:
        if len(vector.probs) != self.n_labels:
            raise ValidationError(
                f"{vector.instance_id}: vector has {len(vector.probs)} entries, "
                f"inventory has {self.n_labels}"
            )
        if vector.instance_id in self.vectors:
            raise ValidationError(f"duplicate vector for {vector.instance_id!r}")
        self.vectors[vector.instance_id] = vector
        self.provenance[vector.instance_id] = split

    def __contains__(self, instance_id: object) -> bool:
        return instance_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def require(self, instance_id: str) -> ProbabilityVector:
        try:
            return self.vectors[instance_id]
        except KeyError:
            raise ValidationError(f"no vector for instance {instance_id!r}") from None

    def entries(self) -> list[dict]:
        return [
            {"instance_id": iid, "probs": list(vec.probs), "split": self.provenance[iid]}
            for iid, vec in sorted(self.vectors.items())
        ]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self.entries():
                fh.write(json.dumps(entry) + "\n")

    @classmethod
    def load(cls, path: str | Path, n_labels: int) -> "VectorStore":
        store = cls(n_labels)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    probs = clamp_and_renormalize(rec["probs"])
                    vector = ProbabilityVector(rec["instance_id"], probs)
                    store.add(vector, int(rec.get("split", UNSPLIT)))
                except (KeyError, TypeError, ValueError, ValidationError) as exc:
                    raise ValidationError(f"{path}, line {lineno}: {exc}") from None
        return store

    @classmethod
    def from_entries(cls, entries: Iterable[Mapping], n_labels: int) -> "VectorStore":
        store = cls(n_labels)
        for rec in entries:
            vector = ProbabilityVector(rec["instance_id"], tuple(rec["probs"]))
            store.add(vector, int(rec.get("split", UNSPLIT)))
        return store


def cosine_similarity(a: ProbabilityVector, b: ProbabilityVector) -> float:
    """dot(a,b) / (|a|·|b|); in [0, 1] for probability vectors."""
    pa, pb = a.probs, b.probs
    if len(pa) != len(pb):
        raise DomainError(f"vector lengths differ: {len(pa)} vs {len(pb)}")
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for x, y in zip(pa, pb):
        dot += x * y
        norm_a += x * x
        norm_b += y * y
    if norm_a == 0.0 or norm_b == 0.0:
        raise DomainError("cosine similarity is undefined for a zero vector")
    return dot / (math.sqrt(norm_a) * math.sqrt(norm_b))


def argmax_label(vector: ProbabilityVector, inventory: LabelInventory) -> SupersenseLabel:
    """The single-name label at the vector's highest entry (ties: lowest index)."""
    best = max(range(len(vector.probs)), key=lambda i: (vector.probs[i], -i))
    name = inventory.names[best]
    return SupersenseLabel(name, name)


class VectorProvider(Protocol):
    """Anything that can predict vectors for a corpus given training material."""

    def predict(self, train: Corpus, targets: Corpus) -> dict[str, tuple[float, ...]]:
        ...


class MockTaggerProvider:
    """Gold-smoothed synthetic tagger for end-to-end testing.

    Each instance gets (1 - epsilon) of the mass on its gold label's inventory
    positions (split evenly between scene role and function when they differ)
    plus epsilon spread uniformly. With probability flip_prob the hot mass
    lands on a random wrong position instead, simulating tagger errors.
    Draws are seeded per instance, so results do not depend on call order.
    The training corpus is ignored.
    """

    def __init__(
        self,
        inventory: LabelInventory,
        epsilon: float = 0.1,
        flip_prob: float = 0.0,
        seed: int = 0,
    ):
        if not 0.0 <= epsilon < 1.0:
            raise ValidationError("epsilon must be in [0, 1)")
        if not 0.0 <= flip_prob <= 1.0:
            raise ValidationError("flip_prob must be in [0, 1]")
        self.inventory = inventory
        self.epsilon = epsilon
        self.flip_prob = flip_prob
        self.seed = seed

    def predict(self, train: Corpus, targets: Corpus) -> dict[str, tuple[float, ...]]:
        n = len(self.inventory)
        out: dict[str, tuple[float, ...]] = {}
        for inst in targets.instances:
            if inst.gold is None:
                raise ProviderError(f"mock provider needs a gold label for {inst.instance_id}")
            rng = random.Random(f"{self.seed}:{inst.instance_id}")
            hot = sorted(
                {
                    self.inventory.position(inst.gold.scene_role),
                    self.inventory.position(inst.gold.function),
                }
            )
            if rng.random() < self.flip_prob:
                hot = [rng.choice([i for i in range(n) if i not in hot])]
            probs = [self.epsilon / n] * n
            for pos in hot:
                probs[pos] += (1.0 - self.epsilon) / len(hot)
            out[inst.instance_id] = tuple(probs)
        return out


class ExternalCommandProvider:
    """Adapter for an external tagger command.

    The command is invoked as `argv... train.jsonl predict.jsonl out.jsonl`
    and must write one JSON object {"instance_id": ..., "probs": [...]} per
    prediction line. Entries are clamped and renormalized on read.
    """

    def __init__(self, argv: list[str]):
        if not argv:
            raise ValidationError("external provider needs a command")
        self.argv = list(argv)

    def predict(self, train: Corpus, targets: Corpus) -> dict[str, tuple[float, ...]]:
        with tempfile.TemporaryDirectory(prefix="prepsense-vec-") as tmp:
            train_path = Path(tmp) / "train.jsonl"
            predict_path = Path(tmp) / "predict.jsonl"
            out_path = Path(tmp) / "vectors.jsonl"
            write_corpus(train, train_path)
            write_corpus(targets, predict_path)
            proc = subprocess.run(
                self.argv + [str(train_path), str(predict_path), str(out_path)],
                capture_output=True,
                text=True,
            )
            if proc.returncode != 0:
                raise ProviderError(
                    f"provider command failed (exit {proc.returncode}): {proc.stderr.strip()}"
                )
            out: dict[str, tuple[float, ...]] = {}
            try:
                with open(out_path, encoding="utf-8") as fh:
                    for line in fh:
                        if not line.strip():
                            continue
                        rec = json.loads(line)
                        out[rec["instance_id"]] = clamp_and_renormalize(rec["probs"])
            except (OSError, KeyError, TypeError, ValueError) as exc:
                raise ProviderError(f"provider output unreadable: {exc}") from None
            return out


def _merge_predictions(
    store: VectorStore,
    predictions: Mapping[str, tuple[float, ...]],
    expected: Corpus,
    split: int,
) -> None:
    expected_ids = {i.instance_id for i in expected.instances}
    extra = set(predictions) - expected_ids
    if extra:
        raise ValidationError(f"provider predicted unknown instances: {sorted(extra)[:3]}")
    missing = expected_ids - set(predictions)
    if missing:
        raise ValidationError(f"provider left instances unpredicted: {sorted(missing)[:3]}")
    for iid in sorted(predictions):
        store.add(ProbabilityVector(iid, predictions[iid]), split)


def produce_vectors(
    corpus: Corpus,
    splits: SplitAssignment,
    provider: VectorProvider,
    n_labels: int,
) -> VectorStore:
    """Predict each split with a provider trained on the complement of that split.

    Every instance ends up with a vector whose provenance records the split
    it sat in, guaranteeing no instance was predicted by a provider trained
    on its own document.
    """
    store = VectorStore(n_labels)
    for split in range(splits.n_splits):
        train = corpus_subset(corpus, splits.docs_outside_split(split))
        predict = corpus_subset(corpus, splits.docs_in_split(split))
        try:
            predictions = provider.predict(train, predict)
        except ProviderError:
            raise
        except Exception as exc:
            raise ProviderError(f"provider failed for split {split}: {exc}") from exc
        try:
            _merge_predictions(store, predictions, predict, split)
        except ValidationError as exc:
            raise ValidationError(f"split {split}: {exc}") from None
    return store


def produce_target_vectors(
    store: VectorStore,
    labeled: Corpus,
    targets: Corpus,
    provider: VectorProvider,
) -> None:
    """Predict target-corpus vectors with a provider trained on all of labeled.

    Targets that already have a (jackknifed) vector are left untouched.
    Provenance for new entries is UNSPLIT.
    """
    pending = tuple(i for i in targets.instances if i.instance_id not in store)
    if not pending:
        return
    pending_corpus = Corpus(
        targets.kind,
        pending,
        dict(targets.documents),
        dict(targets.sentences),
    )
    try:
        predictions = provider.predict(labeled, pending_corpus)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"provider failed for targets: {exc}") from exc
    _merge_predictions(store, predictions, pending_corpus, UNSPLIT)
