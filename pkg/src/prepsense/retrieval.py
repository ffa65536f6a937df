"""Neighbor retrieval from the labeled corpus for a target instance.

Implements cosine and seeded-random ranking, the same-word and
same-supersense constraints, the diversity filter (all options carry
distinct gold labels), batch assembly with optional tagger-prediction
backstop, and deduplicating merge across strategies with provenance.

All operations are pure over immutable inputs; ties everywhere break by
instance_id so results replay identically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Corpus, Instance, LabelInventory, SupersenseLabel
from .errors import ValidationError
from .vectors import VectorStore, argmax_label, cosine_similarity

COSINE = "cosine"
RANDOM = "random"


@dataclass(frozen=True)
class RetrievalStrategy:
    """A retrieval configuration; random ranking requires the same-word constraint."""

    ranking: str = COSINE
    same_word: bool = False
    same_supersense: bool = False
    diversity: bool = False
    k: int = 5
    require_tagger_prediction: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.ranking not in (COSINE, RANDOM):
            raise ValidationError(f"unknown ranking {self.ranking!r}")
        if self.ranking == RANDOM and not self.same_word:
            raise ValidationError("random ranking without the same-word constraint is excluded")
        if self.k < 1:
            raise ValidationError("k must be positive")

    @property
    def name(self) -> str:
        parts = ["cos" if self.ranking == COSINE else "rand"]
        if self.same_word:
            parts.append("word")
        if self.same_supersense:
            parts.append("ss")
        if self.diversity:
            parts.append("div")
        return "/".join(parts)

    def to_dict(self) -> dict:
        return {
            "ranking": self.ranking,
            "same_word": self.same_word,
            "same_supersense": self.same_supersense,
            "diversity": self.diversity,
            "k": self.k,
            "require_tagger_prediction": self.require_tagger_prediction,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RetrievalStrategy":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


@dataclass(frozen=True)
class Neighbor:
    """A retrieved gold-labeled instance with its score and contributing strategies."""

    instance: Instance
    score: float
    provenance: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "provenance", frozenset(self.provenance))
        if self.instance.gold is None:
            raise ValidationError(f"neighbor {self.instance.instance_id} has no gold label")
        if not self.provenance:
            raise ValidationError(f"neighbor {self.instance.instance_id} has empty provenance")

    @property
    def instance_id(self) -> str:
        return self.instance.instance_id


def _neighbor_order(n: Neighbor) -> tuple[float, str]:
    return (-n.score, n.instance_id)


@dataclass(frozen=True)
class NeighborBatch:
    """Deduplicated options for one target, ordered by descending score then id."""

    target_id: str
    options: tuple[Neighbor, ...]
    batch_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if self.batch_index < 0:
            raise ValidationError("batch_index must be >= 0")
        ids = [n.instance_id for n in self.options]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"batch for {self.target_id} has duplicate options")
        if self.target_id in ids:
            raise ValidationError(f"batch for {self.target_id} contains the target itself")
        if list(self.options) != sorted(self.options, key=_neighbor_order):
            raise ValidationError(f"batch for {self.target_id} is not in score order")

    @property
    def is_empty(self) -> bool:
        return not self.options

    def option_ids(self) -> list[str]:
        return [n.instance_id for n in self.options]


def rank_candidates(
    target: Instance,
    labeled: Corpus,
    store: VectorStore,
    ranking: str = COSINE,
    seed: int = 0,
) -> list[tuple[Instance, float]]:
    """Order every labeled instance (minus the target itself) for the target.

    Cosine: descending similarity to the target's vector, ties by instance_id.
    Random: a uniform shuffle seeded by (seed, target id), scores all 0.
    """
    base = sorted(
        (i for i in labeled.instances if i.instance_id != target.instance_id),
        key=lambda i: i.instance_id,
    )
    if ranking == COSINE:
        tv = store.require(target.instance_id)
        scored = [(inst, cosine_similarity(tv, store.require(inst.instance_id))) for inst in base]
        scored.sort(key=lambda pair: (-pair[1], pair[0].instance_id))
        return scored
    if ranking == RANDOM:
        rng = random.Random(f"{seed}:{target.instance_id}")
        shuffled = list(base)
        rng.shuffle(shuffled)
        return [(inst, 0.0) for inst in shuffled]
    raise ValidationError(f"unknown ranking {ranking!r}")


def apply_constraints(
    candidates: Sequence[tuple[Instance, float]],
    target: Instance,
    same_word: bool = False,
    same_supersense: bool = False,
    reference_label: SupersenseLabel | None = None,
) -> list[tuple[Instance, float]]:
    """Order-preserving filter by lemma and/or gold label.

    The same-supersense constraint compares the full scene|function pair
    against the target's gold (oracle mode) or an explicit reference label.
    """
    out = list(candidates)
    if same_word:
        out = [(i, s) for i, s in out if i.lemma == target.lemma]
    if same_supersense:
        reference = reference_label or target.gold
        if reference is None:
            raise ValidationError(
                "same-supersense constraint needs the target's gold or a reference label"
            )
        out = [(i, s) for i, s in out if i.gold == reference]
    return out


def diversity_filter(
    candidates: Sequence[tuple[Instance, float]], k: int
) -> list[tuple[Instance, float]]:
    """Greedy scan keeping a candidate only if its gold label is new; stops at k."""
    kept: list[tuple[Instance, float]] = []
    seen: set[str] = set()
    for inst, score in candidates:
        if inst.gold is None:
            raise ValidationError(f"candidate {inst.instance_id} has no gold label")
        rendered = inst.gold.render()
        if rendered in seen:
            continue
        kept.append((inst, score))
        seen.add(rendered)
        if len(kept) == k:
            break
    return kept


def retrieve_batch(
    target: Instance,
    labeled: Corpus,
    store: VectorStore,
    strategy: RetrievalStrategy,
    reference_label: SupersenseLabel | None = None,
    exclude: Iterable[str] = (),
    batch_index: int = 0,
    inventory: LabelInventory | None = None,
) -> NeighborBatch:
    """Rank, constrain, optionally diversify, and truncate to k options.

    An empty batch is a signal, not an error: the caller decides whether to
    requeue, widen, or skip. With require_tagger_prediction set (needs the
    inventory), if no kept option carries the argmax label of the target's
    vector, the best-ranked candidate with that label replaces the
    lowest-scoring option.
    """
    excluded = set(exclude)
    ranked = rank_candidates(target, labeled, store, strategy.ranking, strategy.seed)
    ranked = [(i, s) for i, s in ranked if i.instance_id not in excluded]
    constrained = apply_constraints(
        ranked, target, strategy.same_word, strategy.same_supersense, reference_label
    )
    if strategy.diversity:
        kept = diversity_filter(constrained, strategy.k)
    else:
        kept = constrained[: strategy.k]
    if strategy.require_tagger_prediction and kept:
        if inventory is None:
            raise ValidationError("require_tagger_prediction needs the label inventory")
        predicted = argmax_label(store.require(target.instance_id), inventory)
        if all(inst.gold != predicted for inst, _ in kept):
            kept_ids = {inst.instance_id for inst, _ in kept}
            replacement = next(
                (
                    (inst, score)
                    for inst, score in constrained
                    if inst.gold == predicted and inst.instance_id not in kept_ids
                ),
                None,
            )
            if replacement is not None:
                kept = kept[:-1] + [replacement]
    neighbors = [Neighbor(inst, score, frozenset({strategy.name})) for inst, score in kept]
    neighbors.sort(key=_neighbor_order)
    return NeighborBatch(target.instance_id, tuple(neighbors), batch_index)


def dedup_merge(contributions: Iterable[tuple[str, Neighbor]]) -> list[Neighbor]:
    """Merge per-strategy contributions: one neighbor per instance.

    Provenance sets union, the max score wins, and output is ordered by
    descending score then instance_id. Idempotent.
    """
    merged: dict[str, Neighbor] = {}
    for strategy_name, neighbor in contributions:
        provenance = neighbor.provenance | {strategy_name}
        prior = merged.get(neighbor.instance_id)
        if prior is None:
            merged[neighbor.instance_id] = Neighbor(
                neighbor.instance, neighbor.score, provenance
            )
        else:
            merged[neighbor.instance_id] = Neighbor(
                prior.instance, max(prior.score, neighbor.score), prior.provenance | provenance
            )
    return sorted(merged.values(), key=_neighbor_order)


def merged_batch(
    target: Instance,
    labeled: Corpus,
    store: VectorStore,
    strategies: Sequence[RetrievalStrategy],
    reference_label: SupersenseLabel | None = None,
    exclude: Iterable[str] = (),
    batch_index: int = 0,
    inventory: LabelInventory | None = None,
) -> NeighborBatch:
    """One batch combining several strategies' retrievals, deduplicated."""
    contributions: list[tuple[str, Neighbor]] = []
    for strategy in strategies:
        batch = retrieve_batch(
            target, labeled, store, strategy, reference_label, exclude, batch_index, inventory
        )
        contributions.extend((strategy.name, n) for n in batch.options)
    return NeighborBatch(target.instance_id, tuple(dedup_merge(contributions)), batch_index)


def batch_record(batch: NeighborBatch) -> dict:
    """Audit/export form: labels rendered, provenance sorted."""
    return {
        "target_id": batch.target_id,
        "batch_index": batch.batch_index,
        "options": [
            {
                "instance_id": n.instance_id,
                "score": n.score,
                "label": n.instance.gold.render(),
                "provenance": sorted(n.provenance),
            }
            for n in batch.options
        ],
    }


def batch_from_record(record: dict, labeled: Corpus) -> NeighborBatch:
    """Rebuild a batch from its export record, resolving instances in labeled."""
    options = tuple(
        Neighbor(labeled.get(opt["instance_id"]), float(opt["score"]), frozenset(opt["provenance"]))
        for opt in record["options"]
    )
    return NeighborBatch(record["target_id"], options, int(record["batch_index"]))
