"""Neighbor-selection voting: tallies, plurality outcomes, tag prediction,
None-requeue, per-strategy tallies, and the tagger-vs-crowd case analysis.

A vote picks any subset of a batch's options or the distinguished "None"
option. Plurality selects a winner only on a strict maximum; ties abstain
unless every tied option shares one gold label. Targets whose crowd answer
is "None" can be requeued with a fresh, disjoint batch of neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Instance, SupersenseLabel
from .errors import DomainError, ValidationError
from .retrieval import NeighborBatch, RetrievalStrategy, retrieve_batch
from .vectors import VectorStore

NONE_OPTION = "None"

WINNER = "winner"
TIE = "tie"
NONE_WON = "none_won"


@dataclass(frozen=True)
class NeighborPrompt:
    """Presentation form of a batch: sentences only, never gold labels or scores."""

    target_id: str
    batch: NeighborBatch
    includes_none: bool = True

    def __post_init__(self):
        if not self.includes_none:
            raise ValidationError("the None option is always presented")


@dataclass(frozen=True)
class VoteRecord:
    """One worker's picks for one (target, batch): option ids or the None marker."""

    target_id: str
    batch_index: int
    worker_id: str
    chosen: frozenset[str] = frozenset()
    none_vote: bool = False

    def __post_init__(self):
        object.__setattr__(self, "chosen", frozenset(self.chosen))
        if self.none_vote and self.chosen:
            raise ValidationError("a None vote cannot also choose options")
        if not self.none_vote and not self.chosen:
            raise ValidationError("empty vote")


def tally_votes(votes: Iterable[VoteRecord], batch: NeighborBatch) -> dict[str, int]:
    """Count picks per option (plus None) for one target and batch.

    Every option of the batch appears in the tally, possibly with 0.
    """
    counts: dict[str, int] = {oid: 0 for oid in batch.option_ids()}
    counts[NONE_OPTION] = 0
    seen_workers: set[str] = set()
    for vote in votes:
        if vote.target_id != batch.target_id or vote.batch_index != batch.batch_index:
            raise ValidationError(
                f"vote for {vote.target_id}#{vote.batch_index} mixed into tally for "
                f"{batch.target_id}#{batch.batch_index}"
            )
        if vote.worker_id in seen_workers:
            raise ValidationError(f"duplicate vote from worker {vote.worker_id!r}")
        seen_workers.add(vote.worker_id)
        if vote.none_vote:
            counts[NONE_OPTION] += 1
            continue
        for oid in vote.chosen:
            if oid not in counts:
                raise ValidationError(f"vote references option {oid!r} outside the batch")
            counts[oid] += 1
    return counts


@dataclass(frozen=True)
class PluralityOutcome:
    """Result of a plurality vote: a strict winner, a tie set, or a None win."""

    target_id: str
    batch_index: int
    tallies: dict[str, int]
    kind: str
    winner: str | None = None
    tied: frozenset[str] = frozenset()
    none_involved: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tied", frozenset(self.tied))
        if self.kind == WINNER:
            if self.winner is None:
                raise ValidationError("winner outcome without a winner")
            top = self.tallies[self.winner]
            others = [c for o, c in self.tallies.items() if o != self.winner]
            if others and top <= max(others):
                raise ValidationError("winner does not strictly exceed all other tallies")
        elif self.kind == TIE:
            if len(self.tied) < 2:
                raise ValidationError("tie outcome needs at least two tied options")
        elif self.kind != NONE_WON:
            raise ValidationError(f"unknown outcome kind {self.kind!r}")


def plurality_outcome(
    tallies: Mapping[str, int], target_id: str = "", batch_index: int = 0
) -> PluralityOutcome:
    """Strict max wins; shared max is a tie (flagged when None is in it)."""
    if not tallies:
        raise DomainError("empty tally")
    top = max(tallies.values())
    if top == 0:
        raise DomainError("tally contains no votes")
    leaders = sorted(o for o, c in tallies.items() if c == top)
    counts = dict(tallies)
    if len(leaders) == 1:
        leader = leaders[0]
        if leader == NONE_OPTION:
            return PluralityOutcome(target_id, batch_index, counts, NONE_WON)
        return PluralityOutcome(target_id, batch_index, counts, WINNER, winner=leader)
    return PluralityOutcome(
        target_id,
        batch_index,
        counts,
        TIE,
        tied=frozenset(leaders),
        none_involved=NONE_OPTION in leaders,
    )


def predict_tag(outcome: PluralityOutcome, batch: NeighborBatch) -> SupersenseLabel | None:
    """The winning neighbor's gold label, or None to abstain.

    Ties abstain unless all tied options share one gold label (then the
    prediction is determined anyway). None wins always abstain.
    """
    golds = {n.instance_id: n.instance.gold for n in batch.options}
    if outcome.kind == WINNER:
        if outcome.winner not in golds:
            raise ValidationError(f"winner {outcome.winner!r} is not in the batch")
        return golds[outcome.winner]
    if outcome.kind == TIE and not outcome.none_involved:
        if any(oid not in golds for oid in outcome.tied):
            raise ValidationError("tie references options outside the batch")
        labels = {golds[oid] for oid in outcome.tied}
        if len(labels) == 1:
            return next(iter(labels))
    return None


def requeue_none(
    target: Instance,
    prior_batches: Sequence[NeighborBatch],
    labeled: Corpus,
    store: VectorStore,
    strategy: RetrievalStrategy,
    reference_label: SupersenseLabel | None = None,
    max_requeues: int = 2,
) -> NeighborBatch | None:
    """A fresh batch excluding everything already shown, or None when exhausted.

    Exhaustion happens after max_requeues fresh batches or when retrieval
    comes back empty; the caller flags the instance for expert review.
    """
    if not prior_batches:
        raise ValidationError("requeue needs at least the initial batch")
    requeues_done = len(prior_batches) - 1
    if requeues_done >= max_requeues:
        return None
    shown: set[str] = set()
    for batch in prior_batches:
        shown.update(batch.option_ids())
    next_index = max(b.batch_index for b in prior_batches) + 1
    batch = retrieve_batch(
        target, labeled, store, strategy, reference_label, exclude=shown, batch_index=next_index
    )
    if batch.is_empty:
        return None
    return batch


@dataclass
class StrategyTally:
    votes: int = 0
    majorities: int = 0


def strategy_tally(
    votes: Iterable[VoteRecord],
    provenance: Mapping[tuple[str, str], frozenset[str]],
    n_workers: int,
    n_instances: int,
) -> dict[str, StrategyTally]:
    """Per-strategy credit for worker picks and per-instance majorities.

    A pick credits every strategy that contributed the picked neighbor;
    None votes credit the "None" row. The majority column counts instances
    where one of a strategy's neighbors is in that instance's argmax set
    (ties possible). Votes per strategy cannot exceed workers x instances.
    """
    rows: dict[str, StrategyTally] = {NONE_OPTION: StrategyTally()}
    for strategies in provenance.values():
        for name in strategies:
            rows.setdefault(name, StrategyTally())
    by_target: dict[str, dict[str, int]] = {}
    for vote in votes:
        target_counts = by_target.setdefault(vote.target_id, {})
        if vote.none_vote:
            rows[NONE_OPTION].votes += 1
            target_counts[NONE_OPTION] = target_counts.get(NONE_OPTION, 0) + 1
            continue
        for oid in vote.chosen:
            key = (vote.target_id, oid)
            if key not in provenance:
                raise ValidationError(f"no provenance for voted option {key!r}")
            for name in provenance[key]:
                rows[name].votes += 1
            target_counts[oid] = target_counts.get(oid, 0) + 1
    for target_id, counts in by_target.items():
        top = max(counts.values())
        majority = {o for o, c in counts.items() if c == top}
        credited: set[str] = set()
        for oid in majority:
            if oid == NONE_OPTION:
                credited.add(NONE_OPTION)
            else:
                credited.update(provenance[(target_id, oid)])
        for name in credited:
            rows[name].majorities += 1
    cap = n_workers * n_instances
    for name, row in rows.items():
        if row.votes > cap:
            raise ValidationError(f"strategy {name!r} credited {row.votes} votes, cap is {cap}")
        if row.majorities > n_instances:
            raise ValidationError(f"strategy {name!r} in {row.majorities} majorities, cap is {n_instances}")
    return rows


def classify_case(
    tagger_label: SupersenseLabel, gold: SupersenseLabel, batch: NeighborBatch
) -> int:
    """The four-way analysis cell: tagger correctness x gold-present-in-batch.

    1: tagger correct, gold among option labels; 2: incorrect, present;
    3: correct, absent; 4: incorrect, absent.
    """
    correct = tagger_label == gold
    present = any(n.instance.gold == gold for n in batch.options)
    if correct and present:
        return 1
    if not correct and present:
        return 2
    if correct:
        return 3
    return 4


@dataclass(frozen=True)
class AdjudicatedTarget:
    """Everything the case analysis needs about one finished target."""

    target_id: str
    gold: SupersenseLabel
    tagger_label: SupersenseLabel
    batch: NeighborBatch
    outcome: PluralityOutcome
    predicted: SupersenseLabel | None


@dataclass
class CaseRow:
    total: int = 0
    tagger_correct: int = 0
    crowd_correct: int = 0
    none_chosen: int = 0


@dataclass
class CaseReport:
    rows: dict[int, CaseRow] = field(default_factory=lambda: {c: CaseRow() for c in (1, 2, 3, 4)})

    def total(self) -> int:
        return sum(r.total for r in self.rows.values())


def accuracy_report(
    adjudicated: Iterable[AdjudicatedTarget], count_none_involved_ties: bool = True
) -> CaseReport:
    """Tagger accuracy, crowd accuracy, and None frequency per analysis case."""
    report = CaseReport()
    for item in adjudicated:
        case = classify_case(item.tagger_label, item.gold, item.batch)
        row = report.rows[case]
        row.total += 1
        if item.tagger_label == item.gold:
            row.tagger_correct += 1
        if item.predicted is not None and item.predicted == item.gold:
            row.crowd_correct += 1
        none_chosen = item.outcome.kind == NONE_WON or (
            count_none_involved_ties
            and item.outcome.kind == TIE
            and item.outcome.none_involved
        )
        if none_chosen:
            row.none_chosen += 1
    return report
