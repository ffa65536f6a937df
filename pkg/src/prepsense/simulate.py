"""Seeded synthetic annotators for end-to-end pipeline runs.

A simulated worker answers a task correctly with probability `correctness`;
otherwise it answers None/[Omit] with probability `none_bias`, else it picks
a uniformly random incorrect option. Draws are seeded per
(seed, worker, task), so a simulation is reproducible bit-for-bit and does
not depend on polling order.

The decision procedure per task is part of the contract (oracles replicate
it): draw r1 for correctness, then r2 for the none bias, then one choice
draw over the sorted candidate pool via random.Random.choice.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import service as svc
from .corpus import Corpus, SupersenseLabel
from .errors import ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimWorkerProfile:
    """Behavioral knobs for one synthetic annotator."""

    worker_id: str
    correctness: float
    none_bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.correctness <= 1.0:
            raise ValidationError("correctness must be in [0, 1]")
        if not 0.0 <= self.none_bias <= 1.0:
            raise ValidationError("none_bias must be in [0, 1]")

    def rng(self, task_id: str) -> random.Random:
        return random.Random(f"{self.seed}:{self.worker_id}:{task_id}")


def pick_option(
    profile: SimWorkerProfile,
    task_id: str,
    options: Sequence[str],
    correct: Sequence[str],
) -> str | None:
    """One option or None (meaning the None/[Omit] affordance).

    Degenerate configurations (no correct option, none_bias 0) fall back to
    a uniform pick over all options, with a warning.
    """
    rng = profile.rng(task_id)
    correct_sorted = sorted(set(correct))
    r1 = rng.random()
    if correct_sorted and r1 < profile.correctness:
        return rng.choice(correct_sorted)
    if rng.random() < profile.none_bias:
        return None
    incorrect = sorted(set(options) - set(correct_sorted))
    if not incorrect:
        if not correct_sorted and profile.none_bias == 0.0:
            log.warning("degenerate simulation config for %s: no correct option", task_id)
        pool = sorted(set(options))
        if not pool:
            return None
        return rng.choice(pool)
    if not correct_sorted and profile.none_bias == 0.0:
        log.warning("degenerate simulation config for %s: no correct option", task_id)
    return rng.choice(incorrect)


class SyntheticLexicon:
    """Deterministic substitutes per (lemma, label) for substitution runs.

    Substitutes are pseudo-phrases derived from the label so that
    label-consistent picks are recognizable; none of them can contain a
    preposition lemma as a standalone word.
    """

    def __init__(self, per_label: int = 3):
        if per_label < 1:
            raise ValidationError("per_label must be >= 1")
        self.per_label = per_label

    @staticmethod
    def _slug(label: SupersenseLabel) -> str:
        return label.render().lower().replace("|", "+")

    def substitutes(self, label: SupersenseLabel) -> list[str]:
        slug = self._slug(label)
        return [f"{slug}-wise v{j}" for j in range(self.per_label)]

    def labels_for_lemma(self, corpus: Corpus, lemma: str) -> list[SupersenseLabel]:
        labels = {i.gold for i in corpus.instances if i.lemma == lemma and i.gold}
        return sorted(labels, key=lambda l: l.render())


def generation_body(
    profile: SimWorkerProfile,
    task_id: str,
    lemma: str,
    gold: SupersenseLabel | None,
    corpus: Corpus,
    lexicon: SyntheticLexicon,
) -> dict:
    """A substitute that matches the gold label with probability correctness."""
    candidates = lexicon.labels_for_lemma(corpus, lemma)
    correct = lexicon.substitutes(gold) if gold else []
    pool: list[str] = []
    for label in candidates:
        pool.extend(lexicon.substitutes(label))
    if not pool:
        pool = ["placeholder-substitute"]
    choice = pick_option(profile, task_id, pool, correct)
    if choice is None:
        choice = profile.rng(task_id + "#fallback").choice(sorted(pool))
    return {"substitute": choice}


def selection_body(
    profile: SimWorkerProfile,
    task_id: str,
    options: Sequence[str],
    gold: SupersenseLabel | None,
    lexicon: SyntheticLexicon,
) -> dict:
    correct = sorted(set(lexicon.substitutes(gold)) & set(options)) if gold else []
    choice = pick_option(profile, task_id, options, correct)
    if choice is None:
        return {"chosen": [], "write_in": None, "omit": True}
    return {"chosen": [choice], "write_in": None, "omit": False}


def neighbor_body(
    profile: SimWorkerProfile,
    task_id: str,
    option_ids: Sequence[str],
    correct_ids: Sequence[str],
) -> dict:
    choice = pick_option(profile, task_id, option_ids, correct_ids)
    if choice is None:
        return {"none": True, "chosen": []}
    return {"none": False, "chosen": [choice]}


def correct_neighbor_options(platform: svc.Platform, task: svc.TaskState) -> list[str]:
    """Option ids whose gold label equals the target's gold (the truth oracle)."""
    target = platform.find_instance(task.ref_id)
    if target.gold is None:
        return []
    record = platform.batches[(task.ref_id, task.payload["batch_index"])]
    return [
        opt["instance_id"]
        for opt in record["options"]
        if opt["label"] == target.gold.render()
    ]


def run_simulation(
    platform: svc.Platform,
    profiles: Sequence[SimWorkerProfile],
    lexicon: SyntheticLexicon | None = None,
    kinds: Sequence[str] = svc.TASK_KINDS,
) -> int:
    """Round-robin polling until no simulated worker finds work.

    Returns the number of submitted responses. Workers are registered if
    they are not already known.
    """
    lexicon = lexicon or SyntheticLexicon()
    corpus = platform._target_corpus()
    for profile in profiles:
        if profile.worker_id not in platform.workers:
            platform.register_worker(profile.worker_id, f"token-{profile.worker_id}")
    submitted = 0
    progress = True
    while progress:
        progress = False
        for profile in profiles:
            for kind in kinds:
                assignment = platform.assign_next_task(profile.worker_id, kind)
                if assignment is None:
                    continue
                task = platform.tasks[assignment.task_id]
                instance = platform.find_instance(task.ref_id)
                if kind == svc.GENERATION:
                    body = generation_body(
                        profile, task.task_id, instance.lemma, instance.gold, corpus, lexicon
                    )
                elif kind == svc.SELECTION:
                    body = selection_body(
                        profile, task.task_id, task.payload["options"], instance.gold, lexicon
                    )
                else:
                    option_ids = [o["option_id"] for o in task.payload["options"]]
                    body = neighbor_body(
                        profile,
                        task.task_id,
                        option_ids,
                        correct_neighbor_options(platform, task),
                    )
                platform.submit_response(task.task_id, profile.worker_id, body)
                submitted += 1
                progress = True
    return submitted


def plurality_accuracy(
    profiles: Sequence[SimWorkerProfile],
    tasks: Mapping[str, tuple[Sequence[str], Sequence[str]]],
) -> float:
    """Fraction of synthetic tasks whose strict plurality is a correct option.

    `tasks` maps task_id -> (option ids, correct option ids). This drives the
    same per-worker decision procedure as the full service path, but counts
    pluralities directly; used for capacity estimates and oracle checks.
    """
    if not tasks:
        raise ValidationError("no tasks to simulate")
    hits = 0
    for task_id in sorted(tasks):
        options, correct = tasks[task_id]
        counts: dict[str | None, int] = {}
        for profile in profiles:
            choice = pick_option(profile, task_id, options, correct)
            counts[choice] = counts.get(choice, 0) + 1
        top = max(counts.values())
        leaders = [o for o, c in counts.items() if c == top]
        if len(leaders) == 1 and leaders[0] is not None and leaders[0] in set(correct):
            hits += 1
    return hits / len(tasks)
