"""The two-task substitution design: generate substitutes, select from a
fixed list, aggregate frequency distributions, and infer labels from them.

Workers first write a free-text substitute for the target preposition
(which must not contain the target word itself), then other workers pick
acceptable substitutes from the most common ones, with an "[Omit]" escape
and a free write-in. Selections aggregate into per-instance and
per-(lemma, label) frequency distributions; a nearest-centroid rule over
those distributions yields label predictions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Instance, SupersenseLabel, marked_text
from .errors import CoverageError, ValidationError

OMIT = "[Omit]"
WRITE_IN_MARK = "*"

_WHITESPACE = re.compile(r"\s+")


def normalize_substitute(raw: str) -> str:
    """Trim, lowercase, and collapse internal whitespace."""
    text = _WHITESPACE.sub(" ", raw.strip()).lower()
    if not text:
        raise ValidationError("substitute is empty after normalization")
    return text


def contains_target(substitute: str, lemma: str) -> bool:
    """True if the target lemma occurs as whole word(s) of the substitute.

    Word-boundary semantics: "inside" is fine for target "in", but
    "by the side of" is rejected for target "by". Multiword lemmas match as
    a contiguous word subsequence.
    """
    words = substitute.split()
    lemma_words = lemma.split()
    span = len(lemma_words)
    return any(words[i : i + span] == lemma_words for i in range(len(words) - span + 1))


@dataclass(frozen=True)
class GenerationPrompt:
    """A sentence with the target bracketed, asking for one free-text substitute."""

    instance_id: str
    text: str


def build_generation_prompt(instance: Instance) -> GenerationPrompt:
    return GenerationPrompt(instance.instance_id, marked_text(instance))


@dataclass(frozen=True)
class GenerationResponse:
    """One worker's normalized substitute for one instance."""

    instance_id: str
    worker_id: str
    substitute: str


class GenerationLog:
    """Stores one substitute per (worker, instance); resubmission replaces.

    Replacements are recorded in the audit list rather than rejected.
    """

    def __init__(self):
        self._responses: dict[tuple[str, str], GenerationResponse] = {}
        self.audit: list[str] = []

    def record(self, response: GenerationResponse, instance: Instance) -> GenerationResponse:
        if response.instance_id != instance.instance_id:
            raise ValidationError(
                f"response targets {response.instance_id!r}, not {instance.instance_id!r}"
            )
        substitute = normalize_substitute(response.substitute)
        if contains_target(substitute, instance.lemma):
            raise ValidationError(
                f"substitute {substitute!r} contains the target {instance.lemma!r}"
            )
        stored = GenerationResponse(response.instance_id, response.worker_id, substitute)
        key = (response.worker_id, response.instance_id)
        if key in self._responses:
            self.audit.append(
                f"worker {response.worker_id} replaced substitute for {response.instance_id}: "
                f"{self._responses[key].substitute!r} -> {substitute!r}"
            )
        self._responses[key] = stored
        return stored

    def responses(self) -> list[GenerationResponse]:
        return [self._responses[k] for k in sorted(self._responses)]

    def responses_for_lemma(self, corpus: Corpus, lemma: str) -> list[GenerationResponse]:
        lemmas = {i.instance_id: i.lemma for i in corpus.instances}
        return [r for r in self.responses() if lemmas.get(r.instance_id) == lemma]

    def __len__(self) -> int:
        return len(self._responses)


def top_n_substitutes(responses: Iterable[GenerationResponse], n: int) -> list[str]:
    """The n most commonly provided substitutes, ties broken lexicographically."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    counts: dict[str, int] = {}
    for r in responses:
        counts[r.substitute] = counts.get(r.substitute, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [text for text, _ in ranked[:n]]


@dataclass(frozen=True)
class SelectionPrompt:
    """A fixed option list plus the [Omit] and write-in affordances."""

    instance_id: str
    options: tuple[str, ...]
    allows_omit: bool = True
    allows_write_in: bool = True

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if not self.options:
            raise ValidationError(f"{self.instance_id}: selection prompt has no options")
        if len(set(self.options)) != len(self.options):
            raise ValidationError(f"{self.instance_id}: selection options are not distinct")


def build_selection_prompt(instance: Instance, options: Sequence[str]) -> SelectionPrompt:
    return SelectionPrompt(instance.instance_id, tuple(options))


@dataclass(frozen=True)
class SelectionResponse:
    """One worker's picks: chosen options, an optional write-in, or [Omit]."""

    instance_id: str
    worker_id: str
    chosen: frozenset[str] = frozenset()
    write_in: str | None = None
    omit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "chosen", frozenset(self.chosen))
        if self.omit and (self.chosen or self.write_in):
            raise ValidationError("[Omit] excludes chosen options and write-ins")
        if not self.omit and not self.chosen and self.write_in is None:
            raise ValidationError("empty selection response")


def validate_selection_response(response: SelectionResponse, prompt: SelectionPrompt) -> None:
    """Prompt-dependent checks: membership and write-in novelty."""
    if response.instance_id != prompt.instance_id:
        raise ValidationError(
            f"response targets {response.instance_id!r}, not {prompt.instance_id!r}"
        )
    unknown = response.chosen - set(prompt.options)
    if unknown:
        raise ValidationError(f"chosen options not in prompt: {sorted(unknown)}")
    if response.write_in is not None and response.write_in in prompt.options:
        raise ValidationError(
            f"write-in {response.write_in!r} duplicates a listed option; select it instead"
        )


@dataclass(frozen=True)
class SubstituteDistribution:
    """Frequency counts over substitutes for an instance or (lemma, label) group.

    Write-in substitutes carry a trailing asterisk so they stay
    distinguishable after aggregation; omissions count under "[Omit]".
    """

    key: str | tuple[str, SupersenseLabel]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for text, count in self.counts.items():
            if count < 0:
                raise ValidationError(f"negative count for {text!r}")

    def total(self) -> int:
        return sum(self.counts.values())

    def without_omit(self) -> dict[str, int]:
        return {t: c for t, c in self.counts.items() if t != OMIT and c > 0}


def aggregate_instance_distribution(
    responses: Iterable[SelectionResponse], instance_id: str | None = None
) -> SubstituteDistribution:
    """Count selections per substitute for one instance.

    Every chosen option counts once per worker; write-ins count under their
    asterisked key; [Omit] responses count under the OMIT key.
    """
    counts: dict[str, int] = {}
    key = instance_id
    for r in responses:
        if key is None:
            key = r.instance_id
        elif r.instance_id != key:
            raise ValidationError(
                f"response for {r.instance_id!r} mixed into distribution for {key!r}"
            )
        for text in r.chosen:
            counts[text] = counts.get(text, 0) + 1
        if r.write_in is not None:
            marked = r.write_in + WRITE_IN_MARK
            counts[marked] = counts.get(marked, 0) + 1
        if r.omit:
            counts[OMIT] = counts.get(OMIT, 0) + 1
    if key is None:
        raise ValidationError("cannot aggregate an empty response set without an instance_id")
    return SubstituteDistribution(key, counts)


def aggregate_by_label(
    distributions: Mapping[str, SubstituteDistribution], labeled: Corpus
) -> dict[tuple[str, SupersenseLabel], SubstituteDistribution]:
    """Sum per-instance counts grouped by (lemma, gold label)."""
    grouped: dict[tuple[str, SupersenseLabel], dict[str, int]] = {}
    for instance_id, dist in sorted(distributions.items()):
        inst = labeled.get(instance_id)
        if inst.gold is None:
            raise ValidationError(f"instance {instance_id!r} has no gold label")
        bucket = grouped.setdefault((inst.lemma, inst.gold), {})
        for text, count in dist.counts.items():
            bucket[text] = bucket.get(text, 0) + count
    return {
        key: SubstituteDistribution(key, counts) for key, counts in grouped.items()
    }


def radar_report(
    aggregates: Mapping[tuple[str, SupersenseLabel], SubstituteDistribution],
    min_count: int = 3,
) -> list[tuple[str, str, str, int, bool]]:
    """Rows (lemma, label, substitute, count, write_in flag).

    Only substitutes whose global count across all groups reaches min_count
    appear; [Omit] rows are always excluded. Rows sort by lemma, label,
    substitute for byte-stable export.
    """
    if min_count < 0:
        raise ValidationError("min_count must be >= 0")
    global_counts: dict[str, int] = {}
    for dist in aggregates.values():
        for text, count in dist.counts.items():
            if text != OMIT:
                global_counts[text] = global_counts.get(text, 0) + count
    rows: list[tuple[str, str, str, int, bool]] = []
    for (lemma, label), dist in aggregates.items():
        for text, count in dist.counts.items():
            if text == OMIT or count == 0:
                continue
            if global_counts[text] < min_count:
                continue
            rows.append(
                (lemma, label.render(), text, count, text.endswith(WRITE_IN_MARK))
            )
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def _l1_normalize(counts: Mapping[str, int]) -> dict[str, float]:
    total = sum(counts.values())
    return {t: counts[t] / total for t in sorted(counts) if counts[t] > 0}


def _sparse_cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    # Accumulate in sorted-key order so results do not depend on dict
    # construction history (keeps ties and digests reproducible).
    dot = 0.0
    norm_a = 0.0
    norm_b = 0.0
    for k in sorted(a):
        dot += a[k] * b.get(k, 0.0)
        norm_a += a[k] * a[k]
    for k in sorted(b):
        norm_b += b[k] * b[k]
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (math.sqrt(norm_a) * math.sqrt(norm_b))


def infer_label_nearest_centroid(
    distribution: SubstituteDistribution,
    centroids: Mapping[tuple[str, SupersenseLabel], SubstituteDistribution],
    lemma: str,
) -> tuple[SupersenseLabel, float] | None:
    """Label whose centroid is cosine-closest to the instance's distribution.

    Both sides are L1-normalized with [Omit] dropped first, which makes the
    decision invariant to scaling the instance counts. Ties break toward the
    centroid with more training mass, then the lexicographically smaller
    label. Returns None (abstain) when the instance distribution is all-omit.
    """
    candidates = {
        label: dist for (lem, label), dist in centroids.items() if lem == lemma
    }
    if not candidates:
        raise CoverageError(f"no centroids for lemma {lemma!r}")
    observed = distribution.without_omit()
    if not observed:
        return None
    instance_vec = _l1_normalize(observed)
    best: tuple[float, int, str] | None = None
    best_label: SupersenseLabel | None = None
    best_sim = 0.0
    for label in sorted(candidates, key=lambda l: l.render()):
        support = candidates[label].without_omit()
        if not support:
            continue
        sim = _sparse_cosine(instance_vec, _l1_normalize(support))
        rank = (sim, sum(support.values()), label.render())
        # max by similarity, then support; the sort order above makes the
        # lexicographically smaller label win remaining ties.
        if best is None or (rank[0], rank[1]) > (best[0], best[1]):
            best = rank
            best_label = label
            best_sim = sim
    if best_label is None:
        raise CoverageError(f"all centroids for lemma {lemma!r} are empty")
    return best_label, best_sim
