"""Data model and ingestion for labeled and unlabeled preposition corpora.

A corpus file is UTF-8 JSON lines, one sentence record per line:

    {"doc_id": "d1", "sent_id": "s3",
     "tokens": ["The", "book", "is", "by", "the", "lamp", "."],
     "targets": [{"index": 3, "lemma": "by", "label": "Locus"}]}

Instance ids are derived deterministically as "{doc_id}:{sent_id}:{index}".
Multiword targets are indexed by their first token; the lemma joins the
parts with single spaces ("close to").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import FormatError, InventoryError, ValidationError

LABELED = "labeled"
UNLABELED = "unlabeled"


@dataclass(frozen=True)
class LabelInventory:
    """Ordered list of supersense identifiers; the order fixes vector layout."""

    names: tuple[str, ...]
    version: str = ""

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValidationError("label inventory is empty")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("label inventory contains duplicate names")

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def __contains__(self, name: object) -> bool:
        return name in self._positions

    def __len__(self) -> int:
        return len(self.names)

    def position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise InventoryError(f"unknown supersense {name!r}") from None

    @classmethod
    def from_file(cls, path: str | Path, version: str = "") -> "LabelInventory":
        p = Path(path)
        names = [ln.strip() for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()]
        return cls(tuple(names), version or p.stem)

    @classmethod
    def snacs_v2_5(cls) -> "LabelInventory":
        """The 50-entry SNACS v2.5 inventory shipped with the package."""
        text = resources.files("prepsense.data").joinpath("snacs_v2_5.txt").read_text("utf-8")
        names = tuple(ln.strip() for ln in text.splitlines() if ln.strip())
        return cls(names, "v2.5")


@dataclass(frozen=True)
class SupersenseLabel:
    """A scene-role / function pair; rendered as one name when the two agree."""

    scene_role: str
    function: str

    def render(self) -> str:
        if self.scene_role == self.function:
            return self.scene_role
        return f"{self.scene_role}|{self.function}"

    def __str__(self) -> str:
        return self.render()


def parse_label(text: str, inventory: LabelInventory) -> SupersenseLabel:
    """Parse a rendered label ("Locus" or "Manner|Locus") against the inventory."""
    if not text:
        raise FormatError("empty label")
    parts = text.split("|")
    if len(parts) == 1:
        scene = function = parts[0]
    elif len(parts) == 2:
        scene, function = parts
    else:
        raise FormatError(f"label {text!r} has more than one pipe")
    for name in (scene, function):
        if not name:
            raise FormatError(f"label {text!r} has an empty component")
        if name not in inventory:
            raise InventoryError(f"unknown supersense {name!r}")
    return SupersenseLabel(scene, function)


def render_label(label: SupersenseLabel) -> str:
    return label.render()


@dataclass(frozen=True)
class Instance:
    """One sentence with one target preposition, optionally gold-labeled."""

    instance_id: str
    doc_id: str
    sent_id: str
    tokens: tuple[str, ...]
    target_index: int
    lemma: str
    gold: SupersenseLabel | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValidationError(f"{self.instance_id}: empty token list")
        if not 0 <= self.target_index < len(self.tokens):
            raise ValidationError(
                f"{self.instance_id}: target index {self.target_index} out of range"
            )
        if not self.lemma or self.lemma != self.lemma.lower():
            raise ValidationError(f"{self.instance_id}: lemma must be nonempty lowercase")


def marked_text(instance: Instance, open_mark: str = "<", close_mark: str = ">") -> str:
    """Render the sentence with the target token span in angle brackets.

    Multiword targets cover as many tokens as the lemma has words.
    """
    span = max(1, len(instance.lemma.split()))
    start = instance.target_index
    end = min(len(instance.tokens), start + span)
    parts = list(instance.tokens)
    parts[start] = open_mark + parts[start]
    parts[end - 1] = parts[end - 1] + close_mark
    return " ".join(parts)


@dataclass(frozen=True)
class Corpus:
    """Immutable set of instances plus per-document token counts."""

    kind: str
    instances: tuple[Instance, ...]
    documents: dict[str, int]
    # (doc_id, sent_id) -> tokens; kept so a corpus can be re-serialized exactly.
    sentences: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (LABELED, UNLABELED):
            raise ValidationError(f"unknown corpus kind {self.kind!r}")
        seen: set[str] = set()
        for inst in self.instances:
            if inst.instance_id in seen:
                raise ValidationError(f"duplicate instance_id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            if inst.doc_id not in self.documents:
                raise ValidationError(f"{inst.instance_id}: doc {inst.doc_id!r} not in documents")
            if self.kind == LABELED and inst.gold is None:
                raise ValidationError(f"{inst.instance_id}: labeled corpus requires a gold label")

    @cached_property
    def by_id(self) -> dict[str, Instance]:
        return {inst.instance_id: inst for inst in self.instances}

    def get(self, instance_id: str) -> Instance:
        try:
            return self.by_id[instance_id]
        except KeyError:
            raise ValidationError(f"unknown instance {instance_id!r}") from None

    def __len__(self) -> int:
        return len(self.instances)


def corpus_from_records(
    records: Iterable[dict], kind: str, inventory: LabelInventory
) -> Corpus:
    """Build a corpus from already-parsed sentence records (see module docstring)."""
    instances: list[Instance] = []
    documents: dict[str, int] = {}
    sentences: dict[tuple[str, str], tuple[str, ...]] = {}
    seen_ids: set[str] = set()
    for lineno, rec in enumerate(records, start=1):
        where = f"line {lineno}"
        if not isinstance(rec, dict):
            raise FormatError(f"{where}: record is not an object")
        try:
            doc_id = rec["doc_id"]
            sent_id = rec["sent_id"]
            tokens = tuple(rec["tokens"])
            targets = rec.get("targets", [])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{where}: {exc}") from None
        if not isinstance(doc_id, str) or not isinstance(sent_id, str):
            raise FormatError(f"{where}: doc_id and sent_id must be strings")
        if not tokens or not all(isinstance(t, str) for t in tokens):
            raise FormatError(f"{where}: tokens must be a nonempty list of strings")
        key = (doc_id, sent_id)
        if key in sentences:
            raise ValidationError(f"{where}: duplicate sentence record {doc_id}:{sent_id}")
        sentences[key] = tokens
        documents[doc_id] = documents.get(doc_id, 0) + len(tokens)
        for tgt in targets:
            try:
                index = int(tgt["index"])
                lemma = tgt["lemma"]
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{where}: bad target: {exc}") from None
            rendered = tgt.get("label")
            if rendered is None and kind == LABELED:
                raise ValidationError(f"{where}: labeled corpus target has no label")
            gold = None
            if rendered is not None:
                try:
                    gold = parse_label(rendered, inventory)
                except (FormatError, InventoryError) as exc:
                    raise type(exc)(f"{where}: {exc}") from None
            instance_id = f"{doc_id}:{sent_id}:{index}"
            if instance_id in seen_ids:
                raise ValidationError(f"{where}: duplicate instance_id {instance_id!r}")
            seen_ids.add(instance_id)
            try:
                instances.append(
                    Instance(instance_id, doc_id, sent_id, tokens, index, lemma, gold)
                )
            except ValidationError as exc:
                raise ValidationError(f"{where}: {exc}") from None
    return Corpus(kind, tuple(instances), documents, sentences)


def ingest_corpus(path: str | Path, kind: str, inventory: LabelInventory) -> Corpus:
    """Read a JSON-lines corpus file; errors carry the offending line number."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"line {lineno}: invalid JSON: {exc}") from None
    return corpus_from_records(records, kind, inventory)


def corpus_records(corpus: Corpus) -> list[dict]:
    """Serialize back to sentence records (inverse of ingestion, order preserved)."""
    by_sentence: dict[tuple[str, str], list[Instance]] = {key: [] for key in corpus.sentences}
    for inst in corpus.instances:
        by_sentence[(inst.doc_id, inst.sent_id)].append(inst)
    records = []
    for (doc_id, sent_id), tokens in corpus.sentences.items():
        targets = []
        for inst in sorted(by_sentence[(doc_id, sent_id)], key=lambda i: i.target_index):
            tgt: dict = {"index": inst.target_index, "lemma": inst.lemma}
            if inst.gold is not None:
                tgt["label"] = inst.gold.render()
            targets.append(tgt)
        records.append(
            {"doc_id": doc_id, "sent_id": sent_id, "tokens": list(tokens), "targets": targets}
        )
    return records


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus_records(corpus):
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def corpus_subset(corpus: Corpus, doc_ids: Iterable[str]) -> Corpus:
    """Restrict a corpus to the given documents."""
    wanted = set(doc_ids)
    instances = tuple(i for i in corpus.instances if i.doc_id in wanted)
    documents = {d: n for d, n in corpus.documents.items() if d in wanted}
    sentences = {k: v for k, v in corpus.sentences.items() if k[0] in wanted}
    return Corpus(corpus.kind, instances, documents, sentences)


def instances_of_preposition(corpus: Corpus, lemma: str) -> list[Instance]:
    """All instances with the given (lowercase) lemma, in instance_id order."""
    return sorted(
        (i for i in corpus.instances if i.lemma == lemma), key=lambda i: i.instance_id
    )
