"""Event-sourced task service: assignment, response intake, aggregation.

Every state change flows through an append-only event log; replaying the
log rebuilds the platform state exactly (verified by content digests).
Live operations validate against current state, then commit events; the
apply step that mutates state is shared between live commits and replay.

Tasks close at a configurable per-kind response quorum, which triggers
aggregation exactly once: selection tasks aggregate a substitute
distribution, neighbor tasks adjudicate by plurality (and may requeue the
target with a fresh batch when the crowd answers "None").
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from . import adjudication as adj
from . import retrieval as ret
from . import substitution as sub
from .corpus import (
    Corpus,
    Instance,
    LabelInventory,
    SupersenseLabel,
    corpus_from_records,
    corpus_records,
    marked_text,
    parse_label,
)
from .errors import (
    AuthError,
    CorruptLogError,
    StaleAssignmentError,
    ValidationError,
)
from .vectors import VectorStore

GENERATION = "generation"
SELECTION = "selection"
NEIGHBOR = "neighbor"
TASK_KINDS = (GENERATION, SELECTION, NEIGHBOR)

OPEN = "open"
SUBMITTED = "submitted"
EXPIRED = "expired"
CLOSED = "closed"

DEFAULT_CONFIG = {
    "quorums": {GENERATION: 7, SELECTION: 7, NEIGHBOR: 5},
    "selection_n": 8,
    "max_requeues": 2,
    "requeue_on_none": True,
    "requeue_on_none_tie": True,
    "count_none_involved_ties": True,
}


@dataclass(frozen=True)
class Event:
    seq: int
    ts: float
    kind: str
    payload: dict

    def to_record(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind, "payload": self.payload}


def _event_line(event: Event) -> str:
    return json.dumps(event.to_record(), ensure_ascii=False, sort_keys=True) + "\n"


class EventLog:
    """Append-only, gapless, monotonically numbered event sequence.

    With a sink attached, every appended event is flushed to disk
    immediately, so a crashed live service loses nothing.
    """

    def __init__(self):
        self.events: list[Event] = []
        self._sink = None

    def append(self, event: Event) -> None:
        expected = self.events[-1].seq + 1 if self.events else 1
        if event.seq != expected:
            raise CorruptLogError(f"event seq {event.seq}, expected {expected}")
        self.events.append(event)
        if self._sink is not None:
            self._sink.write(_event_line(event))
            self._sink.flush()

    def next_seq(self) -> int:
        return self.events[-1].seq + 1 if self.events else 1

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def attach_sink(self, path: str | Path) -> None:
        """Stream events to path from now on; existing events are written first."""
        if self._sink is not None:
            raise ValidationError("a sink is already attached")
        self._sink = open(path, "w", encoding="utf-8")
        for event in self.events:
            self._sink.write(_event_line(event))
        self._sink.flush()

    def detach_sink(self) -> None:
        if self._sink is not None:
            self._sink.close()
            self._sink = None

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for event in self.events:
                fh.write(_event_line(event))

    @classmethod
    def load(cls, path: str | Path) -> "EventLog":
        log = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    event = Event(int(rec["seq"]), float(rec["ts"]), rec["kind"], rec["payload"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorruptLogError(f"line {lineno}: {exc}") from None
                log.append(event)
        return log


def _string_list(value) -> list[str]:
    if isinstance(value, str) or not isinstance(value, (list, tuple, set, frozenset)):
        raise ValidationError("chosen must be a list of option ids")
    return [str(v) for v in value]


class LogicalClock:
    """Deterministic stand-in for wall time; ticks once per event."""

    def __init__(self):
        self._now = 0

    def __call__(self) -> float:
        self._now += 1
        return float(self._now)


@dataclass
class TaskState:
    task_id: str
    kind: str
    ref_id: str
    payload: dict
    quorum: int
    status: str = OPEN
    responses: list[tuple[str, dict]] = field(default_factory=list)


@dataclass
class TaskAssignment:
    assignment_id: str
    task_id: str
    kind: str
    worker_id: str
    issued_at: float
    status: str = OPEN


class Platform:
    """Single-writer annotation platform over an event log."""

    def __init__(self, clock: Callable[[], float] | None = None):
        self.log = EventLog()
        self.clock = clock or LogicalClock()
        self.config: dict = json.loads(json.dumps(DEFAULT_CONFIG))
        self.inventory: LabelInventory | None = None
        self.corpora: dict[str, Corpus] = {}
        self.corpus_record_cache: dict[str, list[dict]] = {}
        self.store: VectorStore | None = None
        self.workers: dict[str, str] = {}
        self.tasks: dict[str, TaskState] = {}
        self.assignments: dict[str, TaskAssignment] = {}
        self.open_by_worker: dict[tuple[str, str], str] = {}
        self.open_by_task: dict[str, set[str]] = {}
        self.answered: dict[tuple[str, str], set[str]] = {}
        self.batches: dict[tuple[str, int], dict] = {}
        self.batch_strategy: dict | None = None
        self.tagger_labels: dict[str, str] = {}
        self.distributions: dict[str, dict[str, int]] = {}
        self.adjudications: list[dict] = []
        self.requeue_exhausted: dict[str, str] = {}
        self.gen_substitutes: dict[str, dict[str, str]] = {}

    # ------------------------------------------------------------------ commit

    def _commit(self, kind: str, payload: dict) -> Event:
        event = Event(self.log.next_seq(), self.clock(), kind, payload)
        self._apply(event)
        self.log.append(event)
        return event

    # --------------------------------------------------------------- operations

    def set_config(self, **overrides) -> None:
        unknown = set(overrides) - set(DEFAULT_CONFIG)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        self._commit("config_set", overrides)

    def load_inventory(self, inventory: LabelInventory) -> None:
        if self.inventory is not None:
            raise ValidationError("inventory already loaded")
        self._commit(
            "inventory_loaded", {"names": list(inventory.names), "version": inventory.version}
        )

    def add_corpus(self, corpus: Corpus) -> None:
        if self.inventory is None:
            raise ValidationError("load the inventory before corpora")
        if corpus.kind in self.corpora:
            raise ValidationError(f"a {corpus.kind} corpus is already loaded")
        self._commit(
            "corpus_ingested", {"kind": corpus.kind, "records": corpus_records(corpus)}
        )

    def load_vectors(self, store: VectorStore) -> None:
        if self.store is not None:
            raise ValidationError("vectors already loaded")
        self._commit("vectors_loaded", {"n_labels": store.n_labels, "entries": store.entries()})

    def register_worker(self, worker_id: str, token: str) -> None:
        if not worker_id:
            raise ValidationError("empty worker id")
        self._commit("worker_registered", {"worker_id": worker_id, "token": token})

    def authenticate(self, worker_id: str, token: str) -> None:
        if self.workers.get(worker_id) != token:
            raise AuthError(f"unknown worker or bad token: {worker_id!r}")

    # ------------------------------------------------------------ task creation

    def _target_corpus(self) -> Corpus:
        corpus = self.corpora.get("unlabeled") or self.corpora.get("labeled")
        if corpus is None:
            raise ValidationError("no corpus loaded")
        return corpus

    def find_instance(self, instance_id: str) -> Instance:
        for corpus in self.corpora.values():
            if instance_id in corpus.by_id:
                return corpus.by_id[instance_id]
        raise ValidationError(f"unknown instance {instance_id!r}")

    def create_generation_tasks(self, instance_ids: Iterable[str] | None = None) -> list[str]:
        corpus = self._target_corpus()
        if instance_ids is None:
            instances = sorted(corpus.instances, key=lambda i: i.instance_id)
        else:
            instances = [corpus.get(iid) for iid in instance_ids]
        tasks = [
            {
                "task_id": f"gen:{inst.instance_id}",
                "kind": GENERATION,
                "ref_id": inst.instance_id,
                "payload": {
                    "instance_id": inst.instance_id,
                    "text": marked_text(inst),
                    "lemma": inst.lemma,
                },
            }
            for inst in instances
        ]
        self._check_new_tasks(tasks)
        self._commit("tasks_created", {"tasks": tasks})
        return [t["task_id"] for t in tasks]

    def selection_options(self, n: int | None = None) -> dict[str, list[str]]:
        """Top-n substitutes per lemma from recorded generation responses."""
        n = n or self.config["selection_n"]
        by_lemma: dict[str, list[sub.GenerationResponse]] = {}
        for task in self.tasks.values():
            if task.kind != GENERATION:
                continue
            inst = self.find_instance(task.ref_id)
            for worker_id, body in task.responses:
                by_lemma.setdefault(inst.lemma, []).append(
                    sub.GenerationResponse(task.ref_id, worker_id, body["substitute"])
                )
        return {
            lemma: sub.top_n_substitutes(responses, n)
            for lemma, responses in sorted(by_lemma.items())
        }

    def create_selection_tasks(
        self,
        options_by_lemma: dict[str, list[str]] | None = None,
        instance_ids: Iterable[str] | None = None,
    ) -> list[str]:
        corpus = self._target_corpus()
        if options_by_lemma is None:
            options_by_lemma = self.selection_options()
        if not options_by_lemma:
            raise ValidationError("no selection options available")
        if instance_ids is None:
            instances = sorted(
                (i for i in corpus.instances if i.lemma in options_by_lemma),
                key=lambda i: i.instance_id,
            )
        else:
            instances = [corpus.get(iid) for iid in instance_ids]
        tasks = []
        for inst in instances:
            options = options_by_lemma.get(inst.lemma)
            if not options:
                raise ValidationError(f"no options for lemma {inst.lemma!r}")
            prompt = sub.build_selection_prompt(inst, options)
            tasks.append(
                {
                    "task_id": f"sel:{inst.instance_id}",
                    "kind": SELECTION,
                    "ref_id": inst.instance_id,
                    "payload": {
                        "instance_id": inst.instance_id,
                        "text": marked_text(inst),
                        "lemma": inst.lemma,
                        "options": list(prompt.options),
                        "allows_omit": prompt.allows_omit,
                        "allows_write_in": prompt.allows_write_in,
                    },
                }
            )
        self._check_new_tasks(tasks)
        self._commit("tasks_created", {"tasks": tasks})
        return [t["task_id"] for t in tasks]

    def create_neighbor_tasks(
        self,
        batches: Iterable[ret.NeighborBatch],
        tagger_labels: dict[str, SupersenseLabel] | None = None,
        strategy: ret.RetrievalStrategy | None = None,
    ) -> list[str]:
        labeled = self.corpora.get("labeled")
        if labeled is None:
            raise ValidationError("neighbor tasks need a labeled corpus")
        task_ids = []
        for batch in batches:
            if batch.is_empty:
                raise ValidationError(f"cannot create a task for empty batch {batch.target_id}")
            tagger = (tagger_labels or {}).get(batch.target_id)
            self._commit(
                "batch_created",
                {
                    "batch": ret.batch_record(batch),
                    "strategy": strategy.to_dict() if strategy else None,
                    "tagger_label": tagger.render() if tagger else None,
                },
            )
            task = self._neighbor_task_record(batch)
            self._check_new_tasks([task])
            self._commit("tasks_created", {"tasks": [task]})
            task_ids.append(task["task_id"])
        return task_ids

    def _neighbor_task_record(self, batch: ret.NeighborBatch) -> dict:
        target = self.find_instance(batch.target_id)
        labeled = self.corpora["labeled"]
        options = [
            {"option_id": n.instance_id, "text": marked_text(labeled.get(n.instance_id))}
            for n in batch.options
        ]
        return {
            "task_id": f"nbr:{batch.target_id}#{batch.batch_index}",
            "kind": NEIGHBOR,
            "ref_id": batch.target_id,
            "payload": {
                "target_id": batch.target_id,
                "batch_index": batch.batch_index,
                "text": marked_text(target),
                "options": options,
                "includes_none": True,
            },
        }

    def _check_new_tasks(self, tasks: list[dict]) -> None:
        for task in tasks:
            if task["task_id"] in self.tasks:
                raise ValidationError(f"task {task['task_id']!r} already exists")

    # ------------------------------------------------------- assignment / intake

    def assign_next_task(self, worker_id: str, kind: str) -> TaskAssignment | None:
        """The least-loaded open task of the kind, or the worker's open one."""
        if worker_id not in self.workers:
            raise AuthError(f"unregistered worker {worker_id!r}")
        if kind not in TASK_KINDS:
            raise ValidationError(f"unknown task kind {kind!r}")
        held = self.open_by_worker.get((worker_id, kind))
        if held is not None:
            return self.assignments[held]
        done = self.answered.get((worker_id, kind), set())
        candidates = [
            t
            for t in self.tasks.values()
            if t.kind == kind and t.status == OPEN and t.ref_id not in done
        ]
        if not candidates:
            return None
        # Load counts open assignments so concurrent pollers spread out.
        candidates.sort(
            key=lambda t: (len(t.responses) + len(self.open_by_task.get(t.task_id, ())), t.task_id)
        )
        chosen = candidates[0]
        assignment_id = f"{chosen.task_id}@{worker_id}"
        self._commit(
            "assignment_issued",
            {
                "assignment_id": assignment_id,
                "task_id": chosen.task_id,
                "worker_id": worker_id,
                "kind": kind,
            },
        )
        return self.assignments[assignment_id]

    def submit_response(self, task_id: str, worker_id: str, body: dict) -> None:
        task = self.tasks.get(task_id)
        if task is None:
            raise ValidationError(f"unknown task {task_id!r}")
        assignment_id = self.open_by_worker.get((worker_id, task.kind))
        if assignment_id is None or self.assignments[assignment_id].task_id != task_id:
            raise StaleAssignmentError(
                f"worker {worker_id!r} holds no open assignment for {task_id!r}"
            )
        if task.status != OPEN:
            raise StaleAssignmentError(f"task {task_id!r} is no longer open")
        normalized = self._validate_body(task, worker_id, body)
        self._commit(
            "response_submitted",
            {
                "task_id": task_id,
                "worker_id": worker_id,
                "assignment_id": assignment_id,
                "body": normalized,
            },
        )
        if len(task.responses) == task.quorum:
            self._close_and_aggregate(task)

    def _validate_body(self, task: TaskState, worker_id: str, body: dict) -> dict:
        if task.kind == GENERATION:
            substitute = sub.normalize_substitute(str(body.get("substitute", "")))
            instance = self.find_instance(task.ref_id)
            if sub.contains_target(substitute, instance.lemma):
                raise ValidationError(
                    f"substitute {substitute!r} contains the target {instance.lemma!r}"
                )
            return {"substitute": substitute}
        if task.kind == SELECTION:
            response = sub.SelectionResponse(
                task.ref_id,
                worker_id,
                frozenset(_string_list(body.get("chosen", ()))),
                sub.normalize_substitute(body["write_in"]) if body.get("write_in") else None,
                bool(body.get("omit", False)),
            )
            prompt = sub.SelectionPrompt(task.ref_id, tuple(task.payload["options"]))
            sub.validate_selection_response(response, prompt)
            return {
                "chosen": sorted(response.chosen),
                "write_in": response.write_in,
                "omit": response.omit,
            }
        if task.kind == NEIGHBOR:
            none_vote = bool(body.get("none", False))
            chosen = _string_list(body.get("chosen", ()))
            vote = adj.VoteRecord(
                task.ref_id,
                task.payload["batch_index"],
                worker_id,
                frozenset(chosen),
                none_vote,
            )
            option_ids = {o["option_id"] for o in task.payload["options"]}
            outside = vote.chosen - option_ids
            if outside:
                raise ValidationError(f"vote references options outside the batch: {sorted(outside)}")
            return {"none": vote.none_vote, "chosen": sorted(vote.chosen)}
        raise ValidationError(f"unknown task kind {task.kind!r}")

    # ----------------------------------------------------- quorum and aggregation

    def _close_and_aggregate(self, task: TaskState) -> None:
        self._commit("task_closed", {"task_id": task.task_id})
        for assignment_id in sorted(self.open_by_task.get(task.task_id, set())):
            self._commit("assignment_expired", {"assignment_id": assignment_id})
        if task.kind == SELECTION:
            responses = [
                sub.SelectionResponse(
                    task.ref_id,
                    worker,
                    frozenset(body["chosen"]),
                    body["write_in"],
                    body["omit"],
                )
                for worker, body in task.responses
            ]
            dist = sub.aggregate_instance_distribution(responses, task.ref_id)
            self._commit(
                "distribution_aggregated",
                {"instance_id": task.ref_id, "counts": dict(sorted(dist.counts.items()))},
            )
        elif task.kind == NEIGHBOR:
            self._adjudicate(task)

    def _reconstruct_batch(self, target_id: str, batch_index: int) -> ret.NeighborBatch:
        record = self.batches[(target_id, batch_index)]
        return ret.batch_from_record(record, self.corpora["labeled"])

    def _adjudicate(self, task: TaskState) -> None:
        batch_index = task.payload["batch_index"]
        batch = self._reconstruct_batch(task.ref_id, batch_index)
        votes = [
            adj.VoteRecord(
                task.ref_id, batch_index, worker, frozenset(body["chosen"]), body["none"]
            )
            for worker, body in task.responses
        ]
        tallies = adj.tally_votes(votes, batch)
        outcome = adj.plurality_outcome(tallies, task.ref_id, batch_index)
        predicted = adj.predict_tag(outcome, batch)
        case = None
        target = self.find_instance(task.ref_id)
        tagger_rendered = self.tagger_labels.get(task.ref_id)
        if target.gold is not None and tagger_rendered is not None and self.inventory:
            tagger = parse_label(tagger_rendered, self.inventory)
            case = adj.classify_case(tagger, target.gold, batch)
        self._commit(
            "adjudicated",
            {
                "target_id": task.ref_id,
                "batch_index": batch_index,
                "tallies": dict(sorted(tallies.items())),
                "result": outcome.kind,
                "winner": outcome.winner,
                "tied": sorted(outcome.tied),
                "none_involved": outcome.none_involved,
                "predicted_label": predicted.render() if predicted else None,
                "case": case,
            },
        )
        wants_requeue = (
            outcome.kind == adj.NONE_WON and self.config["requeue_on_none"]
        ) or (
            outcome.kind == adj.TIE
            and outcome.none_involved
            and self.config["requeue_on_none_tie"]
        )
        if wants_requeue:
            self._requeue(task.ref_id)

    def _requeue(self, target_id: str) -> None:
        if self.batch_strategy is None or self.store is None:
            self._commit(
                "requeue_exhausted", {"target_id": target_id, "reason": "no retrieval context"}
            )
            return
        prior = [
            self._reconstruct_batch(tid, idx)
            for (tid, idx) in sorted(self.batches)
            if tid == target_id
        ]
        target = self.find_instance(target_id)
        strategy = ret.RetrievalStrategy.from_dict(self.batch_strategy)
        batch = adj.requeue_none(
            target,
            prior,
            self.corpora["labeled"],
            self.store,
            strategy,
            max_requeues=self.config["max_requeues"],
        )
        if batch is None:
            self._commit("requeue_exhausted", {"target_id": target_id, "reason": "exhausted"})
            return
        tagger = self.tagger_labels.get(target_id)
        self._commit(
            "batch_created",
            {
                "batch": ret.batch_record(batch),
                "strategy": self.batch_strategy,
                "tagger_label": tagger,
            },
        )
        task = self._neighbor_task_record(batch)
        self._check_new_tasks([task])
        self._commit("tasks_created", {"tasks": [task]})

    # ----------------------------------------------------------------- apply

    def _apply(self, event: Event) -> None:
        handler = getattr(self, f"_apply_{event.kind}", None)
        if handler is None:
            raise CorruptLogError(f"unknown event kind {event.kind!r}")
        handler(event)

    def _apply_config_set(self, event: Event) -> None:
        for key, value in event.payload.items():
            if key == "quorums":
                self.config["quorums"].update(value)
            else:
                self.config[key] = value

    def _apply_inventory_loaded(self, event: Event) -> None:
        self.inventory = LabelInventory(
            tuple(event.payload["names"]), event.payload["version"]
        )

    def _apply_corpus_ingested(self, event: Event) -> None:
        kind = event.payload["kind"]
        records = event.payload["records"]
        assert self.inventory is not None
        self.corpora[kind] = corpus_from_records(records, kind, self.inventory)
        self.corpus_record_cache[kind] = records

    def _apply_vectors_loaded(self, event: Event) -> None:
        self.store = VectorStore.from_entries(
            event.payload["entries"], event.payload["n_labels"]
        )

    def _apply_worker_registered(self, event: Event) -> None:
        self.workers[event.payload["worker_id"]] = event.payload["token"]

    def _apply_tasks_created(self, event: Event) -> None:
        for rec in event.payload["tasks"]:
            quorum = self.config["quorums"][rec["kind"]]
            self.tasks[rec["task_id"]] = TaskState(
                rec["task_id"], rec["kind"], rec["ref_id"], rec["payload"], quorum
            )

    def _apply_batch_created(self, event: Event) -> None:
        record = event.payload["batch"]
        key = (record["target_id"], record["batch_index"])
        self.batches[key] = record
        if event.payload.get("strategy") is not None:
            self.batch_strategy = event.payload["strategy"]
        if event.payload.get("tagger_label") is not None:
            self.tagger_labels[record["target_id"]] = event.payload["tagger_label"]

    def _apply_assignment_issued(self, event: Event) -> None:
        p = event.payload
        assignment = TaskAssignment(
            p["assignment_id"], p["task_id"], p["kind"], p["worker_id"], event.ts
        )
        self.assignments[assignment.assignment_id] = assignment
        self.open_by_worker[(p["worker_id"], p["kind"])] = assignment.assignment_id
        self.open_by_task.setdefault(p["task_id"], set()).add(assignment.assignment_id)

    def _apply_response_submitted(self, event: Event) -> None:
        p = event.payload
        task = self.tasks[p["task_id"]]
        assignment = self.assignments[p["assignment_id"]]
        assignment.status = SUBMITTED
        self.open_by_worker.pop((assignment.worker_id, task.kind), None)
        self.open_by_task.get(task.task_id, set()).discard(assignment.assignment_id)
        task.responses.append((p["worker_id"], p["body"]))
        self.answered.setdefault((p["worker_id"], task.kind), set()).add(task.ref_id)
        if task.kind == GENERATION:
            self.gen_substitutes.setdefault(p["worker_id"], {})[task.ref_id] = p["body"][
                "substitute"
            ]

    def _apply_task_closed(self, event: Event) -> None:
        self.tasks[event.payload["task_id"]].status = CLOSED

    def _apply_assignment_expired(self, event: Event) -> None:
        assignment = self.assignments[event.payload["assignment_id"]]
        assignment.status = EXPIRED
        self.open_by_worker.pop((assignment.worker_id, assignment.kind), None)
        self.open_by_task.get(assignment.task_id, set()).discard(assignment.assignment_id)

    def _apply_distribution_aggregated(self, event: Event) -> None:
        self.distributions[event.payload["instance_id"]] = dict(event.payload["counts"])

    def _apply_adjudicated(self, event: Event) -> None:
        self.adjudications.append(dict(event.payload))

    def _apply_requeue_exhausted(self, event: Event) -> None:
        self.requeue_exhausted[event.payload["target_id"]] = event.payload["reason"]

    # ----------------------------------------------------------------- replay

    @classmethod
    def replay(cls, log: EventLog) -> "Platform":
        """Rebuild the full derived state from an event log."""
        platform = cls()
        expected = 1
        for event in log:
            if event.seq != expected:
                raise CorruptLogError(f"gap in event log at seq {event.seq}")
            expected += 1
            platform._apply(event)
            platform.log.append(event)
        return platform

    # ------------------------------------------------------------- state digest

    def snapshot(self) -> dict:
        """Canonical JSON-safe view of all derived state."""
        return {
            "config": self.config,
            "inventory": None
            if self.inventory is None
            else {"names": list(self.inventory.names), "version": self.inventory.version},
            "corpora": self.corpus_record_cache,
            "vectors": None if self.store is None else self.store.entries(),
            "workers": dict(sorted(self.workers.items())),
            "tasks": {
                tid: {
                    "kind": t.kind,
                    "ref_id": t.ref_id,
                    "payload": t.payload,
                    "quorum": t.quorum,
                    "status": t.status,
                    "responses": [[w, b] for w, b in t.responses],
                }
                for tid, t in sorted(self.tasks.items())
            },
            "assignments": {
                aid: {
                    "task_id": a.task_id,
                    "kind": a.kind,
                    "worker_id": a.worker_id,
                    "issued_at": a.issued_at,
                    "status": a.status,
                }
                for aid, a in sorted(self.assignments.items())
            },
            "answered": {
                f"{worker}/{kind}": sorted(refs)
                for (worker, kind), refs in sorted(self.answered.items())
            },
            "batches": {f"{t}#{i}": rec for (t, i), rec in sorted(self.batches.items())},
            "batch_strategy": self.batch_strategy,
            "tagger_labels": dict(sorted(self.tagger_labels.items())),
            "distributions": {
                iid: dict(sorted(counts.items()))
                for iid, counts in sorted(self.distributions.items())
            },
            "adjudications": self.adjudications,
            "requeue_exhausted": dict(sorted(self.requeue_exhausted.items())),
            "gen_substitutes": {
                w: dict(sorted(m.items())) for w, m in sorted(self.gen_substitutes.items())
            },
        }

    def digest(self) -> str:
        canonical = json.dumps(
            self.snapshot(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    # ------------------------------------------------------------------ reports

    def radar_rows(self, min_count: int = 3) -> list[tuple[str, str, str, int, bool]]:
        distributions = {
            iid: sub.SubstituteDistribution(iid, counts)
            for iid, counts in self.distributions.items()
            if self.find_instance(iid).gold is not None
        }
        if not distributions:
            return []
        corpus = self._target_corpus()
        aggregates = sub.aggregate_by_label(distributions, corpus)
        return sub.radar_report(aggregates, min_count)

    def label_aggregates(self) -> dict[tuple[str, SupersenseLabel], sub.SubstituteDistribution]:
        distributions = {
            iid: sub.SubstituteDistribution(iid, counts)
            for iid, counts in self.distributions.items()
            if self.find_instance(iid).gold is not None
        }
        if not distributions:
            return {}
        return sub.aggregate_by_label(distributions, self._target_corpus())

    def neighbor_votes(self) -> list[adj.VoteRecord]:
        votes = []
        for task in sorted(self.tasks.values(), key=lambda t: t.task_id):
            if task.kind != NEIGHBOR:
                continue
            for worker, body in task.responses:
                votes.append(
                    adj.VoteRecord(
                        task.ref_id,
                        task.payload["batch_index"],
                        worker,
                        frozenset(body["chosen"]),
                        body["none"],
                    )
                )
        return votes

    def vote_provenance(self) -> dict[tuple[str, str], frozenset[str]]:
        provenance: dict[tuple[str, str], frozenset[str]] = {}
        for (target_id, _), record in self.batches.items():
            for opt in record["options"]:
                key = (target_id, opt["instance_id"])
                existing = provenance.get(key, frozenset())
                provenance[key] = existing | frozenset(opt["provenance"])
        return provenance

    def strategy_rows(self) -> tuple[dict[str, adj.StrategyTally], int, int]:
        votes = self.neighbor_votes()
        workers = len({v.worker_id for v in votes})
        instances = len({v.target_id for v in votes})
        rows = adj.strategy_tally(votes, self.vote_provenance(), workers, instances)
        return rows, workers, instances

    def case_report(self) -> adj.CaseReport:
        latest: dict[str, dict] = {}
        for record in self.adjudications:
            prior = latest.get(record["target_id"])
            if prior is None or record["batch_index"] >= prior["batch_index"]:
                latest[record["target_id"]] = record
        adjudicated = []
        assert self.inventory is not None
        for target_id, record in sorted(latest.items()):
            target = self.find_instance(target_id)
            tagger_rendered = self.tagger_labels.get(target_id)
            if target.gold is None or tagger_rendered is None:
                continue
            batch = self._reconstruct_batch(target_id, record["batch_index"])
            outcome = adj.PluralityOutcome(
                target_id,
                record["batch_index"],
                dict(record["tallies"]),
                record["result"],
                record["winner"],
                frozenset(record["tied"]),
                record["none_involved"],
            )
            predicted = (
                parse_label(record["predicted_label"], self.inventory)
                if record["predicted_label"]
                else None
            )
            adjudicated.append(
                adj.AdjudicatedTarget(
                    target_id,
                    target.gold,
                    parse_label(tagger_rendered, self.inventory),
                    batch,
                    outcome,
                    predicted,
                )
            )
        return adj.accuracy_report(adjudicated, self.config["count_none_involved_ties"])

    def progress_rows(self) -> list[tuple[str, int, int, int]]:
        """(kind, total tasks, closed tasks, responses) per task kind."""
        rows = []
        for kind in TASK_KINDS:
            tasks = [t for t in self.tasks.values() if t.kind == kind]
            rows.append(
                (
                    kind,
                    len(tasks),
                    sum(1 for t in tasks if t.status == CLOSED),
                    sum(len(t.responses) for t in tasks),
                )
            )
        return rows
