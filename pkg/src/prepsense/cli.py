"""Operator command line: pipeline stages, worker simulation, reports.

Subcommands mirror the pipeline: ingest -> partition -> vectors -> batches
-> (serve | simulate) -> aggregate -> report; `run` chains everything per
the config file. Exit codes: 0 success, 1 usage error, 2 stage failure.

The config is one declarative JSON or YAML file; see configs/ for
examples. All artifacts land under --out with a digest manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import reports as rpt
from . import retrieval as ret
from . import service as svc
from . import simulate as sim
from . import substitution as sub
from . import vectors as vec
from .corpus import LABELED, UNLABELED, Corpus, LabelInventory, ingest_corpus, write_corpus
from .errors import PrepsenseError, StageError, ValidationError

log = logging.getLogger(__name__)


class UsageError(PrepsenseError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------- config


def load_config(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    if p.suffix in (".yaml", ".yml"):
        cfg = yaml.safe_load(text)
    else:
        cfg = json.loads(text)
    if not isinstance(cfg, dict):
        raise UsageError("config must be a mapping")
    return cfg


def _resolve(cfg: dict, key: str, base: Path) -> Path:
    try:
        raw = cfg[key]
    except KeyError:
        raise ValidationError(f"config is missing {key!r}") from None
    path = Path(raw)
    return path if path.is_absolute() else base / path


def load_inventory(cfg: dict, base: Path) -> LabelInventory:
    name = cfg.get("inventory", "snacs-v2.5")
    if name == "snacs-v2.5":
        return LabelInventory.snacs_v2_5()
    path = Path(name)
    return LabelInventory.from_file(path if path.is_absolute() else base / path)


def worker_profiles(cfg: dict, seed: int) -> list[sim.SimWorkerProfile]:
    spec = cfg.get("workers", {"count": 8, "correctness": 0.8, "none_bias": 0.5})
    if isinstance(spec, dict):
        return [
            sim.SimWorkerProfile(
                f"w{i + 1}",
                float(spec.get("correctness", 0.8)),
                float(spec.get("none_bias", 0.5)),
                int(spec.get("seed", seed)),
            )
            for i in range(int(spec.get("count", 8)))
        ]
    return [
        sim.SimWorkerProfile(
            w["worker_id"],
            float(w["correctness"]),
            float(w.get("none_bias", 0.0)),
            int(w.get("seed", seed)),
        )
        for w in spec
    ]


def build_provider(cfg: dict, inventory: LabelInventory, seed: int):
    spec = cfg.get("provider", {"type": "mock"})
    kind = spec.get("type", "mock")
    if kind == "mock":
        return vec.MockTaggerProvider(
            inventory,
            float(spec.get("epsilon", 0.1)),
            float(spec.get("flip_prob", 0.0)),
            int(spec.get("seed", seed)),
        )
    if kind == "command":
        return vec.ExternalCommandProvider(list(spec["argv"]))
    raise ValidationError(f"unknown provider type {kind!r}")


def build_strategies(cfg: dict, seed: int) -> list[ret.RetrievalStrategy]:
    if "strategies" in cfg:
        specs = cfg["strategies"]
    else:
        specs = [cfg.get("strategy", {"ranking": "cosine", "diversity": True, "k": 5})]
    out = []
    for spec in specs:
        spec = dict(spec)
        spec.setdefault("seed", seed)
        out.append(ret.RetrievalStrategy.from_dict(spec))
    return out


# ------------------------------------------------------------------- manifest


class Manifest:
    """Tracks every artifact written under the output directory, with digests."""

    def __init__(self, out: Path):
        self.out = out
        self.path = out / "manifest.json"
        self.data: dict = {"files": {}, "state_digest": None}
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))

    def add(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.data["files"][str(path.relative_to(self.out))] = digest
        self._save()

    def set_state_digest(self, digest: str) -> None:
        self.data["state_digest"] = digest
        self._save()

    def _save(self) -> None:
        body = json.dumps(self.data, indent=2, sort_keys=True) + "\n"
        self.path.write_text(body, encoding="utf-8")


def _write(manifest: Manifest, path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    manifest.add(path)
    return path


# ------------------------------------------------------------------ pipeline


@dataclass
class PipelineState:
    cfg: dict
    base: Path
    out: Path
    seed: int
    manifest: Manifest
    inventory: LabelInventory | None = None
    labeled: Corpus | None = None
    unlabeled: Corpus | None = None
    splits: vec.SplitAssignment | None = None
    store: vec.VectorStore | None = None
    batches: list[ret.NeighborBatch] | None = None
    tagger_labels: dict | None = None
    platform: svc.Platform | None = None

    @property
    def design(self) -> str:
        return self.cfg.get("design", "neighbor")

    @property
    def needs_neighbor(self) -> bool:
        return self.design in ("neighbor", "both")

    @property
    def needs_substitution(self) -> bool:
        return self.design in ("substitution", "both")


def _stage(name):
    def wrap(fn):
        def run(state: PipelineState, *args, **kwargs):
            try:
                return fn(state, *args, **kwargs)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(name, str(exc)) from exc

        return run

    return wrap


@_stage("ingest")
def stage_ingest(state: PipelineState) -> None:
    state.inventory = load_inventory(state.cfg, state.base)
    labeled_path = _resolve(state.cfg, "labeled_corpus", state.base)
    state.labeled = ingest_corpus(labeled_path, LABELED, state.inventory)
    if "unlabeled_corpus" in state.cfg:
        unlabeled_path = _resolve(state.cfg, "unlabeled_corpus", state.base)
        state.unlabeled = ingest_corpus(unlabeled_path, UNLABELED, state.inventory)
    for kind, corpus in (("labeled", state.labeled), ("unlabeled", state.unlabeled)):
        if corpus is None:
            continue
        path = state.out / f"corpus_{kind}.jsonl"
        write_corpus(corpus, path)
        state.manifest.add(path)
    log.info(
        "ingested %d labeled / %d unlabeled instances",
        len(state.labeled),
        0 if state.unlabeled is None else len(state.unlabeled),
    )


@_stage("partition")
def stage_partition(state: PipelineState) -> None:
    assert state.labeled is not None
    n_splits = int(state.cfg.get("n_splits", 5))
    state.splits = vec.partition_jackknife(state.labeled, n_splits)
    body = json.dumps(
        {"n_splits": n_splits, "assignment": dict(sorted(state.splits.assignment.items()))},
        indent=2,
        sort_keys=True,
    )
    _write(state.manifest, state.out / "splits.json", body + "\n")


@_stage("vectors")
def stage_vectors(state: PipelineState) -> None:
    assert state.inventory is not None and state.labeled is not None and state.splits is not None
    provider = build_provider(state.cfg, state.inventory, state.seed)
    state.store = vec.produce_vectors(
        state.labeled, state.splits, provider, len(state.inventory)
    )
    if state.unlabeled is not None:
        vec.produce_target_vectors(state.store, state.labeled, state.unlabeled, provider)
    path = state.out / "vectors.jsonl"
    state.store.save(path)
    state.manifest.add(path)


@_stage("batches")
def stage_batches(state: PipelineState) -> None:
    assert state.inventory is not None and state.labeled is not None and state.store is not None
    targets = state.unlabeled or state.labeled
    strategies = build_strategies(state.cfg, state.seed)
    batches = []
    tagger_labels = {}
    for target in sorted(targets.instances, key=lambda i: i.instance_id):
        if len(strategies) == 1:
            batch = ret.retrieve_batch(
                target, state.labeled, state.store, strategies[0], inventory=state.inventory
            )
        else:
            batch = ret.merged_batch(
                target, state.labeled, state.store, strategies, inventory=state.inventory
            )
        if batch.is_empty:
            log.warning("no neighbors retrievable for %s; skipping", target.instance_id)
            continue
        batches.append(batch)
        if target.instance_id in state.store.vectors:
            tagger_labels[target.instance_id] = vec.argmax_label(
                state.store.require(target.instance_id), state.inventory
            )
    state.batches = batches
    state.tagger_labels = tagger_labels
    lines = [json.dumps(ret.batch_record(b), sort_keys=True) for b in batches]
    _write(state.manifest, state.out / "batches.jsonl", "\n".join(lines) + "\n" if lines else "")


def build_platform(state: PipelineState) -> svc.Platform:
    """Assemble a Platform with corpora, vectors, config, and initial tasks."""
    assert state.inventory is not None and state.labeled is not None
    platform = svc.Platform()
    overrides = {
        k: state.cfg[k]
        for k in (
            "quorums",
            "selection_n",
            "max_requeues",
            "requeue_on_none",
            "requeue_on_none_tie",
            "count_none_involved_ties",
        )
        if k in state.cfg
    }
    if overrides:
        platform.set_config(**overrides)
    platform.load_inventory(state.inventory)
    platform.add_corpus(state.labeled)
    if state.unlabeled is not None:
        platform.add_corpus(state.unlabeled)
    if state.store is not None:
        platform.load_vectors(state.store)
    for worker_id, token in sorted(state.cfg.get("serve", {}).get("workers", {}).items()):
        platform.register_worker(worker_id, token)
    if state.needs_substitution:
        platform.create_generation_tasks()
        if state.cfg.get("selection_options"):
            platform.create_selection_tasks(state.cfg["selection_options"])
    if state.needs_neighbor:
        strategies = build_strategies(state.cfg, state.seed)
        platform.create_neighbor_tasks(
            state.batches or [], state.tagger_labels or {}, strategies[0]
        )
    state.platform = platform
    return platform


@_stage("simulate")
def stage_simulate(state: PipelineState) -> None:
    platform = state.platform or build_platform(state)
    profiles = worker_profiles(state.cfg, state.seed)
    quorums = platform.config["quorums"]
    needed = max(
        quorums[k]
        for k in ([svc.NEIGHBOR] if state.needs_neighbor else [])
        + ([svc.GENERATION, svc.SELECTION] if state.needs_substitution else [])
    )
    if len(profiles) < needed:
        log.warning("only %d workers for quorum %d; tasks may never close", len(profiles), needed)
    lexicon = sim.SyntheticLexicon()
    total = 0
    if state.needs_substitution:
        total += sim.run_simulation(platform, profiles, lexicon, kinds=(svc.GENERATION,))
        if not state.cfg.get("selection_options"):
            platform.create_selection_tasks()
        total += sim.run_simulation(platform, profiles, lexicon, kinds=(svc.SELECTION,))
    if state.needs_neighbor:
        total += sim.run_simulation(platform, profiles, lexicon, kinds=(svc.NEIGHBOR,))
    log.info("simulation submitted %d responses", total)
    _save_events(state, platform)


def _save_events(state: PipelineState, platform: svc.Platform) -> None:
    path = state.out / "events.jsonl"
    platform.log.save(path)
    state.manifest.add(path)
    state.manifest.set_state_digest(platform.digest())


def _load_platform_from_events(state: PipelineState) -> svc.Platform:
    path = state.out / "events.jsonl"
    if not path.exists():
        raise ValidationError(f"no event log at {path}; run simulate or serve first")
    return svc.Platform.replay(svc.EventLog.load(path))


@_stage("aggregate")
def stage_aggregate(state: PipelineState) -> None:
    platform = state.platform or _load_platform_from_events(state)
    state.platform = platform
    dist_lines = [
        json.dumps({"instance_id": iid, "counts": dict(sorted(counts.items()))}, sort_keys=True)
        for iid, counts in sorted(platform.distributions.items())
    ]
    _write(
        state.manifest,
        state.out / "distributions.jsonl",
        "\n".join(dist_lines) + "\n" if dist_lines else "",
    )
    adj_lines = [json.dumps(rec, sort_keys=True) for rec in platform.adjudications]
    _write(
        state.manifest,
        state.out / "adjudications.jsonl",
        "\n".join(adj_lines) + "\n" if adj_lines else "",
    )
    inferences = _inference_rows(platform)
    body = ["instance_id\tlemma\tinferred\tconfidence\tgold\tcorrect"]
    body += [
        f"{iid}\t{lemma}\t{label}\t{conf:.6f}\t{gold}\t{correct}"
        for iid, lemma, label, conf, gold, correct in inferences
    ]
    _write(state.manifest, state.out / "inferences.tsv", "\n".join(body) + "\n")


def _inference_rows(platform: svc.Platform) -> list[tuple[str, str, str, float, str, str]]:
    """Nearest-centroid inference per aggregated instance (leave-one-out)."""
    aggregates = platform.label_aggregates()
    rows = []
    for iid, counts in sorted(platform.distributions.items()):
        inst = platform.find_instance(iid)
        if inst.gold is None:
            continue
        dist = sub.SubstituteDistribution(iid, counts)
        centroids = {}
        for key, agg in aggregates.items():
            remaining = dict(agg.counts)
            if key == (inst.lemma, inst.gold):
                for text, count in counts.items():
                    remaining[text] = remaining.get(text, 0) - count
            remaining = {t: c for t, c in remaining.items() if c > 0}
            if remaining:
                centroids[key] = sub.SubstituteDistribution(key, remaining)
        if not any(lem == inst.lemma for lem, _ in centroids):
            continue
        result = sub.infer_label_nearest_centroid(dist, centroids, inst.lemma)
        if result is None:
            rows.append((iid, inst.lemma, "(abstain)", 0.0, inst.gold.render(), "0"))
        else:
            label, confidence = result
            rows.append(
                (
                    iid,
                    inst.lemma,
                    label.render(),
                    confidence,
                    inst.gold.render(),
                    "1" if label == inst.gold else "0",
                )
            )
    return rows


@_stage("report")
def stage_report(state: PipelineState, which: str = "all") -> None:
    platform = state.platform or _load_platform_from_events(state)
    state.platform = platform
    names = list(rpt.REPORT_NAMES) if which == "all" else [which]
    for name in names:
        text = rpt.render_report(platform, name)
        _write(state.manifest, state.out / "reports" / f"{name.replace('-', '_')}.tsv", text)


@_stage("serve")
def stage_serve(state: PipelineState, host: str | None, port: int | None) -> None:
    import uvicorn

    from .webapp import create_app

    platform = state.platform or build_platform(state)
    # stream every event to disk while serving; a crash loses no responses
    events_path = state.out / "events.jsonl"
    platform.log.attach_sink(events_path)
    serve_cfg = state.cfg.get("serve", {})
    app = create_app(platform, serve_cfg.get("admin_token", ""))
    try:
        uvicorn.run(
            app,
            host=host or serve_cfg.get("host", "127.0.0.1"),
            port=port or int(serve_cfg.get("port", 8765)),
            log_level="warning",
        )
    finally:
        platform.log.detach_sink()
        state.manifest.add(events_path)
        state.manifest.set_state_digest(platform.digest())


@dataclass
class RunResult:
    out: Path
    digest: str | None
    platform: svc.Platform | None


def run_stages(state: PipelineState, upto: str) -> None:
    """Run the data-preparation chain up to and including the named stage."""
    stage_ingest(state)
    if upto == "ingest":
        return
    stage_partition(state)
    if upto == "partition":
        return
    stage_vectors(state)
    if upto == "vectors":
        return
    stage_batches(state)


def prepare(state: PipelineState) -> None:
    """The data-preparation stages the configured design actually needs."""
    if state.design not in ("neighbor", "substitution", "both"):
        raise UsageError(f"unknown design {state.design!r}")
    stage_ingest(state)
    if state.needs_neighbor:
        stage_partition(state)
        stage_vectors(state)
        stage_batches(state)


def run_pipeline(state: PipelineState, serve: bool = False, host=None, port=None) -> RunResult:
    """The whole pipeline per the config: prepare, simulate/serve, aggregate, report."""
    prepare(state)
    if serve:
        stage_serve(state, host, port)
        return RunResult(state.out, state.manifest.data.get("state_digest"), state.platform)
    stage_simulate(state)
    stage_aggregate(state)
    stage_report(state, "all")
    assert state.platform is not None
    state.manifest.set_state_digest(state.platform.digest())
    return RunResult(state.out, state.platform.digest(), state.platform)


# ----------------------------------------------------------------------- main


def build_parser() -> _Parser:
    parser = _Parser(prog="prepsense", description=__doc__)
    parser.add_argument("--config", required=True, help="pipeline config file (JSON or YAML)")
    parser.add_argument("--out", required=True, help="artifact output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--log-level", default="warning")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "partition", "vectors", "batches", "simulate", "aggregate", "run"):
        commands.add_parser(name)
    report = commands.add_parser("report")
    report.add_argument("--which", default="all", choices=("all", *rpt.REPORT_NAMES))
    serve = commands.add_parser("serve")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def make_state(args) -> PipelineState:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return PipelineState(cfg, Path(args.config).resolve().parent, out, seed, Manifest(out))


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=args.log_level.upper())
    try:
        state = make_state(args)
        if args.command == "run":
            run_pipeline(state)
        elif args.command == "serve":
            prepare(state)
            stage_serve(state, args.host, args.port)
        elif args.command == "simulate":
            prepare(state)
            stage_simulate(state)
        elif args.command == "aggregate":
            stage_aggregate(state)
        elif args.command == "report":
            if args.which == "all":
                stage_report(state, "all")
            else:
                stage_report(state, args.which)
        else:
            run_stages(state, args.command)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except PrepsenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
