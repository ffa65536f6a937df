"""A narrative tour of the prepsense library, module by module.

Run with: python3 demos/library_tour.py

Everything here is deterministic: seeded mock vectors, scripted votes, and
a seeded simulated crowd. The CLI wraps the same calls; this file shows
how to use the pieces directly.
"""

import random

from prepsense.adjudication import (
    VoteRecord,
    plurality_outcome,
    predict_tag,
    requeue_none,
    tally_votes,
)
from prepsense.corpus import (
    LABELED,
    UNLABELED,
    Corpus,
    Instance,
    LabelInventory,
    marked_text,
    parse_label,
)
from prepsense.retrieval import RetrievalStrategy, retrieve_batch
from prepsense.service import NEIGHBOR, Platform
from prepsense.simulate import SimWorkerProfile, run_simulation
from prepsense.substitution import (
    GenerationLog,
    GenerationResponse,
    SelectionResponse,
    aggregate_by_label,
    aggregate_instance_distribution,
    infer_label_nearest_centroid,
    radar_report,
    top_n_substitutes,
)
from prepsense.vectors import MockTaggerProvider, partition_jackknife, produce_vectors


def banner(title):
    print(f"\n=== {title} " + "=" * max(0, 60 - len(title)))


# ---------------------------------------------------------------- corpus

banner("labels and corpora")
inventory = LabelInventory.snacs_v2_5()
print(f"inventory: {len(inventory)} supersenses, version {inventory.version}")

label = parse_label("Manner|Locus", inventory)
print(f"parsed {label.render()!r}: scene={label.scene_role} function={label.function}")

SENTENCES = [
    ("d1", "s1", "I rented an apartment in Boston .", "in", "Locus"),
    ("d1", "s2", "I hope to see you in the future .", "in", "Time"),
    ("d1", "s3", "She said it in a whisper .", "in", "Manner"),
    ("d2", "s1", "We met in the lobby .", "in", "Locus"),
    ("d2", "s2", "He retired in 2019 .", "in", "Time"),
    ("d2", "s3", "They answered in unison .", "in", "Manner"),
    ("d3", "s1", "The keys are in the drawer .", "in", "Locus"),
    ("d3", "s2", "Call me in an hour .", "in", "Time"),
    ("d4", "s1", "The poem is written in rhyme .", "in", "Manner"),
    ("d4", "s2", "A bird landed in the garden .", "in", "Locus"),
]


def instance_from(doc, sent, text, lemma, gold_name):
    tokens = tuple(text.split())
    index = tokens.index(lemma)
    return Instance(
        f"{doc}:{sent}:{index}", doc, sent, tokens, index, lemma,
        parse_label(gold_name, inventory),
    )


def corpus_of(instances, kind):
    documents = {}
    sentences = {}
    for inst in instances:
        sentences[(inst.doc_id, inst.sent_id)] = inst.tokens
        documents[inst.doc_id] = documents.get(inst.doc_id, 0) + len(inst.tokens)
    return Corpus(kind, tuple(instances), documents, sentences)


labeled = corpus_of([instance_from(*row) for row in SENTENCES], LABELED)
# the annotation target: unlabeled in production, gold-bearing in eval mode
# (the seeded mock tagger needs the gold to smooth toward)
target = Instance(
    "pool:q1:3", "pool", "q1", tuple("The book sat in the window .".split()), 3, "in",
    parse_label("Locus", inventory),
)
unlabeled = corpus_of([target], UNLABELED)
print(f"labeled corpus: {len(labeled)} instances over {len(labeled.documents)} documents")
print(f"target: {marked_text(target)}")

# ---------------------------------------------------------------- vectors

banner("jackknife splits and probability vectors")
splits = partition_jackknife(labeled, n_splits=4)
print("split loads by document:", dict(sorted(splits.assignment.items())))

provider = MockTaggerProvider(inventory, epsilon=0.15, flip_prob=0.0, seed=13)
store = produce_vectors(labeled, splits, provider, len(inventory))
predictions = provider.predict(labeled, unlabeled)
from prepsense.vectors import ProbabilityVector  # noqa: E402 (tour ordering)

store.add(ProbabilityVector(target.instance_id, predictions[target.instance_id]))
print(f"vector store holds {len(store)} vectors of dimension {store.n_labels}")

# --------------------------------------------------------------- retrieval

banner("neighbor retrieval with the diversity filter")
strategy = RetrievalStrategy(ranking="cosine", diversity=True, k=3)
batch = retrieve_batch(target, labeled, store, strategy)
for n in batch.options:
    print(f"  {n.score:.3f}  {n.instance.gold.render():8s}  {marked_text(n.instance)}")

# ------------------------------------------------------------- adjudication

banner("plurality voting over the batch")
ids = batch.option_ids()
votes = [
    VoteRecord(target.instance_id, 0, "w1", frozenset({ids[0]})),
    VoteRecord(target.instance_id, 0, "w2", frozenset({ids[0]})),
    VoteRecord(target.instance_id, 0, "w3", frozenset({ids[0], ids[1]})),
    VoteRecord(target.instance_id, 0, "w4", frozenset({ids[1]})),
    VoteRecord(target.instance_id, 0, "w5", none_vote=True),
]
tallies = tally_votes(votes, batch)
outcome = plurality_outcome(tallies, target.instance_id)
predicted = predict_tag(outcome, batch)
print("tallies:", tallies)
print(f"outcome: {outcome.kind}, predicted supersense: {predicted.render()}")

fresh = requeue_none(target, [batch], labeled, store, strategy)
print(f"a None outcome would requeue with batch {fresh.batch_index}: {fresh.option_ids()}")

# ------------------------------------------------------------- substitution

banner("substitute generation, selection, and label inference")


def instance_id_of(doc, sent):
    return next(
        i.instance_id for i in labeled.instances if (i.doc_id, i.sent_id) == (doc, sent)
    )


log = GenerationLog()
script = {
    instance_id_of("d1", "s1"): ["inside", "within", "at"],
    instance_id_of("d2", "s1"): ["inside", "within", "at the heart of"],
    instance_id_of("d3", "s1"): ["inside", "within", "at"],
    instance_id_of("d1", "s2"): ["during", "at some point within", "within"],
    instance_id_of("d2", "s2"): ["during", "within", "sometime during"],
    instance_id_of("d3", "s2"): ["during", "within", "at"],
}
for iid, substitutes in script.items():
    inst = labeled.get(iid)
    for w, text in enumerate(substitutes):
        log.record(GenerationResponse(iid, f"w{w}", text), inst)
options = top_n_substitutes(log.responses(), n=4)
print("selection options (top 4):", options)

selections = {}
for iid in script:
    gold = labeled.get(iid).gold.render()
    picks = {"Locus": ["inside", "within"], "Time": ["during"]}[gold]
    responses = [
        SelectionResponse(iid, f"w{w}", frozenset(picks)) for w in range(3)
    ]
    selections[iid] = aggregate_instance_distribution(responses)

aggregates = aggregate_by_label(selections, labeled)
for (lemma, gold), dist in sorted(aggregates.items(), key=lambda kv: kv[0][1].render()):
    print(f"  ({lemma}, {gold.render()}): {dict(sorted(dist.counts.items()))}")
print("radar rows (min global count 3):")
for row in radar_report(aggregates, min_count=3):
    print("  ", row)

mystery = aggregate_instance_distribution(
    [SelectionResponse("pool:q1:3", f"w{w}", frozenset({"during"})) for w in range(3)]
)
answer = infer_label_nearest_centroid(mystery, aggregates, "in")
print(f"nearest centroid for the mystery instance: {answer[0].render()} (sim {answer[1]:.3f})")

# ------------------------------------------------------------------ service

banner("event-sourced service with a simulated crowd")
platform = Platform()
platform.set_config(quorums={"neighbor": 3})
platform.load_inventory(inventory)
platform.add_corpus(labeled)
platform.add_corpus(unlabeled)
platform.load_vectors(store)
platform.create_neighbor_tasks([batch], {target.instance_id: predicted}, strategy)
crowd = [SimWorkerProfile(f"sim{i}", correctness=0.9, none_bias=0.5, seed=7) for i in range(5)]
run_simulation(platform, crowd, kinds=(NEIGHBOR,))
print(f"{len(platform.log)} events; adjudications: {len(platform.adjudications)}")
print(f"live digest : {platform.digest()}")
replayed = Platform.replay(platform.log)
print(f"replay digest: {replayed.digest()}")
assert replayed.digest() == platform.digest()
print("replay reconstructs the exact state.")
