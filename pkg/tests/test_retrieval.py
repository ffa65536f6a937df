import math
import random

import pytest

from prepsense.corpus import LABELED, SupersenseLabel
from prepsense.errors import ValidationError
from prepsense.retrieval import (
    Neighbor,
    NeighborBatch,
    RetrievalStrategy,
    apply_constraints,
    batch_from_record,
    batch_record,
    dedup_merge,
    diversity_filter,
    merged_batch,
    rank_candidates,
    retrieve_batch,
)
from prepsense.vectors import ProbabilityVector, VectorStore

import synth


def test_random_ranking_requires_same_word():
    with pytest.raises(ValidationError):
        RetrievalStrategy(ranking="random", same_word=False)
    RetrievalStrategy(ranking="random", same_word=True)  # constructible


def test_strategy_names_match_flag_combinations():
    assert RetrievalStrategy().name == "cos"
    assert RetrievalStrategy(same_word=True).name == "cos/word"
    assert RetrievalStrategy(same_supersense=True).name == "cos/ss"
    assert RetrievalStrategy(same_word=True, same_supersense=True).name == "cos/word/ss"
    assert RetrievalStrategy(ranking="random", same_word=True).name == "rand/word"
    assert (
        RetrievalStrategy(ranking="random", same_word=True, same_supersense=True).name
        == "rand/word/ss"
    )
    assert RetrievalStrategy(diversity=True).name == "cos/div"


def test_strategy_rejects_bad_k_and_ranking():
    with pytest.raises(ValidationError):
        RetrievalStrategy(k=0)
    with pytest.raises(ValidationError):
        RetrievalStrategy(ranking="best")


# ------------------------------------------------------------------- ranking


def fixed_world():
    """Three labeled instances with hand-set vectors plus a target."""
    inv = synth.inventory(3)
    gold = SupersenseLabel("L00", "L00")
    instances = [
        synth.make_instance(doc="d0", sent="x", lemma="at", gold=gold),
        synth.make_instance(doc="d0", sent="y", lemma="at", gold=SupersenseLabel("L01", "L01")),
        synth.make_instance(doc="d1", sent="z", lemma="by", gold=SupersenseLabel("L02", "L02")),
    ]
    labeled = synth.build_corpus(instances)
    target = synth.make_instance(doc="t", sent="t", lemma="at", gold=gold)
    store = VectorStore(3)
    store.add(ProbabilityVector(target.instance_id, (1.0, 0.0, 0.0)))
    store.add(ProbabilityVector(instances[0].instance_id, (0.8, 0.2, 0.0)))
    store.add(ProbabilityVector(instances[1].instance_id, (0.5, 0.5, 0.0)))
    store.add(ProbabilityVector(instances[2].instance_id, (0.0, 0.0, 1.0)))
    return inv, labeled, target, store, instances


def brute_force_rank(target, labeled, store):
    """Independent full sort: plain cosine formula and an explicit stable sort."""
    rows = []
    for inst in labeled.instances:
        if inst.instance_id == target.instance_id:
            continue
        a = store.require(target.instance_id).probs
        b = store.require(inst.instance_id).probs
        dot = 0.0
        na = 0.0
        nb = 0.0
        for x, y in zip(a, b):
            dot += x * y
            na += x * x
            nb += y * y
        rows.append((inst, dot / (math.sqrt(na) * math.sqrt(nb))))
    rows.sort(key=lambda r: (-r[1], r[0].instance_id))
    return rows


def test_rank_candidates_empty_corpus():
    inv, labeled, target, store, _ = fixed_world()
    empty = synth.build_corpus([], LABELED)
    assert rank_candidates(target, empty, store) == []


def test_rank_candidates_matches_brute_force_oracle():
    _, labeled, target, store, instances = fixed_world()
    got = rank_candidates(target, labeled, store)
    expected = brute_force_rank(target, labeled, store)
    assert [(i.instance_id, s) for i, s in got] == [(i.instance_id, s) for i, s in expected]
    assert got[0][0].instance_id == instances[0].instance_id


def test_rank_candidates_excludes_target_itself():
    _, labeled, target, store, instances = fixed_world()
    member = instances[0]
    got = rank_candidates(member, labeled, store)
    assert member.instance_id not in [i.instance_id for i, _ in got]


def test_rank_candidates_missing_vector_names_instance():
    _, labeled, target, _, _ = fixed_world()
    empty_store = VectorStore(3)
    empty_store.add(ProbabilityVector(target.instance_id, (1.0, 0.0, 0.0)))
    with pytest.raises(ValidationError, match="d0:x"):
        rank_candidates(target, labeled, empty_store)


def test_random_ranking_reproducible_and_zero_scored():
    _, labeled, target, store, _ = fixed_world()
    a = rank_candidates(target, labeled, store, ranking="random", seed=9)
    b = rank_candidates(target, labeled, store, ranking="random", seed=9)
    assert [i.instance_id for i, _ in a] == [i.instance_id for i, _ in b]
    assert all(s == 0.0 for _, s in a)
    c = rank_candidates(target, labeled, store, ranking="random", seed=10)
    assert len(c) == len(a)


# --------------------------------------------------------------- constraints


def test_same_word_filter_keeps_order():
    _, labeled, target, store, instances = fixed_world()
    ranked = rank_candidates(target, labeled, store)
    got = apply_constraints(ranked, target, same_word=True)
    assert [i.lemma for i, _ in got] == ["at", "at"]
    assert [i.instance_id for i, _ in got] == [
        i.instance_id for i, _ in ranked if i.lemma == "at"
    ]


def test_same_supersense_oracle_mode_and_reference():
    _, labeled, target, store, instances = fixed_world()
    ranked = rank_candidates(target, labeled, store)
    got = apply_constraints(ranked, target, same_supersense=True)
    assert [i.instance_id for i, _ in got] == [instances[0].instance_id]
    ref = SupersenseLabel("L02", "L02")
    got = apply_constraints(ranked, target, same_supersense=True, reference_label=ref)
    assert [i.instance_id for i, _ in got] == [instances[2].instance_id]


def test_same_supersense_requires_reference():
    _, labeled, target, store, _ = fixed_world()
    bare_target = synth.make_instance(doc="t2", sent="t2", lemma="at", gold=None)
    with pytest.raises(ValidationError):
        apply_constraints([], bare_target, same_supersense=True)


def test_constraints_off_is_identity():
    _, labeled, target, store, _ = fixed_world()
    ranked = rank_candidates(target, labeled, store)
    assert apply_constraints(ranked, target) == ranked


# ----------------------------------------------------------------- diversity


def label(n):
    return SupersenseLabel(f"L{n:02d}", f"L{n:02d}")


def test_diversity_keeps_first_of_each_label():
    insts = [
        synth.make_instance(doc="d", sent=f"s{i}", gold=label(g))
        for i, g in enumerate((0, 0, 1, 2))
    ]
    candidates = [(inst, 1.0 - 0.1 * i) for i, inst in enumerate(insts)]
    got = diversity_filter(candidates, 3)
    assert [i.instance_id for i, _ in got] == [
        insts[0].instance_id,
        insts[2].instance_id,
        insts[3].instance_id,
    ]


def test_diversity_single_label_collapses_to_one():
    insts = [synth.make_instance(doc="d", sent=f"s{i}", gold=label(0)) for i in range(6)]
    got = diversity_filter([(i, 0.5) for i in insts], 5)
    assert len(got) == 1


def test_diversity_rich_set_yields_k_distinct_labels():
    insts = [synth.make_instance(doc="d", sent=f"s{i}", gold=label(i % 8)) for i in range(16)]
    got = diversity_filter([(i, 1.0 - 0.01 * k) for k, i in enumerate(insts)], 5)
    rendered = [i.gold.render() for i, _ in got]
    assert len(got) == 5 and len(set(rendered)) == 5


# ------------------------------------------------------------ batch assembly


def bigger_world(seed=21, n=40, n_labels=8):
    rng = random.Random(seed)
    inv = synth.inventory(n_labels)
    labeled = synth.random_labeled_corpus(rng, inv, n, n_docs=4)
    target = synth.make_instance(doc="tgt", sent="s", lemma="in", gold=synth.random_label(rng, inv))
    ids = [i.instance_id for i in labeled.instances] + [target.instance_id]
    store = synth.random_store(rng, inv, ids)
    return inv, labeled, target, store


def test_retrieve_batch_diversity_config():
    inv, labeled, target, store = bigger_world()
    strategy = RetrievalStrategy(diversity=True, k=5)
    batch = retrieve_batch(target, labeled, store, strategy)
    assert len(batch.options) <= 5
    rendered = [n.instance.gold.render() for n in batch.options]
    assert len(set(rendered)) == len(rendered)
    assert target.instance_id not in batch.option_ids()


def test_retrieve_batch_respects_exclusions_and_signals_empty():
    inv, labeled, target, store = bigger_world()
    everything = {i.instance_id for i in labeled.instances}
    batch = retrieve_batch(
        target, labeled, store, RetrievalStrategy(k=3), exclude=everything
    )
    assert batch.is_empty


def test_retrieve_batch_options_sorted_by_score_then_id():
    inv, labeled, target, store = bigger_world()
    batch = retrieve_batch(target, labeled, store, RetrievalStrategy(k=10))
    pairs = [(-n.score, n.instance_id) for n in batch.options]
    assert pairs == sorted(pairs)


def test_require_tagger_prediction_splices_in_argmax_label():
    inv = synth.inventory(3)
    # target vector argmax = L02; top candidates carry L00/L01 only
    gold2 = SupersenseLabel("L02", "L02")
    insts = [
        synth.make_instance(doc="d", sent="s0", gold=label(0)),
        synth.make_instance(doc="d", sent="s1", gold=label(1)),
        synth.make_instance(doc="d", sent="s2", gold=gold2),
    ]
    labeled = synth.build_corpus(insts)
    target = synth.make_instance(doc="t", sent="t", gold=gold2)
    store = VectorStore(3)
    store.add(ProbabilityVector(target.instance_id, (0.1, 0.1, 0.8)))
    store.add(ProbabilityVector(insts[0].instance_id, (0.2, 0.1, 0.7)))
    store.add(ProbabilityVector(insts[1].instance_id, (0.1, 0.2, 0.7)))
    store.add(ProbabilityVector(insts[2].instance_id, (0.8, 0.1, 0.1)))
    base = RetrievalStrategy(k=2)
    plain = retrieve_batch(target, labeled, store, base)
    assert gold2.render() not in [n.instance.gold.render() for n in plain.options]
    spliced = retrieve_batch(
        target,
        labeled,
        store,
        RetrievalStrategy(k=2, require_tagger_prediction=True),
        inventory=inv,
    )
    got_labels = [n.instance.gold.render() for n in spliced.options]
    assert "L02" in got_labels and len(spliced.options) == 2


def test_require_tagger_prediction_noop_when_label_unavailable():
    inv = synth.inventory(3)
    insts = [synth.make_instance(doc="d", sent="s0", gold=label(0))]
    labeled = synth.build_corpus(insts)
    target = synth.make_instance(doc="t", sent="t", gold=label(2))
    store = VectorStore(3)
    store.add(ProbabilityVector(target.instance_id, (0.0, 0.0, 1.0)))
    store.add(ProbabilityVector(insts[0].instance_id, (1.0, 0.0, 0.0)))
    batch = retrieve_batch(
        target,
        labeled,
        store,
        RetrievalStrategy(k=1, require_tagger_prediction=True),
        inventory=inv,
    )
    assert [n.instance.gold.render() for n in batch.options] == ["L00"]


# ----------------------------------------------------------------- dedup etc.


def test_dedup_merge_unifies_provenance_and_keeps_max_score():
    inst_a = synth.make_instance(doc="d", sent="a", gold=label(0))
    inst_b = synth.make_instance(doc="d", sent="b", gold=label(1))
    inst_c = synth.make_instance(doc="d", sent="c", gold=label(2))
    contributions = [
        ("cos", Neighbor(inst_a, 0.9, frozenset({"cos"}))),
        ("cos/word", Neighbor(inst_a, 0.9, frozenset({"cos/word"}))),
        ("cos/ss", Neighbor(inst_b, 0.7, frozenset({"cos/ss"}))),
        ("cos/word/ss", Neighbor(inst_b, 0.7, frozenset({"cos/word/ss"}))),
        ("rand/word", Neighbor(inst_c, 0.0, frozenset({"rand/word"}))),
        ("rand/word/ss", Neighbor(inst_c, 0.0, frozenset({"rand/word/ss"}))),
    ]
    merged = dedup_merge(contributions)
    assert len(merged) == 3
    all_names = set()
    for n in merged:
        all_names |= n.provenance
    assert all_names == {"cos", "cos/word", "cos/ss", "cos/word/ss", "rand/word", "rand/word/ss"}


def test_dedup_merge_score_conflict_takes_max():
    inst = synth.make_instance(doc="d", sent="a", gold=label(0))
    merged = dedup_merge(
        [
            ("cos", Neighbor(inst, 0.9, frozenset({"cos"}))),
            ("rand/word", Neighbor(inst, 0.0, frozenset({"rand/word"}))),
        ]
    )
    assert len(merged) == 1
    assert merged[0].score == 0.9
    assert merged[0].provenance == {"cos", "rand/word"}


def test_dedup_merge_distinct_inputs_pass_through_and_idempotent():
    insts = [synth.make_instance(doc="d", sent=f"s{i}", gold=label(i)) for i in range(4)]
    contributions = [("cos", Neighbor(i, 0.5, frozenset({"cos"}))) for i in insts]
    once = dedup_merge(contributions)
    assert len(once) == len(contributions)
    twice = dedup_merge([("x", n) for n in once])
    assert [n.instance_id for n in twice] == [n.instance_id for n in once]
    assert all(b.provenance >= a.provenance for a, b in zip(once, twice))


def test_merged_batch_six_strategies_at_most_six_unique():
    inv, labeled, target, store = bigger_world(seed=33)
    strategies = [
        RetrievalStrategy(k=1),
        RetrievalStrategy(k=1, same_word=True),
        RetrievalStrategy(k=1, same_supersense=True),
        RetrievalStrategy(k=1, same_word=True, same_supersense=True),
        RetrievalStrategy(k=1, ranking="random", same_word=True, seed=3),
        RetrievalStrategy(k=1, ranking="random", same_word=True, same_supersense=True, seed=3),
    ]
    batch = merged_batch(target, labeled, store, strategies)
    assert 1 <= len(batch.options) <= 6
    union = set()
    for n in batch.options:
        union |= n.provenance
    assert union <= {s.name for s in strategies}


def test_batch_invariants():
    n0 = Neighbor(synth.make_instance(doc="d", sent="a", gold=label(0)), 0.9, frozenset({"cos"}))
    n1 = Neighbor(synth.make_instance(doc="d", sent="b", gold=label(1)), 0.5, frozenset({"cos"}))
    NeighborBatch("t", (n0, n1))
    with pytest.raises(ValidationError):
        NeighborBatch("t", (n1, n0))  # out of order
    with pytest.raises(ValidationError):
        NeighborBatch("t", (n0, n0))  # duplicate
    with pytest.raises(ValidationError):
        NeighborBatch(n0.instance_id, (n0,))  # contains target


def test_batch_record_roundtrip():
    inv, labeled, target, store = bigger_world(seed=44)
    batch = retrieve_batch(target, labeled, store, RetrievalStrategy(diversity=True, k=4))
    rec = batch_record(batch)
    rebuilt = batch_from_record(rec, labeled)
    assert rebuilt.option_ids() == batch.option_ids()
    assert [n.score for n in rebuilt.options] == [n.score for n in batch.options]
    assert [n.provenance for n in rebuilt.options] == [n.provenance for n in batch.options]
