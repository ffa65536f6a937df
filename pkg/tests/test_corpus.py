import json

import pytest

from prepsense.corpus import (
    LABELED,
    UNLABELED,
    Instance,
    LabelInventory,
    SupersenseLabel,
    corpus_records,
    ingest_corpus,
    instances_of_preposition,
    marked_text,
    parse_label,
    render_label,
    write_corpus,
)
from prepsense.errors import FormatError, InventoryError, ValidationError

import synth

SNACS = LabelInventory.snacs_v2_5()


def test_snacs_inventory_has_50_entries():
    assert len(SNACS) == 50
    assert "Locus" in SNACS
    assert "OrgRole" in SNACS


def test_parse_single_name_means_scene_equals_function():
    label = parse_label("Locus", SNACS)
    assert label == SupersenseLabel("Locus", "Locus")


def test_parse_pipe_splits_scene_and_function():
    assert parse_label("Manner|Locus", SNACS) == SupersenseLabel("Manner", "Locus")


def test_parse_rejects_two_pipes():
    with pytest.raises(FormatError):
        parse_label("Goal|Locus|X", SNACS)


def test_parse_rejects_empty_and_empty_component():
    with pytest.raises(FormatError):
        parse_label("", SNACS)
    with pytest.raises(FormatError):
        parse_label("Locus|", SNACS)


def test_parse_names_unknown_identifier():
    with pytest.raises(InventoryError, match="Locas"):
        parse_label("Locas", SNACS)


def test_render_examples():
    assert render_label(SupersenseLabel("StartTime", "StartTime")) == "StartTime"
    assert render_label(SupersenseLabel("Beneficiary", "Goal")) == "Beneficiary|Goal"
    assert render_label(SupersenseLabel("Means", "Means")) == "Means"


def test_parse_render_roundtrip_over_inventory_cross_product():
    for scene in SNACS.names:
        for function in SNACS.names:
            label = SupersenseLabel(scene, function)
            assert parse_label(render_label(label), SNACS) == label


def test_inventory_rejects_duplicates_and_empty():
    with pytest.raises(ValidationError):
        LabelInventory(("A", "A"))
    with pytest.raises(ValidationError):
        LabelInventory(())


# ------------------------------------------------------------------ ingestion


def _record(doc, sent, tokens, targets):
    return {"doc_id": doc, "sent_id": sent, "tokens": tokens, "targets": targets}


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def test_ingest_counts_instances_and_documents(tmp_path):
    records = [
        _record("d1", "s1", ["a", "in", "b"], [{"index": 1, "lemma": "in", "label": "Locus"}]),
        _record(
            "d1",
            "s2",
            ["c", "for", "d"],
            [{"index": 1, "lemma": "for", "label": "Beneficiary"}],
        ),
        _record("d2", "s1", ["e", "to", "f"], [{"index": 1, "lemma": "to", "label": "Goal"}]),
    ]
    path = tmp_path / "c.jsonl"
    write_jsonl(path, records)
    corpus = ingest_corpus(path, LABELED, SNACS)
    assert len(corpus) == 3
    assert corpus.documents == {"d1": 6, "d2": 3}


def test_ingest_labeled_rejects_missing_gold(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [_record("d1", "s1", ["a", "in"], [{"index": 1, "lemma": "in"}])])
    with pytest.raises(ValidationError, match="line 1"):
        ingest_corpus(path, LABELED, SNACS)


def test_ingest_reports_unknown_label_with_line(tmp_path):
    path = tmp_path / "c.jsonl"
    records = [
        _record("d1", "s1", ["a", "in"], [{"index": 1, "lemma": "in", "label": "Locus"}]),
        _record("d1", "s2", ["a", "in"], [{"index": 1, "lemma": "in", "label": "Locas"}]),
    ]
    write_jsonl(path, records)
    with pytest.raises(InventoryError, match="line 2.*Locas"):
        ingest_corpus(path, LABELED, SNACS)


def test_ingest_rejects_duplicate_instance_ids(tmp_path):
    path = tmp_path / "c.jsonl"
    records = [
        _record(
            "d1",
            "s1",
            ["in", "in"],
            [
                {"index": 0, "lemma": "in", "label": "Locus"},
                {"index": 0, "lemma": "in", "label": "Goal"},
            ],
        )
    ]
    write_jsonl(path, records)
    with pytest.raises(ValidationError, match="duplicate instance_id"):
        ingest_corpus(path, LABELED, SNACS)


def test_ingest_rejects_malformed_json_with_line_number(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"doc_id": "d1"}\nnot json\n', encoding="utf-8")
    with pytest.raises(FormatError, match="line 2"):
        ingest_corpus(path, LABELED, SNACS)


def test_ingest_rejects_bad_target_index(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(
        path, [_record("d1", "s1", ["a"], [{"index": 5, "lemma": "in", "label": "Locus"}])]
    )
    with pytest.raises(ValidationError, match="line 1"):
        ingest_corpus(path, LABELED, SNACS)


def test_ingest_rejects_uppercase_lemma(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(
        path, [_record("d1", "s1", ["In", "a"], [{"index": 0, "lemma": "In", "label": "Locus"}])]
    )
    with pytest.raises(ValidationError, match="lowercase"):
        ingest_corpus(path, LABELED, SNACS)


def pilot_style_records():
    """Five prepositions x 30 instances across a handful of documents."""
    records = []
    labels = ["Locus", "Goal", "Means", "Manner", "Topic", "Time"]
    for p, lemma in enumerate(synth.LEMMAS):
        for i in range(30):
            doc = f"doc{(p * 30 + i) % 7}"
            records.append(
                _record(
                    doc,
                    f"p{p}s{i}",
                    ["x", lemma, "y", "z"],
                    [{"index": 1, "lemma": lemma, "label": labels[(p + i) % len(labels)]}],
                )
            )
    return records


def test_ingest_pilot_sized_export_yields_150_instances(tmp_path):
    path = tmp_path / "pilot.jsonl"
    write_jsonl(path, pilot_style_records())
    corpus = ingest_corpus(path, LABELED, SNACS)
    assert len(corpus) == 150
    assert len(instances_of_preposition(corpus, "in")) == 30


def test_instances_of_preposition_absent_and_order(tmp_path):
    path = tmp_path / "pilot.jsonl"
    write_jsonl(path, pilot_style_records())
    corpus = ingest_corpus(path, LABELED, SNACS)
    assert instances_of_preposition(corpus, "beside") == []
    got = instances_of_preposition(corpus, "for")
    assert [i.instance_id for i in got] == sorted(i.instance_id for i in got)


def test_roundtrip_ingest_then_serialize(tmp_path):
    records = pilot_style_records()
    path = tmp_path / "pilot.jsonl"
    write_jsonl(path, records)
    corpus = ingest_corpus(path, LABELED, SNACS)
    out = corpus_records(corpus)
    normalize = lambda rs: sorted(json.dumps(r, sort_keys=True) for r in rs)
    assert normalize(out) == normalize(records)
    # and a second ingest of the serialized form is identical again
    path2 = tmp_path / "again.jsonl"
    write_corpus(corpus, path2)
    corpus2 = ingest_corpus(path2, LABELED, SNACS)
    assert corpus_records(corpus2) == out


def test_token_counts_match_total_tokens(tmp_path):
    records = pilot_style_records()
    path = tmp_path / "pilot.jsonl"
    write_jsonl(path, records)
    corpus = ingest_corpus(path, LABELED, SNACS)
    assert sum(corpus.documents.values()) == sum(len(r["tokens"]) for r in records)


def test_unlabeled_corpus_may_carry_evaluation_gold(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(
        path,
        [
            _record("d1", "s1", ["a", "in"], [{"index": 1, "lemma": "in", "label": "Locus"}]),
            _record("d1", "s2", ["a", "in"], [{"index": 1, "lemma": "in"}]),
        ],
    )
    corpus = ingest_corpus(path, UNLABELED, SNACS)
    golds = [i.gold for i in corpus.instances]
    assert golds[0] == SupersenseLabel("Locus", "Locus") and golds[1] is None


def test_duplicate_sentence_record_rejected(tmp_path):
    path = tmp_path / "c.jsonl"
    records = [
        _record("d1", "s1", ["a", "in"], [{"index": 1, "lemma": "in", "label": "Locus"}]),
        _record("d1", "s1", ["b", "in"], [{"index": 0, "lemma": "b", "label": "Goal"}]),
    ]
    write_jsonl(path, records)
    with pytest.raises(ValidationError, match="duplicate sentence"):
        ingest_corpus(path, LABELED, SNACS)


# ------------------------------------------------------------------ rendering


def test_marked_text_single_token():
    inst = Instance("d:s:3", "d", "s", ("The", "book", "is", "by", "the", "lamp"), 3, "by")
    assert marked_text(inst) == "The book is <by> the lamp"


def test_marked_text_multiword_target():
    inst = Instance(
        "d:s:3", "d", "s", ("The", "book", "is", "close", "to", "the", "lamp"), 3, "close to"
    )
    assert marked_text(inst) == "The book is <close to> the lamp"


def test_labeled_corpus_requires_gold_everywhere():
    inst = synth.make_instance(gold=None)
    with pytest.raises(ValidationError):
        synth.build_corpus([inst], LABELED)
