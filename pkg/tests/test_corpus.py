import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reviewguard.corpus import (
    Corpus,
    CorpusError,
    Label,
    ReviewRecord,
    Source,
    export_jsonl,
    import_jsonl,
    import_ott,
)


def make_ott_tree(root, layout):
    for rel, text in layout.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def test_import_ott_applies_manifest(tmp_path):
    make_ott_tree(tmp_path, {
        "deceptive/d1.txt": "fake review one",
        "deceptive/d2.txt": "fake review two",
        "truthful/t1.txt": "honest review",
    })
    corpus = import_ott(tmp_path)
    assert len(corpus) == 3
    counts = corpus.label_counts()
    assert counts == {"spam": 2, "ham": 1, "unlabeled": 0}
    assert [r.id for r in corpus] == ["deceptive/d1.txt", "deceptive/d2.txt", "truthful/t1.txt"]
    assert all(r.source is Source.OTT for r in corpus)


def test_import_ott_empty_directory(tmp_path):
    assert len(import_ott(tmp_path)) == 0


def test_import_ott_unmatched_file(tmp_path, caplog):
    make_ott_tree(tmp_path, {"other/x.txt": "mystery", "truthful/t.txt": "fine"})
    with pytest.raises(CorpusError):
        import_ott(tmp_path, strict=True)
    with caplog.at_level("WARNING"):
        corpus = import_ott(tmp_path, strict=False)
    assert len(corpus) == 1
    assert len(caplog.records) == 1


def test_import_ott_deterministic_order(tmp_path):
    make_ott_tree(tmp_path, {
        "truthful/b.txt": "b", "deceptive/a.txt": "a", "deceptive/z.txt": "z",
    })
    first = import_ott(tmp_path)
    second = import_ott(tmp_path)
    assert [r.id for r in first] == [r.id for r in second]


def write_jsonl(path, objs):
    path.write_text("\n".join(json.dumps(o) for o in objs) + "\n", encoding="utf-8")


def test_import_jsonl_limit_and_labels(tmp_path):
    path = tmp_path / "yelp.jsonl"
    write_jsonl(path, [{"text": f"review {i}"} for i in range(10)])
    corpus = import_jsonl(path, limit=4)
    assert len(corpus) == 4
    assert all(r.label is None for r in corpus)
    assert len(import_jsonl(path, limit=0)) == 0


def test_import_jsonl_skips_malformed(tmp_path, caplog):
    path = tmp_path / "mixed.jsonl"
    path.write_text(
        json.dumps({"text": "good line"}) + "\n"
        + "{not json\n"
        + json.dumps({"body": "no text field"}) + "\n"
        + json.dumps({"text": "another good line"}) + "\n",
        encoding="utf-8",
    )
    with caplog.at_level("WARNING"):
        corpus = import_jsonl(path)
    assert len(corpus) == 2
    assert len(caplog.records) == 2
    with pytest.raises(CorpusError):
        import_jsonl(path, strict=True)


def test_import_jsonl_missing_text_field_counts_one_warning(tmp_path, caplog):
    path = tmp_path / "f.jsonl"
    write_jsonl(path, [{"text": "a"}, {"nope": "b"}, {"text": "c"}])
    with caplog.at_level("WARNING"):
        corpus = import_jsonl(path)
    assert len(corpus) == 2
    assert len(caplog.records) == 1


def test_import_jsonl_custom_fields(tmp_path):
    path = tmp_path / "foreign.jsonl"
    write_jsonl(path, [{"body": "nice place", "verdict": "ham"},
                       {"body": "buy now", "verdict": "spam"}])
    corpus = import_jsonl(path, text_field="body", label_field="verdict")
    assert [r.label for r in corpus] == [Label.HAM, Label.SPAM]


def test_export_requires_labels_when_asked(tmp_path):
    corpus = Corpus("c", [ReviewRecord(id="1", text="hello")])
    with pytest.raises(CorpusError):
        export_jsonl(corpus, tmp_path / "out.jsonl", require_labels=True)
    assert export_jsonl(corpus, tmp_path / "out.jsonl") == 1


def test_export_empty_corpus(tmp_path):
    out = tmp_path / "empty.jsonl"
    assert export_jsonl(Corpus("empty", []), out) == 0
    assert out.read_text() == ""


def test_duplicate_ids_rejected():
    with pytest.raises(CorpusError):
        Corpus("dup", [ReviewRecord(id="x", text="a"), ReviewRecord(id="x", text="b")])


record_ids = st.uuids().map(str)
texts = st.text(min_size=1).filter(lambda t: t.strip())
labels = st.sampled_from([None, Label.SPAM, Label.HAM])
metas = st.one_of(st.none(), st.dictionaries(st.text(min_size=1, max_size=8), st.text(max_size=8), max_size=3))


@st.composite
def corpora(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    records = []
    for i in range(n):
        records.append(ReviewRecord(
            id=f"r{i}-{draw(record_ids)}",
            text=draw(texts),
            label=draw(labels),
            source=draw(st.sampled_from(list(Source))),
            meta=draw(metas),
        ))
    return Corpus("random", records)


@settings(max_examples=50, deadline=None)
@given(corpora())
def test_jsonl_round_trip(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    export_jsonl(corpus, path)
    back = import_jsonl(path)
    assert back.records == corpus.records
