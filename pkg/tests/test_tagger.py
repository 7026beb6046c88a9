import json
import random

import numpy as np
import pytest

import oracles
from mindtrace.tagger.llr import TaggerException, expected_counts, llr_score, positively_associated
from mindtrace.tagger.signatures import (
    AUGMENTED,
    GOLD,
    LabeledCorpus,
    NgramSignatureSet,
    ScoredNgram,
    TaggerConfig,
    build_corpus,
    extract_signatures,
    load_signatures,
    ngrams_of,
    tag_post,
    tag_text,
)
from utils import ContingencyTable, annotated_timelines, label, make_post, make_timeline

SAD = label("A-:sadness")
JOY = label("A+:joy")


def _corpus() -> LabeledCorpus:
    return (
        LabeledCorpus()
        .with_texts(SAD, ["crying night lonely bed", "crying night tears"], GOLD)
        .with_texts(JOY, ["laughed friends sunny park", "laughed friends morning walk"], GOLD)
    )


def test_llr_matches_oracle():
    rng = random.Random(7)
    tables = [ContingencyTable(*(rng.randint(0, 50) for _ in range(4))) for _ in range(200)]

    for table in tables:
        if sum(table) == 0:
            continue
        assert llr_score(*table) == pytest.approx(oracles.g2(*table), rel=1e-9, abs=1e-9)


def test_llr_known_values():
    data = [
        (ContingencyTable(10, 20, 30, 60), 0.0),
        (ContingencyTable(2, 4, 3, 6), 0.0),
        (ContingencyTable(0, 0, 5, 5), 0.0),
        (ContingencyTable(1, 1, 1, 1), 0.0),
    ]

    for table, expected in data:
        assert llr_score(*table) == pytest.approx(expected, abs=1e-12)

    assert llr_score(5, 0, 0, 5) == pytest.approx(oracles.g2(5, 0, 0, 5))
    assert llr_score(5, 0, 0, 5) > 0


def test_llr_scaling():
    for table in [ContingencyTable(3, 1, 2, 9), ContingencyTable(10, 0, 4, 30), ContingencyTable(1, 7, 8, 2)]:
        base = llr_score(*table)
        for factor in (2, 3, 10):
            scaled = llr_score(*(factor * k for k in table))
            assert scaled == pytest.approx(factor * base, rel=1e-9)


def test_llr_errors():
    with pytest.raises(TaggerException):
        llr_score(0, 0, 0, 0)
    with pytest.raises(TaggerException):
        llr_score(-1, 2, 3, 4)


def test_expected_counts():
    expected = expected_counts(np.array([[10.0, 20.0], [30.0, 60.0]]))
    assert expected.tolist() == [[10.0, 20.0], [30.0, 60.0]]


def test_positive_association():
    assert positively_associated(5, 1, 10, 100)
    assert not positively_associated(1, 50, 100, 10)
    assert positively_associated(2, 4, 3, 6)


def test_tagger_config():
    assert TaggerConfig().k == 25
    assert TaggerConfig().orders == (2, 3)

    for kwargs in [{"k": 0}, {"min_match": 0}, {"orders": (4,)}, {"orders": ()}, {"orders": (1, 2)}]:
        with pytest.raises(TaggerException):
            TaggerConfig(**kwargs)


def test_ngrams_of():
    assert ngrams_of(("a", "b", "c"), (2, 3)) == [("a", "b"), ("b", "c"), ("a", "b", "c")]
    assert ngrams_of(("a",), (2, 3)) == []
    assert ngrams_of(("a", "b"), (3,)) == []


def test_labeled_corpus():
    corpus = LabeledCorpus().with_texts(SAD, ["one", "  ", "one", " two "], GOLD)
    corpus = corpus.with_texts(SAD, ["two", "three"], AUGMENTED)

    assert corpus.texts(SAD) == ["one", "two", "three"]
    assert corpus.size() == 3
    assert corpus.labels() == [SAD]
    assert [doc.source for doc in corpus.documents[SAD]] == [GOLD, GOLD, AUGMENTED]

    restored = LabeledCorpus.from_dict(json.loads(json.dumps(corpus.to_dict())))
    assert restored == corpus

    with pytest.raises(TaggerException):
        LabeledCorpus.from_dict({"A|adaptive|nonsense": [{"text": "x"}]})
    with pytest.raises(TaggerException):
        LabeledCorpus.from_dict({SAD.key(): [{"body": "x"}]})


def test_build_corpus():
    corpus = build_corpus(annotated_timelines())

    assert corpus.labels() == sorted(
        [label("A+:joy"), label("B-S+:self-care"), label("A-:sadness"), label("B-O-:withdrawal")]
    )
    assert corpus.texts(label("A-:sadness")) == ["crying all night"]
    assert corpus.texts(label("A+:joy")) == ["laughed with friends today"]

    timeline = make_timeline(
        "t",
        make_post("a", 0, "No evidence span here", labels=["C-S-:hopelessness"]),
        make_post("b", 1, "Unannotated post"),
    )
    corpus = build_corpus([timeline])
    assert corpus.texts(label("C-S-:hopelessness")) == ["No evidence span here"]
    assert corpus.size() == 1


def test_extract_signatures():
    signatures = extract_signatures(_corpus(), TaggerConfig(k=25))

    assert signatures.labels() == sorted([SAD, JOY])
    assert ("crying", "night") in signatures.ngrams(SAD)
    assert ("laughed", "friends") in signatures.ngrams(JOY)
    assert not set(signatures.ngrams(SAD)) & set(signatures.ngrams(JOY))

    for lbl in signatures.labels():
        scored = signatures.signatures[lbl]
        assert list(scored) == sorted(scored, key=lambda s: (-s.llr, s.ngram))
        assert all(s.llr >= 0 for s in scored)


def test_extract_signatures_scores():
    signatures = extract_signatures(_corpus(), TaggerConfig(k=25, orders=(2,)))

    # 5 sadness bigrams against 6 joy bigrams
    top = signatures.signatures[SAD][0]
    assert top.ngram == ("crying", "night")
    assert top.llr == pytest.approx(oracles.g2(2, 0, 3, 6))


def test_extract_signatures_top_k():
    signatures = extract_signatures(_corpus(), TaggerConfig(k=1, orders=(2,)))

    assert signatures.ngrams(SAD) == [("crying", "night")]
    assert signatures.ngrams(JOY) == [("laughed", "friends")]
    assert signatures.k == 1


def test_extract_signatures_omitted():
    corpus = _corpus().with_texts(label("D-:escape"), ["the and a", "I was"], GOLD)
    signatures = extract_signatures(corpus)

    assert signatures.omitted == (label("D-:escape"),)
    assert label("D-:escape") not in signatures.labels()

    with pytest.raises(TaggerException):
        extract_signatures(LabeledCorpus())


def test_tag_text():
    signatures = extract_signatures(_corpus())

    assert tag_text("I was crying at night and felt lonely", signatures) == frozenset({SAD})
    assert tag_text("We laughed with friends in the park", signatures) == frozenset({JOY})
    assert tag_text("Nothing relevant", signatures) == frozenset()
    assert tag_text("", signatures) == frozenset()

    strict = TaggerConfig(min_match=2)
    assert tag_text("I was crying at night and felt lonely", signatures, strict) == frozenset()
    assert tag_text("crying night lonely bed", signatures, strict) == frozenset({SAD})

    post = make_post("p", 0, "Laughed, friends! Then crying; night.")
    assert tag_post(post, signatures) == frozenset({SAD, JOY})


def test_tag_empty_signatures():
    with pytest.raises(TaggerException):
        tag_text("anything", NgramSignatureSet({}, 1))


def test_signature_file(tmp_path):
    signatures = extract_signatures(_corpus())
    path = tmp_path / "signatures.json"
    path.write_text(signatures.to_json(), encoding="utf-8")

    loaded = load_signatures(path)
    assert loaded.labels() == signatures.labels()
    for lbl in loaded.labels():
        assert loaded.ngrams(lbl) == signatures.ngrams(lbl)

    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(TaggerException):
        load_signatures(path)

    path.write_text("{broken", encoding="utf-8")
    with pytest.raises(TaggerException):
        load_signatures(path)

    path.write_text(json.dumps({SAD.key(): [{"ngram": ["a", "b"]}]}), encoding="utf-8")
    with pytest.raises(TaggerException):
        load_signatures(path)


def test_scored_ngram_dict():
    assert ScoredNgram(("a", "b"), 1.5).to_dict() == {"ngram": ["a", "b"], "llr": 1.5}
