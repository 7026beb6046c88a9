import json

import pytest

from mindtrace.llm.pipelines import PipelineException
from mindtrace.miner.dynamics import (
    BundlePost,
    DynamicSignature,
    MinerConfig,
    MinerException,
    SequenceBundle,
    batch_sequences,
    bundles_from_timelines,
    classify_trajectory,
    extract_batch_patterns,
    format_bundle,
    group_by_direction,
    mine_signatures,
    select_exemplars,
    synthesize_signature,
)
from mindtrace.summarizer.template import DETERIORATION, IMPROVEMENT
from utils import label, make_post, make_timeline

CONFIG = MinerConfig(batch_size=2, word_limit=20, min_exemplars=2, max_exemplars=3)


def _bundle(sequence_id: str, wellbeing: list[int | None], text: str = "some text") -> SequenceBundle:
    return SequenceBundle(
        sequence_id,
        tuple(BundlePost(i, text, wellbeing=w) for i, w in enumerate(wellbeing)),
    )


def _bundles() -> list[SequenceBundle]:
    return [
        _bundle("i1", [2, 4, 6]),
        _bundle("d1", [6, 4, 2]),
        _bundle("i2", [3, 3, 7], "unrelated words entirely"),
        _bundle("d2", [7, 3, 3]),
        _bundle("i3", [1, 2, 5], "improvement signature shows"),
        _bundle("d3", [5, 5, 1]),
    ]


def _responder(prompt: str) -> str:
    if "Identify the recurring ABCD dynamics" in prompt:
        return '{"patterns": ["withdrawal reinforces sadness", " joy buffers distress "]}'
    if "Synthesize the cross-batch patterns" in prompt:
        direction = IMPROVEMENT if "signature of improvement" in prompt else DETERIORATION
        return json.dumps({"signature": f"Signature   for {direction}.", "exemplar_ids": ["i1", "d1", "unknown"]})
    return "unexpected prompt"


def test_miner_config():
    invalid = [
        {"batch_size": 0},
        {"word_limit": 0},
        {"min_exemplars": 0},
        {"min_exemplars": 4, "max_exemplars": 3},
    ]
    for kwargs in invalid:
        with pytest.raises(MinerException):
            MinerConfig(**kwargs)


def test_bundles_from_timelines():
    timeline = make_timeline(
        "t",
        make_post("a", 0, "first", 3, ["A-:sadness", "C-S-:hopelessness"], 1, 4),
        make_post("b", 1, "second"),
    )

    bundle = bundles_from_timelines([timeline], {"t": "A  short\nsummary."})[0]

    assert bundle.sequence_id == "t"
    assert bundle.posts[0].labels == frozenset({label("A-:sadness"), label("C-S-:hopelessness")})
    assert bundle.posts[1].labels == frozenset()
    assert bundle.wellbeing == [3, None]
    assert bundle.text() == "first second A  short\nsummary."

    assert format_bundle(bundle) == "\n".join(
        [
            "Sequence t:",
            "[0] labels: A-:sadness, C-S-:hopelessness | presence A/M: 1/4 | wellbeing: 3",
            "[1] labels: none | presence A/M: -/- | wellbeing: -",
            "Summary: A short summary.",
        ]
    )
    # post texts are never part of a batch block
    assert "first" not in format_bundle(bundle)

    with pytest.raises(MinerException):
        SequenceBundle("empty", ())


def test_classify_trajectory():
    data = [
        ([2, 4, 6], IMPROVEMENT),
        ([6, 4, 2], DETERIORATION),
        ([4, 4, 5, 4, 4, 5], IMPROVEMENT),
        ([5, 5, 4, 5, 5, 4], DETERIORATION),
        ([5, 5], DETERIORATION),
        ([None, None], DETERIORATION),
    ]
    for wellbeing, expected in data:
        assert classify_trajectory(_bundle("x", wellbeing)) == expected


def test_batch_sequences():
    bundles = _bundles()[:5]

    batches = batch_sequences(bundles, 2)
    assert [len(b) for b in batches] == [2, 2, 1]
    assert [b.sequence_id for batch in batches for b in batch] == [b.sequence_id for b in bundles]
    assert batch_sequences([], 3) == []

    with pytest.raises(MinerException):
        batch_sequences(bundles, 0)


def test_group_by_direction():
    groups = group_by_direction(_bundles())

    assert [b.sequence_id for b in groups[IMPROVEMENT]] == ["i1", "i2", "i3"]
    assert [b.sequence_id for b in groups[DETERIORATION]] == ["d1", "d2", "d3"]

    with pytest.raises(MinerException):
        group_by_direction([_bundle("x", [1, 2]), _bundle("x", [2, 1])])


def test_select_exemplars():
    bundles = [b for b in _bundles() if b.sequence_id.startswith("i")]

    assert select_exemplars(["i2", "zzz", "i2", 5, "i1", "i3"], bundles, "text", CONFIG) == ("i2", "i1", "i3")
    assert select_exemplars(["i3", "i2", "i1"], bundles, "text", MinerConfig(min_exemplars=1, max_exemplars=2)) == (
        "i3",
        "i2",
    )

    # padding by token overlap with the signature
    assert select_exemplars(["i1"], bundles, "The improvement signature", CONFIG) == ("i1", "i3")
    # ties are broken by id
    assert select_exemplars([], bundles, "nothing in common", CONFIG) == ("i1", "i2")

    with pytest.raises(MinerException):
        select_exemplars([], bundles[:1], "text", CONFIG)


@pytest.mark.mock_server
def test_extract_batch_patterns(server, client):
    server.responder = _responder

    text = extract_batch_patterns(_bundles()[:2], IMPROVEMENT, client)

    assert text == "withdrawal reinforces sadness\njoy buffers distress"
    prompt = server.prompts()[0]
    assert "Below are 2 post sequences whose well-being trajectory shows improvement" in prompt
    assert "Sequence i1:" in prompt and "Sequence d1:" in prompt
    assert "some text" not in prompt

    with pytest.raises(MinerException):
        extract_batch_patterns([], IMPROVEMENT, client)


@pytest.mark.mock_server
def test_extract_batch_patterns_failure(server, client):
    server.queue(*['{"patterns": []}'] * 4)

    with pytest.raises(PipelineException) as e:
        extract_batch_patterns(_bundles()[:2], DETERIORATION, client, batch_index=3)
    assert e.value.index == 3


@pytest.mark.mock_server
def test_mine_signatures(server, client):
    server.responder = _responder

    result = mine_signatures(_bundles(), client, CONFIG, jobs=2)

    # two stage-1 batches per direction, one stage-2 request each
    assert server.calls == 4 + 2
    assert set(result.signatures) == {IMPROVEMENT, DETERIORATION}
    assert len(result.audit[IMPROVEMENT]) == 2
    assert len(result.audit[DETERIORATION]) == 2

    improvement = result.signatures[IMPROVEMENT]
    assert improvement == DynamicSignature(IMPROVEMENT, "Signature for improvement.", ("i1", "i3"))
    deterioration = result.signatures[DETERIORATION]
    assert deterioration.exemplar_ids[0] == "d1"
    assert len(deterioration.exemplar_ids) == 2

    data = result.to_dict()
    assert data["signatures"][IMPROVEMENT] == {"signature": "Signature for improvement.", "exemplars": ["i1", "i3"]}
    assert data["audit"][DETERIORATION][0] == "withdrawal reinforces sadness\njoy buffers distress"

    # stage 2 sees the stage-1 outputs, not the sequences
    signature_prompts = [p for p in server.prompts() if "Synthesize the cross-batch patterns" in p]
    assert len(signature_prompts) == 2
    assert all("Sequence i1:" not in p for p in signature_prompts)
    assert all("--- Batch 2 ---" in p for p in signature_prompts)


@pytest.mark.mock_server
def test_mine_signatures_single_direction(server, client):
    server.responder = _responder
    bundles = [b for b in _bundles() if b.sequence_id.startswith("d")]

    result = mine_signatures(bundles, client, CONFIG)

    assert list(result.signatures) == [DETERIORATION]
    assert IMPROVEMENT not in result.audit


@pytest.mark.mock_server
def test_mine_signatures_short_direction(server, client):
    server.responder = _responder
    bundles = [_bundle(f"d{i}", [6, 4, 2]) for i in range(1, 7)] + [_bundle("i1", [2, 4, 6])]

    result = mine_signatures(bundles, client, CONFIG)

    # three deterioration batches and its signature, nothing for the lone improvement
    assert server.calls == 3 + 1
    assert list(result.signatures) == [DETERIORATION]
    assert IMPROVEMENT not in result.audit
    assert all("Sequence i1:" not in p for p in server.prompts())

    deterioration = result.signatures[DETERIORATION]
    assert deterioration.text == "Signature for deterioration."
    assert deterioration.exemplar_ids[0] == "d1"
    assert len(deterioration.exemplar_ids) >= CONFIG.min_exemplars


@pytest.mark.mock_server
def test_synthesize_signature_compress(server, client):
    bundles = [b for b in _bundles() if b.sequence_id.startswith("d")]
    config = MinerConfig(word_limit=5, min_exemplars=2, max_exemplars=3)
    server.queue(
        json.dumps({"signature": "one two three four five six seven eight", "exemplar_ids": ["d2", "d3"]}),
        json.dumps({"signature": "One two three. Four five six seven", "exemplar_ids": []}),
    )

    signature = synthesize_signature(["pattern"], DETERIORATION, bundles, client, config)

    assert server.calls == 2
    assert "has 8 words" in server.prompts()[1]
    assert signature.text == "One two three."
    assert signature.exemplar_ids == ("d2", "d3")


@pytest.mark.mock_server
def test_synthesize_signature_errors(server, client):
    bundles = [b for b in _bundles() if b.sequence_id.startswith("d")]

    with pytest.raises(MinerException):
        synthesize_signature([], DETERIORATION, bundles, client, CONFIG)
    with pytest.raises(MinerException):
        synthesize_signature(["pattern"], DETERIORATION, bundles[:1], client, CONFIG)
    assert server.calls == 0

    server.queue((500, "error"))
    with pytest.raises(PipelineException):
        synthesize_signature(["pattern"], DETERIORATION, bundles, client, CONFIG)
