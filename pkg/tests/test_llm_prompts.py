import pytest

from mindtrace.llm.prompts import (
    CHANGE_CATEGORIES,
    FewShotBank,
    FewShotExample,
    FewShotSelector,
    PromptException,
    SummaryExample,
    build_augmentation_prompt,
    build_batch_patterns_prompt,
    build_change_prompt,
    build_compress_prompt,
    build_signature_prompt,
    build_summary_prompt,
    default_fewshot_bank,
    format_sequence_lines,
    load_fewshot_bank,
    load_summary_examples,
    system_prompt,
)
from mindtrace.llm.templater import TemplateOverrides, Templater
from mindtrace.llm.validation import ChangeResponse
from mindtrace.model.timeline import ChangeLabel
from utils import label, make_post, make_timeline, plain_timeline

BANK_YAML = """
- category: {category}
  context: {context}
  current: "current text"
  answer: {{switch: {switch}, escalation: false, justification: "why"}}
"""


def _bank_yaml(first_context: str = "[]", first_switch: str = "false", skip: str = "") -> str:
    entries = []
    for category in CHANGE_CATEGORIES:
        if category == skip:
            continue
        first = category == "first_post"
        entries.append(
            BANK_YAML.format(
                category=category,
                context=first_context if first else '["earlier post"]',
                switch=first_switch if first else "true",
            )
        )
    return "".join(entries)


def test_default_fewshot_bank():
    bank = default_fewshot_bank()

    assert [e.category for e in bank.ordered()] == list(CHANGE_CATEGORIES)
    assert bank.by_category("first_post").context == ()
    assert bank.by_category("both").response.switch
    assert bank.by_category("both").response.escalation
    assert default_fewshot_bank() is bank

    with pytest.raises(KeyError):
        bank.by_category("unknown")


def test_load_fewshot_bank(tmp_path):
    path = tmp_path / "bank.yaml"

    path.write_text(_bank_yaml(), encoding="utf-8")
    bank = load_fewshot_bank(path)
    assert bank.by_category("neither").context == ("earlier post",)
    assert bank.by_category("neither").answer == '{"switch": true, "escalation": false, "justification": "why"}'

    invalid = [
        _bank_yaml(skip="both"),
        _bank_yaml(first_context='["a post before the first"]'),
        _bank_yaml(first_switch="true"),
        _bank_yaml() + BANK_YAML.format(category="neither", context="[]", switch="false"),
        "- category: neither\n",
        "- [unclosed\n",
    ]
    for content in invalid:
        path.write_text(content, encoding="utf-8")
        with pytest.raises(PromptException):
            load_fewshot_bank(path)


def test_summary_examples(tmp_path):
    examples = load_summary_examples()
    assert len(examples) >= 2
    assert all(e.sequence and e.summary for e in examples)

    path = tmp_path / "examples.yaml"
    path.write_text("- sequence: |\n    [0] hi\n  summary: fine\n", encoding="utf-8")
    assert load_summary_examples(path) == (SummaryExample("[0] hi", "fine"),)

    path.write_text("", encoding="utf-8")
    assert load_summary_examples(path) == ()

    path.write_text("- sequence: only\n", encoding="utf-8")
    with pytest.raises(PromptException):
        load_summary_examples(path)


def test_fewshot_selector():
    examples = [SummaryExample(f"s{i}", f"summary {i}") for i in range(5)]
    selector = FewShotSelector(examples, n_shots=2)

    assert [e.sequence for e in selector.select(0)] == ["s0", "s1"]
    assert [e.sequence for e in selector.select(1)] == ["s2", "s3"]
    assert [e.sequence for e in selector.select(2)] == ["s4", "s0"]
    # selection depends on the index only
    assert selector.select(7) == FewShotSelector(examples, 2).select(7)

    assert FewShotSelector(examples, 0).select(3) == []
    assert FewShotSelector([], 2).select(0) == []
    assert len(FewShotSelector(examples[:1], 3).select(4)) == 1

    with pytest.raises(PromptException):
        FewShotSelector(examples, -1)


def test_change_prompt():
    timeline = plain_timeline("t", [f"post number {i}" for i in range(7)])
    bank = default_fewshot_bank()

    prompt = build_change_prompt(timeline.posts[1:6], timeline.posts[6], bank)

    assert "Current post: post number 6" in prompt
    assert "[1] post number 1" in prompt
    assert "[5] post number 5" in prompt
    assert "post number 0" not in prompt
    for example in bank.ordered():
        assert example.answer in prompt
    assert prompt == build_change_prompt(timeline.posts[1:6], timeline.posts[6], bank)

    first = build_change_prompt((), timeline.posts[0], bank)
    assert "there is no preceding context for this post" in first

    with pytest.raises(PromptException):
        build_change_prompt(timeline.posts[0:6], timeline.posts[6], bank)


def test_change_prompt_override():
    templater = Templater(overrides=TemplateOverrides(change_prompt="{{ window | length }} before: {{ current.text }}"))
    timeline = plain_timeline("t", ["a", "b", "c"])

    prompt = build_change_prompt(timeline.posts[:2], timeline.posts[2], default_fewshot_bank(), templater)
    assert prompt == "2 before: c"


def test_system_prompt():
    assert system_prompt().startswith("You are a careful clinical annotation assistant")
    assert system_prompt(Templater(overrides=TemplateOverrides(system_prompt=""))) == ""


def test_augmentation_prompt():
    prompt = build_augmentation_prompt(
        label("C-S-:hopelessness"),
        "  Believing nothing will improve. ",
        ["nothing will ever change", "no point trying"],
        3,
    )

    assert "Cognition toward self (C-S), maladaptive, subelement \"hopelessness\"" in prompt
    assert "Definition: Believing nothing will improve." in prompt
    assert "- no point trying" in prompt
    assert "Write 3 new" in prompt

    invalid = [
        (" ", ["x"], 1),
        ("definition", [], 1),
        ("definition", ["x"], 0),
    ]
    for definition, evidence, n_new in invalid:
        with pytest.raises(PromptException):
            build_augmentation_prompt(label("A-:sadness"), definition, evidence, n_new)


def test_format_sequence_lines():
    timeline = make_timeline(
        "t",
        make_post("a", 0, "First   post\nwith breaks", 6, ["A-:sadness"], 2, 4),
        make_post("b", 1, "Second", 3, switch=True, escalation=True),
        make_post("c", 2, "Third", switch=False, escalation=True),
    )

    assert format_sequence_lines(timeline) == [
        "[0] (wellbeing 6) First post with breaks",
        "[1] (wellbeing 3) [SWITCH] [ESCALATION] Second",
        "[2] [ESCALATION] Third",
    ]

    predicted = [None, ChangeLabel(False, False), ChangeLabel(True, False)]
    assert format_sequence_lines(timeline, predicted) == [
        "[0] (wellbeing 6) First post with breaks",
        "[1] (wellbeing 3) Second",
        "[2] [SWITCH] Third",
    ]

    with pytest.raises(PromptException):
        format_sequence_lines(timeline, predicted[:2])


def test_summary_prompt():
    timeline = make_timeline(
        "t",
        make_post("a", 0, "Feeling hopeless", 2, ["C-S-:hopelessness"], 1, 5),
        make_post("b", 1, "A bit better", 4, switch=True),
    )
    examples = [SummaryExample("[0] example sequence", "example summary")]

    prompt = build_summary_prompt(timeline, examples)

    assert "[0] (wellbeing 2) Feeling hopeless" in prompt
    assert "[1] (wellbeing 4) [SWITCH] A bit better" in prompt
    assert "Summary: example summary" in prompt
    # gold labels never leak into the prompt
    assert "hopelessness" not in prompt

    assert "### Example" not in build_summary_prompt(timeline, [])


def test_miner_prompts():
    patterns = build_batch_patterns_prompt("improvement", ["block one", "block two"])
    assert "Below are 2 post sequences" in patterns
    assert "block two" in patterns

    signature = build_signature_prompt("deterioration", ["p1", "p2"], ["t1", "t2", "t3"], 120, 2, 3)
    assert "--- Batch 2 ---" in signature
    assert "candidate ids: t1, t2, t3" in signature
    assert "at most 120 words" in signature

    compress = build_compress_prompt("deterioration", "long text", ["t1", "t2"], 150, 120)
    assert "has 150 words" in compress
    assert '"exemplar_ids": ["t1", "t2"]' in compress


def test_fewshot_example_answer():
    example = FewShotExample("neither", (), "text", ChangeResponse(False, False, "stable ä"))
    assert example.answer == '{"switch": false, "escalation": false, "justification": "stable ä"}'

    with pytest.raises(PromptException):
        FewShotBank((example,))
