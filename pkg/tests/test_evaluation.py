import json
import math
import random

import pytest

import oracles
from mindtrace.evaluation.change import task2_report
from mindtrace.evaluation.classification import ConfusionCounts, prf1, task1_classification_report
from mindtrace.evaluation.presence import (
    presence_metrics,
    quadratic_weighted_kappa,
    spearman_rho,
    task1_presence_report,
)
from mindtrace.evaluation.report import (
    EvaluationException,
    annotation_predictions,
    change_predictions,
    read_records,
    render_report_text,
    summary_texts,
)
from mindtrace.evaluation.stats import PEARSON, SPEARMAN, correlation, kfold_split, load_task1_rankings
from mindtrace.evaluation.summary import (
    TASK31_HIGHER_IS_BETTER,
    competition_ranks,
    lcs_length,
    load_task31_rankings,
    rank_average,
    rouge_l_recall,
    task31_report,
)
from mindtrace.model.schema import ADAPTIVE, MALADAPTIVE, Label
from mindtrace.model.timeline import ChangeLabel, PostAnnotation
from utils import label, make_post, make_timeline, write_json


def test_prf1_matches_reference():
    rng = random.Random(3)
    for _ in range(50):
        tp, fp, fn = rng.randint(0, 5), rng.randint(0, 5), rng.randint(0, 5)
        assert prf1(ConfusionCounts(tp, fp, fn)) == pytest.approx(oracles.prf1(tp, fp, fn))

    assert prf1(ConfusionCounts()) == (0.0, 0.0, 0.0)
    assert ConfusionCounts.pooled([(True, True), (True, False), (False, True), (False, False)]) == ConfusionCounts(1, 1, 1)

    with pytest.raises(EvaluationException):
        ConfusionCounts(-1, 0, 0)


def _classification_timeline():
    return make_timeline(
        "t",
        make_post("p0", 0, "zero", labels=["A-:sadness", "C-S-:hopelessness"]),
        make_post("p1", 1, "one", labels=["A+:joy"]),
        make_post("p2", 2, "two", adaptive=3),
        make_post("p3", 3, "three", labels=["B-O-:withdrawal"]),
    )


def _classification_predictions():
    return {
        ("t", "p0"): frozenset({label("A-:sadness")}),
        ("t", "p1"): PostAnnotation(frozenset({label("A+:joy"), label("A-:anxiety")})),
        ("t", "p3"): frozenset(),
    }


def test_task1_classification_report():
    report = task1_classification_report(_classification_predictions(), [_classification_timeline()])

    # the post without gold labels isn't scored, nor does it need a prediction
    assert report.n_posts == 3

    assert report.element_f1[MALADAPTIVE]["A"] == pytest.approx(2 / 3)
    assert report.element_f1[MALADAPTIVE]["C-S"] == 0.0
    assert report.element_f1[MALADAPTIVE]["B-O"] == 0.0
    assert report.element_f1[ADAPTIVE]["A"] == 1.0
    assert report.element_f1[ADAPTIVE]["D"] == 0.0

    assert report.maladaptive_macro_f1 == pytest.approx(1 / 9)
    assert report.adaptive_macro_f1 == pytest.approx(1 / 6)
    assert report.final == pytest.approx(5 / 36)

    assert report.subelement_f1 == pytest.approx({"A": 2 / 3, "B-O": 0.0, "C-S": 0.0})
    assert report.subelement_macro_f1 == pytest.approx(2 / 9)
    assert report.subelement_pooled_macro_f1 == pytest.approx(0.4)

    data = report.to_dict()
    assert data["final"] == report.final
    assert data["element_f1"][ADAPTIVE]["A"] == 1.0


def test_task1_classification_report_errors():
    predictions = _classification_predictions()
    del predictions[("t", "p0")]
    with pytest.raises(EvaluationException, match="t/p0"):
        task1_classification_report(predictions, [_classification_timeline()])

    predictions = _classification_predictions()
    predictions[("t", "p3")] = frozenset({Label("A", ADAPTIVE, "hopelessness")})
    with pytest.raises(EvaluationException):
        task1_classification_report(predictions, [_classification_timeline()])


def test_presence_metrics():
    pred = [1, 2, 3, 4, 5, 3]
    gold = [1, 3, 3, 5, 4, 2]

    metrics = presence_metrics(pred, gold)

    assert metrics.n == 6
    assert metrics.mae == pytest.approx(4 / 6)
    assert metrics.rmse == pytest.approx(math.sqrt(4 / 6))
    assert metrics.qwk == pytest.approx(oracles.qwk(pred, gold))
    assert metrics.spearman == pytest.approx(oracles.spearman(pred, gold))


def test_presence_metrics_matches_reference():
    rng = random.Random(11)
    for _ in range(20):
        gold = [rng.randint(1, 5) for _ in range(15)]
        pred = [rng.randint(1, 5) for _ in range(15)]
        if len(set(gold)) < 2 or len(set(pred)) < 2:
            continue
        assert quadratic_weighted_kappa(pred, gold) == pytest.approx(oracles.qwk(pred, gold))
        assert spearman_rho(pred, gold) == pytest.approx(oracles.spearman(pred, gold))


def test_presence_metrics_edges():
    identical = presence_metrics([3, 3, 3], [3, 3, 3])
    assert identical.qwk == 1.0
    assert identical.spearman == 1.0
    assert identical.rmse == 0.0

    assert spearman_rho([3, 3, 3], [1, 2, 3]) == 0.0
    assert spearman_rho([2], [4]) == 0.0

    invalid = [
        ([1, 2], [1]),
        ([], []),
        ([6], [1]),
        ([1], [0]),
    ]
    for pred, gold in invalid:
        with pytest.raises(EvaluationException):
            presence_metrics(pred, gold)


def test_task1_presence_report():
    timeline = make_timeline(
        "t",
        make_post("p0", 0, adaptive=1, maladaptive=4),
        make_post("p1", 1, adaptive=4, maladaptive=1),
        make_post("p2", 2, adaptive=2),
        make_post("p3", 3, "no gold"),
    )
    predictions = {
        ("t", "p0"): PostAnnotation(adaptive_presence=2, maladaptive_presence=4),
        ("t", "p1"): PostAnnotation(adaptive_presence=4, maladaptive_presence=3),
        ("t", "p2"): PostAnnotation(adaptive_presence=2),
    }

    report = task1_presence_report(predictions, [timeline])

    assert report.adaptive.n == 3
    assert report.adaptive.rmse == pytest.approx(math.sqrt(1 / 3))
    assert report.maladaptive.n == 2
    assert report.maladaptive.rmse == pytest.approx(math.sqrt(2))
    assert report.combined.n == 5
    assert report.ranking_score == pytest.approx((math.sqrt(1 / 3) + math.sqrt(2)) / 2)
    assert set(report.to_dict()) == {ADAPTIVE, MALADAPTIVE, "combined", "ranking_score"}

    predictions[("t", "p1")] = PostAnnotation(adaptive_presence=4)
    with pytest.raises(EvaluationException, match="t/p1"):
        task1_presence_report(predictions, [timeline])


def _change_timelines():
    return [
        make_timeline(
            "a",
            make_post("a0", 0),
            make_post("a1", 1, switch=True, escalation=False),
            make_post("a2", 2, switch=False, escalation=True),
            make_post("a3", 3, switch=True, escalation=True),
        ),
        make_timeline("b", make_post("b0", 0), make_post("b1", 1, switch=False, escalation=False)),
    ]


def _change_predictions():
    return {
        ("a", "a0"): ChangeLabel(False, False),
        ("a", "a1"): ChangeLabel(True, False),
        ("a", "a2"): ChangeLabel(True, False),
        ("a", "a3"): ChangeLabel(False, True),
        ("b", "b0"): ChangeLabel(False, False),
        ("b", "b1"): ChangeLabel(True, False),
    }


def test_task2_report():
    report = task2_report(_change_predictions(), _change_timelines())

    switch = report.post_level["switch"]
    assert (switch.precision, switch.recall) == pytest.approx((1 / 3, 1 / 2))
    assert switch.f1 == pytest.approx(0.4)
    assert report.post_level["escalation"].f1 == pytest.approx(2 / 3)

    assert report.timeline_level["switch"] == pytest.approx(0.25)
    assert report.timeline_level["escalation"] == pytest.approx(1 / 3)

    assert report.post_macro_f1 == pytest.approx((0.4 + 2 / 3) / 2)
    assert report.timeline_macro_f1 == pytest.approx((0.25 + 1 / 3) / 2)
    assert report.final == pytest.approx((report.post_macro_f1 + report.timeline_macro_f1) / 2)

    data = report.to_dict()
    assert data["post_level"]["switch"]["f1"] == pytest.approx(0.4)


def test_task2_report_matches_reference():
    timelines = _change_timelines()
    predictions = _change_predictions()
    report = task2_report(predictions, timelines)

    for name in ("switch", "escalation"):
        pairs = [
            (
                getattr(predictions[(t.timeline_id, p.post_id)], name),
                p.gold_change is not None and getattr(p.gold_change, name),
            )
            for t in timelines
            for p in t.posts
        ]
        assert report.post_level[name].f1 == pytest.approx(oracles.change_f1(pairs))


def test_task2_report_missing():
    predictions = _change_predictions()
    del predictions[("b", "b0")]

    with pytest.raises(EvaluationException, match="b/b0"):
        task2_report(predictions, _change_timelines())


def test_lcs_matches_reference():
    rng = random.Random(5)
    for _ in range(30):
        first = [rng.choice("abcd") for _ in range(rng.randint(0, 9))]
        second = [rng.choice("abcd") for _ in range(rng.randint(0, 9))]
        assert lcs_length(first, second) == oracles.lcs(first, second)


def test_rouge_l_recall():
    assert rouge_l_recall("a b c d", "a c e") == pytest.approx(2 / 3)
    assert rouge_l_recall("", "a b") == 0.0
    assert rouge_l_recall("x  y\nz", "x y z") == 1.0

    with pytest.raises(EvaluationException):
        rouge_l_recall("a b", "   ")


def test_task31_report():
    report = task31_report({"s1": "a b c", "s2": "nothing", "extra": "x"}, {"s2": "a b", "s1": "a c"})

    assert report.per_sequence == {"s1": 1.0, "s2": 0.0}
    assert list(report.per_sequence) == ["s1", "s2"]
    assert report.mean_rouge_l_recall == 0.5

    with pytest.raises(EvaluationException, match="s2"):
        task31_report({"s1": "a"}, {"s1": "a", "s2": "b"})
    with pytest.raises(EvaluationException):
        task31_report({}, {})


def test_competition_ranks():
    assert competition_ranks([0.3, 0.5, 0.5, 0.1]) == [3, 1, 1, 4]
    assert competition_ranks([0.3, 0.5, 0.5, 0.1], higher_is_better=False) == [2, 3, 3, 1]
    assert competition_ranks([]) == []


def test_rank_average_official_ranks():
    rows = load_task31_rankings()
    assert len(rows) == 13

    names = [f"{row.team} ({row.submission_id})" for row in rows]
    ranked = {s.name: s for s in rank_average({n: row.ranks for n, row in zip(names, rows)}, [False] * 4)}

    for name, row in zip(names, rows):
        assert ranked[name].average_rank == pytest.approx(row.average_rank)
        assert ranked[name].final_rank == row.rank

    dreamer = ranked["DreamerNLplus (693964)"]
    assert dreamer.metric_ranks == (7, 7, 4, 3)
    assert dreamer.average_rank == 5.25
    assert dreamer.final_rank == 2
    assert ranked["USAI (693912)"].final_rank == ranked["Aurevia (693454)"].final_rank == 5
    assert ranked["MERONYM_LABS (694229)"].final_rank == 1


def test_rank_average_from_scores():
    rows = load_task31_rankings()
    ranked = rank_average({row.team: row.scores for row in rows}, TASK31_HIGHER_IS_BETTER)

    # the shared BERTScore puts both leaders on rank 3 for that metric
    by_name = {s.name: s for s in ranked}
    assert by_name["MERONYM_LABS"].metric_ranks == (3, 3, 6, 3)
    assert by_name["DreamerNLplus"].metric_ranks == (7, 7, 4, 3)
    # lower coherence transition scores rank first
    assert by_name["psytechlab"].metric_ranks[1] == 1

    # sorted by final rank, ties by name
    assert [s.final_rank for s in ranked] == sorted(s.final_rank for s in ranked)
    tied = [s.name for s in ranked if s.final_rank == by_name["JNLP"].final_rank]
    assert tied == sorted(tied)
    assert ranked[0].to_dict()["name"] == "MERONYM_LABS"


def test_rank_average_errors():
    assert rank_average({}, [True]) == []

    with pytest.raises(EvaluationException):
        rank_average({"a": [1.0, 2.0], "b": [1.0]}, [True, True])


def test_correlation_rankings():
    rows = load_task1_rankings()
    assert len(rows) == 34

    xs, ys = [row.macro_f1 for row in rows], [row.rmse for row in rows]
    pearson = correlation(xs, ys)

    assert pearson.method == PEARSON
    assert pearson.n == 34
    assert pearson.r == pytest.approx(-0.486, abs=0.005)
    assert 0.002 < pearson.p < 0.006
    assert pearson.r == pytest.approx(oracles.pearson(xs, ys))

    spearman = correlation(xs, ys, SPEARMAN)
    assert spearman.r == pytest.approx(oracles.spearman(xs, ys))
    assert spearman.to_dict()["method"] == SPEARMAN


def test_correlation_errors():
    invalid = [
        ([1.0, 2.0, 3.0], [1.0, 2.0], PEARSON),
        ([1.0, 2.0], [2.0, 1.0], PEARSON),
        ([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], PEARSON),
        ([1.0, 2.0, 3.0], [3.0, 3.0, 3.0], SPEARMAN),
        ([1.0, 2.0, 3.0], [3.0, 1.0, 2.0], "kendall"),
    ]
    for xs, ys, method in invalid:
        with pytest.raises(EvaluationException):
            correlation(xs, ys, method)


def test_kfold_split():
    ids = [f"t{i}" for i in range(10)]

    folds = kfold_split(ids, 3, seed=1)

    assert [len(f) for f in folds] == [4, 3, 3]
    assert sorted(i for fold in folds for i in fold) == sorted(ids)
    assert kfold_split(ids, 3, seed=1) == folds
    assert [len(f) for f in kfold_split(ids, 10)] == [1] * 10

    invalid = [(ids, 1), (ids, 11), (["a", "a", "b"], 2)]
    for values, k in invalid:
        with pytest.raises(EvaluationException):
            kfold_split(values, k)


def test_read_records(tmp_path):
    records = [{"timeline_id": "t", "post_id": "p"}]

    assert read_records(write_json(tmp_path / "list.json", records)) == records
    assert read_records(write_json(tmp_path / "dict.json", {"header": {}, "records": records})) == records

    invalid = ["not json", json.dumps({"rows": []}), json.dumps([1, 2])]
    for i, content in enumerate(invalid):
        path = tmp_path / f"invalid{i}.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(EvaluationException):
            read_records(path)


def test_annotation_predictions():
    records = [
        {
            "timeline_id": "t",
            "post_id": "p0",
            "labels": [{"element": "A", "valence": "maladaptive", "subelement": "sadness"}],
            "adaptive_presence": 2,
            "maladaptive_presence": 4,
        },
        {"timeline_id": "t", "post_id": "p1"},
    ]

    predictions = annotation_predictions(records)

    assert predictions[("t", "p0")] == PostAnnotation(frozenset({label("A-:sadness")}), 2, 4)
    assert predictions[("t", "p1")] == PostAnnotation()

    invalid = [
        [records[1], records[1]],
        [{"timeline_id": "t"}],
        [{"timeline_id": "t", "post_id": "p", "labels": [{"element": "A"}]}],
        [{"timeline_id": "t", "post_id": "p", "labels": [{"element": "Z", "valence": "adaptive", "subelement": "joy"}]}],
        [{"timeline_id": "t", "post_id": "p", "adaptive_presence": 9}],
    ]
    for case in invalid:
        with pytest.raises(EvaluationException):
            annotation_predictions(case)


def test_change_predictions():
    predictions = change_predictions([{"timeline_id": "t", "post_id": "p", "switch": True, "escalation": False}])
    assert predictions == {("t", "p"): ChangeLabel(True, False)}

    invalid = [
        [{"timeline_id": "t", "post_id": "p", "switch": 1, "escalation": False}],
        [{"timeline_id": "t", "post_id": "p", "switch": True}],
        [{"post_id": "p", "switch": True, "escalation": True}],
    ]
    for case in invalid:
        with pytest.raises(EvaluationException):
            change_predictions(case)


def test_summary_texts():
    assert summary_texts([{"timeline_id": "a", "summary": "x"}, {"timeline_id": "b", "text": "y"}]) == {
        "a": "x",
        "b": "y",
    }

    invalid = [
        [{"timeline_id": "a"}],
        [{"timeline_id": "a", "summary": "x"}, {"timeline_id": "a", "summary": "y"}],
    ]
    for case in invalid:
        with pytest.raises(EvaluationException):
            summary_texts(case)


def test_render_report_text():
    report = {"final": 0.5, "post_level": {"switch": {"f1": 1 / 3}}, "names": ["a", "b"], "n": 3}

    text = render_report_text(report, {"command": "evaluate", "seed": 0})

    assert text.splitlines() == [
        "# command: evaluate",
        "# seed: 0",
        "# note: precision, recall and F1 with a zero denominator are 0",
        "",
        "final                 0.5000",
        "post_level.switch.f1  0.3333",
        "names                 a, b",
        "n                     3",
    ]
    assert render_report_text({}) == "\n"
