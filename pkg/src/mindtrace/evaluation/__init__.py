"""Scores for self-state classification, presence, change detection and summaries."""

from mindtrace.evaluation.change import LabelScores, Task2Report, task2_report
from mindtrace.evaluation.classification import (
    ConfusionCounts,
    Task1ClassificationReport,
    prf1,
    task1_classification_report,
)
from mindtrace.evaluation.presence import (
    PresenceMetrics,
    Task1PresenceReport,
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
from mindtrace.evaluation.stats import (
    CorrelationResult,
    correlation,
    kfold_split,
    load_task1_rankings,
)
from mindtrace.evaluation.summary import (
    RankedSystem,
    Task31Report,
    lcs_length,
    load_task31_rankings,
    rank_average,
    rouge_l_recall,
    task31_report,
)
