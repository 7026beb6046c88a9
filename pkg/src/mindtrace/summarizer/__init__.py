"""Deterministic template summaries of self-state dynamics."""

from mindtrace.summarizer.template import (
    DETERIORATION,
    DIRECTIONS,
    ESCALATION,
    FLUCTUATION,
    IMPROVEMENT,
    SWITCH,
    StructuredSummary,
    SummarizerConfig,
    SummarizerException,
    SummaryInputs,
    SummaryParts,
    compute_dominance,
    derive_direction,
    derive_transition,
    render_summary,
    summarize_template,
    summary_inputs,
    wellbeing_delta,
)
