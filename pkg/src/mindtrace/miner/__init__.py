"""Dynamic signatures of improvement and deterioration across many sequences."""

from mindtrace.miner.dynamics import (
    TRAJECTORIES,
    BundlePost,
    DynamicSignature,
    MinerConfig,
    MinerException,
    MiningResult,
    SequenceBundle,
    batch_sequences,
    bundle_from_timeline,
    bundles_from_timelines,
    classify_trajectory,
    extract_batch_patterns,
    format_bundle,
    mine_signatures,
    select_exemplars,
    synthesize_signature,
)
