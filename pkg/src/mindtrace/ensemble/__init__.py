"""Tree ensembles for presence regression and change classification."""

from mindtrace.ensemble.change import (
    ChangeModel,
    detect_changes_tree,
    train_change_classifier,
    train_change_models,
)
from mindtrace.ensemble.forest import (
    ForestModel,
    TrainingConfig,
    canonical_rows,
    load_model,
    pos_weight,
    save_model,
    train_forest,
)
from mindtrace.ensemble.presence import (
    PresenceModels,
    one_hot_encode,
    predict_annotations,
    predict_presence,
    presence_rows,
    train_presence_models,
    train_presence_regressor,
)
from mindtrace.ensemble.tree import BINARY, REGRESSION, DecisionTree, EnsembleException, fit_tree
