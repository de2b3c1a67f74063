from .automaton import Action, AutomatonState, Event, apply_transition, ta_action
from .clause import ClassBank, Clause, Mode, Polarity, evaluate_clause, literal_value
from .config import TMConfig
from .feedback import (
    FeedbackRng,
    FeedbackStats,
    FeedbackType,
    clause_update_probability,
    type_i_feedback,
    type_ii_feedback,
)
from .machine import MultiClassTM, classify, export_vote_sums
from .metrics import metrics
from .pool import (
    ExamplePool,
    delta_pass,
    record_output_and_tally,
    refresh_tallies,
    vote_sum,
)
from .regression import RegressionHead, predict_many, predict_regress, update_regress
from .trainer import (
    EpochReport,
    fit,
    train_epoch_parallel,
    train_epoch_sequential,
    update_clause,
)

__all__ = [
    "Action",
    "AutomatonState",
    "ClassBank",
    "Clause",
    "EpochReport",
    "Event",
    "ExamplePool",
    "FeedbackRng",
    "FeedbackStats",
    "FeedbackType",
    "Mode",
    "MultiClassTM",
    "Polarity",
    "RegressionHead",
    "TMConfig",
    "apply_transition",
    "classify",
    "clause_update_probability",
    "delta_pass",
    "evaluate_clause",
    "export_vote_sums",
    "fit",
    "literal_value",
    "metrics",
    "predict_many",
    "predict_regress",
    "record_output_and_tally",
    "refresh_tallies",
    "ta_action",
    "train_epoch_parallel",
    "train_epoch_sequential",
    "type_i_feedback",
    "type_ii_feedback",
    "update_clause",
    "update_regress",
    "vote_sum",
]
__version__ = "0.1.0"
