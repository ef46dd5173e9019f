"""Classifier training, splits, evaluation, and the threshold sweep."""

from .boosting import GradientBoostedTrees
from .lasso import LassoLogit
from .metrics import accuracy, auroc, precision, recall
from .model_io import (
    GBT_KIND,
    LASSO_KIND,
    TrainedModel,
    model_from_json,
    model_to_json,
    predict,
    predict_batch,
    train,
)
from .splits import PAPER_THRESHOLDS, SPLIT_DIRECTIONS, DatasetBundle, SplitSpec, build_splits
from .evaluate import EvalReport, GroupMetrics, SweepRow, evaluate, feature_importance, load_cert_map_csv, sweep

__all__ = [
    "GradientBoostedTrees",
    "LassoLogit",
    "accuracy",
    "auroc",
    "precision",
    "recall",
    "GBT_KIND",
    "LASSO_KIND",
    "TrainedModel",
    "model_from_json",
    "model_to_json",
    "predict",
    "predict_batch",
    "train",
    "PAPER_THRESHOLDS",
    "SPLIT_DIRECTIONS",
    "DatasetBundle",
    "SplitSpec",
    "build_splits",
    "EvalReport",
    "GroupMetrics",
    "SweepRow",
    "evaluate",
    "feature_importance",
    "load_cert_map_csv",
    "sweep",
]
