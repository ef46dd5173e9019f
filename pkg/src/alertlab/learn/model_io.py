"""Training entry points and the versioned JSON model format."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError, ValidationError
from ..features import FeatureVector
from .boosting import GradientBoostedTrees, eval_ensemble, sigmoid
from .encoding import GBT_KIND, KINDS, LASSO_KIND, FeatureSchema, build_schema, encode
from .lasso import LassoLogit

SCHEMA_VERSION = 1
_PROB_EPS = 1e-15

DEFAULT_GBT_PARAMS = {
    "n_rounds": 200,
    "max_depth": 4,
    "learning_rate": 0.1,
    "reg_lambda": 1.0,
    "min_samples_leaf": 5,
}
DEFAULT_LASSO_PARAMS = {
    "penalty": 0.01,
    "max_sweeps": 10_000,
    "tol": 1e-7,
    "standardize": True,
}


@dataclass
class TrainedModel:
    kind: str
    feature_schema: FeatureSchema
    parameters: dict
    training_config: dict


def train(
    features: list[FeatureVector],
    kind: str = GBT_KIND,
    hyperparameters: dict | None = None,
    seed: int = 0,
) -> TrainedModel:
    """Fit a classifier of the requested kind on labeled feature vectors."""
    if kind not in KINDS:
        raise ValidationError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if not features:
        raise ValidationError("cannot train on an empty feature set")

    schema = build_schema(features, kind)
    X, y = encode(features, schema)

    if kind == GBT_KIND:
        hp = {**DEFAULT_GBT_PARAMS, **(hyperparameters or {})}
        est = GradientBoostedTrees(**hp, random_state=seed).fit(X, y)
        parameters = {
            "base_score": est.base_score_,
            "learning_rate": hp["learning_rate"],
            "trees": est.trees_,
            "train_losses": est.train_losses_,
        }
    else:
        hp = {**DEFAULT_LASSO_PARAMS, **(hyperparameters or {})}
        means = _imputation_means(X, schema)
        X = _impute(X, means, schema)
        if not np.isfinite(X).all():
            raise ValidationError("non-finite feature values remain after imputation")
        est = LassoLogit(**hp).fit(X, y)
        parameters = {
            "weights": [float(w) for w in est.coef_],
            "intercept": est.intercept_,
            "impute_means": {name: float(value) for name, value in means.items()},
            "kkt_violation": est.kkt_violation_,
            "n_sweeps": est.n_sweeps_,
        }

    return TrainedModel(
        kind=kind,
        feature_schema=schema,
        parameters=parameters,
        training_config={"hyperparameters": hp, "seed": seed},
    )


def _imputation_means(X: np.ndarray, schema: FeatureSchema) -> dict[str, float]:
    """Column means of the metric columns, ignoring NaN (0.0 for all-NaN)."""
    means = {}
    for name in schema.metric_names:
        col = schema.columns.index(name)
        values = X[:, col]
        present = ~np.isnan(values)
        means[name] = float(values[present].mean()) if present.any() else 0.0
    return means


def _impute(X: np.ndarray, means: dict[str, float], schema: FeatureSchema) -> np.ndarray:
    X = X.copy()
    for name, value in means.items():
        col = schema.columns.index(name)
        mask = np.isnan(X[:, col])
        X[mask, col] = value
    return X


def predict_batch(model: TrainedModel, features: list[FeatureVector]) -> np.ndarray:
    """Probability that each alert is a true positive, per the trained model."""
    X, _ = encode(features, model.feature_schema)
    if model.kind == GBT_KIND:
        scores = eval_ensemble(
            model.parameters["base_score"],
            model.parameters["learning_rate"],
            model.parameters["trees"],
            X,
        )
    else:
        X = _impute(X, model.parameters["impute_means"], model.feature_schema)
        weights = np.asarray(model.parameters["weights"], dtype=np.float64)
        scores = X @ weights + model.parameters["intercept"]
    return np.clip(sigmoid(scores), _PROB_EPS, 1.0 - _PROB_EPS)


def predict(model: TrainedModel, feature_vector: FeatureVector) -> float:
    return float(predict_batch(model, [feature_vector])[0])


def model_to_json(model: TrainedModel) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": model.kind,
        "feature_schema": model.feature_schema.to_dict(),
        "parameters": model.parameters,
        "training_config": model.training_config,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def model_from_json(document: str) -> TrainedModel:
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed model JSON: {exc.msg}") from exc
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"model schema_version {version!r} does not match supported version {SCHEMA_VERSION}")
    return TrainedModel(
        kind=payload["kind"],
        feature_schema=FeatureSchema.from_dict(payload["feature_schema"]),
        parameters=payload["parameters"],
        training_config=payload["training_config"],
    )
