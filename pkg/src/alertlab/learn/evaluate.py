"""Model evaluation: overall, per-CWE, and per-CERT-rule breakdowns plus the
speculative-threshold sweep.

Metric cells that are undefined for a group (no predicted positives, no actual
positives, single-class labels) are reported absent, never zero.  CERT rules
relate to CWEs many-to-many, so one alert may be counted under several rules.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..features import FeatureVector
from .encoding import GBT_KIND, LASSO_KIND
from .metrics import accuracy, auroc, binarize, precision, recall
from .model_io import TrainedModel, predict_batch, train
from .splits import DatasetBundle

DEFAULT_TOP_K = 10


@dataclass
class GroupMetrics:
    group: str
    test_count: int
    tp_rate: float
    auroc: float | None
    precision: float | None
    recall: float | None
    accuracy: float
    train_count: int | None = None


@dataclass
class EvalReport:
    overall: GroupMetrics
    per_cwe: list[GroupMetrics]
    per_cert_rule: list[GroupMetrics]
    feature_importance: list[tuple[str, float]]


@dataclass
class SweepRow:
    threshold: float | None  # None marks the non-speculative baseline
    direction: str | None
    n_train: int
    n_cwes_in_train: int
    auroc: float | None
    precision: float | None
    recall: float | None
    accuracy: float


def _group_metrics(group: str, probs: np.ndarray, labels: np.ndarray, threshold: float,
                   train_count: int | None = None) -> GroupMetrics:
    predicted = binarize(probs, threshold)
    return GroupMetrics(
        group=group,
        test_count=len(labels),
        tp_rate=float((labels == 1).mean()) if len(labels) else 0.0,
        auroc=auroc(probs, labels),
        precision=precision(predicted, labels),
        recall=recall(predicted, labels),
        accuracy=accuracy(predicted, labels),
        train_count=train_count,
    )


def evaluate(
    model: TrainedModel,
    test_features: list[FeatureVector],
    train_cwe_counts: dict[int, int] | None = None,
    cert_map: dict[str, set[int]] | None = None,
    threshold: float = 0.5,
    top_k: int = DEFAULT_TOP_K,
) -> EvalReport:
    """Evaluate a trained model on a test set, with per-group breakdowns.

    ``train_cwe_counts`` joins per-CWE training representation into the
    per-CWE rows; ``cert_map`` (rule -> CWE set) adds the per-rule table for
    every rule with at least one test data point.
    """
    if not test_features:
        raise ValidationError("cannot evaluate on an empty test set")
    probs = predict_batch(model, test_features)
    labels = np.array([v.label for v in test_features])

    overall = _group_metrics("overall", probs, labels, threshold)

    per_cwe = []
    for cwe in sorted({v.cwe for v in test_features}):
        rows = np.array([i for i, v in enumerate(test_features) if v.cwe == cwe])
        per_cwe.append(
            _group_metrics(
                str(cwe), probs[rows], labels[rows], threshold,
                train_count=(train_cwe_counts or {}).get(cwe, 0) if train_cwe_counts is not None else None,
            )
        )

    per_cert_rule = []
    for rule in sorted(cert_map or {}):
        cwes = cert_map[rule]
        rows = np.array([i for i, v in enumerate(test_features) if v.cwe in cwes])
        if len(rows) == 0:
            continue
        per_cert_rule.append(_group_metrics(rule, probs[rows], labels[rows], threshold))

    importance = feature_importance(model, top_k=top_k, linear_weights=model.kind == LASSO_KIND)
    return EvalReport(
        overall=overall,
        per_cwe=per_cwe,
        per_cert_rule=per_cert_rule,
        feature_importance=importance,
    )


def feature_importance(
    model: TrainedModel, top_k: int = DEFAULT_TOP_K, linear_weights: bool = False
) -> list[tuple[str, float]]:
    """Split-gain ranking for the tree model.

    The linear model has no splits; pass ``linear_weights=True`` to get an
    |weight| ranking instead of an error.
    """
    columns = model.feature_schema.columns
    if model.kind == GBT_KIND:
        gains = {}
        for tree in model.parameters["trees"]:
            for node in tree:
                if "feature" in node:
                    name = columns[node["feature"]]
                    gains[name] = gains.get(name, 0.0) + node["gain"]
        ranked = sorted(gains.items(), key=lambda item: (-item[1], item[0]))
        return [(name, gain) for name, gain in ranked if gain > 0][:top_k]
    if not linear_weights:
        raise ValidationError(
            "split-gain importance is only defined for the gbt kind; "
            "pass linear_weights=True for an |weight| ranking"
        )
    weights = model.parameters["weights"]
    ranked = sorted(zip(columns, map(abs, weights)), key=lambda item: (-item[1], item[0]))
    return [(name, weight) for name, weight in ranked if weight > 0][:top_k]


def sweep(
    bundle: DatasetBundle,
    features: list[FeatureVector],
    kind: str = GBT_KIND,
    hyperparameters: dict | None = None,
    seed: int = 0,
    threshold: float = 0.5,
) -> list[SweepRow]:
    """Retrain one model per training configuration and score each on AF_test.

    Emits the non-speculative baseline row first, then one row per
    (threshold, direction) in fixed order.  Any training failure aborts the
    sweep, naming the failing configuration.
    """
    by_id = {v.fused_id: v for v in features}
    missing_test = sorted(bundle.af_test - set(by_id))
    if missing_test:
        raise ValidationError(f"no feature vectors for test fused alerts {missing_test[:5]}")
    test_features = [by_id[fid] for fid in sorted(bundle.af_test)]
    test_labels = np.array([v.label for v in test_features])

    configs: list[tuple[float | None, str | None, frozenset[int]]] = [
        (None, None, bundle.af_non_speculative)
    ]
    for (t, d) in sorted(bundle.af_speculative, key=lambda key: (key[1], key[0])):
        configs.append((t, d, bundle.af_speculative[(t, d)]))

    rows = []
    for t, d, train_ids in configs:
        overlap = train_ids & bundle.af_test
        if overlap:
            raise ValidationError(f"training set for ({t}, {d}) overlaps AF_test: {sorted(overlap)[:5]}")
        train_features = [by_id[fid] for fid in sorted(train_ids) if fid in by_id]
        label = "baseline" if t is None else f"threshold={t:g}, direction={d}"
        try:
            model = train(train_features, kind=kind, hyperparameters=hyperparameters, seed=seed)
        except Exception as exc:
            raise ValidationError(f"sweep training failed for {label}: {exc}") from exc
        probs = predict_batch(model, test_features)
        predicted = binarize(probs, threshold)
        rows.append(
            SweepRow(
                threshold=t,
                direction=d,
                n_train=len(train_features),
                n_cwes_in_train=len({v.cwe for v in train_features}),
                auroc=auroc(probs, test_labels),
                precision=precision(predicted, test_labels),
                recall=recall(predicted, test_labels),
                accuracy=accuracy(predicted, test_labels),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _metrics_row(m: GroupMetrics, with_train_count: bool = False) -> list[str]:
    row = [m.group, str(m.test_count)]
    if with_train_count:
        row.append("" if m.train_count is None else str(m.train_count))
    row += [_cell(m.tp_rate), _cell(m.auroc), _cell(m.precision), _cell(m.recall), _cell(m.accuracy)]
    return row


def report_to_csvs(report: EvalReport) -> dict[str, str]:
    """Render an EvalReport as the stable CSV table set."""
    tables = {}

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["group", "test_count", "tp_rate", "auroc", "precision", "recall", "accuracy"])
    writer.writerow(_metrics_row(report.overall))
    tables["overall.csv"] = out.getvalue()

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["cwe", "test_count", "train_count", "tp_rate", "auroc", "precision", "recall", "accuracy"])
    for m in report.per_cwe:
        writer.writerow(_metrics_row(m, with_train_count=True))
    tables["per_cwe.csv"] = out.getvalue()

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["cert_rule", "test_count", "tp_rate", "auroc", "precision", "recall", "accuracy"])
    for m in report.per_cert_rule:
        writer.writerow(_metrics_row(m))
    tables["per_cert_rule.csv"] = out.getvalue()

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["feature", "total_gain"])
    for name, gain in report.feature_importance:
        writer.writerow([name, repr(float(gain))])
    tables["importance.csv"] = out.getvalue()

    return tables


def sweep_to_csv(rows: list[SweepRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["threshold", "direction", "n_train", "n_cwes_in_train", "auroc", "precision", "recall", "accuracy"]
    )
    for row in rows:
        writer.writerow(
            [
                "none" if row.threshold is None else repr(float(row.threshold)),
                row.direction or "none",
                row.n_train,
                row.n_cwes_in_train,
                _cell(row.auroc),
                _cell(row.precision),
                _cell(row.recall),
                _cell(row.accuracy),
            ]
        )
    return out.getvalue()


def load_cert_map_csv(document: str) -> dict[str, set[int]]:
    """Load the many-to-many CERT-rule-to-CWE table (columns cert_rule, cwe)."""
    mapping: dict[str, set[int]] = {}
    reader = csv.DictReader(io.StringIO(document))
    for lineno, row in enumerate(reader, start=2):
        try:
            mapping.setdefault(row["cert_rule"], set()).add(int(row["cwe"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"CERT map CSV row {lineno}: {exc}") from exc
    return mapping
