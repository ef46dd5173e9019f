"""Turning feature vectors into numeric matrices, per model kind.

The tree model consumes integer-coded categoricals (with the category lists
pinned in the schema) and raw NaN for missing metrics; the linear model gets
one-hot categoricals plus an explicit missing flag per metric, with the
mean-imputation happening at train time so both kinds read the same vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from ..features import FeatureVector

GBT_KIND = "gbt"
LASSO_KIND = "lasso-logit"
KINDS = (GBT_KIND, LASSO_KIND)

_NO_VARIANT = "none"


@dataclass
class FeatureSchema:
    """Ordered numeric-column layout a trained model is bound to."""

    kind: str
    columns: list[str]
    tools: list[str]
    metric_names: list[str]
    cwe_categories: list[int]
    variant_categories: list[str]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "columns": self.columns,
            "tools": self.tools,
            "metric_names": self.metric_names,
            "cwe_categories": self.cwe_categories,
            "variant_categories": self.variant_categories,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        return cls(
            kind=data["kind"],
            columns=list(data["columns"]),
            tools=list(data["tools"]),
            metric_names=list(data["metric_names"]),
            cwe_categories=list(data["cwe_categories"]),
            variant_categories=list(data["variant_categories"]),
        )


def _variant_token(variant_id: str | None) -> str:
    return variant_id if variant_id else _NO_VARIANT


def build_schema(vectors: list[FeatureVector], kind: str) -> FeatureSchema:
    if kind not in KINDS:
        raise SchemaError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    tools = sorted({t for v in vectors for t in v.tool_flags})
    metric_names = sorted({m for v in vectors for m in v.metrics})
    cwe_categories = sorted({v.cwe for v in vectors})
    variant_categories = sorted({_variant_token(v.variant_id) for v in vectors})

    if kind == GBT_KIND:
        columns = ["cwe", "variant", "n_tools"] + [f"tool.{t}" for t in tools] + metric_names
    else:
        columns = (
            [f"cwe={c}" for c in cwe_categories]
            + [f"variant={v}" for v in variant_categories]
            + ["n_tools"]
            + [f"tool.{t}" for t in tools]
            + metric_names
            + [f"miss.{m}" for m in metric_names]
        )
    return FeatureSchema(
        kind=kind,
        columns=columns,
        tools=tools,
        metric_names=metric_names,
        cwe_categories=cwe_categories,
        variant_categories=variant_categories,
    )


def _check_conforms(vector: FeatureVector, schema: FeatureSchema) -> None:
    have = set(vector.metrics)
    want = set(schema.metric_names)
    if have != want:
        missing = sorted(want - have)
        extra = sorted(have - want)
        raise SchemaError(
            f"feature vector {vector.fused_id} does not conform to the model schema: "
            f"missing features {missing}, extra features {extra}"
        )


def encode(vectors: list[FeatureVector], schema: FeatureSchema) -> tuple[np.ndarray, np.ndarray]:
    """Encode vectors against a schema; missing metrics become NaN.

    Categorical values unseen at training time encode as -1 (tree kind) or
    all-zero indicators (linear kind).
    """
    cwe_code = {c: i for i, c in enumerate(schema.cwe_categories)}
    variant_code = {v: i for i, v in enumerate(schema.variant_categories)}
    n, d = len(vectors), len(schema.columns)
    X = np.zeros((n, d), dtype=np.float64)
    y = np.zeros(n, dtype=np.float64)

    for i, v in enumerate(vectors):
        _check_conforms(v, schema)
        y[i] = v.label
        col = 0
        if schema.kind == GBT_KIND:
            X[i, 0] = cwe_code.get(v.cwe, -1)
            X[i, 1] = variant_code.get(_variant_token(v.variant_id), -1)
            X[i, 2] = v.n_tools
            col = 3
            for t in schema.tools:
                X[i, col] = 1.0 if v.tool_flags.get(t) else 0.0
                col += 1
            for m in schema.metric_names:
                value = v.metrics.get(m)
                X[i, col] = np.nan if value is None else value
                col += 1
        else:
            code = cwe_code.get(v.cwe)
            if code is not None:
                X[i, code] = 1.0
            col = len(schema.cwe_categories)
            code = variant_code.get(_variant_token(v.variant_id))
            if code is not None:
                X[i, col + code] = 1.0
            col += len(schema.variant_categories)
            X[i, col] = v.n_tools
            col += 1
            for t in schema.tools:
                X[i, col] = 1.0 if v.tool_flags.get(t) else 0.0
                col += 1
            for m in schema.metric_names:
                value = v.metrics.get(m)
                X[i, col] = np.nan if value is None else value
                col += 1
            for m in schema.metric_names:
                X[i, col] = 1.0 if v.missing_flags.get(m, v.metrics.get(m) is None) else 0.0
                col += 1
    return X, y
