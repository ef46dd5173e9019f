"""Gradient-boosted decision trees with logistic loss, built from scratch.

Each boosting round fits a depth-limited regression tree to the gradient and
curvature of the logistic loss (Newton-style leaf values with an L2 leaf
penalty).  Split search is exhaustive and deterministic: features are
enumerated in schema order, candidate thresholds are midpoints between sorted
distinct values, and missing values are routed to whichever side gains more
(the learned default direction).

Trees are plain node lists (dicts) so a fitted model serializes to JSON
without a separate export step.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import ValidationError
from .validation import check_binary_labels, check_matrix

_PROB_EPS = 1e-15


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _best_split(X, g, h, rows, reg_lambda, min_samples_leaf):
    """Exhaustive split search over all features for one node.

    Returns (gain, feature, threshold, missing_left) or None.  Gains compare
    with strict >, so the first feature / first threshold wins ties and the
    search is deterministic.
    """
    g_node = g[rows]
    h_node = h[rows]
    G = g_node.sum()
    H = h_node.sum()
    parent_score = G * G / (H + reg_lambda)
    best = None

    for feature in range(X.shape[1]):
        x = X[rows, feature]
        missing = np.isnan(x)
        present = ~missing
        n_present = int(present.sum())
        if n_present < 2:
            continue
        xv = x[present]
        order = np.argsort(xv, kind="mergesort")
        xs = xv[order]
        gs = g_node[present][order]
        hs = h_node[present][order]

        boundaries = xs[1:] > xs[:-1]
        if not boundaries.any():
            continue

        gl = np.cumsum(gs)[:-1]
        hl = np.cumsum(hs)[:-1]
        counts_left = np.arange(1, n_present)
        g_present = gs.sum()
        h_present = hs.sum()
        g_miss = G - g_present
        h_miss = H - h_present
        n_miss = int(missing.sum())
        thresholds = (xs[:-1] + xs[1:]) / 2.0

        for missing_left in (True, False):
            if missing_left:
                gl_c = gl + g_miss
                hl_c = hl + h_miss
                nl = counts_left + n_miss
            else:
                gl_c = gl
                hl_c = hl
                nl = counts_left
            gr_c = G - gl_c
            hr_c = H - hl_c
            nr = (n_present + n_miss) - nl
            valid = boundaries & (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
            if not valid.any():
                if n_miss == 0:
                    break
                continue
            gain = 0.5 * (
                gl_c * gl_c / (hl_c + reg_lambda)
                + gr_c * gr_c / (hr_c + reg_lambda)
                - parent_score
            )
            gain = np.where(valid, gain, -np.inf)
            k = int(np.argmax(gain))
            if best is None or gain[k] > best[0]:
                best = (float(gain[k]), feature, float(thresholds[k]), missing_left)
            if n_miss == 0:
                break  # both routings are identical without missing values
    return best


def _grow_tree(X, g, h, rows, out, max_depth, reg_lambda, min_samples_leaf, feature_gains):
    """Grow one regression tree; returns the node list and fills ``out[rows]``."""
    nodes: list[dict] = []

    def grow(rows, depth):
        node_id = len(nodes)
        nodes.append({})
        split = None
        if depth < max_depth and len(rows) >= 2 * min_samples_leaf:
            split = _best_split(X, g, h, rows, reg_lambda, min_samples_leaf)
        # A zero-gain split is kept only while the children can still split:
        # perfectly-cancelling structure (e.g. XOR) shows no first-level gain.
        acceptable = split is not None and (
            split[0] > 0.0 or (split[0] == 0.0 and depth + 1 < max_depth)
        )
        if not acceptable:
            value = -g[rows].sum() / (h[rows].sum() + reg_lambda)
            nodes[node_id] = {"value": float(value)}
            out[rows] = value
            return node_id
        gain, feature, threshold, missing_left = split
        feature_gains[feature] += gain
        x = X[rows, feature]
        go_left = x <= threshold
        if missing_left:
            go_left |= np.isnan(x)
        left = grow(rows[go_left], depth + 1)
        right = grow(rows[~go_left], depth + 1)
        nodes[node_id] = {
            "feature": int(feature),
            "threshold": float(threshold),
            "missing_left": bool(missing_left),
            "gain": float(gain),
            "left": left,
            "right": right,
        }
        return node_id

    grow(rows, 0)
    return nodes


def eval_tree(nodes: list[dict], X: np.ndarray) -> np.ndarray:
    """Evaluate one serialized tree on a matrix."""
    n_nodes = len(nodes)
    feature = np.zeros(n_nodes, dtype=np.int64)
    threshold = np.zeros(n_nodes, dtype=np.float64)
    missing_left = np.zeros(n_nodes, dtype=bool)
    left = np.zeros(n_nodes, dtype=np.int64)
    right = np.zeros(n_nodes, dtype=np.int64)
    value = np.zeros(n_nodes, dtype=np.float64)
    is_leaf = np.zeros(n_nodes, dtype=bool)
    for i, node in enumerate(nodes):
        if "value" in node:
            is_leaf[i] = True
            value[i] = node["value"]
        else:
            feature[i] = node["feature"]
            threshold[i] = node["threshold"]
            missing_left[i] = node["missing_left"]
            left[i] = node["left"]
            right[i] = node["right"]

    current = np.zeros(len(X), dtype=np.int64)
    while True:
        active = ~is_leaf[current]
        if not active.any():
            break
        rows = np.flatnonzero(active)
        node_ids = current[rows]
        x = X[rows, feature[node_ids]]
        go_left = (x <= threshold[node_ids]) | (np.isnan(x) & missing_left[node_ids])
        current[rows] = np.where(go_left, left[node_ids], right[node_ids])
    return value[current]


def eval_ensemble(base_score: float, learning_rate: float, trees: list[list[dict]], X: np.ndarray) -> np.ndarray:
    """Raw additive score of a serialized ensemble."""
    score = np.full(len(X), base_score, dtype=np.float64)
    for nodes in trees:
        score += learning_rate * eval_tree(nodes, X)
    return score


class GradientBoostedTrees(BaseEstimator, ClassifierMixin):
    """Binary classifier: boosted regression trees on the logistic loss.

    NaN entries in X are treated as missing and routed by the per-split
    default direction learned during training.  Training is deterministic:
    ``random_state`` is recorded for provenance but the algorithm itself has
    no stochastic steps.
    """

    def __init__(
        self,
        n_rounds: int = 200,
        max_depth: int = 4,
        learning_rate: float = 0.1,
        reg_lambda: float = 1.0,
        min_samples_leaf: int = 5,
        random_state: int = 0,
    ):
        self.n_rounds = n_rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.reg_lambda = reg_lambda
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y):
        X = check_matrix(X, allow_nan=True)
        y = check_binary_labels(y, len(X), require_both=True)
        if self.n_rounds < 0:
            raise ValidationError("n_rounds must be non-negative")

        base_rate = float(y.mean())
        self.base_score_ = float(np.log(base_rate / (1.0 - base_rate)))
        score = np.full(len(X), self.base_score_, dtype=np.float64)
        rows = np.arange(len(X))
        feature_gains = np.zeros(X.shape[1], dtype=np.float64)

        self.trees_ = []
        self.train_losses_ = [log_loss(y, sigmoid(score))]
        tree_out = np.empty(len(X), dtype=np.float64)
        for _ in range(self.n_rounds):
            p = sigmoid(score)
            g = p - y
            h = p * (1.0 - p)
            nodes = _grow_tree(
                X, g, h, rows, tree_out,
                self.max_depth, self.reg_lambda, self.min_samples_leaf,
                feature_gains,
            )
            self.trees_.append(nodes)
            score += self.learning_rate * tree_out
            self.train_losses_.append(log_loss(y, sigmoid(score)))

        self.feature_gains_ = feature_gains
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "trees_"):
            raise NotFittedError("this GradientBoostedTrees instance is not fitted yet")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X, allow_nan=True)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return eval_ensemble(self.base_score_, self.learning_rate, self.trees_, X)

    def predict_proba(self, X) -> np.ndarray:
        p = np.clip(sigmoid(self.decision_function(X)), _PROB_EPS, 1.0 - _PROB_EPS)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
