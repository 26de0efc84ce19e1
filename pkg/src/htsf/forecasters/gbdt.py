"""Histogram-binned gradient-boosted trees with leaf-wise growth.

Features are discretized once into at most ``max_bins`` bins per feature;
split search then scans bin histograms of the Tweedie gradient and hessian
instead of raw values. Trees grow leaf-wise: the leaf with the best gain
anywhere in the tree splits next, until ``max_leaves`` is reached or no leaf
clears the gain floor. The raw score is additive on the log scale, so
predictions are ``exp(base_score + learning_rate * sum of tree outputs)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .. import kernels
from .tweedie import tweedie_grad_hess, tweedie_loss

GBDT_SCHEMA = "htsf.gbdt.v1"

# floor below which a split gain is treated as float noise on a flat objective
_MIN_GAIN = 1e-12


class GbdtError(ValueError):
    """Raised for invalid parameters, shapes, or model documents."""


@dataclass(frozen=True)
class GbdtParams:
    learning_rate: float = 0.1
    feature_fraction: float = 1.0
    num_rounds: int = 100
    max_leaves: int = 31
    min_leaf_samples: int = 20
    max_bins: int = 255
    tweedie_power: float = 1.5
    l2_lambda: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise GbdtError("learning_rate must be > 0")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise GbdtError("feature_fraction must lie in (0, 1]")
        if self.num_rounds < 0:
            raise GbdtError("num_rounds must be >= 0")
        if self.max_leaves < 2:
            raise GbdtError("max_leaves must be >= 2")
        if self.min_leaf_samples < 1:
            raise GbdtError("min_leaf_samples must be >= 1")
        if not 2 <= self.max_bins <= 65535:
            raise GbdtError("max_bins must lie in [2, 65535]")
        if not 1.0 < self.tweedie_power < 2.0:
            raise GbdtError("tweedie_power must lie in (1, 2)")
        if self.l2_lambda < 0:
            raise GbdtError("l2_lambda must be >= 0")


@dataclass(frozen=True)
class Tree:
    """One tree as parallel node arrays; leaves have left == right == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left < 0))


@dataclass(frozen=True)
class GbdtModel:
    params: GbdtParams
    base_score: float
    trees: tuple[Tree, ...]
    train_loss: tuple[float, ...]
    n_features: int


def bin_features(X: np.ndarray, max_bins: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Discretize columns of X into integer bin codes.

    When a column has at most ``max_bins`` distinct values every value gets
    its own bin (thresholds at midpoints of consecutive distinct values), so
    histogram split search is exhaustive. Otherwise cut points sit at
    equal-frequency ranks. Returns a feature-major uint16 code matrix and the
    ascending raw-value threshold array per feature; bin b holds values in
    (thr[b-1], thr[b]], so ``code <= b`` is exactly ``x <= thr[b]``.
    """
    n_rows, n_feat = X.shape
    codes = np.empty((n_feat, n_rows), dtype=np.uint16)
    thresholds: list[np.ndarray] = []
    for f in range(n_feat):
        x = X[:, f]
        uniq = np.unique(x)
        if uniq.shape[0] <= 1:
            thr = np.empty(0, dtype=np.float64)
        elif uniq.shape[0] <= max_bins:
            thr = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            xs = np.sort(x)
            ranks = (np.arange(1, max_bins) * n_rows) // max_bins
            thr = np.unique((xs[ranks - 1] + xs[ranks]) / 2.0)
        codes[f] = np.searchsorted(thr, x, side="left").astype(np.uint16)
        thresholds.append(thr)
    return codes, thresholds


class _Leaf:
    __slots__ = ("node_id", "rows", "gain", "feat_pos", "split_bin")

    def __init__(self, node_id: int, rows: np.ndarray):
        self.node_id = node_id
        self.rows = rows
        self.gain = -np.inf
        self.feat_pos = -1
        self.split_bin = -1


def _grow_tree(codes, thresholds, feats, grad, hess, params: GbdtParams):
    """Grow one tree leaf-wise; returns (Tree, final leaves) or None."""
    all_rows = np.arange(grad.shape[0], dtype=np.int64)
    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    leaves = [_Leaf(0, all_rows)]
    evaluated = 0

    while len(leaves) < params.max_leaves:
        for leaf in leaves[evaluated:]:
            if leaf.rows.shape[0] >= 2 * params.min_leaf_samples:
                hg, hh, cnt = kernels.build_histograms(
                    codes, leaf.rows, feats, grad, hess, params.max_bins
                )
                gain, fpos, sbin = kernels.best_split(
                    hg, hh, cnt, params.l2_lambda, params.min_leaf_samples
                )
                leaf.gain = float(gain)
                leaf.feat_pos = int(fpos)
                leaf.split_bin = int(sbin)
        evaluated = len(leaves)

        best = None
        for leaf in leaves:  # list order is creation order; > keeps the earliest tie
            if leaf.feat_pos >= 0 and (best is None or leaf.gain > best.gain):
                best = leaf
        if best is None or not best.gain > _MIN_GAIN:
            break

        feat_global = int(feats[best.feat_pos])
        rows_l, rows_r = kernels.partition_rows(
            codes, feat_global, best.rows, best.split_bin
        )
        lid = len(feature)
        rid = lid + 1
        feature[best.node_id] = feat_global
        threshold[best.node_id] = float(thresholds[feat_global][best.split_bin])
        left[best.node_id] = lid
        right[best.node_id] = rid
        for rows in (rows_l, rows_r):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            leaves.append(_Leaf(len(feature) - 1, rows))
        pos = leaves.index(best)
        leaves.pop(pos)
        evaluated -= 1

    if len(leaves) == 1 and left[0] < 0:
        return None

    value = np.zeros(len(feature), dtype=np.float64)
    for leaf in leaves:
        g = float(np.sum(grad[leaf.rows]))
        h = float(np.sum(hess[leaf.rows]))
        value[leaf.node_id] = -g / (h + params.l2_lambda)
    tree = Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=value,
    )
    return tree, leaves


def fit_gbdt(X: np.ndarray, y: np.ndarray, params: GbdtParams) -> GbdtModel:
    """Train an ensemble on non-negative targets.

    Boosting stops early when a round's root leaf has no split clearing the
    gain floor; fully degenerate data therefore yields a base-score-only
    model rather than an error.
    """
    params.validate()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise GbdtError("X must be 2-D with at least one feature column")
    if y.shape != (X.shape[0],):
        raise GbdtError("y length must match X rows")
    if X.shape[0] < 2 * params.min_leaf_samples:
        raise GbdtError(
            f"need at least {2 * params.min_leaf_samples} rows, got {X.shape[0]}"
        )
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise GbdtError("X and y must be finite")
    if np.any(y < 0):
        raise GbdtError("y must be non-negative")

    n_rows, n_feat = X.shape
    codes, thresholds = bin_features(X, params.max_bins)
    base_score = float(np.log(np.mean(y) + 1e-12))
    F = np.full(n_rows, base_score, dtype=np.float64)
    rng = np.random.default_rng(params.seed)
    k = min(n_feat, max(1, int(np.floor(params.feature_fraction * n_feat + 0.5))))

    trees: list[Tree] = []
    train_loss = [float(np.mean(tweedie_loss(y, F, params.tweedie_power)))]
    for _ in range(params.num_rounds):
        grad, hess = tweedie_grad_hess(y, F, params.tweedie_power)
        feats = np.sort(rng.choice(n_feat, size=k, replace=False)).astype(np.int64)
        grown = _grow_tree(codes, thresholds, feats, grad, hess, params)
        if grown is None:
            break
        tree, leaves = grown
        for leaf in leaves:
            F[leaf.rows] += params.learning_rate * tree.value[leaf.node_id]
        trees.append(tree)
        train_loss.append(float(np.mean(tweedie_loss(y, F, params.tweedie_power))))
    return GbdtModel(
        params=params,
        base_score=base_score,
        trees=tuple(trees),
        train_loss=tuple(train_loss),
        n_features=n_feat,
    )


def _flatten(trees: tuple[Tree, ...]):
    if not trees:
        z_i = np.zeros(0, dtype=np.int64)
        z_f = np.zeros(0, dtype=np.float64)
        return z_i, z_f, z_i, z_i, z_f, z_i
    feat, thr, left, right, value, roots = [], [], [], [], [], []
    offset = 0
    for t in trees:
        roots.append(offset)
        feat.append(t.feature)
        thr.append(t.threshold)
        left.append(np.where(t.left >= 0, t.left + offset, -1))
        right.append(np.where(t.right >= 0, t.right + offset, -1))
        value.append(t.value)
        offset += t.feature.shape[0]
    return (
        np.concatenate(feat),
        np.concatenate(thr),
        np.concatenate(left),
        np.concatenate(right),
        np.concatenate(value),
        np.asarray(roots, dtype=np.int64),
    )


def predict_gbdt(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    """Mean-scale predictions, strictly positive."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise GbdtError(
            f"expected {model.n_features} feature columns, got shape {X.shape}"
        )
    feat, thr, left, right, value, roots = _flatten(model.trees)
    raw = kernels.predict_forest(X, feat, thr, left, right, value, roots)
    return np.exp(model.base_score + model.params.learning_rate * raw)


def gbdt_to_dict(model: GbdtModel) -> dict:
    return {
        "schema": GBDT_SCHEMA,
        "params": asdict(model.params),
        "base_score": model.base_score,
        "n_features": model.n_features,
        "train_loss": list(model.train_loss),
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
            }
            for t in model.trees
        ],
    }


def gbdt_from_dict(doc: dict) -> GbdtModel:
    if doc.get("schema") != GBDT_SCHEMA:
        raise GbdtError(f"unsupported model schema {doc.get('schema')!r}")
    trees = tuple(
        Tree(
            feature=np.asarray(t["feature"], dtype=np.int64),
            threshold=np.asarray(t["threshold"], dtype=np.float64),
            left=np.asarray(t["left"], dtype=np.int64),
            right=np.asarray(t["right"], dtype=np.int64),
            value=np.asarray(t["value"], dtype=np.float64),
        )
        for t in doc["trees"]
    )
    return GbdtModel(
        params=GbdtParams(**doc["params"]),
        base_score=float(doc["base_score"]),
        trees=trees,
        train_loss=tuple(float(v) for v in doc["train_loss"]),
        n_features=int(doc["n_features"]),
    )


def save_gbdt(model: GbdtModel, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(gbdt_to_dict(model), f, sort_keys=True)
        f.write("\n")


def load_gbdt(path) -> GbdtModel:
    with open(path, encoding="utf-8") as f:
        return gbdt_from_dict(json.load(f))
