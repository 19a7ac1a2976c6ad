"""Gradient-boosted decision trees with histogram splits and GOSS.

Multiclass training uses a softmax objective with one regression tree
per class per round, second-order leaf weights w = -G / (H + lambda),
and leaf-wise growth: the open leaf with the largest split gain is
expanded next until ``max_leaves`` is reached or no leaf improves.

Features are bucketed once into at most ``num_bins`` bins by training
quantiles; split thresholds are stored as raw feature values so that
prediction never needs the bin edges. The routing rule is strict:
``value < threshold`` goes left, everything else right, matching the
half-open binning.

Gradient-based one-side sampling (GOSS) keeps the top ``a * n`` rows
by summed absolute gradient each round, samples ``b * n`` of the rest
uniformly, and amplifies the sampled small-gradient rows by
(1 - a) / b so histogram sums stay unbiased in expectation.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDataError
from ..hsi_data import SampleSet
from ..linalg import as_matrix
from ..rng import SplitMix64

__all__ = [
    "GbdtParams",
    "GbdtModel",
    "Tree",
    "gbdt_train",
    "gbdt_predict",
    "softmax_probabilities",
    "softmax_cross_entropy",
    "softmax_gradients",
]

# L2 regularization on leaf weights; shared by gain and weight formulas.
_LAMBDA = 1.0

# Gains at or below this are treated as "no useful split".
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GbdtParams:
    num_trees: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    num_bins: int = 64
    goss_top_rate: float = 0.2
    goss_other_rate: float = 0.1
    seed: int = 0

    def validate(self):
        if self.num_trees < 1:
            raise ValueError(f"num_trees must be >= 1, got {self.num_trees}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.max_leaves < 2:
            raise ValueError(f"max_leaves must be >= 2, got {self.max_leaves}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.num_bins < 2:
            raise ValueError(f"num_bins must be >= 2, got {self.num_bins}")
        if not 0.0 <= self.goss_top_rate < 1.0:
            raise ValueError(f"goss_top_rate must be in [0, 1), got {self.goss_top_rate}")
        if not 0.0 <= self.goss_other_rate < 1.0:
            raise ValueError(f"goss_other_rate must be in [0, 1), got {self.goss_other_rate}")
        if self.goss_top_rate > 0 and self.goss_other_rate <= 0:
            raise ValueError("goss_other_rate must be > 0 when goss_top_rate is > 0")
        if self.goss_top_rate + self.goss_other_rate >= 1.0:
            raise ValueError("goss_top_rate + goss_other_rate must be < 1")


@dataclass
class Tree:
    """One regression tree as flat arrays; feature == -1 marks a leaf."""

    feature: np.ndarray  # int32 per node, -1 for leaves
    threshold: np.ndarray  # float64 raw cut value, 0.0 for leaves
    left: np.ndarray  # int32 child index, -1 for leaves
    right: np.ndarray
    value: np.ndarray  # float64 leaf output (shrinkage included), 0.0 inside

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            at = node[rows]
            go_left = x[rows, feat[rows]] < self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64),
        )


@dataclass
class GbdtModel:
    classes: np.ndarray
    priors: np.ndarray  # log class frequencies, the round-0 scores
    trees: list  # trees[r][c] is the round-r tree for class column c
    params: GbdtParams
    n_features: int
    warnings: list = field(default_factory=list)

    def decision_scores(self, x: np.ndarray) -> np.ndarray:
        scores = np.tile(self.priors, (x.shape[0], 1))
        for round_trees in self.trees:
            for c, tree in enumerate(round_trees):
                scores[:, c] += tree.predict(x)
        return scores

    def to_dict(self) -> dict:
        return {
            "schema": "hsikit/gbdt-model/1",
            "classes": self.classes.tolist(),
            "priors": self.priors.tolist(),
            "n_features": self.n_features,
            "params": {
                "num_trees": self.params.num_trees,
                "learning_rate": self.params.learning_rate,
                "max_leaves": self.params.max_leaves,
                "min_samples_leaf": self.params.min_samples_leaf,
                "num_bins": self.params.num_bins,
                "goss_top_rate": self.params.goss_top_rate,
                "goss_other_rate": self.params.goss_other_rate,
                "seed": self.params.seed,
            },
            "warnings": list(self.warnings),
            "trees": [[t.to_dict() for t in round_trees] for round_trees in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtModel":
        if d.get("schema") != "hsikit/gbdt-model/1":
            raise ValueError(f"unsupported GBDT model schema: {d.get('schema')!r}")
        return cls(
            classes=np.asarray(d["classes"], dtype=np.int64),
            priors=np.asarray(d["priors"], dtype=np.float64),
            trees=[[Tree.from_dict(t) for t in rt] for rt in d["trees"]],
            params=GbdtParams(**d["params"]),
            n_features=int(d["n_features"]),
            warnings=list(d["warnings"]),
        )


def softmax_probabilities(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    return p


def softmax_cross_entropy(scores: np.ndarray, onehot: np.ndarray) -> float:
    """Total (summed) cross-entropy of softmax(scores) against one-hot rows."""
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.sum(log_norm - (z * onehot).sum(axis=1)))


def softmax_gradients(scores: np.ndarray, onehot: np.ndarray):
    """Per-entry gradient p - y and diagonal hessian p(1 - p) of the
    summed cross-entropy with respect to the score matrix."""
    p = softmax_probabilities(scores)
    return p - onehot, p * (1.0 - p)


def _bin_features(features: np.ndarray, num_bins: int):
    """Quantile bin edges per feature and the binned feature matrix.

    Bin b holds values v with edges[b-1] <= v < edges[b], so a split at
    boundary t (left = bins 0..t) is exactly the raw rule v < edges[t].
    """
    n, width = features.shape
    qs = np.arange(1, num_bins) / num_bins
    edges = []
    binned = np.empty((n, width), dtype=np.int32)
    for f in range(width):
        col = features[:, f]
        e = np.unique(np.quantile(col, qs))
        edges.append(e)
        binned[:, f] = np.searchsorted(e, col, side="right")
    return edges, binned


def _goss_sample(grad: np.ndarray, params: GbdtParams, rng: SplitMix64):
    """Row subset and per-row amplification weights for one round.

    Rows are ranked by the summed absolute gradient across classes
    (stable, so gradient ties resolve by row index). Returns rows in
    ascending index order.
    """
    n = grad.shape[0]
    if params.goss_top_rate <= 0.0:
        return np.arange(n), np.ones(n)
    top_n = int(round(params.goss_top_rate * n))
    other_n = int(round(params.goss_other_rate * n))
    order = np.argsort(-np.abs(grad).sum(axis=1), kind="stable")
    top = order[:top_n]
    rest = order[top_n:]
    other_n = min(other_n, len(rest))
    picked = rest[rng.permutation(len(rest))[:other_n]]
    rows = np.sort(np.concatenate([top, picked]))
    weights = np.ones(n)
    weights[picked] = (1.0 - params.goss_top_rate) / params.goss_other_rate
    return rows, weights[rows]


class _Leaf:
    """Open leaf during growth: its rows, histograms, and best split."""

    __slots__ = ("node", "rows", "hist_g", "hist_h", "hist_n", "gain", "feature", "cut")

    def __init__(self, node, rows, hist_g, hist_h, hist_n):
        self.node = node
        self.rows = rows
        self.hist_g = hist_g
        self.hist_h = hist_h
        self.hist_n = hist_n
        self.gain = -np.inf
        self.feature = -1
        self.cut = -1


def _leaf_histograms(binned, rows, g, h, num_bins):
    """Per-(feature, bin) sums of gradient, hessian, and row count."""
    width = binned.shape[1]
    size = width * num_bins
    codes = (binned[rows] + np.arange(width, dtype=np.int32) * num_bins).ravel()
    hist_g = np.bincount(codes, weights=np.repeat(g[rows], width), minlength=size)
    hist_h = np.bincount(codes, weights=np.repeat(h[rows], width), minlength=size)
    hist_n = np.bincount(codes, minlength=size).astype(np.float64)
    return (
        hist_g.reshape(width, num_bins),
        hist_h.reshape(width, num_bins),
        hist_n.reshape(width, num_bins),
    )


def _best_split(leaf: _Leaf, min_samples_leaf: int):
    """Fill the leaf's (gain, feature, cut) with its best boundary.

    gain = 0.5 [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - G^2/(H+lam)],
    maximized over all boundaries with both sides holding at least
    ``min_samples_leaf`` rows. Ties pick the smallest feature, then the
    smallest boundary.
    """
    g_left = np.cumsum(leaf.hist_g, axis=1)[:, :-1]
    h_left = np.cumsum(leaf.hist_h, axis=1)[:, :-1]
    n_left = np.cumsum(leaf.hist_n, axis=1)[:, :-1]
    g_total = leaf.hist_g[0].sum()
    h_total = leaf.hist_h[0].sum()
    n_total = leaf.hist_n[0].sum()
    g_right = g_total - g_left
    h_right = h_total - h_left
    n_right = n_total - n_left
    parent = g_total * g_total / (h_total + _LAMBDA)
    gain = 0.5 * (
        g_left * g_left / (h_left + _LAMBDA)
        + g_right * g_right / (h_right + _LAMBDA)
        - parent
    )
    gain[(n_left < min_samples_leaf) | (n_right < min_samples_leaf)] = -np.inf
    flat = int(np.argmax(gain))
    leaf.gain = float(gain.ravel()[flat])
    leaf.feature, leaf.cut = divmod(flat, gain.shape[1])


def _grow_tree(binned, edges, g, h, rows, params: GbdtParams, trace=None):
    """Grow one leaf-wise tree on pre-binned features.

    ``g`` and ``h`` are per-row (already amplified) gradient and
    hessian values for one class column. When ``trace`` is a list, each
    expansion appends (chosen leaf gain, gains of the other open
    leaves) for inspection.
    """
    num_bins = params.num_bins
    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [0.0]

    def close(leaf):
        gsum = leaf.hist_g[0].sum()
        hsum = leaf.hist_h[0].sum()
        value[leaf.node] = -params.learning_rate * gsum / (hsum + _LAMBDA)

    root = _Leaf(0, rows, *_leaf_histograms(binned, rows, g, h, num_bins))
    _best_split(root, params.min_samples_leaf)
    heap = []
    seq = 0
    heapq.heappush(heap, (-root.gain, seq, root))
    open_leaves = {0: root}
    n_leaves = 1
    while n_leaves < params.max_leaves and heap:
        neg_gain, _, leaf = heapq.heappop(heap)
        if -neg_gain <= _MIN_GAIN:
            break
        if trace is not None:
            others = [l.gain for node, l in open_leaves.items() if node != leaf.node]
            trace.append((leaf.gain, others))
        del open_leaves[leaf.node]
        go_left = binned[leaf.rows, leaf.feature] <= leaf.cut
        rows_l = leaf.rows[go_left]
        rows_r = leaf.rows[~go_left]
        # Build the smaller side's histograms, derive the sibling's.
        if len(rows_l) <= len(rows_r):
            hist_l = _leaf_histograms(binned, rows_l, g, h, num_bins)
            hist_r = tuple(p - s for p, s in zip((leaf.hist_g, leaf.hist_h, leaf.hist_n), hist_l))
        else:
            hist_r = _leaf_histograms(binned, rows_r, g, h, num_bins)
            hist_l = tuple(p - s for p, s in zip((leaf.hist_g, leaf.hist_h, leaf.hist_n), hist_r))
        node_l = len(feature)
        node_r = node_l + 1
        for _ in range(2):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
        feature[leaf.node] = leaf.feature
        threshold[leaf.node] = float(edges[leaf.feature][leaf.cut])
        left[leaf.node] = node_l
        right[leaf.node] = node_r
        for node, child_rows, hist in ((node_l, rows_l, hist_l), (node_r, rows_r, hist_r)):
            child = _Leaf(node, child_rows, *hist)
            _best_split(child, params.min_samples_leaf)
            seq += 1
            heapq.heappush(heap, (-child.gain, seq, child))
            open_leaves[node] = child
        n_leaves += 1
    for leaf in open_leaves.values():
        close(leaf)
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )


def gbdt_train(train: SampleSet, params: GbdtParams | None = None) -> GbdtModel:
    """Boost ``num_trees`` rounds of per-class leaf-wise trees.

    Scores start at the log class frequencies; every round fits one
    tree per class column to the softmax gradient/hessian, on the GOSS
    row subset when sampling is enabled.
    """
    params = params or GbdtParams()
    params.validate()
    features = as_matrix(train.features, "train.features")
    classes = np.unique(train.labels)
    n, width = features.shape
    n_classes = len(classes)
    if n_classes < 2:
        raise DegenerateDataError("GBDT training needs at least 2 classes")
    onehot = (train.labels[:, None] == classes[None, :]).astype(np.float64)
    priors = np.log(onehot.mean(axis=0))
    scores = np.tile(priors, (n, 1))
    edges, binned = _bin_features(features, params.num_bins)
    rng = SplitMix64(params.seed)
    notes = []
    if params.goss_top_rate > 0 and n < 20:
        notes.append(f"GOSS on only {n} rows; sampling is close to a no-op")
    all_trees = []
    for _ in range(params.num_trees):
        grad, hess = softmax_gradients(scores, onehot)
        rows, amplify = _goss_sample(grad, params, rng)
        round_trees = []
        for c in range(n_classes):
            g = np.zeros(n)
            h = np.zeros(n)
            g[rows] = grad[rows, c] * amplify
            h[rows] = hess[rows, c] * amplify
            tree = _grow_tree(binned, edges, g, h, rows, params)
            round_trees.append(tree)
            scores[:, c] += tree.predict(features)
        all_trees.append(round_trees)
    return GbdtModel(
        classes=classes.astype(np.int64),
        priors=priors,
        trees=all_trees,
        params=params,
        n_features=width,
        warnings=notes,
    )


def gbdt_predict(model: GbdtModel, x) -> np.ndarray:
    """Class labels by argmax score; ties go to the smallest class id."""
    x = as_matrix(x, "x")
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"x has {x.shape[1]} features but the model was trained on {model.n_features}"
        )
    scores = model.decision_scores(x)
    return model.classes[np.argmax(scores, axis=1)]
