"""RBF-kernel SVM trained by sequential minimal optimization.

Multiclass problems are handled one-vs-one: each class pair gets a
binary machine whose dual is solved by SMO with first-order maximal
violating pair selection, the smaller class id playing the +1 role.
Features are rescaled to [0, 1] per dimension from the training
min/max (the RBF width is scale sensitive); the scaling is recorded in
the model and reapplied at prediction time.

Training is fully deterministic: ties in working-set selection and in
one-vs-one voting are broken by smallest index / smallest class id.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateDataError
from ..hsi_data import SampleSet
from ..linalg import as_matrix
from ..rng import SplitMix64

__all__ = [
    "SvmParams",
    "SvmModel",
    "BinarySvm",
    "rbf_kernel",
    "svm_train",
    "svm_predict",
    "grid_search_cv",
    "DEFAULT_C_GRID",
    "DEFAULT_GAMMA_GRID",
]

# Grid centered on the defaults C=600, gamma=0.5.
DEFAULT_C_GRID = (1.0, 10.0, 100.0, 600.0, 1000.0)
DEFAULT_GAMMA_GRID = (0.01, 0.1, 0.5, 1.0, 2.0)

# Kernel matrices up to this many rows are precomputed in full.
_FULL_KERNEL_LIMIT = 4096


@dataclass(frozen=True)
class SvmParams:
    c: float = 600.0
    gamma: float = 0.5
    tolerance: float = 1e-3
    max_iter: int = 100_000

    def validate(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class BinarySvm:
    """One trained class-pair machine; ``class_pos`` is the smaller id."""

    class_pos: int
    class_neg: int
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    n_iter: int
    converged: bool
    kkt_violation: float

    def decision(self, x_scaled: np.ndarray, gamma: float) -> np.ndarray:
        k = _rbf_cross(x_scaled, self.support_vectors, gamma)
        return k @ self.dual_coef + self.bias


@dataclass
class SvmModel:
    classes: np.ndarray
    machines: list
    params: SvmParams
    feature_min: np.ndarray
    feature_range: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.feature_min.shape[0]

    def to_dict(self) -> dict:
        return {
            "schema": "hsikit/svm-model/1",
            "classes": self.classes.tolist(),
            "params": {
                "c": self.params.c,
                "gamma": self.params.gamma,
                "tolerance": self.params.tolerance,
                "max_iter": self.params.max_iter,
            },
            "feature_min": self.feature_min.tolist(),
            "feature_range": self.feature_range.tolist(),
            "warnings": list(self.warnings),
            "machines": [
                {
                    "class_pos": m.class_pos,
                    "class_neg": m.class_neg,
                    "support_vectors": m.support_vectors.tolist(),
                    "dual_coef": m.dual_coef.tolist(),
                    "bias": m.bias,
                    "n_iter": m.n_iter,
                    "converged": m.converged,
                    "kkt_violation": m.kkt_violation,
                }
                for m in self.machines
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("schema") != "hsikit/svm-model/1":
            raise ValueError(f"unsupported SVM model schema: {d.get('schema')!r}")
        params = SvmParams(**d["params"])
        machines = [
            BinarySvm(
                class_pos=int(m["class_pos"]),
                class_neg=int(m["class_neg"]),
                support_vectors=np.asarray(m["support_vectors"], dtype=np.float64),
                dual_coef=np.asarray(m["dual_coef"], dtype=np.float64),
                bias=float(m["bias"]),
                n_iter=int(m["n_iter"]),
                converged=bool(m["converged"]),
                kkt_violation=float(m["kkt_violation"]),
            )
            for m in d["machines"]
        ]
        return cls(
            classes=np.asarray(d["classes"], dtype=np.int64),
            machines=machines,
            params=params,
            feature_min=np.asarray(d["feature_min"], dtype=np.float64),
            feature_range=np.asarray(d["feature_range"], dtype=np.float64),
            warnings=list(d["warnings"]),
        )


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"rbf_kernel needs equal-length vectors, got {x.shape} and {y.shape}")
    if not gamma > 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    d = x - y
    return float(np.exp(-gamma * (d @ d)))


def _rbf_cross(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """Kernel block K[i, j] = exp(-gamma * ||a_i - b_j||^2)."""
    sq_a = (a * a).sum(axis=1)
    sq_b = (b * b).sum(axis=1)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _smo_solve(x: np.ndarray, y: np.ndarray, params: SvmParams):
    """Solve the binary soft-margin dual by SMO.

    Minimizes 0.5 a'Qa - e'a over 0 <= a <= C, y'a = 0 with
    Q_ij = y_i y_j K_ij. Returns (alpha, bias, n_iter, converged,
    final KKT violation). Selection picks the maximal violating pair;
    the gradient is updated incrementally from two kernel columns.
    """
    n = len(y)
    c = params.c
    sq = (x * x).sum(axis=1)
    if n <= _FULL_KERNEL_LIMIT:
        kmat = _rbf_cross(x, x, params.gamma)

        def col(i):
            return kmat[:, i]

    else:

        def col(i):
            d2 = sq + sq[i] - 2.0 * (x @ x[i])
            np.maximum(d2, 0.0, out=d2)
            return np.exp(-params.gamma * d2)

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective at alpha = 0
    pos = y > 0
    n_iter = 0
    violation = np.inf
    while n_iter < params.max_iter:
        score = -y * grad
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        up_idx = np.nonzero(up)[0]
        low_idx = np.nonzero(low)[0]
        i = up_idx[np.argmax(score[up_idx])]
        j = low_idx[np.argmin(score[low_idx])]
        m_up = score[i]
        m_low = score[j]
        violation = m_up - m_low
        if violation <= params.tolerance:
            return alpha, _bias(alpha, y, grad, c, m_up, m_low), n_iter, True, violation
        ki = col(i)
        kj = col(j)
        quad = ki[i] + kj[j] - 2.0 * ki[j]
        step = violation / max(quad, 1e-12)
        cap_i = (c - alpha[i]) if pos[i] else alpha[i]
        cap_j = alpha[j] if pos[j] else (c - alpha[j])
        step = min(step, cap_i, cap_j)
        if step == cap_i:
            alpha[i] = c if pos[i] else 0.0
        else:
            alpha[i] = min(max(alpha[i] + y[i] * step, 0.0), c)
        if step == cap_j:
            alpha[j] = 0.0 if pos[j] else c
        else:
            alpha[j] = min(max(alpha[j] - y[j] * step, 0.0), c)
        grad += step * y * (ki - kj)
        n_iter += 1
    score = -y * grad
    up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
    low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
    violation = score[up].max() - score[low].min()
    return alpha, _bias(alpha, y, grad, c, None, None), n_iter, False, violation


def _bias(alpha, y, grad, c, m_up, m_low):
    free = (alpha > 0.0) & (alpha < c)
    score = -y * grad
    if free.any():
        return float(score[free].mean())
    if m_up is None:
        pos = y > 0
        up = (pos & (alpha < c)) | (~pos & (alpha > 0.0))
        low = (pos & (alpha > 0.0)) | (~pos & (alpha < c))
        m_up = score[up].max()
        m_low = score[low].min()
    return float((m_up + m_low) / 2.0)


def _fit_scaling(features: np.ndarray):
    fmin = features.min(axis=0)
    frange = features.max(axis=0) - fmin
    frange = np.where(frange > 0.0, frange, 1.0)
    return fmin, frange


def svm_train(train: SampleSet, params: SvmParams | None = None) -> SvmModel:
    """Train a one-vs-one RBF SVM on a labeled sample set.

    Raises DegenerateDataError when fewer than two classes are present
    or a class pair consists of identical feature rows with conflicting
    labels. A machine that hits the iteration cap is kept, with a
    warning recorded in the model.
    """
    params = params or SvmParams()
    params.validate()
    features = as_matrix(train.features, "train.features")
    classes = np.unique(train.labels)
    if len(classes) < 2:
        raise DegenerateDataError("SVM training needs at least 2 classes")
    fmin, frange = _fit_scaling(features)
    scaled = (features - fmin) / frange
    machines = []
    notes = []
    for a_pos in range(len(classes)):
        for b_pos in range(a_pos + 1, len(classes)):
            cls_a, cls_b = int(classes[a_pos]), int(classes[b_pos])
            mask = (train.labels == cls_a) | (train.labels == cls_b)
            x_pair = scaled[mask]
            y_pair = np.where(train.labels[mask] == cls_a, 1.0, -1.0)
            if np.all(x_pair == x_pair[0]):
                raise DegenerateDataError(
                    f"classes {cls_a} and {cls_b} have identical feature rows"
                )
            alpha, bias, n_iter, converged, violation = _smo_solve(x_pair, y_pair, params)
            if not converged:
                notes.append(
                    f"pair ({cls_a}, {cls_b}): iteration cap {params.max_iter} reached "
                    f"(KKT violation {violation:.3e})"
                )
            sv = alpha > 0.0
            machines.append(
                BinarySvm(
                    class_pos=cls_a,
                    class_neg=cls_b,
                    support_vectors=x_pair[sv],
                    dual_coef=(alpha * y_pair)[sv],
                    bias=bias,
                    n_iter=n_iter,
                    converged=converged,
                    kkt_violation=float(violation),
                )
            )
    return SvmModel(
        classes=classes.astype(np.int64),
        machines=machines,
        params=params,
        feature_min=fmin,
        feature_range=frange,
        warnings=notes,
    )


def svm_predict(model: SvmModel, x) -> np.ndarray:
    """Predict class labels by one-vs-one voting.

    A strictly positive decision votes for the smaller class id of the
    pair; overall ties go to the smallest class id.
    """
    x = as_matrix(x, "x")
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"x has {x.shape[1]} features but the model was trained on {model.n_features}"
        )
    scaled = (x - model.feature_min) / model.feature_range
    class_index = {int(cls): idx for idx, cls in enumerate(model.classes)}
    votes = np.zeros((x.shape[0], len(model.classes)), dtype=np.int64)
    for machine in model.machines:
        decision = machine.decision(scaled, model.params.gamma)
        wins_pos = decision > 0.0
        votes[wins_pos, class_index[machine.class_pos]] += 1
        votes[~wins_pos, class_index[machine.class_neg]] += 1
    return model.classes[np.argmax(votes, axis=1)]


def _stratified_folds(labels: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded per-class partition into ``folds`` disjoint position sets."""
    rng = SplitMix64(seed)
    assignments = [[] for _ in range(folds)]
    for cls in np.unique(labels):
        positions = np.nonzero(labels == cls)[0]
        perm = positions[rng.permutation(len(positions))]
        for f, chunk in enumerate(np.array_split(perm, folds)):
            assignments[f].append(chunk)
    return [np.sort(np.concatenate(chunks)) for chunks in assignments]


def grid_search_cv(
    train: SampleSet,
    c_grid=DEFAULT_C_GRID,
    gamma_grid=DEFAULT_GAMMA_GRID,
    folds: int = 5,
    seed: int = 0,
    tolerance: float = 1e-3,
    max_iter: int = 100_000,
):
    """Stratified k-fold grid search over (C, gamma).

    Returns (best_c, best_gamma, table) where table rows are
    ``{"c", "gamma", "cv_accuracy"}`` in ascending (C, gamma) order.
    The winning cell maximizes mean fold accuracy; ties prefer smaller
    C, then smaller gamma. When a class has fewer samples than
    ``folds``, the fold count is reduced (with a warning) so every fold
    sees every class; below 2 usable folds this is an error.
    """
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    c_grid = sorted(set(float(v) for v in c_grid))
    gamma_grid = sorted(set(float(v) for v in gamma_grid))
    if not c_grid or not gamma_grid:
        raise ValueError("c_grid and gamma_grid must be non-empty")
    classes, counts = np.unique(train.labels, return_counts=True)
    if len(classes) < 2:
        raise DegenerateDataError("grid search needs at least 2 classes")
    usable = int(counts.min())
    if usable < 2:
        raise DegenerateDataError(
            "grid search needs every class to have at least 2 samples"
        )
    if usable < folds:
        warnings.warn(
            f"reducing folds from {folds} to {usable} so every fold sees every class",
            stacklevel=2,
        )
        folds = usable
    fold_positions = _stratified_folds(train.labels, folds, seed)
    table = []
    best = None
    for c in c_grid:
        for gamma in gamma_grid:
            params = SvmParams(c=c, gamma=gamma, tolerance=tolerance, max_iter=max_iter)
            accuracies = []
            for held_out in fold_positions:
                mask = np.ones(len(train), dtype=bool)
                mask[held_out] = False
                fold_train = SampleSet(
                    features=train.features[mask],
                    labels=train.labels[mask],
                    pixel_indices=train.pixel_indices[mask],
                )
                model = svm_train(fold_train, params)
                predicted = svm_predict(model, train.features[held_out])
                accuracies.append(float(np.mean(predicted == train.labels[held_out])))
            cv_accuracy = float(np.mean(accuracies))
            table.append({"c": c, "gamma": gamma, "cv_accuracy": cv_accuracy})
            if best is None or cv_accuracy > best[0]:
                best = (cv_accuracy, c, gamma)
    return best[1], best[2], table
