"""Exact and randomized PCA over pixel-by-band matrices.

Fitting centers the data by column means and takes the top right
singular vectors of the centered matrix; the randomized variant swaps
the exact factorization for :func:`hsikit.linalg.randomized_svd` and is
otherwise identical. Models are immutable after fit and record how they
were produced.

Only centering is applied, never per-band standardization: spectral
bands share units, so PCA on the covariance matrix is the intended
behavior. Pre-scale the input yourself if you want correlation-matrix
PCA.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError
from .linalg import RandomizedSvdParams, as_matrix, exact_svd, randomized_svd

__all__ = [
    "PcaModel",
    "fit_pca",
    "fit_rpca",
    "transform",
    "explained_variance_ratio",
    "principal_angles",
]


@dataclass(frozen=True)
class PcaModel:
    """Fitted reduction: per-band mean, orthonormal principal axes
    (rows of ``components``), and per-axis explained variance.

    ``method`` is "exact" or "randomized"; for the randomized method
    ``method_params`` records seed, oversampling and power_iterations.
    """

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    method: str
    n_fit_samples: int
    method_params: dict = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    def to_dict(self) -> dict:
        return {
            "schema": "hsikit/pca-model/1",
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "method": self.method,
            "method_params": dict(self.method_params),
            "n_fit_samples": self.n_fit_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        if d.get("schema") != "hsikit/pca-model/1":
            raise ValueError(f"unsupported PCA model schema: {d.get('schema')!r}")
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            components=np.asarray(d["components"], dtype=np.float64),
            explained_variance=np.asarray(d["explained_variance"], dtype=np.float64),
            method=d["method"],
            n_fit_samples=int(d["n_fit_samples"]),
            method_params=dict(d["method_params"]),
        )


def _validate_fit_input(x: np.ndarray, k: int) -> None:
    n, b = x.shape
    if n < 2:
        raise DegenerateDataError(f"PCA needs at least 2 samples, got {n}")
    if not 1 <= k <= min(n, b):
        raise ValueError(f"k must satisfy 1 <= k <= min(n, B) = {min(n, b)}, got {k}")


def fit_pca(x, k: int) -> PcaModel:
    """Fit exact PCA with ``k`` components on rows of ``x`` (n x B).

    explained_variance[i] is s_i^2 / (n - 1), the sample-covariance
    eigenvalue along component i.
    """
    x = as_matrix(x, "x")
    _validate_fit_input(x, k)
    mean = x.mean(axis=0)
    svd = exact_svd(x - mean, k)
    return PcaModel(
        mean=mean,
        components=svd.vt,
        explained_variance=svd.s**2 / (x.shape[0] - 1),
        method="exact",
        n_fit_samples=x.shape[0],
    )


def fit_rpca(
    x,
    k: int,
    oversampling: int = 10,
    power_iterations: int = 2,
    seed: int = 0,
) -> PcaModel:
    """Fit PCA like :func:`fit_pca` but factor the centered matrix with
    the randomized SVD; the sketch settings are recorded in the model."""
    x = as_matrix(x, "x")
    _validate_fit_input(x, k)
    params = RandomizedSvdParams(
        k=k, oversampling=oversampling, power_iterations=power_iterations, seed=seed
    )
    params.validate(*x.shape)
    mean = x.mean(axis=0)
    svd = randomized_svd(x - mean, params)
    return PcaModel(
        mean=mean,
        components=svd.vt,
        explained_variance=svd.s**2 / (x.shape[0] - 1),
        method="randomized",
        n_fit_samples=x.shape[0],
        method_params={
            "seed": seed,
            "oversampling": oversampling,
            "power_iterations": power_iterations,
        },
    )


def transform(model: PcaModel, x) -> np.ndarray:
    """Project rows of ``x`` (m x B) onto the model's components: the
    result is (x - mean) @ components^T, shape m x k."""
    x = as_matrix(x, "x")
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"x has {x.shape[1]} columns but the model was fit on "
            f"{model.n_features} features"
        )
    return (x - model.mean) @ model.components.T


def explained_variance_ratio(model: PcaModel, total_variance: float) -> np.ndarray:
    """Per-component share of ``total_variance`` (trace of the sample
    covariance matrix of the fit data)."""
    if not total_variance > 0:
        raise ValueError(f"total_variance must be > 0, got {total_variance}")
    return model.explained_variance / total_variance


def principal_angles(components_a: np.ndarray, components_b: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between the row spans of
    two orthonormal component matrices of equal rank."""
    a = as_matrix(components_a, "components_a")
    b = as_matrix(components_b, "components_b")
    if a.shape != b.shape:
        raise ValueError(f"component shapes differ: {a.shape} vs {b.shape}")
    cosines = np.linalg.svd(a @ b.T, compute_uv=False)
    return np.arccos(np.clip(cosines, -1.0, 1.0))[::-1]
