"""Dense linear-algebra kernels: Householder QR, truncated exact SVD,
and the randomized range finder / randomized SVD used for fast PCA.

Matrices are plain two-dimensional float64 numpy arrays; every public
entry point runs them through :func:`as_matrix`, which rejects NaN/Inf
and anything that is not a real 2-D array.

The randomized scheme is the standard Gaussian-sketch prototype:
multiply by a seeded Gaussian test matrix, orthonormalize, optionally
sharpen with power iterations (re-orthonormalizing after every
application of A or A^T), then factor the small projected matrix
exactly. Results are deterministic functions of (matrix, params, seed).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .rng import SplitMix64

__all__ = [
    "as_matrix",
    "householder_qr",
    "exact_svd",
    "randomized_range_finder",
    "randomized_svd",
    "SvdResult",
    "RandomizedSvdParams",
]


def as_matrix(a, name: str = "a") -> np.ndarray:
    """Validate and convert ``a`` to a 2-D float64 C-ordered array.

    Rejects non-2-D input and any non-finite entry; this is the single
    gate that upholds the all-finite invariant for the whole toolkit.
    """
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={out.ndim}")
    if out.size and not np.isfinite(out).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return out


@dataclass(frozen=True)
class SvdResult:
    """Top-r singular triplets: ``u @ diag(s) @ vt`` approximates A.

    ``u`` is m x r with orthonormal columns, ``s`` non-negative and
    non-increasing, ``vt`` r x n with orthonormal rows.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rank: int


@dataclass(frozen=True)
class RandomizedSvdParams:
    """Sketch configuration: target rank ``k``, extra sketch columns
    ``oversampling``, ``power_iterations`` passes of A A^T, and the
    stream seed."""

    k: int
    oversampling: int = 10
    power_iterations: int = 2
    seed: int = 0

    def validate(self, rows: int, cols: int):
        if self.k < 1:
            raise ValueError(f"target rank must be >= 1, got {self.k}")
        if self.oversampling < 0 or self.power_iterations < 0:
            raise ValueError("oversampling and power_iterations must be >= 0")
        if self.k + self.oversampling > min(rows, cols):
            raise ValueError(
                f"k + oversampling = {self.k + self.oversampling} exceeds "
                f"min(rows, cols) = {min(rows, cols)}"
            )


def householder_qr(a) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR of a tall matrix by Householder reflections.

    Requires rows >= cols. Returns (Q, R) with Q m x n orthonormal
    columns and R n x n upper triangular. A zero (or already reduced)
    column yields no reflection and a zero row in R, so rank-deficient
    input is not an error.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m < n:
        raise ValueError(f"householder_qr requires rows >= cols, got {m} x {n}")
    r = a.copy()
    reflectors = []
    for i in range(n):
        x = r[i:, i]
        norm_x = np.linalg.norm(x)
        if norm_x == 0.0:
            reflectors.append(None)
            continue
        v = x.copy()
        v[0] += np.copysign(norm_x, x[0]) if x[0] != 0.0 else norm_x
        v /= np.linalg.norm(v)
        reflectors.append(v)
        r[i:, i:] -= 2.0 * np.outer(v, v @ r[i:, i:])
    q = np.eye(m, n)
    for i in range(n - 1, -1, -1):
        v = reflectors[i]
        if v is None:
            continue
        q[i:, :] -= 2.0 * np.outer(v, v @ q[i:, :])
    r_out = np.triu(r[:n, :])
    return q, r_out


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Flip each singular vector pair so the largest-magnitude entry of
    # every column of U is positive; keeps factorizations comparable.
    if u.shape[1] == 0:
        return u, vt
    lead = np.abs(u).argmax(axis=0)
    signs = np.sign(u[lead, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def exact_svd(a, k: int) -> SvdResult:
    """Top-k singular triplets of ``a`` by a full dense SVD.

    The factorization itself is delegated to LAPACK via numpy; this
    wrapper owns validation, truncation, and the deterministic sign
    convention. Raises ConvergenceError if the backend fails to
    converge (rare, but possible for pathological input).
    """
    a = as_matrix(a)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k must satisfy 1 <= k <= min(m, n) = {min(m, n)}, got {k}")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    u, s, vt = u[:, :k], s[:k], vt[:k, :]
    u, vt = _fix_signs(u, vt)
    return SvdResult(u=u, s=s, vt=vt, rank=k)


def randomized_range_finder(a, l: int, power_iterations: int, seed: int) -> np.ndarray:
    """Orthonormal m x l basis Q approximately spanning the range of A.

    Draws a seeded Gaussian test matrix, forms Y = A @ Omega, and
    orthonormalizes; each power iteration applies A^T then A with a QR
    re-orthonormalization after every multiply, which keeps the basis
    well conditioned when the spectrum decays slowly.
    """
    a = as_matrix(a)
    m, n = a.shape
    if not 1 <= l <= min(m, n):
        raise ValueError(f"l must satisfy 1 <= l <= min(m, n) = {min(m, n)}, got {l}")
    if power_iterations < 0:
        raise ValueError("power_iterations must be >= 0")
    omega = SplitMix64(seed).normal_matrix(n, l)
    q, _ = householder_qr(a @ omega)
    for _ in range(power_iterations):
        z, _ = householder_qr(a.T @ q)
        q, _ = householder_qr(a @ z)
    return q


def randomized_svd(a, params: RandomizedSvdParams) -> SvdResult:
    """Approximate top-k SVD via the randomized range finder.

    Stage A sketches an orthonormal basis Q with k + oversampling
    columns; stage B factors B = Q^T A exactly and lifts the left
    factor back through Q. Singular value estimates never exceed the
    exact ones (projection can only shrink singular values).
    """
    a = as_matrix(a)
    m, n = a.shape
    params.validate(m, n)
    l = params.k + params.oversampling
    q = randomized_range_finder(a, l, params.power_iterations, params.seed)
    b = q.T @ a
    inner = exact_svd(b, params.k)
    u = q @ inner.u
    u, vt = _fix_signs(u, inner.vt)
    return SvdResult(u=u, s=inner.s.copy(), vt=vt, rank=params.k)
