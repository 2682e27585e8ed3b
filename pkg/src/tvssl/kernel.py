"""Gaussian RBF Gram matrices and kernel expansions f(x) = sum_j k(x, x_j) a_j."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScaleError, DimensionError, InvalidParameterError


@dataclass(eq=False)
class KernelMatrix:
    """Dense symmetric Gram matrix over a set of training points.

    ``data`` keeps a reference to the points the matrix was built from so
    trained models can later evaluate their expansion on new queries.
    """

    values: np.ndarray
    bandwidth: float
    family: str = "rbf"
    data: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise DimensionError("kernel matrix must be square")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def rbf_gram(data, bandwidth: float) -> KernelMatrix:
    """Gram matrix K_ij = exp(-||x_i - x_j||^2 / (2 * bandwidth^2))."""
    if bandwidth is None or bandwidth <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise InvalidParameterError("data must be a 2-D array of points")
    d2 = _sq_dists(data, data)
    vals = np.exp(-d2 / (2.0 * bandwidth * bandwidth))
    vals = 0.5 * (vals + vals.T)
    np.fill_diagonal(vals, 1.0)
    return KernelMatrix(vals, float(bandwidth), "rbf", data)


def kernel_expand(alpha, train, query, bandwidth: float) -> np.ndarray:
    """Evaluate sum_j k(x_q, x_j) * alpha_j for each query row x_q."""
    if bandwidth is None or bandwidth <= 0:
        raise InvalidParameterError("bandwidth must be positive")
    alpha = np.asarray(alpha, dtype=np.float64).ravel()
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    if alpha.size != train.shape[0]:
        raise DimensionError(
            f"alpha has length {alpha.size}, train has {train.shape[0]} rows"
        )
    if train.shape[1] != query.shape[1]:
        raise DimensionError("train and query dimensionality differ")
    d2 = _sq_dists(query, train)
    return np.exp(-d2 / (2.0 * bandwidth * bandwidth)) @ alpha


def median_bandwidth(data, max_points: int = 1000, seed: int = 0) -> float:
    """Median pairwise distance over a (subsampled) point set.

    The usual default bandwidth when nothing better is known. Subsampling is
    deterministic given ``seed``.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if n < 2:
        raise InvalidParameterError("need at least two points")
    if n > max_points:
        rng = np.random.default_rng(seed)
        idx = rng.choice(n, size=max_points, replace=False)
        data = data[np.sort(idx)]
        n = max_points
    d2 = _sq_dists(data, data)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(d2[iu])))
    if med <= 0.0:
        raise DegenerateScaleError("median pairwise distance is zero")
    return med
