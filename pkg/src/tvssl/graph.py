"""Similarity graphs: k-NN construction, Laplacian and total-variation energies.

A :class:`SimilarityGraph` stores each undirected edge once (``i < j``) with a
strictly positive weight. All energy sums in this module run over *ordered*
pairs, i.e. every stored edge contributes with both orientations, so

    dirichlet_energy(g, f) == 2 * f @ laplacian_apply(g, f)

with the standard Laplacian ``L = D - W``. Solvers elsewhere in the package
scale their closed forms to match this convention, so a regularization weight
multiplies the same quantity everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateScaleError,
    DimensionError,
    InvalidParameterError,
)


@dataclass(eq=False)
class SimilarityGraph:
    """Symmetric weighted graph over ``n_nodes`` points.

    Parameters
    ----------
    n_nodes : int
        Number of nodes.
    edge_i, edge_j : int arrays
        Endpoints of each undirected edge, stored once per unordered pair.
    edge_w : float array
        Positive edge weights.
    """

    n_nodes: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    edge_w: np.ndarray
    degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        self.edge_i = np.asarray(self.edge_i, dtype=np.int64).ravel()
        self.edge_j = np.asarray(self.edge_j, dtype=np.int64).ravel()
        self.edge_w = np.asarray(self.edge_w, dtype=np.float64).ravel()
        if not (self.edge_i.size == self.edge_j.size == self.edge_w.size):
            raise DimensionError("edge arrays must have equal length")
        if self.n_nodes < 1:
            raise InvalidParameterError("graph needs at least one node")
        if self.edge_i.size:
            if self.edge_i.min() < 0 or self.edge_j.min() < 0:
                raise InvalidParameterError("negative node index")
            if max(self.edge_i.max(), self.edge_j.max()) >= self.n_nodes:
                raise InvalidParameterError("edge endpoint out of range")
            if np.any(self.edge_i == self.edge_j):
                raise InvalidParameterError("self-loops are not allowed")
            if np.any(self.edge_w <= 0):
                raise InvalidParameterError("edge weights must be positive")
            # normalize to i < j and reject duplicate pairs
            lo = np.minimum(self.edge_i, self.edge_j)
            hi = np.maximum(self.edge_i, self.edge_j)
            keys = lo * self.n_nodes + hi
            if np.unique(keys).size != keys.size:
                raise InvalidParameterError("duplicate edge for an unordered pair")
            order = np.argsort(keys, kind="stable")
            self.edge_i = lo[order]
            self.edge_j = hi[order]
            self.edge_w = self.edge_w[order]
        deg = np.zeros(self.n_nodes)
        np.add.at(deg, self.edge_i, self.edge_w)
        np.add.at(deg, self.edge_j, self.edge_w)
        self.degrees = deg
        self._adj = None

    @property
    def n_edges(self) -> int:
        return int(self.edge_i.size)

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse weight matrix W."""
        if self._adj is None:
            rows = np.concatenate([self.edge_i, self.edge_j])
            cols = np.concatenate([self.edge_j, self.edge_i])
            vals = np.concatenate([self.edge_w, self.edge_w])
            self._adj = sp.csr_matrix(
                (vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes)
            )
        return self._adj

    def weight(self, i: int, j: int) -> float:
        """Weight of edge {i, j}; zero when absent. Symmetric in (i, j)."""
        return float(self.adjacency[i, j])

    def laplacian(self) -> sp.csr_matrix:
        """Sparse graph Laplacian D - W."""
        n = self.n_nodes
        return sp.diags(self.degrees, format="csr") - self.adjacency


def _check_node_function(g: SimilarityGraph, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64).ravel()
    if f.size != g.n_nodes:
        raise DimensionError(
            f"node function has length {f.size}, graph has {g.n_nodes} nodes"
        )
    return f


def build_knn_graph(
    data,
    k: int,
    *,
    sigma_mode: str = "self_tuning",
    sigma: float | None = None,
    m: int | None = None,
) -> SimilarityGraph:
    """Union-symmetrized k-nearest-neighbor graph with Gaussian weights.

    Each node is linked to its ``k`` nearest Euclidean neighbors (ties broken
    by smaller index); an edge survives if either endpoint selected it.
    Weights are ``exp(-||x_i - x_j||^2 / (s_i * s_j))`` where the local scale
    ``s_i`` is the distance to the ``m``-th neighbor (``sigma_mode=
    "self_tuning"``, default ``m = k``), or ``exp(-||x_i - x_j||^2 / sigma^2)``
    for ``sigma_mode="fixed"``.

    Raises
    ------
    InvalidParameterError
        If ``k`` is out of range or ``sigma`` is missing/nonpositive.
    DegenerateScaleError
        If a self-tuning scale is zero (duplicate points).
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise InvalidParameterError("data must be a 2-D array of points")
    n = data.shape[0]
    if n < 2:
        raise InvalidParameterError("need at least two points")
    if not 1 <= k < n:
        raise InvalidParameterError(f"k must satisfy 1 <= k < {n}, got {k}")

    sq = np.sum(data * data, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (data @ data.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, np.inf)
    # stable argsort: equal distances keep ascending index order
    order = np.argsort(d2, axis=1, kind="stable")

    if sigma_mode == "fixed":
        if sigma is None or sigma <= 0:
            raise InvalidParameterError("fixed mode requires sigma > 0")
        scale_i = np.full(n, float(sigma))
    elif sigma_mode == "self_tuning":
        mm = k if m is None else int(m)
        if not 1 <= mm < n:
            raise InvalidParameterError(f"m must satisfy 1 <= m < {n}, got {mm}")
        mth = order[:, mm - 1]
        scale_i = np.sqrt(d2[np.arange(n), mth])
        if np.any(scale_i == 0.0):
            bad = int(np.flatnonzero(scale_i == 0.0)[0])
            raise DegenerateScaleError(
                f"self-tuning scale is zero at point {bad} (duplicate points)"
            )
    else:
        raise InvalidParameterError(f"unknown sigma_mode {sigma_mode!r}")

    nbrs = order[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    keys = np.unique(lo * n + hi)  # union over directions
    ei = keys // n
    ej = keys % n

    dist2 = d2[ei, ej]
    w = np.exp(-dist2 / (scale_i[ei] * scale_i[ej]))
    keep = w > 0.0  # drop weights that underflowed
    return SimilarityGraph(n, ei[keep], ej[keep], w[keep])


def dirichlet_energy(g: SimilarityGraph, f) -> float:
    """Sum of w_ij * (f_i - f_j)^2 over ordered pairs (each edge twice)."""
    f = _check_node_function(g, f)
    diff = f[g.edge_i] - f[g.edge_j]
    return float(2.0 * np.sum(g.edge_w * diff * diff))


def graph_tv(g: SimilarityGraph, f) -> float:
    """Sum of w_ij * |f_i - f_j| over ordered pairs (each edge twice)."""
    f = _check_node_function(g, f)
    diff = f[g.edge_i] - f[g.edge_j]
    return float(2.0 * np.sum(g.edge_w * np.abs(diff)))


def laplacian_apply(g: SimilarityGraph, f) -> np.ndarray:
    """(D - W) f without materializing a dense Laplacian."""
    f = _check_node_function(g, f)
    return g.degrees * f - g.adjacency @ f


def save_edge_list(g: SimilarityGraph, path) -> None:
    """Write the graph as one ``i j w`` triple per line (0-based, full precision)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in zip(g.edge_i, g.edge_j, g.edge_w):
            fh.write(f"{int(i)} {int(j)} {float(w)!r}\n")


def load_edge_list(path, n_nodes: int | None = None) -> SimilarityGraph:
    """Read a graph saved by :func:`save_edge_list`.

    ``n_nodes`` defaults to ``max(index) + 1``; pass it explicitly when the
    graph has trailing isolated nodes.
    """
    ei, ej, w = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidParameterError(
                    f"line {lineno}: expected 'i j w', got {line.strip()!r}"
                )
            ei.append(int(parts[0]))
            ej.append(int(parts[1]))
            w.append(float(parts[2]))
    if n_nodes is None:
        if not ei:
            raise InvalidParameterError("empty edge list and no n_nodes given")
        n_nodes = int(max(max(ei), max(ej))) + 1
    return SimilarityGraph(n_nodes, np.array(ei), np.array(ej), np.array(w))
