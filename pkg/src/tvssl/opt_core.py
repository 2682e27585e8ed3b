"""Optimization primitives shared by all classifiers.

Contents: cached SPD/LU linear solves with a residual contract, the graph-TV
proximal map solved by a primal-dual iteration, a projected-gradient solver
for box-constrained duals with one linear equality, Michelot's simplex
projection, and the ball/zero-mean renormalization used by the splitting
loops.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    DegenerateInputError,
    DimensionError,
    FactorizationError,
    InfeasibleConstraintsError,
    InvalidParameterError,
)
from .graph import SimilarityGraph, _check_node_function

_RESIDUAL_RTOL = 1e-8


@dataclass
class HyperParams:
    """Scalar knobs shared by the training loops.

    ``eta`` weighs label fidelity, ``lam`` the RKHS norm, ``gamma`` the graph
    regularizer, ``mu`` the slack penalty, ``r``/``r1``/``r2`` the quadratic
    consensus penalties, and ``c`` the ratio-descent step constant. The
    boolean flags toggle documented algorithm variants and default to the
    literal update order.
    """

    eta: float = 1.0
    lam: float = 0.01
    gamma: float = 0.1
    mu: float = 1.0
    r: float = 1.0
    r1: float = 1.0
    r2: float = 1.0
    c: float = 1.0
    outer_iters: int = 200
    inner_iters: int = 500
    tol: float = 1e-5
    normalize: bool = True
    norm_scale: str = "n"  # "n" or "sqrt_n"
    use_bias: bool = False
    simplex_last: bool = False

    def __post_init__(self):
        for name in ("eta", "lam", "mu", "r", "r1", "r2", "c", "tol"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.gamma < 0:
            raise InvalidParameterError("gamma must be nonnegative")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise InvalidParameterError("iteration caps must be >= 1")
        if self.norm_scale not in ("n", "sqrt_n"):
            raise InvalidParameterError("norm_scale must be 'n' or 'sqrt_n'")

    def ball_scale(self, n_nodes: int) -> float:
        return float(n_nodes) if self.norm_scale == "n" else float(np.sqrt(n_nodes))


@dataclass
class DualSolution:
    """Result of :func:`qp_box_eq`: the maximizer, its objective and KKT data."""

    beta: np.ndarray
    objective: float
    kkt_residuals: dict
    iterations: int
    eq_multiplier: float


@dataclass
class ProxTrace:
    """Convergence record of one :func:`tv_prox` call."""

    iterations_run: int
    primal_energy: list = field(default_factory=list)
    final_gap: float = 0.0


# ---------------------------------------------------------------------------
# linear solves
# ---------------------------------------------------------------------------


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("system matrix must be square")
    return A


def _refined_solve(A, solve_once, b):
    """One solve plus iterative refinement until the residual contract holds."""
    b = np.asarray(b, dtype=np.float64)
    x = solve_once(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(x)
    for _ in range(2):
        res = b - A @ x
        if np.linalg.norm(res) <= _RESIDUAL_RTOL * bnorm:
            return x
        x = x + solve_once(res)
    if np.linalg.norm(b - A @ x) > _RESIDUAL_RTOL * bnorm:
        raise FactorizationError("linear solve missed the residual bound")
    return x


class SpdFactor:
    """Cholesky factor of a symmetric positive (semi)definite matrix.

    Factor once, solve many times; a single jitter of ``1e-10 * trace / n``
    is added if the plain factorization fails.
    """

    def __init__(self, A):
        A = _as_square(A)
        self._A = A
        try:
            self._cf = sla.cho_factor(A, check_finite=False)
        except np.linalg.LinAlgError:
            n = A.shape[0]
            jitter = 1e-10 * max(np.trace(A), 1.0) / n
            try:
                self._cf = sla.cho_factor(
                    A + jitter * np.eye(n), check_finite=False
                )
            except np.linalg.LinAlgError as exc:
                raise FactorizationError(
                    "matrix is not positive definite, even with jitter"
                ) from exc

    def _solve_once(self, b):
        return sla.cho_solve(self._cf, b, check_finite=False)

    def solve(self, b) -> np.ndarray:
        """Solve A x = b with relative residual <= 1e-8."""
        b = np.asarray(b, dtype=np.float64)
        if b.ndim == 1:
            return _refined_solve(self._A, self._solve_once, b)
        return np.column_stack(
            [_refined_solve(self._A, self._solve_once, b[:, j]) for j in range(b.shape[1])]
        )


class LuFactor:
    """LU factor for general (possibly nonsymmetric) square systems."""

    def __init__(self, A):
        A = _as_square(A)
        self._A = A
        try:
            self._lu = sla.lu_factor(A, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise FactorizationError("LU factorization failed") from exc

    def solve(self, b, trans: bool = False) -> np.ndarray:
        """Solve A x = b (or A^T x = b when ``trans``) to relative residual 1e-8."""
        A = self._A.T if trans else self._A
        t = 1 if trans else 0

        def once(rhs):
            return sla.lu_solve(self._lu, rhs, trans=t, check_finite=False)

        b = np.asarray(b, dtype=np.float64)
        if b.ndim == 1:
            return _refined_solve(A, once, b)
        return np.column_stack(
            [_refined_solve(A, once, b[:, j]) for j in range(b.shape[1])]
        )


def solve_spd(A, b) -> np.ndarray:
    """One-shot solve. Symmetric input takes the Cholesky path (with the
    jitter policy); nonsymmetric input is routed to dense LU. Both enforce
    ``||Ax - b|| <= 1e-8 ||b||``."""
    A = _as_square(A)
    scale = np.max(np.abs(A)) or 1.0
    if np.max(np.abs(A - A.T)) <= 1e-12 * scale:
        return SpdFactor(A).solve(b)
    return LuFactor(A).solve(b)


def _power_norm(matvec, n: int, iters: int) -> float:
    """Largest singular value estimate of a symmetric PSD operator."""
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = nw
        v = w / nw
    return float(lam)


# ---------------------------------------------------------------------------
# graph-TV proximal map
# ---------------------------------------------------------------------------


def tv_prox(
    g: SimilarityGraph,
    z,
    weight: float,
    *,
    tol: float = 1e-6,
    max_iters: int = 500,
) -> tuple[np.ndarray, ProxTrace]:
    """Minimize ``weight * graph_tv(g, x) + 0.5 * ||x - z||^2``.

    Primal-dual iteration on the weighted edge-difference operator with equal
    step sizes ``0.99 / ||D||`` (operator norm from 20 power iterations,
    bounded by ``sqrt(2 * max degree)``). Stops when the duality gap drops
    below ``tol``, when the primal energy is flat to relative ``tol`` over 10
    iterations, or at ``max_iters``.

    Returns the minimizer and a :class:`ProxTrace`.
    """
    z = _check_node_function(g, z)
    if weight < 0:
        raise InvalidParameterError("weight must be nonnegative")
    if weight == 0.0 or g.n_edges == 0:
        return z.copy(), ProxTrace(0, [], 0.0)

    n = g.n_nodes
    sw = np.sqrt(g.edge_w)
    cap = 2.0 * weight * sw  # dual box radius per edge
    rows = np.arange(g.n_edges)
    D = sp.csr_matrix(
        (
            np.concatenate([sw, -sw]),
            (np.concatenate([rows, rows]), np.concatenate([g.edge_i, g.edge_j])),
        ),
        shape=(g.n_edges, n),
    )
    Dt = D.T.tocsr()

    norm_est = _power_norm(lambda v: Dt @ (D @ v), n, 20)
    norm_bound = 2.0 * float(np.max(g.degrees))
    op_norm = np.sqrt(min(max(norm_est, 1e-30), norm_bound))
    step = 0.99 / op_norm

    x = z.copy()
    x_bar = x.copy()
    q = np.zeros(g.n_edges)
    energies: list[float] = []
    gap = np.inf

    def primal_energy(xv):
        return float(
            2.0 * weight * np.sum(g.edge_w * np.abs(xv[g.edge_i] - xv[g.edge_j]))
            + 0.5 * np.sum((xv - z) ** 2)
        )

    it = 0
    for it in range(1, max_iters + 1):
        q = np.clip(q + step * (D @ x_bar), -cap, cap)
        x_old = x
        x = (x - step * (Dt @ q) + step * z) / (1.0 + step)
        x_bar = 2.0 * x - x_old
        e_now = primal_energy(x)
        energies.append(e_now)
        if it % 10 == 0 or it == max_iters:
            dtq = Dt @ q
            dual = float(dtq @ z - 0.5 * (dtq @ dtq))
            gap = e_now - dual
            if gap <= tol:
                break
            if len(energies) > 10:
                drop = abs(energies[-11] - e_now)
                if drop <= tol * max(1.0, abs(e_now)):
                    break
    if not np.isfinite(gap):
        dtq = Dt @ q
        gap = energies[-1] - float(dtq @ z - 0.5 * (dtq @ dtq))
    return x, ProxTrace(it, energies, float(max(gap, 0.0)))


# ---------------------------------------------------------------------------
# box + equality dual QP
# ---------------------------------------------------------------------------


def project_box_eq(v, y, mu: float) -> np.ndarray:
    """Euclidean projection of v onto {b : b@y = 0, 0 <= b <= mu}, y in {+-1}^m.

    Bisection on the equality multiplier of the clipped affine map
    ``nu -> y @ clip(v - nu*y, 0, mu)``, which is continuous and nonincreasing.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if v.size != y.size:
        raise DimensionError("v and y must have the same length")
    if mu < 0:
        raise InvalidParameterError("mu must be nonnegative")
    if mu == 0.0:
        return np.zeros_like(v)

    span = float(np.max(np.abs(v))) + mu + 1.0
    lo, hi = -span, span

    def phi(nu):
        return float(y @ np.clip(v - nu * y, 0.0, mu))

    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    return np.clip(v - nu * y, 0.0, mu)


def qp_box_eq(
    Q,
    p,
    y,
    mu: float,
    *,
    tol: float = 1e-6,
    max_iters: int = 5000,
    beta0=None,
) -> DualSolution:
    """Maximize ``b@1 - 0.5*b@Q@b - b@p`` over ``{b@y = 0, 0 <= b <= mu}``.

    Projected gradient ascent with exact projection onto the feasible set and
    a Barzilai-Borwein step (fallback 1/L, L from power iteration). Terminates
    when the projected-gradient norm at the reference step drops below ``tol``
    or at ``max_iters``. ``Q`` may be a dense array or a scipy sparse matrix;
    it must be symmetric PSD.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    m = y.size
    if not np.all(np.abs(y) == 1.0):
        raise InvalidParameterError("y must be a +-1 vector")
    if np.isscalar(p):
        p = np.full(m, float(p))
    else:
        p = np.asarray(p, dtype=np.float64).ravel()
    if p.size != m:
        raise DimensionError("p and y must have the same length")
    if mu < 0:
        raise InvalidParameterError("mu must be nonnegative")
    if mu == 0.0:
        if np.all(y == y[0]):
            raise InfeasibleConstraintsError(
                "equality with one-sided labels and mu = 0 leaves no feasible point"
            )
        beta = np.zeros(m)
        return DualSolution(beta, 0.0, {"eq": 0.0, "box": 0.0, "stationarity": 0.0}, 0, 0.0)

    q_lin = 1.0 - p  # minimize F(b) = 0.5 b Q b - q_lin @ b

    def matvec(b):
        out = Q @ b
        return np.asarray(out).ravel()

    L = _power_norm(matvec, m, 30)
    t_ref = 1.0 / max(L, 1e-12)

    beta = project_box_eq(np.zeros(m) if beta0 is None else beta0, y, mu)
    grad = matvec(beta) - q_lin
    t = t_ref
    f_hist: list[float] = []
    pg_norm = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        ref = project_box_eq(beta - t_ref * grad, y, mu)
        pg_norm = float(np.linalg.norm(ref - beta) / t_ref)
        if pg_norm <= tol:
            break
        beta_new = project_box_eq(beta - t * grad, y, mu)
        s = beta_new - beta
        grad_new = matvec(beta_new) - q_lin
        u = grad_new - grad
        su = float(s @ u)
        if su > 1e-30:
            t = float(np.clip((s @ s) / su, 1e-5 * t_ref, 1e5 * t_ref))
        else:
            t = t_ref
        f_new = float(0.5 * beta_new @ grad_new - 0.5 * q_lin @ beta_new)
        if f_hist and f_new > max(f_hist[-10:]) + 1e-10 * (1 + abs(f_new)):
            t = t_ref
        f_hist.append(f_new)
        beta, grad = beta_new, grad_new

    obj = float(beta @ np.ones(m) - 0.5 * beta @ matvec(beta) - beta @ p)
    grad_asc = q_lin - matvec(beta)
    free = (beta > tol) & (beta < mu - tol)
    nu = float(np.mean(grad_asc[free] * y[free])) if np.any(free) else 0.0
    kkt = {
        "eq": float(abs(beta @ y)),
        "box": float(max(0.0, -beta.min(), (beta - mu).max())),
        "stationarity": pg_norm if np.isfinite(pg_norm) else 0.0,
    }
    return DualSolution(beta, obj, kkt, it, nu)


# ---------------------------------------------------------------------------
# simplex projection and renormalization
# ---------------------------------------------------------------------------


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {u : sum(u) = 1, u >= 0} by Michelot's
    finite active-set iteration."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size < 1:
        raise InvalidParameterError("need at least one coordinate")
    active = np.ones(v.size, dtype=bool)
    tau = (v.sum() - 1.0) / v.size
    while True:
        # the active residuals sum to 1, so at least one stays positive
        keep = active & (v - tau > 0.0)
        if np.array_equal(keep, active) or not keep.any():
            break
        active = keep
        tau = (v[active].sum() - 1.0) / active.sum()
    return np.maximum(v - tau, 0.0)


def project_simplex_rows(V) -> np.ndarray:
    """Row-wise simplex projection of an (n, c) array (vectorized Michelot)."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    n, c = V.shape
    active = np.ones_like(V, dtype=bool)
    tau = (V.sum(axis=1) - 1.0) / c
    for _ in range(c + 1):
        keep = active & (V - tau[:, None] > 0.0)
        # rows that converged (or degenerated to empty) stop changing
        done = ~keep.any(axis=1)
        keep[done] = active[done]
        if np.array_equal(keep, active):
            break
        active = keep
        tau = ((V * active).sum(axis=1) - 1.0) / active.sum(axis=1)
    return np.maximum(V - tau[:, None], 0.0)


def normalize_ball_zero_mean(f, scale: float) -> np.ndarray:
    """Rescale to ||f||_2 = scale, then subtract the mean (in that order).

    Raises on zero input; a constant input collapses to zeros and is flagged
    with a RuntimeWarning.
    """
    f = np.asarray(f, dtype=np.float64).ravel()
    if scale <= 0:
        raise InvalidParameterError("scale must be positive")
    norm = np.linalg.norm(f)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    out = (scale / norm) * f
    out = out - out.mean()
    if np.allclose(out, 0.0):
        warnings.warn(
            "constant input collapsed to zero after centering", RuntimeWarning
        )
    return out


def center_median(x) -> float:
    """Median used by the ratio-descent loops: midpoint of the central order
    statistics for even length.

    Any value inside the central interval minimizes the l1 deviation, so the
    ratio energies are unaffected by this choice; the midpoint keeps the
    centering step symmetric on balanced two-level vectors (an endpoint
    median would zero out one class entirely)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise DimensionError("median of empty vector")
    return float(np.median(x))
