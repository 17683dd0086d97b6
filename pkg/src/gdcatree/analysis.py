"""Closed-form convergence quantities for tree-structured dual coordinate ascent."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .engine import dual_value
from .errors import ConvergenceError, DomainError, Unsupported
from .losses import SQUARED, LossFamily, LossSpec

INV_E = math.exp(-1.0)


def _require_smooth(gamma):
    if not gamma > 0:
        raise DomainError("this bound needs a smooth loss (gamma > 0); hinge loss is not supported")


def theta_p(lam: float, m: int, gamma: float, m_B: int, T_p: int) -> float:
    """Expected shrink factor of a leaf's local gap after ``T_p`` LocalSDCA steps.

    ``(1 - c1/m_B) ** T_p`` with ``c1 = lam*m*gamma / (1 + lam*m*gamma)``.
    """
    _require_smooth(gamma)
    if m_B < 1:
        raise DomainError(f"m_B must be >= 1, got {m_B}")
    if T_p < 0:
        raise DomainError(f"T_p must be >= 0, got {T_p}")
    c1 = lam * m * gamma / (1.0 + lam * m * gamma)
    return (1.0 - c1 / m_B) ** T_p


@dataclass(frozen=True)
class BoundInputs:
    lam: float
    m: int
    gamma: float
    thetas: Sequence[float]
    betas: Sequence[float]
    rho: float
    T: int

    def __post_init__(self):
        if len(self.thetas) != len(self.betas) or not self.thetas:
            raise DomainError("thetas and betas must be nonempty and of equal length")
        if any(not 0.0 <= t < 1.0 for t in self.thetas):
            raise DomainError(f"every theta must lie in [0, 1), got {list(self.thetas)}")
        if any(not 0.0 <= b <= 1.0 for b in self.betas) or abs(sum(self.betas) - 1.0) > 1e-9:
            raise DomainError(f"betas must lie in [0, 1] and sum to 1, got {list(self.betas)}")
        if self.rho < 0:
            raise DomainError(f"rho must be nonnegative, got {self.rho}")
        if self.T < 1:
            raise DomainError(f"T must be >= 1, got {self.T}")


def convergence_bound(inputs: BoundInputs) -> float:
    """Geometric rate of a node's expected dual sub-optimality after ``T`` rounds.

    ``(max_k (1 - (1 - theta_k) * beta_k) * c2) ** T`` with
    ``c2 = lam*m*gamma / (rho + lam*m*gamma)``.
    """
    _require_smooth(inputs.gamma)
    lmg = inputs.lam * inputs.m * inputs.gamma
    c2 = lmg / (inputs.rho + lmg)
    worst = max(1.0 - (1.0 - t) * b for t, b in zip(inputs.thetas, inputs.betas))
    return (worst * c2) ** inputs.T


def rho_min(
    ds: Dataset,
    lam: float,
    blocks: Sequence[Sequence[int]],
    tol: float = 1e-10,
    max_iter: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Largest eigenvalue of ``lam**2 m**2 (blockdiag(A_k^T A_k) - A_Q^T A_Q)``.

    Power iteration on the operator shifted by ``sum ||x_i||**2``, which
    bounds its most negative eigenvalue. Stops once the eigen-residual is below
    ``tol`` times the shift.
    """
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    blocks = [np.asarray(b, dtype=np.int64) for b in blocks]
    Q = np.concatenate(blocks) if blocks else np.empty(0, np.int64)
    if Q.size == 0:
        raise DomainError("rho_min needs a nonempty index set")
    if np.unique(Q).size != Q.size:
        raise DomainError("blocks must be disjoint")
    if len(blocks) == 1:
        return 0.0
    scale = lam * ds.m
    A = ds.points[Q].T / scale
    bounds = np.cumsum([0] + [b.size for b in blocks])
    # matrix-free: only A is stored
    s2 = scale * scale

    def apply(v):
        out = np.empty_like(v)
        for k in range(len(blocks)):
            sl = slice(bounds[k], bounds[k + 1])
            out[sl] = A[:, sl].T @ (A[:, sl] @ v[sl])
        out -= A.T @ (A @ v)
        return s2 * out

    shift = float(np.sum(A * A)) * s2
    if shift == 0.0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(Q.size)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        mv = apply(v)
        theta = float(v @ mv)
        resid = np.linalg.norm(mv - theta * v)
        if resid <= tol * shift:
            return max(theta, 0.0)
        nxt = mv + shift * v
        v = nxt / np.linalg.norm(nxt)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def lambert_w0(x: float, tol: float = 1e-12, max_iter: int = 100) -> float:
    """Principal branch of the Lambert W function by Halley iteration."""
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 of nan")
    if x < -INV_E:
        raise DomainError(f"lambert_w0 is real only for x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if x == -INV_E:
        return -1.0
    if math.isinf(x):
        return math.inf
    if x < -0.25:
        # series about the branch point
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 3.0:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol * max(1.0, abs(x)):
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if w_new == w:
            return w
        w = w_new
    raise ConvergenceError(f"Halley iteration for W({x!r}) did not converge")


def _check_tp_args(c1, c2, n_k, n_Q, r):
    if not (0.0 <= c1 < 1.0 and 0.0 <= c2 < 1.0):
        raise DomainError(f"c1 and c2 must lie in [0, 1), got c1={c1}, c2={c2}")
    if n_k < 1 or n_Q < n_k:
        raise DomainError(f"need 1 <= n_k <= n_Q, got n_k={n_k}, n_Q={n_Q}")
    if not c1 / n_k < 1.0 or not c2 * n_k / n_Q < 1.0:
        raise DomainError("need c1/n_k < 1 and c2*n_k/n_Q < 1")
    if r < 0:
        raise DomainError(f"r must be nonnegative, got {r}")


def optimal_tp(c1: float, c2: float, n_k: int, n_Q: int, r: float) -> float:
    """Closed-form local iteration count of a leaf holding ``n_k`` of ``n_Q`` points.

    ``W(a**r * ln(1 - c2*n_k/n_Q)) / ln(a) - r`` with ``a = 1 - c1/n_k``.
    """
    _check_tp_args(c1, c2, n_k, n_Q, r)
    a = 1.0 - c1 / n_k
    if c1 == 0.0:
        raise DomainError("c1 = 0 makes ln(1 - c1/n_k) vanish")
    arg = a ** r * math.log1p(-c2 * n_k / n_Q)
    if arg < -INV_E:
        raise DomainError(f"Lambert W argument {arg!r} is below -1/e for these parameters")
    return lambert_w0(arg) / math.log(a) - r


def tp_objective(T_p, c1: float, c2: float, n_k: int, n_Q: int, r: float, t_total: float = 1.0, t_lp: float = 1.0):
    """Bound value reached within ``t_total`` time units using ``T_p`` local steps.

    ``(1 - (1 - a**T_p) * c2*n_k/n_Q) ** (t_total / (t_lp*(T_p + r)))``.
    Works elementwise on arrays.
    """
    T = np.asarray(T_p, dtype=float)
    a = 1.0 - c1 / n_k
    base = 1.0 - (1.0 - a ** T) * c2 * n_k / n_Q
    with np.errstate(divide="ignore", invalid="ignore"):
        return base ** (t_total / (t_lp * (T + r)))


def optimal_tp_numeric(c1: float, c2: float, n_k: int, n_Q: int, r: float, t_max: int = 1_000_000) -> int:
    """Integer ``T_p`` in ``[1, t_max]`` minimizing :func:`tp_objective`.

    Compares logarithms, which preserves the ordering and avoids underflow.
    Ties go to the smallest ``T_p``.
    """
    _check_tp_args(c1, c2, n_k, n_Q, r)
    T = np.arange(1, int(t_max) + 1, dtype=float)
    a = 1.0 - c1 / n_k
    b = c2 * n_k / n_Q
    logval = np.log1p(-(1.0 - a ** T) * b) / (T + r)
    return int(T[np.argmin(logval)])


def block_suboptimality_gap(
    ds: Dataset,
    lam: float,
    alpha: np.ndarray,
    block: Sequence[int],
    spec: LossSpec = SQUARED,
) -> float:
    """Dual gain available from re-optimizing only ``alpha[block]`` (squared loss).

    The block subproblem is an unconstrained concave quadratic, solved exactly.
    """
    if spec.family is not LossFamily.SQUARED:
        raise Unsupported("the exact block gap is only available for squared loss")
    alpha = np.asarray(alpha, dtype=float)
    best = block_maximizer(ds, lam, alpha, block)
    return dual_value(ds, spec, lam, best) - dual_value(ds, spec, lam, alpha)


def block_maximizer(ds: Dataset, lam: float, alpha: np.ndarray, block: Sequence[int]) -> np.ndarray:
    """``alpha`` with the block replaced by its exact squared-loss maximizer."""
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    B = np.asarray(block, dtype=np.int64)
    m = ds.m
    A = ds.points.T / (lam * m)
    rest = alpha.copy()
    rest[B] = 0.0
    u = A @ rest
    AB = A[:, B]
    H = lam * AB.T @ AB + np.eye(B.size) / (2.0 * m)
    rhs = ds.labels[B] / m - lam * AB.T @ u
    out = alpha.copy()
    out[B] = np.linalg.solve(H, rhs)
    return out
