"""Dual coordinate ascent on a tree: LocalSDCA at leaves, weighted aggregation above.

The dual variable ``alpha`` has one coordinate per data point and the primal
iterate is kept as ``w = A @ alpha`` with ``A[:, i] = x_i / (lam*m)``. Every
node works on private copies and hands back ``(delta_alpha, delta_w)`` for its
own index block; only the parent writes, scaling each child's delta by its
aggregation weight.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .dataset import Dataset, Partition
from .errors import ConfigError, DomainError
from .losses import BOX_TOL, LossFamily, LossSpec
from .timing import TimeModel, simulated_time_per_outer_iteration
from .topology import IterationSchedule, Topology, WeightSchedule, node_index_set


@dataclass(frozen=True)
class UpdateDelta:
    """Change of the dual block ``indices`` and the matching change of ``w``."""

    indices: np.ndarray
    delta_alpha: np.ndarray
    delta_w: np.ndarray


@dataclass(frozen=True)
class TraceRecord:
    outer_iteration: int
    simulated_time: float
    primal: float
    dual: float
    gap: float


@dataclass
class RunResult:
    trace: list[TraceRecord]
    alpha: np.ndarray
    w: np.ndarray


def _check_lambda(lam):
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")


def primal_value(ds: Dataset, spec: LossSpec, lam: float, w: np.ndarray) -> float:
    """``(lam/2)*||w||**2 + mean_i l_i(w . x_i)``."""
    a = ds.points @ w
    if spec.family is LossFamily.SQUARED:
        losses = (a - ds.labels) ** 2
    else:
        losses = np.maximum(0.0, 1.0 - ds.labels * a)
    return float(0.5 * lam * (w @ w) + losses.mean())


def dual_point(ds: Dataset, lam: float, alpha: np.ndarray) -> np.ndarray:
    """``w(alpha) = A @ alpha``."""
    _check_lambda(lam)
    return ds.points.T @ alpha / (lam * ds.m)


def dual_value(ds: Dataset, spec: LossSpec, lam: float, alpha: np.ndarray) -> float:
    """``-(lam/2)*||A alpha||**2 - mean_i l*_i(-alpha_i)``."""
    w = dual_point(ds, lam, alpha)
    y = ds.labels
    if spec.family is LossFamily.SQUARED:
        conj = 0.25 * alpha * alpha - y * alpha
    else:
        s = alpha * y
        bad = (s < -BOX_TOL) | (s > 1.0 + BOX_TOL)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"alpha[{i}]*y[{i}] = {s[i]!r} is outside [0, 1]")
        conj = -s
    # + 0.0 turns a signed zero into 0.0 so CSV output is stable
    return float(-0.5 * lam * (w @ w) - conj.mean()) + 0.0


@numba.njit(cache=True, nogil=True)
def _sdca_kernel(family, points, labels, norms2, lam_m, block, draws, alpha_block, w):
    n_steps = draws.shape[0]
    d = points.shape[1]
    a = alpha_block.copy()
    wl = w.copy()
    da = np.zeros(block.shape[0])
    dw = np.zeros(d)
    for h in range(n_steps):
        j = draws[h]
        i = block[j]
        y = labels[i]
        xn = norms2[i]
        wx = 0.0
        for c in range(d):
            wx += points[i, c] * wl[c]
        if family == 0:
            delta = (y - wx - 0.5 * a[j]) / (xn / lam_m + 0.5)
        else:
            if xn > 0.0:
                s = lam_m * (1.0 - y * wx) / xn + a[j] * y
            else:
                s = 1.0 if y * wx < 1.0 else 0.0
            s = min(1.0, max(0.0, s))
            delta = y * s - a[j]
        if delta == 0.0:
            continue
        a[j] += delta
        da[j] += delta
        scale = delta / lam_m
        for c in range(d):
            step = scale * points[i, c]
            wl[c] += step
            dw[c] += step
    return da, dw


def local_sdca(
    ds: Dataset,
    spec: LossSpec,
    lam: float,
    index_set: np.ndarray,
    alpha_block: np.ndarray,
    w: np.ndarray,
    T_p: int,
    rng: np.random.Generator,
    norms2: np.ndarray | None = None,
) -> UpdateDelta:
    """Run ``T_p`` randomized coordinate steps on the block ``index_set``.

    Coordinates are drawn uniformly with replacement. ``alpha_block`` holds
    the current values of ``alpha[index_set]`` and ``w`` must equal
    ``A @ alpha`` for the full vector. Inputs are not modified.
    """
    _check_lambda(lam)
    if T_p < 1:
        raise ConfigError(f"T_p must be >= 1, got {T_p}")
    block = np.ascontiguousarray(index_set, dtype=np.int64)
    if block.size == 0:
        return UpdateDelta(block, np.zeros(0), np.zeros(ds.d))
    if norms2 is None:
        norms2 = np.einsum("ij,ij->i", ds.points, ds.points)
    draws = rng.integers(0, block.size, size=int(T_p))
    da, dw = _sdca_kernel(
        int(spec.family),
        ds.points,
        ds.labels,
        norms2,
        float(lam) * ds.m,
        block,
        draws,
        np.ascontiguousarray(alpha_block, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
    )
    return UpdateDelta(block, da, dw)


class TreeSolver:
    """Generalized distributed dual coordinate ascent over a tree network.

    Each leaf receives its own random stream seeded from
    ``(seed, leaf id, outer-iteration path from the root)``, so results do not
    depend on whether children are evaluated in parallel.
    """

    def __init__(
        self,
        ds: Dataset,
        spec: LossSpec,
        lam: float,
        topology: Topology,
        partition: Partition,
        weights: WeightSchedule,
        iterations: IterationSchedule,
        seed: int | Sequence[int] = 0,
        parallel: bool = False,
        max_workers: int | None = None,
    ):
        _check_lambda(lam)
        partition.validate(ds.m)
        self.ds = ds
        self.spec = spec
        self.lam = float(lam)
        self.topology = topology
        self.partition = partition
        self.weights = weights
        self.iterations = iterations
        self.seed = (int(seed),) if np.isscalar(seed) else tuple(int(s) for s in seed)
        self.parallel = parallel
        self.max_workers = max_workers
        self._pool = None
        self._norms2 = np.einsum("ij,ij->i", ds.points, ds.points)
        self._index = {nid: node_index_set(topology, partition, nid) for nid in topology.nodes}
        for nid, node in topology.nodes.items():
            if self.iterations[nid] < 1:
                raise ConfigError(f"node {nid} has iteration count {self.iterations[nid]} < 1")
            if not node.is_leaf:
                betas = weights.for_parent(nid, len(node.children))
                if abs(sum(betas) - 1.0) > 1e-12 or min(betas) < 0 or max(betas) > 1:
                    raise ConfigError(f"weights of node {nid} must lie in [0, 1] and sum to 1, got {betas}")

    def _rng(self, node_id, path):
        return np.random.default_rng([*self.seed, int(node_id), *path])

    def index_set(self, node_id: int) -> np.ndarray:
        return self._index[node_id]

    def leaf_update(self, node_id, alpha, w, path) -> UpdateDelta:
        block = self._index[node_id]
        return local_sdca(
            self.ds, self.spec, self.lam, block, alpha[block], w,
            self.iterations[node_id], self._rng(node_id, path), norms2=self._norms2,
        )

    def _child_deltas(self, node_id, alpha, w, path):
        kids = self.topology.nodes[node_id].children
        if self._pool is None or len(kids) < 2:
            return [self.node_update(c, alpha, w, path) for c in kids]
        # only leaves go to the pool, so pool threads never wait on the pool
        futures = {}
        for c in kids:
            if self.topology.nodes[c].is_leaf:
                futures[c] = self._pool.submit(self.leaf_update, c, alpha, w, path)
        out = []
        for c in kids:
            out.append(futures[c].result() if c in futures else self.node_update(c, alpha, w, path))
        return out

    def outer_round(self, node_id: int, alpha: np.ndarray, w: np.ndarray, path: tuple = ()) -> None:
        """One aggregation round at an internal node, updating ``alpha`` and ``w`` in place.

        Every child works from the same snapshot; deltas are merged in child order.
        """
        node = self.topology.nodes[node_id]
        betas = self.weights.for_parent(node_id, len(node.children))
        deltas = self._child_deltas(node_id, alpha, w, path)
        step = np.zeros_like(w)
        for beta, delta in zip(betas, deltas):
            alpha[delta.indices] += beta * delta.delta_alpha
            step += beta * delta.delta_w
        w += step

    def node_update(self, node_id: int, alpha: np.ndarray, w: np.ndarray, path: tuple = ()) -> UpdateDelta:
        """Run a node's full schedule from ``(alpha, w)`` and return its delta.

        Leaves run LocalSDCA; internal nodes run ``T_i`` aggregation rounds.
        """
        node = self.topology.node(node_id)
        if node.is_leaf:
            return self.leaf_update(node_id, alpha, w, path)
        block = self._index[node_id]
        a = alpha.copy()
        wl = w.copy()
        for t in range(self.iterations[node_id]):
            self.outer_round(node_id, a, wl, (*path, t))
        return UpdateDelta(block, a[block] - alpha[block], wl - w)

    def record(self, t, time, alpha) -> TraceRecord:
        w_alpha = dual_point(self.ds, self.lam, alpha)
        primal = primal_value(self.ds, self.spec, self.lam, w_alpha)
        dual = dual_value(self.ds, self.spec, self.lam, alpha)
        return TraceRecord(t, time, primal, dual, primal - dual)

    def solve(
        self,
        time_model: TimeModel | None = None,
        callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    ) -> RunResult:
        """Run ``T_0`` root rounds from ``alpha = 0``, recording after each.

        The trace starts with the initial state at iteration 0 and time 0.
        """
        per_round = 1.0 if time_model is None else simulated_time_per_outer_iteration(
            self.topology, self.iterations, time_model)
        alpha = np.zeros(self.ds.m)
        w = np.zeros(self.ds.d)
        trace = [self.record(0, 0.0, alpha)]
        pool = ThreadPoolExecutor(self.max_workers) if self.parallel else None
        self._pool = pool
        try:
            for t in range(self.iterations[self.topology.root]):
                self.outer_round(self.topology.root, alpha, w, (t,))
                trace.append(self.record(t + 1, per_round * (t + 1), alpha))
                if callback is not None:
                    callback(t + 1, alpha, w)
        finally:
            self._pool = None
            if pool is not None:
                pool.shutdown()
        return RunResult(trace, alpha, w)


def run(
    ds: Dataset,
    spec: LossSpec,
    lam: float,
    topology: Topology,
    partition: Partition,
    weights: WeightSchedule,
    iterations: IterationSchedule,
    time_model: TimeModel | None = None,
    seed: int | Sequence[int] = 0,
    parallel: bool = False,
) -> list[TraceRecord]:
    """Convenience wrapper around :meth:`TreeSolver.solve` returning only the trace."""
    solver = TreeSolver(ds, spec, lam, topology, partition, weights, iterations, seed=seed, parallel=parallel)
    return solver.solve(time_model).trace
