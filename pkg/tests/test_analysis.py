import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gdcatree.analysis import (
    BoundInputs,
    block_maximizer,
    block_suboptimality_gap,
    convergence_bound,
    lambert_w0,
    optimal_tp,
    optimal_tp_numeric,
    rho_min,
    theta_p,
    tp_objective,
)
from gdcatree.dataset import Dataset, make_synthetic, normalize, partition_by_fractions
from gdcatree.engine import TreeSolver, dual_point, dual_value, local_sdca
from gdcatree.errors import DomainError, Unsupported
from gdcatree.losses import HINGE, SQUARED
from gdcatree.topology import build_tree, compute_betas, schedule_iterations

from conftest import ridge_dual_optimum


def test_theta_p_examples():
    assert theta_p(1, 1, 1, 1, 0) == 1.0
    assert theta_p(1, 1, 1, 1, 1) == 0.5
    assert theta_p(1, 100, 0.5, 10, 50) < theta_p(1, 100, 0.5, 100, 50)
    with pytest.raises(DomainError):
        theta_p(1, 100, HINGE.gamma, 10, 5)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 10), st.integers(1, 10_000), st.integers(1, 1000), st.integers(1, 1000))
def test_theta_p_monotone(lam, m, m_B, T):
    assume(theta_p(lam, m, 0.5, m_B, T + 1) > 1e-300)
    assert theta_p(lam, m, 0.5, m_B, T + 1) < theta_p(lam, m, 0.5, m_B, T)
    assert theta_p(lam, m, 0.5, m_B + 1, T) > theta_p(lam, m, 0.5, m_B, T)


def test_bound_examples():
    assert convergence_bound(BoundInputs(1, 10, 0.5, [0.0], [1.0], 0.0, 3)) == 0.0
    # rho = 0 makes c2 = 1
    assert convergence_bound(BoundInputs(1, 10, 0.5, [0.5, 0.5], [0.5, 0.5], 0.0, 1)) == 0.75
    lmg = 1 * 10 * 0.5
    c2 = lmg / (2.0 + lmg)
    near = convergence_bound(BoundInputs(1, 10, 0.5, [1 - 1e-12, 0.2], [0.5, 0.5], 2.0, 2))
    assert near == pytest.approx(c2 ** 2, rel=1e-9)
    with pytest.raises(DomainError):
        convergence_bound(BoundInputs(1, 10, 0.0, [0.5], [1.0], 0.0, 1))
    with pytest.raises(DomainError):
        BoundInputs(1, 10, 0.5, [0.5], [0.4, 0.6], 0.0, 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 0.999), st.floats(0.01, 1)), min_size=1, max_size=6),
       st.floats(0, 100), st.integers(1, 50), st.floats(1e-3, 10), st.integers(1, 1000))
def test_bound_in_unit_interval(pairs, rho, T, lam, m):
    thetas = [p[0] for p in pairs]
    w = np.array([p[1] for p in pairs])
    betas = list(w / w.sum())
    betas[-1] = 1 - sum(betas[:-1])
    if betas[-1] < 0:
        return
    b = convergence_bound(BoundInputs(lam, m, 0.5, thetas, betas, rho, T))
    assert 0.0 <= b < 1.0


def _dense_rho(ds, lam, blocks):
    X = ds.points[np.concatenate(blocks)]
    G = X @ X.T
    BD = np.zeros_like(G)
    o = 0
    for b in blocks:
        n = len(b)
        BD[o:o + n, o:o + n] = G[o:o + n, o:o + n]
        o += n
    return float(np.linalg.eigvalsh(BD - G).max())


def test_rho_min_examples():
    ds = normalize(make_synthetic(12, 10, seed=0))
    assert rho_min(ds, 1.0, [np.arange(12)]) == 0.0
    blocks = [np.arange(0, 4), np.arange(4, 8), np.arange(8, 12)]
    assert rho_min(ds, 0.3, blocks) == pytest.approx(_dense_rho(ds, 0.3, blocks), rel=1e-6)
    # blocks spanning orthogonal coordinate subspaces
    pts = np.zeros((6, 4))
    pts[:3, :2] = np.random.default_rng(1).normal(size=(3, 2))
    pts[3:, 2:] = np.random.default_rng(2).normal(size=(3, 2))
    orth = normalize(Dataset(pts, np.zeros(6)))
    assert _dense_rho(orth, 1.0, [np.arange(3), np.arange(3, 6)]) == pytest.approx(0.0, abs=1e-12)
    assert rho_min(orth, 1.0, [np.arange(3), np.arange(3, 6)]) == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(DomainError):
        rho_min(ds, 1.0, [[0, 1], [1, 2]])


def test_lambert_examples():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-12)
    assert lambert_w0(-1 / math.e) == -1.0
    for x in np.linspace(-1, 5, 61):
        assert lambert_w0(x * math.exp(x)) == pytest.approx(x, abs=1e-9)
    with pytest.raises(DomainError):
        lambert_w0(-0.5)


def test_optimal_tp_proportional_at_zero_delay():
    # the leaf keeps a fixed 70% share of its cluster as both grow
    n = np.arange(100, 5001, 100)
    tp = np.array([optimal_tp(0.05, 0.05, int(k), int(round(k / 0.7)), 0.0) for k in n])
    ratio = tp / n
    assert ratio.max() / ratio.min() <= 1.2


def test_optimal_tp_numeric_flat_objective():
    assert optimal_tp_numeric(0.5, 0.0, 100, 1000, 5.0, t_max=1000) == 1


def test_optimal_tp_numeric_matches_dense_scan():
    args = (0.9, 0.5, 500, 1000, 10.0)
    T = np.arange(1, 5001)
    vals = tp_objective(T, *args, t_total=1000.0)
    assert optimal_tp_numeric(*args, t_max=5000) == int(T[np.argmin(vals)])


def test_optimal_tp_domain():
    with pytest.raises(DomainError):
        optimal_tp(1.2, 0.5, 10, 100, 1)
    with pytest.raises(DomainError):
        optimal_tp(0.5, 0.9, 500, 1000, 0)  # Lambert argument below -1/e


def test_block_gap_examples(ridge_small):
    lam = 0.5
    star = ridge_dual_optimum(ridge_small, lam)
    assert block_suboptimality_gap(ridge_small, lam, star, np.arange(5, 15)) == pytest.approx(0.0, abs=1e-12)
    alpha = np.random.default_rng(0).normal(size=ridge_small.m)
    full = block_suboptimality_gap(ridge_small, lam, alpha, np.arange(ridge_small.m))
    expect = dual_value(ridge_small, SQUARED, lam, star) - dual_value(ridge_small, SQUARED, lam, alpha)
    assert full == pytest.approx(expect, rel=1e-10)
    assert block_suboptimality_gap(ridge_small, lam, alpha, [3, 7]) >= 0
    with pytest.raises(Unsupported):
        block_suboptimality_gap(ridge_small, lam, alpha, [3], spec=HINGE)


def test_block_maximizer_is_stationary(ridge_small):
    lam = 0.2
    alpha = np.random.default_rng(3).normal(size=ridge_small.m)
    B = np.arange(0, 20, 3)
    best = block_maximizer(ridge_small, lam, alpha, B)
    # finite-difference gradient of the dual on the block vanishes
    h = 1e-6
    for i in B:
        e = np.zeros_like(best)
        e[i] = h
        g = (dual_value(ridge_small, SQUARED, lam, best + e) - dual_value(ridge_small, SQUARED, lam, best - e)) / (2 * h)
        assert abs(g) < 1e-7


def test_local_gap_shrinks_in_expectation(ridge_small):
    lam = 1.0
    block = np.arange(10, 30)
    alpha = np.zeros(ridge_small.m)
    w = np.zeros(ridge_small.d)
    before = block_suboptimality_gap(ridge_small, lam, alpha, block)
    after = []
    for s in range(60):
        d = local_sdca(ridge_small, SQUARED, lam, block, alpha[block], w, 20, np.random.default_rng(s))
        a = alpha.copy()
        a[block] += d.delta_alpha
        after.append(block_suboptimality_gap(ridge_small, lam, a, block))
    assert np.mean(after) < before
    assert max(after) <= before + 1e-12


def _rate_bound_check(lam, trials=200):
    ds = normalize(make_synthetic(60, 5, seed=0))
    top = build_tree([3])
    part = partition_by_fractions(ds, [1 / 6, 1 / 6, 2 / 3], top.leaves(), 0)
    betas = compute_betas(top, part)
    it = schedule_iterations(top, part, [1, 20])
    star = dual_value(ds, SQUARED, lam, ridge_dual_optimum(ds, lam))
    ratios = []
    for s in range(trials):
        tr = TreeSolver(ds, SQUARED, lam, top, part, betas, it, seed=s).solve().trace
        ratios.append((star - tr[1].dual) / (star - tr[0].dual))
    blocks = [part[leaf] for leaf in top.leaves()]
    thetas = [theta_p(lam, ds.m, SQUARED.gamma, len(b), 20) for b in blocks]
    bound = convergence_bound(BoundInputs(lam, ds.m, SQUARED.gamma, thetas, betas.for_parent(0, 3),
                                          rho_min(ds, lam, blocks), 1))
    return np.mean(ratios), np.std(ratios) / math.sqrt(trials), bound


def test_rate_bound_holds_empirically():
    mean, se, bound = _rate_bound_check(1.0)
    assert mean <= bound + 3 * se


@pytest.mark.xfail(strict=True, reason="with rho >> lam*m*gamma the stated rate shrinks below the observed one")
def test_rate_bound_small_lambda():
    mean, se, bound = _rate_bound_check(0.01)
    assert mean <= bound + 3 * se
