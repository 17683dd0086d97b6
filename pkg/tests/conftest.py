import numpy as np
import pytest

from gdcatree.dataset import Dataset, make_synthetic, normalize


def conj_ref(family, b, y):
    """Conjugate from its definition: sup over a dense grid of a*b - l(a)."""
    a = np.linspace(-60.0, 60.0, 1_200_001)
    loss = (a - y) ** 2 if family == "squared" else np.maximum(0.0, 1.0 - y * a)
    return float(np.max(a * b - loss))


def ridge_dual_optimum(ds, lam):
    """Maximizer of the squared-loss dual by a direct linear solve."""
    m = ds.m
    X = ds.points
    H = X @ X.T / (lam * m * m) + np.eye(m) / (2 * m)
    return np.linalg.solve(H, ds.labels / m)


@pytest.fixture
def ridge_small():
    return normalize(make_synthetic(40, 6, task="regression", seed=11))


@pytest.fixture
def svm_small():
    return normalize(make_synthetic(60, 6, task="classification", seed=12))


@pytest.fixture
def tiny():
    return Dataset(np.array([[0.6, 0.8], [1.0, 0.0], [0.0, 0.5]]), np.array([1.0, -1.0, 1.0]))


ACCEPTANCE_LINES = []


def report(number, title, ok, detail=""):
    """Record one acceptance criterion outcome for the end-of-run summary."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else ""))
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
