from fractions import Fraction as F

import numpy as np
import pytest

from majorize.birkhoff import RuleWeight
from majorize.graphs import SetFamily


def mix_partial_permutations(x, m, rng, terms=3):
    """m entries formed by a random convex combination of partial permutations applied to x."""
    x = np.asarray(x, float)
    c = rng.dirichlet(np.ones(terms))
    w = np.zeros((m, len(x)))
    for ci in c:
        w[np.arange(m), rng.permutation(len(x))[:m]] += ci
    return w @ x, w


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def sinkhorn(n, rng):
    a = rng.random((n, n)) + 0.01
    for _ in range(10000):
        a /= a.sum(1, keepdims=True)
        a /= a.sum(0, keepdims=True)
        if np.abs(a.sum(1) - 1).max() < 1e-15:
            break
    return a


def tridiagonal():
    """Infinite doubly stochastic matrix: 1/2 at (0, 0) and on both off-diagonals."""
    def value(v):
        i, j = v
        return 0.5 if (i, j) == (0, 0) or abs(i - j) == 1 else 0.0

    def support(k):
        i = k // 2
        near = [0, 1] if i == 0 else [i - 1, i + 1]
        return [(i, j) for j in near] if k % 2 == 0 else [(j, i) for j in near]

    return RuleWeight(value, support)


def one_over_k():
    """Disjoint sets, set k (0-based) holding k + 1 vertices of weight 1/(k + 1); G1 empty."""
    fam = SetFamily.from_rules(lambda k: [(k, i) for i in range(k + 1)], lambda v: [v[0]], g1=[])
    w = RuleWeight(lambda v: F(1, v[0] + 1), lambda k: [(k, i) for i in range(k + 1)], total=lambda k: 1)
    return fam, w


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store and print one acceptance line."""
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
