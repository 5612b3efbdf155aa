"""Slow, independent reference oracles.

Nothing here imports the fast paths it is used to validate.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

CHUNK = 4096
TOL = 1e-9


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("MAJORIZE_THREADS", "1")))
    except ValueError:
        return 1


# --- doubly stochastic vertices --------------------------------------------


def _spanning_trees(n: int):
    """Yield every spanning tree of K_{n,n} as a list of (row, col) cells."""
    cells = [(i, j) for i in range(n) for j in range(n)]
    need = 2 * n - 1

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def rec(start, chosen, parent):
        if len(chosen) == need:
            yield list(chosen)
            return
        for idx in range(start, len(cells) - (need - len(chosen)) + 1):
            i, j = cells[idx]
            ra, rb = find(parent, i), find(parent, n + j)
            if ra == rb:
                continue
            p2 = list(parent)
            p2[ra] = rb
            chosen.append(cells[idx])
            yield from rec(idx + 1, chosen, p2)
            chosen.pop()

    yield from rec(0, [], list(range(2 * n)))


def _tree_solution(n: int, tree) -> Optional[tuple]:
    """Unique solution of the row/column-sum-one system supported on a tree."""
    row_left = [Fraction(1)] * n
    col_left = [Fraction(1)] * n
    value = {}
    edges = set(tree)
    while edges:
        progress = False
        for v in range(2 * n):
            inc = [e for e in edges if (e[0] == v if v < n else e[1] == v - n)]
            if len(inc) != 1:
                continue
            i, j = inc[0]
            amount = row_left[i] if v < n else col_left[j]
            value[(i, j)] = amount
            row_left[i] -= amount
            col_left[j] -= amount
            edges.discard((i, j))
            progress = True
        if not progress:
            return None
    if any(r != 0 for r in row_left) or any(c != 0 for c in col_left):
        return None
    if any(v < 0 for v in value.values()):
        return None
    return tuple(sorted((k, v) for k, v in value.items() if v != 0))


def enumerate_ds_vertices(n: int) -> list[np.ndarray]:
    """All vertices of the n x n doubly stochastic polytope by basis enumeration.

    Bases of the transportation system are spanning trees of K_{n,n}; each
    feasible basic solution is a vertex. Exact rational arithmetic throughout.
    """
    if not 1 <= n <= 5:
        raise ValueError("n must be in 1..5")
    found = set()
    for tree in _spanning_trees(n):
        sol = _tree_solution(n, tree)
        if sol is not None:
            found.add(sol)
    out = []
    for sol in sorted(found):
        m = np.zeros((n, n))
        for (i, j), v in sol:
            m[i, j] = float(v)
        out.append(m)
    return out


# --- exhaustive Q_x check --------------------------------------------------


def _subset_sums(values: Sequence, m: int) -> list:
    return [sum(c, Fraction(0) if isinstance(values[0], Fraction) else 0.0)
            for c in itertools.combinations(values, m)]


def brute_q(y: Sequence, x: Sequence, tol: float = 0.0) -> bool:
    """Literal check: every m-subset sum of y lies between the min and max m-subset sums of x."""
    y, x = list(y), list(x)
    if len(x) > 10 or len(y) > 10:
        raise ValueError("brute force limited to 10 entries")
    for m in range(1, len(y) + 1):
        xs = _subset_sums(x, m) if m <= len(x) else []
        hi = max(xs) if xs else float("-inf")
        lo = min(xs) if xs else float("inf")
        for s in _subset_sums(y, m):
            if s > hi + tol or s < lo - tol:
                return False
    return True


# --- LP feasibility of y = wx with w row-stochastic, column sums <= 1 ------


def substochastic_lp(y: Sequence[float], x: Sequence[float], tol: float = 1e-9) -> bool:
    """Feasibility of {w >= 0, rows sum to 1, columns sum to <= 1, wx = y}."""
    k, n = len(y), len(x)
    nv = k * n
    a_eq, b_eq = [], []
    for i in range(k):
        row = np.zeros(nv)
        row[i * n:(i + 1) * n] = 1
        a_eq.append(row)
        b_eq.append(1.0)
        row = np.zeros(nv)
        row[i * n:(i + 1) * n] = np.asarray(x, float)
        a_eq.append(row)
        b_eq.append(float(y[i]))
    a_ub = []
    for j in range(n):
        col = np.zeros(nv)
        col[j::n] = 1
        a_ub.append(col)
    # minimise the worst violation t of wx = y to get a robust tolerance test
    c = np.zeros(nv + 1)
    c[-1] = 1
    a_eq_t, a_ub_t, b_ub_t = [], [], []
    for idx, (row, b) in enumerate(zip(a_eq, b_eq)):
        if idx % 2 == 0:
            a_eq_t.append(np.append(row, 0.0))
        else:
            a_ub_t.append(np.append(row, -1.0))
            b_ub_t.append(b)
            a_ub_t.append(np.append(-row, -1.0))
            b_ub_t.append(-b)
    for col in a_ub:
        a_ub_t.append(np.append(col, 0.0))
        b_ub_t.append(1.0)
    res = linprog(c, A_ub=np.array(a_ub_t), b_ub=np.array(b_ub_t),
                  A_eq=np.array(a_eq_t), b_eq=np.ones(k),
                  bounds=[(0, None)] * (nv + 1), method="highs")
    return bool(res.status == 0 and res.fun <= tol)


def substochastic_image_vertices(x: Sequence[float], m: int) -> np.ndarray:
    """Distinct vertices of {wx : w is m x n row-stochastic with column sums <= 1}.

    The polytope of such w has the partial permutation matrices as vertices,
    so its image is the convex hull of the injective selections of m entries.
    Returns the points among those that are not in the hull of the others.
    """
    x = np.asarray(x, float)
    pts = np.array(sorted({tuple(x[list(p)]) for p in itertools.permutations(range(len(x)), m)}))
    keep = []
    for i, p in enumerate(pts):
        others = np.delete(pts, i, axis=0)
        if len(others) == 0 or not hull_membership(p, others).feasible:
            keep.append(p)
    return np.array(keep)


# --- Haar frames -----------------------------------------------------------


@dataclass
class FrameSample:
    seed: int
    m: int
    n: int
    values: np.ndarray  # shape (count, m): Rayleigh quotients per frame vector
    max_gram_error: float = 0.0


def _haar_frames(rng: np.random.Generator, count: int, n: int, m: int) -> np.ndarray:
    z = (rng.standard_normal((count, n, m)) + 1j * rng.standard_normal((count, n, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    ph = d / np.where(np.abs(d) == 0, 1, np.abs(d))
    return q * ph[:, None, :]


def sample_rayleigh(diag: Sequence[float], m: int, count: int, seed: int = 0) -> FrameSample:
    """Rayleigh quotients (A u_k, u_k) of Haar-random orthonormal m-frames for A = diag.

    Work is split into fixed chunks, each with its own child seed, so the
    output does not depend on MAJORIZE_THREADS.
    """
    a = np.asarray(diag, float)
    n = len(a)
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    chunks = [(k, min(CHUNK, count - k * CHUNK)) for k in range((count + CHUNK - 1) // CHUNK)]
    children = np.random.SeedSequence(seed).spawn(len(chunks))

    def run(arg):
        k, size = arg
        u = _haar_frames(np.random.default_rng(children[k]), size, n, m)
        gram = np.einsum("cji,cjk->cik", u.conj(), u)
        err = float(np.abs(gram - np.eye(m)).max()) if size else 0.0
        vals = np.einsum("cjk,j->ck", np.abs(u) ** 2, a)
        return vals, err

    with ThreadPoolExecutor(max_workers=max_threads()) as ex:
        parts = list(ex.map(run, chunks))
    if not parts:
        return FrameSample(seed, m, n, np.zeros((0, m)))
    vals = np.concatenate([p[0] for p in parts])
    return FrameSample(seed, m, n, vals, max(p[1] for p in parts))


# --- convex hull membership ------------------------------------------------


@dataclass
class HullVerdict:
    feasible: bool
    coefficients: Optional[np.ndarray] = None
    normal: Optional[np.ndarray] = None  # a.point > offset >= a.g for all generators
    offset: Optional[float] = None
    margin: float = 0.0


def hull_membership(point, generators, tol: float = TOL) -> HullVerdict:
    p = np.asarray(point, float)
    g = np.asarray(generators, float)
    k, d = g.shape
    a_eq = np.vstack([g.T, np.ones(k)])
    b_eq = np.append(p, 1.0)
    res = linprog(np.zeros(k), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * k, method="highs")
    if res.status == 0 and np.abs(a_eq @ res.x - b_eq).max() <= max(tol, 1e-9):
        return HullVerdict(True, coefficients=res.x)
    # separating hyperplane: maximise a.p - b subject to a.g <= b, |a|_inf <= 1
    c = np.append(-p, 1.0)
    a_ub = np.hstack([g, -np.ones((k, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(k),
                  bounds=[(-1, 1)] * d + [(None, None)], method="highs")
    a, b = res.x[:d], res.x[d]
    margin = float(a @ p - b)
    if margin <= tol:
        return HullVerdict(True, coefficients=None, margin=margin)
    return HullVerdict(False, normal=a, offset=float(b), margin=margin)


# --- Markus non-convexity evidence -----------------------------------------

MARKUS_Z = np.array([0, 1j, 1])
MARKUS_TARGET = np.array([0.5j, 0.5 + 0.5j, 0.5])


@dataclass
class MarkusReport:
    samples: int
    seed: int
    min_distance: Optional[float] = None
    argmin: Optional[int] = None
    closest: Optional[np.ndarray] = field(default=None, repr=False)


def markus_evidence(samples: int, seed: int = 1, target=None) -> MarkusReport:
    """Minimum distance from unistochastic images w z to the half-sum target.

    Evidence only: a positive minimum over finitely many samples is not a
    proof that the target is missed.
    """
    target = MARKUS_TARGET if target is None else np.asarray(target)
    if samples <= 0:
        return MarkusReport(0, seed)
    best, arg, closest = np.inf, None, None
    children = np.random.SeedSequence(seed).spawn((samples + CHUNK - 1) // CHUNK)
    for k, child in enumerate(children):
        size = min(CHUNK, samples - k * CHUNK)
        u = _haar_frames(np.random.default_rng(child), size, 3, 3)
        images = (np.abs(u) ** 2) @ MARKUS_Z
        dist = np.linalg.norm(images - target, axis=1)
        i = int(np.argmin(dist))
        if dist[i] < best:
            best, arg, closest = float(dist[i]), k * CHUNK + i, images[i]
    return MarkusReport(samples, seed, best, arg, closest)
