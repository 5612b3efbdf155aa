"""Convex decompositions of stochastic weights into patterns.

``decompose_finite`` is the classical Birkhoff-von Neumann peeling for
doubly stochastic matrices. ``decompose_family`` does the same for a
G1-stochastic weight on any finite family satisfying (g1) and (g2), by
walking to a vertex of the face of the current weight. ``approximate_decompose``
handles rule-generated infinite families: truncate, consolidate the tail
mass of every set onto one vertex, decompose the finite part exactly and
extend every finite pattern to a full pattern with fresh vertices.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, CompletionImpossible, NotDoublyStochastic, PreconditionFailed
from .graphs import (SetFamily, check_g1, check_g2, find_admissible_cycle, is_pattern,
                     seminorm_pk, validate_stochastic)

TOL = 1e-10


@dataclass
class ConvexDecomposition:
    """terms[i] = (alpha_i, pattern_i); a pattern is the set of vertices carrying 1."""

    terms: list
    residual_pk: list = field(default_factory=list)
    depth: Optional[int] = None  # completions are listed on the first ``depth`` sets

    def coefficient_sum(self):
        return sum((a for a, _ in self.terms), Fraction(0) if self.exact else 0.0)

    @property
    def exact(self) -> bool:
        return all(isinstance(a, Fraction) for a, _ in self.terms)

    def weight(self) -> dict:
        out: dict = {}
        for a, pat in self.terms:
            for v in pat:
                out[v] = out.get(v, 0) + a
        return out

    def matrix(self, n: int) -> np.ndarray:
        m = np.zeros((n, n))
        for a, pat in self.terms:
            for (i, j) in pat:
                m[i, j] += float(a)
        return m


# --- bipartite matching ----------------------------------------------------


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int,
                  match_l: Optional[list] = None) -> list:
    """Maximum matching; ``adj[u]`` lists right neighbours of left vertex u.

    An initial partial matching may be supplied (it is repaired, not rebuilt).
    Returns match_l with -1 for unmatched left vertices.
    """
    n_left = len(adj)
    match_l = [-1] * n_left if match_l is None else list(match_l)
    match_r = [-1] * n_right
    for u, v in enumerate(match_l):
        if v != -1:
            match_r[v] = u
    INF = n_left + n_right + 1

    while True:
        dist = [INF] * n_left
        q = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not found:
            return match_l

        def dfs(u):
            for v in adj[u]:
                w = match_r[v]
                if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                    match_l[u] = v
                    match_r[v] = u
                    return True
            dist[u] = INF
            return False

        for u in range(n_left):
            if match_l[u] == -1:
                dfs(u)


def hall_witness(adj: Sequence[Sequence[int]], match_l: list, n_right: int) -> tuple[list, list]:
    """Rows S with |N(S)| < |S|, grown from an unmatched row along alternating paths."""
    match_r = [-1] * n_right
    for u, v in enumerate(match_l):
        if v != -1:
            match_r[v] = u
    start = match_l.index(-1)
    rows, cols = {start}, set()
    q = deque([start])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in cols:
                cols.add(v)
                w = match_r[v]
                if w != -1 and w not in rows:
                    rows.add(w)
                    q.append(w)
    return sorted(rows), sorted(cols)


# --- finite doubly stochastic matrices -------------------------------------


def _as_rows(w) -> tuple[list, bool]:
    rows = [list(r) for r in (w.tolist() if isinstance(w, np.ndarray) else w)]
    exact = all(isinstance(x, (int, Fraction)) for r in rows for x in r)
    if exact:
        rows = [[Fraction(x) for x in r] for r in rows]
    else:
        rows = [[float(x) for x in r] for r in rows]
    return rows, exact


def decompose_finite(w, tol: float = TOL) -> ConvexDecomposition:
    """Birkhoff-von Neumann: peel off permutations found by maximum matching.

    Each round finds a perfect matching on the current support and subtracts
    the smallest matched entry, which zeroes at least one entry. The previous
    matching is repaired rather than recomputed.
    """
    r, exact = _as_rows(w)
    n = len(r)
    if any(len(row) != n for row in r):
        raise PreconditionFailed("matrix must be square")
    t = 0 if exact else tol
    bad = [("row", i, sum(r[i])) for i in range(n) if abs(sum(r[i]) - 1) > t]
    bad += [("col", j, sum(r[i][j] for i in range(n))) for j in range(n)
            if abs(sum(r[i][j] for i in range(n)) - 1) > t]
    bad += [("entry", (i, j), r[i][j]) for i in range(n) for j in range(n) if r[i][j] < -t]
    if bad:
        raise NotDoublyStochastic("not doubly stochastic", witness=bad)
    zero = 0 if exact else 1e-15
    for i in range(n):
        for j in range(n):
            if r[i][j] <= zero:
                r[i][j] = type(r[i][j])(0)
    terms = []
    match = None
    while True:
        adj = [[j for j in range(n) if r[i][j] > zero] for i in range(n)]
        if not any(adj):
            break
        if match is not None:
            match = [j if j != -1 and r[i][j] > zero else -1 for i, j in enumerate(match)]
        match = hopcroft_karp(adj, n, match)
        if -1 in match:
            if not exact and max(max(row) for row in r) <= tol:
                break  # float dust left after the last permutation
            rows, cols = hall_witness(adj, match, n)
            raise NotDoublyStochastic("support has no perfect matching",
                                      witness={"rows": rows, "neighbour_cols": cols})
        alpha = min(r[i][match[i]] for i in range(n))
        for i in range(n):
            j = match[i]
            r[i][j] -= alpha
            if r[i][j] <= zero:
                r[i][j] = type(r[i][j])(0)
        terms.append((alpha, frozenset((i, match[i]) for i in range(n))))
    return ConvexDecomposition(terms)


# --- general finite families -----------------------------------------------


def _is_integral(x, t) -> bool:
    return abs(x) <= t or abs(x - 1) <= t


def _fractional_direction(w: dict, f: SetFamily, sums: dict, t) -> dict:
    """A +-1 direction on fractional vertices keeping tight-set sums fixed.

    Uses a pair of vertices sharing two sets, an admissible cycle, or a path
    whose ends leave through slack sets or vertices lying in a single set.
    """
    frac = [v for v in w if not _is_integral(w[v], t)]
    pairs: dict = {}
    for v in frac:
        ks = tuple(f.sets_of(v))
        if len(ks) == 2:
            if ks in pairs:
                return {pairs[ks]: 1, v: -1}
            pairs[ks] = v
    cyc = find_admissible_cycle(f, frac)
    if cyc is not None:
        return {v: (1 if j % 2 == 0 else -1) for j, v in enumerate(cyc)}
    fracset = set(frac)
    start = frac[0]
    d = {start: 1}

    def extend(v, via, sign):
        while True:
            if sums[via] < 1 - t:
                return
            nxt = next((u for u in f.members(via) if u in fracset and u not in d), None)
            if nxt is None:
                return
            sign = -sign
            d[nxt] = sign
            rest = [k for k in f.sets_of(nxt) if k != via]
            if not rest:
                return
            v, via = nxt, rest[0]

    for k in f.sets_of(start):
        extend(start, k, 1)
    return d


def _step_to_boundary(w: dict, f: SetFamily, d: dict, sums: dict, t) -> None:
    """Move w along d as far as the polytope allows (in place)."""
    limit = None

    def cap(x):
        nonlocal limit
        limit = x if limit is None or x < limit else limit

    for v, s in d.items():
        cap(w[v] if s < 0 else 1 - w[v])
    for k in {k for v in d for k in f.sets_of(v)}:
        delta = sum(d.get(v, 0) for v in f.members(k))
        if delta > 0:
            cap((1 - sums[k]) / delta)
    for v, s in d.items():
        w[v] += s * limit
        if abs(w[v]) <= t:
            w[v] = type(w[v])(0)
        elif abs(w[v] - 1) <= t:
            w[v] = type(w[v])(1)
    for k in {k for v in d for k in f.sets_of(v)}:
        sums[k] = sum(w.get(v, 0) for v in f.members(k))


def _set_sums(w: dict, f: SetFamily) -> dict:
    return {k: sum((w.get(v, 0) for v in f.members(k)), type(next(iter(w.values()), 0.0))(0))
            for k in range(f.count)}


def face_vertex(w: dict, f: SetFamily, tol: float = TOL) -> frozenset:
    """A pattern in the smallest face containing w (support inside w, tight sets kept)."""
    exact = all(isinstance(x, Fraction) for x in w.values())
    t = 0 if exact else tol
    cur = {v: x for v, x in w.items() if x != 0}
    sums = _set_sums(cur, f)
    while any(not _is_integral(x, t) for x in cur.values()):
        d = _fractional_direction(cur, f, sums, t)
        _step_to_boundary(cur, f, d, sums, t)
    return frozenset(v for v, x in cur.items() if abs(x - 1) <= t)


def decompose_family(w: dict, f: SetFamily, tol: float = TOL, max_terms: int = 100000) -> ConvexDecomposition:
    """Write a G1-stochastic weight on a finite (g1)+(g2) family as a convex combination of patterns."""
    ok, v = check_g1(f)
    if not ok:
        raise PreconditionFailed(f"vertex {v!r} lies in more than two sets", witness=v)
    g2 = check_g2(f)
    if not g2.ok:
        raise PreconditionFailed("family violates (g2)", witness=g2.odd_cycle)
    verdict = validate_stochastic(w, f, tol)
    if not verdict.valid:
        raise PreconditionFailed("weight is not G1-stochastic", witness=verdict.offending)
    exact = all(isinstance(x, (int, Fraction)) for x in w.values())
    one = Fraction(1) if exact else 1.0
    t = 0 if exact else tol
    cur = {v: (Fraction(x) if exact else float(x)) for v, x in w.items() if x != 0}
    mass = one
    terms = []
    while cur and mass > t:
        pat = face_vertex(cur, f, tol)
        sums = _set_sums(cur, f)
        cands = [cur[v] for v in pat]
        cands += [one - sums[k] for k in range(f.count) if not any(v in pat for v in f.members(k))]
        alpha = min(cands) if cands else one
        if alpha >= one - t:
            terms.append((mass, pat))
            break
        terms.append((mass * alpha, pat))
        nxt = {}
        for v, x in cur.items():
            y = (x - (alpha if v in pat else 0)) / (one - alpha)
            if abs(y) > t:
                nxt[v] = y
        cur = nxt
        mass *= one - alpha
        if len(terms) > max_terms:
            raise BudgetExceeded("too many terms", witness=len(terms))
    return ConvexDecomposition(terms)


# --- pattern completion ----------------------------------------------------


def complete_pattern(partial: dict, f: SetFamily, n: int, depth: Optional[int] = None,
                     width: int = 256) -> dict:
    """Extend a 0/1 weight living on the first n sets to a pattern.

    For every later G1 set that is not yet saturated, put a 1 on a fresh
    vertex: one lying in no earlier set and in no already saturated set.
    Only sets below ``depth`` are processed for rule-generated families.
    Fresh vertices are only placed on G1 sets, and saturated sets are skipped,
    so every set sum stays at most 1.
    """
    total = f.count if f.is_finite else depth
    if total is None:
        raise ValueError("rule-generated family needs a depth")
    ones = {v for v, x in partial.items() if x == 1}
    if any(x not in (0, 1) for x in partial.values()):
        raise PreconditionFailed("partial weight must take values 0 and 1")
    for v in ones:
        if not any(k < n for k in f.sets_of(v)):
            raise PreconditionFailed(f"vertex {v!r} lies outside the first {n} sets", witness=v)
    saturated: dict = {}
    for v in ones:
        for k in f.sets_of(v):
            saturated[k] = saturated.get(k, 0) + 1
    over = {k: c for k, c in saturated.items() if c > 1}
    if over:
        raise PreconditionFailed("more than one 1 in a set", witness=over)
    missing = [k for k in range(min(n, total)) if f.is_g1(k) and k not in saturated]
    if missing:
        raise PreconditionFailed("G1 set among the first n sets carries no 1", witness=missing)
    out = {v: 1 for v in ones}
    for k in range(n, total):
        if k in saturated or not f.is_g1(k):
            continue
        fresh = None
        for v in f.members(k, width):
            ks = f.sets_of(v)
            if min(ks) < k:
                continue  # lies in an earlier set
            if any(j in saturated for j in ks):
                continue
            fresh = v
            break
        if fresh is None:
            raise CompletionImpossible(f"set {k} has no fresh vertex", witness={"set": k})
        out[fresh] = 1
        for j in f.sets_of(fresh):
            saturated[j] = 1
    return out


# --- infinite families -----------------------------------------------------


@dataclass
class RuleWeight:
    """Weight on a rule-generated family.

    ``support(k)`` enumerates, in a fixed order, the vertices of G_k where the
    weight may be nonzero (finite list or infinite iterator). ``total(k)``
    optionally gives the exact set sum; it defaults to 1 on G1 sets.
    """

    value: Callable
    support: Callable[[int], Iterable]
    total: Optional[Callable[[int], float]] = None

    def get(self, v, default=0):
        return self.value(v)


def _head(rw: RuleWeight, k: int, m: int) -> tuple[list, bool]:
    """First m support vertices of set k, and whether more follow."""
    it = iter(rw.support(k))
    head = list(itertools.islice(it, m))
    more = next(it, None) is not None
    return head, more


def consolidate(rw: RuleWeight, f: SetFamily, n: int, m: int) -> dict:
    """The finite weight obtained from w on the first n sets by moving tail mass.

    For a set with infinite support g_1, g_2, ..., take j_k minimal with
    v_n(g_{j_k}) + sum_{j > j_k} w(g_j) <= 1 and g_j outside the other first-n
    sets for j >= j_k; here v_n(g) is w(g) if g lies in no later set, and the
    mass of that later set inside F_n otherwise. Entries past m are dropped
    and their mass is added at g_{j_k}.
    """
    base: dict = {}
    heads = {}
    for k in range(n):
        head, more = _head(rw, k, m)
        heads[k] = (head, more)
        for v in head:
            x = rw.value(v)
            if x != 0:
                base[v] = x
    out = dict(base)
    for k in range(n):
        head, more = heads[k]
        if not more:
            continue
        total = rw.total(k) if rw.total else 1
        tail_after = []  # sum_{j > i} w(g_j) for i = 0..len(head)-1, using the set total
        acc = total
        for v in head:
            acc -= rw.value(v)
            tail_after.append(acc)
        tail_m = tail_after[-1]
        jk = None
        for i, v in enumerate(head):
            later = [l for l in f.sets_of(v) if l >= n]
            if later:
                vn = sum(base.get(u, 0) for u in _members_in_first(f, later[0], base, n))
            else:
                vn = rw.value(v)
            clean = all(all(l == k or l >= n for l in f.sets_of(u)) for u in head[i:])
            if vn + tail_after[i] <= 1 + 1e-15 and clean:
                jk = i
                break
        if jk is None:
            raise BudgetExceeded(f"no admissible consolidation vertex within m={m} for set {k}",
                                 witness={"set": k, "m": m})
        g = head[jk]
        out[g] = out.get(g, 0) + tail_m
    return out


def _members_in_first(f: SetFamily, l: int, base: dict, n: int) -> list:
    return [u for u in base if l in f.sets_of(u)]


def approximate_decompose(w, f: SetFamily, K: int, eps: float, tol: float = TOL,
                          max_n: int = 4096, width: int = 64) -> ConvexDecomposition:
    """Finite convex combination of patterns with p_k(w - result) < eps for k < K.

    A finite weight on a finite family is decomposed exactly. Otherwise the
    truncation index n and the cut-off m are doubled until the seminorm
    profile meets eps; BudgetExceeded reports the last profile if max_n is
    reached.
    """
    if f.is_finite and not isinstance(w, RuleWeight):
        dec = decompose_family(dict(w), f, tol)
        diff = _difference(w, dec.weight())
        dec.residual_pk = [seminorm_pk(diff, f, k) for k in range(min(K, f.count))]
        return dec
    if not isinstance(w, RuleWeight):
        raise PreconditionFailed("rule-generated families need a RuleWeight")
    n = max(K, 1)
    m = 4
    profile = None
    while n <= max_n:
        wnm = consolidate(w, f, n, m)
        sets = [k for k in range(n)]
        later = sorted({l for v in wnm for l in f.sets_of(v) if l >= n})
        local = SetFamily([[v for v in _set_members_in(f, k, wnm)] for k in sets + later],
                          [i for i, k in enumerate(sets) if f.is_g1(k)])
        dec = decompose_family(wnm, local, tol)
        depth = n + width
        terms = []
        for a, pat in dec.terms:
            full = complete_pattern({v: 1 for v in pat}, f, n, depth=depth, width=width)
            terms.append((a, frozenset(full)))
        approx = ConvexDecomposition(terms, depth=depth).weight()
        profile = []
        for k in range(K):
            head, more = _head(w, k, 4 * m + 16)
            verts = set(head) | {v for v in approx if k in f.sets_of(v)}
            err = sum(abs(w.value(v) - approx.get(v, 0)) for v in verts)
            if more:
                # w is nonnegative, so its mass past the head bounds the unseen residual
                total = w.total(k) if w.total is not None else (1 if f.is_g1(k) else None)
                if total is None:
                    raise PreconditionFailed("set sum unknown for a non-G1 set; give RuleWeight.total",
                                             witness={"set": k})
                err += max(0, total - sum(w.value(v) for v in head))
            profile.append(err)
        if max(profile) < eps:
            return ConvexDecomposition(terms, profile, depth)
        n *= 2
        m *= 2
    raise BudgetExceeded("seminorm target not reached", witness=profile)


def _set_members_in(f: SetFamily, k: int, wnm: dict) -> list:
    return [v for v in wnm if k in f.sets_of(v)]


def _difference(a, b) -> dict:
    keys = set(a) | set(b)
    return {v: a.get(v, 0) - b.get(v, 0) for v in keys}
