"""Set families, their incidence graphs, and stochastic weights on them.

A family is an ordered list of vertex sets G_0, G_1, ... (0-based here). Two
vertices are adjacent when some set contains both. A weight is a mapping
vertex -> nonnegative value; missing vertices carry 0.

Infinite families are described by rules (see ``SetFamily.from_rules``) and
every operation on them works on an explicit truncation.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import MalformedFamily, NotApplicable, PreconditionFailed

Vertex = Hashable
Weight = Mapping[Vertex, Union[float, Fraction]]

TOL = 1e-10


class SetFamily:
    """Ordered family of vertex sets plus the designated subfamily G1.

    ``g1`` is either an iterable of set indices or the string ``"all"``.
    """

    def __init__(self, sets: Sequence[Sequence[Vertex]] = (), g1: Union[str, Iterable[int]] = (),
                 *, rule: Optional[Callable[[int], Iterable[Vertex]]] = None,
                 locate: Optional[Callable[[Vertex], Sequence[int]]] = None,
                 count: Optional[int] = None, name: str = ""):
        self.name = name
        self.covered_by: Optional[int] = None  # F_n equals the whole vertex set
        self._rule = rule
        self._locate = locate
        if rule is None:
            self._sets = [list(s) for s in sets]
            self.count: Optional[int] = len(self._sets)
            for k, s in enumerate(self._sets):
                if len(set(s)) != len(s):
                    dup = next(v for v in s if s.count(v) > 1)
                    raise MalformedFamily(f"vertex {dup!r} repeated inside set {k}",
                                          witness={"set": k, "vertex": dup})
            self._index: dict = {}
            for k, s in enumerate(self._sets):
                for v in s:
                    self._index.setdefault(v, []).append(k)
        else:
            if locate is None:
                raise ValueError("rule-generated families need a locate function")
            self._sets = None
            self.count = count
        if g1 == "all":
            self._g1_all = True
            self._g1 = frozenset()
        else:
            self._g1_all = False
            self._g1 = frozenset(g1)
            if self.count is not None and any(not 0 <= k < self.count for k in self._g1):
                raise MalformedFamily("G1 index out of range", witness=sorted(self._g1))

    @classmethod
    def from_rules(cls, rule, locate, g1="all", count=None, name=""):
        return cls(rule=rule, locate=locate, g1=g1, count=count, name=name)

    @property
    def is_finite(self) -> bool:
        return self._rule is None

    def members(self, k: int, limit: Optional[int] = None) -> list:
        if self._sets is not None:
            return list(self._sets[k])
        it = iter(self._rule(k))
        return list(it if limit is None else itertools.islice(it, limit))

    def sets_of(self, v: Vertex) -> list[int]:
        if self._sets is not None:
            return list(self._index.get(v, ()))
        return sorted(self._locate(v))

    def is_g1(self, k: int) -> bool:
        return self._g1_all or k in self._g1

    def g1_indices(self, depth: Optional[int] = None) -> list[int]:
        n = self.count if depth is None else depth
        if n is None:
            raise ValueError("infinite family needs a depth")
        return [k for k in range(n) if self.is_g1(k)]

    def vertices(self) -> list:
        if self._sets is None:
            raise ValueError("infinite family has no finite vertex list")
        return list(self._index)

    def truncate(self, depth: int, width: Optional[int] = None) -> "SetFamily":
        """The first ``depth`` sets, each cut to ``width`` members for infinite sets."""
        n = depth if self.count is None else min(depth, self.count)
        sets = [self.members(k, width) for k in range(n)]
        return SetFamily(sets, [k for k in range(n) if self.is_g1(k)], name=self.name)

    def to_json(self) -> dict:
        if self._sets is None:
            raise ValueError("rule-generated family")
        g1 = list(range(self.count)) if self._g1_all else sorted(self._g1)
        return {"sets": [[_vid(v) for v in s] for s in self._sets], "G1": g1}

    @classmethod
    def from_json(cls, d: dict) -> "SetFamily":
        if "matrix" in d:
            m = d["matrix"]
            fam = matrix_to_family(int(m["nrows"]), int(m["ncols"]))
            if "G1" in d:
                return SetFamily(fam._sets, d["G1"])
            return fam
        if "sets" not in d:
            raise MalformedFamily("family JSON needs 'sets' or 'matrix'")
        sets = [[_parse_vid(v) for v in s] for s in d["sets"]]
        return cls(sets, d.get("G1", ()))


def _vid(v):
    return list(v) if isinstance(v, tuple) else v


def _parse_vid(v):
    return tuple(v) if isinstance(v, list) else v


# --- matrices as families --------------------------------------------------


def matrix_to_family(nrows: Optional[int], ncols: Optional[int], g1="all") -> SetFamily:
    """Rows and columns of an nrows x ncols matrix; vertex (i, j) is the (i, j) entry.

    ``None`` stands for infinitely many rows or columns. Finite matrices list
    all rows then all columns. With one infinite dimension the finite side
    comes first, which already covers every vertex. With both infinite the
    order alternates row 0, column 0, row 1, column 1, ...
    """
    if nrows is not None and ncols is not None:
        if nrows < 1 or ncols < 1:
            raise ValueError("matrix dimensions must be positive")
        sets = [[(i, j) for j in range(ncols)] for i in range(nrows)]
        sets += [[(i, j) for i in range(nrows)] for j in range(ncols)]
        return SetFamily(sets, g1, name=f"matrix {nrows}x{ncols}")

    def line(fixed, is_row, other):
        rng = itertools.count() if other is None else range(other)
        return (((fixed, t) if is_row else (t, fixed)) for t in rng)

    if nrows is not None:  # finitely many infinite rows, then columns
        def rule(k):
            return line(k, True, None) if k < nrows else line(k - nrows, False, nrows)

        def locate(v):
            return [v[0], nrows + v[1]]
    elif ncols is not None:
        def rule(k):
            return line(k, False, None) if k < ncols else line(k - ncols, True, ncols)

        def locate(v):
            return [v[1], ncols + v[0]]
    else:
        def rule(k):
            return line(k // 2, k % 2 == 0, None)

        def locate(v):
            return [2 * v[0], 2 * v[1] + 1]
    fam = SetFamily.from_rules(rule, locate, g1=g1, name=f"matrix {nrows or 'inf'}x{ncols or 'inf'}")
    fam.covered_by = nrows if nrows is not None else ncols
    return fam


def matrix_set_index(family_rows: Optional[int], family_cols: Optional[int], row: Optional[int] = None,
                     col: Optional[int] = None) -> int:
    """Index of a row or column set inside ``matrix_to_family``'s ordering."""
    if family_rows is not None and family_cols is not None:
        return row if row is not None else family_rows + col
    if family_rows is not None:
        return row if row is not None else family_rows + col
    if family_cols is not None:
        return col if col is not None else family_cols + row
    return 2 * row if row is not None else 2 * col + 1


# --- incidence graph -------------------------------------------------------


@dataclass
class IncidenceGraph:
    vertices: list
    adjacency: dict
    vertex_sets: dict


def build_graph(f: SetFamily) -> IncidenceGraph:
    if not f.is_finite:
        raise ValueError("truncate an infinite family before building its graph")
    verts = f.vertices()
    adj = {v: set() for v in verts}
    for k in range(f.count):
        s = f.members(k)
        for a, b in itertools.combinations(s, 2):
            adj[a].add(b)
            adj[b].add(a)
    return IncidenceGraph(verts, adj, {v: f.sets_of(v) for v in verts})


def check_g1(f: SetFamily) -> tuple[bool, Optional[Vertex]]:
    """Every vertex lies in at most two sets."""
    for v in f.vertices():
        if len(f.sets_of(v)) > 2:
            return False, v
    return True, None


@dataclass
class G2Result:
    ok: bool
    plus: list = field(default_factory=list)
    minus: list = field(default_factory=list)
    odd_cycle: Optional[list] = None  # vertices g_1 -> ... -> g_L -> g_1


def _meta_edges(f: SetFamily, vertices: Optional[Iterable[Vertex]] = None):
    """(set a, set b, vertex) for every vertex shared by two sets."""
    vs = f.vertices() if vertices is None else vertices
    out = []
    for v in vs:
        ks = f.sets_of(v)
        if len(ks) == 2:
            out.append((ks[0], ks[1], v))
    return out


def check_g2(f: SetFamily) -> G2Result:
    """2-colour the graph whose nodes are sets and whose edges are shared vertices.

    A proper colouring gives the split into G+ and G-; a colouring conflict
    yields an odd admissible cycle of vertices.
    """
    ok, v = check_g1(f)
    if not ok:
        raise PreconditionFailed(f"vertex {v!r} lies in more than two sets", witness=v)
    nbrs: dict = {k: [] for k in range(f.count)}
    for a, b, v in _meta_edges(f):
        nbrs[a].append((b, v))
        nbrs[b].append((a, v))
    colour: dict = {}
    parent: dict = {}
    for root in range(f.count):
        if root in colour:
            continue
        colour[root] = 0
        parent[root] = (None, None)
        q = deque([root])
        while q:
            a = q.popleft()
            for b, v in nbrs[a]:
                if b not in colour:
                    colour[b] = 1 - colour[a]
                    parent[b] = (a, v)
                    q.append(b)
                elif colour[b] == colour[a]:
                    return G2Result(False, odd_cycle=_odd_cycle(parent, a, b, v))
    plus = [k for k in range(f.count) if colour[k] == 0]
    minus = [k for k in range(f.count) if colour[k] == 1]
    return G2Result(True, plus, minus)


def _odd_cycle(parent, a, b, v) -> list:
    def chain(x):
        out = []
        while x is not None:
            out.append(x)
            x = parent[x][0]
        return out

    ca, cb = chain(a), chain(b)
    common = next(x for x in ca if x in set(cb))
    path_a = ca[:ca.index(common) + 1]
    path_b = cb[:cb.index(common) + 1]
    # vertices along set-path a -> common, then common -> b, then edge b -> a
    verts = [parent[x][1] for x in path_a[:-1]]
    verts_b = [parent[x][1] for x in path_b[:-1]]
    return verts + list(reversed(verts_b)) + [v]


def check_g3(f: SetFamily, depth: Optional[int] = None, width: int = 64) -> tuple[bool, list[int]]:
    """Greedy enumeration in which each new set brings a vertex not seen before.

    Returns (ok, order). A finite family always admits such an order (once no
    set brings anything new, the sets seen so far cover every vertex). For a
    rule-generated family the first ``depth`` sets are examined: ``ok`` holds
    if the family declares a finite covering prefix (``covered_by``), or if
    every set in the second half of the greedy order brings a new vertex.
    """
    n = f.count if f.is_finite else depth
    if n is None:
        raise ValueError("rule-generated family needs a depth")
    placed: set = set()
    remaining = list(range(n))
    order, stale = [], []

    def brings_new(k):
        return any(not (set(f.sets_of(v)) & placed) for v in f.members(k, width))

    while remaining:
        pick = next((k for k in remaining if brings_new(k)), None)
        if pick is None:
            stale.extend(remaining)
            order.extend(remaining)
            break
        order.append(pick)
        placed.add(pick)
        remaining.remove(pick)
    if f.is_finite:
        return True, order
    covered = getattr(f, "covered_by", None)
    if covered is not None and covered <= n:
        return True, order
    late = order[n // 2:]
    return not any(k in stale for k in late), order


# --- paths and cycles ------------------------------------------------------


def admissible_path(g: IncidenceGraph, u: Vertex, v: Vertex) -> Optional[list]:
    """Shortest path by BFS; shortest paths never have three consecutive vertices in one set."""
    if u not in g.adjacency or v not in g.adjacency:
        return None
    if u == v:
        return [u]
    prev = {u: None}
    q = deque([u])
    while q:
        a = q.popleft()
        for b in sorted(g.adjacency[a], key=repr):
            if b in prev:
                continue
            prev[b] = a
            if b == v:
                path = [b]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            q.append(b)
    return None


def is_admissible(f: SetFamily, walk: Sequence[Vertex], cyclic: bool = False) -> bool:
    n = len(walk)
    idx = range(n) if cyclic else range(1, n - 1)
    for i in idx:
        a, b, c = walk[i - 1], walk[i], walk[(i + 1) % n]
        if set(f.sets_of(a)) & set(f.sets_of(b)) & set(f.sets_of(c)):
            return False
    return True


def find_admissible_cycle(f: SetFamily, support: Iterable[Vertex]) -> Optional[list]:
    """A cycle of at least three support vertices with no three consecutive in one set.

    Found as a cycle in the graph on sets whose edges are support vertices
    lying in two sets; parallel edges are collapsed first.
    """
    support = [v for v in support]
    parent: dict = {}

    def find(a):
        while parent.setdefault(a, a) != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tree: dict = {}
    seen_pairs = set()
    for a, b, v in _meta_edges(f, support):
        if (a, b) in seen_pairs:
            continue
        seen_pairs.add((a, b))
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            tree.setdefault(a, []).append((b, v))
            tree.setdefault(b, []).append((a, v))
            continue
        # a and b already connected: the tree path plus v closes a cycle
        prev = {a: (None, None)}
        q = deque([a])
        while q:
            x = q.popleft()
            if x == b:
                break
            for y, w in tree.get(x, ()):
                if y not in prev:
                    prev[y] = (x, w)
                    q.append(y)
        cyc = []
        x = b
        while prev[x][0] is not None:
            cyc.append(prev[x][1])
            x = prev[x][0]
        return cyc[::-1] + [v]
    return None


# --- weights ---------------------------------------------------------------


def set_sum(w: Weight, f: SetFamily, k: int, width: Optional[int] = None):
    vals = [w.get(v, 0) for v in f.members(k, width)]
    return sum(vals, Fraction(0)) if all(isinstance(x, (int, Fraction)) for x in vals) else sum(map(float, vals))


@dataclass
class StochasticVerdict:
    valid: bool
    offending: list = field(default_factory=list)  # (set index or vertex, value, reason)


def validate_stochastic(w: Weight, f: SetFamily, tol: float = TOL, depth: Optional[int] = None,
                        width: Optional[int] = None) -> StochasticVerdict:
    """Set sums <= 1 everywhere and = 1 on G1 sets; exact for rational weights."""
    exact = all(isinstance(x, (int, Fraction)) for x in w.values())
    t = 0 if exact else tol
    bad = []
    for v, x in w.items():
        if x < -t:
            bad.append((v, x, "negative"))
    n = f.count if depth is None else (depth if f.count is None else min(depth, f.count))
    if n is None:
        raise ValueError("infinite family needs a depth")
    for k in range(n):
        s = set_sum(w, f, k, width)
        if s > 1 + t:
            bad.append((k, s, "sum exceeds 1"))
        elif f.is_g1(k) and s < 1 - t:
            bad.append((k, s, "G1 sum below 1"))
    return StochasticVerdict(not bad, bad)


def is_pattern(w: Weight, f: SetFamily, tol: float = 0.0) -> bool:
    """0/1 values, at most one 1 per set and exactly one per G1 set."""
    for x in w.values():
        if not (abs(x) <= tol or abs(x - 1) <= tol):
            return False
    ones = {v for v, x in w.items() if abs(x - 1) <= tol}
    for k in range(f.count):
        c = sum(1 for v in f.members(k) if v in ones)
        if c > 1 or (f.is_g1(k) and c != 1):
            return False
    return True


def seminorm_pk(w: Weight, f: SetFamily, k: int, width: Optional[int] = None) -> float:
    """l1 norm of w on the set G_k."""
    return sum(abs(w.get(v, 0)) for v in f.members(k, width))


def norm_S(w: Weight, f: SetFamily, depth: Optional[int] = None) -> tuple[float, bool]:
    """(sup of p_k over the first ``depth`` sets, exact flag)."""
    n = f.count if depth is None else (depth if f.count is None else min(depth, f.count))
    if n is None:
        raise ValueError("infinite family needs a depth")
    val = max((seminorm_pk(w, f, k) for k in range(n)), default=0)
    return val, f.count is not None and n == f.count


# --- extreme points: the three split constructions -------------------------


@dataclass
class SplitResult:
    outcome: str  # "pattern_certificate" | "split"
    w_plus: Optional[dict] = None
    w_minus: Optional[dict] = None
    case: Optional[int] = None  # 1 shared pair, 2 cycle, 3 tree recursion
    detail: dict = field(default_factory=dict)


def _support_components(w: Weight, f: SetFamily, start: Vertex) -> list:
    comp = [start]
    seen = {start}
    q = deque([start])
    while q:
        a = q.popleft()
        for k in f.sets_of(a):
            for b in f.members(k):
                if b not in seen and w.get(b, 0) > 0:
                    seen.add(b)
                    comp.append(b)
                    q.append(b)
    return comp


def _half(x):
    return x / 2 if isinstance(x, Fraction) else 0.5 * x


def extreme_split(w: Weight, f: SetFamily, tol: float = TOL) -> SplitResult:
    """Certify w as a pattern or write it as the midpoint of two stochastic weights.

    Cases, applied in order on the support component of a fractional vertex:
    (1) two vertices lying in the same two sets: shift mass between them;
    (2) an admissible cycle: alternate +eps/-eps around it;
    (3) otherwise the component is a tree: multiplicative perturbations
        (1 +- eps) propagated from a root, with eps shrinking along the tree
        by the factor w/(1-w) so that every set sum stays within bounds.
    """
    if not f.is_finite:
        raise ValueError("truncate infinite families first")
    w = {v: x for v, x in w.items() if x != 0}
    if is_pattern(w, f):
        return SplitResult("pattern_certificate")
    ok, v = check_g1(f)
    if not ok:
        raise PreconditionFailed(f"vertex {v!r} lies in more than two sets", witness=v)
    g2 = check_g2(f)
    if not g2.ok:
        raise NotApplicable("family has an odd admissible cycle", witness=g2.odd_cycle)
    verdict = validate_stochastic(w, f, tol)
    if not verdict.valid:
        raise PreconditionFailed("weight is not G1-stochastic", witness=verdict.offending)
    exact = all(isinstance(x, (int, Fraction)) for x in w.values())
    frac = [u for u in w if 0 < w[u] < 1]
    if not frac:
        raise PreconditionFailed("0/1 weight violating the pattern rules", witness=sorted(w, key=repr))
    comp = _support_components(w, f, frac[0])

    # (1) two vertices in the same pair of sets
    pairs: dict = {}
    for u in comp:
        ks = tuple(f.sets_of(u))
        if len(ks) == 2:
            if ks in pairs:
                g1_, g2_ = pairs[ks], u
                eps = _half(min(w[g1_], w[g2_]))
                wp, wm = dict(w), dict(w)
                wp[g1_] -= eps
                wp[g2_] += eps
                wm[g1_] += eps
                wm[g2_] -= eps
                return SplitResult("split", wp, wm, 1, {"vertices": [g1_, g2_], "eps": eps, "sets": list(ks)})
            pairs[ks] = u

    # (2) admissible cycle
    cyc = find_admissible_cycle(f, comp)
    if cyc is not None:
        eps = _half(min(w[u] for u in cyc))
        wp, wm = dict(w), dict(w)
        for j, u in enumerate(cyc):
            s = 1 if j % 2 == 0 else -1
            wp[u] += s * eps
            wm[u] -= s * eps
        return SplitResult("split", wp, wm, 2, {"cycle": cyc, "eps": eps})

    # (3) tree recursion
    one = Fraction(1) if exact else 1.0
    g0 = comp[0]
    w0 = w[g0]
    eps0 = min(one / 2, (one - w0) / (2 * w0))
    sign = {g0: 1}
    eps = {g0: eps0}
    level = {g0: 0}
    bounds = []
    q = deque([g0])
    while q:
        a = q.popleft()
        for k in f.sets_of(a):
            others = [b for b in f.members(k) if w.get(b, 0) > 0 and b not in sign]
            if not others:
                continue
            nxt = eps[a] * w[a] / (one - w[a])
            for b in others:
                sign[b] = -sign[a]
                eps[b] = nxt
                level[b] = level[a] + 1
                q.append(b)
            bounds.append({"set": k, "anchor": a, "level": level[a], "eps": eps[a], "eps_next": nxt})
    wp, wm = dict(w), dict(w)
    for u in sign:
        wp[u] = (one + sign[u] * eps[u]) * w[u]
        wm[u] = (one - sign[u] * eps[u]) * w[u]
    return SplitResult("split", wp, wm, 3, {"root": g0, "eps": eps, "levels": level, "sets": bounds})
