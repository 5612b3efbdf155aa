"""Realize prescribed diagonals against a prescribed spectrum.

The spectrum is a sequence x, read as the eigenvalues of A = diag(x). A
realization of y is an orthonormal family u_1, u_2, ... with (A u_i, u_i) = y_i.
Vectors are sparse maps from eigenbasis indices (1-based positions in the
descriptor of x) to (sign, squared coefficient). Squared coefficients stay
rational when x and y are, so Rayleigh quotients and orthonormality can be
checked without square roots.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linprog
from scipy.special import zeta

from .errors import BudgetExceeded, DomainViolation, Infeasible, NotApplicable
from .graphs import find_admissible_cycle, matrix_to_family
from .sequences import (
    FLOAT_TOL,
    INF,
    MembershipVerdict,
    SeqDescriptor,
    Tail,
    Witness,
    classify_space,
    hat_extension,
    partial_sum_max,
    q_membership,
    sup_attained,
    to_number,
    top_values,
)

DEFAULT_DEPTH = 64
SCAN_CAP = 1_000_000

Coeffs = dict  # eigen index -> (sign, squared coefficient)


# --- exact helpers ---------------------------------------------------------


def _is_square(q: Fraction) -> bool:
    if q < 0:
        return False
    n, d = q.numerator, q.denominator
    return math.isqrt(n) ** 2 == n and math.isqrt(d) ** 2 == d


def _rational_sqrt(q: Fraction) -> Fraction:
    return Fraction(math.isqrt(q.numerator), math.isqrt(q.denominator))


def roots_sum_is_zero(terms: Sequence[tuple[int, Fraction]]) -> bool:
    """Decide sum_k s_k sqrt(q_k) == 0 exactly for rationals q_k >= 0.

    Square roots of rationals whose ratio is not a rational square are
    linearly independent over Q, so the sum vanishes iff it vanishes within
    every class of rationally dependent roots.
    """
    classes: list[list] = []  # [representative, rational total]
    for s, q in terms:
        if q == 0:
            continue
        for c in classes:
            ratio = q / c[0]
            if _is_square(ratio):
                c[1] += s * _rational_sqrt(ratio)
                break
        else:
            classes.append([q, Fraction(s)])
    return all(c[1] == 0 for c in classes)


def _signed_sqrt(sign: int, sq) -> float:
    return sign * math.sqrt(float(sq))


def _close(a, b, exact: bool) -> bool:
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= FLOAT_TOL * max(1.0, abs(float(a)), abs(float(b)))


# --- results ---------------------------------------------------------------


@dataclass
class OrthonormalRealization:
    """Orthonormal vectors u_i with (diag(x) u_i, u_i) = rayleigh[i].

    ``indices`` are the 1-based positions in y that the vectors realize.
    """

    x: SeqDescriptor
    vectors: list
    rayleigh: list
    indices: list
    depth: int = DEFAULT_DEPTH
    complete: bool = True
    cases: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return all(isinstance(sq, Fraction) for v in self.vectors for _, sq in v.values()) and \
            all(isinstance(r, Fraction) for r in self.rayleigh)

    def coefficient(self, i: int, j: int) -> float:
        s, sq = self.vectors[i].get(j, (1, 0))
        return _signed_sqrt(s, sq)

    def support(self) -> list[int]:
        return sorted({j for v in self.vectors for j in v})

    def dense(self) -> tuple[np.ndarray, list[int]]:
        """Vectors as rows over the union of their supports."""
        cols = self.support()
        pos = {j: k for k, j in enumerate(cols)}
        u = np.zeros((len(self.vectors), len(cols)))
        for i, v in enumerate(self.vectors):
            for j, (s, sq) in v.items():
                u[i, pos[j]] = _signed_sqrt(s, sq)
        return u, cols

    def weight(self) -> dict:
        """Row-stochastic witness w_ij = c_ij^2 with columns summing to at most 1."""
        return {(i, j): sq for i, v in enumerate(self.vectors) for j, (_, sq) in v.items()}

    def gram_error(self) -> float:
        if not self.vectors:
            return 0.0
        u, _ = self.dense()
        return float(np.abs(u @ u.T - np.eye(len(u))).max())

    def realized_values(self) -> list:
        out = []
        for v in self.vectors:
            terms = [sq * self.x.entry(j) for j, (_, sq) in v.items()]
            out.append(sum(terms, Fraction(0)) if self.exact else math.fsum(float(t) for t in terms))
        return out

    def rayleigh_error(self) -> float:
        got = self.realized_values()
        return max((abs(float(a - b)) for a, b in zip(got, self.rayleigh)), default=0.0)

    def exact_orthonormal(self) -> bool:
        """Exact check of <u_i, u_k> = delta_ik (rational mode only)."""
        if not self.exact:
            raise ValueError("exact check needs rational squared coefficients")
        for i, v in enumerate(self.vectors):
            if sum((sq for _, sq in v.values()), Fraction(0)) != 1:
                return False
            for w in self.vectors[i + 1:]:
                common = v.keys() & w.keys()
                terms = [(v[j][0] * w[j][0], v[j][1] * w[j][1]) for j in common]
                if not roots_sum_is_zero(terms):
                    return False
        return True

    def weight_checks(self, tol: float = 1e-12) -> tuple[bool, bool]:
        """(rows sum to 1, columns sum to at most 1) for the derived w."""
        rows = [sum((sq for _, sq in v.values()), Fraction(0) if self.exact else 0.0) for v in self.vectors]
        cols: dict = {}
        for v in self.vectors:
            for j, (_, sq) in v.items():
                cols[j] = cols.get(j, 0) + sq
        t = 0 if self.exact else tol
        return all(abs(r - 1) <= t for r in rows), all(c <= 1 + t for c in cols.values())

    def to_json(self) -> dict:
        return {
            "indices": list(self.indices),
            "rayleigh": list(self.rayleigh),
            "vectors": [{str(j): [s, sq] for j, (s, sq) in sorted(v.items())} for v in self.vectors],
            "depth": self.depth,
            "complete": self.complete,
            "cases": self.cases,
            "gram": {"max_error": self.gram_error(), "rayleigh_error": self.rayleigh_error(),
                     "exact": self.exact and self.exact_orthonormal()},
        }


@dataclass
class InfeasibleWitness:
    """Why y was not realized. ``conclusive`` is False when the search merely ran out."""

    kind: str  # q_violation | multiplicity | unattained | length | bracket | undecided
    detail: dict = field(default_factory=dict)
    case: Optional[str] = None
    q_witness: Optional[Witness] = None
    conclusive: bool = True
    depth: int = DEFAULT_DEPTH

    def to_json(self) -> dict:
        d = {"kind": self.kind, "case": self.case, "conclusive": self.conclusive,
             "depth": self.depth, "detail": self.detail}
        if self.q_witness is not None:
            d["q_witness"] = self.q_witness.to_json()
        return d


# --- the operator wx -------------------------------------------------------


def _row_mass(r: Tail):
    """Sum of a weight tail's entries; rows must be summable and nonnegative."""
    if r.is_flat:
        if r.limit != 0:
            raise ValueError("row weights must tend to 0")
        return 0
    if r.kind == "divergent" or r.limit != 0 or r.sign < 0:
        raise ValueError("row weight tails must decrease to 0")
    if r.kind == "geometric":
        return r.scale * r.ratio / (1 - r.ratio)
    if r.ratio <= 1:
        raise ValueError("powerlaw row weights with exponent <= 1 are not summable")
    return float(r.scale) * float(zeta(float(r.ratio), 1))


def _numeric_series(term: Callable[[int], float]) -> float:
    total, n = 0.0, 1
    while n < SCAN_CAP:
        t = term(n)
        total += t
        if abs(t) < 1e-18 * max(1.0, abs(total)) and n > 8:
            return total
        n += 1
    raise BudgetExceeded("series did not settle", witness={"terms": n})


def _tail_product(r: Tail, t: Tail, row: int):
    """sum_n r(n) t(n) in closed form; DomainViolation when |t| is not r-summable."""
    mass = _row_mass(r)
    if r.is_flat:
        return 0
    geo = r.kind == "geometric"
    if t.kind == "divergent":
        if geo and 2 * r.ratio < 1:
            q = 2 * r.ratio
            return t.sign * t.scale * r.scale * q / (1 - q)
        raise DomainViolation(f"row {row} does not absorb the growth of x",
                              witness={"row": row, "reason": "divergent product series"})
    base = t.limit * mass
    if t.is_flat:
        return base
    if geo and t.kind == "geometric":
        q = r.ratio * t.ratio
        return base + t.sign * t.scale * r.scale * q / (1 - q)
    if not geo and t.kind == "powerlaw":
        return float(base) + t.sign * float(t.scale * r.scale) * float(zeta(float(r.ratio + t.ratio), 1))
    return float(base) + t.sign * float(t.scale) * _numeric_series(
        lambda n: float(r.entry(n)) * float(t.entry(n) - t.limit))


def apply_weight(w, x: SeqDescriptor) -> SeqDescriptor:
    """y = wx for finitely many rows.

    A row is a dict {column: weight} with 1-based columns, a list of weights
    for columns 1, 2, ..., or a SeqDescriptor laid out like x (same prefix
    length and tail count), whose tails are paired termwise with x's tails.
    """
    rows = list(w.tolist() if isinstance(w, np.ndarray) else w)
    out = []
    for i, row in enumerate(rows, start=1):
        if isinstance(row, SeqDescriptor):
            if len(row.prefix) != len(x.prefix) or len(row.tails) != len(x.tails):
                raise ValueError(f"row {i} is not laid out like x")
            total = sum((a * b for a, b in zip(row.prefix, x.prefix)), x.num(0))
            parts = [_tail_product(r, t, i) for r, t in zip(row.tails, x.tails)]
            if all(isinstance(p, (int, Fraction)) for p in parts) and isinstance(total, Fraction):
                total = total + sum(parts, Fraction(0))
            else:
                total = float(total) + math.fsum(float(p) for p in parts)
            out.append(total)
            continue
        items = row.items() if isinstance(row, dict) else enumerate(row, start=1)
        vals = [(int(j), to_number(v)) for j, v in items if v != 0]
        if x.is_finite and any(j > len(x) for j, _ in vals):
            raise ValueError(f"row {i} addresses a column beyond x")
        terms = [v * x.entry(j) for j, v in vals]
        exact = all(isinstance(t, Fraction) for t in terms)
        out.append(sum(terms, Fraction(0)) if exact else math.fsum(float(t) for t in terms))
    return SeqDescriptor.finite(out)


# --- two-point construction ------------------------------------------------


def _alpha(y, xj, xk):
    if xj == xk:
        if y != xj:
            raise Infeasible("degenerate bracket does not contain y", witness={"y": y, "xj": xj, "xk": xk})
        return Fraction(1) if isinstance(y, Fraction) else 1.0
    lo, hi = min(xj, xk), max(xj, xk)
    if not lo <= y <= hi:
        raise Infeasible("y lies outside the bracket", witness={"y": y, "xj": xj, "xk": xk})
    a = (y - xk) / (xj - xk)
    if isinstance(a, float):
        a = min(1.0, max(0.0, a))
    return a


def realize_two_point(y, xj, xk) -> tuple:
    """(alpha, u) with u = sqrt(alpha) e_j + sqrt(1 - alpha) e_k and Rayleigh value y."""
    y, xj, xk = (to_number(v) for v in (y, xj, xk))
    if not all(isinstance(v, Fraction) for v in (y, xj, xk)):
        y, xj, xk = float(y), float(xj), float(xk)
    a = _alpha(y, xj, xk)
    return a, (math.sqrt(a), math.sqrt(1 - a))


# --- deflation engine ------------------------------------------------------


@dataclass
class _Item:
    value: object
    vec: dict
    key: int  # lowest eigen index in the support, used for tie-breaks


def _unit(j: int, one) -> dict:
    return {j: (1, one)}


class _Stream:
    """Lazily materialized entries of one tail, restricted to a value range.

    ``positions`` yields the tail positions this stream may use (all of them,
    or every other one when a flat tail is shared by two pools).
    """

    def __init__(self, x: SeqDescriptor, ti: int, accept: Callable, positions: Iterator[int]):
        self.x, self.ti, self.t = x, ti, x.tails[ti]
        self.accept = accept
        self.positions = positions
        self.last = None
        self.done = False
        self.live = 0

    def _next(self) -> Optional[_Item]:
        p = next(self.positions)
        v = self.x.num(self.t.entry(p))
        if not self.accept(v):
            self.done = True  # monotone: once out of range, it stays out
            return None
        self.last = v
        j = self.x.global_index(self.ti, p)
        return _Item(v, _unit(j, self.x.num(1)), j)

    def feed(self, pool: "_Pool", v) -> None:
        t = self.t
        approaches_past_v = (t.increasing and t.accumulation <= v) or (t.decreasing and t.accumulation >= v)
        if t.is_flat or approaches_past_v:
            if self.live == 0 and not self.done:
                self._push(pool)
            return
        count = 0
        while not self.done and (self.last is None or (self.last >= v if t.decreasing else self.last <= v)):
            self._push(pool)
            count += 1
            if count > SCAN_CAP:
                raise BudgetExceeded("too many entries between the bracket and the limit",
                                      witness={"tail": self.ti, "value": v})

    def _push(self, pool: "_Pool") -> None:
        item = self._next()
        if item is not None:
            item.stream = self
            self.live += 1
            pool.items.append(item)


class _Pool:
    def __init__(self, items=(), streams=()):
        self.items: list[_Item] = list(items)
        self.streams: list[_Stream] = list(streams)

    def ensure(self, v) -> None:
        for s in self.streams:
            s.feed(self, v)

    def _best(self, pred, key) -> Optional[int]:
        best = None
        for i, it in enumerate(self.items):
            if pred(it.value) and (best is None or key(it) < key(self.items[best])):
                best = i
        return best

    def exact_match(self, v, exact: bool) -> Optional[int]:
        return self._best(lambda a: _close(a, v, exact), lambda it: it.key)

    def below(self, v, lo=None) -> Optional[int]:
        """Largest value <= v (and > lo when given); ties to the lowest index."""
        return self._best(lambda a: a <= v and (lo is None or a > lo), lambda it: (-it.value, it.key))

    def above(self, v) -> Optional[int]:
        return self._best(lambda a: a >= v, lambda it: (it.value, it.key))

    def lowest(self, hi) -> Optional[int]:
        """Largest value strictly below hi."""
        return self._best(lambda a: a < hi, lambda it: (-it.value, it.key))

    def pop(self, i: int) -> _Item:
        it = self.items.pop(i)
        s = getattr(it, "stream", None)
        if s is not None:
            s.live -= 1
        return it


def _combine(a: _Item, b: _Item, alpha, y):
    """Emit u = sqrt(alpha) a + sqrt(1-alpha) b; return (u, replacement item)."""
    one = 1 if isinstance(alpha, Fraction) else 1.0
    u, rest = {}, {}
    for j, (s, sq) in a.vec.items():
        u[j] = (s, alpha * sq)
        rest[j] = (s, (one - alpha) * sq)
    for j, (s, sq) in b.vec.items():
        u[j] = (s, (one - alpha) * sq)
        rest[j] = (-s, alpha * sq)
    u = {j: c for j, c in u.items() if c[1] != 0}
    rest = {j: c for j, c in rest.items() if c[1] != 0}
    return u, _Item(a.value + b.value - y, rest, min(a.key, b.key))


def _deflation_step(pool: _Pool, y, exact: bool, rule: str = "tight", lam=None) -> tuple[dict, dict]:
    """One step: pick a bracket around y, emit u, replace the pair by one working entry."""
    pool.ensure(y)
    i = pool.exact_match(y, exact)
    if i is not None:
        it = pool.pop(i)
        return it.vec, {"bracket": [it.value, it.value], "alpha": 1, "keys": [it.key]}
    k = pool.above(y)
    if rule == "b":
        j = pool.below(y, lo=lam)
        if j is None:
            j = pool.lowest(lam)
    else:
        j = pool.below(y)
    if k is None or j is None:
        raise Infeasible("no bracketing pair for y", witness={"y": y, "lower": j is not None,
                                                           "upper": k is not None})
    a, b = pool.items[j], pool.items[k]
    alpha = _alpha(y, a.value, b.value)
    for idx in sorted((j, k), reverse=True):
        pool.pop(idx)
    u, rest = _combine(a, b, alpha, y)
    if rest.vec:
        pool.items.append(rest)
    return u, {"bracket": [a.value, b.value], "alpha": alpha, "keys": [a.key, b.key]}


def _finite_items(x: SeqDescriptor, indices: Sequence[int]) -> list[_Item]:
    one = x.num(1)
    return [_Item(x.entry(j), _unit(j, one), j) for j in indices]


def _realize_finite(yvals: list, items: list[_Item], exact: bool) -> tuple[list, list]:
    """Largest y first, tightest bracket each time.

    With x sorted as x_1 >= ... >= x_n and y_1 the largest target, the
    bracket x_p >= y_1 >= x_{p+1} keeps both the upper and the lower
    envelope inequalities for the remaining pair (y', x'), so the loop never
    gets stuck when y lies in Q_x.
    """
    pool = _Pool(items)
    order = sorted(range(len(yvals)), key=lambda i: (-yvals[i], i))
    vecs, steps = [None] * len(yvals), [None] * len(yvals)
    for i in order:
        vecs[i], steps[i] = _deflation_step(pool, yvals[i], exact)
    return vecs, steps


def _y_values(y: SeqDescriptor, depth: int) -> tuple[list, bool]:
    if y.is_finite:
        return list(y.prefix), True
    return y.truncate(depth), False


def _mode(x: SeqDescriptor, y: SeqDescriptor) -> tuple[bool, SeqDescriptor, SeqDescriptor]:
    exact = x.exact and y.exact
    return exact, x, y


# --- Lemma-style deflation against one accumulation point -------------------


def _excess_sum(z: SeqDescriptor, c):
    """sum of (z_j - c)_+ ; INF when infinite."""
    total = sum((v - c for v in z.prefix if v > c), z.num(0))
    floats = []
    for t in z.tails:
        acc = t.accumulation
        if acc > c:
            return INF
        if acc < c:
            if t.decreasing:
                n = 1
                while t.entry(n) > c:
                    floats.append(z.num(t.entry(n)) - c)
                    n += 1
                    if n > SCAN_CAP:
                        raise BudgetExceeded("too many tail entries above the cut")
            continue
        if not t.decreasing or t.kind == "divergent":
            continue
        if t.kind == "geometric":
            floats.append(z.num(t.scale * t.ratio / (1 - t.ratio)))
        elif t.ratio > 1:
            floats.append(float(t.scale) * float(zeta(float(t.ratio), 1)))
        else:
            return INF
    if all(isinstance(v, Fraction) for v in floats) and isinstance(total, Fraction):
        return total + sum(floats, Fraction(0))
    return float(total) + math.fsum(float(v) for v in floats)


def _count_equal(z: SeqDescriptor, v) -> Union[int, float]:
    """Number of entries equal to v (INF for a flat tail at v)."""
    n = sum(1 for a in z.prefix if a == v)
    for t in z.tails:
        if t.is_flat:
            if t.limit == v:
                return INF
            continue
        acc = t.accumulation
        if acc == v or (t.decreasing and acc > v) or (t.increasing and acc < v):
            continue
        p = 1
        while p <= SCAN_CAP:
            a = z.num(t.entry(p))
            if a == v:
                n += 1
                break
            if (t.decreasing and a < v) or (t.increasing and a > v):
                break
            p += 1
    return n


def _single_accumulation(x: SeqDescriptor):
    accs = {t.accumulation for t in x.tails}
    if len(accs) != 1:
        raise Infeasible("x must have exactly one accumulation point", witness={"accumulation": sorted(accs)})
    lam = accs.pop()
    if not math.isfinite(lam):
        raise Infeasible("the accumulation point must be finite", witness={"accumulation": lam})
    return x.num(lam)


def _streams_in_range(x: SeqDescriptor, accept: Callable) -> list[_Stream]:
    """Streams for the tails that start inside the range; monotone tails then stay in it until they leave."""
    return [_Stream(x, ti, accept, itertools.count(1)) for ti, t in enumerate(x.tails)
            if t.kind != "divergent" and accept(x.num(t.entry(1)))]


def realize_deflation(y: SeqDescriptor, x: SeqDescriptor, case: Optional[str] = None,
                      depth: int = DEFAULT_DEPTH) -> OrthonormalRealization:
    """Realize y by repeated two-entry deflation of x.

    Finite x: all of y, largest entry first. Infinite x with a single
    accumulation point lam and y >= lam: the first ``depth`` entries of y in
    their given order, under hypothesis (a) (infinitely many entries of x at
    or above lam, and no more entries of y equal to lam than of x) or (b)
    (positive slack sum (x-lam)_+ - sum (y-lam)_+). ``case=None`` picks (a)
    when it applies and (b) otherwise.
    """
    exact = x.exact and y.exact
    qv = q_membership(y, x, depth)
    if not qv.ok:
        raise Infeasible("y violates the envelope inequalities", witness=qv.witness)
    if x.is_finite:
        if not y.is_finite:
            raise Infeasible("an infinite y cannot be realized against a finite x")
        vecs, steps = _realize_finite(list(y.prefix), _finite_items(x, range(1, len(x) + 1)), exact)
        return OrthonormalRealization(x, vecs, list(y.prefix), list(range(1, len(y) + 1)), depth,
                                      True, {"route": "finite"}, steps)
    lam = _single_accumulation(x)
    y_inf = -partial_sum_max(y.negated(), 1)
    if y_inf < lam:
        raise Infeasible("y has entries below the accumulation point", witness={"inf_y": y_inf, "lambda": lam})
    x_above_infinite = any(t.is_flat or t.decreasing for t in x.tails)
    count_ok = _count_equal(y, lam) <= _count_equal(x, lam)
    slack = None
    hyp_a = x_above_infinite and count_ok
    if case is None:
        case = "a" if hyp_a else "b"
    if case == "a":
        if not hyp_a:
            raise Infeasible("hypothesis (a) fails", witness={"x_above_infinite": x_above_infinite,
                                                              "multiplicity_ok": count_ok})
        accept = lambda v: v >= lam
        rule = "tight"
    elif case == "b":
        sx, sy = _excess_sum(x, lam), _excess_sum(y, lam)
        if sx == INF:
            raise Infeasible("hypothesis (b) needs a finite excess of x over lambda", witness={"lambda": lam})
        slack = sx - sy
        if not slack > 0:
            raise Infeasible("hypothesis (b) needs positive slack", witness={"slack": slack})
        accept = lambda v: True
        rule = "b"
    else:
        raise ValueError("case must be 'a' or 'b'")
    items = [_Item(v, _unit(j, x.num(1)), j) for j, v in enumerate(x.prefix, start=1) if accept(v)]
    pool = _Pool(items, _streams_in_range(x, accept))
    yvals, complete = _y_values(y, depth)
    vecs, steps = [], []
    for i, yi in enumerate(yvals, start=1):
        try:
            u, info = _deflation_step(pool, yi, exact, rule, lam)
        except Infeasible as e:
            raise Infeasible(f"deflation stuck at step {i}", witness={"step": i, **(e.witness or {})}) from None
        vecs.append(u)
        steps.append(info)
    return OrthonormalRealization(x, vecs, yvals, list(range(1, len(yvals) + 1)), depth, complete,
                                  {"route": f"deflation-{case}", "lambda": lam, "slack": slack}, steps)


# --- case classification at the boundary values ----------------------------


def _side_cases(y: SeqDescriptor, x: SeqDescriptor, depth: int, exact: bool) -> dict:
    """Classify one side (the + side; call on negated inputs for the - side)."""
    xp = x.limsup()
    if xp == INF:
        return {"case": "unbounded", "boundary": xp}
    xp = x.num(xp)
    y_plus = partial_sum_max(y, 1) > xp
    x_plus_infinite = any(t.decreasing and t.kind != "divergent" and t.limit == xp for t in x.tails)
    x_plus = x_plus_infinite or partial_sum_max(x, 1) > xp
    sx, sy = _excess_sum(x, xp), _excess_sum(y, xp)
    if sx == INF and sy == INF:
        delta = None
    else:
        delta = sx - sy
    gaps = []
    for m in range(1, depth + 1):
        tx = sum((v - xp for v in top_values(x, m) if v > xp), x.num(0))
        ty = sum((v - xp for v in top_values(y, m) if v > xp), y.num(0))
        gaps.append(tx - ty)
    info = {"boundary": xp, "y_plus": bool(y_plus), "x_plus": "infinite" if x_plus_infinite else
            ("finite" if x_plus else "empty"), "liminf_gap": delta,
            "min_gap_to_depth": min(gaps) if gaps else None}
    if y_plus:
        if delta is None:
            info["case"] = "undecided"
        elif _close(delta, 0, exact):
            info["case"] = "1" if x_plus_infinite else "2"
        else:
            info["case"] = "3" if x_plus_infinite else "4"
    elif x_plus:
        info["case"] = "5" if x_plus_infinite else "4"
    else:
        info["case"] = "6"
        cy, cx = _count_equal(y, xp), _count_equal(x, xp)
        info["count_y"], info["count_x"] = cy, cx
        info["count_ok"] = cy <= cx
    return info


def classify_cases(y: SeqDescriptor, x: SeqDescriptor, depth: int = 16) -> dict:
    """Boundary case labels 1..6 on each side of x^+ / x^- (infinite x only)."""
    if x.is_finite:
        raise NotApplicable("a finite x has no accumulation points")
    exact = x.exact and y.exact
    return {"+": _side_cases(y, x, depth, exact), "-": _side_cases(y.negated(), x.negated(), depth, exact)}


def _tightness_witness(y: SeqDescriptor, x: SeqDescriptor, depth: int, exact: bool) -> Optional[dict]:
    """An m where y's top-m sum equals R_m^+(x) but only x's supremum is not attained.

    Then no row-stochastic w with column sums <= 1 maps x to y: the m rows
    would have to carry total mass m on a set of entries whose sum never
    reaches the supremum.
    """
    top = depth if not y.is_finite else min(depth, len(y))
    for side, yy, xx in (("upper", y, x), ("lower", y.negated(), x.negated())):
        for m in range(1, top + 1):
            sy, sx = partial_sum_max(yy, m), partial_sum_max(xx, m)
            if not (math.isfinite(sy) and math.isfinite(sx)) or not _close(sy, sx, exact):
                continue
            if sup_attained(yy, m) and not sup_attained(xx, m):
                s = 1 if side == "upper" else -1
                return {"m": m, "side": side, "sum": s * sy, "bound": s * sx}
    return None


# --- driver ----------------------------------------------------------------


def _is_hat_normal(x: SeqDescriptor) -> bool:
    return not x.is_finite and hat_extension(x) == x


def _hat_pieces_ready(x: SeqDescriptor) -> bool:
    """Both boundary values have a source of fresh entries (a flat tail, or a divergent tail toward it)."""
    def source(v, sign):
        if math.isfinite(v):
            return _flat_tail_at(x, x.num(v)) is not None
        return v == sign * INF and any(t.kind == "divergent" and t.sign == sign for t in x.tails)
    return source(x.limsup(), 1) and source(x.liminf(), -1)


def _flat_tail_at(x: SeqDescriptor, v) -> Optional[int]:
    for ti, t in enumerate(x.tails):
        if t.is_flat and t.limit == v:
            return ti
    return None


def _realize_hat_normal(y: SeqDescriptor, x: SeqDescriptor, depth: int, exact: bool) -> tuple[list, list, list]:
    """Three-piece construction for x equal to its own hat extension.

    Entries >= x^+ go to an upper deflation pool (with every other copy of
    x^+), entries <= x^- to a lower pool, and targets strictly between x^-
    and x^+ are two-point combinations of fresh copies of x^- and x^+ (or of
    far-out entries of a divergent tail when x^- or x^+ is infinite).
    """
    hi, lo = x.limsup(), x.liminf()
    hi = x.num(hi) if math.isfinite(hi) else hi
    lo = x.num(lo) if math.isfinite(lo) else lo
    one = x.num(1)
    used: set = set()

    def make_pool(accept_value, flat_tail, parity_start):
        items = [_Item(v, _unit(j, one), j) for j, v in enumerate(x.prefix, start=1) if accept_value(v)]
        streams = []
        for ti, t in enumerate(x.tails):
            if ti == flat_tail:
                streams.append(_Stream(x, ti, lambda v: True, itertools.count(parity_start, 2)))
            elif t.is_flat:
                if accept_value(x.num(t.limit)) and t.limit not in (hi, lo):
                    streams.append(_Stream(x, ti, accept_value, itertools.count(1)))
            elif t.kind != "divergent" and accept_value(x.num(t.entry(1))):
                streams.append(_Stream(x, ti, accept_value, itertools.count(1)))
        return _Pool(items, streams)

    f_hi = _flat_tail_at(x, hi) if math.isfinite(hi) else None
    f_lo = _flat_tail_at(x, lo) if math.isfinite(lo) else None
    upper = make_pool(lambda v: v > hi or v == hi, f_hi, 2) if f_hi is not None else None
    lower_start = 1 if f_lo == f_hi else 2
    lower = make_pool(lambda v: v < lo or (v == lo and lo != hi), f_lo, lower_start) if f_lo is not None else None
    mid_hi = itertools.count(1, 2) if f_hi is not None else None
    mid_lo = itertools.count(1, 2) if (f_lo is not None and f_lo != f_hi) else None
    div_up = next((ti for ti, t in enumerate(x.tails) if t.kind == "divergent" and t.sign > 0), None)
    div_dn = next((ti for ti, t in enumerate(x.tails) if t.kind == "divergent" and t.sign < 0), None)
    cursor = {div_up: 1, div_dn: 1}

    def fresh_flat(ti, positions):
        p = next(positions)
        j = x.global_index(ti, p)
        return x.num(x.tails[ti].limit), j

    def fresh_divergent(ti, v, up):
        p = cursor[ti]
        while True:
            a = x.num(x.tails[ti].entry(p))
            if (a >= v) if up else (a <= v):
                break
            p += 1
        cursor[ti] = p + 1
        return a, x.global_index(ti, p)

    yvals, _ = _y_values(y, depth)
    vecs, steps = [], []
    for i, yi in enumerate(yvals, start=1):
        if upper is not None and yi >= hi:
            u, info = _deflation_step(upper, yi, exact)
            info["piece"] = "upper"
        elif lower is not None and yi <= lo:
            u, info = _lower_step(lower, yi, exact)
            info["piece"] = "lower"
        else:
            a, ja = fresh_flat(f_lo, mid_lo) if mid_lo is not None else fresh_divergent(div_dn, yi, False)
            b, jb = fresh_flat(f_hi, mid_hi) if mid_hi is not None else fresh_divergent(div_up, yi, True)
            alpha = _alpha(yi, a, b)
            u = {ja: (1, alpha), jb: (1, one - alpha)}
            u = {j: c for j, c in u.items() if c[1] != 0}
            info = {"piece": "middle", "bracket": [a, b], "alpha": alpha, "keys": [ja, jb]}
        vecs.append(u)
        steps.append(info)
    return yvals, vecs, steps


def _lower_step(pool: _Pool, y, exact: bool):
    """Deflation step for targets at or below x^-; brackets are symmetric so the rule is unchanged."""
    return _deflation_step(pool, y, exact)


def _truncation_realize(y: SeqDescriptor, x: SeqDescriptor, depth: int, exact: bool, cap: int = 4096):
    """Realize the first entries of y inside a finite section of x's eigenbasis."""
    yvals, _ = _y_values(y, depth)
    yd = SeqDescriptor.finite(yvals) if exact else SeqDescriptor.finite([float(v) for v in yvals])
    n = max(2 * len(yvals) + 8, len(x.prefix) + 2 * len(x.tails))
    while n <= cap:
        section = SeqDescriptor.finite(x.truncate(n))
        if q_membership(yd, section, len(yvals)).ok:
            vecs, steps = _realize_finite(list(yd.prefix), _finite_items(x, range(1, n + 1)), exact)
            return yvals, vecs, steps, n
        n *= 2
    return None


def realize_diagonal(y: SeqDescriptor, x: SeqDescriptor, depth: int = DEFAULT_DEPTH, *,
                     q_verdict: Optional[MembershipVerdict] = None
                     ) -> Union[OrthonormalRealization, InfeasibleWitness]:
    """Decide y in S_x^r constructively, up to ``depth`` entries of y.

    Finite x: complete decision (y in Q_x is equivalent to realizability).
    x equal to its hat extension: every y in Q_x is realized piecewise.
    Other infinite x: boundary cases are classified, necessary conditions
    give witnesses, and the realization itself is found inside a finite
    section of the eigenbasis. ``q_verdict`` reuses an earlier q_membership(y, x, depth).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    exact = x.exact and y.exact
    qv = q_verdict if q_verdict is not None else q_membership(y, x, depth)
    if not qv.ok:
        return InfeasibleWitness("q_violation", {"m": qv.witness.m}, q_witness=qv.witness, depth=depth)
    if x.is_finite:
        if not y.is_finite or len(y) > len(x):
            return InfeasibleWitness("length", {"len_x": len(x)}, depth=depth)
        vecs, steps = _realize_finite(list(y.prefix), _finite_items(x, range(1, len(x) + 1)), exact)
        return OrthonormalRealization(x, vecs, list(y.prefix), list(range(1, len(y) + 1)), depth,
                                      True, {"route": "finite"}, steps)
    cases = classify_cases(y, x, min(depth, 16))
    for side in ("+", "-"):
        c = cases[side]
        if c["case"] == "6" and not c["count_ok"]:
            return InfeasibleWitness("multiplicity", {"side": side, "value": c["boundary"] if side == "+"
                                                      else -c["boundary"], "count_y": c["count_y"],
                                                      "count_x": c["count_x"]},
                                     case="6" + side, depth=depth)
    tight = _tightness_witness(y, x, depth, exact)
    if tight is not None:
        return InfeasibleWitness("unattained", tight, depth=depth)
    complete = y.is_finite and len(y) <= depth
    if _is_hat_normal(x) and _hat_pieces_ready(x):
        try:
            yvals, vecs, steps = _realize_hat_normal(y, x, depth, exact)
        except Infeasible as e:
            return InfeasibleWitness("bracket", {"reason": str(e), **(e.witness or {})}, conclusive=False,
                                     depth=depth)
        cases["route"] = "hat-pieces"
        return OrthonormalRealization(x, vecs, yvals, list(range(1, len(yvals) + 1)), depth,
                                      complete, cases, steps)
    found = _truncation_realize(y, x, depth, exact)
    if found is None:
        return InfeasibleWitness("undecided", {"reason": "no finite section of x admits y"},
                                 conclusive=False, depth=depth)
    yvals, vecs, steps, n = found
    cases["route"] = f"section-{n}"
    return OrthonormalRealization(x, vecs, yvals, list(range(1, len(yvals) + 1)), depth, complete, cases, steps)


@dataclass
class SRVerdict:
    status: str  # member_with_certificate | nonmember_with_witness | undecided_at_depth
    depth: int
    realization: Optional[OrthonormalRealization] = None
    witness: Optional[InfeasibleWitness] = None

    @property
    def member(self) -> bool:
        return self.status == "member_with_certificate"

    def to_json(self) -> dict:
        d = {"status": self.status, "depth": self.depth}
        if self.realization is not None:
            d["realization"] = self.realization.to_json()
        if self.witness is not None:
            d["witness"] = self.witness.to_json()
        return d


def sr_membership(y: SeqDescriptor, x: SeqDescriptor, depth: int = DEFAULT_DEPTH) -> SRVerdict:
    """Q_x test first (necessary), then a realization (sufficient)."""
    qv = q_membership(y, x, depth)
    if not qv.ok:
        return SRVerdict("nonmember_with_witness", depth,
                         witness=InfeasibleWitness("q_violation", {"m": qv.witness.m}, q_witness=qv.witness,
                                                   depth=depth))
    r = realize_diagonal(y, x, depth, q_verdict=qv)
    if isinstance(r, OrthonormalRealization):
        return SRVerdict("member_with_certificate", depth, realization=r)
    if r.conclusive:
        return SRVerdict("nonmember_with_witness", depth, witness=r)
    return SRVerdict("undecided_at_depth", depth, witness=r)


# --- pattern approximation of the hat extension ----------------------------


@dataclass
class PatternApproximation:
    """x_eps in P_x^r laid out like hat(x), with the l1 distance to hat(x).

    ``moves`` maps a position of hat(x) to the position of x whose entry is
    placed there; unlisted positions keep their own entry. Every entry of x
    is used at most once, so x_eps is x reindexed injectively.
    """

    hat: SeqDescriptor
    moves: dict
    l1_error: float
    eps: float
    rule: dict = field(default_factory=dict)

    def source(self, n: int) -> int:
        return self.moves(n) if callable(self.moves) else self.moves.get(n, n)

    def entry(self, n: int):
        return self.hat.entry(self.source(n))

    def truncate(self, count: int) -> list:
        return [self.entry(n) for n in range(1, count + 1)]


def _float_entry(t: Tail, n: int) -> float:
    """Tail entry in floats; avoids huge rational powers at far-out positions."""
    if t.kind == "geometric":
        return float(t.limit) + t.sign * float(t.scale) * float(t.ratio) ** n
    return float(t.entry(n))


def _sparse_positions(t: Tail, budget: float, offset: int) -> tuple[int, float]:
    """Start K for positions K*2^(k-1)+offset whose deviations from the limit sum below budget."""
    K = 2
    while True:
        if t.kind == "geometric":
            bound = float(t.scale) * float(t.ratio) ** K / (1 - float(t.ratio))
        else:
            p = float(t.ratio)
            bound = float(t.scale) * K ** (-p) / (1 - 2 ** (-p))
        if bound < budget:
            return K, bound
        K *= 2
        if K > 2**60:
            raise BudgetExceeded("cannot meet the l1 budget")


def approx_in_Pxr(x: SeqDescriptor, eps: float) -> PatternApproximation:
    """Swap construction: copies of x^+ (x^-) appended by the hat extension take the
    odd terms of a fast subsequence of x converging to x^+ (x^-), and the
    subsequence's own slots take its even terms.
    """
    if classify_space(x) == 1:
        raise NotApplicable("x must be bounded", witness={"class": 1})
    if not eps > 0:
        raise ValueError("eps must be positive")
    hat = hat_extension(x)
    if hat == x:
        return PatternApproximation(hat, {}, 0.0, eps, {"swaps": []})
    extra = list(range(len(x.tails), len(hat.tails)))
    budget = eps / 6
    plans = []
    for side, ti_hat in enumerate(extra):
        value = hat.tails[ti_hat].limit
        src = next(ti for ti, t in enumerate(x.tails) if not t.is_flat and t.accumulation == value)
        offset = side  # distinct positions when both sides draw on the same tail
        K, bound = _sparse_positions(x.tails[src], budget, offset)
        plans.append({"copy_tail": ti_hat, "source_tail": src, "K": K, "offset": offset, "bound": bound,
                      "value": value})

    def pos(plan, k):
        return plan["K"] * 2 ** (k - 1) + plan["offset"]

    moves = {}
    table = {}
    for plan in plans:
        table[plan["copy_tail"]] = plan
    sources = {}
    for plan in plans:
        sources.setdefault(plan["source_tail"], []).append(plan)

    def move(n: int) -> int:
        ti, p = hat.locate(n)
        if ti is None:
            return n
        if ti in table:
            plan = table[ti]
            return hat.global_index(plan["source_tail"], pos(plan, 2 * p - 1))
        for plan in sources.get(ti, ()):
            q = p - plan["offset"]
            if q >= plan["K"] and q % plan["K"] == 0 and (q // plan["K"]) & (q // plan["K"] - 1) == 0:
                k = (q // plan["K"]).bit_length()
                return hat.global_index(ti, pos(plan, 2 * k))
        return n

    err = 0.0
    for plan in plans:
        t = x.tails[plan["source_tail"]]
        lim = float(plan["value"])
        for k in range(1, 64):
            a = abs(lim - _float_entry(t, pos(plan, 2 * k - 1)))
            b = abs(_float_entry(t, pos(plan, k)) - _float_entry(t, pos(plan, 2 * k)))
            err += a + b
            if a + b < 1e-300:
                break
    result = PatternApproximation(hat, move, err, eps, {"swaps": plans})
    if not err < eps:
        raise BudgetExceeded("l1 error did not meet eps", witness={"error": err, "eps": eps})
    return result


# --- ladder matrices -------------------------------------------------------


def _rows_as_numbers(w) -> tuple[list[list], bool]:
    rows = [[to_number(v) for v in r] for r in (w.tolist() if isinstance(w, np.ndarray) else w)]
    exact = all(isinstance(v, Fraction) for r in rows for v in r)
    if not exact:
        rows = [[float(v) for v in r] for r in rows]
    return rows, exact


@dataclass
class LadderMatrix:
    rows: list  # list of dict column -> value (0-based columns)
    m: int
    ncols: int
    blocks: dict  # value -> ordered column list
    certificate: dict = field(default_factory=dict)
    extended: bool = False

    def dense(self) -> np.ndarray:
        out = np.zeros((len(self.rows), self.ncols))
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i, j] = float(v)
        return out

    def column_sums(self) -> list:
        sums = [0] * self.ncols
        for r in self.rows:
            for j, v in r.items():
                sums[j] += v
        return sums

    def product(self, x: Sequence) -> list:
        """First m entries of (w~ x)."""
        zero = Fraction(0) if all(isinstance(v, Fraction) for r in self.rows for v in r.values()) else 0.0
        return [sum((v * x[j] for j, v in self.rows[i].items()), zero) for i in range(self.m)]


def _is_ladder(rows: list[dict], cols: list[int]) -> bool:
    pos = {c: k for k, c in enumerate(cols)}
    prev_max = -1
    for r in rows:
        idx = sorted(pos[j] for j, v in r.items() if j in pos and v != 0)
        if not idx:
            continue
        if idx[0] < prev_max:
            return False
        prev_max = idx[-1]
    return True


def ladder_matrix(w, x: Sequence, m: Optional[int] = None, extend: Optional[bool] = None) -> LadderMatrix:
    """Consolidate each equal-value column block into ladder form, keeping (wx)^(m).

    Within a block J of equal x values, row i's block mass v_i is poured
    into the block's columns in order: it starts at the last column the
    previous row touched, fills that column up to 1, and spills the rest
    into the next column. With ``extend`` (default: when m is finite and
    smaller than the number of columns) extra rows fill every column up to
    sum 1 by the same pouring rule over the columns with slack.
    """
    rows, exact = _rows_as_numbers(w)
    xs = [to_number(v) for v in x]
    n = len(xs)
    if any(len(r) != n for r in rows):
        raise ValueError("w must have one column per entry of x")
    m = len(rows) if m is None else m
    if not 1 <= m <= len(rows):
        raise ValueError("m must lie in 1..rows")
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    blocks: dict = {}
    for j, v in enumerate(xs):
        blocks.setdefault(v, []).append(j)
    tiny = 0 if exact else 1e-15
    out = [dict() for _ in range(m)]
    for lam, cols in blocks.items():
        filled = {j: zero for j in cols}
        at = 0
        for i in range(m):
            v = sum((rows[i][j] for j in cols), zero)
            while v > tiny:
                if at >= len(cols):
                    raise ValueError("block mass exceeds the block size; w has a column sum above 1")
                j = cols[at]
                take = min(v, one - filled[j])
                if take > 0:
                    out[i][j] = out[i].get(j, zero) + take
                    filled[j] += take
                    v -= take
                if v > tiny:
                    at += 1
    ladder = LadderMatrix(out, m, n, blocks)
    extend = (m < n) if extend is None else extend
    if extend:
        u = ladder.column_sums()
        slack_cols = [j for j in range(n) if u[j] < one]
        left = {j: one - u[j] for j in slack_cols}
        at = 0
        while at < len(slack_cols):
            row, room = {}, one
            while room > 0 and at < len(slack_cols):
                j = slack_cols[at]
                take = min(room, left[j])
                if take > 0:
                    row[j] = take
                    left[j] -= take
                    room -= take
                if left[j] <= (0 if exact else 1e-15):
                    at += 1
            ladder.rows.append(row)
        ladder.extended = True
    cert = {}
    for lam, cols in blocks.items():
        cert[str(lam)] = {"columns": cols, "ladder": _is_ladder(ladder.rows[:m], cols)}
    cert["extension_ladder"] = _is_ladder(ladder.rows[m:], list(range(n)))
    ladder.certificate = cert
    return ladder


# --- extreme points of S_{x,(m)}^{G1} ---------------------------------------


def _g1_sets(g1, n: int) -> tuple[set, set]:
    """(rows, columns) required to sum to exactly 1."""
    if g1 in ("rows", "r"):
        return set(range(n)), set()
    if g1 in ("columns", "cols", "c"):
        return set(), set(range(n))
    if g1 == "all":
        return set(range(n)), set(range(n))
    if g1 in ("none", None, ()):
        return set(), set()
    idx = set(g1)
    return {k for k in idx if k < n}, {k - n for k in idx if k >= n}


def theorem_conditions(m: Optional[int], g1, x: Sequence) -> dict:
    """Which of the three sufficient conditions for ex S in P hold (None means m = infinity)."""
    n = len(x)
    rows, cols = _g1_sets(g1, n)
    c1 = m is not None
    c2 = m is None and (not cols or len(cols) == n)
    c3 = m is None and len(set(map(to_number, x))) == n
    return {"1": c1, "2": c2, "3": c3}


def _feasible_w(y, x, m, rows_g1, cols_g1):
    n = len(x)
    nv = n * n
    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    for i in range(m):
        r = np.zeros(nv)
        r[i * n:(i + 1) * n] = x
        a_eq.append(r)
        b_eq.append(y[i])
    for i in range(n):
        r = np.zeros(nv)
        r[i * n:(i + 1) * n] = 1
        (a_eq if i in rows_g1 else a_ub).append(r)
        (b_eq if i in rows_g1 else b_ub).append(1.0)
    for j in range(n):
        r = np.zeros(nv)
        r[j::n] = 1
        (a_eq if j in cols_g1 else a_ub).append(r)
        (b_eq if j in cols_g1 else b_ub).append(1.0)
    res = linprog(np.zeros(nv), A_ub=np.array(a_ub) if a_ub else None, b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=[(0, 1)] * nv, method="highs")
    if res.status != 0:
        return None
    return res.x.reshape(n, n)


def _pattern_images(x, m, rows_g1, cols_g1) -> dict:
    """Distinct images (Px)^(m) over patterns P, with one pattern per image (row -> column or None)."""
    n = len(x)
    images: dict = {}
    for choice in itertools.product(range(-1, n), repeat=m):
        used = [c for c in choice if c >= 0]
        if len(set(used)) != len(used):
            continue
        if any(choice[i] < 0 for i in range(m) if i in rows_g1):
            continue
        rest_rows = n - m
        free_cols = n - len(used)
        need_rows = len([i for i in rows_g1 if i >= m])
        need_cols = len([j for j in cols_g1 if j not in used])
        if max(need_rows, need_cols) > min(rest_rows, free_cols):
            continue
        img = tuple(float(x[c]) if c >= 0 else 0.0 for c in choice)
        images.setdefault(img, choice)
    return images


def _hull_coefficients(p: np.ndarray, pts: np.ndarray, tol: float = 1e-9) -> Optional[np.ndarray]:
    res = linprog(np.zeros(len(pts)), A_eq=np.vstack([pts.T, np.ones(len(pts))]), b_eq=np.append(p, 1.0),
                  bounds=[(0, None)] * len(pts), method="highs")
    if res.status != 0:
        return None
    if np.abs(pts.T @ res.x - p).max() > tol:
        return None
    return res.x


@dataclass
class ExtremeVerdict:
    extreme: bool
    in_set: bool
    pattern: Optional[tuple] = None  # row -> column (or -1 for an empty row)
    split: Optional[tuple] = None  # (y_plus, y_minus) with y = (y_plus + y_minus)/2
    route: str = ""
    ladder: Optional[LadderMatrix] = None
    conditions: dict = field(default_factory=dict)


def extreme_in_Sxm(y: Sequence, x: Sequence, g1="rows", m: Optional[int] = None,
                   strengthened: bool = False) -> ExtremeVerdict:
    """Decide whether y is an extreme point of {(wx)^(m) : w in S^{G1}} for finite x.

    The ladder form of a representing w is searched for an admissible cycle
    through two distinct value blocks of one of the first m rows; such a
    cycle splits y. Otherwise y is tested against the hull of the pattern
    images, which returns either a pattern witness or a split pair.
    ``strengthened`` asks for the stronger conclusion under condition (3),
    which needs distinct and nonzero entries of x.
    """
    xs = [float(v) for v in x]
    n = len(xs)
    mm = len(y) if m is None else m
    conds = theorem_conditions(m, g1, x)
    if not any(conds.values()):
        raise NotApplicable("none of the theorem's conditions hold", witness=conds)
    if strengthened and (not conds["3"] or any(v == 0 for v in xs)):
        raise NotApplicable("the strengthened claim needs distinct, nonzero entries of x", witness=conds)
    yv = np.asarray([float(v) for v in y])
    rows_g1, cols_g1 = _g1_sets(g1, n)
    w = _feasible_w(yv, np.asarray(xs), mm, rows_g1, cols_g1)
    if w is None:
        return ExtremeVerdict(False, False, route="lp", conditions=conds)
    lad = ladder_matrix(np.clip(w, 0, 1), xs, mm, extend=False)
    # cycle route on the fractional support of the first m rows plus all slack columns
    frac = [(i, j) for i in range(mm) for j, v in lad.rows[i].items() if 1e-9 < v < 1 - 1e-9]
    fam = matrix_to_family(mm, n, "all")
    cyc = find_admissible_cycle(fam, frac) if frac else None
    if cyc is not None:
        dense = lad.dense()[:mm]
        eps = 0.5 * min(min(dense[v], 1 - dense[v]) for v in cyc)
        d = np.zeros_like(dense)
        for k, v in enumerate(cyc):
            d[v] = eps if k % 2 == 0 else -eps
        delta = d @ np.asarray(xs)
        yp = (dense + d) @ np.asarray(xs)
        ym = (dense - d) @ np.asarray(xs)
        both_in = all(_feasible_w(v, np.asarray(xs), mm, rows_g1, cols_g1) is not None for v in (yp, ym))
        if np.abs(delta).max() > 1e-9 and both_in:
            return ExtremeVerdict(False, True, split=(tuple(map(float, yp)), tuple(map(float, ym))),
                                  route="cycle", ladder=lad, conditions=conds)
    images = _pattern_images(xs, mm, rows_g1, cols_g1)
    key = next((img for img in images if np.allclose(img, yv, atol=1e-9)), None)
    others = [img for img in images if img != key]
    if key is not None:
        if not others or _hull_coefficients(yv, np.array(others)) is None:
            return ExtremeVerdict(True, True, pattern=images[key], route="pattern", ladder=lad, conditions=conds)
    pts = np.array(others if key is not None else list(images))
    coef = _hull_coefficients(yv, pts)
    if coef is None:
        raise RuntimeError("y is feasible but outside the hull of the pattern images")
    k = int(np.argmax(coef))
    c = coef[k]
    if c >= 1 - 1e-12:
        # y coincides with a pattern image that is interior to the rest: use its neighbours
        raise RuntimeError("degenerate convex combination")
    rest = (yv - c * pts[k]) / (1 - c)
    t = min(c, 1 - c)
    yp = tuple(yv + t * (pts[k] - rest))
    ym = tuple(yv - t * (pts[k] - rest))
    return ExtremeVerdict(False, True, split=(yp, ym), route="hull", ladder=lad, conditions=conds)
