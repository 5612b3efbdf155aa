"""Real sequences given as a finite prefix plus analytic tails.

A descriptor realizes the sequence

    prefix[0], ..., prefix[P-1], t_1(1), t_2(1), ..., t_T(1), t_1(2), t_2(2), ...

i.e. prefix entries first, then the tails interleaved round-robin in the order
they are listed. Tail entries are indexed from 1, so a geometric tail with
limit 0, scale 1 and ratio 1/2 starts at 1/2.

All set-level quantities (m-element envelopes, the Q_x test, the hat
extension) are independent of that order.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union

from scipy.special import zeta

from .errors import ClassMismatch, EmptySequence

Number = Union[int, float, Fraction]
XReal = Union[Fraction, float]  # float covers +-inf

INF = math.inf
FLOAT_TOL = 1e-10
KINDS = ("constant", "geometric", "powerlaw", "divergent")


def to_number(v) -> Number:
    """Coerce user input. Ints, Fractions, Decimals and numeric strings stay exact."""
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Decimal):
        return Fraction(v)
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if v.strip().lower() in ("-inf", "-infinity"):
            return -INF
        return Fraction(v)
    return float(v)


def is_exact_value(v) -> bool:
    return isinstance(v, Fraction)


@dataclass(frozen=True)
class Tail:
    """Monotone analytic stream; see module docstring for the closed forms."""

    kind: str
    limit: Number = 0
    sign: int = 1
    scale: Number = 1
    ratio: Optional[Number] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown tail kind {self.kind!r}")
        object.__setattr__(self, "limit", to_number(self.limit))
        object.__setattr__(self, "scale", to_number(self.scale))
        if self.ratio is not None:
            object.__setattr__(self, "ratio", to_number(self.ratio))
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "geometric" and not (self.ratio is not None and 0 < self.ratio < 1):
            raise ValueError("geometric ratio must lie in (0, 1)")
        if self.kind == "powerlaw" and not (self.ratio is not None and self.ratio > 0):
            raise ValueError("powerlaw exponent must be positive")
        if self.kind == "divergent":
            if self.sign == 0:
                raise ValueError("divergent tail needs sign +-1")
        elif not math.isfinite(self.limit):
            raise ValueError("limit must be finite for convergent tails")

    @property
    def exact(self) -> bool:
        if self.kind not in ("constant", "geometric"):
            return False
        vals = [self.limit, self.scale] + ([self.ratio] if self.kind == "geometric" else [])
        return all(is_exact_value(v) for v in vals)

    @property
    def is_flat(self) -> bool:
        """All entries equal the limit."""
        return self.kind == "constant" or (self.kind != "divergent" and self.sign == 0)

    def entry(self, n: int) -> XReal:
        if n < 1:
            raise IndexError("tail entries are indexed from 1")
        if self.kind == "divergent":
            return self.sign * self.scale * 2**n
        if self.is_flat:
            return self.limit
        if self.kind == "geometric":
            return self.limit + self.sign * self.scale * self.ratio**n
        return self.limit + self.sign * self.scale * float(n) ** (-float(self.ratio))

    @property
    def accumulation(self) -> XReal:
        if self.kind == "divergent":
            return self.sign * INF
        return self.limit

    @property
    def increasing(self) -> bool:
        """Entries strictly increase (so the supremum is approached, not attained)."""
        if self.kind == "divergent":
            return self.sign > 0
        return not self.is_flat and self.sign < 0

    @property
    def decreasing(self) -> bool:
        if self.kind == "divergent":
            return self.sign < 0
        return not self.is_flat and self.sign > 0

    def negated(self) -> "Tail":
        if self.kind == "divergent":
            return Tail("divergent", 0, -self.sign, self.scale)
        return Tail(self.kind, -self.limit, -self.sign, self.scale, self.ratio)

    def to_json(self) -> dict:
        d = {"kind": self.kind, "sign": self.sign, "scale": self.scale}
        if self.kind != "divergent":
            d["limit"] = self.limit
        if self.kind in ("geometric", "powerlaw"):
            d["ratio"] = self.ratio
        return d


@dataclass(frozen=True)
class SeqDescriptor:
    prefix: tuple = ()
    tails: tuple = ()
    _exact: bool = field(default=False, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(to_number(v) for v in self.prefix))
        tails = tuple(t if isinstance(t, Tail) else Tail(**t) for t in self.tails)
        object.__setattr__(self, "tails", tails)
        if any(not math.isfinite(v) for v in self.prefix):
            raise ValueError("prefix entries must be finite")
        exact = all(is_exact_value(v) for v in self.prefix) and all(t.exact for t in tails)
        object.__setattr__(self, "_exact", exact)
        if not exact:
            object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))

    @classmethod
    def finite(cls, values: Iterable[Number]) -> "SeqDescriptor":
        return cls(tuple(values), ())

    @classmethod
    def from_json(cls, d: dict) -> "SeqDescriptor":
        return cls(tuple(d.get("prefix", ())), tuple(Tail(**t) for t in d.get("tails", ())))

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "tails": [t.to_json() for t in self.tails]}

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def is_finite(self) -> bool:
        return not self.tails

    @property
    def is_empty(self) -> bool:
        return not self.prefix and not self.tails

    def __len__(self) -> int:
        if self.tails:
            raise TypeError("infinite sequence has no length")
        return len(self.prefix)

    def num(self, v) -> XReal:
        """Bring a value into this descriptor's arithmetic."""
        if self.exact and not isinstance(v, float):
            return Fraction(v)
        return float(v)

    def locate(self, n: int) -> tuple[Optional[int], int]:
        """Map a 1-based index to (tail index or None for prefix, position)."""
        if n < 1:
            raise IndexError("entries are indexed from 1")
        p = len(self.prefix)
        if n <= p:
            return None, n
        if not self.tails:
            raise IndexError(f"index {n} beyond finite sequence of length {p}")
        k = n - p - 1
        return k % len(self.tails), k // len(self.tails) + 1

    def global_index(self, tail: int, pos: int) -> int:
        return len(self.prefix) + (pos - 1) * len(self.tails) + tail + 1

    def entry(self, n: int) -> XReal:
        t, pos = self.locate(n)
        if t is None:
            return self.prefix[pos - 1]
        return self.num(self.tails[t].entry(pos))

    def truncate(self, count: int) -> list:
        if self.is_finite:
            count = min(count, len(self.prefix))
        return [self.entry(n) for n in range(1, count + 1)]

    def iter_entries(self) -> Iterator[XReal]:
        for n in itertools.count(1):
            if self.is_finite and n > len(self.prefix):
                return
            yield self.entry(n)

    def negated(self) -> "SeqDescriptor":
        return SeqDescriptor(tuple(-v for v in self.prefix), tuple(t.negated() for t in self.tails))

    def scaled(self, c: Number) -> "SeqDescriptor":
        """Entrywise product with a positive constant."""
        c = to_number(c)
        if not c > 0:
            raise ValueError("scaling constant must be positive")
        tails = []
        for t in self.tails:
            if t.kind == "divergent":
                tails.append(Tail("divergent", 0, t.sign, t.scale * c))
            else:
                tails.append(Tail(t.kind, t.limit * c, t.sign, t.scale * c, t.ratio))
        return SeqDescriptor(tuple(v * c for v in self.prefix), tuple(tails))

    def absolute(self) -> "SeqDescriptor":
        """|x| entrywise. Supported when every convergent tail keeps one sign."""
        tails = []
        for t in self.tails:
            if t.kind == "divergent":
                tails.append(Tail("divergent", 0, 1, t.scale))
            elif t.is_flat:
                tails.append(Tail("constant", abs(t.limit)))
            elif t.limit == 0:
                tails.append(Tail(t.kind, 0, 1, t.scale, t.ratio))
            elif t.limit > 0 and (t.sign > 0 or t.entry(1) >= 0):
                tails.append(t)
            elif t.limit < 0 and (t.sign < 0 or t.entry(1) <= 0):
                tails.append(t.negated())
            else:
                raise ValueError("tail changes sign; split it into prefix + tail first")
        return SeqDescriptor(tuple(abs(v) for v in self.prefix), tuple(tails))

    def limsup(self) -> XReal:
        if not self.tails:
            raise EmptySequence("a finite sequence has no accumulation points")
        return max(t.accumulation for t in self.tails)

    def liminf(self) -> XReal:
        if not self.tails:
            raise EmptySequence("a finite sequence has no accumulation points")
        return min(t.accumulation for t in self.tails)


def entry(x: SeqDescriptor, n: int) -> XReal:
    return x.entry(n)


# --- envelopes -------------------------------------------------------------


def _descending_stream(x: SeqDescriptor, t: Tail) -> Iterator[XReal]:
    """Values of one tail, listed non-increasingly, as seen by a supremum.

    An increasing tail contributes its limit repeatedly: the supremum of any
    m of its entries is m times the limit, approached but not attained.
    """
    if t.kind == "divergent" and t.sign > 0:
        return itertools.repeat(INF)
    if t.is_flat or t.increasing:
        return itertools.repeat(x.num(t.limit))
    return (x.num(t.entry(n)) for n in itertools.count(1))


def top_values(x: SeqDescriptor, m: int) -> list:
    """The m largest values in the supremum sense, non-increasing.

    Shorter than m only for a finite sequence with fewer than m entries.
    """
    if x.is_empty:
        raise EmptySequence("sequence has no entries")
    streams = [iter(sorted(x.prefix, reverse=True))]
    streams += [_descending_stream(x, t) for t in x.tails]
    return list(itertools.islice(heapq.merge(*streams, reverse=True), m))


def partial_sum_max(x: SeqDescriptor, m: int) -> XReal:
    """R_m^+(x): supremum of the sums of m distinct entries (-inf if none exist)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    vals = top_values(x, m)
    if len(vals) < m:
        return -INF
    if any(v == INF for v in vals):
        return INF
    return sum(vals, x.num(0))


def partial_sum_min(x: SeqDescriptor, m: int) -> XReal:
    """R_m^-(x): infimum of the sums of m distinct entries (+inf if none exist)."""
    return -partial_sum_max(x.negated(), m)


def sup_attained(x: SeqDescriptor, m: int) -> bool:
    """Whether some m actual entries sum to R_m^+(x)."""
    value = partial_sum_max(x, m)
    if not math.isfinite(value):
        return False
    streams = [iter(sorted(x.prefix, reverse=True))]
    for t in x.tails:
        if t.is_flat:
            streams.append(itertools.repeat(x.num(t.limit)))
        elif t.decreasing:
            streams.append(map(x.num, map(t.entry, itertools.count(1))))
    vals = list(itertools.islice(heapq.merge(*streams, reverse=True), m))
    return len(vals) == m and sum(vals, x.num(0)) == value


# --- Q_x membership --------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    m: int
    indices: tuple
    lhs: XReal
    bound: XReal
    side: str  # "upper": lhs > R_m^+(x); "lower": lhs < R_m^-(x)

    def to_json(self) -> dict:
        return {"m": self.m, "indices": list(self.indices), "lhs": self.lhs,
                "bound": self.bound, "side": self.side}


@dataclass(frozen=True)
class MembershipVerdict:
    status: str  # "verified_to_depth" | "violated"
    depth: int
    witness: Optional[Witness] = None
    complete: bool = False  # every m was covered (finite y)

    @property
    def ok(self) -> bool:
        return self.status == "verified_to_depth"

    def to_json(self) -> dict:
        d = {"status": self.status, "depth": self.depth, "complete": self.complete}
        if self.witness is not None:
            d["witness"] = self.witness.to_json()
        return d


def _exceeds(lhs, bound, exact: bool) -> bool:
    if lhs == INF or bound == -INF:
        return lhs > bound
    if exact:
        return lhs > bound
    return lhs > bound + FLOAT_TOL * max(1.0, abs(float(bound)))


def _explicit_top(y: SeqDescriptor, m: int, probe: int) -> list[tuple[int, XReal]]:
    """Top m actual entries among a candidate pool, with their 1-based indices.

    Decreasing and flat tails offer their first m entries; increasing tails
    offer m consecutive entries starting at ``probe``.
    """
    pool = [(v, -(i + 1)) for i, v in enumerate(y.prefix)]
    for ti, t in enumerate(y.tails):
        start = probe if t.increasing else 1
        for pos in range(start, start + m):
            pool.append((y.num(t.entry(pos)), -y.global_index(ti, pos)))
    best = heapq.nlargest(m, pool)
    return [(-negi, v) for v, negi in best]


def _upper_witness(y: SeqDescriptor, m: int, bound, exact: bool) -> Optional[Witness]:
    probe = 1
    while probe < 2**40:
        top = _explicit_top(y, m, probe)
        lhs = sum((v for _, v in top), y.num(0))
        if _exceeds(lhs, bound, exact):
            return Witness(m, tuple(sorted(i for i, _ in top)), lhs, bound, "upper")
        probe *= 2
    return None


def q_membership(y: SeqDescriptor, x: SeqDescriptor, depth: int) -> MembershipVerdict:
    """Test R_m^-(x) <= sum of any m entries of y <= R_m^+(x) for every m <= depth.

    Only the extremal m-subsets of y need checking because the sum is
    monotone in each chosen entry.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if x.is_empty or y.is_empty:
        raise EmptySequence("sequence has no entries")
    exact = x.exact and y.exact
    top_m = depth if not y.is_finite else min(depth, len(y))
    for m in range(1, top_m + 1):
        for side, yy, xx in (("upper", y, x), ("lower", y.negated(), x.negated())):
            sup_y = partial_sum_max(yy, m)
            bound = partial_sum_max(xx, m)
            if not _exceeds(sup_y, bound, exact):
                continue
            w = _upper_witness(yy, m, bound, exact)
            if w is None:
                continue  # the excess is below any resolvable scale
            if side == "lower":
                w = Witness(m, w.indices, -w.lhs, -w.bound, "lower")
            return MembershipVerdict("violated", depth, w)
    return MembershipVerdict("verified_to_depth", depth, None,
                             complete=y.is_finite and depth >= len(y))


# --- hat extension ---------------------------------------------------------


def hat_extension(x: SeqDescriptor) -> SeqDescriptor:
    """Append constant tails at liminf (if > -inf) and limsup (if < +inf).

    A finite sequence has no accumulation points and is returned unchanged.
    A value already carried by a flat tail is not added twice, which makes
    the operation idempotent on descriptors.
    """
    if x.is_finite:
        return x
    flat = {t.limit for t in x.tails if t.is_flat}
    extra = []
    for v in (x.liminf(), x.limsup()):
        if math.isfinite(v) and v not in flat:
            flat.add(v)
            extra.append(Tail("constant", v))
    return SeqDescriptor(x.prefix, x.tails + tuple(extra))


# --- classification and norms ----------------------------------------------


def classify_space(x: SeqDescriptor) -> int:
    """1 unbounded, 2 bounded not null, 3 null not summable, 4 summable, 5 finite support."""
    cls = 5
    for t in x.tails:
        if t.kind == "divergent":
            c = 1
        elif t.limit != 0:
            c = 2
        elif t.is_flat:
            c = 5
        elif t.kind == "powerlaw" and t.ratio <= 1:
            c = 3
        else:
            c = 4
        cls = min(cls, c)
    return cls


def l1_norm(x: SeqDescriptor) -> float:
    """Sum of |x_j|; +inf outside the summable classes."""
    if classify_space(x) < 4:
        return INF
    total = sum(abs(float(v)) for v in x.prefix)
    for t in x.tails:
        if t.is_flat:
            continue
        if t.kind == "geometric":
            r = float(t.ratio)
            total += float(t.scale) * r / (1 - r)
        else:
            total += float(t.scale) * float(zeta(float(t.ratio), 1))
    return total


def decreasing_rearrangement(x: SeqDescriptor, count: int) -> list[float]:
    """First ``count`` terms of the non-increasing rearrangement of |x| (null sequences)."""
    vals = top_values(x.absolute(), count)
    return [float(v) for v in vals] + [0.0] * (count - len(vals))


def _require_class3(x: SeqDescriptor):
    if classify_space(x) != 3:
        raise ClassMismatch("weight sequence must be null but not summable",
                            witness={"class": classify_space(x)})


def lorentz_norm(xp: SeqDescriptor, x: SeqDescriptor, depth: int) -> tuple[float, float]:
    """Pair the decreasing rearrangements of |x| and |x'| over the first ``depth`` slots.

    Returns (value, remainder_bound) where the remainder bounds the omitted
    terms; it is +inf when x' is not summable.
    """
    _require_class3(x)
    if classify_space(xp) <= 2:
        raise ClassMismatch("functional must be a null sequence", witness={"class": classify_space(xp)})
    a = decreasing_rearrangement(x, depth + 1)
    b = decreasing_rearrangement(xp, depth + 1)
    value = math.fsum(a[j] * b[j] for j in range(depth))
    if xp.is_finite and len(xp) <= depth:
        return value, 0.0
    rest = l1_norm(xp) - math.fsum(b[:depth])
    if not math.isfinite(rest):
        return value, INF
    return value, a[depth] * max(rest, 0.0)


def _proportional(y: SeqDescriptor, x: SeqDescriptor) -> bool:
    """|y| = c|x| as multisets, decided structurally on descriptors."""
    ay, ax = y.absolute(), x.absolute()
    if len(ay.tails) != len(ax.tails) or len(ay.prefix) != len(ax.prefix) or not ax.tails:
        return False
    c = ay.tails[0].scale / ax.tails[0].scale
    try:
        scaled = ax.scaled(c)
    except ValueError:
        return False
    same_prefix = sorted(map(float, scaled.prefix)) == sorted(map(float, ay.prefix))
    key = lambda t: (t.kind, float(t.limit), t.sign, float(t.scale), float(t.ratio or 0))
    return same_prefix and sorted(map(key, scaled.tails)) == sorted(map(key, ay.tails))


def marcinkiewicz_norm(y: SeqDescriptor, x: SeqDescriptor, depth: int) -> tuple[float, bool]:
    """sup over m <= depth of R_m(|y|)/R_m(|x|) with R_m the sum of the m largest moduli.

    ``exact`` is True when the supremum provably sits within depth: y has
    finite support inside depth (the ratio then decreases), or |y| is a
    constant multiple of |x| (the ratio is constant).
    """
    _require_class3(x)
    a = decreasing_rearrangement(x, depth)
    b = decreasing_rearrangement(y, depth)
    sa = sb = 0.0
    best = 0.0
    for m in range(depth):
        sa += a[m]
        sb += b[m]
        if sa > 0:
            best = max(best, sb / sa)
    exact = (y.is_finite and len(y) <= depth) or _proportional(y, x)
    return best, exact
