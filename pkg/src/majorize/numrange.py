"""Self-adjoint operators given by spectral data, and their m-numerical ranges.

An operator model lists eigenvalues with multiplicities (an integer or
infinity), monotone tails of simple eigenvalues, and closed intervals of
continuous spectrum. The continuous part is modelled as multiplication by
the variable on L^2 of the interval with Lebesgue measure, so a normalized
indicator of a window [c - d, c + d] has quadratic form exactly c.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BudgetExceeded, Infeasible, NotApplicable, PreconditionFailed
from .schur_horn import (
    SRVerdict,
    OrthonormalRealization,
    _alpha,
    _hull_coefficients,
    sr_membership,
)
from .sequences import INF, SeqDescriptor, Tail, XReal, q_membership, to_number

DEFAULT_DEPTH = 64
SCAN_CAP = 100_000


def _num(v):
    """Exact where possible; infinities stay floats."""
    v = to_number(v)
    return v if isinstance(v, Fraction) or not math.isfinite(v) else float(v)


def _same(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    if not (math.isfinite(a) and math.isfinite(b)):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-15)


# --- intervals and one-sided essential spectra -----------------------------


@dataclass(frozen=True)
class Interval:
    lo: XReal
    hi: XReal
    lo_closed: bool = True
    hi_closed: bool = True

    def contains(self, v) -> bool:
        above = v > self.lo or (self.lo_closed and v == self.lo)
        below = v < self.hi or (self.hi_closed and v == self.hi)
        return above and below

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi and self.lo_closed and self.hi_closed

    @property
    def is_closed(self) -> bool:
        return self.lo_closed and self.hi_closed

    def meets_open(self, lo, hi) -> bool:
        """Does this interval meet the open interval (lo, hi)?"""
        if self.is_empty or not lo < hi:
            return False
        return max(self.lo, lo) < min(self.hi, hi)

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}


@dataclass(frozen=True)
class SpectralSet:
    """Finite union of intervals (points are degenerate closed intervals)."""

    pieces: tuple = ()

    def contains(self, v) -> bool:
        return any(p.contains(v) for p in self.pieces)

    @property
    def is_empty(self) -> bool:
        return all(p.is_empty for p in self.pieces)

    def inf(self) -> XReal:
        return min((p.lo for p in self.pieces if not p.is_empty), default=INF)

    def sup(self) -> XReal:
        return max((p.hi for p in self.pieces if not p.is_empty), default=-INF)

    def to_json(self) -> list:
        return [p.to_json() for p in self.pieces]


@dataclass(frozen=True)
class HatEss:
    """One-sided essential spectra on the extended line.

    ``plus`` holds lam with infinite spectral mass in every [lam, mu), and
    ``minus`` lam with infinite mass in every (mu, lam]. -inf is in ``plus``
    exactly when the operator is unbounded below, +inf is in ``minus``
    exactly when it is unbounded above.
    """

    minus: SpectralSet
    plus: SpectralSet

    def contains(self, v) -> bool:
        return self.minus.contains(v) or self.plus.contains(v)

    def essential(self, v) -> bool:
        """v in the (real) essential spectrum."""
        return math.isfinite(v) and self.contains(v)

    def to_json(self) -> dict:
        return {"minus": self.minus.to_json(), "plus": self.plus.to_json()}


# --- operator model --------------------------------------------------------


def _tail_position(t: Tail, v) -> Optional[int]:
    """Position n >= 1 with t.entry(n) == v, if any (tails are strictly monotone)."""
    if t.is_flat or not math.isfinite(v):
        return None
    if t.kind == "divergent":
        q = v / (t.sign * t.scale)
        if not q > 0:
            return None
        guess = round(math.log2(float(q)))
    else:
        q = (v - t.limit) / (t.sign * t.scale)
        if not float(q) > 0:
            return None
        if t.kind == "geometric":
            guess = round(math.log(float(q)) / math.log(float(t.ratio)))
        else:
            guess = round(float(q) ** (-1.0 / float(t.ratio)))
    for n in (guess - 1, guess, guess + 1):
        if n >= 1 and _same(t.entry(n), v):
            return n
    return None


def _entry_span(t: Tail) -> tuple:
    """(inf, sup) of the tail's entries, limit included."""
    first = t.entry(1)
    if t.decreasing:
        return t.accumulation, first
    return first, t.accumulation


@dataclass(frozen=True)
class OperatorModel:
    """Spectral data of a self-adjoint operator.

    eigenvalues: (value, multiplicity) pairs, multiplicity a positive
    integer or INF. eigen_tails: strictly monotone tails whose entries are
    simple eigenvalues distinct from the listed ones. continuous: closed
    intervals (lo, hi) with lo < hi; an infinite end means a half-line.
    """

    eigenvalues: tuple = ()
    continuous: tuple = ()
    eigen_tails: tuple = ()

    def __post_init__(self):
        eig = []
        for value, mult in self.eigenvalues:
            value = _num(value)
            if not math.isfinite(value):
                raise ValueError("eigenvalues must be finite")
            mult = INF if mult in ("inf", INF) else int(mult)
            if not mult >= 1:
                raise ValueError("multiplicity must be positive")
            eig.append((value, mult))
        object.__setattr__(self, "eigenvalues", tuple(eig))
        cont = []
        for lo, hi in self.continuous:
            lo, hi = _num(lo), _num(hi)
            if not lo < hi:
                raise ValueError("continuous spectrum intervals need lo < hi")
            cont.append((lo, hi))
        object.__setattr__(self, "continuous", tuple(sorted(cont)))
        tails = tuple(t if isinstance(t, Tail) else Tail(**t) for t in self.eigen_tails)
        if any(t.is_flat for t in tails):
            raise ValueError("a flat eigenvalue tail is an eigenvalue of infinite multiplicity; list it as such")
        object.__setattr__(self, "eigen_tails", tails)

    @classmethod
    def diagonal(cls, values: Sequence) -> "OperatorModel":
        counts: dict = {}
        for v in values:
            v = _num(v)
            counts[v] = counts.get(v, 0) + 1
        return cls(tuple(counts.items()))

    @classmethod
    def from_json(cls, d: dict) -> "OperatorModel":
        eig = [(e["value"], e.get("multiplicity", 1)) for e in d.get("eigenvalues", ())]
        tails = [Tail(**t) for t in d.get("eigen_tails", ())]
        return cls(tuple(eig), tuple(tuple(c) for c in d.get("continuous", ())), tuple(tails))

    def to_json(self) -> dict:
        return {
            "eigenvalues": [{"value": v, "multiplicity": "inf" if m == INF else m} for v, m in self.eigenvalues],
            "continuous": [[lo, hi] for lo, hi in self.continuous],
            "eigen_tails": [t.to_json() for t in self.eigen_tails],
        }

    # -- spectral queries --

    @property
    def is_finite(self) -> bool:
        """Finite-dimensional: finitely many eigenvalues of finite multiplicity."""
        return not self.continuous and not self.eigen_tails and all(m != INF for _, m in self.eigenvalues)

    @property
    def dimension(self) -> Union[int, float]:
        return sum(m for _, m in self.eigenvalues) if self.is_finite else INF

    def bounds(self) -> tuple:
        """(inf sigma, sup sigma)."""
        lows, highs = [], []
        for v, _ in self.eigenvalues:
            lows.append(v)
            highs.append(v)
        for lo, hi in self.continuous:
            lows.append(lo)
            highs.append(hi)
        for t in self.eigen_tails:
            a, b = _entry_span(t)
            lows.append(a)
            highs.append(b)
        return min(lows, default=INF), max(highs, default=-INF)

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounds()
        return math.isfinite(lo) and math.isfinite(hi)

    @property
    def trace_class(self) -> bool:
        """Absolutely summable eigenvalues and no continuous spectrum."""
        if self.continuous:
            return False
        if any(m == INF and v != 0 for v, m in self.eigenvalues):
            return False
        for t in self.eigen_tails:
            if t.kind == "divergent" or t.limit != 0:
                return False
            if t.kind == "powerlaw" and not t.ratio > 1:
                return False
        return True

    def multiplicity(self, v) -> Union[int, float]:
        n = sum(m for w, m in self.eigenvalues if _same(w, v))
        n += sum(1 for t in self.eigen_tails if _tail_position(t, v) is not None)
        return n

    def in_spectrum(self, v) -> bool:
        if not math.isfinite(v):
            return False
        if self.multiplicity(v) > 0:
            return True
        if any(lo <= v <= hi for lo, hi in self.continuous):
            return True
        return any(t.kind != "divergent" and _same(t.limit, v) for t in self.eigen_tails)

    def essential(self, v) -> bool:
        return hat_ess(self).essential(v)

    def eigenvalue_count_outside(self, inside) -> Union[int, float]:
        """Eigenvalues (with multiplicity) not in the set tested by ``inside``."""
        n = 0
        for v, m in self.eigenvalues:
            if not inside(v):
                n += m
        for t in self.eigen_tails:
            if not inside(t.accumulation):
                return INF
            for p in range(1, SCAN_CAP):
                v = t.entry(p)
                if inside(v):
                    break
                n += 1
        return n


def hat_ess(op: OperatorModel) -> HatEss:
    """Points of infinite spectral mass on each side, including +-inf."""
    plus, minus = [], []
    for v, m in op.eigenvalues:
        if m == INF:
            plus.append(Interval(v, v))
            minus.append(Interval(v, v))
    for lo, hi in op.continuous:
        plus.append(Interval(lo, hi, True, not math.isfinite(hi)))
        minus.append(Interval(lo, hi, not math.isfinite(lo), True))
    for t in op.eigen_tails:
        acc = t.accumulation
        if t.decreasing:  # approaches acc from above (or diverges to -inf)
            plus.append(Interval(acc, acc))
        else:
            minus.append(Interval(acc, acc))
    return HatEss(SpectralSet(tuple(minus)), SpectralSet(tuple(plus)))


def _geometric_toward(limit, inside_end, sign: int) -> Tail:
    """Tail inside (limit, inside_end) (sign +1) or (inside_end, limit) (sign -1) converging to limit."""
    if math.isfinite(inside_end):
        scale = abs(inside_end - limit) / 2
    else:
        scale = Fraction(1) if isinstance(limit, Fraction) else 1.0
    half = Fraction(1, 2) if isinstance(limit, Fraction) and isinstance(scale, Fraction) else 0.5
    return Tail("geometric", limit, sign, scale, half)


def generating_sequence(op: OperatorModel) -> SeqDescriptor:
    """Eigenvalues with multiplicity, plus two tails inside the hull of the continuous spectrum.

    Layout: finite-multiplicity eigenvalues in the prefix; tails in the order
    infinite-multiplicity eigenvalues (constant tails), eigenvalue tails,
    then (if there is continuous spectrum) the tails converging to
    inf sigma_c and sup sigma_c. Those two tails stay inside the lowest and
    highest continuous intervals, so every entry lies in the spectrum.
    """
    prefix = [v for v, m in op.eigenvalues if m != INF for _ in range(m)]
    tails = [Tail("constant", v) for v, m in op.eigenvalues if m == INF]
    tails.extend(op.eigen_tails)
    if op.continuous:
        (lo, lo_end), (hi_start, hi) = op.continuous[0], op.continuous[-1]
        if math.isfinite(lo):
            tails.append(_geometric_toward(lo, lo_end, 1))
        else:
            tails.append(Tail("divergent", 0, -1, max(1, abs(lo_end)) if math.isfinite(lo_end) else 1))
        if math.isfinite(hi):
            tails.append(_geometric_toward(hi, hi_start, -1))
        else:
            tails.append(Tail("divergent", 0, 1, max(1, abs(hi_start)) if math.isfinite(hi_start) else 1))
    return SeqDescriptor(tuple(prefix), tuple(tails))


def basis_label(op: OperatorModel, j: int) -> dict:
    """What position j of the generating sequence stands for."""
    x = generating_sequence(op)
    ti, pos = x.locate(j)
    n_eig_tails = sum(1 for _, m in op.eigenvalues if m == INF) + len(op.eigen_tails)
    kind = "eigenvector" if ti is None or ti < n_eig_tails else "quasi-eigenvector"
    return {"position": j, "kind": kind, "value": x.entry(j)}


# --- m-spectra -------------------------------------------------------------


def _as_descriptor(v) -> SeqDescriptor:
    if isinstance(v, SeqDescriptor):
        return v
    return SeqDescriptor.finite(list(v))


def _counts(values) -> dict:
    out: dict = {}
    for a in values:
        for k in out:
            if _same(k, a):
                out[k] += 1
                break
        else:
            out[a] = 1
    return out


def _flat_values(v: SeqDescriptor) -> list:
    return [t.limit for t in v.tails if t.is_flat]


def sigma_m_membership(v, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> bool:
    """v in sigma(m, A): entries in the spectrum, multiplicity respected off the essential spectrum.

    For an infinite v the first ``depth`` entries are checked, and a flat
    tail must sit in the essential spectrum.
    """
    d = _as_descriptor(v)
    ess = hat_ess(op)
    if any(not ess.essential(c) for c in _flat_values(d)):
        return False
    vals = d.truncate(depth)
    if any(not op.in_spectrum(a) for a in vals):
        return False
    for a, n in _counts(vals).items():
        if not ess.essential(a) and n > op.multiplicity(a):
            return False
    return True


def sigma_p_membership(v, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> bool:
    """v in sigma_p(m, A): entries are eigenvalues, each used at most its multiplicity."""
    d = _as_descriptor(v)
    if any(op.multiplicity(c) != INF for c in _flat_values(d)):
        return False
    vals = d.truncate(depth)
    for a, n in _counts(vals).items():
        if n > op.multiplicity(a):
            return False
    return True


# --- m-numerical range -----------------------------------------------------


@dataclass
class RangeVerdict:
    verdict: SRVerdict
    generating: SeqDescriptor

    @property
    def member(self) -> bool:
        return self.verdict.member

    @property
    def status(self) -> str:
        return self.verdict.status

    @property
    def realization(self) -> Optional[OrthonormalRealization]:
        return self.verdict.realization

    def to_json(self) -> dict:
        return {"generating": self.generating.to_json(), **self.verdict.to_json()}


def range_membership(v, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> RangeVerdict:
    """v in Sigma(m, A), decided as membership in S^r of a generating sequence.

    A member comes with orthonormal vectors over the generating sequence's
    basis (eigenvectors and quasi-eigenvectors, see ``basis_label``).
    """
    x = generating_sequence(op)
    return RangeVerdict(sr_membership(_as_descriptor(v), x, depth), x)


def q_range_membership(v, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> bool:
    """v in Q(m, A) = Q_x for a generating sequence x."""
    return q_membership(_as_descriptor(v), generating_sequence(op), depth).ok


# --- extreme points --------------------------------------------------------


@dataclass
class ExtremeClassification:
    verdict: str  # extreme | not_extreme
    interval: Optional[Interval] = None
    split: Optional[tuple] = None  # (y_minus, y_plus), y = (y_minus + y_plus) / 2
    certified: bool = True
    reason: str = ""

    @property
    def extreme(self) -> bool:
        return self.verdict == "extreme"

    def to_json(self) -> dict:
        d = {"verdict": self.verdict, "certified": self.certified, "reason": self.reason}
        if self.interval is not None:
            d["interval"] = self.interval.to_json()
        if self.split is not None:
            d["split"] = [s.to_json() if isinstance(s, SeqDescriptor) else list(s) for s in self.split]
        return d


def _count_in(d: SeqDescriptor, v) -> Union[int, float]:
    """Number of entries of d equal to v."""
    n = sum(1 for a in d.prefix if _same(a, v))
    for t in d.tails:
        if t.is_flat:
            if _same(t.limit, v):
                return INF
        elif _tail_position(t, v) is not None:
            n += 1
    return n


def _missing_span(y: SeqDescriptor, op: OperatorModel) -> tuple:
    """(inf, sup) of the eigenvalues that y does not use up to their multiplicity."""
    lo, hi = INF, -INF
    for v, m in op.eigenvalues:
        if _count_in(y, v) < m:
            lo, hi = min(lo, v), max(hi, v)
    for t in op.eigen_tails:
        if any(s == t for s in y.tails):
            continue
        acc = t.accumulation
        shared = [s for s in y.tails if not s.is_flat and s.accumulation == acc]
        if shared:
            # y follows t from some point on: only finitely many eigenvalues of t can be missing
            starts = [_tail_position(t, s.entry(1)) for s in shared]
            if None in starts or any(_tail_position(t, s.entry(q)) is None for s in shared for q in range(2, 33)):
                raise NotApplicable("y has a different tail accumulating where an eigenvalue tail does",
                                    witness={"accumulation": acc})
            last = min(starts)
            if any(_count_in(y, t.entry(p)) == 0 for p in range(last, last + 32)):
                raise NotApplicable("y skips eigenvalues of a tail it follows", witness={"accumulation": acc})
            for p in range(1, last):
                if _count_in(y, t.entry(p)) == 0:
                    lo, hi = min(lo, t.entry(p)), max(hi, t.entry(p))
            continue
        first = None
        for p in range(1, SCAN_CAP):
            if _count_in(y, t.entry(p)) == 0:
                first = t.entry(p)
                break
        if first is None:
            raise BudgetExceeded("could not find an eigenvalue of the tail missing from y")
        lo, hi = min(lo, first, acc), max(hi, first, acc)
    return lo, hi


def _meets_open(y: SeqDescriptor, lo, hi) -> Optional[tuple]:
    """First entry of y (by index) in the open interval (lo, hi), as (index, value)."""
    if not lo < hi:
        return None
    best = None
    for n, a in enumerate(y.prefix, start=1):
        if lo < a < hi:
            return n, a
    for ti, t in enumerate(y.tails):
        if t.is_flat:
            hit = (1, t.limit) if lo < t.limit < hi else None
        elif (t.decreasing and t.accumulation >= hi) or (t.increasing and t.accumulation <= lo):
            hit = None
        else:
            hit = None
            for p in range(1, SCAN_CAP):
                a = t.entry(p)
                if lo < a < hi:
                    hit = (p, a)
                    break
                if (t.decreasing and a <= lo) or (t.increasing and a >= hi):
                    break
        if hit is not None:
            j = y.global_index(ti, hit[0])
            if best is None or j < best[0]:
                best = (j, hit[1])
    return best


def _extreme_bounds(op: OperatorModel, kind: str) -> tuple:
    """(a, b): condition (1) holds for [mu-, mu+] iff mu- <= a, mu+ >= b, mu- <= mu+."""
    ess = hat_ess(op)
    if kind == "sigma":
        a = min(ess.plus.inf(), min((lo for lo, _ in op.continuous), default=INF))
        b = max(ess.minus.sup(), max((hi for _, hi in op.continuous), default=-INF))
    else:
        both = SpectralSet(ess.plus.pieces + ess.minus.pieces)
        a, b = both.inf(), both.sup()
    return a, b


def _interval_for(y: SeqDescriptor, op: OperatorModel, kind: str) -> tuple:
    """Smallest admissible [mu-, mu+], or a degenerate choice when one exists."""
    a, b = _extreme_bounds(op, kind)
    mlo, mhi = _missing_span(y, op)
    upper, lower = min(a, mlo), max(b, mhi)
    if upper < lower:
        return Interval(upper, lower), upper, lower
    # any mu in [lower, upper] gives a valid degenerate interval
    mu = upper if math.isfinite(upper) else lower
    return Interval(mu, mu), mu, mu


def _advance(t: Tail, q: int) -> Optional[Tail]:
    """The tail with its first q entries dropped, when the family allows it."""
    if q == 0 or t.is_flat:
        return t
    if t.kind == "divergent":
        return Tail("divergent", 0, t.sign, t.scale * 2**q)
    if t.kind == "geometric":
        return Tail("geometric", t.limit, t.sign, t.scale * t.ratio**q, t.ratio)
    return None


def _materialize(y: SeqDescriptor, j: int) -> Optional[SeqDescriptor]:
    """Same sequence with entries up to index j moved into the prefix (whole rounds of tails)."""
    if j <= len(y.prefix):
        return y
    rounds = (j - len(y.prefix) + len(y.tails) - 1) // len(y.tails)
    tails = [_advance(t, rounds) for t in y.tails]
    if None in tails:
        return None
    return SeqDescriptor(tuple(y.truncate(len(y.prefix) + rounds * len(y.tails))), tuple(tails))


def _with_entry(y: SeqDescriptor, n: int, value) -> SeqDescriptor:
    p = list(y.prefix)
    p[n - 1] = value
    return SeqDescriptor(tuple(p), y.tails)


def _split(y: SeqDescriptor, n: int, lo, hi, member) -> Optional[tuple]:
    """Shift entry n by +-eps inside (lo, hi), halving eps until both shifts are members."""
    a = y.prefix[n - 1]
    room = [r for r in (a - lo, hi - a) if math.isfinite(r)]
    eps = min(room) if room else (Fraction(1) if isinstance(a, Fraction) else 1.0)
    for _ in range(40):
        ym, yp = _with_entry(y, n, a - eps), _with_entry(y, n, a + eps)
        if member(ym) and member(yp):
            return ym, yp
        eps = eps / 2
    return None


def _classify_extreme(y, op: OperatorModel, kind: str, depth: int) -> ExtremeClassification:
    finite_input = not isinstance(y, SeqDescriptor)
    d = _as_descriptor(y)
    if kind == "sigma" and not sigma_p_membership(d, op, depth):
        raise PreconditionFailed("y is not in the point m-spectrum")
    if kind == "Q" and not sigma_m_membership(d, op, depth):
        raise PreconditionFailed("y is not in the m-spectrum")
    interval, lo, hi = _interval_for(d, op, kind)
    hit = _meets_open(d, lo, hi)
    if hit is None:
        return ExtremeClassification("extreme", interval=interval)
    j, value = hit
    reason = f"entry {j} = {value} lies strictly inside ({lo}, {hi})"
    dm = _materialize(d, j)
    if dm is None:
        return ExtremeClassification("not_extreme", certified=False, reason=reason + "; no split built")
    if kind == "sigma":
        member = lambda z: range_membership(z, op, depth).member
    else:
        member = lambda z: q_range_membership(z, op, depth)
    pair = _split(dm, j, lo, hi, member)
    if pair is None:
        return ExtremeClassification("not_extreme", certified=False, reason=reason + "; no certified split")
    if finite_input:
        pair = tuple(list(p.prefix) for p in pair)
    return ExtremeClassification("not_extreme", split=pair, reason=reason)


def classify_extreme_sigma(y, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> ExtremeClassification:
    """Is y (in the point m-spectrum) an extreme point of Sigma(m, A)?"""
    return _classify_extreme(y, op, "sigma", depth)


def classify_extreme_Q(y, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> ExtremeClassification:
    """Is y (in the m-spectrum) an extreme point of Q(m, A)?"""
    return _classify_extreme(y, op, "Q", depth)


def lambda_e(op: OperatorModel) -> Optional[Interval]:
    """Intersection of all intervals meeting condition (1) of the extreme-point test; None if empty."""
    a, b = _extreme_bounds(op, "sigma")
    if a <= b:
        return Interval(a, b)
    return None


def has_extreme_points(op: OperatorModel, m: Union[int, float]) -> bool:
    """False when fewer than m eigenvalues lie outside Lambda_e (then Sigma(m, A) has none).

    True means the counting obstruction is absent, not that an extreme point exists.
    """
    le = lambda_e(op)
    inside = (lambda v: False) if le is None else le.contains
    return op.eigenvalue_count_outside(inside) >= m


def extreme_points_finite(op: OperatorModel, m: int, kind: str = "sigma") -> list[tuple]:
    """All extreme points of Sigma(m, A) (or Q(m, A)) for a finite-dimensional model."""
    if not op.is_finite:
        raise NotApplicable("enumeration needs a finite-dimensional model")
    pool = [v for v, k in op.eigenvalues for _ in range(k)]
    seen, out = set(), []
    for combo in itertools.permutations(range(len(pool)), m):
        y = tuple(pool[i] for i in combo)
        if y in seen:
            continue
        seen.add(y)
        r = _interval_for(SeqDescriptor.finite(y), op, kind)
        if _meets_open(SeqDescriptor.finite(y), r[1], r[2]) is None:
            out.append(y)
    return out


# --- exposed points --------------------------------------------------------


@dataclass
class ExposedClassification:
    verdict: str  # exposed | not_exposed | not_applicable
    lambda_y: Optional[tuple] = None
    Lambda_y: Optional[Interval] = None
    functional: Optional[dict] = None  # 1-based index -> x'_index, for the first ``depth`` indices
    rule: str = ""
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        d = {"verdict": self.verdict, "rule": self.rule}
        if self.lambda_y is not None:
            d["lambda_y"] = list(self.lambda_y)
        if self.Lambda_y is not None:
            d["Lambda_y"] = self.Lambda_y.to_json()
        if self.functional is not None:
            d["functional"] = {str(k): v for k, v in self.functional.items()}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def _upper_part(y: SeqDescriptor, mu) -> tuple[bool, list, list]:
    """Entries of y that are >= mu: (infinitely many?, accumulation points, explicit values)."""
    vals = [a for a in y.prefix if a >= mu]
    accs = []
    for t in y.tails:
        acc = t.accumulation
        if t.is_flat:
            if acc >= mu:
                accs.append(acc)
            continue
        if acc > mu or (acc == mu and t.decreasing):
            accs.append(acc)
        elif t.decreasing:
            for p in range(1, SCAN_CAP):
                if t.entry(p) < mu:
                    break
                vals.append(t.entry(p))
    return bool(accs), accs, vals


def _accumulates_from_outside(y: SeqDescriptor, v, lo, hi) -> bool:
    """Is v an accumulation point of the entries of y outside [lo, hi]?"""
    for t in y.tails:
        if t.is_flat or t.accumulation != v:
            continue
        if (t.decreasing and v >= hi) or (t.increasing and v <= lo):
            return True
    return False


def lambda_interval(y, op: OperatorModel, kind: str = "sigma", depth: int = DEFAULT_DEPTH) -> tuple:
    """(lambda_y^-, lambda_y^+, Lambda_y) for an extreme point y."""
    d = _as_descriptor(y)
    cls = _classify_extreme(d, op, kind, depth)
    if not cls.extreme:
        raise PreconditionFailed("y is not an extreme point", witness=cls.to_json())
    mu_lo, mu_hi = cls.interval.lo, cls.interval.hi
    inf_up, acc_up, val_up = _upper_part(d, mu_hi)
    inf_dn, acc_dn, val_dn = _upper_part(d.negated(), -mu_lo)
    if inf_up:
        lam_hi = max(acc_up)
    elif val_up:
        lam_hi = min(val_up)
    else:
        lam_hi = mu_hi
    if inf_dn:
        lam_lo = -max(acc_dn)
    elif val_dn:
        lam_lo = -min(val_dn)
    else:
        lam_lo = mu_lo
    if lam_lo < lam_hi:
        big = Interval(lam_lo, lam_hi,
                       _accumulates_from_outside(d, lam_lo, lam_lo, lam_hi),
                       _accumulates_from_outside(d, lam_hi, lam_lo, lam_hi))
    else:
        big = Interval(lam_lo, lam_lo)
    return lam_lo, lam_hi, big


def _entries_in(y: SeqDescriptor, iv: Interval, depth: int) -> list:
    """(index, value) pairs of y inside iv among the first ``depth`` entries, plus flat tails."""
    out = [(n, a) for n, a in enumerate(y.truncate(depth), start=1) if iv.contains(a)]
    return out


def _spectrum_points_in(op: OperatorModel, iv: Interval) -> int:
    """0, 1 or 2 (meaning: at least two) distinct spectral points in iv."""
    for lo, hi in op.continuous:
        if Interval(lo, hi).meets_open(iv.lo, iv.hi) or (iv.is_point and lo <= iv.lo <= hi):
            return 2 if not iv.is_point else 1
    pts = []
    for v, _ in op.eigenvalues:
        if iv.contains(v):
            pts.append(v)
    for t in op.eigen_tails:
        if t.kind != "divergent" and iv.contains(t.limit):
            pts.append(t.limit)
        for p in range(1, 64):
            if iv.contains(t.entry(p)):
                pts.append(t.entry(p))
    distinct = []
    for v in pts:
        if not any(_same(v, w) for w in distinct):
            distinct.append(v)
    return min(len(distinct), 2)


def _rank_functional(y: SeqDescriptor, iv: Interval, depth: int, trace: bool) -> dict:
    """x' on the first ``depth`` indices: strictly monotone in value off iv, constant on iv."""
    vals = y.truncate(depth)
    inside = 1 if trace else 0
    out = {}
    for n, a in enumerate(vals, start=1):
        if iv.contains(a):
            out[n] = inside
            continue
        above = a > iv.hi or (a == iv.hi and not iv.hi_closed)
        # rank among entries on the same side, by value (ties by index)
        if above:
            rank = _count_strictly(y, lambda b: b > a and not iv.contains(b)) + \
                sum(1 for b in vals[:n - 1] if _same(b, a)) + 1
            w = 2.0 ** (-rank)
            out[n] = (2 + w) if trace else w
        else:
            rank = _count_strictly(y, lambda b: b < a and not iv.contains(b)) + \
                sum(1 for b in vals[:n - 1] if _same(b, a)) + 1
            w = 2.0 ** (-rank)
            out[n] = -(2 + w) if trace else -w
    return out


def _count_strictly(y: SeqDescriptor, pred) -> int:
    n = sum(1 for a in y.prefix if pred(a))
    for t in y.tails:
        if t.is_flat:
            if pred(t.limit):
                raise BudgetExceeded("infinitely many entries beyond a value")
            continue
        for p in range(1, SCAN_CAP):
            if not pred(t.entry(p)):
                break
            n += 1
        else:
            raise BudgetExceeded("too many entries beyond a value")
    return n


def classify_exposed(y, op: OperatorModel, kind: str = "sigma", depth: int = DEFAULT_DEPTH) -> ExposedClassification:
    """Exposedness of an extreme point of Sigma(inf, A) (kind "sigma") or Q(inf, A) (kind "Q").

    Exposedness is in the Mackey topology of the natural symmetric sequence
    space. Trace class: always exposed. Unbounded: never. Bounded otherwise:
    decided from Lambda_y.
    """
    d = _as_descriptor(y)
    try:
        cls = _classify_extreme(d, op, kind, depth)
    except PreconditionFailed as e:
        return ExposedClassification("not_applicable", rule=str(e))
    if not cls.extreme:
        return ExposedClassification("not_applicable", rule="not an extreme point")
    lam_lo, lam_hi, big = lambda_interval(d, op, kind, depth)
    base = dict(lambda_y=(lam_lo, lam_hi), Lambda_y=big)
    if not op.bounded:
        n = max(depth, 2)
        vals = d.truncate(2 * n) if not d.is_finite else list(d.prefix)
        pair = next(((i, j) for i in range(n, len(vals)) for j in range(i + 1, len(vals))
                     if not _same(vals[i], vals[j])), None)
        wit = {"swap_beyond": n, "pair": [pair[0] + 1, pair[1] + 1]} if pair else None
        return ExposedClassification("not_exposed", rule="unbounded: finitely supported functionals "
                                     "cannot separate y from a swap beyond their support", witness=wit, **base)
    if op.trace_class:
        return ExposedClassification("exposed", functional=_rank_functional(d, big, depth, True),
                                     rule="trace class", **base)
    inside = _entries_in(d, big, depth)
    distinct = []
    for _, a in inside:
        if not any(_same(a, b) for b in distinct):
            distinct.append(a)
    if not inside:
        return ExposedClassification("exposed", functional=_rank_functional(d, big, depth, False),
                                     rule="y misses Lambda_y", **base)
    if len(distinct) >= 2:
        i = next(n for n, a in inside if _same(a, distinct[0]))
        j = next(n for n, a in inside if _same(a, distinct[1]))
        return ExposedClassification("not_exposed", rule="two distinct entries inside Lambda_y",
                                     witness={"swap": [i, j], "values": [distinct[0], distinct[1]]}, **base)
    if kind == "Q":
        if big.is_point:
            return ExposedClassification("exposed", functional=_rank_functional(d, big, depth, False),
                                         rule="Lambda_y is a point", **base)
        return ExposedClassification("not_exposed", rule="y meets a nondegenerate Lambda_y",
                                     witness={"replace": inside[0][0], "by": [big.lo, big.hi]}, **base)
    if big.is_closed and _spectrum_points_in(op, big) == 1:
        return ExposedClassification("exposed", functional=_rank_functional(d, big, depth, False),
                                     rule="Lambda_y closed with one spectral point", **base)
    return ExposedClassification("not_exposed", rule="y meets Lambda_y, which is open at an end or holds "
                                 "more than one spectral point", witness={"index": inside[0][0]}, **base)


def sample_perturbations(y, op: OperatorModel, count: int, block: int = 6, seed: int = 0,
                         depth: int = DEFAULT_DEPTH) -> list[tuple[list, list]]:
    """Points of Sigma(inf, A) that differ from y in the first ``block`` entries only.

    Each sample mixes the first entries of y with eigenvalues y leaves
    unused, through the first rows of a random convex combination of
    permutation matrices. Returns (indices, new values) pairs.
    """
    d = _as_descriptor(y)
    vals = d.truncate(block)
    spare = []
    for v, m in op.eigenvalues:
        # infinite multiplicity leaves infinitely many unused copies even when y uses infinitely many
        left = block if m == INF else m - _count_in(d, v)
        spare.extend([v] * int(min(left, block)))
    for t in op.eigen_tails:
        for p in range(1, 64 * block):
            if len(spare) >= 2 * block:
                break
            if _count_in(d, t.entry(p)) == 0:
                spare.append(t.entry(p))
    pool = np.array([float(a) for a in vals + spare])
    k = len(vals)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.dirichlet(np.ones(3))
        w = np.zeros((k, len(pool)))
        for ci in c:
            w[np.arange(k), rng.permutation(len(pool))[:k]] += ci
        out.append((list(range(1, k + 1)), (w @ pool).tolist()))
    return out


def exposure_margin(y, functional: dict, samples) -> float:
    """min over samples of <y - y~, x'>, restricted to the changed indices."""
    d = _as_descriptor(y)
    worst = INF
    for idx, new in samples:
        gap = math.fsum((float(d.entry(i)) - b) * functional[i] for i, b in zip(idx, new))
        worst = min(worst, gap)
    return worst


# --- constructive lemmas ---------------------------------------------------


def lemma44_realize(z, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> OrthonormalRealization:
    """Realize z in Sigma(inf, A) when sigma(A) sits in [lam-, lam+] with both ends essential.

    Each target strictly inside uses one fresh basis vector below it and one
    above it, taken from the tails converging to lam- and lam+; targets at
    lam+- use eigenvectors, at most the multiplicity.
    """
    d = _as_descriptor(z)
    lo, hi = op.bounds()
    ess = hat_ess(op)
    if not (ess.contains(lo) and ess.contains(hi)):
        raise PreconditionFailed("both ends of the spectrum must be essential", witness={"lo": lo, "hi": hi})
    x = generating_sequence(op)
    zs = d.truncate(depth)
    bad = [a for a in zs if not lo <= a <= hi]
    if bad:
        raise Infeasible("z leaves the spectral hull", witness={"entry": bad[0], "hull": [lo, hi]})
    for end in (lo, hi):
        if not math.isfinite(end):
            continue
        need, have = _count_in(d, end), op.multiplicity(end)
        if need > have:
            raise Infeasible("too many entries at an end of the spectrum",
                             witness={"value": end, "count": need, "multiplicity": have})
    one = Fraction(1) if x.exact and d.exact else 1.0
    used: set = set()

    def stream_for(end, toward_up):
        for ti, t in enumerate(x.tails):
            if t.accumulation == end and (t.is_flat or (t.decreasing if toward_up else t.increasing)):
                yield ti

    low_tails, high_tails = list(stream_for(lo, True)), list(stream_for(hi, False))

    def fresh(tails, ok):
        for p in range(1, SCAN_CAP):
            for ti in tails:
                j = x.global_index(ti, p)
                if j not in used and ok(x.entry(j)):
                    used.add(j)
                    return x.entry(j), j
        raise BudgetExceeded("no fresh basis vector in range")

    def eigen_at(v):
        for j, a in enumerate(x.prefix, start=1):
            if j not in used and _same(a, v):
                used.add(j)
                return j
        for ti, t in enumerate(x.tails):
            if t.is_flat and _same(t.limit, v):
                return fresh([ti], lambda a: True)[1]
        raise Infeasible("no eigenvector left", witness={"value": v})

    vecs, steps = [], []
    for a in zs:
        if _same(a, lo) or _same(a, hi):
            j = eigen_at(a)
            vecs.append({j: (1, one)})
            steps.append({"eigenvector": j})
            continue
        xa, ja = fresh(low_tails, lambda v: v <= a)
        xb, jb = fresh(high_tails, lambda v: v >= a)
        alpha = _alpha(a, xa, xb)
        u = {j: (1, c) for j, c in ((ja, alpha), (jb, one - alpha)) if c != 0}
        vecs.append(u)
        steps.append({"bracket": [xa, xb], "alpha": alpha, "keys": [ja, jb]})
    return OrthonormalRealization(x, vecs, zs, list(range(1, len(zs) + 1)), depth,
                                  d.is_finite and len(zs) == len(d.prefix), {"route": "two-point"}, steps)


@dataclass
class Approximation:
    """y in Sigma(inf, A) close to a given x in sigma(inf, A), with the vectors behind each entry."""

    x: list
    y: list
    eps: list
    vectors: list  # per entry: ("eigen", value, copy) or ("window", lo, hi)

    def max_ratio(self) -> float:
        """max |y_k - x_k| / eps_k (at most 1 by construction)."""
        return max((abs(float(a - b)) / float(e) for a, b, e in zip(self.y, self.x, self.eps)), default=0.0)

    def orthogonal(self) -> bool:
        """Distinct eigenvector copies and pairwise disjoint windows."""
        eig = [v[1:] for v in self.vectors if v[0] == "eigen"]
        if len({(float(a), c) for a, c in eig}) != len(eig):
            return False
        wins = sorted((v[1], v[2]) for v in self.vectors if v[0] == "window")
        return all(a[1] <= b[0] for a, b in zip(wins, wins[1:]))


def lemma410_approx(x, eps, op: OperatorModel, depth: int = DEFAULT_DEPTH) -> Approximation:
    """y in Sigma(inf, A) with |y_k - x_k| <= eps_k for every k (first ``depth`` entries).

    Eigenvalues off the essential spectrum are kept exactly (eigenvectors).
    Essential entries use an unused eigenvector copy at the same value when
    the eigenvalue has infinite multiplicity, a fresh spectral window inside
    the continuous spectrum, or an unused eigenvalue of a tail within eps.
    """
    d = _as_descriptor(x)
    xs = d.truncate(depth)
    if not sigma_m_membership(d, op, depth):
        raise PreconditionFailed("x is not in the m-spectrum")
    if isinstance(eps, (int, float, Fraction)):
        eps = [eps] * len(xs)
    eps = [to_number(e) for e in eps[:len(xs)]]
    if any(not e > 0 for e in eps):
        raise ValueError("eps must be strictly positive")
    ess = hat_ess(op)
    copies: dict = {}
    windows: list = []
    used_tail: set = set()
    ys, vecs = [], []
    for k, (a, e) in enumerate(zip(xs, eps)):
        mult = op.multiplicity(a)
        c = copies.get(a, 0)
        if mult > c and (not ess.essential(a) or mult == INF or c < mult):
            copies[a] = c + 1
            ys.append(a)
            vecs.append(("eigen", a, c))
            continue
        box = next(((lo, hi) for lo, hi in op.continuous if lo <= a <= hi), None)
        if box is not None:
            lo, hi = max(box[0], a - e), min(box[1], a + e)
            gaps, cur = [], lo
            for w0, w1 in sorted(windows):
                if w1 <= cur or w0 >= hi:
                    continue
                if w0 > cur:
                    gaps.append((cur, w0))
                cur = max(cur, w1)
            if cur < hi:
                gaps.append((cur, hi))
            g0, g1 = max(gaps, key=lambda g: g[1] - g[0])
            w0, w1 = g0 + (g1 - g0) / 3, g1 - (g1 - g0) / 3
            windows.append((w0, w1))
            ys.append((w0 + w1) / 2)
            vecs.append(("window", w0, w1))
            continue
        found = None
        for ti, t in enumerate(op.eigen_tails):
            if t.kind == "divergent" or not _same(t.limit, a):
                continue
            for p in range(1, SCAN_CAP):
                v = t.entry(p)
                if (ti, p) not in used_tail and abs(v - a) <= e and copies.get(v, 0) < op.multiplicity(v):
                    found = (ti, p, v)
                    break
            if found:
                break
        if found is None:
            raise Infeasible("no spectral vector near the entry", witness={"index": k + 1, "value": a})
        ti, p, v = found
        used_tail.add((ti, p))
        copies[v] = copies.get(v, 0) + 1
        ys.append(v)
        vecs.append(("eigen", v, copies[v] - 1))
    return Approximation(xs, ys, eps, vecs)


# --- variational formulae --------------------------------------------------

PSI = {
    "sum_m": lambda v: math.fsum(float(a) for a in v),
    "product_m": lambda v: float(np.prod([float(a) for a in v])),
    "min_entry": lambda v: min(float(a) for a in v),
}


def smallest_spectral_values(op: OperatorModel, m: int) -> list:
    """The m smallest values of sigma(A) with multiplicity (essential points repeat freely)."""
    ess = hat_ess(op)
    cands = []
    for v, k in op.eigenvalues:
        cands.extend([v] * int(min(k, m)))
    for lo, _ in op.continuous:
        cands.extend([lo] * m)
    for t in op.eigen_tails:
        acc = t.accumulation
        if acc == -INF:
            return [-INF] * m
        cands.extend([acc] * m)
        if t.increasing:
            cands.extend(t.entry(p) for p in range(1, m + 1))
    out = sorted(cands)[:m]
    if len(out) < m:
        raise NotApplicable("the model has fewer than m spectral values", witness={"m": m})
    return out


@dataclass
class VariationalReport:
    psi: str
    m: int
    sigma_inf: float
    minimizer: list
    attained: list
    attained_value: float
    samples: int
    sampled_min: float
    tol: float
    ok: bool


def variational_check(psi: str, op: OperatorModel, m: int, budget: int = 1000, seed: int = 0,
                      tol: float = 1e-10) -> VariationalReport:
    """inf over sigma(m, A) versus Sigma(m, A) for a catalogue function psi.

    All catalogue functions are nondecreasing in each entry (the product on
    positive spectra), so the sigma-infimum sits at the m smallest spectral
    values. A point of Sigma(m, A) within tol of it is built with
    ``lemma410_approx``; ``budget`` random points of Sigma(m, A) come from
    mixing the generating sequence.
    """
    if psi not in PSI:
        raise ValueError(f"psi must be one of {sorted(PSI)}")
    f = PSI[psi]
    low = smallest_spectral_values(op, m)
    if psi == "product_m" and not op.bounds()[0] > 0:
        raise PreconditionFailed("the product needs a positive spectrum")
    s_inf = f(low)
    if not math.isfinite(s_inf):
        return VariationalReport(psi, m, s_inf, low, [], s_inf, 0, s_inf, tol, True)
    scale = max(1.0, max(abs(float(a)) for a in low)) ** max(1, m)
    appr = lemma410_approx(low, tol / (4 * m * scale), op, depth=m)
    got = f(appr.y)
    x = generating_sequence(op)
    n = len(x) if x.is_finite else max(4 * m, 16)
    section = np.array([float(a) for a in x.truncate(n)])
    rng = np.random.default_rng(seed)
    smin = INF
    for _ in range(budget):
        c = rng.dirichlet(np.ones(3))
        w = np.zeros((m, len(section)))
        for ci in c:
            w[np.arange(m), rng.permutation(len(section))[:m]] += ci
        smin = min(smin, f(w @ section))
    ok = abs(got - s_inf) <= tol and smin >= s_inf - tol
    return VariationalReport(psi, m, s_inf, low, appr.y, got, budget, smin, tol, ok)


# --- families of operators -------------------------------------------------


@dataclass
class FamilyHullReport:
    m: int
    checked: int
    violations: list
    generators: int

    @property
    def ok(self) -> bool:
        return not self.violations


def _selections(op: OperatorModel, m: int, section: int) -> list[tuple]:
    x = generating_sequence(op)
    vals = x.truncate(section) if not x.is_finite else list(x.prefix)
    return sorted({tuple(float(vals[i]) for i in p) for p in itertools.permutations(range(len(vals)), m)})


def family_hull_check(op: OperatorModel, family: Sequence[OperatorModel], m: int, section: int = 8,
                      tol: float = 1e-9) -> FamilyHullReport:
    """Every point of sigma(m, A) in the hull of the union of sigma(m, A_theta)?

    Points and generators are the injective m-selections of the first
    ``section`` entries of each generating sequence (all of them for a
    finite model). The caller vouches for the family hypothesis.
    """
    gens = np.array(sorted({g for a in family for g in _selections(a, m, section)}))
    pts = _selections(op, m, section)
    bad = [list(p) for p in pts if _hull_coefficients(np.asarray(p), gens, tol) is None]
    return FamilyHullReport(m, len(pts), bad, len(gens))
