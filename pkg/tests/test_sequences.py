import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorize.errors import ClassMismatch, EmptySequence
from majorize.oracles import brute_q
from majorize.sequences import (
    SeqDescriptor,
    Tail,
    classify_space,
    entry,
    hat_extension,
    lorentz_norm,
    marcinkiewicz_norm,
    partial_sum_max,
    partial_sum_min,
    q_membership,
    to_number,
)

GEOM = Tail("geometric", 0, 1, 1, F(1, 2))
HARMONIC = Tail("powerlaw", 0, 1, 1, 1)


def S(prefix=(), tails=()):
    return SeqDescriptor(tuple(prefix), tuple(tails))


class TestEntry:
    def test_prefix_readout(self):
        assert entry(S((3, 1)), 2) == 1

    def test_geometric_closed_form(self):
        assert entry(S((), (GEOM,)), 3) == F(1, 8)

    def test_prefix_precedes_tails(self):
        assert entry(S((5,), (GEOM,)), 1) == 5

    def test_round_robin(self):
        x = S((9,), (GEOM, Tail("constant", 7)))
        assert x.truncate(5) == [9, F(1, 2), 7, F(1, 4), 7]

    def test_index_from_one(self):
        with pytest.raises(IndexError):
            entry(S((1,)), 0)

    def test_divergent_entries(self):
        t = Tail("divergent", 0, -1, 3)
        assert [t.entry(n) for n in (1, 2, 3)] == [-6, -12, -24]

    def test_json_round_trip(self):
        x = S((1, F(1, 3)), (GEOM, Tail("divergent", 0, 1, 2), Tail("powerlaw", 1, -1, 2, 3)))
        assert SeqDescriptor.from_json(x.to_json()) == x


class TestEnvelopes:
    def test_three_entries(self):
        x = S((3, 1, 2))
        assert partial_sum_max(x, 2) == 5
        assert partial_sum_min(x, 2) == 3

    def test_prefix_plus_geometric(self):
        # brute force on the first 20 entries, plus the tail bound 2^-20
        x = S((5,), (GEOM,))
        vals = x.truncate(21)
        brute = max(a + b for a, b in itertools.combinations(vals, 2))
        assert partial_sum_max(x, 2) == F(11, 2)
        assert abs(float(partial_sum_max(x, 2)) - float(brute)) <= 2.0**-20

    def test_single_entry(self):
        x = S((7,))
        assert partial_sum_max(x, 1) == partial_sum_min(x, 1) == 7

    def test_infimum_not_attained(self):
        # entries 1/2, 1/4, ... never reach 0 but the infimum of pair sums is 0
        assert partial_sum_min(S((), (GEOM,)), 2) == 0

    def test_divergent_makes_envelope_infinite(self):
        x = S((1,), (Tail("divergent", 0, 1, 1),))
        assert partial_sum_max(x, 3) == math.inf
        assert partial_sum_min(x, 1) == 1

    def test_empty_sequence(self):
        with pytest.raises(EmptySequence):
            q_membership(S((1,)), S(), 1)

    @given(st.lists(st.integers(-20, 20), min_size=1, max_size=7), st.data())
    @settings(max_examples=200, deadline=None)
    def test_matches_enumeration(self, xs, data):
        m = data.draw(st.integers(1, len(xs)))
        sums = [sum(c) for c in itertools.combinations(xs, m)]
        x = S(xs)
        assert partial_sum_max(x, m) == max(sums)
        assert partial_sum_min(x, m) == min(sums)

    @given(st.permutations([4, -1, F(1, 3), 0, 9, 2]), st.integers(1, 6))
    @settings(max_examples=100, deadline=None)
    def test_permutation_symmetry(self, perm, m):
        base = S((4, -1, F(1, 3), 0, 9, 2))
        assert partial_sum_max(S(perm), m) == partial_sum_max(base, m)
        assert partial_sum_min(S(perm), m) == partial_sum_min(base, m)


class TestQMembership:
    def test_equal_sums(self):
        v = q_membership(S((2, 2)), S((1, 3)), 2)
        assert v.ok and v.complete

    def test_exceeds_maximum(self):
        v = q_membership(S((4,)), S((1, 3)), 1)
        assert not v.ok
        assert v.witness.m == 1 and v.witness.lhs == 4 and v.witness.bound == 3

    def test_against_hat_of_geometric(self):
        x = hat_extension(S((1,), (GEOM,)))
        assert partial_sum_min(x, 2) == 0
        assert partial_sum_max(x, 2) == F(3, 2)
        assert q_membership(S((F(1, 2), F(1, 2))), x, 2).ok
        # brute check on a truncation of x plus two copies of the limit
        assert brute_q([0.5, 0.5], [float(a) for a in S((1,), (GEOM,)).truncate(8)] + [0.0, 0.0])

    def test_witness_replays(self):
        y, x = S((5, 1, 1)), S((3, 2, 1))
        v = q_membership(y, x, 3)
        assert not v.ok
        w = v.witness
        lhs = sum(y.entry(i) for i in w.indices)
        assert lhs == w.lhs
        assert (lhs > partial_sum_max(x, w.m)) if w.side == "upper" else (lhs < partial_sum_min(x, w.m))

    def test_lower_violation(self):
        v = q_membership(S((0,)), S((1, 3)), 1)
        assert not v.ok and v.witness.side == "lower"

    def test_infinite_y_checked_to_depth(self):
        v = q_membership(S((), (GEOM,)), S((1,), (Tail("constant", 0),)), 16)
        assert v.ok and v.depth == 16 and not v.complete

    @given(st.lists(st.integers(-6, 6), min_size=1, max_size=8),
           st.lists(st.integers(-6, 6), min_size=1, max_size=8))
    @settings(max_examples=300, deadline=None)
    def test_shortcut_equals_brute_force(self, ys, xs):
        assert q_membership(S(ys), S(xs), len(ys)).ok == brute_q(ys, xs)


class TestHat:
    def test_constant_tail_idempotent(self):
        x = S((), (Tail("constant", 1),))
        h = hat_extension(x)
        assert h.truncate(10) == [1] * 10

    def test_geometric_gets_zero_tail(self):
        h = hat_extension(S((), (GEOM,)))
        assert any(t.is_flat and t.limit == 0 for t in h.tails)

    def test_divergent_up_unchanged(self):
        x = S((), (Tail("divergent", 0, 1, 1),))
        assert hat_extension(x) == x

    def test_finite_unchanged(self):
        x = S((1, 2))
        assert hat_extension(x) == x

    @pytest.mark.parametrize("x", [
        S((1,), (GEOM,)),
        S((), (Tail("powerlaw", 2, -1, 1, 2), Tail("geometric", -1, 1, 1, F(1, 3)))),
        S((0,), (Tail("constant", 4), GEOM)),
    ])
    def test_idempotent(self, x):
        h = hat_extension(x)
        hh = hat_extension(h)
        for m in range(1, 6):
            assert partial_sum_max(h, m) == partial_sum_max(hh, m)
            assert partial_sum_min(h, m) == partial_sum_min(hh, m)


class TestNorms:
    def test_lorentz_two_ones(self):
        val, rem = lorentz_norm(S((1, 1)), S((), (HARMONIC,)), 64)
        np.testing.assert_allclose(val, 1.5)
        assert rem == 0

    def test_lorentz_zero(self):
        val, _ = lorentz_norm(S((0,)), S((), (HARMONIC,)), 64)
        assert val == 0

    def test_lorentz_best_rearrangement(self):
        val, _ = lorentz_norm(S((0, 0, 0, 0, 1)), S((), (HARMONIC,)), 64)
        np.testing.assert_allclose(val, 1.0)

    def test_marcinkiewicz_self(self):
        x = S((), (HARMONIC,))
        np.testing.assert_allclose(marcinkiewicz_norm(x, x, 100)[0], 1.0)

    def test_marcinkiewicz_unit_vector(self):
        np.testing.assert_allclose(marcinkiewicz_norm(S((1,)), S((), (HARMONIC,)), 100)[0], 1.0)

    def test_marcinkiewicz_homogeneous(self):
        x = S((), (HARMONIC,))
        np.testing.assert_allclose(marcinkiewicz_norm(x.scaled(2), x, 100)[0], 2.0)

    def test_wrong_class(self):
        with pytest.raises(ClassMismatch):
            lorentz_norm(S((1,)), S((), (GEOM,)), 8)

    def test_duality_bound(self, rng):
        x = S((), (HARMONIC,))
        for _ in range(20):
            y = rng.uniform(-1, 1, 6)
            xp = rng.uniform(-1, 1, 6)
            lhs = abs(float(np.dot(y, xp)))
            m = marcinkiewicz_norm(S(tuple(y.tolist())), x, 64)[0]
            lo = lorentz_norm(S(tuple(xp.tolist())), x, 64)[0]
            assert lhs <= m * lo + 1e-12


def test_abel_identity(rng):
    for _ in range(50):
        y = np.sort(rng.uniform(0, 1, 7))[::-1]
        xp = np.sort(np.abs(rng.normal(size=7)))[::-1]
        lhs = float(np.dot(y, xp))
        diffs = xp - np.append(xp[1:], 0.0)
        rhs = float(np.dot(diffs, np.cumsum(y)))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestClassify:
    def test_unbounded(self):
        assert classify_space(S((), (Tail("divergent", 0, 1, 1),))) == 1

    def test_bounded_not_null(self):
        assert classify_space(S((), (Tail("constant", 1),))) == 2

    def test_c0_not_l1(self):
        assert classify_space(S((), (HARMONIC,))) == 3

    def test_geometric(self):
        assert classify_space(S((), (GEOM,))) == 4

    def test_finite(self):
        assert classify_space(S((1, 2))) == 5


def test_to_number_exactness():
    assert to_number("1/3") == F(1, 3)
    assert to_number(2) == F(2)
    assert to_number("-inf") == -math.inf
    with pytest.raises(TypeError):
        to_number(True)


def test_sup_attained_with_several_tails():
    # the top-2 sum 1 + 1/2 uses the geometric tail even though a flat tail follows it
    from majorize.sequences import sup_attained
    x = SeqDescriptor((1,), (Tail("geometric", 0, 1, 1, F(1, 2)), Tail("constant", 0)))
    assert sup_attained(x, 2)
    assert not sup_attained(SeqDescriptor((), (Tail("geometric", 1, -1, 1, F(1, 2)),)), 1)
