import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorize.errors import Infeasible, PreconditionFailed
from majorize.numrange import (
    Interval,
    OperatorModel,
    classify_exposed,
    classify_extreme_Q,
    classify_extreme_sigma,
    exposure_margin,
    extreme_points_finite,
    family_hull_check,
    generating_sequence,
    has_extreme_points,
    hat_ess,
    lambda_e,
    lemma410_approx,
    lemma44_realize,
    q_range_membership,
    range_membership,
    sample_perturbations,
    sigma_m_membership,
    sigma_p_membership,
    variational_check,
)
from majorize.oracles import substochastic_lp
from majorize.sequences import SeqDescriptor, Tail

INF = math.inf
HALF = F(1, 2)


def one_sided_pair():
    """Simple eigenvalues approaching 0 from below and 1 from above, plus 1/2."""
    return OperatorModel(((HALF, 1),), (), (Tail("geometric", 0, -1, 1, HALF), Tail("geometric", 1, 1, 1, HALF)))


def two_sided_unbounded():
    return OperatorModel((), (), (Tail("divergent", 0, 1, 1), Tail("divergent", 0, -1, 1)))


def unbounded_above():
    return OperatorModel(((1, 1), (2, 1)), (), (Tail("divergent", 0, 1, 2),))


def half_line_with_eigenvalues():
    return OperatorModel(((-2, 1), (-1, 1), (0, 2)), ((0, INF),))


def trace_class():
    return OperatorModel((), (), (Tail("geometric", 0, 1, 1, HALF), Tail("geometric", 0, -1, 1, HALF)))


def unit_interval():
    return OperatorModel((), ((0, 1),))


class TestHatEss:
    def test_unit_interval(self):
        h = hat_ess(unit_interval())
        assert h.plus.contains(0) and h.plus.contains(HALF) and not h.plus.contains(1)
        assert h.minus.contains(1) and h.minus.contains(HALF) and not h.minus.contains(0)

    def test_infinite_multiplicity(self):
        h = hat_ess(OperatorModel(((0, INF),)))
        assert h.plus.contains(0) and h.minus.contains(0)

    def test_simple_unbounded_eigenvalues(self):
        h = hat_ess(OperatorModel((), (), (Tail("divergent", 0, 1, 1),)))
        assert h.minus.contains(INF)
        assert not any(h.essential(v) for v in (0, 1, 2, 4, 8))

    def test_one_sided_accumulation(self):
        h = hat_ess(one_sided_pair())
        assert h.minus.contains(0) and not h.plus.contains(0)
        assert h.plus.contains(1) and not h.minus.contains(1)


class TestGeneratingSequence:
    def test_finite(self):
        assert sorted(generating_sequence(OperatorModel.diagonal([4, 2, 3, 1])).prefix) == [1, 2, 3, 4]

    def test_continuous_tails_inside(self):
        x = generating_sequence(OperatorModel(((-1, 1), (2, 1)), ((0, 1),)))
        assert x.prefix == (-1, 2)
        assert {t.limit for t in x.tails} == {0, 1}
        assert all(0 < x.entry(n) < 1 for n in range(3, 40))

    def test_infinite_multiplicity_constant(self):
        x = generating_sequence(OperatorModel(((0, INF),)))
        assert x.tails == (Tail("constant", 0),)


class TestMembership:
    def test_multiplicity_bound(self):
        assert not sigma_m_membership([1, 1], OperatorModel.diagonal([1, 2]))

    def test_continuous_point_spectrum(self):
        assert sigma_m_membership([HALF, HALF], unit_interval())
        assert not sigma_p_membership([HALF, HALF], unit_interval())
        assert range_membership([HALF, HALF], unit_interval()).member

    def test_trace_class_eigenvalues(self):
        y = generating_sequence(trace_class())
        assert sigma_m_membership(y, trace_class()) and sigma_p_membership(y, trace_class())

    def test_two_point_realization(self):
        r = range_membership([HALF], OperatorModel.diagonal([0, 1]))
        assert r.member
        assert r.realization.vectors == [{1: (1, HALF), 2: (1, HALF)}]

    def test_outside_hull(self):
        assert range_membership([F(3, 2)], OperatorModel.diagonal([0, 1])).status == "nonmember_with_witness"

    def test_whole_line(self):
        op = two_sided_unbounded()
        assert range_membership([5, -3, 100], op).member
        assert q_range_membership([5, -3, 100], op)

    @given(st.lists(st.integers(-3, 3), min_size=1, max_size=5), st.data())
    @settings(max_examples=60, deadline=None)
    def test_finite_matches_lp(self, spec, data):
        m = data.draw(st.integers(1, len(spec)))
        ys = data.draw(st.lists(st.fractions(-3, 3, max_denominator=3), min_size=m, max_size=m))
        op = OperatorModel.diagonal(spec)
        assert range_membership(ys, op).member == substochastic_lp([float(v) for v in ys], spec)


class TestExtreme:
    def test_one_sided_pair_full_list(self):
        op = one_sided_pair()
        assert lambda_e(op) is None
        assert classify_extreme_sigma(generating_sequence(op), op).extreme

    def test_no_extreme_points_on_whole_line(self):
        op = two_sided_unbounded()
        assert lambda_e(op) == Interval(-INF, INF)
        assert not has_extreme_points(op, INF)

    def test_all_eigenvalues_extreme(self):
        op = unbounded_above()
        assert classify_extreme_sigma(generating_sequence(op), op).extreme

    def test_omitted_eigenvalue_splits(self):
        op = unbounded_above()
        y = SeqDescriptor((1, 2), (Tail("divergent", 0, 1, 4),))
        c = classify_extreme_sigma(y, op)
        assert not c.extreme and c.certified
        lo, hi = c.split
        assert lo.prefix[2] == 4 and hi.prefix[2] == 12
        for k in range(1, 12):
            assert (lo.entry(k) + hi.entry(k)) / 2 == y.entry(k)
        assert range_membership(lo, op, 16).member and range_membership(hi, op, 16).member

    def test_added_essential_entries(self):
        op = half_line_with_eigenvalues()
        assert classify_extreme_sigma([-2, -1, 0, 0], op).extreme
        assert classify_extreme_Q([-2, -1, 0, 0, 0], op).extreme
        with pytest.raises(PreconditionFailed):
            classify_extreme_sigma([-2, -1, 0, 0, 0], op)

    def test_interior_entry_split(self):
        c = classify_extreme_sigma([-2, 0], half_line_with_eigenvalues())
        assert not c.extreme
        assert c.split == ([-2, -1], [-2, 1])

    def test_finite_extreme_points_are_selections(self):
        pts = extreme_points_finite(OperatorModel.diagonal([1, 2, 3]), 2)
        assert sorted(pts) == sorted((a, b) for a in (1, 2, 3) for b in (1, 2, 3) if a != b)

    def test_trace_class_lambda_e(self):
        assert lambda_e(trace_class()) == Interval(0, 0)


class TestExposed:
    def test_trace_class_functional(self):
        op = trace_class()
        y = generating_sequence(op)
        c = classify_exposed(y, op)
        assert c.verdict == "exposed"
        assert [c.functional[k] for k in (1, 2, 3, 4)] == [2.5, -2.5, 2.25, -2.25]
        margin = exposure_margin(y, c.functional, sample_perturbations(y, op, 200, seed=1))
        assert margin > 0

    def test_unbounded_not_exposed(self):
        op = OperatorModel((), (), (Tail("divergent", 0, 1, 1),))
        c = classify_exposed(generating_sequence(op), op)
        assert c.verdict == "not_exposed"
        assert c.witness["pair"] == [65, 66]

    def test_one_sided_pair(self):
        op = one_sided_pair()
        c = classify_exposed(generating_sequence(op), op)
        assert c.verdict == "not_exposed"
        assert c.Lambda_y == Interval(0, 1)

    def test_two_entries_inside(self):
        tails = (Tail("powerlaw", 1, 1, 1, 1), Tail("powerlaw", 0, -1, 1, 1))
        op = OperatorModel(((0, INF), (1, INF)), (), tails)
        y = SeqDescriptor((0, 1), tails)
        assert classify_extreme_sigma(y, op).extreme
        c = classify_exposed(y, op)
        assert c.verdict == "not_exposed" and c.witness["swap"] == [1, 2]


class TestConstructions:
    def test_lemma44_two_point(self):
        op = OperatorModel(((0, INF), (1, INF)))
        r = lemma44_realize([F(1, 3), 0, F(3, 4), 1], op)
        assert r.gram_error() < 1e-12 and r.rayleigh_error() < 1e-12

    def test_lemma44_end_count(self):
        op = OperatorModel(((0, INF), (1, 1)), (), (Tail("geometric", 1, -1, 1, HALF),))
        with pytest.raises(Infeasible):
            lemma44_realize([1, 1], op)

    def test_lemma44_unit_interval(self):
        r = lemma44_realize(SeqDescriptor((), (Tail("geometric", 0, 1, HALF, HALF),)), unit_interval(), depth=12)
        assert r.gram_error() < 1e-12 and r.rayleigh_error() < 1e-10

    def test_lemma410_band(self):
        a = lemma410_approx([HALF, HALF, HALF], 1e-3, unit_interval())
        assert a.max_ratio() <= 1 and a.orthogonal()

    def test_lemma410_isolated(self):
        a = lemma410_approx([1, 2], 1e-6, OperatorModel.diagonal([1, 2, 3]))
        assert list(a.y) == [1, 2]


class TestVariational:
    def test_sum(self):
        r = variational_check("sum_m", OperatorModel.diagonal([1, 2, 3, 4]), 2)
        assert r.sigma_inf == 3 and r.ok

    def test_sum_single(self):
        r = variational_check("sum_m", OperatorModel.diagonal([5, 2, 9]), 1)
        assert r.sigma_inf == 2 and r.ok

    def test_product(self):
        r = variational_check("product_m", OperatorModel.diagonal([1, 2, 3]), 2)
        assert r.sigma_inf == 2 and r.ok

    def test_continuous(self):
        assert variational_check("sum_m", unit_interval(), 2).ok

    def test_product_needs_positive(self):
        with pytest.raises(PreconditionFailed):
            variational_check("product_m", OperatorModel.diagonal([-1, 2]), 1)


class TestFamilyHull:
    def test_mixture(self):
        fam = [OperatorModel.diagonal([0, 2]), OperatorModel.diagonal([2, 0])]
        assert family_hull_check(OperatorModel.diagonal([1, 1]), fam, 2).ok

    def test_self(self):
        op = OperatorModel.diagonal([0, 1, 2])
        assert family_hull_check(op, [op], 2).ok

    def test_violation(self):
        fam = [OperatorModel.diagonal([0, 0]), OperatorModel.diagonal([0, 1])]
        r = family_hull_check(OperatorModel.diagonal([1, 1]), fam, 2)
        assert r.violations == [[1.0, 1.0]]


def test_operator_json_round_trip():
    op = OperatorModel(((0, INF), (2, 3)), ((5, 6),), (Tail("geometric", 1, 1, 1, HALF),))
    assert OperatorModel.from_json(op.to_json()) == op


def test_bounded_exposed_outside_lambda():
    # eigenvalues 2, 3 outside the essential point 0, y using every copy of 0
    op = OperatorModel(((0, INF), (2, 1), (3, 1)))
    y = SeqDescriptor((3, 2), (Tail("constant", 0),))
    assert classify_extreme_sigma(y, op).extreme
    c = classify_exposed(y, op)
    assert c.verdict == "exposed"
    assert exposure_margin(y, c.functional, sample_perturbations(y, op, 500, seed=3)) > 0
