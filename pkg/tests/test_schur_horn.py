import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majorize.errors import DomainViolation, Infeasible, NotApplicable
from majorize.oracles import substochastic_image_vertices, substochastic_lp
from majorize.schur_horn import (
    apply_weight,
    approx_in_Pxr,
    classify_cases,
    extreme_in_Sxm,
    ladder_matrix,
    realize_deflation,
    realize_diagonal,
    realize_two_point,
    roots_sum_is_zero,
    sr_membership,
)
from majorize.sequences import SeqDescriptor, Tail, hat_extension, q_membership

from conftest import mix_partial_permutations

GEOM = Tail("geometric", 0, 1, 1, F(1, 2))
HALF = F(1, 2)


def S(prefix=(), tails=()):
    return SeqDescriptor(tuple(prefix), tuple(tails))


def check_realization(r, y_vals, exact=True):
    assert r.gram_error() < 1e-12
    assert r.rayleigh_error() < 1e-10
    assert list(r.rayleigh) == list(y_vals)
    rows_ok, cols_ok = r.weight_checks()
    assert rows_ok and cols_ok
    if exact:
        assert r.exact and r.exact_orthonormal()


class TestApplyWeight:
    def test_identity(self):
        x = S((1, 3, 7))
        assert apply_weight([{1: 1}, {2: 1}, {3: 1}], x).prefix == x.prefix

    def test_two_point_row(self):
        assert apply_weight([[HALF, HALF]], S((1, 3))).prefix == (2,)

    def test_geometric_row_divergent_x(self):
        x = S((), (Tail("divergent", 0, 1, HALF),))
        with pytest.raises(DomainViolation) as e:
            apply_weight([S((), (GEOM,))], x)
        assert e.value.witness["row"] == 1

    def test_geometric_row_geometric_x(self):
        y = apply_weight([S((), (Tail("geometric", 0, 1, 1, F(1, 3)),))], S((), (GEOM,)))
        assert y.prefix == (F(1, 5),)


class TestTwoPoint:
    def test_midpoint(self):
        alpha, u = realize_two_point(2, 1, 3)
        assert alpha == HALF
        np.testing.assert_allclose(u, (math.sqrt(0.5), math.sqrt(0.5)))

    def test_at_first_point(self):
        assert realize_two_point(1, 1, 3) == (1, (1, 0))

    def test_at_second_point(self):
        assert realize_two_point(3, 1, 3) == (0, (0, 1))

    def test_outside(self):
        with pytest.raises(Infeasible):
            realize_two_point(4, 1, 3)


class TestDeflation:
    def test_equal_pair(self):
        r = realize_deflation(S((2, 2)), S((1, 3)))
        check_realization(r, [2, 2])
        assert r.vectors[0] == {1: (1, HALF), 2: (1, HALF)}
        assert {s for s, _ in r.vectors[1].values()} == {1, -1}

    def test_identity(self):
        r = realize_deflation(S((5, 1, 3)), S((1, 3, 5)))
        check_realization(r, [5, 1, 3])
        assert all(len(v) == 1 for v in r.vectors)

    def test_case_b_slack(self):
        y = S((F(9, 10), HALF))
        x = S((1,), (GEOM,))
        r = realize_deflation(y, x, case="b")
        check_realization(r, [F(9, 10), HALF])


class TestRealizeDiagonal:
    def test_two_two(self):
        check_realization(realize_diagonal(S((2, 2)), S((1, 3))), [2, 2])

    def test_multiplicity_count(self):
        # sup 1 attained once by x, y asks for it twice with nothing above
        x = S((1,), (Tail("geometric", 1, -1, HALF, HALF),))
        w = realize_diagonal(S((1, 1)), x)
        assert w.kind == "multiplicity" and w.conclusive
        assert not substochastic_lp([1, 1], [1.0] + [float(x.entry(k)) for k in range(2, 12)])

    def test_hat_sandwich(self):
        xh = hat_extension(S((1,), (GEOM,)))
        for y in ([HALF, HALF], [0, 1, 0, F(1, 4)], [F(3, 4)] * 2):
            assert q_membership(S(y), xh, 16).ok
            r = realize_diagonal(S(y), xh)
            check_realization(r, y)

    def test_infinite_y_against_hat_normal(self):
        xh = hat_extension(S((1,), (GEOM,)))
        y = S((HALF,), (Tail("geometric", 0, 1, HALF, F(1, 3)),))
        r = realize_diagonal(y, xh, depth=20)
        assert r.gram_error() < 1e-12 and r.rayleigh_error() < 1e-10
        assert len(r.vectors) == 20

    def test_divergent_spectrum(self):
        x = S((1,), (Tail("divergent", 0, 1, 1),))
        for y in ([3, F(5, 2)], [12, 2]):
            assert sr_membership(S(y), x).member
        assert sr_membership(S((1, 1)), x).status == "nonmember_with_witness"

    def test_cases_classified(self):
        c = classify_cases(S((F(1, 3), F(1, 5))), S((), (GEOM,)))
        assert "+" in c and "-" in c


class TestSRMembership:
    def test_q_violation(self):
        v = sr_membership(S((4,)), S((1, 3)))
        assert v.status == "nonmember_with_witness" and v.witness.kind == "q_violation"

    def test_permutation(self):
        v = sr_membership(S((3, 1, 2)), S((1, 2, 3)))
        assert v.member
        assert all(len(u) == 1 for u in v.realization.vectors)

    def test_certificate(self):
        v = sr_membership(S((2, 2)), S((1, 3)))
        assert v.member and v.realization.exact_orthonormal()

    def test_members_pass_q(self, rng):
        for _ in range(50):
            x = rng.integers(-5, 6, int(rng.integers(2, 7)))
            y, _ = mix_partial_permutations(x, int(rng.integers(1, len(x) + 1)), rng)
            v = sr_membership(S(tuple(y.tolist())), S(tuple(x.tolist())))
            assert v.member
            assert q_membership(S(tuple(y.tolist())), S(tuple(x.tolist())), len(y)).ok

    @given(st.lists(st.integers(-4, 4), min_size=1, max_size=6), st.data())
    @settings(max_examples=150, deadline=None)
    def test_matches_lp_oracle(self, xs, data):
        m = data.draw(st.integers(1, len(xs)))
        ys = data.draw(st.lists(st.fractions(-4, 4, max_denominator=4), min_size=m, max_size=m))
        v = sr_membership(S(ys), S(xs))
        assert v.status != "undecided_at_depth"
        assert v.member == substochastic_lp([float(a) for a in ys], [float(a) for a in xs])
        if v.member:
            check_realization(v.realization, ys)


class TestExactOrthogonality:
    def test_cancelling_roots(self):
        # sqrt(2) - sqrt(8)/2 = 0
        assert roots_sum_is_zero([(1, F(2)), (-1, F(2))])
        assert roots_sum_is_zero([(1, F(2)), (-1, F(8, 4))])
        assert not roots_sum_is_zero([(1, F(2)), (-1, F(3))])


class TestApproxPxr:
    def test_finite_unchanged(self):
        a = approx_in_Pxr(S((1, 2)), 0.1)
        assert a.l1_error == 0

    def test_geometric(self):
        a = approx_in_Pxr(S((), (GEOM,)), 0.01)
        assert a.l1_error < 0.01

    def test_unbounded(self):
        with pytest.raises(NotApplicable):
            approx_in_Pxr(S((), (Tail("divergent", 0, 1, 1),)), 0.1)

    def test_large_eps(self):
        a = approx_in_Pxr(S((), (GEOM,)), 10.0)
        assert a.l1_error < 10.0


class TestLadder:
    def test_distinct_values_unchanged(self):
        w = [[HALF, HALF, 0], [0, HALF, HALF]]
        lm = ladder_matrix(w, [1, 2, 3], m=2, extend=False)
        np.testing.assert_allclose(lm.dense(), np.array(w, float))
        assert lm.product([1, 2, 3]) == [F(3, 2), F(5, 2)]

    def test_block_consolidation(self):
        x = [1, 1, 2]
        lm = ladder_matrix([[F(1, 4), F(1, 4), HALF]], x, m=1, extend=False)
        assert lm.dense()[0].tolist() == [0.5, 0.0, 0.5]
        assert lm.product(x)[0] == F(3, 2)

    def test_extension_rows(self):
        lm = ladder_matrix([[HALF, HALF], [HALF, HALF]], [1, 2], m=1)
        assert lm.extended
        np.testing.assert_allclose([float(c) for c in lm.column_sums()], [1.0, 1.0])

    def test_product_preserved_exactly(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 6))
            x = [int(v) for v in rng.integers(0, 3, n)]
            k = int(rng.integers(1, n + 1))
            w = []
            for _ in range(k):
                c = rng.integers(0, 4, n)
                c[rng.integers(n)] += 1
                w.append([F(int(a), int(c.sum())) for a in c])
            cols = [sum(r[j] for r in w) for j in range(n)]
            if max(cols) > 1:
                continue
            lm = ladder_matrix(w, x, m=k, extend=False)
            before = [sum(r[j] * x[j] for j in range(n)) for r in w]
            assert lm.product(x)[:k] == before


class TestExtremeSxm:
    def test_smallest_entries_extreme(self):
        v = extreme_in_Sxm([1, 2], [1, 2, 3])
        assert v.extreme and v.pattern is not None

    def test_interior_split(self):
        v = extreme_in_Sxm([F(3, 2)], [1, 2])
        assert not v.extreme
        a, b = v.split
        assert (np.asarray(a, float) + np.asarray(b, float)) / 2 == pytest.approx([1.5])

    def test_zero_entry_strengthened(self):
        with pytest.raises(NotApplicable):
            extreme_in_Sxm([1], [0, 1, 2], m=None, strengthened=True)

    def test_against_lp_vertices(self, rng):
        for _ in range(25):
            n = int(rng.integers(2, 5))
            m = int(rng.integers(1, n + 1))
            x = [int(v) for v in rng.choice(np.arange(-3, 6), n, replace=False)]
            verts = {tuple(p) for p in substochastic_image_vertices(x, m).tolist()}
            for sel in itertools.permutations(range(n), m):
                y = [x[i] for i in sel]
                assert extreme_in_Sxm(y, x).extreme == (tuple(map(float, y)) in verts)
