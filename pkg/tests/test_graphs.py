import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from majorize.errors import MalformedFamily, NotApplicable, PreconditionFailed
from majorize.graphs import (
    SetFamily,
    admissible_path,
    build_graph,
    check_g1,
    check_g2,
    check_g3,
    extreme_split,
    find_admissible_cycle,
    is_admissible,
    is_pattern,
    matrix_to_family,
    norm_S,
    seminorm_pk,
    validate_stochastic,
)

HALF = F(1, 2)
TRIANGLE = SetFamily([["g1", "g2"], ["g2", "g3"], ["g3", "g1"]], "all")


def matrix_weight(rows):
    return {(i, j): x for i, r in enumerate(rows) for j, x in enumerate(r)}


class TestBuildGraph:
    def test_two_by_two_is_four_cycle(self):
        g = build_graph(matrix_to_family(2, 2))
        assert len(g.vertices) == 4
        assert all(len(nb) == 2 for nb in g.adjacency.values())
        assert g.adjacency[(0, 0)] == {(0, 1), (1, 0)}

    def test_single_set_is_triangle(self):
        g = build_graph(SetFamily([["a", "b", "c"]]))
        assert g.adjacency["a"] == {"b", "c"}

    def test_disjoint_sets(self):
        g = build_graph(SetFamily([["a"], ["b"]]))
        assert admissible_path(g, "a", "b") is None

    def test_duplicate_vertex(self):
        with pytest.raises(MalformedFamily):
            SetFamily([["a", "a"]])


class TestConditions:
    def test_g1_matrix(self):
        assert check_g1(matrix_to_family(3, 4)) == (True, None)

    def test_g1_violation(self):
        assert check_g1(SetFamily([["a", "b"], ["b", "c"], ["b", "d"]])) == (False, "b")

    def test_g1_empty_family(self):
        assert check_g1(SetFamily([]))[0]

    def test_g2_matrix_rows_vs_columns(self):
        r = check_g2(matrix_to_family(3, 3))
        assert r.ok
        assert {frozenset(r.plus), frozenset(r.minus)} == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}

    def test_g2_triangle_odd_cycle(self):
        r = check_g2(TRIANGLE)
        assert not r.ok and len(r.odd_cycle) == 3

    def test_g2_single_set(self):
        assert check_g2(SetFamily([["a", "b"]])).ok

    def test_g2_needs_g1(self):
        with pytest.raises(PreconditionFailed):
            check_g2(SetFamily([["a", "b"], ["b", "c"], ["b", "d"]]))

    def test_g3_matrix(self):
        ok, order = check_g3(matrix_to_family(2, 3))
        assert ok and sorted(order) == list(range(5))

    def test_g3_infinite_matrix(self):
        assert check_g3(matrix_to_family(None, None), depth=20)[0]
        assert check_g3(matrix_to_family(3, None), depth=20)[0]

    def test_g3_later_sets_inside_first(self):
        # G_0 = all naturals, G_k = {k}: no later set brings a new vertex
        fam = SetFamily.from_rules(lambda k: itertools.count(1) if k == 0 else [k],
                                   lambda v: [0, v])
        assert not check_g3(fam, depth=16)[0]

    @pytest.mark.parametrize("shape", [(1, 1), (2, 2), (3, 5), (4, 4)])
    def test_matrix_families_satisfy_all(self, shape):
        f = matrix_to_family(*shape)
        assert check_g1(f)[0] and check_g2(f).ok and check_g3(f)[0]


class TestPathsAndCycles:
    def test_trivial_path(self):
        g = build_graph(matrix_to_family(2, 2))
        assert admissible_path(g, (0, 0), (0, 0)) == [(0, 0)]

    def test_opposite_corners(self):
        f = matrix_to_family(2, 2)
        p = admissible_path(build_graph(f), (0, 0), (1, 1))
        assert len(p) == 3 and is_admissible(f, p)

    def test_shortest_paths_admissible(self, rng):
        f = matrix_to_family(4, 4)
        g = build_graph(f)
        verts = g.vertices
        for _ in range(50):
            u, v = (verts[i] for i in rng.choice(len(verts), 2))
            assert is_admissible(f, admissible_path(g, u, v))

    def test_half_matrix_four_cycle(self):
        f = matrix_to_family(2, 2)
        c = find_admissible_cycle(f, matrix_weight([[HALF, HALF], [HALF, HALF]]))
        assert len(c) == 4 and is_admissible(f, c, cyclic=True)

    def test_permutation_support_acyclic(self):
        assert find_admissible_cycle(matrix_to_family(3, 3), [(0, 1), (1, 2), (2, 0)]) is None

    def test_triangle_three_cycle(self):
        assert len(find_admissible_cycle(TRIANGLE, ["g1", "g2", "g3"])) == 3


class TestWeights:
    def test_permutation_valid(self):
        f = matrix_to_family(3, 3)
        w = {(0, 1): 1, (1, 2): 1, (2, 0): 1}
        assert validate_stochastic(w, f).valid and is_pattern(w, f)

    def test_all_half_three_by_three(self):
        f = matrix_to_family(3, 3)
        v = validate_stochastic({(i, j): HALF for i in range(3) for j in range(3)}, f)
        assert not v.valid
        assert (0, F(3, 2), "sum exceeds 1") in v.offending

    def test_triangle_half(self):
        w = {"g1": HALF, "g2": HALF, "g3": HALF}
        assert validate_stochastic(w, TRIANGLE).valid
        assert not is_pattern(w, TRIANGLE)
        assert all(seminorm_pk(w, TRIANGLE, k) == 1 for k in range(3))

    def test_identity_pattern(self):
        assert is_pattern({(0, 0): 1, (1, 1): 1}, matrix_to_family(2, 2))

    def test_zero_weight_not_pattern(self):
        assert not is_pattern({}, matrix_to_family(2, 2))

    def test_pattern_seminorms(self):
        f = matrix_to_family(3, 3)
        w = {(0, 0): 1, (1, 2): 1}
        assert {seminorm_pk(w, f, k) for k in range(6)} <= {0, 1}

    def test_example_weight_one_over_k(self):
        # disjoint sets, set k (0-based) has k + 1 vertices carrying 1/(k + 1)
        f = SetFamily([[(k, j) for j in range(k + 1)] for k in range(6)], "all")
        w = {(k, j): F(1, k + 1) for k in range(6) for j in range(k + 1)}
        assert seminorm_pk(w, f, 3) == 1
        assert norm_S(w, f) == (1, True)


class TestExtremeSplit:
    def test_half_two_by_two(self):
        f = matrix_to_family(2, 2)
        w = matrix_weight([[HALF, HALF], [HALF, HALF]])
        r = extreme_split(w, f)
        assert r.outcome == "split"
        self._check_split(w, r, f)

    def test_permutation(self):
        r = extreme_split({(0, 1): 1, (1, 0): 1}, matrix_to_family(2, 2))
        assert r.outcome == "pattern_certificate"

    def test_triangle_not_applicable(self):
        with pytest.raises(NotApplicable) as e:
            extreme_split({"g1": HALF, "g2": HALF, "g3": HALF}, TRIANGLE)
        assert len(e.value.witness) == 3

    @staticmethod
    def _check_split(w, r, f):
        keys = set(w) | set(r.w_plus) | set(r.w_minus)
        for v in keys:
            assert (r.w_plus.get(v, 0) + r.w_minus.get(v, 0)) / 2 == w.get(v, 0)
        assert r.w_plus != r.w_minus
        assert validate_stochastic(r.w_plus, f).valid and validate_stochastic(r.w_minus, f).valid

    def test_decision_procedure_random(self, rng):
        # random w in S^{G1}: rational mixtures of patterns on random bipartite families
        for _ in range(40):
            f, pats = _random_family(rng)
            if not pats:
                continue
            k = int(rng.integers(1, 4))
            idx = rng.choice(len(pats), k)
            coef = [F(int(c), 1) for c in rng.integers(1, 5, k)]
            tot = sum(coef)
            w: dict = {}
            for c, i in zip(coef, idx):
                for v in pats[i]:
                    w[v] = w.get(v, 0) + c / tot
            r = extreme_split(w, f)
            clean = {v: x for v, x in w.items() if x != 0}
            assert (r.outcome == "pattern_certificate") == is_pattern(clean, f)
            if r.outcome == "split":
                self._check_split(clean, r, f)


def _random_family(rng, n_plus=3, n_minus=3, n_vertices=7):
    """Sets on two sides; each vertex joins one set on each side or a single set. Satisfies (g1), (g2)."""
    sets = [[] for _ in range(n_plus + n_minus)]
    for v in range(n_vertices):
        a = int(rng.integers(n_plus))
        sets[a].append(v)
        if rng.random() < 0.8:
            sets[n_plus + int(rng.integers(n_minus))].append(v)
    keep = [s for s in sets if s]
    g1 = [k for k in range(len(keep)) if rng.random() < 0.5]
    f = SetFamily(keep, g1)
    pats = []
    for r in range(n_vertices + 1):
        for sub in itertools.combinations(range(n_vertices), r):
            w = {v: 1 for v in sub}
            if is_pattern(w, f):
                pats.append(sub)
    return f, pats


def _lp_feasible(f, n_vertices):
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for k in range(f.count):
        row = np.zeros(n_vertices)
        row[f.members(k)] = 1
        a_ub.append(row)
        b_ub.append(1.0)
        if f.is_g1(k):
            a_eq.append(row)
            b_eq.append(1.0)
    res = linprog(np.zeros(n_vertices), A_ub=np.array(a_ub), b_ub=b_ub,
                  A_eq=np.array(a_eq) if a_eq else None, b_eq=b_eq or None,
                  bounds=[(0, None)] * n_vertices, method="highs")
    return res.status == 0


def test_no_pattern_means_no_stochastic_weight(rng):
    # finite (g1)+(g2) families: an empty pattern set forces an empty stochastic set
    seen_empty = 0
    for _ in range(200):
        f, pats = _random_family(rng)
        if not pats:
            seen_empty += 1
            assert not _lp_feasible(f, 7)
        else:
            assert _lp_feasible(f, 7)
    assert seen_empty > 0


def test_infinite_matrix_membership():
    f = matrix_to_family(2, None)
    assert f.members(0, 3) == [(0, 0), (0, 1), (0, 2)]
    assert f.sets_of((1, 5)) == [1, 2 + 5]
