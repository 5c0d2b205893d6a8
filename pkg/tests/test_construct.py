import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polydim.construct import (
    SignPattern,
    bend,
    bend_sites,
    build_degenerate,
    build_planar,
    circumradius,
    enumerate_degenerate_classes,
    find_bend_site,
    raise_to_dimension,
    random_complement_direction,
    random_interior_lengths,
    sample,
)
from polydim.core import (
    DEFAULT_TOL,
    EdgeLengths,
    Polygon,
    PreconditionError,
    ValidationError,
    dimension,
    embed,
    gram,
    project_to_span,
)

SQUARE = Polygon(2, [[1, 0], [1, 1], [0, 1]], (1, 1, 1, 1))


def brute_force_classes(lengths):
    """Every sign vector with zero signed sum, identified with its negation."""
    q = [Fraction(x) for x in lengths]
    found = set()
    for signs in itertools.product((1, -1), repeat=len(q)):
        if sum(s * x for s, x in zip(signs, q)) == 0:
            canon = signs if signs[0] == 1 else tuple(-s for s in signs)
            found.add(canon)
    return found


def circle_through(p, q, r):
    """Circumcenter and radius of three points in the plane."""
    ax, ay = p
    bx, by = q
    cx, cy = r
    dd = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / dd
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / dd
    center = np.array([ux, uy])
    return center, float(np.linalg.norm(np.asarray(p) - center))


class TestSignPattern:
    def test_string_round_trip(self):
        p = SignPattern.parse("+-+-")
        assert p.signs == (1, -1, 1, -1)
        assert str(p) == "+-+-"

    def test_rejects_garbage(self):
        with pytest.raises(ValidationError):
            SignPattern.parse("+x-")

    def test_canonical(self):
        assert SignPattern.parse("-++").canonical() == SignPattern.parse("+--")


class TestDegenerate:
    def test_equilateral_four_gon(self):
        got = enumerate_degenerate_classes((1, 1, 1, 1))
        assert [str(p) for p in got] == ["++--", "+-+-", "+--+"]
        assert {p.signs for p in got} == brute_force_classes((1, 1, 1, 1))

    def test_triangle_has_none(self):
        assert enumerate_degenerate_classes((1, 1, 1)) == []

    def test_border_triangle(self):
        assert [str(p) for p in enumerate_degenerate_classes((2, 1, 1))] == ["+--"]

    def test_hexagon_count(self):
        assert len(enumerate_degenerate_classes((1,) * 6)) == math.comb(6, 3) // 2 == 10

    @given(st.lists(st.integers(1, 6), min_size=3, max_size=9))
    @settings(max_examples=60)
    def test_matches_brute_force(self, lengths):
        got = {p.signs for p in enumerate_degenerate_classes(lengths)}
        assert got == brute_force_classes(lengths)

    @given(st.lists(st.integers(1, 5), min_size=3, max_size=8), st.randoms(use_true_random=False))
    @settings(max_examples=40)
    def test_count_invariant_under_permutation(self, lengths, rnd):
        perm = list(range(len(lengths)))
        rnd.shuffle(perm)
        shuffled = [lengths[i] for i in perm]
        a = enumerate_degenerate_classes(lengths)
        b = enumerate_degenerate_classes(shuffled)
        assert len(a) == len(b)
        permuted = {SignPattern(tuple(p.signs[i] for i in perm)).canonical().signs for p in a}
        assert permuted == {p.signs for p in b}

    def test_non_dyadic_lengths(self):
        got = enumerate_degenerate_classes((0.5, 0.25, 0.25, 1.0))
        assert {p.signs for p in got} == brute_force_classes((0.5, 0.25, 0.25, 1.0))

    def test_size_guard(self):
        with pytest.raises(PreconditionError):
            enumerate_degenerate_classes((1,) * 25)

    def test_build_examples(self):
        P = build_degenerate((1, 1, 1, 1), SignPattern.parse("++--"), 2)
        np.testing.assert_array_equal(P.vertices, [[1, 0], [2, 0], [1, 0]])
        Q = build_degenerate((2, 1, 1), SignPattern.parse("+--"), 2)
        np.testing.assert_array_equal(Q.vertices, [[2, 0], [1, 0]])
        assert dimension(P) == dimension(Q) == 1

    def test_build_rejects_bad_pattern(self):
        with pytest.raises(ValidationError):
            build_degenerate((1, 1, 1, 1), SignPattern.parse("+++-"), 2)
        with pytest.raises(ValidationError):
            build_degenerate((1, 1, 1, 1), SignPattern.parse("++-"), 2)

    @pytest.mark.parametrize("ell", [(1, 1, 1, 1), (1,) * 6, (2, 1, 1), (3, 1, 1, 1), (1, 2, 3, 4, 2)])
    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_every_class_is_one_dimensional(self, ell, d):
        for p in enumerate_degenerate_classes(ell):
            P = build_degenerate(ell, p, d)
            assert dimension(P) == 1
            P.validate()


class TestPlanar:
    def test_square(self):
        R, inside = circumradius((1, 1, 1, 1))
        # 4 * 2 arcsin(1 / 2R) = 2 pi  =>  R = 1 / (2 sin(pi/4))
        assert R == pytest.approx(1 / (2 * math.sin(math.pi / 4)), rel=1e-12)
        assert inside
        P = build_planar((1, 1, 1, 1))
        assert dimension(P) == 2
        np.testing.assert_allclose(P.realized_lengths(), 1.0, rtol=1e-12)

    def test_right_triangle(self):
        R, _ = circumradius((3, 4, 5))
        s = 6.0
        area = math.sqrt(s * (s - 3) * (s - 4) * (s - 5))
        assert R == pytest.approx(3 * 4 * 5 / (4 * area), rel=1e-12)
        assert R == pytest.approx(2.5, rel=1e-12)

    def test_center_outside(self):
        # obtuse triangle: the circumcenter lies beyond the long side
        R, inside = circumradius((1, 1, 1.9))
        assert not inside
        area = math.sqrt(1.95 * 0.95 * 0.95 * 0.05)
        assert R == pytest.approx(1 * 1 * 1.9 / (4 * area), rel=1e-10)

    def test_rejects_non_interior(self):
        for ell in [(2, 1, 1), (5, 1, 1, 1)]:
            with pytest.raises(PreconditionError):
                build_planar(ell)

    def test_vertices_concyclic(self):
        rng = np.random.default_rng(5)
        ell = random_interior_lengths(7, rng)
        P = build_planar(ell)
        pts = P.closed_vertices()[:-1]
        center, radius = circle_through(*pts[:3])
        np.testing.assert_allclose(np.linalg.norm(pts - center, axis=1), radius, rtol=1e-9)
        assert radius == pytest.approx(circumradius(ell)[0], rel=1e-9)

    def test_closure_on_random_interior(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(3, 10))
            ell = random_interior_lengths(n, rng, 0.05, 2.0)
            P = build_planar(ell)
            closing = abs(np.linalg.norm(P.vertices[-1]) - ell.lengths[-1]) / ell.total
            worst = max(worst, closing, P.length_residual() / ell.total)
        assert worst <= 1e-9

    def test_near_border(self):
        ell = EdgeLengths([1.0, 1.0, 1.9999999])
        P = build_planar(ell)
        assert P.length_residual() <= DEFAULT_TOL.eps_align * ell.total


class TestBend:
    def test_square_site(self):
        site = find_bend_site(embed(SQUARE, 3))
        assert site.index == 1
        np.testing.assert_allclose(site.foot, [0.5, 0.5, 0.0], atol=1e-15)
        assert site.radius == pytest.approx(math.sqrt(2) / 2)

    def test_square_bend_example(self):
        P = embed(SQUARE, 3)
        Q = bend(P, find_bend_site(P), [0, 0, 1])
        np.testing.assert_allclose(Q.vertices, [[0.5, 0.5, math.sqrt(2) / 2], [1, 1, 0], [0, 1, 0]], atol=1e-15)
        w = Q.vertices[0]
        assert np.linalg.norm(w) == pytest.approx(1.0)
        assert np.linalg.norm(Q.vertices[1] - w) == pytest.approx(1.0)
        assert dimension(P) == 2 and dimension(Q) == 3
        assert np.linalg.matrix_rank(gram(project_to_span(Q))) == 3

    def test_collinear_has_no_site(self):
        P = build_degenerate((1, 1, 1, 1), SignPattern.parse("++--"), 3)
        with pytest.raises(PreconditionError, match="1-dimensional"):
            find_bend_site(P)

    @pytest.mark.parametrize("ell", [(2, 1, 1), (3, 1, 1, 1)])
    def test_border_polygons_cannot_bend(self, ell):
        for p in enumerate_degenerate_classes(ell):
            for d in (2, 3, 4):
                with pytest.raises(PreconditionError):
                    find_bend_site(build_degenerate(ell, p, d))

    def test_full_dimension_has_no_site(self):
        P = raise_to_dimension((1, 1, 1, 1), 3, 4)
        with pytest.raises(PreconditionError, match="maximal"):
            find_bend_site(P)

    def test_no_room(self):
        with pytest.raises(PreconditionError, match="room"):
            find_bend_site(build_planar((1, 1, 1, 1, 1)))

    def test_pentagon_in_r3(self):
        P = embed(build_planar((1, 1, 1, 1, 1)), 3)
        site = find_bend_site(P)
        assert 1 <= site.index <= 4
        # oracle: v_i in span of others (rank unchanged), off its hinge line
        others = np.delete(P.vertices, site.index - 1, axis=0)
        assert np.linalg.matrix_rank(others) == np.linalg.matrix_rank(P.vertices)
        assert site.radius > 0

    def test_degenerate_hinge(self):
        # v_1 = v_3, so the hinge of v_2 collapses to the point v_1
        ell = (1.0,) * 6
        P = Polygon(4, [[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 0, 0], [1, -1, 0, 0], [0, -1, 0, 0]], ell).validate()
        by_index = {s.index: s for s in bend_sites(P)}
        assert 2 in by_index and by_index[2].line_dir is None
        np.testing.assert_allclose(by_index[2].foot, [1, 0, 0, 0])
        assert by_index[2].radius == pytest.approx(1.0)
        Q = bend(P, by_index[2], [0, 0, 1, 0])
        assert dimension(Q) == 3
        np.testing.assert_allclose(Q.realized_lengths(), 1.0, rtol=1e-12)

    def test_rejects_bad_directions(self):
        P = embed(SQUARE, 3)
        site = find_bend_site(P)
        with pytest.raises(ValidationError, match="unit"):
            bend(P, site, [0, 0, 2])
        with pytest.raises(ValidationError, match="span"):
            bend(P, site, [1, 0, 0])
        with pytest.raises(ValidationError, match="hinge"):
            u = np.array([1.0, 1.0, 1.0]) / math.sqrt(3)
            bend(P, site, u)

    def test_bend_preserves_other_gram_entries(self):
        rng = np.random.default_rng(11)
        ell = random_interior_lengths(7, rng)
        P = raise_to_dimension(ell, 3, 6, rng_seed=1)
        for site in bend_sites(P):
            u = random_complement_direction(site.span_basis, 6, rng)
            Q = bend(P, site, u)
            keep = [j for j in range(ell.n - 1) if j != site.index - 1]
            np.testing.assert_allclose(gram(Q)[np.ix_(keep, keep)], gram(P)[np.ix_(keep, keep)])
            i = site.index
            closed = Q.closed_vertices()
            assert np.linalg.norm(closed[i] - closed[i - 1]) == pytest.approx(ell.lengths[i - 1], rel=1e-9)
            assert np.linalg.norm(closed[i] - closed[i + 1]) == pytest.approx(ell.lengths[i], rel=1e-9)
            assert dimension(Q) == 4


class TestRaise:
    def test_equilateral_four_gon_in_r3(self):
        P = raise_to_dimension((1, 1, 1, 1), 3, 3)
        assert dimension(P) == 3
        assert np.linalg.matrix_rank(P.vertices) == 3

    def test_k_above_bound(self):
        with pytest.raises(PreconditionError):
            raise_to_dimension((1, 1, 1, 1), 4, 5)

    def test_k_below_two(self):
        with pytest.raises(PreconditionError):
            raise_to_dimension((1, 1, 1, 1), 1, 3)

    def test_random_hexagon(self):
        ell = random_interior_lengths(6, np.random.default_rng(3))
        P = raise_to_dimension(ell, 5, 8)
        assert dimension(P) == 5
        assert np.linalg.matrix_rank(P.vertices, tol=1e-8) == 5

    @given(st.integers(4, 8), st.integers(2, 9), st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_exact_dimension(self, n, d, seed):
        rng = np.random.default_rng(seed)
        ell = random_interior_lengths(n, rng)
        for k in range(2, min(d, n - 1) + 1):
            P = raise_to_dimension(ell, k, d, rng_seed=seed)
            assert dimension(P) == k
            assert P.length_residual() <= DEFAULT_TOL.eps_align * ell.total


class TestSample:
    def test_deterministic(self):
        a = sample((1, 1.5, 1, 1.2, 0.8), 5, 42)
        b = sample((1, 1.5, 1, 1.2, 0.8), 5, 42)
        assert a.vertices.tobytes() == b.vertices.tobytes()
        c = sample((1, 1.5, 1, 1.2, 0.8), 5, 43)
        assert a.vertices.tobytes() != c.vertices.tobytes()

    def test_lengths_preserved(self):
        ell = EdgeLengths([1, 1.5, 1, 1.2, 0.8, 0.9])
        for seed in range(200):
            P = sample(ell, 6, seed)
            assert P.length_residual() <= DEFAULT_TOL.eps_align * ell.total

    def test_both_dimensions_occur(self):
        dims = {dimension(sample((1, 1, 1, 1), 3, s)) for s in range(1000)}
        assert dims == {2, 3}

    def test_requires_interior(self):
        with pytest.raises(PreconditionError):
            sample((2, 1, 1), 3, 0)
