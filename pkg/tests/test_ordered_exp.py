"""Ordered-exponential tests: iterated integrals, series vs ODE, Gram
determinant routes, explicit low-order coefficients, smallness bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kreinlab.kernel import SeriesTailWarning, series_coeffs_from_samples
from kreinlab.ordered_exp import (
    J,
    CoeffPair,
    a2_variation,
    a4_explicit,
    diagonal_a_n,
    f_of_s,
    family_gamma,
    gamma_stats,
    iterated_integral,
    mixed_det,
    ordered_exp,
    ordered_exp_path,
    random_admissible_family,
    random_coeff_pair,
    taylor_a,
)

ONE = lambda t: np.ones_like(np.asarray(t, dtype=float))
IDENT = lambda t: np.asarray(t, dtype=float)


class TestIteratedIntegral:
    def test_single_constant(self):
        assert iterated_integral([ONE], 0.7) == pytest.approx(0.7, abs=1e-12)

    def test_double_constant(self):
        assert iterated_integral([ONE, ONE], 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_mixed_pair(self):
        # (f1 f2)_t with f1=1, f2=x is t^3/6
        assert iterated_integral([ONE, IDENT], 1.0) == pytest.approx(1.0 / 6.0, abs=1e-9)
        assert iterated_integral([ONE, IDENT], 0.5) == pytest.approx(0.5 ** 3 / 6.0, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            iterated_integral([], 1.0)

    def test_out_of_range_time_rejected(self):
        with pytest.raises(ValueError):
            iterated_integral([ONE], 1.5)

    def test_shuffle_identity(self):
        # (f)_t (g)_t = (fg)_t + (gf)_t
        f = lambda t: np.cos(2 * np.pi * np.asarray(t))
        g = lambda t: np.asarray(t) ** 2
        lhs = iterated_integral([f], 0.8) * iterated_integral([g], 0.8)
        rhs = iterated_integral([f, g], 0.8) + iterated_integral([g, f], 0.8)
        assert abs(lhs - rhs) < 1e-8


class TestOrderedExp:
    def test_zero_generator(self):
        X = ordered_exp(CoeffPair.constant(0.0, 0.0), 1.0)
        assert np.array_equal(X, np.eye(2))

    def test_constant_diagonal(self):
        c = 0.8
        X = ordered_exp(CoeffPair.constant(0.0, 2 * c), 1.0, mode="ode", tol=1e-12)
        ref = np.diag([math.exp(-2 * c), math.exp(2 * c)])
        assert np.max(np.abs(X - ref)) < 1e-8

    def test_series_matches_ode(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            A = random_coeff_pair(rng)
            Xs = ordered_exp(A, 1.0, mode="series", n_terms=12)
            Xo = ordered_exp(A, 1.0, mode="ode", tol=1e-12)
            assert np.max(np.abs(Xs - Xo)) < 1e-8

    def test_series_tail_warning(self):
        A = CoeffPair.constant(2.0, 1.0)
        with pytest.warns(SeriesTailWarning):
            ordered_exp(A, 1.0, mode="series", n_terms=4, tail_tol=1e-10)

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(3)
        Jinv = np.linalg.inv(J)
        for _ in range(5):
            A = random_coeff_pair(rng)
            Aneg = CoeffPair(lambda t, f=A.p: -np.asarray(f(t)),
                             lambda t, f=A.q: -np.asarray(f(t)))
            X = ordered_exp(A, 1.0, mode="ode", tol=1e-12)
            Xn = ordered_exp(Aneg, 1.0, mode="ode", tol=1e-12)
            assert np.max(np.abs(Xn - J @ X @ Jinv)) < 1e-8

    def test_liouville(self):
        rng = np.random.default_rng(5)
        A = random_coeff_pair(rng)
        path = ordered_exp_path(A, np.linspace(0.0, 1.0, 33), tol=1e-10)
        assert np.max(np.abs(np.linalg.det(path.values) - 1.0)) < 1e-9


class TestGramDeterminant:
    def test_at_zero(self):
        rng = np.random.default_rng(1)
        assert f_of_s(random_coeff_pair(rng), 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_closed_form(self):
        A = CoeffPair.constant(0.0, 1.0)
        assert f_of_s(A, 1.0) == pytest.approx(math.sinh(1.0) ** 2, abs=1e-7)

    def test_even(self):
        rng = np.random.default_rng(2)
        A = random_coeff_pair(rng)
        assert abs(f_of_s(A, 0.7) - f_of_s(A, -0.7)) < 1e-9

    def test_commuting_fast_paths_match_ode(self):
        # force the generic ODE path by adding a zero-but-not-flagged partner
        tiny = 1e-300
        Aq = CoeffPair.constant(tiny, 0.7)
        Aq_fast = CoeffPair.constant(0.0, 0.7)
        assert abs(f_of_s(Aq, 1.3) - f_of_s(Aq_fast, 1.3)) < 1e-8
        Ap = CoeffPair.constant(0.6, tiny)
        Ap_fast = CoeffPair.constant(0.6, 0.0)
        assert abs(f_of_s(Ap, 1.3) - f_of_s(Ap_fast, 1.3)) < 1e-8


class TestTaylorRoutes:
    def test_unit_q_reference(self):
        # Taylor coefficients of sinh^2(s)/s^2: a2 = 1/3, a4 = 2/45
        ta = taylor_a(CoeffPair.constant(0.0, 1.0), 8)
        assert abs(ta[2] - 1.0 / 3.0) < 1e-7
        assert abs(ta[4] - 2.0 / 45.0) < 1e-7

    def test_a0_and_odd_vanish(self):
        rng = np.random.default_rng(9)
        ta = taylor_a(random_coeff_pair(rng), 8)
        assert ta[0] == 1.0
        assert ta[1] == 0.0 and ta[3] == 0.0 and ta[5] == 0.0 and ta[7] == 0.0

    def test_structural_cap(self):
        with pytest.raises(ValueError):
            taylor_a(CoeffPair.constant(0.0, 1.0), 10)

    def test_matches_sampling_route(self):
        rng = np.random.default_rng(21)
        for _ in range(3):
            A = random_coeff_pair(rng)
            ta = taylor_a(A, 6)
            cs = series_coeffs_from_samples(lambda s: f_of_s(A, s, n_grid=1025),
                                            6, radius=0.8, n_samples=64)
            assert np.max(np.abs(cs.real - ta)) < 1e-6
            assert np.max(np.abs(cs[1::2])) < 1e-8

    def test_four_routes_for_unit_q(self):
        A = CoeffPair.constant(0.0, 1.0)
        routes = {
            "structural": taylor_a(A, 4)[2],
            "variation": a2_variation(A),
            "diagonal": diagonal_a_n(lambda t: np.asarray(t, dtype=float), 2),
            "sampling": series_coeffs_from_samples(
                lambda s: np.sinh(s) ** 2 / s ** 2, 4, radius=1.0)[2].real,
        }
        vals = list(routes.values())
        for a in vals:
            for b in vals:
                assert abs(a - b) < 1e-6


class TestMixedDet:
    def test_identity_pair(self):
        assert mixed_det(np.eye(2), np.eye(2)) == pytest.approx(2.0)

    def test_zero_partner(self):
        assert mixed_det(np.array([[1.0, 2], [3, 4]]), np.zeros((2, 2))) == 0.0

    def test_rank_one_pair(self):
        assert mixed_det(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(1.0)

    @given(st.lists(st.floats(-5, 5), min_size=8, max_size=8))
    @settings(deadline=None, max_examples=30)
    def test_column_polarization(self, xs):
        M = np.array(xs[:4]).reshape(2, 2)
        N = np.array(xs[4:]).reshape(2, 2)
        ref = (np.linalg.det(np.column_stack([M[:, 0], N[:, 1]]))
               + np.linalg.det(np.column_stack([N[:, 0], M[:, 1]])))
        assert mixed_det(M, N) == pytest.approx(ref, abs=1e-9)


class TestDiagonalFormula:
    def test_linear_antiderivative(self):
        g = lambda t: np.asarray(t, dtype=float)
        assert diagonal_a_n(g, 2) == pytest.approx(1.0 / 3.0, abs=1e-10)
        assert diagonal_a_n(g, 4) == pytest.approx(2.0 / 45.0, abs=1e-8)

    def test_odd_vanishes(self):
        for g in (lambda t: np.sin(np.asarray(t)), lambda t: np.asarray(t) ** 2):
            assert abs(diagonal_a_n(g, 3)) < 1e-10
            assert abs(diagonal_a_n(g, 5)) < 1e-10


class TestA2A4:
    def test_a2_zero_pair(self):
        assert a2_variation(CoeffPair.constant(0.0, 0.0)) == 0.0

    def test_a2_references(self):
        assert a2_variation(CoeffPair.constant(0.0, 1.0)) == pytest.approx(1 / 3, abs=1e-10)
        assert a2_variation(CoeffPair.constant(1.0, 1.0)) == pytest.approx(2 / 3, abs=1e-10)

    def test_a2_matches_structural_on_random_pairs(self):
        rng = np.random.default_rng(33)
        for _ in range(8):
            A = random_coeff_pair(rng)
            assert abs(taylor_a(A, 2)[2] - a2_variation(A)) < 1e-6

    def test_a4_references(self):
        assert a4_explicit(CoeffPair.constant(0.0, 0.0)) == 0.0
        assert a4_explicit(CoeffPair.constant(0.0, 1.0)) == pytest.approx(2 / 45, abs=1e-7)

    def test_a4_matches_structural_on_random_pairs(self):
        rng = np.random.default_rng(34)
        for _ in range(8):
            A = random_coeff_pair(rng)
            assert abs(taylor_a(A, 4)[4] - a4_explicit(A)) < 1e-5


class TestGammaStats:
    def test_linear(self):
        s = gamma_stats(IDENT)
        assert s.mean == pytest.approx(0.5, abs=1e-12)
        assert s.variation == pytest.approx(1 / 12, abs=1e-12)
        assert s.delta == pytest.approx(1.0, abs=1e-10)
        assert s.gamma == pytest.approx(math.sqrt(1 / 12) + (1 / 12) ** 0.25, abs=1e-9)

    def test_zero(self):
        s = gamma_stats(lambda t: np.zeros_like(np.asarray(t, dtype=float)))
        assert s.mean == 0.0 and s.variation == 0.0 and s.gamma == 0.0

    def test_sine(self):
        s = gamma_stats(lambda t: np.sin(2 * np.pi * np.asarray(t)) / (2 * np.pi))
        assert abs(s.mean) < 1e-12
        assert s.variation == pytest.approx(1 / (8 * np.pi ** 2), abs=1e-9)
        assert s.delta == pytest.approx(1 / math.sqrt(2), abs=1e-9)


class TestSmallnessBounds:
    def test_chain_bounds(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            fam = random_admissible_family(rng, 6)
            gam = family_gamma(fam)
            for n in range(1, 7):
                m = math.ceil((n + 1) / 2)
                fs = [fam[i % len(fam)] for i in range(n)]
                val = abs(iterated_integral(fs, 1.0, n_grid=1025))
                assert val <= (8 * gam) ** m

    def test_quartic_and_cubic_bounds(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            f, g = random_admissible_family(rng, 2)
            gam = family_gamma([f, g])
            assert abs(iterated_integral([f, f, g, g], 1.0, n_grid=1025)) <= 160 * gam ** 4
            assert abs(iterated_integral([f, g, g], 1.0, n_grid=1025)) <= 11 * gam ** 3
            assert abs(iterated_integral([f, f, g], 1.0, n_grid=1025)) <= 79 * gam ** 3


class TestScalingDefect:
    def test_quadratic_term_dominates(self):
        rng = np.random.default_rng(7)
        for _ in range(4):
            A = random_coeff_pair(rng)
            a2 = a2_variation(A)
            defects = []
            for s in (1.0, 0.5, 0.25, 0.1):
                F1 = f_of_s(A.scaled(s), 1.0)
                defects.append(abs(F1 - 1.0 - s * s * a2) / (s * s * a2))
            assert all(a >= b - 1e-12 for a, b in zip(defects, defects[1:]))
            assert defects[-1] < 0.05
