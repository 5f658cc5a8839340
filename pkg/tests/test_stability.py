import numpy as np
import pytest

from qsirs import NumericError, ValidationError
from qsirs.equilibria import cse_continuation, dfe_points, limit_equilibria, nme_point
from qsirs.stability import (dfe_boundary_case2,
                             dfe_deciding_eigenvalue_case1,
                             dfe_deciding_eigenvalue_case2, dfe_spectrum_case1,
                             dfe_spectrum_case2, eigenvalues,
                             finite_difference_jacobian, jacobian_fd,
                             nme_complex_window, nme_discriminant,
                             nme_spectrum_closed_form, quasi_period,
                             reduced_cse_stability, reduced_dfe_spectrum,
                             reduced_jacobian, reduced_jacobian_fd,
                             spectrum_at)
from conftest import case1_params, random_valid_state
from oracles import bisect_root


def sorted_c(vals):
    return np.sort_complex(np.asarray(vals, dtype=complex))


class TestEigenvalues:
    def test_diagonal(self):
        d = [-2.0, -0.8, -0.5, 0.0, 0.0, 0.0, 1.0, -3.0, 0.0]
        spec = eigenvalues(np.diag(d))
        assert np.allclose(sorted_c(spec.eigenvalues), sorted_c(d), atol=1e-14)
        assert spec.counts == (1, 4, 4)
        assert not spec.stable

    def test_rotation_generator(self):
        spec = eigenvalues(np.array([[0.0, -1.0], [1.0, 0.0]]))
        assert np.allclose(sorted_c(spec.eigenvalues), sorted_c([1j, -1j]), atol=1e-14)

    def test_companion_matrix_against_bisection(self):
        # roots of the oscillation discriminant via its companion matrix
        coeffs = np.array([-84.0, -924.0, 338.0]) / 49.0  # monic: x^3+c2x^2+c1x+c0
        c2, c1, c0 = coeffs
        companion = np.array([[-c2, -c1, -c0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        spec = eigenvalues(companion)
        got = np.sort(spec.eigenvalues.real)
        expected = np.sort([bisect_root(nme_discriminant, a, b, tol=1e-13)
                            for a, b in [(-5, 0), (0, 1), (4, 6)]])
        assert np.allclose(got, expected, atol=1e-9)
        assert np.max(np.abs(spec.eigenvalues.imag)) < 1e-12

    def test_conjugate_pairs_and_residuals_random(self):
        rng = np.random.default_rng(0)
        for k in range(1000):
            n = int(rng.integers(2, 10))
            m = rng.uniform(-5.0, 5.0, size=(n, n))
            spec = eigenvalues(m)
            vals = spec.eigenvalues
            complex_part = vals[np.abs(vals.imag) > 0]
            assert np.allclose(sorted_c(complex_part),
                               sorted_c(np.conj(complex_part)), atol=1e-8)
            if k % 100 == 0:  # residual spot checks
                w, v = np.linalg.eig(m)
                for lam, vec in zip(w, v.T):
                    res = np.linalg.norm(m @ vec - lam * vec)
                    assert res < 1e-8 * np.linalg.norm(m)

    def test_sorted_by_descending_real(self):
        rng = np.random.default_rng(5)
        spec = eigenvalues(rng.uniform(-3, 3, size=(9, 9)))
        assert np.all(np.diff(spec.eigenvalues.real) <= 1e-12)

    def test_dimension_cap_and_validation(self):
        with pytest.raises(ValidationError):
            eigenvalues(np.eye(17))
        with pytest.raises(ValidationError):
            eigenvalues(np.ones((2, 3)))
        with pytest.raises(NumericError):
            eigenvalues(np.full((3, 3), np.nan))


class TestJacobian:
    def test_exact_for_linear_map(self):
        rng = np.random.default_rng(1)
        A = rng.uniform(-4, 4, size=(9, 9))
        J = finite_difference_jacobian(lambda x: A @ x, rng.random(9))
        assert np.max(np.abs(J - A)) < 1e-8

    def test_h_domain(self, p1):
        x = dfe_points(p1, 0.5).as_array()
        with pytest.raises(ValidationError):
            jacobian_fd(p1, x, h=1e-3)
        with pytest.raises(ValidationError):
            jacobian_fd(p1, x, h=1e-9)

    def test_macro_rows_conserve(self, p1):
        rng = np.random.default_rng(2)
        for _ in range(20):
            J = jacobian_fd(p1, random_valid_state(rng))
            assert np.max(np.abs(J[:5].sum(axis=0))) < 1e-6

    def test_deceased_column_is_zero(self, p1):
        J = jacobian_fd(p1, nme_point(p1).as_array())
        assert np.max(np.abs(J[:, 4])) < 1e-12


class TestClosedFormSpectra:
    def test_nme_matches_fd(self):
        for pi1 in (0.6, 1.0, 3.0, 5.0):
            p = case1_params(pi1=pi1, epsilon=1.0)
            cf = nme_spectrum_closed_form(pi1)
            fd = spectrum_at(p, nme_point(p).as_array())
            # the closed form omits the decoupled deceased direction
            cf_full = sorted_c(np.append(cf.eigenvalues, 0.0))
            assert np.max(np.abs(cf_full - sorted_c(fd.eigenvalues))) < 1e-5

    def test_nme_complex_pair_printed_values(self):
        spec = nme_spectrum_closed_form(1.0)
        assert nme_discriminant(1.0) == -621.0
        pair = spec.eigenvalues[np.abs(spec.eigenvalues.imag) > 0]
        assert np.allclose(sorted_c(pair),
                           sorted_c([(-18 + 1j * np.sqrt(1242) / 3) / 7,
                                     (-18 - 1j * np.sqrt(1242) / 3) / 7]),
                           atol=1e-12)

    def test_nme_domain(self):
        with pytest.raises(ValidationError):
            nme_spectrum_closed_form(0.4)
        with pytest.raises(ValidationError):
            nme_spectrum_closed_form(40 / 7 + 1e-6)

    def test_complex_window_roots(self):
        lo, hi = nme_complex_window()
        assert lo == pytest.approx(0.357, abs=0.01)
        assert hi == pytest.approx(5.129, abs=0.01)
        for pi1, expect_complex in [(lo - 0.05, False), (lo + 0.05, True),
                                    (hi - 0.05, True), (hi + 0.05, False)]:
            if not 0.5 < pi1 < 40 / 7:
                continue
            spec = nme_spectrum_closed_form(pi1)
            has_pair = np.any(np.abs(spec.eigenvalues.imag) > 0)
            assert has_pair == expect_complex

    def test_dfe_case1_deciding_sign(self, p1):
        assert dfe_deciding_eigenvalue_case1(1.0 / 175.0) == pytest.approx(0.0, abs=1e-15)
        assert dfe_deciding_eigenvalue_case1(0.0) == pytest.approx(-0.5, rel=1e-14)
        assert dfe_deciding_eigenvalue_case1(1.0) == pytest.approx(174.0 / 52.0, rel=1e-14)
        spec = dfe_spectrum_case1(0.0, pi1=1.0)
        assert spec.counts[0] == 0  # attracting off the family directions
        assert dfe_spectrum_case1(0.5).counts[0] == 1

    def test_dfe_case1_matches_fd(self, p1):
        for g0s in (0.0, 1.0 / 175.0, 0.3, 1.0):
            p = p1.replace(epsilon=1.0)
            cf = dfe_spectrum_case1(g0s, pi1=p.pi1)
            fd = spectrum_at(p, dfe_points(p, g0s).as_array())
            cf_full = sorted_c(np.append(cf.eigenvalues, 0.0))
            assert np.max(np.abs(cf_full - sorted_c(fd.eigenvalues))) < 1e-5

    def test_dfe_case2_formula(self, p2):
        psi = dfe_deciding_eigenvalue_case2(p2, 1.0, 1.0)
        assert psi == pytest.approx(2 * 3 / (0.25 + 3) - 0.2, rel=1e-14)
        assert dfe_deciding_eigenvalue_case2(p2, 0.7, 0.0) == pytest.approx(-p2.pi0)
        spec = dfe_spectrum_case2(p2, 1.0, 1.0)
        assert spec.leading == pytest.approx(psi)
        fixed = sorted_c([0, 0, 0, 0, -p2.chi, -p2.gamma0, -p2.gamma1,
                          -(p2.delta1 + p2.pi1), psi])
        assert np.allclose(sorted_c(spec.eigenvalues), fixed, atol=1e-14)

    def test_dfe_case2_matches_fd(self, p2):
        p = p2.replace(epsilon=1.0)
        rng = np.random.default_rng(3)
        for _ in range(6):
            Ss, g0s = rng.random(2)
            x = np.array([Ss, 0, 0, 0, 1 - Ss, g0s, 1 - g0s,
                          p.xi0 * g0s / p.gamma0, p.xi1 * (1 - g0s) / p.gamma1])
            cf = dfe_spectrum_case2(p, Ss, g0s)
            fd = spectrum_at(p, x)
            assert np.max(np.abs(sorted_c(cf.eigenvalues)
                                 - sorted_c(fd.eigenvalues))) < 1e-5

    def test_dfe_case2_boundary(self, p2):
        g0s = 0.6
        S_b = dfe_boundary_case2(p2, g0s)
        assert dfe_deciding_eigenvalue_case2(p2, S_b, g0s) == pytest.approx(0.0, abs=1e-14)
        with pytest.raises(ValidationError):
            dfe_boundary_case2(p2, 0.0)


class TestQuasiPeriod:
    def test_printed_pair(self):
        T = quasi_period(nme_spectrum_closed_form(1.0))
        assert T == pytest.approx(2 * np.pi * 21 / np.sqrt(1242), rel=1e-12)
        assert T == pytest.approx(3.744, abs=1e-3)

    def test_real_spectrum_has_none(self):
        assert quasi_period(eigenvalues(np.diag([-1.0, -2.0]))) is None

    def test_pure_rotation(self):
        w = 3.0
        spec = eigenvalues(np.array([[0.0, -w], [w, 0.0]]))
        assert quasi_period(spec) == pytest.approx(2 * np.pi / w, rel=1e-12)


@pytest.fixture(scope="module")
def families():
    res = cse_continuation(case1_params(), (1.7, 8.7), 0.25)
    return {f.tag: f for f in res.families}


class TestCseFamilyStability:
    def test_family1_attracting(self, families):
        p = case1_params(epsilon=1.0)
        for pi1, pt in zip(families["CSE1"].pi1_values, families["CSE1"].points):
            spec = spectrum_at(p.replace(pi1=pi1), pt.as_array(), zero_tol=1e-6)
            assert spec.counts[0] == 0

    def test_family2_one_unstable_direction(self, families):
        p = case1_params(epsilon=1.0)
        for pi1, pt in zip(families["CSE2"].pi1_values, families["CSE2"].points):
            spec = spectrum_at(p.replace(pi1=pi1), pt.as_array(), zero_tol=1e-6)
            assert spec.counts[0] == 1


class TestReducedModel:
    def test_dfe_spectrum_values(self, p1):
        spec = reduced_dfe_spectrum(p1, 0.5)
        eq = limit_equilibria(p1, 0.5)
        assert np.allclose(sorted_c(spec.eigenvalues),
                           sorted_c([-p1.chi, eq.beta00 - p1.pi0]), atol=1e-14)

    def test_jacobian_fd_agreement(self, p1):
        eq = limit_equilibria(p1, 0.5)
        S, I0, _ = eq.cse
        J = reduced_jacobian(p1, S, I0, eq.beta00, eq.beta01)
        J_fd = reduced_jacobian_fd(p1, S, I0, eq.beta00, eq.beta01)
        assert np.max(np.abs(J - J_fd)) < 1e-8

    def test_endemic_point_always_stable(self):
        rng = np.random.default_rng(9)
        found = 0
        while found < 50:
            p = case1_params(
                chi=rng.uniform(0.1, 5), pi0=rng.uniform(0.05, 2),
                a0=rng.uniform(0.5, 8), a1=rng.uniform(0.0, 8),
                b0=rng.uniform(0.05, 1), b1=rng.uniform(0.05, 1),
                xi0=rng.uniform(0.2, 4), xi1=rng.uniform(0.2, 4),
                gamma0=rng.uniform(0.2, 4), gamma1=rng.uniform(0.2, 4),
                f1=0.1)
            mu = rng.uniform(0.05, 0.95)
            eq = limit_equilibria(p, mu)
            if eq.cse is None:
                continue
            det, tr = reduced_cse_stability(p, mu)
            assert det > 0.0 and tr < 0.0
            found += 1

    def test_infeasible_raises(self, p1):
        with pytest.raises(ValidationError):
            reduced_cse_stability(case1_params(a0=0.0), 0.5)
