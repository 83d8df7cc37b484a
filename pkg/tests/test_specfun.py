import math

import numpy as np
import pytest
from scipy import integrate

from ehnoma import specfun
from ehnoma.specfun import (DomainError, SeriesError, gamma_cdf, gamma_pdf,
                            log_gamma, scaled_uig_diff_chain, sum_series,
                            upper_inc_gamma)


def uig_quadrature(s, x):
    """Independent oracle for Gamma(s, x) by adaptive quadrature.

    For x >= 1 shift the variable (t = x + u) and pull e^-x out so the
    integrand never underflows; for small x use the log substitution
    t = x e^v, which keeps the power-law spike integrable.
    """
    if x >= 1.0:
        val, err = integrate.quad(lambda u: (x + u) ** (s - 1.0) * math.exp(-u),
                                  0.0, np.inf, limit=500, epsabs=0.0, epsrel=1e-12)
        return val * math.exp(-x), err
    val, err = integrate.quad(lambda v: math.exp(s * v - x * math.exp(v)),
                              0.0, 80.0, limit=500, epsabs=0.0, epsrel=1e-12,
                              points=[math.log(1.0 / x)])
    return val * x ** s, err


class TestLogGamma:
    def test_known_values(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)
        assert log_gamma(10.0) == pytest.approx(math.log(math.factorial(9)), rel=1e-14)

    def test_accuracy_over_range(self):
        import mpmath as mp
        for x in np.logspace(-3, 3, 40):
            ref = float(mp.log(mp.gamma(mp.mpf(x))))
            assert log_gamma(float(x)) == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_domain(self):
        for bad in (0.0, -1.0, math.nan, math.inf):
            with pytest.raises(DomainError):
                log_gamma(bad)


class TestUpperIncGamma:
    def test_shape_one_is_exponential(self):
        assert upper_inc_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)

    def test_shape_zero_is_e1(self):
        assert upper_inc_gamma(0.0, 1.0) == pytest.approx(0.21938393439552029, rel=1e-12)

    def test_negative_half_vs_quadrature(self):
        # also exercises the downward-recurrence / CF path
        assert upper_inc_gamma(-0.5, 1.0) == pytest.approx(0.1781477117815666, rel=1e-10)

    def test_grid_vs_quadrature(self):
        for s in np.arange(-6.0, 6.5, 0.5):
            for x in (1e-4, 0.03, 0.4, 1.0, 3.0, 12.0, 40.0):
                ref, err = uig_quadrature(float(s), x)
                assert upper_inc_gamma(float(s), x) == pytest.approx(ref, rel=1e-10), (s, x)

    def test_recurrence_identity(self):
        # Gamma(s+1, x) = s Gamma(s, x) + x^s e^-x
        rng = np.random.default_rng(7)
        for _ in range(400):
            s = rng.uniform(-10.0, 3.0)
            x = rng.uniform(1e-6, 20.0)
            lhs = upper_inc_gamma(s + 1.0, x)
            rhs = s * upper_inc_gamma(s, x) + x ** s * math.exp(-x)
            if lhs > 0:
                assert abs(lhs - rhs) <= 1e-9 * lhs, (s, x)

    def test_domain(self):
        with pytest.raises(DomainError):
            upper_inc_gamma(1.0, 0.0)
        with pytest.raises(DomainError):
            upper_inc_gamma(1.0, -3.0)


class TestScaledDiffChain:
    def test_against_mpmath(self):
        import mpmath as mp
        mp.mp.dps = 35
        cases = [(-2, -60, 0.1233, 0.128), (1, -50, 0.02, 0.3),
                 (3, -20, 0.5, np.inf), (0, -40, 1e-5, 2.0)]
        for s_top, s_min, x1, x2 in cases:
            got = scaled_uig_diff_chain(s_top, s_min, x1, x2)
            for j, s in enumerate(range(s_top, s_min - 1, -1)):
                hi = mp.gammainc(mp.mpf(s), x2, mp.inf) if np.isfinite(x2) else 0
                ref = float((mp.gammainc(mp.mpf(s), x1, mp.inf) - hi) * mp.mpf(x1) ** (-s))
                assert got[j] == pytest.approx(ref, rel=1e-12), (s, x1, x2)

    def test_domain(self):
        with pytest.raises(DomainError):
            scaled_uig_diff_chain(0, -5, 0.5, 0.4)


class TestGammaCdf:
    def test_zero_and_exponential(self):
        assert gamma_cdf(3.0, 2.0, 0.0) == 0.0
        for x in (0.1, 1.0, 4.0):
            assert gamma_cdf(1.0, 1.0, x) == pytest.approx(1.0 - math.exp(-x), rel=1e-14)

    def test_erlang_point(self):
        assert gamma_cdf(2.0, 1.0, 2.0) == pytest.approx(0.5939941502901619, abs=1e-14)

    def test_integer_shape_finite_sum(self):
        # F(x) = 1 - e^(-x/th) sum_{n<k} (x/th)^n / n!
        for k in range(1, 13):
            for x in (0.05, 0.7, 3.0, 11.0):
                z = x / 0.5
                ref = 1.0 - math.exp(-z) * math.fsum(z ** n / math.factorial(n)
                                                     for n in range(k))
                assert gamma_cdf(k, 0.5, x) == pytest.approx(ref, abs=1e-12), (k, x)

    def test_monotone_and_bounded(self):
        xs = np.linspace(0.0, 30.0, 200)
        vals = gamma_cdf(2.5, 1.3, xs)
        assert np.all(np.diff(vals) >= 0)
        assert np.all((vals >= 0) & (vals <= 1))

    def test_complement_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            k = rng.uniform(0.3, 12.0)
            th = rng.uniform(0.1, 4.0)
            x = rng.uniform(1e-3, 30.0)
            comp = upper_inc_gamma(k, x / th) / math.exp(log_gamma(k))
            assert gamma_cdf(k, th, x) + comp == pytest.approx(1.0, abs=1e-12)

    def test_pdf_integrates_to_cdf(self):
        val, _ = integrate.quad(lambda x: gamma_pdf(2.0, 1.5, x), 0.0, 3.0)
        assert val == pytest.approx(gamma_cdf(2.0, 1.5, 3.0), rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            gamma_cdf(-1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            gamma_cdf(1.0, 0.0, 1.0)
        with pytest.raises(DomainError):
            gamma_cdf(1.0, 1.0, -0.5)


class TestSumSeries:
    def test_all_zero_terms(self):
        out = sum_series(lambda p: 0.0, rel_tol=1e-12, max_terms=50)
        assert out.value == 0.0
        assert out.converged
        assert out.terms_used == 3  # the consecutive-small window

    def test_geometric(self):
        out = sum_series(lambda p: 0.5 ** p, rel_tol=1e-12, max_terms=200)
        assert out.converged
        assert out.value == pytest.approx(2.0, abs=1e-11)

    def test_alternating_exponential(self):
        x = 3.7
        out = sum_series(lambda p: (-x) ** p / math.factorial(p),
                         rel_tol=1e-12, max_terms=200)
        assert out.converged
        assert out.value == pytest.approx(math.exp(-x), rel=1e-11)

    def test_truncation_returns_partial_sum(self):
        out = sum_series(lambda p: 1.0 / (p + 1.0), rel_tol=1e-12, max_terms=25)
        assert not out.converged
        assert out.terms_used == 25
        assert out.value == pytest.approx(math.fsum(1.0 / (p + 1.0) for p in range(25)),
                                          rel=1e-14)

    def test_nonfinite_term_raises_with_index(self):
        with pytest.raises(SeriesError, match="p=4"):
            sum_series(lambda p: math.inf if p == 4 else 0.1, rel_tol=1e-9, max_terms=10)

    def test_parameter_validation(self):
        with pytest.raises(DomainError):
            sum_series(lambda p: 0.0, rel_tol=0.0)
        with pytest.raises(DomainError):
            sum_series(lambda p: 0.0, max_terms=0)
