"""Exact closed-form outage probabilities and their quadrature oracle.

Two non-elementary pieces exist: the relay-link failure term of the far user
without a direct link (an integral over the BS->U_2 gain) and the saturated
MRC failure term with a direct link (an integral over the BS->U_1 gain).
Both are evaluated two independent ways: a closed-form double series using
upper-incomplete-gamma differences, and adaptive quadrature of the defining
integral.  The printed journal forms of both series contain typographical
defects (a multiplicative prefactor that should be subtractive, and interval
endpoints from the wrong decoding event); the default "repaired" variant is
the one consistent with the Monte Carlo event logic, and the "printed" forms
are kept behind a flag for the comparison report.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import integrate

from . import specfun
from .model import (SystemParams, WITH_DIRECT, WITHOUT_DIRECT, derive_stats,
                    thresholds)

REPAIRED = "repaired"
PRINTED = "printed"

DEFAULT_REL_TOL = 1e-10
DEFAULT_MAX_TERMS = 200

# The p-series reconstruct a decaying exponential from its Taylor terms, so
# they cancel like e^(2*arg) on top of the binomial cancellation of the
# finite sums.  Plain float64 is safe to arg ~ 3; extended precision covers
# the rest of the practical SNR range; beyond that (several hundred lost
# digits, only reachable below about -9 dB SNR) the evaluator falls back to
# quadrature of the defining integral.
_FLOAT_ARG_MAX = 3.0
_MP_ARG_MAX = 60.0

# mpmath precision is process-global state; hold this across any workdps use
# so sweep workers cannot race each other
_MP_LOCK = threading.Lock()


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SeriesReport:
    """Outage value backed by a truncated series."""

    value: float        # clamped to [0, 1] once converged
    pre_clamp: float    # raw assembled value
    terms_used: int     # series terms consumed (summed over outer indices)
    converged: bool


def _clamp01(x):
    return min(1.0, max(0.0, x))


def _cdf(shape, scale, x):
    if x == math.inf:
        return 1.0
    if x <= 0.0:
        return 0.0
    return specfun.gamma_cdf(shape, scale, x)


# ---------------------------------------------------------------------------
# near user
# ---------------------------------------------------------------------------


def op_u2_exact(params: SystemParams) -> float:
    """Outage probability of the near user, P2 = 1 - I1 - I2.

    I1 is the unsaturated success window (tau1*, beta1) of ||h2||^2 and I2 the
    saturated success tail above max(beta1, beta2, beta3); infeasible decoding
    conditions surface as infinite thresholds and zero out the matching term.
    """
    st = derive_stats(params)
    th = thresholds(params)
    f2 = lambda x: _cdf(st.shape2, st.scale2, x)
    i1 = max(0.0, f2(th.beta1) - f2(th.tau1_star))
    i2 = 1.0 - f2(th.beta1_star)
    return _clamp01(1.0 - i1 - i2)


# ---------------------------------------------------------------------------
# far user, no direct link
# ---------------------------------------------------------------------------


def _upsilon3_series_float(params, st, th, rel_tol, max_terms):
    """Double series for the Y3 sum S in float64 (see _upsilon3_series)."""
    m, n_rx = params.m, params.n_rx
    two_m = 2 * m
    wc = m * th.gamma_th1 / (th.phi2 * params.p_s * st.omega0)
    x1 = wc / th.beta1
    x2 = wc / th.tau3_star if th.tau3_star > 0.0 else math.inf
    s_top = (m * n_rx - 1) - two_m
    s_min = -two_m - max_terms
    table = specfun.scaled_uig_diff_chain(s_top, s_min, x1, x2)

    log_momega2 = math.log(m / st.omega2)
    log_wc = math.log(wc)
    log_beta1 = math.log(th.beta1)
    base = two_m * log_momega2 - specfun.log_gamma(two_m)

    total = 0.0
    terms_used = 0
    converged = True
    for n in range(m * n_rx):
        head = base - specfun.log_gamma(n + 1) + n * log_wc

        def term(p, n=n, head=head):
            d = table[s_top - (n - p - two_m)]
            if d <= 0.0:
                return 0.0
            lg = (head + p * log_momega2 - specfun.log_gamma(p + 1)
                  + (p + two_m - n) * log_beta1 + math.log(d))
            return (-1.0) ** p * math.exp(lg)

        out = specfun.sum_series(term, rel_tol=rel_tol, max_terms=max_terms)
        total += out.value
        terms_used += out.terms_used
        converged = converged and out.converged
    return total, terms_used, converged


def _upsilon3_series_mp(params, st, th, rel_tol, max_terms, dps):
    """Same series in extended precision; gamma differences via mpmath's
    generalized incomplete gamma."""
    m, n_rx = params.m, params.n_rx
    two_m = 2 * m
    with _MP_LOCK, mp.workdps(dps):
        wc = mp.mpf(m) * th.gamma_th1 / (mp.mpf(th.phi2) * params.p_s * st.omega0)
        x1 = wc / th.beta1
        x2 = wc / th.tau3_star if th.tau3_star > 0.0 else math.inf
        w2 = mp.mpf(m) / st.omega2
        pref = w2 ** two_m / mp.gamma(two_m)
        s_top = (m * n_rx - 1) - two_m
        table = specfun.mp_uig_diff_chain(s_top, -two_m - max_terms, x1, x2)

        def delta(s):
            return table[s_top - s]

        total = mp.mpf(0)
        terms_used = 0
        converged = True
        for n in range(m * n_rx):
            head = pref / mp.factorial(n)
            part = mp.mpf(0)
            small = 0
            ok = False
            for p in range(max_terms):
                t = (head * (-1) ** p * w2 ** p * wc ** (two_m + p)
                     / mp.factorial(p) * delta(n - p - two_m))
                part += t
                terms_used += 1
                if abs(t) <= rel_tol * abs(part):
                    small += 1
                    if small >= 3:
                        ok = True
                        break
                else:
                    small = 0
            converged = converged and ok
            total += part
        return float(total), terms_used, converged


def _upsilon3_series(params, st, th, rel_tol, max_terms, variant):
    """Relay-link failure mass over the unsaturated decode window.

    Defining integral: int_{tau3*}^{beta1} f2(x) F0(gth1 / (phi2 Ps x)) dx.
    Expanding F0 and the inner exponential yields, per (n, p),
    incomplete-gamma differences at shape n - p - 2m.  The printed journal
    equation multiplies the window mass by the resulting sum S; the integral
    it came from equals mass - S, which is what the repaired variant (and the
    quadrature oracle, and Monte Carlo) give.  Returns (value, terms,
    converged).
    """
    g1 = th.gamma_th1
    if th.tau3_star >= th.beta1 or g1 <= 0.0:
        return 0.0, 0, True
    if th.phi2 == 0.0:
        # no power split: the relay never transmits and F0(inf) = 1
        mass = _cdf(st.shape2, st.scale2, th.beta1) - _cdf(st.shape2, st.scale2, th.tau3_star)
        return max(0.0, mass), 0, True

    arg = (params.m / st.omega2) * th.beta1  # exponential the p-sum rebuilds
    if arg <= _FLOAT_ARG_MAX:
        total, terms, conv = _upsilon3_series_float(params, st, th, rel_tol, max_terms)
    elif arg <= _MP_ARG_MAX:
        total, terms, conv = _upsilon3_series_mp(
            params, st, th, rel_tol, max_terms, dps=30 + int(arg))
    else:
        return upsilon3_quadrature(params), 0, True

    mass = _cdf(st.shape2, st.scale2, th.beta1) - _cdf(st.shape2, st.scale2, th.tau3_star)
    value = mass * total if variant == PRINTED else mass - total
    return value, terms, conv


def op_u1_exact_nodirect(params: SystemParams,
                         rel_tol: float = DEFAULT_REL_TOL,
                         max_terms: int = DEFAULT_MAX_TERMS,
                         variant: str = REPAIRED) -> SeriesReport:
    """Outage probability of the far user served only through the relay:
    Y1 + Y2 + Y3 + Y4 (relay decode failures in both EH regimes, plus relay
    link failures after a successful decode in both regimes)."""
    st = derive_stats(params)
    th = thresholds(params)
    f2 = lambda x: _cdf(st.shape2, st.scale2, x)
    if th.gamma_th1 <= 0.0:
        return SeriesReport(0.0, 0.0, 0, True)

    y1 = f2(th.tau2_star)
    y2 = max(0.0, f2(th.beta2) - f2(th.beta1))
    y3, terms, conv = _upsilon3_series(params, st, th, rel_tol, max_terms, variant)
    y4 = (1.0 - f2(th.beta3_star)) * _cdf(
        st.shape0, st.scale0, th.gamma_th1 * params.sigma2 / (params.eta * params.p_th))
    raw = y1 + y2 + y3 + y4
    return SeriesReport(_clamp01(raw) if conv else raw, raw, terms, conv)


# ---------------------------------------------------------------------------
# far user, with direct link
# ---------------------------------------------------------------------------


def _x21_series_float(params, st, th, rel_tol, max_terms):
    """X21 tail sum T in float64 (see _x21_series)."""
    g1 = th.gamma_th1
    m, n_rx = params.m, params.n_rx
    mn = m * n_rx
    two_mn = 2 * mn
    s2 = params.sigma2
    a1, a2 = params.a1, params.a2

    mu = m * s2 / (params.eta * params.p_th * st.omega0)
    g = a1 / a2 - g1                      # > 0 whenever theta1 is finite
    lam = mu * a1 / a2
    b = 2 * m * s2 / (a2 * params.p_s * st.omega1)
    u_max = a1 / (a1 - a2 * g1)
    x1, x2 = lam / u_max, lam

    s_top = mn - 2
    s_min = -two_mn - max_terms
    table = specfun.scaled_uig_diff_chain(max(s_top, 0), s_min, x1, x2)
    top = max(s_top, 0)

    log_b = math.log(b)
    log_umax = math.log(u_max)
    log_ratio = math.log(a1 / a2)
    log_g = math.log(g) if g > 0.0 else -math.inf
    base = mu * g + b + two_mn * log_b - specfun.log_gamma(two_mn)

    lnC = lambda n, k: (specfun.log_gamma(n + 1) - specfun.log_gamma(k + 1)
                        - specfun.log_gamma(n - k + 1))

    # finite (n, k, t) coefficients, reused for every p
    heads = []
    for n in range(mn):
        hn = base + n * math.log(mu) - specfun.log_gamma(n + 1)
        for k in range(n + 1):
            if g == 0.0 and k != n:
                continue
            hk = hn + lnC(n, k) + k * log_ratio + (n - k) * (log_g if n != k else 0.0)
            sk = (-1.0) ** (n - k)
            for t in range(two_mn):
                ht = hk + lnC(two_mn - 1, t)
                sgn = sk * (-1.0) ** (two_mn - 1 - t)
                heads.append((ht, sgn, k - t))

    def term(p):
        log_p = p * log_b - specfun.log_gamma(p + 1)
        sgn_p = (-1.0) ** p
        acc = 0.0
        for ht, sgn, k_m_t in heads:
            d = table[top - (k_m_t - p - 1)]
            if d <= 0.0:
                continue
            lg = ht + log_p + (p + 1 - k_m_t) * log_umax + math.log(d)
            acc += sgn * sgn_p * math.exp(lg)
        return acc

    out = specfun.sum_series(term, rel_tol=rel_tol, max_terms=max_terms)
    return out.value, out.terms_used, out.converged


def _x21_series_mp(params, st, th, rel_tol, max_terms, dps):
    """X21 tail sum T in extended precision."""
    g1 = th.gamma_th1
    m, n_rx = params.m, params.n_rx
    mn = m * n_rx
    two_mn = 2 * mn
    with _MP_LOCK, mp.workdps(dps):
        s2 = mp.mpf(params.sigma2)
        a1, a2 = mp.mpf(params.a1), mp.mpf(params.a2)
        mu = m * s2 / (mp.mpf(params.eta) * params.p_th * st.omega0)
        g = a1 / a2 - g1
        lam = mu * a1 / a2
        b = 2 * m * s2 / (a2 * params.p_s * st.omega1)
        u_max = a1 / (a1 - a2 * g1)
        x1, x2 = lam / u_max, lam
        pref = mp.exp(mu * g + b) * b ** two_mn / mp.gamma(two_mn)
        s_top = max(mn - 2, 0)
        table = specfun.mp_uig_diff_chain(s_top, -two_mn - max_terms, x1, x2)

        def delta(s):
            return table[s_top - s]

        heads = []
        for n in range(mn):
            hn = pref * mu ** n / mp.factorial(n)
            for k in range(n + 1):
                if g == 0 and k != n:
                    continue
                c = (hn * mp.binomial(n, k) * (a1 / a2) ** k * (-g) ** (n - k))
                for t in range(two_mn):
                    heads.append((c * mp.binomial(two_mn - 1, t) * (-1) ** (two_mn - 1 - t),
                                  k - t))
        total = mp.mpf(0)
        small = 0
        converged = False
        terms_used = 0
        for p in range(max_terms):
            bp = (-b) ** p / mp.factorial(p)
            t = mp.mpf(0)
            for c, k_m_t in heads:
                s = k_m_t - p - 1
                t += c * bp * lam ** (-s) * delta(s)
            total += t
            terms_used = p + 1
            if abs(t) <= rel_tol * abs(total):
                small += 1
                if small >= 3:
                    converged = True
                    break
            else:
                small = 0
        return float(total), terms_used, converged


def _x21_series(params, st, th, rel_tol, max_terms):
    """Saturated-regime probability that the MRC sum stays under threshold:
    X21 = int_0^{theta1} F0(q (gth1 - beta(y))) f1(y) dy with q = sigma^2/(eta p_th).

    The substitution u = a2 (Ps/2sigma^2) y + 1 turns the integrand into
    powers of u times exp(-Lambda/u); binomial expansions plus the Taylor
    series of exp(-b u) leave incomplete-gamma differences at integer shapes
    k - t - p - 1.  Returns (value, terms, converged).
    """
    f1_theta = _cdf(st.shape1, st.scale1, th.theta1)
    b = 2 * params.m * params.sigma2 / (params.a2 * params.p_s * st.omega1)
    u_max = params.a1 / (params.a1 - params.a2 * th.gamma_th1)
    arg = b * u_max  # exponential the p-sum rebuilds
    if arg <= _FLOAT_ARG_MAX:
        t, terms, conv = _x21_series_float(params, st, th, rel_tol, max_terms)
    elif arg <= _MP_ARG_MAX:
        t, terms, conv = _x21_series_mp(params, st, th, rel_tol, max_terms,
                                        dps=30 + int(arg))
    else:
        return x21_quadrature(params), 0, True
    return f1_theta - t, terms, conv


def _assemble_direct(params, st, th, x21, variant):
    f2 = lambda x: _cdf(st.shape2, st.scale2, x)
    f1_theta = _cdf(st.shape1, st.scale1, th.theta1)
    # saturated relay-decode success region: ||h2||^2 above both the
    # saturation point and the saturated decode threshold
    sat_lo = th.beta2_star if variant == PRINTED else max(th.beta1, th.beta2)
    chi2 = (1.0 - f2(sat_lo)) * x21
    chi3 = f2(th.tau2_star) * f1_theta
    if variant == PRINTED:
        chi4 = max(0.0, f2(th.beta3) - f2(th.beta2)) * f1_theta
    else:
        chi4 = max(0.0, f2(th.beta2) - f2(th.beta1)) * f1_theta
    return chi2 + chi3 + chi4


def op_u1_exact_direct(params: SystemParams,
                       rel_tol: float = DEFAULT_REL_TOL,
                       max_terms: int = DEFAULT_MAX_TERMS,
                       variant: str = REPAIRED) -> SeriesReport:
    """Outage probability of the far user with the direct BS link combined by
    MRC: chi2 + chi3 + chi4 (chi1, the unsaturated MRC failure after a relay
    decode, is dropped; it is exactly zero when tau1 >= beta1 and negligible
    against Monte Carlo resolution otherwise -- see the comparison report)."""
    st = derive_stats(params)
    th = thresholds(params)
    if th.gamma_th1 <= 0.0:
        return SeriesReport(0.0, 0.0, 0, True)
    if th.theta1 == math.inf:
        raw = _assemble_direct(params, st, th, 0.0, variant)
        return SeriesReport(_clamp01(raw), raw, 0, True)
    x21, terms, conv = _x21_series(params, st, th, rel_tol, max_terms)
    raw = _assemble_direct(params, st, th, x21, variant)
    return SeriesReport(_clamp01(raw) if conv else raw, raw, terms, conv)


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------


def _quad(fn, lo, hi):
    val, err = integrate.quad(fn, lo, hi, epsabs=1e-16, epsrel=1e-11, limit=400)
    if err > max(1e-12, 1e-8 * abs(val)):
        raise QuadratureError(f"achieved abs tolerance {err:.3e} for value {val:.6e}")
    return val


def upsilon3_quadrature(params: SystemParams) -> float:
    """Y3 by direct adaptive quadrature of its defining integral."""
    st = derive_stats(params)
    th = thresholds(params)
    if th.tau3_star >= th.beta1 or th.gamma_th1 <= 0.0:
        return 0.0
    if th.phi2 == 0.0:
        return max(0.0, _cdf(st.shape2, st.scale2, th.beta1)
                   - _cdf(st.shape2, st.scale2, th.tau3_star))
    c = th.gamma_th1 / (th.phi2 * params.p_s)

    def integrand(x):
        return (specfun.gamma_pdf(st.shape2, st.scale2, x)
                * specfun.gamma_cdf(st.shape0, st.scale0, c / x))

    return _quad(integrand, th.tau3_star, th.beta1)


def x21_quadrature(params: SystemParams) -> float:
    """X21 by direct adaptive quadrature of its defining integral."""
    st = derive_stats(params)
    th = thresholds(params)
    if th.theta1 <= 0.0 or th.theta1 == math.inf:
        return 0.0
    q = params.sigma2 / (params.eta * params.p_th)
    half_ps = params.p_s / 2.0

    def integrand(y):
        beta = params.a1 * half_ps * y / (params.a2 * half_ps * y + params.sigma2)
        return (specfun.gamma_cdf(st.shape0, st.scale0, q * (th.gamma_th1 - beta))
                * specfun.gamma_pdf(st.shape1, st.scale1, y))

    return _quad(integrand, 0.0, th.theta1)


def op_u1_quadrature_oracle(params: SystemParams, scenario: str | None = None,
                            variant: str = REPAIRED) -> float:
    """Far-user outage via the same event decomposition as the closed forms,
    but with the two non-elementary integrals evaluated by quadrature."""
    scenario = scenario or params.scenario
    st = derive_stats(params)
    th = thresholds(params)
    if th.gamma_th1 <= 0.0:
        return 0.0
    f2 = lambda x: _cdf(st.shape2, st.scale2, x)
    if scenario == WITHOUT_DIRECT:
        y1 = f2(th.tau2_star)
        y2 = max(0.0, f2(th.beta2) - f2(th.beta1))
        y3 = upsilon3_quadrature(params)
        y4 = (1.0 - f2(th.beta3_star)) * _cdf(
            st.shape0, st.scale0, th.gamma_th1 * params.sigma2 / (params.eta * params.p_th))
        return _clamp01(y1 + y2 + y3 + y4)
    if scenario == WITH_DIRECT:
        x21 = x21_quadrature(params)
        return _clamp01(_assemble_direct(params, st, th, x21, variant))
    raise ValueError(f"unknown scenario {scenario!r}")


def op_u1_exact(params: SystemParams, **kw) -> SeriesReport:
    """Dispatch to the scenario-appropriate far-user closed form."""
    if params.scenario == WITHOUT_DIRECT:
        return op_u1_exact_nodirect(params, **kw)
    return op_u1_exact_direct(params, **kw)
