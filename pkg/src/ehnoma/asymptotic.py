"""High-SNR outage approximations and diversity-order estimation.

All thresholds scale as 1/P_S, so with t~ = t * P_S the asymptotic CDF
F(x) ~ (x m / Omega)^shape / Gamma(shape+1) turns each outage term into a
coefficient times a pure power of P_S.  The saturated relay keeps a constant
transmit power, which leaves the far user an SNR-independent floor without a
direct link and a P_S^(-2mN) leading term with one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .model import SystemParams, WITHOUT_DIRECT, derive_stats, thresholds


def _finf(x, shape, scale):
    """Small-argument asymptote of the Gamma CDF."""
    if x == math.inf:
        return math.inf
    return (x / scale) ** shape / math.exp(specfun.log_gamma(shape + 1))


@dataclass(frozen=True)
class AsymptoticDecomposition:
    """Sum of coefficient * P_S^exponent terms approximating an OP curve."""

    terms: tuple          # ((coefficient, snr_exponent), ...)
    dominant_exponent: float

    def evaluate(self, p_s: float) -> float:
        val = sum(c * p_s ** e for c, e in self.terms)
        return min(1.0, max(0.0, val))


def op_u2_asymptotic(params: SystemParams) -> float:
    """Near-user high-SNR outage; decays as P_S^-2m (diversity order 2m)."""
    th = thresholds(params)
    st = derive_stats(params)
    if th.beta1_star == math.inf:
        return 1.0
    val = _finf(th.beta1_star, st.shape2, st.scale2)
    if th.beta1 > th.tau1_star:  # unsaturated success window is non-empty
        val += _finf(th.tau1_star, st.shape2, st.scale2) - _finf(th.beta1, st.shape2, st.scale2)
    return min(1.0, max(0.0, val))


def op_u1_asymptotic_nodirect(params: SystemParams) -> AsymptoticDecomposition:
    """Far-user high-SNR decomposition without the direct link.

    The saturated relay-link failure contributes the constant floor
    C = F0_inf(gth1 sigma^2 / (eta p_th)); the remaining terms decay as
    P_S^-2m, with the unsaturated relay-link term carrying a logarithmic
    coefficient when nu = m(2 - N) is zero.
    """
    th = thresholds(params)
    st = derive_stats(params)
    m, n_rx = params.m, params.n_rx
    two_m, mn = 2 * m, m * n_rx
    ps = params.p_s
    if th.tau2_star == math.inf or th.beta2 == math.inf:
        return AsymptoticDecomposition(terms=((1.0, 0.0),), dominant_exponent=0.0)

    c = _finf(th.gamma_th1 * params.sigma2 / (params.eta * params.p_th),
              st.shape0, st.scale0)
    a = _finf(th.tau2_star * ps, st.shape2, st.scale2)
    b = max(0.0, _finf(th.beta2 * ps, st.shape2, st.scale2)
            - _finf(th.beta1 * ps, st.shape2, st.scale2))
    d = -c * _finf(th.beta3_star * ps, st.shape2, st.scale2)
    terms = [(c, 0.0), (a, -float(two_m)), (b, -float(two_m)), (d, -float(two_m))]

    if th.tau3_star < th.beta1 and th.phi2 > 0.0 and th.gamma_th1 > 0.0:
        k = (2 * m * (m / st.omega2) ** two_m
             * (m * th.gamma_th1 / (th.phi2 * st.omega0)) ** mn
             / math.exp(specfun.log_gamma(two_m + 1) + specfun.log_gamma(mn + 1)))
        nu = two_m - mn
        if nu == 0:
            terms.append((k * math.log(th.beta1 / th.tau3_star), -float(mn)))
        else:
            terms.append((k * ((th.beta1 * ps) ** nu - (th.tau3_star * ps) ** nu) / nu,
                          -float(two_m)))
    dominant = 0.0 if c > 0.0 else -float(two_m)
    return AsymptoticDecomposition(terms=tuple(terms), dominant_exponent=dominant)


def op_u1_asymptotic_direct(params: SystemParams) -> float:
    """Far-user high-SNR outage with the direct link.

    chi2_inf (saturated relay success, MRC failure) decays as P_S^-2mN and
    dominates; the relay-decode failure terms add a P_S^-2m(N+1) correction.
    The primitive of u^(t-p) goes logarithmic where the exponent hits -1,
    i.e. at kappa = p - t - 1 = 0.
    """
    th = thresholds(params)
    st = derive_stats(params)
    if th.theta1 == math.inf:
        return 1.0
    m, n_rx = params.m, params.n_rx
    mn, two_mn = m * n_rx, 2 * m * n_rx
    a1, a2, s2 = params.a1, params.a2, params.sigma2

    f1_inf = _finf(th.theta1, st.shape1, st.scale1)
    tail = (_finf(th.tau2_star, st.shape2, st.scale2)
            + max(0.0, _finf(th.beta2, st.shape2, st.scale2)
                  - _finf(th.beta1, st.shape2, st.scale2))) * f1_inf

    mu = m * s2 / (params.eta * params.p_th * st.omega0)
    g = a1 / a2 - th.gamma_th1
    b_ = 2 * m * s2 / (a2 * params.p_s * st.omega1)
    u_max = a1 / (a1 - a2 * th.gamma_th1)
    pref = (2 * mn * b_ ** two_mn * mu ** mn
            / math.exp(specfun.log_gamma(two_mn + 1) + specfun.log_gamma(mn + 1)))
    acc = 0.0
    for t in range(two_mn):
        ct = math.comb(two_mn - 1, t) * (-1.0) ** (two_mn - 1 - t)
        for p in range(mn + 1):
            cp = math.comb(mn, p) * (a1 / a2) ** p * (-g) ** (mn - p)
            e = t - p + 1
            piece = math.log(u_max) if e == 0 else (u_max ** e - 1.0) / e
            acc += ct * cp * piece
    sat = max(0.0, 1.0 - _finf(max(th.beta1, th.beta2), st.shape2, st.scale2))
    chi2_inf = sat * pref * acc
    return min(1.0, max(0.0, chi2_inf + tail))


def op_u1_asymptotic(params: SystemParams) -> float:
    """Scenario dispatcher returning the asymptotic OP value at params.p_s."""
    if params.scenario == WITHOUT_DIRECT:
        return op_u1_asymptotic_nodirect(params).evaluate(params.p_s)
    return op_u1_asymptotic_direct(params)


def diversity_order_fit(curve, fit_points: int = 3) -> float:
    """Negated least-squares slope of log10(OP) against SNR_dB / 10 over the
    highest-SNR `fit_points` points of the curve."""
    pts = [(float(s), float(v)) for s, v in curve]
    if len(pts) < 3:
        raise ValueError("need at least 3 curve points")
    snrs = [s for s, _ in pts]
    if any(b <= a for a, b in zip(snrs, snrs[1:])):
        raise ValueError("snr_db values must be strictly increasing")
    window = pts[-max(3, int(fit_points)):]
    if any(v <= 0.0 for _, v in window):
        raise ValueError("all OP values in the fit window must be positive")
    x = np.array([s / 10.0 for s, _ in window])
    y = np.log10([v for _, v in window])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)
