"""System model: parameters, channel statistics, harvested power, SINRs,
decoding thresholds, and the per-realization outage events.

Every operation accepts scalars or numpy arrays for the channel gains, so the
Monte Carlo simulator evaluates the exact same event logic the closed forms
are derived from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as _dc_replace

import numpy as np

FD = "FD"
HD = "HD"
WITH_DIRECT = "with-direct-link"
WITHOUT_DIRECT = "without-direct-link"

# Saturation threshold of the energy harvester.  The figures never state it.
# This default keeps the far user's saturation floor prominent (flat within a
# few percent beyond 20 dB SNR) while staying inside the regime where the
# direct-link decomposition with chi1 = 0 is event-exact (tau1 >= beta1 for
# the full-duplex presets); see README for the trade-offs against the
# reported self-interference gains, which would need p_th near 8.5.
DEFAULT_P_TH = 1.2


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol parameters (all powers linear, noise-normalized)."""

    p_s: float                      # BS transmit power
    a1: float = 0.8                 # far-user power fraction
    a2: float = 0.2                 # near-user power fraction
    rho: float = 0.5                # power-splitting ratio for EH
    eta: float = 0.7                # energy conversion efficiency
    p_th: float = DEFAULT_P_TH      # EH saturation input power
    sigma_si2: float = 1e-3         # residual self-interference power
    duplex: str = FD
    m: int = 1                      # Nakagami fading parameter
    n_rx: int = 2                   # receive antennas at U_1
    d_s1: float = 1.5
    d_s2: float = 1.0
    d_21: float = 0.5
    epsilon: float = 2.0            # path-loss exponent
    r1: float = 1.0                 # target rate of U_1 (BPCU)
    r2: float = 2.0                 # target rate of U_2 (BPCU)
    sigma2: float = 1.0             # noise power
    scenario: str = WITH_DIRECT

    def __post_init__(self):
        if self.duplex not in (FD, HD):
            raise ValueError(f"duplex must be {FD!r} or {HD!r}")
        if self.scenario not in (WITH_DIRECT, WITHOUT_DIRECT):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not (self.a1 > self.a2 > 0.0):
            raise ValueError("NOMA power ordering requires a1 > a2 > 0")
        if abs(self.a1 + self.a2 - 1.0) > 1e-12:
            raise ValueError("power allocation must satisfy a1 + a2 = 1")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        if self.m < 1 or int(self.m) != self.m:
            raise ValueError("m must be a positive integer")
        if self.n_rx < 1 or int(self.n_rx) != self.n_rx:
            raise ValueError("n_rx must be a positive integer")
        for name in ("p_s", "p_th", "sigma2", "d_s1", "d_s2", "d_21",
                     "epsilon", "r1", "r2"):
            if getattr(self, name) <= 0.0 or not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be positive and finite")
        if self.sigma_si2 < 0.0:
            raise ValueError("sigma_si2 must be non-negative")
        if self.eta * self.rho * self.varpi * self.sigma_si2 >= 1.0:
            raise ValueError("eta*rho*varpi*sigma_si2 must be < 1 "
                             "(harvested power undefined otherwise)")

    @property
    def varpi(self) -> int:
        """Relay mode indicator: 1 in FD, 0 in HD."""
        return 1 if self.duplex == FD else 0

    @property
    def snr_db(self) -> float:
        return float(lin_to_db(self.p_s / self.sigma2))

    def replace(self, **kw) -> "SystemParams":
        return _dc_replace(self, **kw)


@dataclass(frozen=True)
class ChannelStats:
    """Gamma laws of the three squared Frobenius-norm gains."""

    omega2: float   # per-entry mean gain, BS -> U_2 (2x1)
    omega1: float   # BS -> U_1 (2xN)
    omega0: float   # U_2 -> U_1 (1xN)
    shape2: int
    shape1: int
    shape0: int
    scale2: float
    scale1: float
    scale0: float


def derive_stats(params: SystemParams) -> ChannelStats:
    m, n = params.m, params.n_rx
    om2 = params.d_s2 ** -params.epsilon
    om1 = params.d_s1 ** -params.epsilon
    om0 = params.d_21 ** -params.epsilon
    return ChannelStats(
        omega2=om2, omega1=om1, omega0=om0,
        shape2=2 * m, shape1=2 * m * n, shape0=m * n,
        scale2=om2 / m, scale1=om1 / m, scale0=om0 / m,
    )


def rate_thresholds(params: SystemParams):
    """Target SINRs (gamma_th1, gamma_th2).

    The FD relay works single-phase, so gamma_th = 2^R - 1; the HD relay
    halves the effective rate, so gamma_th = 2^(2R) - 1.
    """
    k = 1.0 if params.duplex == FD else 2.0
    return 2.0 ** (k * params.r1) - 1.0, 2.0 ** (k * params.r2) - 1.0


@dataclass(frozen=True)
class ChannelGains:
    """One realization (or array of realizations) of the squared norms."""

    h2sq: object
    h1sq: object
    h0sq: object


@dataclass(frozen=True)
class SinrSet:
    g21: object   # U_2 decoding U_1's symbol
    g22: object   # U_2 decoding its own symbol
    g11: object   # U_1 direct link
    g12: object   # U_1 relay link
    g1: object    # MRC combination, g11 + g12


def harvested_power(params: SystemParams, h2sq):
    """Relay transmit power under the piecewise-linear (saturating) EH law.

    Below saturation the self-recycling fixed point gives
    P_R = eta rho P_S ||h2||^2 / (1 - eta rho varpi sigma_SI^2); once the
    resulting harvester input exceeds p_th the output pins at eta * p_th.
    """
    h2sq = np.asarray(h2sq, dtype=float)
    w = params.varpi
    denom = 1.0 - params.eta * params.rho * w * params.sigma_si2
    cand = np.maximum(0.0, params.eta * params.rho * params.p_s * h2sq / denom)
    p_in = params.rho * (params.p_s * h2sq + w * cand * params.sigma_si2)
    out = np.where(p_in <= params.p_th, cand, params.eta * params.p_th)
    return float(out) if out.ndim == 0 else out


def sinr_all(params: SystemParams, gains: ChannelGains) -> SinrSet:
    h2 = np.asarray(gains.h2sq, dtype=float)
    h1 = np.asarray(gains.h1sq, dtype=float)
    h0 = np.asarray(gains.h0sq, dtype=float)
    p = params.p_s
    w = params.varpi
    s2 = params.sigma2
    pr = harvested_power(params, h2)
    si = w * (1.0 - params.rho) * params.sigma_si2 * pr
    g21 = (params.a1 * (p / 2) * (1 - params.rho) * h2) / (
        params.a2 * (p / 2) * (1 - params.rho) * h2 + si + s2)
    g22 = (params.a2 * (p / 2) * (1 - params.rho) * h2) / (si + s2)
    g11 = (params.a1 * (p / 2) * h1) / (params.a2 * (p / 2) * h1 + s2)
    g12 = pr * h0 / s2
    return SinrSet(g21=g21, g22=g22, g11=g11, g12=g12, g1=g11 + g12)


@dataclass(frozen=True)
class ThresholdSet:
    """Channel-gain thresholds equivalent to the SINR decoding conditions.

    Infeasible conditions (a denominator that is not positive) yield an
    infinite threshold, which makes every downstream probability come out
    right without special-casing: the corresponding event just has measure
    zero (or one).
    """

    gamma_th1: float
    gamma_th2: float
    phi1: float
    phi2: float
    tau1: float
    tau2: float
    tau1_star: float
    tau2_star: float
    tau3_star: float
    beta1: float
    beta2: float
    beta3: float
    beta1_star: float
    beta2_star: float
    beta3_star: float
    theta1: float
    feasible_u2: bool
    feasible_u1: bool


def thresholds(params: SystemParams) -> ThresholdSet:
    g1, g2 = rate_thresholds(params)
    w = params.varpi
    s2 = params.sigma2
    denom_si = 1.0 - params.eta * params.rho * w * params.sigma_si2
    phi1 = params.eta * params.rho * w * params.sigma_si2 / denom_si
    phi2 = params.eta * params.rho / (s2 * denom_si)
    one_m_rho = 1.0 - params.rho
    ps = params.p_s

    def ratio(num, den):
        return num / den if den > 0.0 else math.inf

    # unsaturated regime
    tau1 = ratio(2 * g1 * s2, ps * one_m_rho * (params.a1 - (params.a2 + 2 * phi1) * g1))
    tau2 = ratio(2 * g2 * s2, ps * one_m_rho * (params.a2 - 2 * phi1 * g2))
    # saturation boundary and saturated regime
    beta1 = ratio(params.p_th * denom_si, params.rho * ps)
    sat_noise = s2 + params.eta * one_m_rho * w * params.sigma_si2 * params.p_th
    beta2 = ratio(2 * g1 * sat_noise, ps * one_m_rho * (params.a1 - params.a2 * g1))
    beta3 = 2 * g2 * sat_noise / (params.a2 * ps * one_m_rho)
    # direct link
    theta1 = ratio(2 * g1 * s2, ps * (params.a1 - params.a2 * g1))

    return ThresholdSet(
        gamma_th1=g1, gamma_th2=g2, phi1=phi1, phi2=phi2,
        tau1=tau1, tau2=tau2,
        tau1_star=max(0.0, tau1, tau2),
        tau2_star=min(tau1, beta1),
        tau3_star=max(0.0, tau1),
        beta1=beta1, beta2=beta2, beta3=beta3,
        beta1_star=max(beta1, beta2, beta3),
        beta2_star=max(0.0, beta2),
        beta3_star=max(beta1, beta2),
        theta1=theta1,
        feasible_u2=(params.a1 > (params.a2 + 2 * phi1) * g1) and (params.a2 > 2 * phi1 * g2),
        feasible_u1=params.a1 > (params.a2 + 2 * phi1) * g1,
    )


def outage_indicators(params: SystemParams, gains: ChannelGains):
    """Boolean outage events (u1_outage, u2_outage) for one or many realizations."""
    g1th, g2th = rate_thresholds(params)
    s = sinr_all(params, gains)
    u2 = ~((s.g21 > g1th) & (s.g22 > g2th))
    if params.scenario == WITHOUT_DIRECT:
        u1 = (s.g21 < g1th) | ((s.g21 > g1th) & (s.g12 < g1th))
    else:
        u1 = ((s.g21 > g1th) & (s.g1 < g1th)) | ((s.g21 < g1th) & (s.g11 < g1th))
    return u1, u2
