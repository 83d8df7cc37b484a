"""Seeded Monte Carlo estimation of the outage probabilities.

Trials are split into fixed-size batches; batch b draws from a generator
seeded by SeedSequence((seed, b)), so the estimate is bit-identical for a
given (seed, n_trials, batch_size) no matter how batches are scheduled.
The reduction is an integer count sum, hence exact and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelGains, ChannelStats, SystemParams, derive_stats, outage_indicators

LOW_COUNT_FACTOR = 100  # flag estimates with fewer than this many expected hits


@dataclass(frozen=True)
class McConfig:
    n_trials: int = 1_000_000
    seed: int = 2024
    batch_size: int = 1_000_000

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class OutageResult:
    p_u1: float
    p_u2: float
    stderr_u1: float
    stderr_u2: float
    method: str
    n_trials: int = 0
    low_count_u1: bool = False
    low_count_u2: bool = False


def batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, batch_index))))


def sample_gains(stats: ChannelStats, rng: np.random.Generator, size=None) -> ChannelGains:
    """Draw the three squared-norm gains from their Gamma laws.

    Draw order (h2, h1, h0) is part of the determinism contract: U_2-side
    statistics stay bit-identical when only the U_1-side geometry changes.
    """
    h2 = rng.gamma(stats.shape2, stats.scale2, size)
    h1 = rng.gamma(stats.shape1, stats.scale1, size)
    h0 = rng.gamma(stats.shape0, stats.scale0, size)
    return ChannelGains(h2sq=h2, h1sq=h1, h0sq=h0)


def estimate_op(params: SystemParams, cfg: McConfig) -> OutageResult:
    stats = derive_stats(params)
    n = cfg.n_trials
    count1 = 0
    count2 = 0
    done = 0
    batch = 0
    while done < n:
        take = min(cfg.batch_size, n - done)
        rng = batch_rng(cfg.seed, batch)
        gains = sample_gains(stats, rng, size=take)
        u1, u2 = outage_indicators(params, gains)
        count1 += int(np.count_nonzero(u1))
        count2 += int(np.count_nonzero(u2))
        done += take
        batch += 1
    p1 = count1 / n
    p2 = count2 / n
    return OutageResult(
        p_u1=p1, p_u2=p2,
        stderr_u1=float(np.sqrt(p1 * (1.0 - p1) / n)),
        stderr_u2=float(np.sqrt(p2 * (1.0 - p2) / n)),
        method="monte-carlo",
        n_trials=n,
        low_count_u1=count1 < LOW_COUNT_FACTOR,
        low_count_u2=count2 < LOW_COUNT_FACTOR,
    )


def alamouti_effective_snr_check(h: np.ndarray, snr: float):
    """Post-combining per-symbol SNR of an Alamouti block over channel h (2xN),
    computed through the explicit combiner, against the (snr/2)*||h||_F^2 model.

    Transmit slots send [s1, s2] and [-s2*, s1*] with per-antenna power snr/2
    over unit noise; the receiver co-phases both slots and MRC-combines the N
    branches.  The combiner output for s1 is sum_j h0j* y0j + h1j y1j*, whose
    signal amplitude gain is ||h||_F^2 while the combined noise variance grows
    only like ||h||_F^2.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[0] != 2:
        raise ValueError("channel matrix must be 2 x N")
    s1, s2 = 1.0 + 0.0j, 0.0j  # unit-energy probe symbol on the first slot
    code = np.array([[s1, s2], [-np.conj(s2), np.conj(s1)]])
    y = code @ h  # rows: time slots, cols: antennas (noiseless)
    z1 = np.sum(np.conj(h[0, :]) * y[0, :] + h[1, :] * np.conj(y[1, :]))
    amp_gain = z1.real  # equals ||h||_F^2 for any h
    noise_var = float(np.sum(np.abs(h) ** 2))  # unit-variance noise through combiner
    effective = (snr / 2.0) * amp_gain ** 2 / noise_var
    predicted = (snr / 2.0) * float(np.linalg.norm(h, "fro") ** 2)
    return effective, predicted
