"""Special functions used by the closed-form outage expressions.

The outage series need the upper incomplete gamma function at zero and
negative shape (where scipy's regularized routines give up), stable
*differences* Gamma(s, x1) - Gamma(s, x2) along integer shape chains, and
a guarded series accumulator for the infinite p-sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as sp


class DomainError(ValueError):
    """Argument outside the mathematical domain of a special function."""


class SeriesError(ArithmeticError):
    """A series term came out non-finite."""


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("log_gamma requires finite x > 0")
    out = sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


def gamma_cdf(shape, scale, x):
    """CDF of Gamma(shape, scale) at x >= 0 (vectorized in x)."""
    if not (np.isfinite(shape) and np.isfinite(scale)) or shape <= 0 or scale <= 0:
        raise DomainError("gamma_cdf requires shape > 0 and scale > 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma_cdf requires x >= 0")
    out = sp.gammainc(shape, x / scale)
    return float(out) if out.ndim == 0 else out


def gamma_pdf(shape, scale, x):
    """PDF of Gamma(shape, scale) at x > 0 (vectorized in x)."""
    if not (np.isfinite(shape) and np.isfinite(scale)) or shape <= 0 or scale <= 0:
        raise DomainError("gamma_pdf requires shape > 0 and scale > 0")
    x = np.asarray(x, dtype=float)
    z = x / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (shape - 1.0) * np.log(z) - z - sp.gammaln(shape) - math.log(scale)
        out = np.where(x > 0, np.exp(logpdf), 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# upper incomplete gamma, arbitrary real shape
# ---------------------------------------------------------------------------

_CF_MAX_ITER = 50000
_TINY = 1e-300


def _uig_positive(s, x):
    # unnormalized Gamma(s, x), s > 0
    return sp.gammaincc(s, x) * math.exp(sp.gammaln(s))


def _uig_cf(s, x):
    """Legendre continued fraction for Gamma(s, x), reliable for x >= 1.

    Modified Lentz evaluation of
      Gamma(s,x) = e^-x x^s / (x+1-s - 1(1-s)/(x+3-s - 2(2-s)/(x+5-s - ...)))
    """
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / max(b, _TINY)
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    else:
        raise ArithmeticError(f"continued fraction for Gamma({s}, {x}) did not converge")
    return math.exp(-x + s * math.log(x)) * h


def _uig_recurrence_down(s, x):
    """Gamma(s, x) for s <= 0 by downward recurrence from a positive/zero anchor.

    Stable for x < ~1 where the x^s e^-x term dominates; for larger x the
    subtraction cancels catastrophically, hence the CF branch above.
    """
    if s == math.floor(s):
        anchor = 0.0
        val = sp.exp1(x)  # Gamma(0, x)
    else:
        anchor = s - math.floor(s)  # in (0, 1)
        val = _uig_positive(anchor, x)
    a = anchor
    emx = math.exp(-x)
    while a > s:
        a -= 1.0
        val = (val - math.pow(x, a) * emx) / a
    return val


def upper_inc_gamma(s, x):
    """Unnormalized upper incomplete gamma Gamma(s, x) for any real s, x > 0."""
    if not (np.isfinite(s) and np.isfinite(x)) or x <= 0.0:
        raise DomainError("upper_inc_gamma requires finite s and x > 0")
    s = float(s)
    x = float(x)
    if s > 0.0:
        return _uig_positive(s, x)
    if s == 0.0:
        return float(sp.exp1(x))
    if x >= 1.0:
        return _uig_cf(s, x)
    return _uig_recurrence_down(s, x)


def scaled_uig_diff_chain(s_top: int, s_min: int, x1: float, x2: float) -> np.ndarray:
    """Scaled differences D(s) = x1^-s (Gamma(s,x1) - Gamma(s,x2)) for an
    integer chain s = s_top, s_top-1, ..., s_min.

    The series evaluators consume Gamma differences along unit-spaced shape
    chains; scaling by x1^-s keeps every entry finite even for very negative
    shapes at tiny x1.  x2 may be inf (missing upper cutoff).

    Returns an array d with d[j] = D(s_top - j).
    """
    if not (0.0 < x1 < x2):
        raise DomainError("scaled_uig_diff_chain requires 0 < x1 < x2")
    if s_min > s_top:
        raise DomainError("need s_min <= s_top")
    n = s_top - s_min + 1
    out = np.empty(n)
    e1 = math.exp(-x1)
    e2 = math.exp(-x2) if np.isfinite(x2) else 0.0
    lr = math.log(x2 / x1) if np.isfinite(x2) else math.inf

    def direct(s):
        if s == 0:
            g1 = float(sp.exp1(x1))
            g2 = float(sp.exp1(x2)) if np.isfinite(x2) else 0.0
        else:
            g1 = _uig_positive(s, x1)
            g2 = _uig_positive(s, x2) if np.isfinite(x2) else 0.0
        return math.exp(-s * math.log(x1)) * (g1 - g2)

    # non-negative shapes straight from scipy
    j = 0
    for s in range(s_top, max(s_min, 0) - 1, -1):
        out[j] = direct(s)
        j += 1
    if j >= n:
        return out
    # negative shapes: D(s) = (x1 D(s+1) - e^-x1 + e^-x2 (x2/x1)^s) / s,
    # walked down from the zero-shape anchor even when s_top itself is < 0
    prev = direct(0)
    s = -1
    while j < n:
        t2 = e2 * math.exp(s * lr) if e2 > 0.0 else 0.0
        prev = (x1 * prev - e1 + t2) / s
        if s <= s_top:
            out[j] = prev
            j += 1
        s -= 1
    return out


def mp_uig_diff_chain(s_top: int, s_min: int, x1, x2):
    """Gamma(s, x1) - Gamma(s, x2) for integer s = s_top..s_min at the current
    mpmath working precision.

    Used by the extended-precision series paths, where mpmath.gammainc itself
    is too slow at deep negative integer shapes.  For x1 >= 1 both tails come
    from the continued fraction; otherwise the chain walks the downward
    recurrence from an exact anchor (finite Erlang sum at positive shapes, E1
    at zero), which is stable for x1 < 1.  x2 may be inf.

    Returns a list d with d[j] = Delta(s_top - j).
    """
    import mpmath as mp

    x1 = mp.mpf(x1)
    x2 = mp.mpf(x2) if x2 != math.inf else mp.inf
    if not (0 < x1 < x2):
        raise DomainError("mp_uig_diff_chain requires 0 < x1 < x2")

    def cf(s, x):
        # Lentz evaluation of the Legendre continued fraction, any real s
        tiny = mp.mpf(10) ** (-mp.mp.dps - 50)
        b = x + 1 - s
        c = 1 / tiny
        d = 1 / b if b != 0 else 1 / tiny
        h = d
        eps = mp.mpf(10) ** (-mp.mp.dps)
        for i in range(1, _CF_MAX_ITER):
            an = -i * (i - s)
            b += 2
            d = an * d + b
            if d == 0:
                d = tiny
            c = b + an / c
            if c == 0:
                c = tiny
            d = 1 / d
            delta = d * c
            h *= delta
            if abs(delta - 1) < eps:
                return mp.e ** (-x + s * mp.log(x)) * h
        raise ArithmeticError(f"mp continued fraction failed for ({s}, {x})")

    def exact_nonneg(s, x):
        # Gamma(s, x) = (s-1)! e^-x sum_{j<s} x^j/j! for integer s >= 1
        if x == mp.inf:
            return mp.mpf(0)
        if s == 0:
            return mp.e1(x)
        acc = mp.mpf(0)
        term = mp.mpf(1)
        for j in range(s):
            if j > 0:
                term *= x / j
            acc += term
        return mp.factorial(s - 1) * mp.e ** (-x) * acc

    n = s_top - s_min + 1
    out = [mp.mpf(0)] * n
    if x1 >= 1:
        for j, s in enumerate(range(s_top, s_min - 1, -1)):
            if s >= 0:
                hi = exact_nonneg(s, x2)
                out[j] = exact_nonneg(s, x1) - hi
            else:
                hi = cf(s, x2) if x2 != mp.inf else mp.mpf(0)
                out[j] = cf(s, x1) - hi
        return out

    e1v = mp.e ** (-x1)
    e2v = mp.e ** (-x2) if x2 != mp.inf else mp.mpf(0)
    j = 0
    for s in range(s_top, max(s_min, 0) - 1, -1):
        out[j] = exact_nonneg(s, x1) - exact_nonneg(s, x2)
        j += 1
    if j >= n:
        return out
    prev = exact_nonneg(0, x1) - (exact_nonneg(0, x2) if x2 != mp.inf else 0)
    s = -1
    while j < n:
        t2 = e2v * x2 ** s if e2v != 0 else mp.mpf(0)
        prev = (prev - e1v * x1 ** s + t2) / s
        if s <= s_top:
            out[j] = prev
            j += 1
        s -= 1
    return out


# ---------------------------------------------------------------------------
# guarded series accumulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesOutcome:
    value: float
    terms_used: int
    converged: bool


def sum_series(term: Callable[[int], float],
               rel_tol: float = 1e-12,
               max_terms: int = 200,
               consecutive: int = 3) -> SeriesOutcome:
    """Sum term(p) for p = 0, 1, ... until `consecutive` successive terms are
    below rel_tol of the running total, or max_terms is hit.

    Kahan-compensated accumulation; the partial sum is returned even on
    non-convergence (converged=False), never a guess.
    """
    if rel_tol <= 0.0:
        raise DomainError("rel_tol must be positive")
    if max_terms < 1:
        raise DomainError("max_terms must be >= 1")
    total = 0.0
    comp = 0.0
    small = 0
    for p in range(max_terms):
        t = term(p)
        if not math.isfinite(t):
            raise SeriesError(f"non-finite series term at index p={p}")
        y = t - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if abs(t) <= rel_tol * abs(total):
            small += 1
            if small >= consecutive:
                return SeriesOutcome(total, p + 1, True)
        else:
            small = 0
    return SeriesOutcome(total, max_terms, False)
