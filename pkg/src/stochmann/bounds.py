"""Error envelopes, exponential tail bounds, and confidence sizing for the
stochastic Mann iteration.

Everything here is parameterized by

    N     bound on the initial distance ||x_1 - x*||
    a     step gain, a_n = a/n and b_n = a/n^2
    c     contraction constant of the map
    sigma, L, mean_norm_bound   Cramér certificate of the noise
    rho   exponent split parameter, 0 < rho < 2 a (1-c)

Two different decay exponents appear in the analysis and are easy to
confuse, so both are first-class here and never substituted for each
other:

    tail_exponent = 2 a (1-c) - rho   drives the per-n tail probability
    rate_exponent =   a (1-c) - rho   drives the almost-sure rate envelope
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "BoundParams",
    "BoundReport",
    "SeriesEstimate",
    "tail_exponent",
    "rate_exponent",
    "product_bound",
    "deterministic_envelope",
    "envelope_sequence",
    "series_S1",
    "series_S1_detail",
    "series_S2",
    "series_S2_detail",
    "constants_K",
    "log_K1",
    "tail_bound",
    "min_iterations_for_confidence",
    "rate_envelope",
    "canonical_eps0",
]


@dataclass(frozen=True)
class BoundParams:
    N: float
    a: float
    c: float
    sigma: float
    L: float
    mean_norm_bound: float
    rho: float

    def __post_init__(self):
        if not (np.isfinite(self.N) and self.N >= 0.0):
            raise ValidationError("bounds.N: must be a finite real >= 0")
        if not (np.isfinite(self.a) and 0.0 < self.a < 1.0):
            raise ValidationError("bounds.a: must satisfy 0 < a < 1")
        if not (np.isfinite(self.c) and 0.0 <= self.c < 1.0):
            raise ValidationError("bounds.c: must satisfy 0 <= c < 1")
        if not (np.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ValidationError("bounds.sigma: must be >= 0")
        if not (np.isfinite(self.L) and self.L > 0.0):
            raise ValidationError("bounds.L: must be > 0")
        if not (np.isfinite(self.mean_norm_bound) and self.mean_norm_bound >= 0.0):
            raise ValidationError("bounds.mean_norm_bound: must be >= 0")
        if not (np.isfinite(self.rho) and 0.0 < self.rho < 2.0 * self.a * (1.0 - self.c)):
            raise ValidationError("bounds.rho: must satisfy 0 < rho < 2a(1-c)")

    @property
    def kappa(self):
        """The damping rate a(1-c) of the deterministic envelope."""
        return self.a * (1.0 - self.c)


def tail_exponent(params):
    """Exponent of n inside the tail bound: 2a(1-c) - rho (> 0)."""
    return 2.0 * params.a * (1.0 - params.c) - params.rho


def rate_exponent(params):
    """Exponent of n inside the a.s. rate envelope: a(1-c) - rho.

    May be <= 0 for rho in the upper half of its admissible range; the
    envelope itself requires it positive and checks.
    """
    return params.a * (1.0 - params.c) - params.rho


def product_bound(i, n, a, c):
    """Both sides of the damping-product estimate

        prod_{j=i+1}^{n} (1 - a(1-c)/j)  <=  ((i+1)/(n+1))^(a(1-c)).

    Returns (lhs, rhs) evaluated exactly as written, for 1 <= i <= n.
    """
    if not (isinstance(i, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise ValidationError("product_bound: i and n must be integers")
    if not (1 <= i <= n):
        raise ValidationError("product_bound: need 1 <= i <= n")
    if not (0.0 < a < 1.0 and 0.0 <= c < 1.0):
        raise ValidationError("product_bound: need 0 < a < 1 and 0 <= c < 1")
    kappa = a * (1.0 - c)
    j = np.arange(i + 1, n + 1, dtype=np.float64)
    lhs = float(np.prod(1.0 - kappa / j)) if j.size else 1.0
    rhs = float(((i + 1.0) / (n + 1.0)) ** kappa)
    assert lhs <= rhs * (1.0 + 1e-12)
    return lhs, rhs


def _checked_norms(noise_norms, n):
    norms = np.asarray(noise_norms, dtype=np.float64)
    if norms.ndim != 1 or norms.shape[0] < n:
        raise ValidationError(f"noise_norms: need at least {n} entries")
    head = norms[:n]
    if not np.all(np.isfinite(head)) or np.any(head < 0.0):
        raise ValidationError("noise_norms: entries must be finite and >= 0")
    return head


def deterministic_envelope(n, params, noise_norms):
    """Pathwise envelope on ||x_{n+1} - x*|| given realized noise norms:

        N prod_{i=1}^{n}(1 - a(1-c)/i)
          + sum_{i=1}^{n} (a/i^2) prod_{j=i+1}^{n}(1 - a(1-c)/j) ||xi_i||.

    noise_norms[i-1] is ||xi_i||; only the first n entries are read.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError("n: must be an integer >= 1")
    norms = _checked_norms(noise_norms, n)
    i = np.arange(1, n + 1, dtype=np.float64)
    prefix = np.cumprod(1.0 - params.kappa / i)  # prefix[k-1] = prod_{j<=k}
    weights = (params.a / (i * i)) * (prefix[-1] / prefix)
    return float(params.N * prefix[-1] + np.dot(weights, norms))


def envelope_sequence(params, noise_norms):
    """deterministic_envelope for every n = 1..len(noise_norms) at once,
    via the defining recurrence

        E_0 = N,   E_n = (1 - a(1-c)/n) E_{n-1} + (a/n^2) ||xi_n||.

    noise_norms may carry leading batch axes (..., horizon); the result
    matches, with entry n-1 bounding ||x_{n+1} - x*||.
    """
    norms = np.asarray(noise_norms, dtype=np.float64)
    horizon = norms.shape[-1]
    out = np.empty_like(norms)
    e = np.broadcast_to(np.float64(params.N), norms.shape[:-1]).copy()
    for n in range(1, horizon + 1):
        e = (1.0 - params.kappa / n) * e + (params.a / (n * n)) * norms[..., n - 1]
        out[..., n - 1] = e
    return out


@dataclass(frozen=True)
class SeriesEstimate:
    """A series value accurate to +-half_width, summed through index terms."""

    value: float
    terms: int
    half_width: float


def _power_term(p, q, x):
    """(x+1)^p / x^q for scalar or array x."""
    return (x + 1.0) ** p / x ** q


def _tail_integral(p, q, t):
    """integral_t^inf (x+1)^p x^(-q) dx, exact to float precision.

    Expand (x+1)^p = x^p (1 + 1/x)^p binomially; each term integrates in
    closed form and the series converges geometrically at rate 1/t.
    Requires q - p > 1 (integrability) and t >= 2.
    """
    total = 0.0
    coef = 1.0  # C(p, k), k = 0
    for k in range(0, 400):
        term = coef * t ** (p - q - k + 1.0) / (q - p + k - 1.0)
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
        coef *= (p - k) / (k + 1.0)
        if coef == 0.0:
            break
    return total


def _series_power_sum(p, q, tol):
    """sum_{i>=1} (i+1)^p / i^q with certified absolute error <= tol.

    The summand is positive, decreasing and convex, so the tail past M is
    sandwiched between the trapezoid and midpoint integral estimates:

        I(M+1) + f(M+1)/2  <=  tail  <=  I(M+1/2),    I(t) = int_t^inf f.

    We take M large enough that the sandwich half-width is below tol/2,
    sum the head directly, and add the sandwich midpoint.
    """
    if not (q - p > 1.0):
        raise ValidationError("series: divergent parameter combination (q - p <= 1)")
    if tol <= 0.0:
        raise ValidationError("tol: must be positive")
    M = 512
    while True:
        ub = _tail_integral(p, q, M + 0.5)
        lb = _tail_integral(p, q, M + 1.0) + 0.5 * _power_term(p, q, M + 1.0)
        half_width = 0.5 * (ub - lb)
        if half_width <= 0.5 * tol:
            break
        if M > 2 ** 34:
            raise ValidationError(f"series: tol {tol:g} unattainable")
        M *= 4
    partial = 0.0
    chunk = 4 * 10 ** 6
    for start in range(1, M + 1, chunk):
        i = np.arange(start, min(start + chunk, M + 1), dtype=np.float64)
        partial += float(np.sum(_power_term(p, q, i)))
    return SeriesEstimate(value=partial + 0.5 * (ub + lb), terms=M,
                          half_width=float(half_width))


def series_S1_detail(a, c, tol=1e-10):
    """S1 = sum_{i>=1} (i+1)^(a(1-c)) / i^2 with error <= tol; needs
    a(1-c) < 1 for convergence."""
    if not (0.0 < a and 0.0 <= c < 1.0):
        raise ValidationError("series_S1: need a > 0 and 0 <= c < 1")
    p = a * (1.0 - c)
    if p >= 1.0:
        raise ValidationError("series_S1: divergent parameter combination (a(1-c) >= 1)")
    return _series_power_sum(p, 2.0, tol)


def series_S1(a, c, tol=1e-10):
    return series_S1_detail(a, c, tol).value


def series_S2_detail(a, c, sigma, tol=1e-10):
    """S2 = 4 a^2 sigma^2 sum_{i>=1} (i+1)^(2a(1-c)) / i^4, error <= tol."""
    if not (0.0 < a < 1.0 and 0.0 <= c < 1.0):
        raise ValidationError("series_S2: need 0 < a < 1 and 0 <= c < 1")
    if not (np.isfinite(sigma) and sigma >= 0.0):
        raise ValidationError("series_S2: sigma must be >= 0")
    if sigma == 0.0:
        return SeriesEstimate(value=0.0, terms=0, half_width=0.0)
    scale = 4.0 * a * a * sigma * sigma
    inner = _series_power_sum(2.0 * a * (1.0 - c), 4.0, tol / scale)
    return SeriesEstimate(value=scale * inner.value, terms=inner.terms,
                          half_width=scale * inner.half_width)


def series_S2(a, c, sigma, tol=1e-10):
    return series_S2_detail(a, c, sigma, tol).value


def log_K1(params, s1):
    """ln K1 = 2 (N^2 + (a S1 mean_norm_bound)^2); K1 itself can overflow,
    the log never does at sane parameters."""
    drift = params.a * s1 * params.mean_norm_bound
    return 2.0 * (params.N ** 2 + drift ** 2)


def constants_K(params, s1, s2):
    """(K1, K2) from precomputed series values.

    K1 = exp(2(N^2 + (a S1 mean_norm_bound)^2)), reported as inf when it
    overflows (callers needing the log use log_K1).  K2 = min(1, 1/(16 S2)),
    with the noiseless S2 = 0 case pinned to K2 = 1.
    """
    if s2 < 0.0:
        raise ValidationError("constants_K: S2 must be >= 0")
    lk1 = log_K1(params, s1)
    k1 = math.exp(lk1) if lk1 <= 709.0 else math.inf
    k2 = 1.0 if s2 == 0.0 else min(1.0, 1.0 / (16.0 * s2))
    return k1, k2


@dataclass(frozen=True)
class BoundReport:
    """Everything the tail bound evaluation produced.

    raw_bound is K1 exp(-K2 n^gamma eps^2) with gamma the tail exponent; it
    is often astronomically above 1 at desk scales, so clipped_bound =
    min(1, raw_bound) is the quantity to quote.  log_raw_bound is exact
    even when raw_bound overflows to inf.
    """

    n: int
    eps: float
    S1: float
    S2: float
    K1: float
    K2: float
    log_K1: float
    tail_exponent: float
    rate_exponent: float
    raw_bound: float
    log_raw_bound: float
    clipped_bound: float


def tail_bound(n, eps, params, series_tol=1e-10, s1=None, s2=None):
    """Certified bound on P{ ||x_{n+1} - x*|| > eps }.

    Series values are recomputed at series_tol unless passed in; the
    evaluation itself happens in the log domain so huge K1 cannot poison
    the clipped result.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError("n: must be an integer >= 1")
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValidationError("eps: must be a positive real")
    if s1 is None:
        s1 = series_S1(params.a, params.c, series_tol)
    if s2 is None:
        s2 = series_S2(params.a, params.c, params.sigma, series_tol)
    k1, k2 = constants_K(params, s1, s2)
    lk1 = log_K1(params, s1)
    gamma = tail_exponent(params)
    log_raw = lk1 - k2 * math.exp(gamma * math.log(n)) * eps * eps
    raw = math.exp(log_raw) if log_raw <= 709.0 else math.inf
    return BoundReport(n=int(n), eps=float(eps), S1=s1, S2=s2, K1=k1, K2=k2,
                       log_K1=lk1, tail_exponent=gamma,
                       rate_exponent=rate_exponent(params),
                       raw_bound=raw, log_raw_bound=log_raw,
                       clipped_bound=min(1.0, raw))


def min_iterations_for_confidence(eps, alpha, params, n_cap=10 ** 12,
                                  series_tol=1e-10):
    """Smallest n with clipped tail bound <= alpha, or None if no n under
    n_cap qualifies.

    The raw bound is strictly decreasing in n (K2 > 0, tail exponent > 0),
    so exponential growth followed by bisection finds the exact threshold
    with O(log n_cap) bound evaluations, all in the log domain.
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError("alpha: must lie in (0, 1)")
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValidationError("eps: must be a positive real")
    if not (isinstance(n_cap, (int, np.integer)) and n_cap >= 1):
        raise ValidationError("n_cap: must be an integer >= 1")
    s1 = series_S1(params.a, params.c, series_tol)
    s2 = series_S2(params.a, params.c, params.sigma, series_tol)
    _, k2 = constants_K(params, s1, s2)
    lk1 = log_K1(params, s1)
    gamma = tail_exponent(params)
    log_alpha = math.log(alpha)

    def ok(n):
        return lk1 - k2 * math.exp(gamma * math.log(n)) * eps * eps <= log_alpha

    if ok(1):
        return 1
    if not ok(n_cap):
        return None
    lo = 1  # invariant: not ok(lo), ok(hi)
    hi = 2
    while not ok(min(hi, n_cap)):
        lo, hi = hi, hi * 2
    hi = min(hi, n_cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def rate_envelope(n, eps0, params):
    """The convergence-rate envelope eps0 * sqrt(ln n / n^(a(1-c)-rho)).

    Defined for n >= 2 and requires rho < a(1-c) (positive rate exponent);
    this is the *rate* exponent, deliberately distinct from the tail one.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise ValidationError("n: rate envelope needs an integer n >= 2")
    if not (np.isfinite(eps0) and eps0 >= 0.0):
        raise ValidationError("eps0: must be >= 0")
    gamma_r = rate_exponent(params)
    if gamma_r <= 0.0:
        raise ValidationError(
            "bounds.rho: rate envelope needs rho < a(1-c); "
            f"got rate exponent {gamma_r:.6g}")
    return eps0 * math.sqrt(math.log(n) / math.exp(gamma_r * math.log(n)))


def canonical_eps0(params, d=1, series_tol=1e-10):
    """The scale sqrt((1+d)/K2) that turns the rate envelope into the
    almost-sure convergence certificate in dimension d."""
    if d < 1:
        raise ValidationError("d: must be >= 1")
    s1 = series_S1(params.a, params.c, series_tol)
    s2 = series_S2(params.a, params.c, params.sigma, series_tol)
    _, k2 = constants_K(params, s1, s2)
    return math.sqrt((1.0 + d) / k2)
