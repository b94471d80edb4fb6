"""Closed-form combinatorics for sparse parity hashing.

Everything probability-shaped is carried as a ``LogNum`` (natural log with an
exact zero). Set sizes ``q``, binomial prefix sums and the upper-bound
threshold ``U`` stay Python integers, since C(576, 288) alone is far outside
binary64 range.

Writing ``y = 1 - 2f`` and ``g(w) = (1 + y**w)**m - 1``, the collision sum of
the epsilon definition splits as

    eps(n, m, q, f) = 2**-m * (1 + X(q) / (q - 1))
    X(q) = sum_{w <= w*} C(n, w) g(w) + r g(w* + 1)

and the variance bound becomes ``v(q) = q 2**-m ((1 - 2**-m) + 2**-m X(q))``.
Both forms avoid the subtraction ``1 + eps (q - 1) - q / 2**m`` so no rounding
can make the bracket negative.
"""
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from utils.logger import log_debug, log_warning
from xorcount.errors import DomainError, ParameterError

LN2 = math.log(2.0)
LN3 = math.log(3.0)
EXACT_BINOMIAL_MAX_N = 60
FSTAR_TOLERANCE = 1e-5


@dataclass(frozen=True, order=True)
class LogNum:
    """Nonnegative real stored as its natural log; ``-inf`` is exact zero."""

    log_value: float = -math.inf

    @classmethod
    def zero(cls):
        return cls(-math.inf)

    @classmethod
    def one(cls):
        return cls(0.0)

    @classmethod
    def from_float(cls, x):
        if math.isnan(x) or x < 0:
            raise DomainError(f"LogNum needs a nonnegative value, got {x}")
        return cls(math.log(x)) if x > 0 else cls.zero()

    @classmethod
    def from_int(cls, k):
        if k < 0:
            raise DomainError(f"LogNum needs a nonnegative value, got {k}")
        return cls(math.log(k)) if k > 0 else cls.zero()

    @classmethod
    def from_fraction(cls, value):
        if value < 0:
            raise DomainError(f"LogNum needs a nonnegative value, got {value}")
        if value == 0:
            return cls.zero()
        return cls(math.log(value.numerator) - math.log(value.denominator))

    @classmethod
    def from_log2(cls, value):
        return cls(value * LN2)

    @property
    def is_zero(self):
        return self.log_value == -math.inf

    @property
    def log2(self):
        return self.log_value / LN2

    def to_float(self):
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    def __add__(self, other):
        return LogNum(float(np.logaddexp(self.log_value, other.log_value)))

    def __mul__(self, other):
        if self.is_zero or other.is_zero:
            return LogNum.zero()
        return LogNum(self.log_value + other.log_value)

    def __truediv__(self, other):
        if other.is_zero:
            raise DomainError("division of a LogNum by zero")
        if self.is_zero:
            return LogNum.zero()
        return LogNum(self.log_value - other.log_value)

    def sub(self, other):
        """Return ``(self - other, clamped)``; negative differences clamp to zero."""
        if other.is_zero:
            return self, False
        if other.log_value >= self.log_value:
            return LogNum.zero(), other.log_value > self.log_value
        return LogNum(self.log_value + math.log1p(-math.exp(other.log_value - self.log_value))), False

    def __repr__(self):
        return f"LogNum(ln={self.log_value:.12g}, log2={self.log2:.12g})"


def log_sum(values):
    """Log-sum-exp over an iterable of LogNum."""
    logs = [v.log_value for v in values if not v.is_zero]
    if not logs:
        return LogNum.zero()
    return LogNum(float(logsumexp(logs)))


def log_binomial(n, w):
    """ln C(n, w): exact integers up to n = 60, log-gamma above."""
    if w < 0 or w > n:
        raise DomainError(f"binomial C({n}, {w}) is outside 0 <= w <= n")
    if n <= EXACT_BINOMIAL_MAX_N:
        return LogNum(math.log(math.comb(n, w)))
    return LogNum(float(gammaln(n + 1) - gammaln(w + 1) - gammaln(n - w + 1)))


def w_star(n, q):
    """Largest w with C(n,1) + ... + C(n,w) <= q - 1 (0 when even w = 1 fails)."""
    return _w_star_and_rest(n, q)[0]


def _w_star_and_rest(n, q):
    budget = q - 1
    total = 0
    binom = 1
    w = 0
    while w < n:
        binom = binom * (n - w) // (w + 1)
        if total + binom > budget:
            break
        total += binom
        w += 1
    return w, budget - total


@lru_cache(maxsize=32)
def _binomial_table(n):
    """Prefix sums P[w] = sum_{1<=j<=w} C(n, j) and ln C(n, w), for w = 0..n."""
    prefix = [0]
    logc = [0.0]
    binom = 1
    for w in range(n):
        binom = binom * (n - w) // (w + 1)
        prefix.append(prefix[-1] + binom)
        logc.append(math.log(binom))
    return tuple(prefix), np.asarray(logc)


def _log_expm1(z):
    """ln(e**z - 1) elementwise for z >= 0 (``-inf`` at z = 0)."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        small = np.log(np.expm1(np.minimum(z, LN2)))
        large = z + np.log1p(-np.exp(-np.maximum(z, LN2)))
    return np.where(z > LN2, large, small)


def _validate_nmf(n, m, f):
    if n < 1 or m < 1 or m > n:
        raise ParameterError(f"need 1 <= m <= n, got n={n}, m={m}")
    if not (0.0 <= f <= 0.5):
        raise ParameterError(f"density f must lie in [0, 1/2], got {f}")


class EpsilonProfile:
    """Cached log-domain pieces of eps/v for one (n, m, f)."""

    def __init__(self, n, m, f):
        _validate_nmf(n, m, f)
        self.n, self.m, self.f = n, m, f
        self._prefix, logc = _binomial_table(n)
        y = 1.0 - 2.0 * f
        w = np.arange(n + 2)
        self._log_g = _log_expm1(m * np.log1p(np.power(y, w)))
        terms = np.full(n + 1, -math.inf)
        with np.errstate(invalid='ignore'):
            terms[1:] = logc[1:] + self._log_g[1:n + 1]
        terms[~np.isfinite(terms)] = -math.inf
        self._log_partial = np.logaddexp.accumulate(terms)
        self._log_two_m_minus_one = math.log((1 << m) - 1)

    def log_excess(self, q):
        """ln X(q), ``-inf`` when X(q) = 0."""
        budget = q - 1
        if budget <= 0:
            return -math.inf
        ws = bisect_right(self._prefix, budget) - 1
        result = float(self._log_partial[ws])
        rest = budget - self._prefix[ws]
        if rest > 0:
            result = float(np.logaddexp(result, math.log(rest) + self._log_g[ws + 1]))
        return result

    def log_epsilon(self, q):
        return -self.m * LN2 + float(np.logaddexp(0.0, self.log_excess(q) - math.log(q - 1)))

    def log_variance(self, q):
        log_x = self.log_excess(q)
        bracket = np.logaddexp(math.log1p(-2.0 ** -self.m), -self.m * LN2 + log_x)
        return math.log(q) - self.m * LN2 + float(bracket)

    def meets_upper_threshold(self, z):
        """1 / (1 + 2**(2m) v(z) / z**2) >= 3/4, i.e. 3 (2**m - 1 + X(z)) <= z."""
        log_x = self.log_excess(z)
        if log_x == -math.inf:
            return 3 * ((1 << self.m) - 1) <= z
        return LN3 + float(np.logaddexp(self._log_two_m_minus_one, log_x)) <= math.log(z)

    def log_collision_ratio(self, z):
        """ln(2**(2m) v(z) / z**2)."""
        log_x = self.log_excess(z)
        return float(np.logaddexp(self._log_two_m_minus_one, log_x)) - math.log(z)


@lru_cache(maxsize=256)
def epsilon_profile(n, m, f):
    return EpsilonProfile(n, m, f)


@dataclass(frozen=True)
class EpsilonInputs:
    n: int
    m: int
    q: int
    f: float

    def __post_init__(self):
        _validate_nmf(self.n, self.m, self.f)
        if self.q < 2 or self.q > (1 << self.n):
            raise ParameterError(f"q must satisfy 2 <= q <= 2^n, got q={self.q}, n={self.n}")


def epsilon(inputs):
    """eps(n, m, q, f) as a LogNum."""
    profile = epsilon_profile(inputs.n, inputs.m, inputs.f)
    return LogNum(profile.log_epsilon(inputs.q))


def variance_bound_v(q, n, m, f):
    """Variance bound v(q) = (q/2^m)(1 + eps(q-1) - q/2^m) as a LogNum."""
    _validate_nmf(n, m, f)
    if q < 1 or q > (1 << n):
        raise ParameterError(f"q must satisfy 1 <= q <= 2^n, got q={q}")
    return LogNum(epsilon_profile(n, m, f).log_variance(q))


def upper_bound_threshold(n, m, f):
    """U(n, m, f): the smallest z whose collision ratio certifies |S| <= z.

    The predicate is monotone in z because z^2 / v(z) increases, so an
    exponential search followed by bisection finds the minimum. Returns the
    sentinel 2**n when no z <= 2**n qualifies.
    """
    profile = epsilon_profile(n, m, f)
    return _monotone_minimum(profile.meets_upper_threshold, 1 << n)


def upper_bound_from_probability(n, m, f, p):
    """min{z | 1 / (1 + 2^(2m) v(z) / z^2) > p} for a known Pr[S(h) >= 1] = p."""
    p = float(p)
    if p <= 0.0:
        return 1
    limit = 1 << n
    if p >= 1.0:
        return limit
    profile = epsilon_profile(n, m, f)
    log_target = math.log1p(-p) - math.log(p)
    return _monotone_minimum(lambda z: profile.log_collision_ratio(z) < log_target, limit)


def _monotone_minimum(predicate, limit):
    hi = 1
    while not predicate(hi):
        if hi >= limit:
            return limit
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _log_sufficiency_threshold(m, q, delta):
    log_mu = math.log(q) - m * LN2
    scaled = LogNum(log_mu + math.log(delta / (delta - 1.0)))
    numerator, clamped = scaled.sub(LogNum.one())
    if clamped or numerator.is_zero:
        return None
    return numerator.log_value - math.log(q - 1)


def sufficiency_threshold(m, q, delta):
    """(mu/(delta-1) + mu - 1) / (q - 1) with mu = q / 2^m (may be <= 0)."""
    if delta <= 2:
        raise ParameterError(f"delta must exceed 2, got {delta}")
    log_thr = _log_sufficiency_threshold(m, q, delta)
    if log_thr is not None:
        return math.exp(log_thr)
    mu = math.exp(math.log(q) - m * LN2)
    return (mu / (delta - 1.0) + mu - 1.0) / (q - 1)


@dataclass(frozen=True)
class DensityCertificate:
    f_star: float
    n: int
    m: int
    q: int
    c: float
    delta: float
    condition_value: LogNum
    threshold: LogNum
    tolerance: float
    bracket: tuple
    condition_met: bool

    def to_dict(self, include_timing=True):
        return {
            'kind': 'density',
            'f_star': self.f_star,
            'n': self.n,
            'm': self.m,
            'q': str(self.q),
            'c': self.c,
            'delta': self.delta,
            'condition_ln': self.condition_value.log_value,
            'threshold_ln': self.threshold.log_value,
            'tolerance': self.tolerance,
            'bracket': list(self.bracket),
            'condition_met': self.condition_met,
        }


def min_density_fstar(n, m, q, delta, tolerance=FSTAR_TOLERANCE):
    """Smallest f with eps(n, m, q, f) <= (mu/(delta-1) + mu - 1)/(q - 1).

    eps is nonincreasing in f, so bisection over [0, 1/2] brackets the minimum;
    both endpoints are kept on the certificate. When even f = 1/2 misses the
    threshold the certificate carries f = 1/2 and ``condition_met=False``.
    """
    if delta <= 2:
        raise ParameterError(f"delta must exceed 2, got {delta}")
    EpsilonInputs(n, m, q, 0.5)
    log_mu = math.log(q) - m * LN2
    if log_mu < 0:
        log_warning(f"mu = q/2^m = {math.exp(log_mu):.4g} is below 1; f* guarantee is weak",
                    context=f"n={n}, m={m}, q={q}")
    c = math.log2(q) - m
    log_thr = _log_sufficiency_threshold(m, q, delta)
    threshold = LogNum(log_thr) if log_thr is not None else LogNum.zero()

    def log_eps(f):
        return epsilon_profile(n, m, f).log_epsilon(q)

    def meets(f):
        return log_thr is not None and log_eps(f) <= log_thr

    if not meets(0.5):
        return DensityCertificate(0.5, n, m, q, c, delta, LogNum(log_eps(0.5)), threshold,
                                  tolerance, (0.5, 0.5), False)
    if meets(0.0):
        return DensityCertificate(0.0, n, m, q, c, delta, LogNum(0.0), threshold,
                                  tolerance, (0.0, 0.0), True)
    lo, hi = 0.0, 0.5
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if meets(mid):
            hi = mid
        else:
            lo = mid
    log_debug(f"f* bracket [{lo:.6f}, {hi:.6f}]", context=f"n={n}, m={m}, c={c:.3g}")
    return DensityCertificate(hi, n, m, q, c, delta, LogNum(log_eps(hi)), threshold,
                              tolerance, (lo, hi), True)


def density_schedule_fstar(n, c=2, delta=9 / 4):
    """Per-level densities i -> f*(n, i, 2^(i+c), delta); 1/2 where undefined."""
    cache = {}

    def schedule(i):
        if i not in cache:
            if i < 1 or i + c > n:
                cache[i] = 0.5
            else:
                cache[i] = min_density_fstar(n, i, 1 << (i + c), delta).f_star
        return cache[i]

    return schedule


def asymptotic_density(regime, m, alpha=None, beta=None, kappa=None):
    """Closed-form density bounds of the three set-size regimes (natural log).

    lower:      log(m) / (kappa m)
    linear:     (3.6 - 1.25 log2(alpha)) log(m) / m
    sublinear:  kappa (1 - beta) / (2 beta) log(m)^2 / m
    """
    if m <= 0:
        raise ParameterError(f"m must be positive, got {m}")
    if regime == 'lower':
        if kappa is None or kappa <= 1:
            raise ParameterError(f"lower regime needs kappa > 1, got {kappa}")
        return math.log(m) / (kappa * m)
    if regime == 'linear':
        if alpha is None or not (0 < alpha <= 1):
            raise ParameterError(f"linear regime needs alpha in (0, 1], got {alpha}")
        return (3.6 - 1.25 * math.log2(alpha)) * math.log(m) / m
    if regime == 'sublinear':
        if beta is None or not (0 < beta < 1):
            raise ParameterError(f"sublinear regime needs beta in (0, 1), got {beta}")
        if kappa is None or kappa <= 1:
            raise ParameterError(f"sublinear regime needs kappa > 1, got {kappa}")
        return kappa * (1 - beta) / (2 * beta) * math.log(m) ** 2 / m
    raise ParameterError(f"unknown regime {regime!r}")
