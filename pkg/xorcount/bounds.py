"""Certified bounds on |S| from repeated survival trials.

A trial samples h from the f-sparse family with m rows and asks the oracle
whether some element of S lands in h^-1(0). ``lower_bound`` turns the success
fraction into a Chernoff-certified lower bound, ``upper_bound`` fires when a
strict majority of cells come back empty, and ``sparse_count`` walks m upwards
until survival stops being the majority outcome.
"""
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from utils.error_recovery import trial_failures
from utils.logger import log_debug, log_info
from xorcount.comb import upper_bound_threshold
from xorcount.errors import InconclusiveError, ParameterError
from xorcount.gf2hash import HashParams, ParityHash, derive_seed, sample_hash
from xorcount.oracle import Answer, make_oracle
from xorcount.tables import hash_over_cells

DEFAULT_KAPPA = 1.0
DEFAULT_DELTA = 0.05
UPPER_TRIALS_FACTOR = 24
LEVEL_SEED_OFFSET = 1 << 32


@dataclass(frozen=True)
class TrialOutcome:
    index: int
    seed: int
    answer: Answer
    hash_digest: str
    solver_time_s: float = 0.0

    @property
    def survived(self):
        return self.answer == Answer.SAT

    def to_dict(self, include_timing=True):
        d = {'index': self.index, 'seed': self.seed, 'answer': self.answer.value, 'hash': self.hash_digest}
        if include_timing:
            d['solver_time_s'] = self.solver_time_s
        return d


@dataclass(frozen=True)
class SurvivalEstimate:
    n: int
    m: int
    f: float
    trials_T: int
    successes_Y: int
    seed: int
    outcomes: tuple = ()
    unknown: int = 0
    wall_time_s: float = 0.0

    def __post_init__(self):
        if not (0 <= self.successes_Y <= self.trials_T):
            raise ParameterError(f"need 0 <= Y <= T, got Y={self.successes_Y}, T={self.trials_T}")

    @property
    def p_est(self):
        return self.successes_Y / self.trials_T if self.trials_T else 0.0

    @property
    def empties(self):
        return self.trials_T - self.successes_Y - self.unknown

    def to_dict(self, include_timing=True):
        d = {'n': self.n, 'm': self.m, 'f': self.f, 'T': self.trials_T, 'Y': self.successes_Y,
             'unknown': self.unknown, 'p_est': self.p_est, 'seed': self.seed}
        if include_timing:
            d['wall_time_s'] = self.wall_time_s
        return d


def _outcomes_list(outcomes, include_timing):
    return [o.to_dict(include_timing) for o in sorted(outcomes, key=lambda o: o.index)]


class _CertificateMixin:
    def to_json(self, include_timing=True):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    @property
    def bound_ln(self):
        return None if self.bound_log2 is None else self.bound_log2 * math.log(2)


@dataclass(frozen=True)
class LowerBoundCertificate(_CertificateMixin):
    n: int
    m: int
    f: float
    T: int
    kappa: float
    c: float
    bound_log2: float
    confidence: float
    seed: int
    p_est: float
    successes: int
    c_data_chosen: bool = False
    outcomes: tuple = ()
    wall_time_s: float = 0.0
    m_range: tuple = None
    adjusted_confidence: float = None

    @property
    def issued(self):
        return self.bound_log2 is not None

    def to_dict(self, include_timing=True):
        params = {'kappa': self.kappa, 'c': self.c, 'c_data_chosen': self.c_data_chosen,
                  'p_est': self.p_est, 'successes': self.successes}
        if self.m_range is not None:
            params['m_range'] = list(self.m_range)
            params['adjusted_confidence'] = self.adjusted_confidence
        d = {'kind': 'lower', 'n': self.n, 'm': self.m, 'f': self.f, 'T': self.T, 'params': params,
             'bound_log2': self.bound_log2, 'bound_ln': self.bound_ln, 'confidence': self.confidence,
             'seed': self.seed, 'trial_outcomes': _outcomes_list(self.outcomes, include_timing)}
        if include_timing:
            d['wall_time_s'] = self.wall_time_s
        return d


@dataclass(frozen=True)
class UpperBoundCertificate(_CertificateMixin):
    n: int
    m: int
    f: float
    T: int
    delta: float
    verdict_log2: float
    event_fired: bool
    empties: int
    threshold: int
    seed: int
    outcomes: tuple = ()
    wall_time_s: float = 0.0

    @property
    def bound_log2(self):
        return self.verdict_log2

    @property
    def confidence(self):
        return 1.0 - self.delta

    def to_dict(self, include_timing=True):
        params = {'delta': self.delta, 'event_fired': self.event_fired, 'empties': self.empties,
                  'threshold': str(self.threshold)}
        d = {'kind': 'upper', 'n': self.n, 'm': self.m, 'f': self.f, 'T': self.T, 'params': params,
             'bound_log2': self.verdict_log2, 'bound_ln': self.bound_ln, 'confidence': self.confidence,
             'seed': self.seed, 'trial_outcomes': _outcomes_list(self.outcomes, include_timing)}
        if include_timing:
            d['wall_time_s'] = self.wall_time_s
        return d


@dataclass(frozen=True)
class SparseCountConfig:
    delta: float = DEFAULT_DELTA
    alpha: float = 0.04
    f: float = 0.5
    density_schedule: object = None
    max_i: int = None
    drop_log_n: bool = False

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not (0.0 <= self.f <= 0.5):
            raise ParameterError(f"density f must lie in [0, 1/2], got {self.f}")
        if self.max_i is not None and self.max_i < 0:
            raise ParameterError(f"max_i must be nonnegative, got {self.max_i}")

    def trials(self, n):
        """T = ceil(ln(1/delta) / alpha * ln n), or without the ln n factor."""
        scale = 1.0 if self.drop_log_n else math.log(max(n, 1))
        return max(1, math.ceil(math.log(1.0 / self.delta) / self.alpha * scale))

    def density(self, i):
        f = self.density_schedule(i) if self.density_schedule is not None else self.f
        if not (0.0 <= f <= 0.5):
            raise ParameterError(f"density schedule returned {f} at level {i}")
        return f

    def levels(self, n):
        return n if self.max_i is None else min(self.max_i, n)


@dataclass(frozen=True)
class SparseCountResult(_CertificateMixin):
    n: int
    estimate_log2: int
    level_reached: int
    exhausted: bool
    no_solution_witnessed: bool
    T: int
    delta: float
    alpha: float
    levels: tuple
    seed: int
    wall_time_s: float = 0.0

    @property
    def bound_log2(self):
        return self.estimate_log2

    @property
    def confidence(self):
        return 1.0 - self.delta

    def to_dict(self, include_timing=True):
        params = {'delta': self.delta, 'alpha': self.alpha, 'level_reached': self.level_reached,
                  'exhausted': self.exhausted, 'no_solution_witnessed': self.no_solution_witnessed,
                  'levels': [{'i': i, 'f': f, 'Y': y} for i, f, y in self.levels]}
        d = {'kind': 'count', 'n': self.n, 'm': self.level_reached, 'f': self.levels[-1][1] if self.levels else None,
             'T': self.T, 'params': params, 'bound_log2': self.estimate_log2, 'bound_ln': self.bound_ln,
             'confidence': self.confidence, 'seed': self.seed, 'trial_outcomes': []}
        if include_timing:
            d['wall_time_s'] = self.wall_time_s
        return d


def median_indicator(outcomes):
    """1 iff strictly more than half of the 0/1 outcomes are 1."""
    outcomes = [int(bool(o)) for o in outcomes]
    return int(2 * sum(outcomes) > len(outcomes))


def max_alpha(shatter_eps, c):
    """Largest alpha for which an eps-shattering hash still yields a 2^(c+1) approximation."""
    if shatter_eps <= 0:
        raise ParameterError(f"shattering margin must be positive, got {shatter_eps}")
    margin = min(shatter_eps, 0.5 - 2.0 ** (-c))
    if margin <= 0:
        raise ParameterError(f"c={c} leaves no shattering margin")
    return 2.0 * margin * margin * math.log(2)


def trials_for_confidence(delta_div, big_delta):
    """Chernoff trial count for per-level failure probability big_delta."""
    if delta_div <= 2:
        raise ParameterError(f"delta must exceed 2, got {delta_div}")
    if not (0.0 < big_delta < 1.0):
        raise ParameterError(f"Delta must lie in (0, 1), got {big_delta}")
    factor = (2 * delta_div ** 2 + 4 * delta_div) / (delta_div - 2) ** 2
    return math.ceil(factor * math.log(1.0 / big_delta))


def min_upper_trials(delta):
    return math.ceil(UPPER_TRIALS_FACTOR * math.log(1.0 / delta))


def _trial_hash(problem, m, f, seed):
    if m == 0:
        return ParityHash.identity(problem.n)
    if problem.table is not None:
        return hash_over_cells(problem, m, f, seed)
    return sample_hash(HashParams(problem.n, m, f, seed))


def run_trials(problem, m, f, T, seed, oracle=None, jobs=1, budget=None, failure_log=None):
    """T survival trials; trial k hashes with derive_seed(seed, k). Returned in index order."""
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    if not (0 <= m <= problem.n):
        raise ParameterError(f"need 0 <= m <= n, got m={m}, n={problem.n}")
    oracle = oracle or make_oracle(problem)
    failure_log = trial_failures if failure_log is None else failure_log

    def one(k):
        trial_seed = derive_seed(seed, k)
        h = _trial_hash(problem, m, f, trial_seed)
        verdict = oracle.has_survivor(h, budget)
        if verdict.answer == Answer.UNKNOWN:
            reason = 'timeout' if verdict.stats.get('timed_out') else verdict.stats.get('diagnostics', 'no answer')
            failure_log.log_error('unknown', reason, trial_index=k, seed=trial_seed)
        return TrialOutcome(k, trial_seed, verdict.answer, h.digest(), verdict.stats.get('solver_time_s', 0.0))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, range(T)))
    else:
        outcomes = [one(k) for k in range(T)]
    return tuple(outcomes)


def estimate_survival(problem, m, f, T, seed, oracle=None, jobs=1, budget=None, failure_log=None):
    """Y = number of trials with S(h) >= 1; refuses to finalize over unknown trials."""
    start = time.perf_counter()
    outcomes = run_trials(problem, m, f, T, seed, oracle, jobs, budget, failure_log)
    successes = sum(o.survived for o in outcomes)
    unknown = sum(o.answer == Answer.UNKNOWN for o in outcomes)
    estimate = SurvivalEstimate(problem.n, m, f, T, successes, seed, outcomes, unknown,
                                time.perf_counter() - start)
    if unknown:
        raise InconclusiveError(f"{unknown} of {T} trials returned unknown at m={m}", partial=estimate)
    log_debug(f"m={m} f={f}: Y={successes}/{T}", context=problem.name or None)
    return estimate


def lower_bound(est, kappa=DEFAULT_KAPPA, c=None):
    """B = 2^m c / (1 + kappa) when p_est >= c, with confidence 1 - exp(-kappa^2 c T / ((1+kappa)(2+kappa))).

    ``c=None`` uses the realized success fraction Y/T (1/T when Y = 0) and
    marks the certificate as data-chosen.
    """
    if kappa <= 0:
        raise ParameterError(f"kappa must be positive, got {kappa}")
    data_chosen = c is None
    if data_chosen:
        c = est.p_est if est.successes_Y else 1.0 / est.trials_T
    if not (0.0 < c <= 1.0):
        raise ParameterError(f"threshold c must lie in (0, 1], got {c}")
    confidence = -math.expm1(-kappa * kappa * c * est.trials_T / ((1 + kappa) * (2 + kappa)))
    issued = est.p_est >= c
    bound_log2 = est.m + math.log2(c) - math.log2(1 + kappa) if issued else None
    return LowerBoundCertificate(est.n, est.m, est.f, est.trials_T, kappa, c, bound_log2, confidence, est.seed,
                                 est.p_est, est.successes_Y, data_chosen, est.outcomes, est.wall_time_s)


def best_lower_bound(problem, f, m_range, T, kappa=DEFAULT_KAPPA, c=None, seed=0, oracle=None, jobs=1,
                     budget=None, bonferroni=False, failure_log=None):
    """Largest issued lower bound over m_range; all runs share the master seed."""
    m_range = list(m_range)
    if not m_range or min(m_range) < 1 or max(m_range) > problem.n:
        raise ParameterError(f"m_range must be a nonempty subset of [1, {problem.n}]")
    oracle = oracle or make_oracle(problem)
    certificates = [lower_bound(estimate_survival(problem, m, f, T, seed, oracle, jobs, budget, failure_log),
                                kappa, c)
                    for m in m_range]
    issued = [cert for cert in certificates if cert.issued]
    if issued:
        best = max(issued, key=lambda cert: cert.bound_log2)
    else:
        best = max(certificates, key=lambda cert: cert.p_est)
    adjusted = max(0.0, 1.0 - len(m_range) * (1.0 - best.confidence)) if bonferroni else best.confidence
    best = replace(best, m_range=tuple(m_range), adjusted_confidence=adjusted,
                   wall_time_s=sum(cert.wall_time_s for cert in certificates))
    if best.issued:
        log_info(f"lower bound 2^{best.bound_log2:.3f} at m={best.m} (confidence {adjusted:.4f})",
                 context=problem.name or None)
    else:
        log_info("every lower-bound certificate is vacuous", context=problem.name or None)
    return best


def upper_bound(problem, m, f, delta=DEFAULT_DELTA, seed=0, T=None, oracle=None, jobs=1, budget=None,
                failure_log=None):
    """|S| <= U(n, m, f) when a strict majority of T >= 24 ln(1/delta) cells are empty; else the 2^n sentinel."""
    if not (0.0 < delta < 1.0):
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    n = problem.n
    if not (1 <= m <= n):
        raise ParameterError(f"need 1 <= m <= n, got m={m}, n={n}")
    t_min = min_upper_trials(delta)
    if T is None:
        T = t_min
    elif T < t_min:
        raise ParameterError(f"T={T} is below the minimum {t_min} for delta={delta}")
    est = estimate_survival(problem, m, f, T, seed, oracle, jobs, budget, failure_log)
    certificate = upper_certificate(est, delta)
    log_info(f"upper bound 2^{certificate.verdict_log2:.3f} at m={m} ({est.empties}/{T} empty)",
             context=problem.name or None)
    return certificate


def upper_certificate(est, delta=DEFAULT_DELTA):
    """Upper-bound verdict from a finished survival estimate."""
    fired = bool(median_indicator(not o.survived for o in est.outcomes))
    threshold = upper_bound_threshold(est.n, est.m, est.f)
    verdict = min(math.log2(threshold), float(est.n)) if fired else float(est.n)
    return UpperBoundCertificate(est.n, est.m, est.f, est.trials_T, delta, verdict, fired, est.empties, threshold,
                                 est.seed, est.outcomes, est.wall_time_s)


def sparse_count(problem, config=None, seed=0, oracle=None, jobs=1, budget=None, failure_log=None):
    """Raise the number of constraints until at most half the cells survive; return log2 of the count.

    Level i uses i constraints at density f_i. Breaking at level i reports
    i - 1; breaking at level 0 means no solution was witnessed at all.
    """
    config = config or SparseCountConfig()
    n = problem.n
    T = config.trials(n)
    oracle = oracle or make_oracle(problem)
    start = time.perf_counter()
    levels = []
    for i in range(config.levels(n) + 1):
        f_i = config.density(i)
        level_seed = derive_seed(seed, LEVEL_SEED_OFFSET + i)
        est = estimate_survival(problem, i, f_i, T, level_seed, oracle, jobs, budget, failure_log)
        levels.append((i, f_i, est.successes_Y))
        if not median_indicator(o.survived for o in est.outcomes):
            result = SparseCountResult(n, i - 1 if i else None, i, False, i == 0, T, config.delta, config.alpha,
                                       tuple(levels), seed, time.perf_counter() - start)
            log_info(f"sparse count stopped at level {i}", context=problem.name or None)
            return result
    log_info(f"sparse count exhausted all {len(levels)} levels", context=problem.name or None)
    return SparseCountResult(n, n, len(levels) - 1, True, False, T, config.delta, config.alpha, tuple(levels),
                             seed, time.perf_counter() - start)


def pick_promising_m(problem, f, coarse_T=10, seed=0, oracle=None, jobs=1, budget=None, max_m=None,
                     failure_log=None):
    """Largest m whose coarse survival estimate is at least 1/2: doubling sweep, then the gap above it."""
    if coarse_T < 3:
        raise ParameterError(f"coarse_T must be at least 3, got {coarse_T}")
    top = problem.n if max_m is None else min(max_m, problem.n)
    oracle = oracle or make_oracle(problem)
    cache = {}

    def promising(m):
        if m not in cache:
            est = estimate_survival(problem, m, f, coarse_T, seed, oracle, jobs, budget, failure_log)
            cache[m] = 2 * est.successes_Y >= coarse_T
        return cache[m]

    best = None
    m = 1
    while m <= top:
        if promising(m):
            best = m
        m *= 2
    if best is None:
        log_debug("no promising m in the doubling sweep; falling back to 1", context=problem.name or None)
        return 1
    for m in range(best + 1, min(2 * best - 1, top) + 1):
        if promising(m):
            best = m
    log_debug(f"promising m = {best}", context=problem.name or None)
    return best
