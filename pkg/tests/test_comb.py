import math
import random
from fractions import Fraction

import pytest

from xorcount.comb import (EpsilonInputs, LogNum, asymptotic_density, density_schedule_fstar, epsilon,
                           epsilon_profile, log_binomial, log_sum, min_density_fstar, sufficiency_threshold,
                           upper_bound_from_probability, upper_bound_threshold, variance_bound_v, w_star)
from xorcount.errors import DomainError, ParameterError

# (n, m, expected f*) for table-shaped instances, c = 2, delta = 9/4
FSTAR_CASES = [
    (204, 56, 0.18),
    (236, 58, 0.183),
    (125, 29, 0.257),
    (76, 15, 0.337),
    (64, 6, 0.4125),
    (400, 10, 0.423),
]


def exact_epsilon(n, m, q, f):
    """Collision sum evaluated term by term in rationals."""
    y = 1 - 2 * Fraction(f)
    budget = q - 1
    total = Fraction(0)
    w = 0
    used = 0
    while w < n and used + math.comb(n, w + 1) <= budget:
        w += 1
        used += math.comb(n, w)
        total += math.comb(n, w) * (Fraction(1, 2) + y ** w / 2) ** m
    total += (budget - used) * (Fraction(1, 2) + y ** (w + 1) / 2) ** m
    return total / budget


def test_lognum_round_trip():
    for x in [1e-300, 1e-20, 0.5, 1.0, 3.0, 1e20, 1e300]:
        assert LogNum.from_float(x).to_float() == pytest.approx(x, rel=1e-12)
    assert LogNum.from_float(0.0).is_zero


def test_lognum_addition_is_commutative():
    a, b, c = LogNum.from_float(1e-5), LogNum.from_float(3.0), LogNum.from_float(7e10)
    assert (a + b).log_value == pytest.approx((b + a).log_value, rel=1e-12)
    assert ((a + b) + c).log_value == pytest.approx((a + (b + c)).log_value, rel=1e-12)
    assert log_sum([a, b, c]).log_value == pytest.approx((a + b + c).log_value, rel=1e-12)


def test_lognum_subtraction_clamps():
    value, clamped = LogNum.from_float(1.0).sub(LogNum.from_float(2.0))
    assert value.is_zero and clamped
    value, clamped = LogNum.from_float(3.0).sub(LogNum.from_float(1.0))
    assert value.to_float() == pytest.approx(2.0) and not clamped


def test_lognum_rejects_negative():
    with pytest.raises(DomainError):
        LogNum.from_float(-1.0)


def test_log_binomial():
    assert log_binomial(17, 0).log_value == 0.0
    assert log_binomial(10, 2).log_value == pytest.approx(math.log(45))
    exact = sum(math.log(k) for k in range(289, 577)) - sum(math.log(k) for k in range(1, 289))
    assert log_binomial(576, 288).log_value == pytest.approx(exact, rel=1e-9)
    with pytest.raises(DomainError):
        log_binomial(5, 6)


def test_w_star():
    assert w_star(10, 11) == 1
    assert w_star(10, 2) == 0
    for n in [1, 5, 12, 40]:
        assert w_star(n, (1 << n) + 1) == n


def test_w_star_prefix_property():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randint(1, 60)
        q = rng.randint(2, 1 << n)
        w = w_star(n, q)
        prefix = sum(math.comb(n, j) for j in range(1, w + 1))
        assert prefix <= q - 1
        if w < n:
            assert prefix + math.comb(n, w + 1) > q - 1


def test_epsilon_closed_forms():
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(1, 400)
        m = rng.randint(1, n)
        q = rng.randint(2, 1 << n)
        half = epsilon(EpsilonInputs(n, m, q, 0.5)).log_value
        assert half == pytest.approx(-m * math.log(2), rel=1e-9)
        assert epsilon(EpsilonInputs(n, m, q, 0.0)).log_value == pytest.approx(0.0, abs=1e-9)


def test_epsilon_matches_rational_evaluation():
    value = epsilon(EpsilonInputs(20, 5, 64, 0.25)).to_float()
    assert value == pytest.approx(float(exact_epsilon(20, 5, 64, 0.25)), rel=1e-9)
    value = epsilon(EpsilonInputs(30, 7, 5000, 0.125)).to_float()
    assert value == pytest.approx(float(exact_epsilon(30, 7, 5000, 0.125)), rel=1e-9)


def test_epsilon_inputs_validation():
    with pytest.raises(ParameterError):
        EpsilonInputs(10, 11, 5, 0.1)
    with pytest.raises(ParameterError):
        EpsilonInputs(10, 3, 1, 0.1)
    with pytest.raises(ParameterError):
        EpsilonInputs(10, 3, (1 << 10) + 1, 0.1)
    with pytest.raises(ParameterError):
        EpsilonInputs(10, 3, 5, 0.6)


def test_epsilon_nonincreasing_in_f():
    rng = random.Random(5)
    grid = [k / 98 for k in range(50)]
    for _ in range(200):
        n = rng.randint(1, 40)
        m = rng.randint(1, n)
        q = rng.randint(2, 1 << n)
        values = [epsilon(EpsilonInputs(n, m, q, f)).log_value for f in grid]
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-12


def test_variance_bound():
    m = 4
    for q in [1, 2, 7, 100]:
        expected = q / 2 ** m * (1 - 2 ** -m)
        assert variance_bound_v(q, 12, m, 0.5).to_float() == pytest.approx(expected, rel=1e-12)
    assert variance_bound_v(1, 12, m, 0.1).to_float() == pytest.approx(2 ** -m * (1 - 2 ** -m), rel=1e-12)

    q = 100
    mu = Fraction(q, 2 ** m)
    exact = mu * (1 + exact_epsilon(12, m, q, 0.1) * (q - 1) - mu)
    assert variance_bound_v(q, 12, m, 0.1).to_float() == pytest.approx(float(exact), rel=1e-9)


def test_collision_ratio_increasing():
    rng = random.Random(17)
    for _ in range(50):
        n = rng.randint(14, 60)
        m = rng.randint(1, min(n, 20))
        f = rng.uniform(0.05, 0.5)
        profile = epsilon_profile(n, m, f)
        previous = -math.inf
        for z in range(1, 4097):
            current = 2 * math.log(z) - profile.log_variance(z)
            assert current > previous
            previous = current


@pytest.mark.parametrize("m", range(1, 17))
def test_upper_threshold_at_half(m):
    assert upper_bound_threshold(20, m, 0.5) == 3 * 2 ** m - 3


def test_upper_threshold_m4():
    assert upper_bound_threshold(10, 4, 0.5) == 45


def test_upper_threshold_matches_scan():
    n, m, f = 20, 6, 0.08

    def predicate(z):
        return 2 ** (2 * m) * variance_bound_v(z, n, m, f).to_float() / (z * z) <= 1 / 3

    expected = next(z for z in range(1, (1 << n) + 1) if predicate(z))
    assert upper_bound_threshold(n, m, f) == expected


def test_upper_threshold_predicate_monotone():
    rng = random.Random(23)
    for _ in range(20):
        n = rng.randint(8, 30)
        m = rng.randint(1, min(n, 12))
        f = rng.uniform(0.02, 0.5)
        profile = epsilon_profile(n, m, f)
        flags = [profile.meets_upper_threshold(z) for z in range(1, min(1 << n, 5000))]
        first = flags.index(True) if True in flags else len(flags)
        assert all(flags[first:])


def test_upper_threshold_sentinel():
    # f = 0 never separates anything: every z fails until the sentinel
    assert upper_bound_threshold(6, 3, 0.0) == 1 << 6


def test_upper_bound_from_probability_is_sound():
    from xorcount.gf2hash import ExplicitSet, exact_survival_probability

    for size in [1, 3, 6, 12]:
        s = ExplicitSet.random_subset(4, size, seed=size)
        for m in [1, 2, 3]:
            p = exact_survival_probability(s, m, 0.25).to_float()
            assert size <= upper_bound_from_probability(4, m, 0.25, p)


def test_sufficiency_threshold_short_form():
    for m in [1, 5, 20]:
        q = 1 << (m + 2)
        assert sufficiency_threshold(m, q, 9 / 4) == pytest.approx(31 / (5 * (2 ** (m + 2) - 1)), rel=1e-12)
    with pytest.raises(ParameterError):
        sufficiency_threshold(5, 128, 2.0)


@pytest.mark.parametrize("n, m, expected", FSTAR_CASES)
def test_fstar_table_shaped_instances(n, m, expected):
    certificate = min_density_fstar(n, m, 1 << (m + 2), 9 / 4)
    assert certificate.condition_met
    assert certificate.f_star == pytest.approx(expected, abs=0.02)


def test_fstar_minimality():
    n, m, delta = 64, 6, 9 / 4
    q = 1 << (m + 2)
    certificate = min_density_fstar(n, m, q, delta)
    threshold = sufficiency_threshold(m, q, delta)
    assert epsilon(EpsilonInputs(n, m, q, certificate.f_star)).to_float() <= threshold * (1 + 1e-9)
    assert epsilon(EpsilonInputs(n, m, q, certificate.f_star - 1e-4)).to_float() > threshold
    lo, hi = certificate.bracket
    assert hi - lo <= 1e-5


def test_fstar_huge_c_below_half():
    certificate = min_density_fstar(200, 10, 1 << 150, 9 / 4)
    assert certificate.f_star < 0.5


def test_fstar_unmet_condition():
    # mu = 1/4 puts the threshold below 2^-m, unreachable even at f = 1/2
    certificate = min_density_fstar(40, 10, 1 << 8, 9 / 4)
    assert not certificate.condition_met
    assert certificate.f_star == 0.5


def test_fstar_rejects_small_delta():
    with pytest.raises(ParameterError):
        min_density_fstar(40, 10, 1 << 12, 2.0)


def test_density_schedule():
    schedule = density_schedule_fstar(64)
    assert schedule(0) == 0.5
    assert schedule(6) == pytest.approx(min_density_fstar(64, 6, 1 << 8, 9 / 4).f_star)
    assert schedule(63) == 0.5


def test_asymptotic_density():
    assert asymptotic_density('lower', math.e, kappa=2) == pytest.approx(1 / (2 * math.e))
    assert asymptotic_density('linear', math.e, alpha=1.0) == pytest.approx(3.6 / math.e)
    m = 10 ** 4
    assert asymptotic_density('lower', m, kappa=1.1) < asymptotic_density('linear', m, alpha=0.5)
    with pytest.raises(ParameterError):
        asymptotic_density('linear', m, alpha=1.5)
    with pytest.raises(ParameterError):
        asymptotic_density('sublinear', m, beta=0.5, kappa=0.5)
    with pytest.raises(ParameterError):
        asymptotic_density('quadratic', m)
