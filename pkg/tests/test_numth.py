import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from horopoints.errors import PreconditionError
from horopoints.numth import (
    CFReal,
    PsiSchedule,
    RInterval,
    continued_fraction,
    definitely_less,
    divisors,
    euler_phi,
    from_partials,
    inv_mod,
    is_primitive_psi_approximable_upto,
    log_interval,
    moebius_mu,
    parse_real,
    power_interval,
    real_from_json,
    real_to_json,
    witnesses_bruteforce,
)


def test_euler_phi_values():
    assert euler_phi(1) == 1
    assert euler_phi(12) == 4
    assert sum(euler_phi(360 // d) for d in divisors(360)) == 360


def test_divisors_values():
    assert divisors(1) == [1]
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert math.prod(divisors(36)) ** 2 == 36 ** len(divisors(36))


def test_gauss_identity_up_to_10000():
    assert all(sum(euler_phi(d) for d in divisors(n)) == n for n in range(1, 10_001))


def test_moebius_sums_vanish():
    assert all(sum(moebius_mu(d) for d in divisors(n)) == (1 if n == 1 else 0) for n in range(1, 500))


def test_inv_mod():
    assert inv_mod(3, 7) == 5
    assert inv_mod(5, 1) == 0
    with pytest.raises(Exception):
        inv_mod(2, 4)


def test_continued_fraction_examples():
    cf = continued_fraction(Fraction(0))
    assert (cf.a0, cf.partials) == (0, ())
    cf = continued_fraction(Fraction(355, 113))
    assert (cf.a0, cf.partials) == (3, (7, 16))
    assert from_partials(cf.a0, cf.partials) == Fraction(355, 113)


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_continued_fraction_round_trip_and_canonical(p, q):
    x = Fraction(p, q)
    cf = continued_fraction(x)
    assert from_partials(cf.a0, cf.partials) == x
    if cf.partials:
        assert cf.partials[-1] >= 2
    qs = [c.denominator for c in cf.convergents]
    assert all(a < b for a, b in zip(qs[1:], qs[2:]))


@given(st.integers(0, 10**6), st.integers(2, 10**6))
def test_convergents_alternate_and_approximate(p, q):
    x = Fraction(p, q)
    convs = continued_fraction(x).convergents
    for k, c in enumerate(convs[:-1]):
        assert math.gcd(c.numerator, c.denominator) == 1
        assert abs(x - c) < Fraction(1, c.denominator**2)
        # even-index convergents lie below x, odd ones above
        assert (c < x) if k % 2 == 0 else (c > x)


def test_witnesses_rational_half():
    w = is_primitive_psi_approximable_upto(Fraction(1, 2), PsiSchedule("c_over_n", c=Fraction(1, 4)), 10)
    assert (2, 1) in w
    assert all(n == 2 for n, _ in w)
    assert w == witnesses_bruteforce(Fraction(1, 2), lambda n: Fraction(1, 4 * n), 10)


def test_witnesses_golden_are_fibonacci_denominators():
    golden = CFReal.preset("golden")
    psi = PsiSchedule("c_over_n", c=Fraction(1, 2))
    got = is_primitive_psi_approximable_upto(golden, psi, 100, n_min=2)
    with mpmath.workdps(60):
        phi = (mpmath.sqrt(5) - 1) / 2
        expected = []
        for c in golden.convergents_upto(100):
            n, m = c.denominator, c.numerator
            if n >= 2 and abs(phi - mpmath.mpf(m) / n) < mpmath.mpf(1) / (2 * n * n):
                expected.append((n, m))
    assert got == expected
    fib = {1, 2, 3, 5, 8, 13, 21, 34, 55, 89}
    assert {n for n, _ in got} <= fib


def test_witnesses_zero():
    assert is_primitive_psi_approximable_upto(Fraction(0), PsiSchedule("c_over_n", c=Fraction(1, 3)), 50, n_min=3) == []


def test_witness_precondition():
    with pytest.raises(PreconditionError):
        is_primitive_psi_approximable_upto(Fraction(1, 3), PsiSchedule("c_over_n", c=Fraction(1, 2)), 10)


@pytest.mark.parametrize("c", [Fraction(1, 4), Fraction(2, 5), Fraction(1, 10)])
def test_witnesses_match_bruteforce(c):
    psi = PsiSchedule("c_over_n", c=c)
    for q in range(1, 51):
        for p in range(0, q + 1):
            if math.gcd(p, q) != 1:
                continue
            x = Fraction(p, q)
            assert is_primitive_psi_approximable_upto(x, psi, 50) == witnesses_bruteforce(x, lambda n: c / n, 50)


def test_witnesses_power_schedule_match_bruteforce():
    psi = PsiSchedule("power", Fraction(2))
    for x in (Fraction(3, 7), Fraction(13, 50), Fraction(1, 49)):
        got = is_primitive_psi_approximable_upto(x, psi, 50, n_min=2)
        ref = [w for w in witnesses_bruteforce(x, lambda n: Fraction(1, n * n), 50) if w[0] >= 2]
        assert got == ref


def test_interval_enclosures():
    lg = log_interval(10)
    with mpmath.workdps(80):
        ref = Fraction(mpmath.nstr(mpmath.log(10), 75))
    assert lg.lo - Fraction(1, 10**70) <= ref <= lg.hi + Fraction(1, 10**70)
    assert lg.width < Fraction(1, 2**150)
    pw = power_interval(7, Fraction(-3, 2))
    assert pw.lo <= Fraction(7**-1.5) * (1 + Fraction(1, 10**12)) and pw.hi >= Fraction(7**-1.5) * (1 - Fraction(1, 10**12))
    assert definitely_less(RInterval(Fraction(1), Fraction(2)), Fraction(3)) is True
    assert definitely_less(RInterval(Fraction(1), Fraction(4)), Fraction(3)) is None
    assert definitely_less(Fraction(3), RInterval(Fraction(1), Fraction(2))) is False


@given(st.fractions(min_value=-100, max_value=100), st.fractions(min_value=-100, max_value=100),
       st.fractions(min_value=0, max_value=5), st.fractions(min_value=0, max_value=5))
def test_interval_product_contains_products(a, b, wa, wb):
    A, B = RInterval(a, a + wa), RInterval(b, b + wb)
    P = A * B
    for u in (A.lo, A.hi, A.mid):
        for v in (B.lo, B.hi, B.mid):
            assert P.lo <= u * v <= P.hi


def test_cf_real_enclosure_and_serialisation():
    x = CFReal.preset("sqrt2m1")
    e = x.enclosure(Fraction(1, 10**30))
    assert e.width <= Fraction(1, 10**30)
    with mpmath.workdps(50):
        v = mpmath.sqrt(2) - 1
        assert e.lo <= Fraction(str(mpmath.nstr(v, 45))) + Fraction(1, 10**40)
        assert e.hi >= Fraction(str(mpmath.nstr(v, 45))) - Fraction(1, 10**40)
    assert str(real_from_json(real_to_json(x))) == str(x)
    assert parse_real("3/7") == Fraction(3, 7)
    assert str(parse_real("cf:golden")) == "cf:golden"


def test_growth_rule_exponent():
    x = CFReal.preset("exponent2")
    convs = list(x.convergents_upto(10**6))
    # a_{k+1} = q_k for kappa = 2, so |x - p/q| ~ q^-3
    for c in convs[3:-1]:
        q = c.denominator
        err = abs(x.enclosure(Fraction(1, 10**40)).mid - c)
        assert Fraction(1, 4 * q**3) < err < Fraction(1, q**3)
