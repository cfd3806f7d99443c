import json
import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from horopoints.diophantine_experiments import (
    everywhere_nonequidistribution_check,
    excursion_exponent_fit,
    exponent_check,
    horoball_criterion,
    predicted_excursions,
    r_n_eventually_monotone,
    verify,
)
from horopoints.errors import PreconditionError
from horopoints.hyperbolic import ExactPoint, orbit_height
from horopoints.measures import in_Ec
from horopoints.numth import CFReal, PsiSchedule, is_primitive_psi_approximable_upto, witnesses_bruteforce
from horopoints.sampling import DecaySchedule

F = Fraction


def _random_instance(rng):
    n = rng.randint(1, 60)
    m = rng.randint(-3 * n, 3 * n)
    while math.gcd(m, n) != 1:
        m += 1
    Y = F(rng.randint(2, 40), rng.randint(1, 2))
    Y = max(Y, F(1))
    bound = 1 / (2 * Y * n * n)
    x = F(m, n) + bound * F(rng.randint(-999, 999), 1000)
    return x, m, n, Y


@given(st.integers(0, 2**32))
def test_horoball_certificate_property(seed):
    x, m, n, Y = _random_instance(random.Random(seed))
    cert = horoball_criterion(x, m, n, Y)
    assert cert["all_ok"]
    for p in cert["points"]:
        assert F(p["Y_j"]) >= Y  # the window sits inside C_Y
        h = F(p["height"])
        assert F(p["Y_j"]) < h <= 2 * F(p["Y_j"])
        # independent reduction of the same point
        assert orbit_height(ExactPoint(x + F(p["j"], n), F(cert["y"]))) == h


def test_horoball_examples():
    cert = horoball_criterion(F(1, 2) + F(1, 100), 1, 2, 2)
    assert cert["all_ok"] and len(cert["points"]) == 2
    cert = horoball_criterion(F(3, 7), 3, 7, 5)
    assert cert["all_ok"]
    # d = n: the point sits in the window (n^2 Y, 2 n^2 Y]
    top = [p for p in cert["points"] if p["d"] == 7]
    assert len(top) == 1 and F(top[0]["Y_j"]) == 49 * 5
    assert F(top[0]["height"]) == 2 * 49 * 5  # attained exactly at x = m/n


def test_horoball_irrational_translate():
    cert = horoball_criterion(CFReal.preset("golden"), 3, 5, 1)
    assert cert["all_ok"]
    assert all(isinstance(p["height"], list) for p in cert["points"])


@pytest.mark.parametrize("args", [
    (F(1, 2), 2, 4, 2),          # gcd(m, n) != 1
    (F(1, 2), 1, 2, F(1, 2)),    # Y < 1
    (F(1, 2) + F(1, 10), 1, 2, 2),  # hypothesis fails
])
def test_horoball_refusals(args):
    with pytest.raises(PreconditionError):
        horoball_criterion(*args)


def test_horoball_certificates_reverify():
    cert = json.loads(json.dumps(horoball_criterion(F(5, 11) + F(1, 10**4), 5, 11, 3)))
    assert verify(cert) == (True, [])
    bad = json.loads(json.dumps(cert))
    bad["points"][0]["Y_j"] = str(F(bad["points"][0]["Y_j"]) * 4)
    assert verify(bad)[0] is False
    bad = json.loads(json.dumps(cert))
    bad["Y"] = "1/2"
    assert verify(bad)[0] is False
    assert verify({"type": "nonsense"})[0] is False
    bundle = {"type": "bundle", "items": [cert, bad]}
    ok, problems = verify(bundle)
    assert not ok and all(p.startswith("item 1") for p in problems)


def test_liouville_excursions():
    x = CFReal.preset("liouville")
    recs = predicted_excursions(x, PsiSchedule("inv_n_log_n"), DecaySchedule("log_power", 1, beta=1), 5000)
    assert [r["n"] for r in recs] == [3, 5, 13, 44, 277, 4476]
    assert all(r["verified"] is True for r in recs)
    assert max(r["log_ratio"] for r in recs) >= 0.8


def test_r_n_growth_shape():
    # r_n grows like (log n)^min(beta, 2 - beta) along the schedule
    psi, sched = PsiSchedule("inv_n_log_n"), DecaySchedule("log_power", 1, beta=1)
    from horopoints.diophantine_experiments import r_n_float

    for n in (10, 100, 10**4, 10**6):
        assert r_n_float(psi, sched, n) == pytest.approx(0.5 * math.log(n), rel=1e-6)
    assert r_n_eventually_monotone(psi, sched, 2000)
    assert not r_n_eventually_monotone(PsiSchedule("power", 1), DecaySchedule("power", 1, 1), 200)


def test_rational_translate_witnesses_are_finite():
    # |p/q - m/n| < c/n^2 with m/n != p/q forces n < c q, so only n = q survives far out
    p, q, c = 3, 11, F(1, 2)
    wit = [n for n, _ in is_primitive_psi_approximable_upto(F(p, q), PsiSchedule("c_over_n", c=c), 400, n_min=2)]
    assert q in wit and all(n <= q for n in wit)
    assert wit == [n for n, _ in witnesses_bruteforce(F(p, q), lambda n: c / n, 400) if n >= 2]


def test_no_witnesses_gives_empty_list():
    recs = predicted_excursions(F(0), PsiSchedule("power", 3), DecaySchedule("power", 1, 3), 50, n_min=2)
    assert recs == []


def test_exponent_check():
    r = exponent_check(CFReal.preset("exponent2"), 2, 3, 10**4)
    assert r["all_verified"]
    assert abs(r["slope"] - r["predicted"]) <= 0.15
    with pytest.raises(PreconditionError):
        exponent_check(CFReal.preset("exponent2"), 2, 5, 100)


def test_exponent_fit_needs_two_points():
    with pytest.raises(PreconditionError):
        excursion_exponent_fit([{"n": 5, "min_height": F(3)}])


def _hurwitz_oracle(x, c, n0, N):
    # 60-digit scan of the two nearest numerators, independent of the CF machinery
    with mpmath.workdps(60):
        out = []
        for n in range(n0, N + 1):
            base = int(mpmath.floor(x * n))
            if any(math.gcd(m, n) == 1 and abs(x - mpmath.mpf(m) / n) < c / n**2 for m in (base, base + 1)):
                out.append(n)
        return out


@pytest.mark.parametrize("preset, c", [("golden", "inv_sqrt5"), ("golden", 1), ("sqrt2m1", F(9, 10))])
def test_everywhere_nonequidistribution(preset, c):
    cval = CFReal.preset(c) if isinstance(c, str) else c
    recs = everywhere_nonequidistribution_check(CFReal.preset(preset), cval, 1000)
    with mpmath.workdps(60):
        xs = {"golden": (mpmath.sqrt(5) - 1) / 2, "sqrt2m1": mpmath.sqrt(2) - 1}
        cs = 1 / mpmath.sqrt(5) if c == "inv_sqrt5" else mpmath.mpf(c.numerator if isinstance(c, F) else c) / (c.denominator if isinstance(c, F) else 1)
        expected = _hurwitz_oracle(xs[preset], cs, math.floor(2 * float(cs)) + 1, 1000)
    assert [r["n"] for r in recs] == expected
    assert all(r["verified"] and r["outside"] == 0 and r["inside"] == r["n"] for r in recs)


def test_boundary_constant_picks_alternate_fibonacci():
    # at c = 1/sqrt5 the strict inequality holds only on one side of the golden ratio
    recs = everywhere_nonequidistribution_check(CFReal.preset("golden"), CFReal.preset("inv_sqrt5"), 1000)
    assert [r["n"] for r in recs] == [1, 3, 8, 21, 55, 144, 377, 987]


def test_everywhere_check_reaches_rational_points_exactly():
    # a convergent itself gives an exact sample whose points all lie in E_c
    x, n, c = F(8, 13), 13, F(1)
    for j in range(n):
        assert in_Ec(ExactPoint(x + F(j, n), c / (n * n)), c) is True
