import math
import random
from fractions import Fraction

import numpy as np
import pytest

from horopoints.errors import PreconditionError, QuadratureError
from horopoints.hyperbolic import ExactPoint, IntMatrix2, hyperbolic_distance, mobius, reduce
from horopoints.measures import (
    TestFunction,
    area_mean,
    ec_area_bound,
    evaluate,
    horocycle_mean,
    in_Ec,
    in_Ec_arrays,
    mc_mean,
    nu_mean,
    nu_weights,
    sample_fundamental_domain,
)

F = Fraction
BAND = TestFunction.parse("band:1.2:2")


def test_evaluate_band_convention():
    assert evaluate(BAND, ExactPoint(0, F(3, 2))) == 1
    assert evaluate(BAND, ExactPoint(0, F(1, 2))) == 1  # reduces to 2i, band is (Y, Y']
    assert evaluate(BAND, ExactPoint(0, F(6, 5))) == 0


def test_evaluate_disk_against_distance():
    disk = TestFunction.parse("disk:0:2:0.5")
    z = ExactPoint(F(1, 3), F(1, 100))
    w = reduce(z).point
    centre = ExactPoint(0, 2)
    # distance on the surface: minimise over a generous set of translates
    best = min(
        float(hyperbolic_distance(mobius(IntMatrix2(a, b, c, d), w), centre))
        for a in range(-4, 5) for b in range(-4, 5) for c in range(-4, 5) for d in range(-4, 5)
        if a * d - b * c == 1
    )
    assert evaluate(disk, z) == (1 if best <= 0.5 else 0) == 0
    assert evaluate(disk, ExactPoint(F(1, 10), F(21, 10))) == 1


def test_gamma_invariance_of_evaluation():
    rng = random.Random(11)
    fs = [BAND, TestFunction.parse("cusp:1"), TestFunction.parse("disk:0:2:0.5"), TestFunction.parse("smooth:1.2:2:0.2")]
    for _ in range(500):
        z = ExactPoint(F(rng.randint(-300, 300), rng.randint(1, 300)), F(rng.randint(1, 300), rng.randint(1, 300)))
        c, d = rng.randint(-30, 30), rng.randint(-30, 30)
        if math.gcd(c, d) != 1:
            continue
        _, s, t = _egcd(d, c)
        g = IntMatrix2(s, -t, c, d)
        gz = mobius(g, z)
        for f in fs:
            assert evaluate(f, gz) == evaluate(f, z)


def _egcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1, y0, y1 = x1, x0 - q * x1, y1, y0 - q * y1
    return (a, x0, y0) if a > 0 else (-a, -x0, -y0)


def test_area_closed_forms():
    assert float(area_mean(TestFunction.parse("cusp:1"))) == pytest.approx(3 / math.pi, abs=1e-12)
    assert float(area_mean(BAND)) == pytest.approx(1 / math.pi, abs=1e-12)
    assert float(area_mean(TestFunction.parse("const:1"))) == 1.0


def test_smooth_band_area_quadrature():
    f = TestFunction.parse("smooth:1.2:2:0.2")
    est = area_mean(f)
    # the cubic taper integrates to half its width, so the mass sits between the inner and outer bands
    inner = 3 / math.pi * (1 / 1.4 - 1 / 1.8)
    outer = 3 / math.pi * (1 / 1.2 - 1 / 2)
    assert inner < float(est) < outer
    assert est.error <= 1e-8


def test_disk_area_against_monte_carlo():
    disk = TestFunction.parse("disk:0:2:0.5")
    ref = area_mean(disk)
    est = mc_mean(disk.evaluate_arrays, 200_000, seed=5)
    assert abs(float(ref) - float(est)) <= 3 * est.error + ref.error
    # the radius exceeds the injectivity radius at 2i, so the image overlaps itself
    assert float(ref) < 6 * (math.cosh(0.5) - 1)


def test_small_disk_area_closed_form():
    # below the injectivity radius the area is 2 pi (cosh r - 1), normalised by pi/3
    ref = area_mean(TestFunction.parse("disk:0:2:0.2"))
    assert float(ref) == pytest.approx(6 * (math.cosh(0.2) - 1), rel=1e-6)


def test_quadrature_failure_is_signalled():
    with pytest.raises(QuadratureError):
        area_mean(TestFunction.parse("disk:0:2:0.5"), tol=1e-16)


def test_probability_measures():
    one = TestFunction.parse("const:1")
    assert horocycle_mean(one, F(1, 7), 64) == 1.0
    assert nu_mean(6, 2, one, 64) == 1.0
    assert sum(w for _, w in nu_weights(360)) == 1
    est = mc_mean(lambda x, y: np.ones_like(x), 10_000, seed=0)
    assert float(est) == 1.0


def test_horocycle_examples():
    assert horocycle_mean(TestFunction.parse("cusp:2"), 3, 100) == 1.0
    assert horocycle_mean(BAND, F(1, 9), 1) == evaluate(BAND, ExactPoint(F(1, 2), F(1, 9)))
    coarse, fine = horocycle_mean(BAND, F(1, 9), 4096), horocycle_mean(BAND, F(1, 9), 8192)
    assert abs(coarse - fine) < 1e-3


def test_nu_examples():
    f = TestFunction.parse("cusp:1")
    assert nu_mean(1, F(1, 5), BAND, 512) == horocycle_mean(BAND, F(1, 5), 512)
    assert nu_mean(2, F(1, 5), BAND, 512) == pytest.approx(
        (horocycle_mean(BAND, F(1, 5), 512) + horocycle_mean(BAND, F(4, 5), 512)) / 2)
    assert [(d, w) for d, w in nu_weights(6)] == [(1, F(2, 6)), (2, F(2, 6)), (3, F(1, 6)), (6, F(1, 6))]
    expected = sum(w * horocycle_mean(f, d * d * 2, 256) for d, w in nu_weights(6))
    assert nu_mean(6, 2, f, 256) == pytest.approx(float(expected))


def test_horocycle_converges_monotonically_for_smooth_band():
    f = TestFunction.parse("smooth:1.2:2:0.2")
    ref = float(area_mean(f))
    errs = [abs(horocycle_mean(f, F(1, k), 16384) - ref) for k in (10, 40, 160)]
    assert errs[0] > errs[1] > errs[2]


def test_horocycle_converges_to_area_for_sharp_band():
    # the indicator's error is not monotone along 1/10, 1/40, 1/160, only shrinking overall
    ref = float(area_mean(BAND))
    err = {k: abs(horocycle_mean(BAND, F(1, k), 8192) - ref) for k in (10, 320, 1280)}
    assert err[10] > 0.05
    assert err[320] < 2e-3 and err[1280] < 2e-3


def _in_Ec_bruteforce(z: ExactPoint, c: Fraction) -> bool:
    bands = [(1 / (2 * c), 1 / c), (2 / c, 4 / c), (9 / (2 * c), None)]
    for cc in range(0, 40):
        for d in range(-40, 41):
            if math.gcd(cc, d) != 1 or (cc == 0 and d != 1):
                continue
            v = z.im / ((cc * z.re + d) ** 2 + (cc * z.im) ** 2)
            if any(lo <= v and (hi is None or v <= hi) for lo, hi in bands):
                return True
    return False


def test_in_Ec_examples():
    assert in_Ec(ExactPoint(0, 5), 1) is True
    # 3/2 i maps to 2/3 i, which sits in [1/2, 1]
    assert in_Ec(ExactPoint(0, F(3, 2)), 1) is True
    z = ExactPoint(F(1, 2), F(19, 10))
    assert in_Ec(z, 1) is False
    assert _in_Ec_bruteforce(z, F(1)) is False
    with pytest.raises(PreconditionError):
        in_Ec(z, F(3, 2))


def test_in_Ec_matches_bruteforce():
    rng = random.Random(2)
    for _ in range(300):
        z = ExactPoint(F(rng.randint(-50, 50), 100), F(rng.randint(60, 600), 100))
        c = F(rng.choice([45, 60, 90, 100, 120, 149]), 100)
        assert in_Ec(z, c) == _in_Ec_bruteforce(z, c)


def test_in_Ec_arrays_agrees_with_exact():
    rng = np.random.default_rng(1)
    x, y = sample_fundamental_domain(rng, 400)
    got = in_Ec_arrays(x, y, 1.0)
    for i in range(400):
        z = ExactPoint(F(float(x[i])), F(float(y[i])))
        assert got[i] == in_Ec(z, 1)


def test_ec_area_bound_at_one():
    assert ec_area_bound(1.0) == pytest.approx(1 - 3 / math.pi * (1 / 4 - 2 / 9))


def test_fundamental_domain_sampler_marginal():
    rng = np.random.default_rng(0)
    x, y = sample_fundamental_domain(rng, 200_000)
    assert np.all(x * x + y * y >= 1 - 1e-12) and np.all(np.abs(x) <= 0.5)
    # mu_M(y > 2) = 3/(2 pi)
    assert abs(np.mean(y > 2) - 3 / (2 * math.pi)) < 4 * math.sqrt(0.24 / 200_000)


def test_mc_mean_reproducible_and_seeded():
    f = BAND.evaluate_arrays
    a, b = mc_mean(f, 50_000, seed=3), mc_mean(f, 50_000, seed=3)
    assert float(a) == float(b) and a.error == b.error
    assert float(mc_mean(f, 50_000, seed=4)) != float(a)
    assert abs(float(a) - 1 / math.pi) < 4 * a.error


def test_test_function_round_trip():
    for text in ("band:1.2:2", "cusp:1", "disk:0:2:0.5", "smooth:1.2:2:0.2", "const:3"):
        f = TestFunction.parse(text)
        assert TestFunction.from_dict(f.to_dict()) == f
        assert TestFunction.parse(f.spec()) == f
    with pytest.raises(PreconditionError):
        TestFunction.parse("band:2:1")
    with pytest.raises(PreconditionError):
        TestFunction.parse("cusp:1/2")
