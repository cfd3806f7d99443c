"""The congruence subgroups Gamma_n = {n^2 | c, a = d = +-1 mod n}.

Membership, index, cusps with widths and scaling matrices, the action of
u_{j/n} = (1, j/n; 0, 1) which normalises Gamma_n, and the cusp
neighbourhood geometry on Gamma_n \\ H.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import PreconditionError
from .hyperbolic import (
    IDENTITY,
    S,
    T,
    ExactPoint,
    IntMatrix2,
    mobius,
    orbit_height,
    reduce,
    reduce_arrays,
)
from .measures import Estimate, sample_fundamental_domain
from .numth import divisors, euler_phi, inv_mod, prime_divisors

RatMatrix = tuple  # (a, b, c, d) with Fraction entries


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


def gamma_n_contains(n: int, g: IntMatrix2) -> bool:
    if g.det != 1:
        raise PreconditionError("det = 1", f"{g} has determinant {g.det}")
    if g.c % (n * n):
        return False
    return (g.a - 1) % n == 0 and (g.d - 1) % n == 0 or (g.a + 1) % n == 0 and (g.d + 1) % n == 0


def gamma0_contains(N: int, g: IntMatrix2) -> bool:
    if g.det != 1:
        raise PreconditionError("det = 1", f"{g} has determinant {g.det}")
    return g.c % N == 0


def _rat(g) -> RatMatrix:
    return tuple(Fraction(v) for v in g)


def rmul(g: RatMatrix, h: RatMatrix) -> RatMatrix:
    a, b, c, d = g
    e, f, gg, hh = h
    return (a * e + b * gg, a * f + b * hh, c * e + d * gg, c * f + d * hh)


def rinv(g: RatMatrix) -> RatMatrix:
    a, b, c, d = g
    det = a * d - b * c
    return (d / det, -b / det, -c / det, a / det)


def as_int_matrix(g: RatMatrix) -> Optional[IntMatrix2]:
    if all(Fraction(v).denominator == 1 for v in g):
        return IntMatrix2(*(int(v) for v in g))
    return None


def u(j: int, n: int) -> RatMatrix:
    return (Fraction(1), Fraction(j, n), Fraction(0), Fraction(1))


def conjugate_by_u(g: IntMatrix2, j: int, n: int) -> RatMatrix:
    """u_{j/n}^-1 g u_{j/n}."""
    return rmul(rmul(rinv(u(j, n)), _rat(g)), u(j, n))


def index_witnesses(n: int) -> list[IntMatrix2]:
    """gamma_k^+- = +-(1 + kn, 1; -k^2 n^2, 1 - kn), 0 <= k < n."""
    out = []
    for k in range(n):
        g = IntMatrix2(1 + k * n, 1, -k * k * n * n, 1 - k * n)
        out += [g, -g]
    return out


def spanning_sample(n: int, extra: int = 40, seed: int = 0) -> list[IntMatrix2]:
    """Generators of Gamma_n's standard pieces plus seeded random products."""
    gens = [T(1), IntMatrix2(1, 0, n * n, 1), -IDENTITY] + index_witnesses(n)
    rng = random.Random(seed)
    out = list(gens)
    for _ in range(extra):
        g = IDENTITY
        for _ in range(rng.randint(2, 5)):
            h = rng.choice(gens)
            g = g @ (h if rng.random() < 0.5 else h.inverse())
        out.append(g)
    return out


def normalizer_check(n: int, j: int, sample: Optional[list[IntMatrix2]] = None):
    """Check u_{j/n}^-1 g u_{j/n} in Gamma_n over a spanning sample.

    Returns (all_ok, [(g, conjugate, ok), ...]).
    """
    sample = spanning_sample(n) if sample is None else sample
    table = []
    for g in sample:
        h = conjugate_by_u(g, j, n)
        hi = as_int_matrix(h)
        ok = hi is not None and gamma_n_contains(n, hi)
        table.append((g, h, ok))
    return all(ok for *_, ok in table), table


def gamma0_normalizer_counterexample(n: int, j: int = 1, bound: int = 6) -> Optional[tuple]:
    """Search g in Gamma_0(n) whose u_{j/n}-conjugate leaves Gamma_0(n)."""
    for c in range(-bound * n, bound * n + 1, n):
        for d in range(-bound, bound + 1):
            if math.gcd(c, d) != 1:
                continue
            _, s, t = _bezout(d, c)
            g = IntMatrix2(s, -t, c, d)
            h = as_int_matrix(conjugate_by_u(g, j, n))
            if h is None or not gamma0_contains(n, h):
                return g, conjugate_by_u(g, j, n)
    return None


def _bezout(a: int, b: int):
    from .numth import ext_gcd

    return ext_gcd(a, b)


# ---------------------------------------------------------------------------
# index
# ---------------------------------------------------------------------------


def index(n: int) -> int:
    """[Gamma_1 : Gamma_n]."""
    if n < 1:
        raise PreconditionError("n >= 1", f"n={n}")
    if n == 1:
        return 1
    if n == 2:
        return 6
    num, den = n**3, 2
    for p in prime_divisors(n):
        num *= p * p - 1
        den *= p * p
    return num // den


def index_bruteforce(n: int) -> int:
    """|SL2(Z/n^2)| / |image of Gamma_n|, both counted by full enumeration."""
    N = n * n
    r = np.arange(N)
    a, b, c, d = np.meshgrid(r, r, r, r, indexing="ij", sparse=True)
    det_ok = (a * d - b * c) % N == 1
    full = int(np.count_nonzero(det_ok))
    plus = ((a - 1) % n == 0) & ((d - 1) % n == 0)
    minus = ((a + 1) % n == 0) & ((d + 1) % n == 0)
    image = int(np.count_nonzero(det_ok & (c % N == 0) & (plus | minus)))
    return full // image


def coset_reps(n: int) -> list[IntMatrix2]:
    """Representatives g_i of the right cosets Gamma_n g_i, found breadth first."""
    reps = [IDENTITY]
    queue = [IDENTITY]
    gens = (S, T(1), T(-1))
    while queue:
        g = queue.pop(0)
        for s in gens:
            h = g @ s
            if not any(gamma_n_contains(n, h @ r.inverse()) for r in reps):
                reps.append(h)
                queue.append(h)
    return reps


# ---------------------------------------------------------------------------
# cusps
# ---------------------------------------------------------------------------


def _jn(n: int) -> list[int]:
    N = n * n
    return sorted({a % N for k in range(n) for a in (1 + k * n, -1 - k * n)})


@dataclass(frozen=True)
class Cusp:
    """Cusp m/l of Gamma_n, with l >= 0 and infinity stored as 1/0."""

    n: int
    num: int
    den: int

    def __post_init__(self) -> None:
        if math.gcd(self.num, self.den) != 1:
            raise PreconditionError("gcd(m, l) = 1", f"{self.num}/{self.den} not primitive")
        if self.den < 0 or (self.den == 0 and self.num < 0):
            object.__setattr__(self, "num", -self.num)
            object.__setattr__(self, "den", -self.den)

    @property
    def width(self) -> int:
        g = math.gcd(self.n, self.den)  # gcd(n, 0) = n
        return self.n**2 // g**2

    @property
    def simple_type(self) -> bool:
        return self.n % math.gcd(self.n**2, self.den) == 0

    @property
    def tau(self) -> IntMatrix2:
        """Canonical scaling matrix (m, a; l, b) with 0 <= b < l."""
        if self.den == 0:
            return IDENTITY
        b = inv_mod(self.num, self.den)
        a = (self.num * b - 1) // self.den
        return IntMatrix2(self.num, a, self.den, b)

    @property
    def key(self) -> tuple:
        return cusp_key(self.n, self.num, self.den)

    @property
    def rep(self) -> str:
        return f"{self.num}/{self.den}"

    def to_dict(self) -> dict:
        return {"rep": self.rep, "width": self.width, "simple_type": self.simple_type, "tau": self.tau.to_list()}


def cusp_key(n: int, num: int, den: int) -> tuple:
    """Normal form of the Gamma_n-class of num/den: the J_n-orbit minimum of
    (num mod gcd(n^2, den), den mod n^2)."""
    N = n * n
    D = math.gcd(N, den)
    best = None
    for a in _jn(n):
        ainv = inv_mod(a, N)
        cand = ((a * num) % D, (ainv * den) % N)
        if best is None or cand < best:
            best = cand
    return (D,) + best


def _lift(n: int, mm: int, ll: int, D: int) -> tuple[int, int]:
    N = n * n
    if ll == 0:
        if (mm - 1) % N == 0 or (mm + 1) % N == 0:
            return 1, 0
        return mm % N, N
    num = mm
    while math.gcd(num, ll) != 1:
        num += D
    return num, ll


@lru_cache(maxsize=64)
def enumerate_cusps(n: int) -> tuple[Cusp, ...]:
    """One representative per Gamma_n-class, via J_n-orbits on the strata Z_D."""
    N = n * n
    seen = {}
    for D in divisors(N):
        units = [m for m in range(D) if math.gcd(m, D) == 1] if D > 1 else [0]
        ls = [l for l in range(N) if math.gcd(N, l) == D]
        for ll in ls:
            for mm in units:
                key = cusp_key(n, mm, ll) if D > 1 or ll else cusp_key(n, 1, 0)
                num, den = _lift(n, mm, ll, D)
                c = Cusp(n, num, den)
                if c.key != key:
                    raise AssertionError("lift changed the cusp class")
                prev = seen.get(key)
                if prev is None or _nicer(c, prev):
                    seen[key] = c
    return tuple(sorted(seen.values(), key=lambda c: (c.den == 0 and -1 or c.den, c.num)))


def _nicer(a: Cusp, b: Cusp) -> bool:
    ra = (a.den != 0, a.den, abs(a.num))
    rb = (b.den != 0, b.den, abs(b.num))
    return ra < rb


def cusp_class(n: int, num: int, den: int) -> Cusp:
    """The enumerated representative equivalent to num/den."""
    key = cusp_key(n, num, den)
    for c in enumerate_cusps(n):
        if c.key == key:
            return c
    raise AssertionError("cusp class missing from enumeration")


def cusp_count_formula(n: int) -> int:
    if n == 1:
        return 1
    if n == 2:
        return 3
    num, den = n * n, 2
    for p in prime_divisors(n):
        num *= p * p - 1
        den *= p * p
    return num // den


def cusp_count_divisor_sum(n: int) -> int:
    """sum_{d | n^2} phi(n^2/d) phi(d) gcd(n^2/d, d) / (2n), valid for n >= 3."""
    N = n * n
    total = sum(euler_phi(N // d) * euler_phi(d) * math.gcd(N // d, d) for d in divisors(N))
    return total // (2 * n)


def cusps_equivalent_bruteforce(n: int, c1: Cusp, c2: Cusp) -> bool:
    """Search g = +-tau_2 u_t tau_1^-1 in Gamma_n over t mod n^2."""
    t1i, t2 = c1.tau.inverse(), c2.tau
    for t in range(n * n):
        g = t2 @ T(t) @ t1i
        if gamma_n_contains(n, g):
            return True
    return False


def width_bruteforce(n: int, c: Cusp) -> int:
    """Smallest t > 0 with tau u_t tau^-1 in Gamma_n."""
    tau = c.tau
    for t in range(1, n * n + 1):
        if gamma_n_contains(n, tau @ T(t) @ tau.inverse()):
            return t
    raise AssertionError("no stabiliser element found")


def translate_cusp(c: Cusp, j: int) -> tuple[int, int]:
    """u_{j/n} applied to the cusp, as a primitive pair."""
    n = c.n
    if c.den == 0:
        return 1, 0
    fr = Fraction(c.num, c.den) + Fraction(j, n)
    return fr.numerator, fr.denominator


def u_permutation(n: int) -> dict:
    """Induced map of u_{1/n} on cusp classes (keys to keys)."""
    return {c.key: cusp_key(n, *translate_cusp(c, 1)) for c in enumerate_cusps(n)}


def conjugation_identity(n: int, c: Cusp, j: int) -> RatMatrix:
    """tau_{hc}^-1 h tau_c for h = u_{j/n}; checks it is upper triangular with
    squared (1,1) entry equal to width(hc) / width(c)."""
    hc = Cusp(n, *translate_cusp(c, j))
    M = rmul(rmul(rinv(_rat(hc.tau)), u(j, n)), _rat(c.tau))
    if M[2] != 0:
        raise AssertionError(f"not upper triangular: {M}")
    if M[0] ** 2 != Fraction(hc.width, c.width):
        raise AssertionError(f"(1,1)^2 = {M[0] ** 2} but widths give {Fraction(hc.width, c.width)}")
    return M


# ---------------------------------------------------------------------------
# points and neighbourhoods
# ---------------------------------------------------------------------------


def gamma_n_equivalent(n: int, z1: ExactPoint, z2: ExactPoint) -> Optional[IntMatrix2]:
    """Some g in Gamma_n with g z1 = z2, or None."""
    r1, r2 = reduce(z1), reduce(z2)
    if r1.point != r2.point:
        return None
    stab = [IDENTITY, S] if r1.point == ExactPoint(0, 1) else [IDENTITY]
    for s in stab:
        g = r2.matrix.inverse() @ s @ r1.matrix
        if gamma_n_contains(n, g):
            return g
    return None


def ford_cusp(z: ExactPoint) -> tuple[int, int, Fraction]:
    """(p, q, h): the cusp p/q whose Ford horodisc holds z at relative height h."""
    r = reduce(z)
    g = r.matrix
    p, q = g.d, -g.c
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    return p, q, r.height


def neighborhood_certificates(z: ExactPoint, Y) -> list[tuple[int, int]]:
    """Every p/q (1/0 for infinity) whose height-Y horodisc contains z."""
    Y = Fraction(Y)
    x, y = z.re, z.im
    out = [(1, 0)] if y > Y else []
    qmax = math.isqrt(int(1 / (Y * y))) + 1
    for q in range(1, qmax + 1):
        centre = math.floor(q * x)
        for p in range(centre - 2, centre + 3):
            if math.gcd(p, q) == 1 and y / ((p - q * x) ** 2 + q * q * y * y) > Y:
                out.append((p, q))
    return out


def excursion_transfer_check(
    n: int,
    c: Cusp,
    Y,
    z: ExactPoint,
    gamma: Optional[IntMatrix2] = None,
    z_cusp: Optional[ExactPoint] = None,
) -> tuple[bool, list[tuple[int, Fraction]]]:
    """Given z = gamma tau_c z_cusp with gamma in Gamma_n and Im z_cusp > width * Y,
    verify that every translate z + j/n has orbit height above Y."""
    Y = Fraction(Y)
    if Y < 1:
        raise PreconditionError("Y >= 1", f"Y={Y}")
    if gamma is None or z_cusp is None:
        raise PreconditionError("certificate", "need gamma and the cusp-side point")
    if not gamma_n_contains(n, gamma):
        raise PreconditionError("certificate", "gamma is not in Gamma_n")
    if mobius(gamma @ c.tau, z_cusp) != z:
        raise PreconditionError("certificate", "z != gamma tau_c z_cusp")
    if not z_cusp.im > c.width * Y:
        raise PreconditionError("certificate", "Im z_cusp <= width * Y")
    heights = [(j, orbit_height(ExactPoint(z.re + Fraction(j, n), z.im))) for j in range(n)]
    return all(h > Y for _, h in heights), heights


def cylinder_volume(n: int, c: Cusp, Y, Y2) -> Fraction:
    """Volume of the cusp cylinder between heights Y < Y2, as a multiple of 1/pi:
    the result r means r / pi."""
    Y, Y2 = Fraction(Y), Fraction(Y2)
    if not Y2 > Y > 1:
        raise PreconditionError("Y' > Y > 1", f"({Y}, {Y2})")
    return Fraction(3 * c.width, index(n)) * (1 / Y - 1 / Y2)


def random_gamma_n(n: int, rng: random.Random, length: int = 4) -> IntMatrix2:
    gens = [T(1), IntMatrix2(1, 0, n * n, 1)] + index_witnesses(n)
    g = IDENTITY
    for _ in range(length):
        h = rng.choice(gens)
        g = g @ (h if rng.random() < 0.5 else h.inverse())
    return g


def cylinder_volume_mc(n: int, c: Cusp, Y: float, Y2: float, samples: int, seed: int) -> Estimate:
    """Monte-Carlo volume of the cusp cylinder on Gamma_n \\ H.

    Points are drawn from a fundamental domain of Gamma_n (a random coset
    translate of a mu_M sample).  A point lies in the cylinder when its Ford
    cusp is Gamma_n-equivalent to c and its relative height is in (Y, Y2).
    """
    reps = coset_reps(n)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x, y = sample_fundamental_domain(rng, samples)
    pick = rng.integers(0, len(reps), samples)
    wx, wy = np.empty(samples), np.empty(samples)
    for i, g in enumerate(reps):
        sel = pick == i
        a, b, cc, d = (float(v) for v in g)
        ux, uy = cc * x[sel] + d, cc * y[sel]
        nrm = ux * ux + uy * uy
        wx[sel] = ((a * x[sel] + b) * ux + a * y[sel] * uy) / nrm
        wy[sel] = y[sel] / nrm
    rx, ry, gm = reduce_arrays(wx, wy, track=True)
    hit = (ry > Y) & (ry < Y2)
    keys = {}
    inside = np.zeros(samples, dtype=bool)
    for i in np.nonzero(hit)[0]:
        p, q = int(gm[i, 3]), -int(gm[i, 2])
        k = keys.setdefault((p, q), cusp_key(n, p, q))
        inside[i] = k == c.key
    mean = inside.mean()
    sd = math.sqrt(mean * (1 - mean) / samples)
    return Estimate(mean, sd, f"mc±{sd:.1e}")


def all_translates_volume_mc(n: int, Y: float, samples: int, seed: int) -> dict:
    """Monte-Carlo volume of {Gamma_n z : every u_{j/n} z lies above height Y},
    with the lower and upper bounds given by the cusp cylinders."""
    reps = coset_reps(n)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x, y = sample_fundamental_domain(rng, samples)
    pick = rng.integers(0, len(reps), samples)
    wx, wy = np.empty(samples), np.empty(samples)
    for i, g in enumerate(reps):
        sel = pick == i
        a, b, cc, d = (float(v) for v in g)
        ux, uy = cc * x[sel] + d, cc * y[sel]
        nrm = ux * ux + uy * uy
        wx[sel] = ((a * x[sel] + b) * ux + a * y[sel] * uy) / nrm
        wy[sel] = y[sel] / nrm
    ok = np.ones(samples, dtype=bool)
    for j in range(n):
        _, ry = reduce_arrays(wx + j / n, wy)
        ok &= ry > Y
    mean = ok.mean()
    sd = math.sqrt(mean * (1 - mean) / samples)
    ncusps = len(enumerate_cusps(n))
    return {
        "estimate": Estimate(mean, sd, f"mc±{sd:.1e}"),
        "lower": 3 * ncusps / (math.pi * Y * index(n)),
        "upper": 3 / (math.pi * Y),
    }
