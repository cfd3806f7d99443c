"""Exact symmetries of horocycle points at rational translates.

A point m/(kl) + j/n + iy (with l | n, gcd(k, n) = 1) is modular-equivalent
to a point at height d^2/(k^2 n^2 y), d = gcd(m n/l + j k, n).  Grouping
the j by d splits R_n(p/q, y) into primitive sets at explicit heights.
Every identity here is certified by exact reduction.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .congruence import Cusp, gamma_n_equivalent
from .errors import PreconditionError
from .hyperbolic import T, ExactPoint, IntMatrix2, mobius, reduced_coords
from .numth import divisors, inv_mod


def _bezout_canonical(nd: int, k: int) -> tuple[int, int]:
    """(a, b) with a*nd + b*k = 1 and 0 <= b < nd."""
    b = inv_mod(k, nd)
    a = (1 - b * k) // nd
    return a, b


@dataclass(frozen=True)
class SymmetryWitness:
    m: int
    k: int
    l: int
    n: int
    j: int
    y: Fraction
    d: int
    bezout: tuple[int, int]
    point: ExactPoint
    image: ExactPoint
    gamma: IntMatrix2

    def to_dict(self) -> dict:
        return {
            "type": "symmetry_witness",
            "inputs": {"m": self.m, "k": self.k, "l": self.l, "n": self.n, "j": self.j, "y": str(self.y)},
            "d": self.d,
            "bezout": list(self.bezout),
            "point": self.point.to_dict(),
            "image": self.image.to_dict(),
            "gamma": self.gamma.to_list(),
        }


def _check_symmetry_inputs(m: int, k: int, l: int, n: int, j: int, y) -> None:
    if n < 1 or k < 1 or l < 1:
        raise PreconditionError("positive k, l, n", f"k={k}, l={l}, n={n}")
    if math.gcd(m, k * l) != 1:
        raise PreconditionError("gcd(m, kl) = 1", f"gcd({m}, {k * l}) != 1")
    if n % l:
        raise PreconditionError("l | n", f"{l} does not divide {n}")
    if math.gcd(k, n) != 1:
        raise PreconditionError("gcd(k, n) = 1", f"gcd({k}, {n}) != 1")
    if not 0 <= j < n:
        raise PreconditionError("0 <= j < n", f"j={j}")
    if Fraction(y) <= 0:
        raise PreconditionError("y > 0", f"y={y}")


def symmetry_point(m: int, k: int, l: int, n: int, j: int, y) -> SymmetryWitness:
    """The partner of m/(kl) + j/n + iy at height d^2/(k^2 n^2 y), with a matrix
    in SL2(Z) carrying one to the other."""
    _check_symmetry_inputs(m, k, l, n, j, y)
    y = Fraction(y)
    s = m * (n // l) + j * k
    d = math.gcd(s, n)
    nd = n // d
    a, b = _bezout_canonical(nd, k)
    x_img = -Fraction(d * l * inv_mod(m * n, k) * a, k) - Fraction(inv_mod(s // d, nd) * b, nd)
    x_img -= math.floor(x_img)
    im_img = Fraction(d * d, k * k * n * n) / y

    point = ExactPoint(Fraction(m, k * l) + Fraction(j, n), y)
    # (w, v; -Q, P) sends P/Q + iy to -w/Q + i/(Q^2 y)
    P, Q = point.re.numerator, point.re.denominator
    w = inv_mod(P, Q)
    v = (1 - w * P) // Q
    g0 = IntMatrix2(w, v, -Q, P)
    shift = x_img + Fraction(w, Q)
    if shift.denominator != 1 or Fraction(1, Q * Q) / y != im_img:
        raise AssertionError("symmetry formula disagrees with the explicit matrix")
    gamma = T(int(shift)) @ g0
    image = ExactPoint(x_img, im_img)
    if mobius(gamma, point) != image:
        raise AssertionError("witness matrix does not realise the identity")
    return SymmetryWitness(m, k, l, n, j, y, d, (a, b), point, image, gamma)


def classical_symmetry(j: int, n: int, y) -> ExactPoint:
    """j/n + iy ~ -jbar/n + i/(n^2 y) for gcd(j, n) = 1."""
    if math.gcd(j, n) != 1:
        raise PreconditionError("gcd(j, n) = 1", f"gcd({j}, {n}) != 1")
    x = Fraction(-inv_mod(j, n), n)
    return ExactPoint(x - math.floor(x), 1 / (Fraction(n * n) * Fraction(y)))


# ---------------------------------------------------------------------------
# set identities
# ---------------------------------------------------------------------------


def reduced_multiset(x: Fraction, n: int, y: Fraction, primitive_only: bool = False) -> Counter:
    c = Counter()
    for j in range(n):
        if primitive_only and math.gcd(j, n) != 1:
            continue
        c[reduced_coords(x + Fraction(j, n), y)] += 1
    return c


def in_Nq(n: int, q: int) -> bool:
    return n % math.gcd(n * n, q) == 0


def in_Nq_factored(n: int, q: int) -> bool:
    """q = k l with l = gcd(n, q) and gcd(k, n) = 1."""
    l = math.gcd(n, q)
    return math.gcd(q // l, n) == 1


def decompose_rational_sampleset(p: int, q: int, n: int, y) -> dict[int, tuple[Fraction, Fraction]]:
    """d -> (x_d, y_d) with R_n(p/q, y) = union over d | n of R^pr_{n/d}(x_d, y_d)."""
    if q < 1 or math.gcd(p, q) != 1:
        raise PreconditionError("gcd(p, q) = 1", f"{p}/{q}")
    if not in_Nq(n, q):
        raise PreconditionError("n in N_q", f"gcd(n^2, q) does not divide n for n={n}, q={q}")
    y = Fraction(y)
    l = math.gcd(n, q)
    k = q // l
    out = {}
    for d in divisors(n):
        a, _ = _bezout_canonical(n // d, k)
        x_d = -Fraction(d * l * inv_mod(p * n, k) * a, k)
        out[d] = (x_d - math.floor(x_d), Fraction(d * d, k * k * n * n) / y)
    return out


def union_multiset(parts: dict[int, tuple[Fraction, Fraction]], n: int) -> Counter:
    c = Counter()
    for d, (x_d, y_d) in parts.items():
        c += reduced_multiset(x_d, n // d, y_d, primitive_only=True)
    return c


def verify_decomposition(p: int, q: int, n: int, y) -> bool:
    parts = decompose_rational_sampleset(p, q, n, y)
    return reduced_multiset(Fraction(p, q), n, Fraction(y)) == union_multiset(parts, n)


def primitive_symmetry(p: int, q: int, n: int, y) -> tuple[Fraction, Fraction]:
    """(x', y') with R^pr_n(p/q, y) = R^pr_n(x', y'), y' = 1/(q^2 n^2 y)."""
    if q < 1 or math.gcd(p, q) != 1:
        raise PreconditionError("gcd(p, q) = 1", f"{p}/{q}")
    if math.gcd(n, q) != 1:
        raise PreconditionError("gcd(n, q) = 1", f"gcd({n}, {q}) != 1")
    a, _ = _bezout_canonical(n, q)
    x = -Fraction(inv_mod(p * n, q) * a, q)
    return x - math.floor(x), 1 / (Fraction(q * q * n * n) * Fraction(y))


def verify_primitive_symmetry(p: int, q: int, n: int, y) -> bool:
    x2, y2 = primitive_symmetry(p, q, n, y)
    lhs = reduced_multiset(Fraction(p, q), n, Fraction(y), True)
    return lhs == reduced_multiset(x2, n, y2, True)


# ---------------------------------------------------------------------------
# simple-type cusps
# ---------------------------------------------------------------------------


def _usable_rep(c: Cusp, z_cusp: ExactPoint) -> tuple[Cusp, ExactPoint]:
    """Move to an equivalent representative with nonzero numerator and
    denominator, carrying the cusp-side point along."""
    if c.num * c.den != 0:
        return c, z_cusp
    n = c.n
    g = IntMatrix2(1, 0, n * n, 1) if c.den == 0 else T(1)
    num, den = g.a * c.num + g.b * c.den, g.c * c.num + g.d * c.den
    c2 = Cusp(n, num, den)
    # g tau_c = tau_c2 u with u = +-(1, s; 0, 1)
    um = c2.tau.inverse() @ g @ c.tau
    if um.c != 0 or abs(um.a) != 1:
        raise AssertionError("representative change is not unipotent")
    return c2, mobius(um if um.a == 1 else -um, z_cusp)


def simple_type_decomposition(n: int, z: ExactPoint, c: Cusp, z_cusp: ExactPoint) -> dict[int, tuple[Fraction, Fraction]]:
    """d -> (x'_d, h_d) with R_n(Re z, Im z) = union over d of R^pr_{n/d}(x'_d, h_d),
    h_d = d^2 Im(z_cusp) / width, given Gamma_n z = Gamma_n tau_c z_cusp."""
    if c.n != n:
        raise PreconditionError("cusp of Gamma_n", f"cusp belongs to n={c.n}")
    if not c.simple_type:
        raise PreconditionError("simple type", f"cusp {c.rep} is not of simple type for n={n}")
    if gamma_n_equivalent(n, z, mobius(c.tau, z_cusp)) is None:
        raise PreconditionError("Gamma_n z = Gamma_n tau_c z'", "points are not Gamma_n-equivalent")
    c, z_cusp = _usable_rep(c, z_cusp)
    m, q = c.num, c.den
    l = math.gcd(n, q)
    k = q // l
    b = c.tau.d
    xp, yp = z_cusp.re, z_cusp.im
    out = {}
    for d in divisors(n):
        e, _ = _bezout_canonical(n // d, k)
        x_d = (
            Fraction(d * d * l * l, n * n) * xp
            + Fraction(d * d * l * b, n * n * k)
            - Fraction(d * l * inv_mod(m * n, k) * e, k)
        )
        out[d] = (x_d - math.floor(x_d), d * d * yp / c.width)
    return out


def verify_simple_type_decomposition(n: int, z: ExactPoint, c: Cusp, z_cusp: ExactPoint) -> bool:
    parts = simple_type_decomposition(n, z, c, z_cusp)
    return reduced_multiset(z.re, n, z.im) == union_multiset(parts, n)
