"""Hecke operators as finite sums, and the second moment two ways.

Classical: T_n f(z) = n^{-1/2} sum f((a z + b)/d) over ad = n, 0 <= b < d.
Double coset: T~_n f(z) = nu_n^{-1} sum f(n^2 gamma z) over gamma in
Gamma_0(n^2)\\Gamma, using h = diag(n, 1/n) so that Gamma cap h^-1 Gamma h
is exactly Gamma_0(n^2).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .hyperbolic import ExactPoint, IntMatrix2, mobius
from .measures import Estimate, TestFunction, area_mean, evaluate, mc_mean
from .numth import divisors, ext_gcd, euler_phi, moebius_mu, prime_divisors, sigma

THETA = Fraction(7, 64)  # best known exponent toward the Ramanujan conjecture


def nu(n: int) -> int:
    """Size of the degree-n double coset: n^2 prod_{p | n} (1 + 1/p)."""
    out = Fraction(n * n)
    for p in prime_divisors(n):
        out *= Fraction(p + 1, p)
    return int(out)


@dataclass(frozen=True)
class HeckeCosetSet:
    kind: str  # "classical" or "double_coset"
    n: int
    reps: tuple  # IntMatrix2, acting as written (scaling is implicit)

    def __len__(self) -> int:
        return len(self.reps)


# ---------------------------------------------------------------------------
# classical operator
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def classical_reps(n: int) -> HeckeCosetSet:
    if n < 1:
        raise PreconditionError("n >= 1", f"n={n}")
    reps = tuple(IntMatrix2(a, b, 0, n // a) for a in divisors(n) for b in range(n // a))
    return HeckeCosetSet("classical", n, reps)


def _apply_sum(f: TestFunction, z: ExactPoint, reps: Sequence[IntMatrix2]) -> float:
    return float(sum(evaluate(f, mobius(g, z)) for g in reps))


def classical_hecke_apply(n: int, f: TestFunction, z: ExactPoint) -> float:
    return _apply_sum(f, z, classical_reps(n).reps) / math.sqrt(n)


def det_classes_bruteforce(n: int, bound: Optional[int] = None) -> list[IntMatrix2]:
    """One representative per Gamma-class of integer matrices of determinant n,
    found by enumerating small matrices and testing M1 M2^-1 for integrality."""
    bound = n if bound is None else bound
    reps: list[IntMatrix2] = []
    rng = range(-bound, bound + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for d in rng:
                    if a * d - b * c != n:
                        continue
                    m = IntMatrix2(a, b, c, d)
                    if not any(_same_class(m, r, n) for r in reps):
                        reps.append(m)
    return reps


def _same_class(m1: IntMatrix2, m2: IntMatrix2, n: int) -> bool:
    # m1 adj(m2) / n must be integral
    a, b, c, d = m1
    p, q, r, s = m2
    prod = (a * s - b * r, -a * q + b * p, c * s - d * r, -c * q + d * p)
    return all(v % n == 0 for v in prod)


def classical_hecke_bruteforce(n: int, f: TestFunction, z: ExactPoint) -> float:
    return _apply_sum(f, z, det_classes_bruteforce(n)) / math.sqrt(n)


def random_gamma(rng: random.Random, length: int = 6) -> IntMatrix2:
    g = IntMatrix2(1, 0, 0, 1)
    for _ in range(length):
        k = rng.randint(-3, 3)
        g = g @ (IntMatrix2(1, k, 0, 1) if rng.random() < 0.5 else IntMatrix2(1, 0, k, 1))
    return g


def rechosen_classical_apply(n: int, f: TestFunction, z: ExactPoint, seed: int = 0) -> float:
    """T_n f(z) with every representative left-multiplied by a random gamma."""
    rng = random.Random(seed)
    reps = [random_gamma(rng) @ g for g in classical_reps(n).reps]
    return _apply_sum(f, z, reps) / math.sqrt(n)


# ---------------------------------------------------------------------------
# double coset operator
# ---------------------------------------------------------------------------


def p1_reps(N: int) -> list[tuple[int, int]]:
    """Canonical bottom rows (c, d) for P^1(Z/N): one per unit-scaling class."""
    units = [u for u in range(1, N + 1) if math.gcd(u, N) == 1] if N > 1 else [0]
    seen, out = set(), []
    for c in range(N):
        for d in range(N):
            if math.gcd(math.gcd(c, d), N) != 1:
                continue
            key = min(((u * c) % N, (u * d) % N) for u in units)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def _lift_row(c: int, d: int, N: int) -> IntMatrix2:
    """An SL2(Z) matrix with bottom row congruent to (c, d) mod N."""
    if c == 0:
        c = N
    t = 0
    while math.gcd(c, d + t * N) != 1:
        t += 1
    d += t * N
    _, s, t = ext_gcd(d, c)  # s d + t c = 1
    return IntMatrix2(s, -t, c, d)


@lru_cache(maxsize=None)
def double_coset_reps(n: int) -> HeckeCosetSet:
    """Coset representatives of Gamma_0(n^2) in SL2(Z)."""
    if n < 1:
        raise PreconditionError("n >= 1", f"n={n}")
    N = n * n
    reps = tuple(_lift_row(c, d, N) for c, d in p1_reps(N)) if N > 1 else (IntMatrix2(1, 0, 0, 1),)
    return HeckeCosetSet("double_coset", n, reps)


def _scaled_images(n: int, z: ExactPoint):
    s = n * n
    for g in double_coset_reps(n).reps:
        w = mobius(g, z)
        yield ExactPoint(s * w.re, s * w.im)


def double_coset_sum(n: int, f: TestFunction, z: ExactPoint) -> float:
    """nu_n T~_n f(z): the unnormalised sum."""
    return float(sum(evaluate(f, w) for w in _scaled_images(n, z)))


def double_coset_apply(n: int, f: TestFunction, z: ExactPoint) -> float:
    return double_coset_sum(n, f, z) / len(double_coset_reps(n))


def moebius_relation_sides(n: int, f: TestFunction, z: ExactPoint) -> tuple[float, float]:
    """(n T_{n^2} f(z), sum_{d | n} nu_d T~_d f(z))."""
    lhs = n * classical_hecke_apply(n * n, f, z)
    rhs = sum(double_coset_sum(d, f, z) for d in divisors(n))
    return lhs, rhs


def moebius_inversion_sides(n: int, f: TestFunction, z: ExactPoint) -> tuple[float, float]:
    """(nu_n T~_n f(z), sum_{d | n} mu(d) (n/d) T_{(n/d)^2} f(z))."""
    lhs = double_coset_sum(n, f, z)
    rhs = sum(moebius_mu(d) * (n // d) * classical_hecke_apply((n // d) ** 2, f, z) for d in divisors(n))
    return lhs, rhs


def moebius_relation_check(n: int, f: TestFunction, z: ExactPoint, tol: float = 1e-9) -> bool:
    if n > 6:
        raise PreconditionError("n <= 6", f"n={n} (runtime guard)")
    a, b = moebius_relation_sides(n, f, z)
    c, d = moebius_inversion_sides(n, f, z)
    return abs(a - b) <= tol and abs(c - d) <= tol


# ---------------------------------------------------------------------------
# second moment
# ---------------------------------------------------------------------------


def _centered(f: TestFunction):
    mean = float(area_mean(f))
    return lambda x, y: f.evaluate_arrays(x, y) - mean


def second_moment_direct(n: int, y, f: TestFunction, grid: int, primitive: bool = False) -> float:
    """Midpoint rule in x for the integral over [0, 1] of |delta_{n,x,y}(f) - mu(f)|^2."""
    if grid < 1:
        raise PreconditionError("grid >= 1", f"grid={grid}")
    if n < 1:
        raise PreconditionError("n >= 1", f"n={n}")
    f0 = _centered(f)
    js = np.array([j for j in range(n) if not primitive or math.gcd(j, n) == 1], dtype=float)
    xs = (2 * np.arange(grid) + 1) / (2 * grid)
    X = (xs[:, None] + js[None, :] / n).ravel()
    Y = np.full(X.shape, float(y))
    vals = f0(X, Y).reshape(grid, js.size).mean(axis=1)
    return float(np.mean(vals * vals))


def hecke_weights(n: int) -> list[tuple[int, Fraction]]:
    """(e, phi(e)/n) for e | n: the j with n/gcd(n, j) = e number phi(e)."""
    return [(e, Fraction(euler_phi(e), n)) for e in divisors(n)]


def _double_coset_arrays(e: int, x: np.ndarray, y: np.ndarray, f0) -> np.ndarray:
    """T~_e f0 at arrays of points (float)."""
    reps = double_coset_reps(e).reps
    s = float(e * e)
    acc = np.zeros(x.shape)
    for g in reps:
        a, b, c, d = (float(v) for v in g)
        ux, uy = c * x + d, c * y
        norm = ux * ux + uy * uy
        gx = ((a * x + b) * ux + a * y * uy) / norm
        gy = y / norm
        acc += f0(s * gx, s * gy)
    return acc / len(reps)


def second_moment_hecke(n: int, y, f: TestFunction, mc_samples: int, seed: int = 0, strata: int = 16) -> Estimate:
    """(1/n) sum_j <f0, T~_{n_j} f0>, n_j = n/gcd(n, j), by Monte Carlo over mu_M.

    All inner products share one sample stream, so the reported error is
    the standard error of a single per-sample combination.  ``y`` does
    not enter the main term; it is accepted for interface symmetry.
    """
    if mc_samples < 1000:
        raise PreconditionError("mc_samples >= 1000", f"mc_samples={mc_samples}")
    if f.kind == "constant":
        return Estimate(0.0, 0.0, "exact")
    f0 = _centered(f)
    weights = [(e, float(w)) for e, w in hecke_weights(n)]

    def integrand(x, yy):
        base = f0(x, yy)
        total = np.zeros(x.shape)
        for e, w in weights:
            total += w * (base if e == 1 else _double_coset_arrays(e, x, yy, f0))
        return base * total

    return mc_mean(integrand, mc_samples, seed, strata)


def hecke_inner_product(e: int, f: TestFunction, g: TestFunction, mc_samples: int, seed: int = 0) -> Estimate:
    """<f, T~_e g> over mu_M (no centering)."""
    fa, ga = f.evaluate_arrays, g.evaluate_arrays
    return mc_mean(lambda x, y: fa(x, y) * _double_coset_arrays(e, x, y, ga), mc_samples, seed)


def self_adjointness_check(e: int, f: TestFunction, g: TestFunction, mc_samples: int, seed: int = 0) -> Estimate:
    """<T~_e f, g> - <f, T~_e g> on common samples, with its standard error."""
    fa, ga = f.evaluate_arrays, g.evaluate_arrays

    def diff(x, y):
        return _double_coset_arrays(e, x, y, fa) * ga(x, y) - fa(x, y) * _double_coset_arrays(e, x, y, ga)

    return mc_mean(diff, mc_samples, seed)


def centered_hecke_decay(f: TestFunction, ns: Sequence[int], mc_samples: int, seed: int = 0) -> dict:
    """|<f0, T~_n f0>| along ns and the least-squares slope of its log against log n."""
    f0 = _centered(f)
    vals = []
    for n in ns:
        est = mc_mean(lambda x, y, n=n: f0(x, y) * _double_coset_arrays(n, x, y, f0), mc_samples, seed)
        vals.append(est)
    slope = float(np.polyfit(np.log(np.array(ns, dtype=float)), np.log(np.abs(np.array(vals, dtype=float))), 1)[0])
    return {"n": list(ns), "values": vals, "slope": slope}


def moment_decay_curve(f: TestFunction, schedule: Sequence[tuple[int, object]], grid: int = 2000,
                       primitive: bool = False) -> list[tuple[int, Fraction, float]]:
    return [(n, Fraction(y), second_moment_direct(n, y, f, grid, primitive)) for n, y in schedule]


def csv_row(n: int, y, est: float, stderr: float, reps: int) -> dict:
    return {"n": n, "y": str(y), "estimate": float(est), "stderr": float(stderr), "reps_count": reps}


__all__ = [
    "THETA", "nu", "sigma", "HeckeCosetSet", "classical_reps", "classical_hecke_apply",
    "det_classes_bruteforce", "classical_hecke_bruteforce", "rechosen_classical_apply",
    "p1_reps", "double_coset_reps", "double_coset_apply", "double_coset_sum",
    "moebius_relation_sides", "moebius_inversion_sides", "moebius_relation_check",
    "second_moment_direct", "second_moment_hecke", "hecke_weights", "hecke_inner_product",
    "self_adjointness_check", "centered_hecke_decay", "moment_decay_curve", "csv_row",
]
