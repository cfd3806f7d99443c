"""Exact geometry of the modular surface.

Points of the upper half-plane carry rational coordinates, matrices carry
integer (or rational) entries, and reduction into the standard fundamental
domain is performed in integer arithmetic.  A vectorised floating-point
reduction is provided for Monte-Carlo work.

Boundary convention for the fundamental domain: ``-1/2 <= re < 1/2`` and
``|z| >= 1``, with ``re <= 0`` on the unit circle.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
import numpy as np

from .errors import PreconditionError

Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class ExactPoint:
    re: Fraction
    im: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))
        if self.im <= 0:
            raise PreconditionError("im > 0", f"point {self.re}+{self.im}i not in the upper half-plane")

    _PATTERN = re.compile(r"^\s*(?P<re>[+-]?[0-9./]+(?=[+-]))?(?P<im>[+-]?[0-9./]*)\s*\*?\s*i\s*$")

    @classmethod
    def parse(cls, text: str) -> "ExactPoint":
        """Parse strings such as ``1/3+1/100i``, ``2i`` or ``-1/2+i``."""
        m = cls._PATTERN.match(text)
        if not m:
            raise PreconditionError("point syntax", f"cannot parse point {text!r}")
        im_s = m.group("im")
        if im_s in ("", "+"):
            im = Fraction(1)
        elif im_s == "-":
            im = Fraction(-1)
        else:
            im = Fraction(im_s)
        return cls(Fraction(m.group("re") or 0), im)

    def to_dict(self) -> dict:
        return {"re": str(self.re), "im": str(self.im)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExactPoint":
        return cls(Fraction(d["re"]), Fraction(d["im"]))

    def __str__(self) -> str:
        return f"{self.re}+{self.im}i"

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))


@dataclass(frozen=True)
class IntMatrix2:
    a: int
    b: int
    c: int
    d: int

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, o: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def __neg__(self) -> "IntMatrix2":
        return IntMatrix2(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "IntMatrix2":
        if self.det != 1:
            raise PreconditionError("det = 1", f"{self} is not in SL2(Z)")
        return IntMatrix2(self.d, -self.b, -self.c, self.a)

    def to_list(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    @classmethod
    def from_list(cls, rows) -> "IntMatrix2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    def __iter__(self):
        return iter((self.a, self.b, self.c, self.d))


IDENTITY = IntMatrix2(1, 0, 0, 1)
S = IntMatrix2(0, -1, 1, 0)


def T(k: int = 1) -> IntMatrix2:
    return IntMatrix2(1, k, 0, 1)


def mobius(g, z: ExactPoint) -> ExactPoint:
    """Apply a 2x2 matrix with rational entries and positive determinant."""
    a, b, c, d = (Fraction(v) for v in g)
    det = a * d - b * c
    if det <= 0:
        raise PreconditionError("det > 0", "matrix does not preserve the upper half-plane")
    x, y = z.re, z.im
    ux, uy = c * x + d, c * y
    norm = ux * ux + uy * uy
    # (a z + b)(c zbar + d) / |c z + d|^2
    re_num = (a * x + b) * ux + a * y * uy
    return ExactPoint(re_num / norm, det * y / norm)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedPoint:
    """Representative in the fundamental domain plus the word that produced it.

    ``word`` lists generator applications in the order performed:
    ("T", k) applies z -> z + k and ("S",) applies z -> -1/z.  ``matrix`` is
    the product g with g * input = point.
    """

    point: ExactPoint
    word: tuple
    matrix: IntMatrix2

    @property
    def height(self) -> Fraction:
        return self.point.im

    def to_dict(self) -> dict:
        return {**self.point.to_dict(), "word": word_to_str(self.word)}


def word_to_str(word) -> str:
    parts = []
    for w in word:
        parts.append("S" if w[0] == "S" else f"T^{w[1]}")
    return " ".join(parts)


def word_from_str(text: str) -> tuple:
    out = []
    for tok in text.split():
        if tok == "S":
            out.append(("S",))
        elif tok.startswith("T^"):
            out.append(("T", int(tok[2:])))
        else:
            raise PreconditionError("word syntax", f"bad generator token {tok!r}")
    return tuple(out)


def apply_word(word, z: ExactPoint) -> ExactPoint:
    for w in word:
        z = mobius(S if w[0] == "S" else T(w[1]), z)
    return z


def _triple(z: ExactPoint) -> tuple[int, int, int]:
    x, y = z.re, z.im
    D = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
    return x.numerator * (D // x.denominator), y.numerator * (D // y.denominator), D


def _reduce_triple(X: int, Y: int, D: int, track: bool):
    """Reduce x + iy with x = X/D, y = Y/D.  Returns (X, Y, D, word, matrix tuple)."""
    word = []
    a, b, c, d = 1, 0, 0, 1
    while True:
        k = (2 * X + D) // (2 * D)
        if k:
            X -= k * D
            if track:
                word.append(("T", -k))
                a, b = a - k * c, b - k * d
        r = X * X + Y * Y
        DD = D * D
        if r < DD or (r == DD and X > 0):
            X, Y, D = -X * D, Y * D, r
            g = math.gcd(math.gcd(X, Y), D)
            if g > 1:
                X, Y, D = X // g, Y // g, D // g
            if track:
                word.append(("S",))
                a, b, c, d = -c, -d, a, b
        else:
            return X, Y, D, word, (a, b, c, d)


def reduce(z: ExactPoint) -> ReducedPoint:
    """Exact reduction into the fundamental domain, with the reducing word."""
    X, Y, D, word, g = _reduce_triple(*_triple(z), True)
    return ReducedPoint(ExactPoint(Fraction(X, D), Fraction(Y, D)), tuple(word), IntMatrix2(*g))


def reduced_coords(x: Fraction, y: Fraction) -> tuple[Fraction, Fraction]:
    """Reduced representative of x + iy as a pair of Fractions (no word)."""
    D = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
    X, Y, D, _, _ = _reduce_triple(x.numerator * (D // x.denominator), y.numerator * (D // y.denominator), D, False)
    return Fraction(X, D), Fraction(Y, D)


def height_xy(x: Fraction, y: Fraction) -> Fraction:
    return reduced_coords(x, y)[1]


def orbit_height(z: ExactPoint) -> Fraction:
    """max of Im(gamma z) over the modular group (attained at the reduced point)."""
    return height_xy(z.re, z.im)


def in_cusp_neighborhood(z: ExactPoint, Y) -> bool:
    """Whether the orbit of z meets {Im > Y}; the neighbourhood notion needs Y >= 1."""
    Y = Fraction(Y)
    if Y < 1:
        raise PreconditionError("Y >= 1", f"cusp neighbourhood needs Y >= 1, got {Y}")
    return orbit_height(z) > Y


def hyperbolic_distance(z: ExactPoint, w: ExactPoint) -> mpmath.mpf:
    """arccosh(1 + |z-w|^2 / (2 Im z Im w)); the argument is formed exactly."""
    arg = 1 + ((z.re - w.re) ** 2 + (z.im - w.im) ** 2) / (2 * z.im * w.im)
    with mpmath.workdps(40):
        return +mpmath.acosh(mpmath.mpf(arg.numerator) / arg.denominator)


# ---------------------------------------------------------------------------
# floating point, vectorised
# ---------------------------------------------------------------------------


def reduce_arrays(x: np.ndarray, y: np.ndarray, track: bool = False, max_iter: int = 10_000):
    """Vectorised float reduction.  With ``track`` also returns the integer
    matrices g (shape (N, 4), entries a, b, c, d) with g z = reduced z."""
    x = np.array(x, dtype=float, copy=True)
    y = np.array(y, dtype=float, copy=True)
    if track:
        g = np.zeros((x.size, 4), dtype=np.int64)
        g[:, 0] = 1
        g[:, 3] = 1
    active = np.arange(x.size)
    for _ in range(max_iter):
        if active.size == 0:
            break
        xa, ya = x[active], y[active]
        k = np.floor(xa + 0.5)
        xa = xa - k
        r = xa * xa + ya * ya
        flip = (r < 1.0) | ((r == 1.0) & (xa > 0))
        if track:
            ki = k.astype(np.int64)
            ga = g[active]
            ga[:, 0] -= ki * ga[:, 2]
            ga[:, 1] -= ki * ga[:, 3]
            fl = ga[flip]
            ga[flip] = np.stack([-fl[:, 2], -fl[:, 3], fl[:, 0], fl[:, 1]], axis=1)
            g[active] = ga
        xf, yf, rf = xa[flip], ya[flip], r[flip]
        xa[flip] = -xf / rf
        ya[flip] = yf / rf
        x[active], y[active] = xa, ya
        active = active[flip]
    else:
        raise RuntimeError("float reduction did not converge")
    return (x, y, g) if track else (x, y)


def mobius_arrays(g, x: np.ndarray, y: np.ndarray):
    """Apply a single matrix with positive determinant to arrays of points."""
    a, b, c, d = (float(v) for v in g)
    ux, uy = c * x + d, c * y
    norm = ux * ux + uy * uy
    det = a * d - b * c
    return ((a * x + b) * ux + a * y * uy) / norm, det * y / norm
