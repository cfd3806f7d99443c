"""Elementary number theory, continued fractions and rigorous real enclosures.

Rationals are :class:`fractions.Fraction` throughout.  Irrational inputs are
described by continued-fraction digit rules (:class:`CFReal`) and every
comparison involving them goes through :class:`RInterval`, a closed interval
with exact rational endpoints.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence, Union

from mpmath import iv
from mpmath.libmp import to_rational

from .errors import IndeterminateError, PreconditionError

Number = Union[int, Fraction]

# ---------------------------------------------------------------------------
# integers
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation of ``n >= 1`` as ((p, e), ...) with p ascending."""
    if n < 1:
        raise PreconditionError("n >= 1", f"cannot factor {n}")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factorize(n)]


def euler_phi(n: int) -> int:
    """Order of the unit group of Z/nZ."""
    result = n
    for p, _ in factorize(n):
        result -= result // p
    return result


def divisors(n: int) -> list[int]:
    """Positive divisors of ``n`` in ascending order."""
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


def moebius_mu(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def sigma(n: int, k: int = 1) -> int:
    return sum(d**k for d in divisors(n))


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def inv_mod(a: int, m: int) -> int:
    """Inverse of ``a`` modulo ``m`` in [0, m).  Modulo 1 the answer is 0."""
    if m == 1:
        return 0
    g, s, _ = ext_gcd(a % m, m)
    if g != 1:
        raise PreconditionError("gcd(a, m) = 1", f"{a} is not invertible mod {m}")
    return s % m


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


# ---------------------------------------------------------------------------
# rigorous intervals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RInterval:
    """Closed interval [lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @staticmethod
    def point(v: Number) -> "RInterval":
        v = Fraction(v)
        return RInterval(v, v)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def exact(self) -> bool:
        return self.lo == self.hi

    def __float__(self) -> float:
        return float(self.mid)

    def __add__(self, other) -> "RInterval":
        o = as_interval(other)
        return RInterval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "RInterval":
        return RInterval(-self.hi, -self.lo)

    def __sub__(self, other) -> "RInterval":
        return self + (-as_interval(other))

    def __rsub__(self, other) -> "RInterval":
        return as_interval(other) - self

    def __mul__(self, other) -> "RInterval":
        o = as_interval(other)
        c = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return RInterval(min(c), max(c))

    __rmul__ = __mul__

    def reciprocal(self) -> "RInterval":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("interval contains 0")
        return RInterval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other) -> "RInterval":
        return self * as_interval(other).reciprocal()

    def __rtruediv__(self, other) -> "RInterval":
        return as_interval(other) * self.reciprocal()

    def abs(self) -> "RInterval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RInterval(Fraction(0), max(-self.lo, self.hi))


def as_interval(v) -> RInterval:
    if isinstance(v, RInterval):
        return v
    if hasattr(v, "enclosure"):
        return v.enclosure(Fraction(1, 2**200))
    return RInterval.point(v)


def definitely_less(a, b) -> bool | None:
    """True if a < b for every value in the enclosures, False if a >= b for all, else None."""
    a, b = as_interval(a), as_interval(b)
    if a.hi < b.lo:
        return True
    if a.lo >= b.hi:
        return False
    return None


@contextmanager
def _ivprec(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def _iv_to_interval(v) -> RInterval:
    lo, hi = v._mpi_
    return RInterval(Fraction(*to_rational(lo)), Fraction(*to_rational(hi)))


@lru_cache(maxsize=65536)
def log_interval(n: int) -> RInterval:
    """Rigorous enclosure of log(n) at 200 bits."""
    with _ivprec(200):
        return _iv_to_interval(iv.log(iv.mpf(n)))


def power_interval(n: int, exponent: Fraction) -> RInterval:
    """Rigorous enclosure of n**exponent for rational exponent."""
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        return RInterval.point(Fraction(n) ** exponent.numerator)
    with _ivprec(200):
        e = iv.mpf(exponent.numerator) / exponent.denominator
        return _iv_to_interval(iv.exp(e * iv.log(iv.mpf(n))))


# ---------------------------------------------------------------------------
# continued fractions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuedFraction:
    a0: int
    partials: tuple[int, ...]
    convergents: tuple[Fraction, ...] = field(default=())

    def value(self) -> Fraction:
        return from_partials(self.a0, self.partials)


def _convergents(a0: int, partials: Sequence[int]) -> list[Fraction]:
    p0, q0, p1, q1 = 1, 0, a0, 1
    out = [Fraction(a0)]
    for a in partials:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(Fraction(p1, q1))
    return out


def continued_fraction(x: Number) -> ContinuedFraction:
    """Canonical expansion of a rational (last partial quotient >= 2)."""
    x = Fraction(x)
    p, q = x.numerator, x.denominator
    a0, r = divmod(p, q)
    partials = []
    p, q = q, r
    while q:
        a, r = divmod(p, q)
        partials.append(a)
        p, q = q, r
    # Euclid already ends with a partial >= 2 when any partials exist
    return ContinuedFraction(a0, tuple(partials), tuple(_convergents(a0, partials)))


def from_partials(a0: int, partials: Sequence[int]) -> Fraction:
    v = Fraction(0)
    for a in reversed(partials):
        v = 1 / (a + v)
    return a0 + v


PRESETS: dict[str, dict] = {
    "golden": {"a0": 0, "prefix": [], "period": [1]},
    "sqrt2m1": {"a0": 0, "prefix": [], "period": [2]},
    "inv_sqrt5": {"a0": 0, "prefix": [2], "period": [4]},
    "liouville": {"a0": 0, "prefix": [], "growth": {"kappa": "3/2", "const": "1"}},
    "exponent2": {"a0": 0, "prefix": [], "growth": {"kappa": "2", "const": "1"}},
}


class CFReal:
    """Irrational number given by its continued-fraction digits.

    The tail after ``prefix`` is either periodic or follows a growth rule
    a_{k+1} = max(1, floor(const * q_k ** (kappa - 1))), which yields an
    irrational with Diophantine exponent ``kappa``.
    """

    def __init__(
        self,
        a0: int = 0,
        prefix: Sequence[int] = (),
        period: Sequence[int] | None = None,
        growth: tuple[Fraction, Fraction] | None = None,
        name: str | None = None,
    ) -> None:
        if (period is None) == (growth is None):
            raise PreconditionError("tail rule", "give exactly one of period / growth")
        if period is not None and (not period or min(period) < 1):
            raise PreconditionError("tail rule", "period must be non-empty positive digits")
        if any(a < 1 for a in prefix):
            raise PreconditionError("tail rule", "partial quotients must be positive")
        if growth is not None:
            growth = (Fraction(growth[0]), Fraction(growth[1]))
            if growth[0] < 1 or growth[1] <= 0:
                raise PreconditionError("tail rule", "growth needs kappa >= 1, const > 0")
        self.a0 = int(a0)
        self.prefix = tuple(int(a) for a in prefix)
        self.period = tuple(int(a) for a in period) if period is not None else None
        self.growth = growth
        self.name = name
        self._digits: list[int] = []
        self._p = [1, self.a0]  # p_{-1}, p_0
        self._q = [0, 1]

    # digits ------------------------------------------------------------

    def _next_digit(self) -> int:
        k = len(self._digits)  # index of the digit being produced (a_{k+1})
        if k < len(self.prefix):
            return self.prefix[k]
        if self.period is not None:
            return self.period[(k - len(self.prefix)) % len(self.period)]
        kappa, const = self.growth
        q = self._q[-1]
        # floor(const * q**(kappa-1)) in integer arithmetic
        e = kappa - 1
        num = const.numerator**e.denominator * q**e.numerator
        den = const.denominator**e.denominator
        return max(1, iroot(num // den, e.denominator))

    def _extend(self, k: int) -> None:
        while len(self._digits) < k:
            a = self._next_digit()
            self._digits.append(a)
            self._p.append(a * self._p[-1] + self._p[-2])
            self._q.append(a * self._q[-1] + self._q[-2])

    def partials(self, k: int) -> list[int]:
        self._extend(k)
        return self._digits[:k]

    def convergent(self, k: int) -> Fraction:
        """p_k / q_k, with k = 0 the integer part."""
        self._extend(k)
        return Fraction(self._p[k + 1], self._q[k + 1])

    def convergents_upto(self, qmax: int) -> Iterator[Fraction]:
        k = 0
        while True:
            c = self.convergent(k)
            if c.denominator > qmax:
                return
            yield c
            k += 1

    def enclosure(self, width: Fraction) -> RInterval:
        """Interval between consecutive convergents, narrower than ``width``."""
        k = 0
        while True:
            self._extend(k + 1)
            if Fraction(1, self._q[k + 1] * self._q[k + 2]) <= width:
                a, b = self.convergent(k), self.convergent(k + 1)
                return RInterval(min(a, b), max(a, b))
            k += 1

    def approximant(self, width: Fraction) -> tuple[Fraction, Fraction]:
        """A convergent within ``width`` of the number, and that error bound."""
        iv_ = self.enclosure(width)
        k = 0
        while self.convergent(k + 1) not in (iv_.lo, iv_.hi):
            k += 1
        return self.convergent(k), iv_.width

    def __float__(self) -> float:
        return float(self.enclosure(Fraction(1, 2**80)).mid)

    def scaled(self, factor: Number) -> "ScaledReal":
        return ScaledReal(self, Fraction(factor))

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {"a0": self.a0, "prefix": list(self.prefix)}
        if self.period is not None:
            d["period"] = list(self.period)
        else:
            d["growth"] = {"kappa": str(self.growth[0]), "const": str(self.growth[1])}
        if self.name:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CFReal":
        g = d.get("growth")
        return cls(
            d.get("a0", 0),
            d.get("prefix", ()),
            d.get("period"),
            (Fraction(g["kappa"]), Fraction(g["const"])) if g else None,
            d.get("name"),
        )

    @classmethod
    def preset(cls, name: str) -> "CFReal":
        if name not in PRESETS:
            raise PreconditionError("known preset", f"unknown CF preset {name!r}")
        return cls.from_dict({**PRESETS[name], "name": name})

    def __repr__(self) -> str:
        return f"CFReal({self.to_dict()})"

    def __str__(self) -> str:
        if self.name:
            return f"cf:{self.name}"
        head = ",".join(str(a) for a in self.prefix)
        if self.period is not None:
            return f"cf:{self.a0};{head}|{','.join(map(str, self.period))}"
        return f"cf:{self.a0};{head}|growth:{self.growth[0]}:{self.growth[1]}"


class ScaledReal:
    """A rational multiple of a :class:`CFReal` (for instance c / n^2)."""

    def __init__(self, base: CFReal, factor: Fraction) -> None:
        if factor <= 0:
            raise PreconditionError("factor > 0", f"factor {factor}")
        self.base = base
        self.factor = Fraction(factor)

    def enclosure(self, width: Fraction) -> RInterval:
        e = self.base.enclosure(width / self.factor)
        return RInterval(e.lo * self.factor, e.hi * self.factor)

    def approximant(self, width: Fraction) -> tuple[Fraction, Fraction]:
        v, err = self.base.approximant(width / self.factor)
        return v * self.factor, err * self.factor

    def __float__(self) -> float:
        return float(self.base) * float(self.factor)

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "factor": str(self.factor)}

    def __str__(self) -> str:
        return f"{self.factor}*{self.base}"


Real = Union[int, Fraction, CFReal, ScaledReal]


def parse_real(text: str) -> Real:
    """Parse "p/q", a decimal, "cf:<preset>" or "cf:a0;a1,a2|p1,p2"."""
    text = text.strip()
    if not text.startswith("cf:"):
        return Fraction(text)
    body = text[3:]
    if body in PRESETS:
        return CFReal.preset(body)
    head, _, tail = body.partition("|")
    a0_s, _, pre_s = head.partition(";")
    prefix = [int(t) for t in pre_s.split(",") if t]
    if tail.startswith("growth:"):
        _, kappa, const = tail.split(":")
        return CFReal(int(a0_s), prefix, growth=(Fraction(kappa), Fraction(const)))
    return CFReal(int(a0_s), prefix, period=[int(t) for t in tail.split(",") if t])


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def real_to_json(x: Real):
    return x.to_dict() if hasattr(x, "to_dict") else str(Fraction(x))


def real_from_json(v) -> Real:
    if isinstance(v, dict):
        if "base" in v:
            return ScaledReal(CFReal.from_dict(v["base"]), Fraction(v["factor"]))
        return CFReal.from_dict(v)
    return Fraction(v)


def max_partial_quotient(x: Real, k: int) -> int:
    """Largest of the first ``k`` partial quotients (bounded-type diagnostics)."""
    if isinstance(x, CFReal):
        return max(x.partials(k))
    parts = continued_fraction(x).partials[:k]
    return max(parts) if parts else 0


# ---------------------------------------------------------------------------
# approximation schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiSchedule:
    """Named approximation function psi(n), evaluated as rigorous intervals.

    kinds: ``power`` (psi = n^-kappa), ``c_over_n`` (psi = c/n) and
    ``inv_n_log_n`` (psi = 1/(n log n), defined from n = 3 on).
    """

    kind: str
    kappa: Fraction = Fraction(1)
    c: Fraction | CFReal = Fraction(1)

    def __post_init__(self) -> None:
        if self.kind not in ("power", "c_over_n", "inv_n_log_n"):
            raise PreconditionError("known psi family", f"unknown psi kind {self.kind!r}")

    @property
    def start(self) -> int:
        return 3 if self.kind == "inv_n_log_n" else 1

    def __call__(self, n: int) -> RInterval:
        if n < self.start:
            raise PreconditionError("psi domain", f"{self.kind} undefined at n={n}")
        if self.kind == "power":
            return power_interval(n, -Fraction(self.kappa))
        if self.kind == "c_over_n":
            return as_interval(self.c) / n
        return (log_interval(n) * n).reciprocal()

    def approx(self, n: int) -> float:
        if self.kind == "power":
            return n ** -float(self.kappa)
        if self.kind == "c_over_n":
            return float(self.c) / n
        return 1.0 / (n * math.log(n))

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "power":
            d["kappa"] = str(self.kappa)
        if self.kind == "c_over_n":
            d["c"] = real_to_json(self.c)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PsiSchedule":
        return cls(
            d["kind"],
            Fraction(d.get("kappa", 1)),
            real_from_json(d.get("c", "1")),
        )


def _distance(x: Real | RInterval, m: int, n: int) -> RInterval:
    if isinstance(x, RInterval):
        return (x - Fraction(m, n)).abs()
    return RInterval.point(abs(Fraction(x) - Fraction(m, n)))


def is_primitive_psi_approximable_upto(
    x: Real, psi: PsiSchedule, N: int, n_min: int | None = None
) -> list[tuple[int, int]]:
    """All witnesses (n, m), n <= N, with gcd(m, n) = 1 and |x - m/n| < psi(n)/n.

    Every denominator in [n_min, N] is scanned; since psi < 1/2 the only
    candidate numerator is the integer nearest to n*x.
    """
    lo = psi.start if n_min is None else max(n_min, psi.start)
    half = Fraction(1, 2)
    out = []
    x_iv = x.enclosure(Fraction(1, 2**64 * N * N)) if isinstance(x, CFReal) else None
    centre = x_iv.mid if x_iv is not None else Fraction(x)
    fx = float(centre - math.floor(centre))
    shift = math.floor(centre)
    for n in range(lo, N + 1):
        approx = psi.approx(n)
        if not 0 < approx < 0.5:
            raise PreconditionError("psi(n) in (0, 1/2)", f"psi({n}) = {approx:.6g}")
        m0 = math.floor(fx * n + 0.5)
        cands = [m for m in (m0 - 1, m0, m0 + 1) if abs(fx - m / n) <= 1.001 * approx / n + 1e-12]
        if not cands:
            continue
        bound = psi(n)
        if not (bound.lo > 0 and bound.hi < half):
            raise PreconditionError("psi(n) in (0, 1/2)", f"psi({n}) = {float(bound):.6g}")
        for m in (c + shift * n for c in cands):
            if math.gcd(m, n) != 1:
                continue
            verdict = definitely_less(_distance(x_iv or x, m, n), bound / n)
            if verdict is None:
                raise IndeterminateError(f"witness test undecided at n={n}, m={m}")
            if verdict:
                out.append((n, m))
    return out


def witnesses_bruteforce(x: Fraction, psi_value, N: int) -> list[tuple[int, int]]:
    """Double loop over all m, n <= N for rational x; ``psi_value`` maps n to a Fraction."""
    x = Fraction(x)
    p, q = x.numerator, x.denominator
    out = []
    for n in range(1, N + 1):
        bound = Fraction(psi_value(n))
        a, b = bound.numerator, bound.denominator
        for m in range(n * math.floor(x) - n, n * math.ceil(x) + n + 1):
            # |p/q - m/n| < a/(b n)  <=>  |p n - m q| b < a q
            if math.gcd(m, n) == 1 and abs(p * n - m * q) * b < a * q:
                out.append((n, m))
    return out
