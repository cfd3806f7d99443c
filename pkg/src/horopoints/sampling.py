"""Horocycle sample sets R_n(x, y), their empirical means and excursion series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .errors import PreconditionError
from .hyperbolic import ExactPoint, reduced_coords
from .measures import Estimate, TestFunction, area_mean
from .numth import (
    PsiSchedule,
    Real,
    RInterval,
    as_interval,
    definitely_less,
    is_exact,
    real_to_json,
)
from .parallel import chunked, default_workers, pmap

# relative precision demanded of approximated translates and heights
_SLACK_BITS = 110


@dataclass(frozen=True)
class DecaySchedule:
    """y_n as a named family.

    ``power``: y_n = c n^-alpha.  ``log_power``: y_n = c n^-2 (log n)^-beta.
    ``custom``: explicit values.  Non-rational values are rounded once to a
    128-bit binary rational, and that rational *is* y_n from then on.
    """

    kind: str
    c: Fraction = Fraction(1)
    alpha: Fraction = Fraction(1)
    beta: Fraction = Fraction(1)
    values: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in ("power", "log_power", "custom"):
            raise PreconditionError("known schedule", f"unknown schedule {self.kind!r}")
        for name in ("c", "alpha", "beta"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.c <= 0:
            raise PreconditionError("c > 0", f"schedule constant {self.c}")

    def __call__(self, n: int) -> Fraction:
        if self.kind == "custom":
            return Fraction(dict(self.values)[n])
        if self.kind == "power" and self.alpha.denominator == 1:
            return self.c / Fraction(n) ** self.alpha.numerator
        if self.kind == "log_power" and n < 2:
            raise PreconditionError("n >= 2", "log schedule undefined at n = 1")
        with mpmath.workprec(128):
            if self.kind == "power":
                v = mpmath.mpf(n) ** (-mpmath.mpf(self.alpha.numerator) / self.alpha.denominator)
            else:
                b = mpmath.mpf(self.beta.numerator) / self.beta.denominator
                v = mpmath.mpf(n) ** -2 * mpmath.log(n) ** (-b)
            man, exp = v.man_exp
        return self.c * Fraction(man) * Fraction(2) ** exp

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "c": str(self.c)}
        if self.kind == "power":
            d["alpha"] = str(self.alpha)
        elif self.kind == "log_power":
            d["beta"] = str(self.beta)
        else:
            d["values"] = {str(k): str(v) for k, v in self.values}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DecaySchedule":
        vals = tuple(sorted((int(k), Fraction(v)) for k, v in d.get("values", {}).items()))
        return cls(d["kind"], Fraction(d.get("c", 1)), Fraction(d.get("alpha", 1)), Fraction(d.get("beta", 1)), vals)

    @classmethod
    def parse(cls, text: str) -> "DecaySchedule":
        """``power:c:alpha`` or ``logpow:c:beta``."""
        head, *args = text.split(":")
        if head == "power":
            return cls("power", Fraction(args[0]), Fraction(args[1]))
        if head == "logpow":
            return cls("log_power", Fraction(args[0]), beta=Fraction(args[1]))
        raise PreconditionError("schedule syntax", f"cannot parse {text!r}")


@dataclass(frozen=True)
class SampleSet:
    """R_n(x, y) or its primitive part.

    For rational x and y the points are exact.  Otherwise they are built
    from rational approximants and ``slack`` bounds the resulting relative
    error of every orbit height: the true height lies in
    [h (1 - slack), h (1 + 2 slack)].
    """

    n: int
    x: Real
    y: Real
    primitive_only: bool
    indices: tuple
    points: tuple
    slack: Fraction = Fraction(0)

    @property
    def exact(self) -> bool:
        return self.slack == 0

    def heights(self, workers: int | None = None) -> list[Fraction]:
        return _heights(self.points, workers)


def _approx(v: Real, rel: Fraction) -> tuple[Fraction, Fraction]:
    """Rational approximant of v with absolute error below rel * v."""
    if is_exact(v):
        return Fraction(v), Fraction(0)
    w = Fraction(1, 2**40)
    while True:
        e = v.enclosure(w)
        if e.lo > 0 and e.width <= e.lo * rel:
            val, err = v.approximant(e.width)
            return val, err
        w = e.lo * rel if e.lo > 0 else w / 2**40


def sample(n: int, x: Real, y: Real, primitive_only: bool = False) -> SampleSet:
    """Points x + j/n + iy for 0 <= j < n (only gcd(j, n) = 1 when primitive)."""
    if n < 1:
        raise PreconditionError("n >= 1", f"n={n}")
    y_iv = as_interval(y)
    if y_iv.lo <= 0:
        raise PreconditionError("y > 0", f"y={float(y_iv.mid)}")
    idx = tuple(j for j in range(n) if not primitive_only or math.gcd(j, n) == 1)
    rel = Fraction(1, 2**_SLACK_BITS)
    yt, ey = _approx(y, rel)
    xt, ex = Fraction(x) if is_exact(x) else None, Fraction(0)
    if xt is None:
        xt, ex = _approx_abs(x, (yt - ey) * rel)
    slack = (ex + ey) / (yt - ey) if (ex or ey) else Fraction(0)
    pts = tuple(ExactPoint(xt + Fraction(j, n), yt) for j in idx)
    return SampleSet(n, x, y, primitive_only, idx, pts, slack)


def _approx_abs(x: Real, width: Fraction) -> tuple[Fraction, Fraction]:
    return x.approximant(width)


def _height_chunk(chunk) -> list[Fraction]:
    return [reduced_coords(p.re, p.im)[1] for p in chunk]


def _heights(points: Sequence[ExactPoint], workers: int | None = None) -> list[Fraction]:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(points) < 2000:
        return _height_chunk(points)
    size = max(500, len(points) // (4 * workers))
    return [h for part in pmap(_height_chunk, chunked(list(points), size), workers) for h in part]


def height_enclosure(h: Fraction, slack: Fraction) -> RInterval:
    if not slack:
        return RInterval.point(h)
    return RInterval(h * (1 - slack), h * (1 + 2 * slack))


def min_orbit_height(s: SampleSet, workers: int | None = None) -> Fraction | RInterval:
    """Smallest orbit height over the set (an enclosure for approximated sets)."""
    h = min(s.heights(workers))
    return h if s.exact else height_enclosure(h, s.slack)


def empirical_mean(s: SampleSet, f: TestFunction, workers: int | None = None) -> Estimate:
    """Average of f over the points.

    For approximated sets a point whose height enclosure straddles a jump
    of f is indeterminate; it contributes 1/2 and adds 1/(2|s|) to the
    reported error.
    """
    npts = len(s.points)
    if f.height_based:
        total, undecided = Fraction(0), 0
        for h in s.heights(workers):
            v = f.of_height_interval(height_enclosure(h, s.slack))
            if v is None:
                undecided += 1
                total += Fraction(1, 2)
            else:
                total += Fraction(v) if not isinstance(v, float) else v
        value = float(total) / npts
        err = undecided / (2 * npts)
        tag = "exact" if (s.exact or f.kind != "smooth_band") and not undecided else f"interval±{err:.1e}"
        return Estimate(value, err, tag)
    from .measures import evaluate_xy

    vals = [evaluate_xy(f, p.re, p.im) for p in s.points]
    return Estimate(sum(vals) / npts, 0.0, "exact")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _log_ratio(h: float, n: int) -> float:
    return math.log(h) / math.log(math.log(n))


def excursion_radius(psi: PsiSchedule, n: int, y: Fraction) -> RInterval:
    """r_n = 1/2 min(psi(n)^-2 y_n, n^-2 y_n^-1)."""
    p = psi(n)
    a = y / (p * p)
    b = RInterval.point(1 / (Fraction(n * n) * y))
    lo = min(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    return RInterval(lo / 2, hi / 2)


def excursion_series(
    x: Real,
    schedule: DecaySchedule,
    N: int,
    psi: Optional[PsiSchedule] = None,
    ns: Optional[Sequence[int]] = None,
    workers: int | None = None,
) -> list[dict]:
    """Per-n minimal orbit height of R_n(x, y_n) and log h / log log n.

    An n is flagged when some m coprime to n has |x - m/n| < y_n and
    Y_n = 1/(2 n^2 y_n) >= 1; the horoball lemma then predicts
    min height > Y_n, and ``verified`` reports whether that held.  With
    ``psi``, witnesses of psi-approximability also get r_n and a check
    of min height > r_n.
    """
    if N < 3:
        raise PreconditionError("N >= 3", f"N={N}")
    ns = list(range(3, N + 1)) if ns is None else list(ns)
    out = []
    for n in ns:
        y = schedule(n)
        s = sample(n, x, y)
        h = min_orbit_height(s, workers)
        h_lo = h.lo if isinstance(h, RInterval) else h
        rec = {
            "n": n,
            "y": y,
            "min_height": h,
            "ratio": _log_ratio(float(h_lo), n),
            "flagged": False,
            "predicted": None,
            "verified": None,
        }
        Yn = 1 / (2 * n * n * y)
        if Yn >= 1:
            x_iv = as_interval(x)
            m0 = math.floor(x_iv.mid * n + Fraction(1, 2))
            for m in (m0 - 1, m0, m0 + 1):
                if math.gcd(m, n) == 1 and definitely_less((x_iv - Fraction(m, n)).abs(), y):
                    rec["flagged"] = True
                    rec["predicted"] = Yn
                    rec["verified"] = definitely_less(Yn, h)
                    break
        if psi is not None:
            from .numth import is_primitive_psi_approximable_upto

            if is_primitive_psi_approximable_upto(x, psi, n, n_min=n):
                r = excursion_radius(psi, n, y)
                rec["r_n"] = r
                rec["r_verified"] = definitely_less(r, h)
        out.append(rec)
    return out


def geometric_ns(N: int, ratio: float = 2.0, start: int = 1) -> list[int]:
    """Sorted distinct ceil(ratio^k) in [start, N]."""
    out, k = set(), 0
    while True:
        v = math.ceil(ratio**k)
        if v > N:
            break
        if v >= start:
            out.add(v)
        k += 1
    return sorted(out)


def horocycle_discrepancy_curve(
    x: Real,
    schedule: DecaySchedule,
    N: int,
    f: TestFunction,
    ratio: float = 2.0,
    start: int = 2,
    workers: int | None = None,
) -> list[tuple[int, float]]:
    """(n, |empirical mean - area mean|) along a geometric subsequence."""
    ref = float(area_mean(f))
    out = []
    for n in geometric_ns(N, ratio, start):
        est = empirical_mean(sample(n, x, schedule(n)), f, workers)
        out.append((n, abs(float(est) - ref)))
    return out


def record_row(s: SampleSet, f: TestFunction, empirical: Estimate, reference: float, flags: str = "") -> dict:
    """Row in the sampling CSV schema."""
    return {
        "n": s.n,
        "x": real_to_json(s.x) if is_exact(s.x) else str(s.x),
        "y": str(s.y),
        "f_spec": f.spec(),
        "empirical": float(empirical),
        "reference": float(reference),
        "abs_error": abs(float(empirical) - float(reference)),
        "flags": flags,
    }
