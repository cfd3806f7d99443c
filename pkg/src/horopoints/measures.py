"""Test functions on the modular surface and the reference measures.

Height-based test functions (bands, cusp indicators, tapered bands) are
functions of the orbit height, so they are evaluated exactly on rational
points.  Disk indicators use the hyperbolic distance on the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import PreconditionError, QuadratureError
from .hyperbolic import (
    ExactPoint,
    mobius_arrays,
    reduce,
    reduce_arrays,
    reduced_coords,
)
from .numth import CFReal, RInterval, as_interval, divisors, euler_phi

THREE_OVER_PI = 3.0 / math.pi


class Estimate(float):
    """A float carrying an error estimate and a provenance tag."""

    error: float
    provenance: str

    def __new__(cls, value: float, error: float = 0.0, provenance: str = "exact"):
        obj = super().__new__(cls, value)
        obj.error = float(error)
        obj.provenance = provenance
        return obj

    def to_dict(self) -> dict:
        return {"value": float(self), "error_estimate": self.error, "provenance": self.provenance}


def _taper(t: float) -> float:
    if t <= 0:
        return 0.0
    if t >= 1:
        return 1.0
    return t * t * (3 - 2 * t)


# candidate matrices for distances on the surface: entries bounded by 3, one per +-pair
def _small_matrices(bound: int = 3) -> np.ndarray:
    out = []
    rng = range(-bound, bound + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for d in rng:
                    if a * d - b * c != 1:
                        continue
                    if (c, d) < (0, 0) or (c == 0 and d < 0):
                        continue
                    out.append((a, b, c, d))
    return np.array(out, dtype=float)


_CANDIDATES = _small_matrices()


@dataclass(frozen=True)
class TestFunction:
    """kinds: height_band, cusp_indicator, disk_indicator, smooth_band, constant."""

    __test__ = False  # keep pytest from collecting this class

    kind: str
    Y: Fraction = Fraction(1)
    Y2: Fraction = Fraction(0)
    taper: Fraction = Fraction(0)
    center: Optional[ExactPoint] = None
    radius: float = 0.0
    value: Fraction = Fraction(1)
    _center_reduced: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        for name in ("Y", "Y2", "taper", "value"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        k = self.kind
        if k == "height_band":
            if not 1 <= self.Y < self.Y2:
                raise PreconditionError("1 <= Y < Y'", f"bad band ({self.Y}, {self.Y2}]")
        elif k == "cusp_indicator":
            if self.Y < 1:
                raise PreconditionError("Y >= 1", f"cusp indicator needs Y >= 1, got {self.Y}")
        elif k == "smooth_band":
            if not (1 <= self.Y and self.Y + 2 * self.taper <= self.Y2 and self.taper > 0):
                raise PreconditionError("1 <= Y, Y + 2 taper <= Y', taper > 0", "bad smooth band")
        elif k == "disk_indicator":
            if self.center is None or not 0 < self.radius <= 1:
                raise PreconditionError("0 < radius <= 1", "disk needs a centre and radius in (0, 1]")
            cr = reduce(self.center).point
            if cr.im > 3:
                raise PreconditionError("centre height <= 3", "disk centre too deep in the cusp")
            object.__setattr__(self, "_center_reduced", (float(cr.re), float(cr.im)))
        elif k != "constant":
            raise PreconditionError("known kind", f"unknown test function kind {k!r}")

    # ---------------------------------------------------------------- io

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        """``band:Y:Y'``, ``cusp:Y``, ``disk:re:im:radius``, ``smooth:Y:Y':taper``, ``const:c``."""
        head, *args = text.split(":")
        try:
            if head == "band":
                return cls("height_band", Fraction(args[0]), Fraction(args[1]))
            if head == "cusp":
                return cls("cusp_indicator", Fraction(args[0]))
            if head == "disk":
                return cls("disk_indicator", center=ExactPoint(Fraction(args[0]), Fraction(args[1])), radius=float(args[2]))
            if head == "smooth":
                return cls("smooth_band", Fraction(args[0]), Fraction(args[1]), Fraction(args[2]))
            if head == "const":
                return cls("constant", value=Fraction(args[0]))
        except (IndexError, ValueError) as exc:
            raise PreconditionError("test function syntax", f"cannot parse {text!r}") from exc
        raise PreconditionError("test function syntax", f"cannot parse {text!r}")

    def spec(self) -> str:
        k = self.kind
        if k == "height_band":
            return f"band:{self.Y}:{self.Y2}"
        if k == "cusp_indicator":
            return f"cusp:{self.Y}"
        if k == "disk_indicator":
            return f"disk:{self.center.re}:{self.center.im}:{self.radius}"
        if k == "smooth_band":
            return f"smooth:{self.Y}:{self.Y2}:{self.taper}"
        return f"const:{self.value}"

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind in ("height_band", "cusp_indicator", "smooth_band"):
            d["Y"] = str(self.Y)
        if self.kind in ("height_band", "smooth_band"):
            d["Y_prime"] = str(self.Y2)
        if self.kind == "smooth_band":
            d["taper"] = str(self.taper)
        if self.kind == "disk_indicator":
            d["center"] = self.center.to_dict()
            d["radius"] = self.radius
        if self.kind == "constant":
            d["value"] = str(self.value)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunction":
        center = ExactPoint.from_dict(d["center"]) if "center" in d else None
        return cls(
            d["kind"],
            Fraction(d.get("Y", 1)),
            Fraction(d.get("Y_prime", 0)),
            Fraction(d.get("taper", 0)),
            center,
            float(d.get("radius", 0.0)),
            Fraction(d.get("value", 1)),
        )

    # ---------------------------------------------------------- evaluation

    @property
    def height_based(self) -> bool:
        return self.kind in ("height_band", "cusp_indicator", "smooth_band", "constant")

    @property
    def is_indicator(self) -> bool:
        return self.kind in ("height_band", "cusp_indicator", "disk_indicator")

    def of_height(self, h):
        """Value as a function of the orbit height (height-based kinds only)."""
        k = self.kind
        if k == "height_band":
            return 1 if self.Y < h <= self.Y2 else 0
        if k == "cusp_indicator":
            return 1 if h > self.Y else 0
        if k == "smooth_band":
            t = float(self.taper)
            return _taper((float(h) - float(self.Y)) / t) * _taper((float(self.Y2) - float(h)) / t)
        if k == "constant":
            return self.value
        raise TypeError(f"{k} is not a function of height")

    def of_height_interval(self, iv: RInterval):
        """Value on a height enclosure, or None when the enclosure straddles a jump."""
        if iv.exact:
            return self.of_height(iv.lo)
        if self.kind in ("height_band", "cusp_indicator"):
            lo, hi = self.of_height(iv.lo), self.of_height(iv.hi)
            inside_jumps = [j for j in self._jumps() if iv.lo <= j <= iv.hi]
            return lo if not inside_jumps and lo == hi else None
        return self.of_height(iv.mid)

    def _jumps(self):
        if self.kind == "height_band":
            return (self.Y, self.Y2)
        return (self.Y,)

    def of_reduced(self, x: float, y: float) -> float:
        """Disk indicator on a reduced point given in floats."""
        cx, cy = self._center_reduced
        gx, gy = mobius_arrays_all(x, y)
        arg = 1 + ((gx - cx) ** 2 + (gy - cy) ** 2) / (2 * gy * cy)
        return 1 if float(np.min(arg)) <= math.cosh(self.radius) else 0

    def evaluate_arrays(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation (Monte-Carlo use)."""
        rx, ry = reduce_arrays(x, y)
        k = self.kind
        if k == "height_band":
            return ((ry > float(self.Y)) & (ry <= float(self.Y2))).astype(float)
        if k == "cusp_indicator":
            return (ry > float(self.Y)).astype(float)
        if k == "smooth_band":
            t = float(self.taper)
            a = np.clip((ry - float(self.Y)) / t, 0, 1)
            b = np.clip((float(self.Y2) - ry) / t, 0, 1)
            return a * a * (3 - 2 * a) * b * b * (3 - 2 * b)
        if k == "constant":
            return np.full(rx.shape, float(self.value))
        cx, cy = self._center_reduced
        thr = math.cosh(self.radius)
        out = np.zeros(rx.shape)
        for g in _CANDIDATES:
            gx, gy = mobius_arrays(g, rx, ry)
            arg = 1 + ((gx - cx) ** 2 + (gy - cy) ** 2) / (2 * gy * cy)
            out = np.maximum(out, (arg <= thr).astype(float))
        return out


def mobius_arrays_all(x: float, y: float):
    a, b, c, d = _CANDIDATES.T
    ux, uy = c * x + d, c * y
    norm = ux * ux + uy * uy
    return ((a * x + b) * ux + a * y * uy) / norm, y / norm


def evaluate(f: TestFunction, z: ExactPoint):
    """f at the reduced representative of z; indicators return 0 or 1 exactly."""
    if f.height_based:
        return f.of_height(reduced_coords(z.re, z.im)[1])
    x, y = reduced_coords(z.re, z.im)
    return f.of_reduced(float(x), float(y))


def evaluate_xy(f: TestFunction, x: Fraction, y: Fraction):
    if f.height_based:
        return f.of_height(reduced_coords(x, y)[1])
    rx, ry = reduced_coords(x, y)
    return f.of_reduced(float(rx), float(ry))


# ---------------------------------------------------------------------------
# hyperbolic area
# ---------------------------------------------------------------------------


def _disk_profile(f: TestFunction, x: float) -> float:
    """integral of dy / y^2 over {y >= sqrt(1 - x^2)} meeting the disk's orbit."""
    cx, cy = f._center_reduced
    floor_y = math.sqrt(1 - x * x)
    ch, sh = math.cosh(f.radius), math.sinh(f.radius)
    gx, gy = mobius_arrays_all(cx, cy)
    intervals = []
    for u, v in zip(gx, gy):
        # hyperbolic disk = euclidean disk centre (u, v ch), radius v sh
        R, h = v * sh, v * ch
        dx = x - u
        if abs(dx) >= R:
            continue
        s = math.sqrt(R * R - dx * dx)
        lo, hi = max(h - s, floor_y), h + s
        if hi > lo:
            intervals.append((lo, hi))
    intervals.sort()
    total, cur_lo, cur_hi = 0.0, None, None
    for lo, hi in intervals:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += 1 / cur_lo - 1 / cur_hi
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += 1 / cur_lo - 1 / cur_hi
    return total


def area_mean(f: TestFunction, tol: float = 1e-8) -> Estimate:
    """mu_M(f), exact for bands and cusp indicators, quadrature otherwise."""
    k = f.kind
    if k == "height_band":
        return Estimate(THREE_OVER_PI * float(1 / f.Y - 1 / f.Y2), 0.0, "exact")
    if k == "cusp_indicator":
        return Estimate(THREE_OVER_PI * float(1 / f.Y), 0.0, "exact")
    if k == "constant":
        return Estimate(float(f.value), 0.0, "exact")
    if k == "smooth_band":
        val, err = integrate.quad(lambda y: f.of_height(y) / (y * y), float(f.Y), float(f.Y2), epsabs=tol / 10, limit=200)
    else:
        val, err = integrate.quad(lambda x: _disk_profile(f, x), -0.5, 0.5, epsabs=tol / 10, limit=400)
    val, err = THREE_OVER_PI * val, THREE_OVER_PI * err
    if err > tol:
        raise QuadratureError(f"quadrature error {err:.3g} above tolerance {tol:.3g}")
    return Estimate(val, err, f"quadrature±{err:.1e}")


# ---------------------------------------------------------------------------
# horocycle and nu measures
# ---------------------------------------------------------------------------


def horocycle_mean(f: TestFunction, Y, grid: int) -> float:
    """Midpoint-rule average of f along the closed horocycle at height Y."""
    if grid < 1:
        raise PreconditionError("grid >= 1", f"grid={grid}")
    Y = Fraction(Y)
    total = 0
    for g in range(grid):
        total += evaluate_xy(f, Fraction(2 * g + 1, 2 * grid), Y)
    return float(total) / grid


def nu_weights(m: int) -> list[tuple[int, Fraction]]:
    """(d, phi(m/d)/m) for each divisor d of m."""
    return [(d, Fraction(euler_phi(m // d), m)) for d in divisors(m)]


def nu_mean(m: int, Y, f: TestFunction, grid: int = 4096) -> float:
    """Mean of f against the mixture (1/m) sum_{d | m} phi(m/d) mu_{d^2 Y}."""
    if m < 1:
        raise PreconditionError("m >= 1", f"m={m}")
    Y = Fraction(Y)
    return float(sum(w * Fraction(horocycle_mean(f, d * d * Y, grid)) for d, w in nu_weights(m)))


# ---------------------------------------------------------------------------
# the set E_c
# ---------------------------------------------------------------------------

_INV_SQRT5_LO = Fraction(4472135, 10**7)  # below 1/sqrt(5)


def _ec_bands(c) -> list[tuple[RInterval, Optional[RInterval]]]:
    ci = as_interval(c)
    return [
        (1 / (2 * ci), 1 / ci),
        (2 / ci, 4 / ci),
        (9 / (2 * ci), None),
    ]


def orbit_imaginary_parts(x: Fraction, y: Fraction, floor: Fraction) -> list[Fraction]:
    """All Im(gamma z) >= floor for a reduced point z = x + iy, one per coset."""
    out = []
    cmax = math.isqrt(int(1 / (floor * y))) + 1
    for cc in range(0, cmax + 1):
        if cc == 0:
            cands = [1]
        else:
            # need (cc x + d)^2 <= y / floor - cc^2 y^2
            span = y / floor - cc * cc * y * y
            if span < 0:
                continue
            s = math.isqrt(int(span)) + 1
            centre = math.floor(-cc * x)
            cands = range(centre - s - 1, centre + s + 2)
        for d in cands:
            if math.gcd(cc, d) != 1:
                continue
            v = y / ((cc * x + d) ** 2 + cc * cc * y * y)
            if v >= floor:
                out.append(v)
    return out


def in_Ec(z: ExactPoint, c, slack: Fraction = Fraction(0)) -> bool | None:
    """Whether some modular translate of z has imaginary part in one of the
    closed bands [1/(2c), 1/c], [2/c, 4/c], [9/(2c), oo).

    ``slack`` is a relative uncertainty on the point's orbit values (for
    approximated inputs); the answer is None when it cannot be decided.
    """
    ci = as_interval(c)
    if ci.lo < _INV_SQRT5_LO or ci.hi >= Fraction(3, 2):
        raise PreconditionError("c in [1/sqrt5, 3/2)", f"c = {float(ci.mid):.6g}")
    x, y = reduced_coords(z.re, z.im)
    bands = _ec_bands(ci)
    floor = bands[0][0].lo * (1 - 2 * slack) / 2 if slack else bands[0][0].lo
    undecided = False
    for v in orbit_imaginary_parts(x, y, floor):
        v_iv = RInterval(v * (1 - slack), v * (1 + 2 * slack)) if slack else RInterval.point(v)
        for lo, hi in bands:
            inside = v_iv.lo >= lo.hi and (hi is None or v_iv.hi <= hi.lo)
            outside = v_iv.hi < lo.lo or (hi is not None and v_iv.lo > hi.hi)
            if inside:
                return True
            if not outside:
                undecided = True
    return None if undecided else False


def in_Ec_arrays(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Float version of :func:`in_Ec` for Monte Carlo, valid for c < 3/2."""
    rx, ry = reduce_arrays(x, y)

    def hit(v):
        return ((v >= 1 / (2 * c)) & (v <= 1 / c)) | ((v >= 2 / c) & (v <= 4 / c)) | (v >= 9 / (2 * c))

    out = hit(ry)
    # on the reduced domain only |c'| <= 1 can reach 1/(2c) when c < 3/2
    for d in range(-3, 4):
        v = ry / ((rx + d) ** 2 + ry * ry)
        out |= hit(v)
    return out


def ec_area_bound(c: float) -> float:
    """Upper bound 1 - (3/pi)(1/max(2c, 4/c) - 2c/9) for the area of E_c."""
    return 1 - THREE_OVER_PI * (1 / max(2 * c, 4 / c) - 2 * c / 9)


# ---------------------------------------------------------------------------
# Monte Carlo over the fundamental domain
# ---------------------------------------------------------------------------


def sample_fundamental_domain(rng: np.random.Generator, size: int, v_range=(0.0, 1.0)):
    """Exact draws from mu_M restricted to the standard fundamental domain.

    x has density (3/pi)(1 - x^2)^(-1/2) on [-1/2, 1/2]; given x,
    y = sqrt(1 - x^2) / v with v uniform, which gives density ~ y^-2.
    ``v_range`` restricts v to a stratum.
    """
    u = rng.random(size)
    x = np.sin(math.pi * u / 3 - math.pi / 6)
    lo, hi = v_range
    v = hi - (hi - lo) * rng.random(size)  # in (lo, hi]
    y = np.sqrt(1 - x * x) / v
    return x, y


def mc_mean(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    samples: int,
    seed: int,
    strata: int = 16,
) -> Estimate:
    """Stratified (in height) Monte-Carlo mean of func over mu_M.

    Each stratum has its own child seed, so results do not depend on how
    the work is split.
    """
    children = np.random.SeedSequence(seed).spawn(strata)
    base, extra = divmod(samples, strata)
    mean, var = 0.0, 0.0
    for k, child in enumerate(children):
        nk = base + (1 if k < extra else 0)
        if nk == 0:
            continue
        rng = np.random.Generator(np.random.Philox(child))
        x, y = sample_fundamental_domain(rng, nk, (k / strata, (k + 1) / strata))
        vals = np.asarray(func(x, y), dtype=float)
        mean += vals.mean() / strata
        if nk > 1:
            var += vals.var(ddof=1) / nk / strata**2
    sd = math.sqrt(var)
    return Estimate(mean, sd, f"mc±{sd:.1e}")
