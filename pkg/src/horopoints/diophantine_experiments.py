"""Cusp excursions driven by Diophantine approximation.

Certificates are plain JSON-ready dicts with every rational written
exactly, and :func:`verify` re-derives each claim from scratch.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .hyperbolic import ExactPoint, IntMatrix2, mobius, reduced_coords
from .measures import in_Ec
from .numth import (
    CFReal,
    PsiSchedule,
    Real,
    RInterval,
    as_interval,
    definitely_less,
    is_exact,
    is_primitive_psi_approximable_upto,
    real_from_json,
    real_to_json,
)
from .sampling import DecaySchedule, excursion_radius, height_enclosure, min_orbit_height, sample


def _iv_json(v) -> list[str] | str:
    if isinstance(v, RInterval):
        return str(v.lo) if v.exact else [str(v.lo), str(v.hi)]
    return str(v)


def _iv_from_json(v) -> RInterval:
    if isinstance(v, list):
        return RInterval(Fraction(v[0]), Fraction(v[1]))
    return RInterval.point(Fraction(v))


# ---------------------------------------------------------------------------
# horoball criterion
# ---------------------------------------------------------------------------


def horoball_criterion(x: Real, m: int, n: int, Y) -> dict:
    """Certify that every point of R_n(x, 1/(2 Y n^2)) has orbit height in
    (Y_j, 2 Y_j] with Y_j = gcd(n, m + j)^2 Y >= Y.

    Raises PreconditionError (a refusal) when gcd(m, n) != 1, Y < 1 or
    |x - m/n| < 1/(2 Y n^2) cannot be established.
    """
    Y = Fraction(Y)
    if n < 1 or math.gcd(m, n) != 1:
        raise PreconditionError("gcd(m, n) = 1", f"m={m}, n={n}")
    if Y < 1:
        raise PreconditionError("Y >= 1", f"Y={Y}")
    y = 1 / (2 * Y * n * n)
    dist = (as_interval(x) - Fraction(m, n)).abs() if not is_exact(x) else RInterval.point(abs(Fraction(x) - Fraction(m, n)))
    if definitely_less(dist, y) is not True:
        raise PreconditionError("|x - m/n| < 1/(2 Y n^2)", f"approximation hypothesis fails for m/n={m}/{n}, Y={Y}")
    s = sample(n, x, y)
    points = []
    for j, h in zip(s.indices, s.heights()):
        d = math.gcd(n, m + j)
        Yj = d * d * Y
        h_iv = height_enclosure(h, s.slack)
        ok = h_iv.lo > Yj and h_iv.hi <= 2 * Yj and Yj >= Y
        points.append({"j": j, "d": d, "Y_j": str(Yj), "height": _iv_json(h_iv), "ok": ok})
    return {
        "type": "horoball_certificate",
        "x": real_to_json(x),
        "m": m,
        "n": n,
        "Y": str(Y),
        "y": str(y),
        "points": points,
        "all_ok": all(p["ok"] for p in points),
    }


# ---------------------------------------------------------------------------
# excursions from approximability
# ---------------------------------------------------------------------------


def r_n_float(psi: PsiSchedule, schedule: DecaySchedule, n: int) -> float:
    y = float(schedule(n))
    return 0.5 * min(y / psi.approx(n) ** 2, 1 / (n * n * y))


def r_n_eventually_monotone(psi: PsiSchedule, schedule: DecaySchedule, N: int) -> bool:
    """Whether r_n is non-decreasing over the upper half of [start, N]."""
    lo = max(psi.start, N // 2)
    vals = [r_n_float(psi, schedule, n) for n in range(lo, N + 1)]
    return all(b >= a * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


def predicted_excursions(
    x: Real,
    psi: PsiSchedule,
    schedule: DecaySchedule,
    N: int,
    n_min: int | None = None,
    workers: int | None = None,
) -> list[dict]:
    """For each psi-witness n_min <= n <= N: r_n and whether min height of R_n(x, y_n) > r_n."""
    out = []
    for n, m in is_primitive_psi_approximable_upto(x, psi, N, n_min=n_min):
        y = schedule(n)
        r = excursion_radius(psi, n, y)
        h = min_orbit_height(sample(n, x, y), workers)
        h_lo = h.lo if isinstance(h, RInterval) else h
        out.append({
            "n": n,
            "m": m,
            "y": y,
            "r_n": r,
            "min_height": h,
            "verified": definitely_less(r, h),
            "log_ratio": math.log(float(h_lo)) / math.log(math.log(n)) if n >= 3 else None,
        })
    return out


def excursion_exponent_fit(records: Sequence[dict], n_min: int = 3) -> float:
    """Least-squares slope of log(min height) against log n."""
    pts = [(math.log(r["n"]), math.log(float(as_interval(r["min_height"]).lo))) for r in records if r["n"] >= n_min]
    if len(pts) < 2:
        raise PreconditionError("two or more witnesses", f"only {len(pts)} witnesses with n >= {n_min}")
    xs, ys = np.array(pts).T
    return float(np.polyfit(xs, ys, 1)[0])


def exponent_check(x: CFReal, kappa, beta, N: int, n_min: int = 3) -> dict:
    """Heights along witnesses of n^-kappa approximability for y_n = n^-beta,
    against the predicted exponent min(2 kappa - beta, beta - 2)."""
    kappa, beta = Fraction(kappa), Fraction(beta)
    if not 2 < beta < 2 * kappa:
        raise PreconditionError("2 < beta < 2 kappa", f"beta={beta}, kappa={kappa}")
    psi = PsiSchedule("power", kappa)
    recs = predicted_excursions(x, psi, DecaySchedule("power", 1, beta), N, n_min=2)
    predicted = float(min(2 * kappa - beta, beta - 2))
    slope = excursion_exponent_fit(recs, n_min)
    return {"witnesses": [r["n"] for r in recs], "slope": slope, "predicted": predicted,
            "all_verified": all(r["verified"] for r in recs)}


# ---------------------------------------------------------------------------
# the set E_c
# ---------------------------------------------------------------------------


def _c_times(c, factor: Fraction):
    return c.scaled(factor) if isinstance(c, CFReal) else Fraction(c) * factor


def everywhere_nonequidistribution_check(x: Real, c, N: int, n_min: int = 1) -> list[dict]:
    """For every witness n <= N of |x - m/n| < c/n^2 (gcd(m, n) = 1), test
    whether all points of R_n(x, c/n^2) lie in E_c.  The scan starts at
    the first n with c/n < 1/2, where the witness numerator is unique."""
    psi = PsiSchedule("c_over_n", c=c)
    n_min = max(n_min, math.floor(2 * as_interval(c).hi) + 1)
    out = []
    for n, m in is_primitive_psi_approximable_upto(x, psi, N, n_min=n_min):
        s = sample(n, x, _c_times(c, Fraction(1, n * n)))
        verdicts = [in_Ec(p, c, s.slack) for p in s.points]
        out.append({
            "n": n,
            "m": m,
            "inside": sum(v is True for v in verdicts),
            "outside": sum(v is False for v in verdicts),
            "undecided": sum(v is None for v in verdicts),
            "verified": all(v is True for v in verdicts),
        })
    return out


# ---------------------------------------------------------------------------
# verification of emitted certificates
# ---------------------------------------------------------------------------


def _verify_symmetry(cert: dict) -> list[str]:
    from .symmetry import symmetry_point

    problems = []
    g = IntMatrix2.from_list(cert["gamma"])
    z = ExactPoint.from_dict(cert["point"])
    w = ExactPoint.from_dict(cert["image"])
    if g.det != 1:
        problems.append("det(gamma) = 1")
    elif mobius(g, z) != w:
        problems.append("gamma * point = image")
    inp = cert["inputs"]
    try:
        ref = symmetry_point(inp["m"], inp["k"], inp["l"], inp["n"], inp["j"], Fraction(inp["y"]))
    except PreconditionError as e:
        problems.append(f"inputs: {e}")
        return problems
    if ref.point != z:
        problems.append("point = m/(kl) + j/n + iy")
    if ref.image != w:
        problems.append("image = symmetry formula")
    if ref.d != cert["d"]:
        problems.append("d = gcd(mn/l + jk, n)")
    return problems


def _verify_horoball(cert: dict) -> list[str]:
    try:
        ref = horoball_criterion(real_from_json(cert["x"]), cert["m"], cert["n"], Fraction(cert["Y"]))
    except PreconditionError as e:
        return [f"hypothesis: {e}"]
    problems = []
    if Fraction(cert["y"]) != Fraction(ref["y"]):
        problems.append("y = 1/(2 Y n^2)")
    if len(cert["points"]) != len(ref["points"]):
        problems.append("one window per j")
    for p, q in zip(cert["points"], ref["points"]):
        if p["j"] != q["j"] or p["d"] != q["d"] or Fraction(p["Y_j"]) != Fraction(q["Y_j"]):
            problems.append(f"Y_j = gcd(n, m + j)^2 Y at j={p['j']}")
            continue
        claimed, actual = _iv_from_json(p["height"]), _iv_from_json(q["height"])
        if not (actual.lo >= claimed.lo and actual.hi <= claimed.hi):
            problems.append(f"height enclosure at j={p['j']}")
        if p["ok"] and not q["ok"]:
            problems.append(f"Y_j < height <= 2 Y_j at j={p['j']}")
    if cert["all_ok"] and not ref["all_ok"]:
        problems.append("all windows certified")
    return problems


def _verify_reduction(cert: dict) -> list[str]:
    from .hyperbolic import reduce, word_from_str, apply_word

    z = ExactPoint.from_dict(cert["input"])
    claimed = ExactPoint(Fraction(cert["re"]), Fraction(cert["im"]))
    problems = []
    if apply_word(word_from_str(cert["word"]), z) != claimed:
        problems.append("word applied to input = reduced point")
    if reduce(z).point != claimed:
        problems.append("reduced point is the fundamental-domain representative")
    return problems


_VERIFIERS = {
    "symmetry_witness": _verify_symmetry,
    "horoball_certificate": _verify_horoball,
    "reduction": _verify_reduction,
}


def verify(cert: dict) -> tuple[bool, list[str]]:
    """Re-check an emitted certificate.  Returns (ok, violated identities)."""
    kind = cert.get("type")
    if kind == "bundle":
        problems = []
        for i, item in enumerate(cert.get("items", [])):
            _, p = verify(item)
            problems.extend(f"item {i}: {msg}" for msg in p)
        return not problems, problems
    if kind not in _VERIFIERS:
        return False, [f"unknown certificate type {kind!r}"]
    try:
        problems = _VERIFIERS[kind](cert)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        problems = [f"malformed certificate: {e}"]
    return not problems, problems
