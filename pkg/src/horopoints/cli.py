"""Command-line entry point: one subcommand per experiment family.

Every subcommand is described by a parameter schema used both for
argparse flags and for validating ``run --config`` documents, so a
config entry and the equivalent command line produce identical records.
Output is JSON (default) or CSV, chosen by the ``--out`` extension; a
``.manifest.json`` next to the output records the config hash and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from . import __version__
from .errors import IndeterminateError, PreconditionError, QuadratureError
from .numth import CFReal, RInterval, ScaledReal, parse_real, real_to_json
from .parallel import WORKERS_ENV, default_workers

# ---------------------------------------------------------------------------
# parameter schema
# ---------------------------------------------------------------------------

_REQUIRED = object()


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable[[str], Any]
    default: Any = _REQUIRED
    help: str = ""
    flag: bool = False  # boolean switch


def _point(text):
    from .hyperbolic import ExactPoint

    return ExactPoint.parse(text)


def _testfn(text):
    from .measures import TestFunction

    return TestFunction.parse(text)


def _psi(text):
    from .numth import PsiSchedule

    head, *rest = str(text).split(":", 1)
    if head == "inv_n_log_n":
        return PsiSchedule("inv_n_log_n")
    if head == "power":
        return PsiSchedule("power", Fraction(rest[0]))
    if head == "c":
        return PsiSchedule("c_over_n", c=parse_real(rest[0]))
    raise PreconditionError("psi syntax", f"expected inv_n_log_n, power:<kappa> or c:<real>, got {text!r}")


def _schedule(text):
    from .sampling import DecaySchedule

    return DecaySchedule.parse(str(text))


def _bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError(f"not an integer: {v!r}")
    return int(v)


def _frac(v):
    return Fraction(str(v))


def _real(v):
    return parse_real(str(v))


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _jsonable(v):
    from .hyperbolic import ExactPoint
    from .measures import Estimate

    if isinstance(v, Estimate):
        return float(v)
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, RInterval):
        return str(v.lo) if v.exact else [str(v.lo), str(v.hi)]
    if isinstance(v, ExactPoint):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return str(v)


def _echo(params: dict) -> dict:
    """Parameters as they would be written in a config file."""
    out = {}
    for k, v in params.items():
        if hasattr(v, "spec"):
            out[k] = v.spec()
        elif isinstance(v, (CFReal, ScaledReal)):
            out[k] = str(v)
        else:
            out[k] = _jsonable(v)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_reduce(p: dict, ctx: dict) -> list[dict]:
    from .hyperbolic import reduce

    r = reduce(p["point"])
    return [{
        "type": "reduction",
        "input": p["point"].to_dict(),
        **r.to_dict(),
        "matrix": r.matrix.to_list(),
        "height": str(r.height),
        "provenance": "exact",
    }]


def cmd_sample(p: dict, ctx: dict) -> list[dict]:
    from .measures import evaluate_xy
    from .sampling import height_enclosure, sample

    s = sample(p["n"], p["x"], p["y"], p["primitive"])
    f = p.get("f")
    rows = []
    for j, pt, h in zip(s.indices, s.points, s.heights(ctx["workers"])):
        row = {"j": j, "re": str(pt.re), "im": str(pt.im), "height": _jsonable(height_enclosure(h, s.slack))}
        if f is not None:
            row["f"] = _jsonable(evaluate_xy(f, pt.re, pt.im))
        row["provenance"] = "exact" if s.exact else f"interval±{float(s.slack):.1e}"
        rows.append(row)
    return rows


def _reference(spec: str, f):
    from .measures import area_mean, horocycle_mean, nu_mean

    head, *args = spec.split(":")
    if head == "area":
        est = area_mean(f)
        return float(est), est.provenance
    if head == "horocycle":
        grid = int(args[1]) if len(args) > 1 else 8192
        return horocycle_mean(f, Fraction(args[0]), grid), f"quadrature(grid={grid})"
    if head == "nu":
        grid = int(args[2]) if len(args) > 2 else 4096
        return nu_mean(int(args[0]), Fraction(args[1]), f, grid), f"quadrature(grid={grid})"
    raise PreconditionError("reference syntax", f"expected area, horocycle:<Y> or nu:<m>:<Y>, got {spec!r}")


def cmd_equidist(p: dict, ctx: dict) -> list[dict]:
    from .sampling import empirical_mean, record_row, sample

    n = p["n"]
    y = p["y"] if p.get("y") is not None else p["c"] / Fraction(n) ** p["alpha"]
    s = sample(n, p["x"], y, p["primitive"])
    est = empirical_mean(s, p["f"], ctx["workers"])
    ref, ref_prov = _reference(p["reference"], p["f"])
    flags = ["primitive"] * p["primitive"] + ["indeterminate"] * (est.error > 0 and not s.exact)
    row = record_row(s, p["f"], est, ref, ";".join(flags))
    row["stderr"] = est.error
    row["provenance"] = {"empirical": est.provenance, "reference": ref_prov}
    return [row]


def cmd_symmetry(p: dict, ctx: dict) -> list[dict]:
    from .symmetry import decompose_rational_sampleset, primitive_symmetry, symmetry_point, verify_decomposition

    if p.get("decompose") is not None:
        q = p["decompose"]
        parts = decompose_rational_sampleset(q.numerator, q.denominator, p["n"], p["y"])
        ok = verify_decomposition(q.numerator, q.denominator, p["n"], p["y"])
        return [{"d": d, "n_over_d": p["n"] // d, "x_d": str(x), "y_d": str(y), "verified": ok, "provenance": "exact"}
                for d, (x, y) in parts.items()]
    if p.get("primitive_of") is not None:
        q = p["primitive_of"]
        x2, y2 = primitive_symmetry(q.numerator, q.denominator, p["n"], p["y"])
        return [{"x": str(q), "y": str(p["y"]), "x_image": str(x2), "y_image": str(y2), "provenance": "exact"}]
    w = symmetry_point(p["m"], p["k"], p["l"], p["n"], p["j"], p["y"])
    return [w.to_dict()]


def cmd_cusps(p: dict, ctx: dict) -> list[dict]:
    from .congruence import enumerate_cusps

    rows = []
    for c in enumerate_cusps(p["n"]):
        d = c.to_dict()
        rows.append({"rep": d["rep"], "width": d["width"], "simple_type": d["simple_type"],
                     "tau": json.dumps(d["tau"]), "provenance": "exact"})
    return rows


def cmd_index(p: dict, ctx: dict) -> list[dict]:
    from .congruence import cusp_count_formula, enumerate_cusps, index, index_bruteforce

    n = p["n"]
    row = {"n": n, "index": index(n), "cusps": len(enumerate_cusps(n)), "cusp_formula": cusp_count_formula(n)}
    if p["bruteforce"]:
        row["index_bruteforce"] = index_bruteforce(n)
    row["provenance"] = "exact"
    return [row]


def cmd_excursion(p: dict, ctx: dict) -> list[dict]:
    from .diophantine_experiments import predicted_excursions, r_n_eventually_monotone

    psi, sched = p["psi"], p["schedule"]
    if not r_n_eventually_monotone(psi, sched, p["N"]):
        raise PreconditionError("r_n eventually monotone", "r_n is not monotone on the upper half of the range")
    recs = predicted_excursions(p["x"], psi, sched, p["N"], n_min=p.get("n_min"), workers=ctx["workers"])
    return [{
        "n": r["n"], "m": r["m"], "y": _jsonable(r["y"]), "r_n": _jsonable(r["r_n"]),
        "min_height": _jsonable(r["min_height"]), "min_height_approx": float(r["min_height"]),
        "r_n_approx": float(r["r_n"]), "verified": r["verified"], "log_ratio": r["log_ratio"],
        "provenance": "exact" if isinstance(r["min_height"], Fraction) else "interval",
    } for r in recs]


def cmd_horoball(p: dict, ctx: dict) -> list[dict]:
    from .diophantine_experiments import horoball_criterion

    return [horoball_criterion(p["x"], p["m"], p["n"], p["Y"])]


def cmd_moment(p: dict, ctx: dict) -> list[dict]:
    from .hecke import csv_row, double_coset_reps, second_moment_direct, second_moment_hecke
    from .numth import divisors

    n, y, f = p["n"], p["y"], p["f"]
    rows = []
    if p["method"] in ("direct", "both"):
        v = second_moment_direct(n, y, f, p["grid"], p["primitive"])
        rows.append({**csv_row(n, y, v, 0.0, n), "method": "direct", "provenance": f"quadrature(grid={p['grid']})"})
    if p["method"] in ("hecke", "both"):
        est = second_moment_hecke(n, y, f, p["samples"], seed=ctx["seed"])
        reps = sum(len(double_coset_reps(e)) for e in divisors(n))
        rows.append({**csv_row(n, y, est, est.error, reps), "method": "hecke", "provenance": est.provenance})
    return rows


def cmd_hecke(p: dict, ctx: dict) -> list[dict]:
    from .hecke import (
        classical_hecke_apply,
        classical_reps,
        double_coset_apply,
        double_coset_reps,
        moebius_inversion_sides,
        moebius_relation_sides,
    )

    n, f, z = p["n"], p["f"], p["point"]
    kind = p["kind"]
    if kind == "classical":
        return [{"n": n, "point": str(z), "value": classical_hecke_apply(n, f, z),
                 "reps_count": len(classical_reps(n)), "provenance": "exact"}]
    if kind == "double":
        return [{"n": n, "point": str(z), "value": double_coset_apply(n, f, z),
                 "reps_count": len(double_coset_reps(n)), "provenance": "exact"}]
    if kind == "relation":
        a, b = moebius_relation_sides(n, f, z)
        c, d = moebius_inversion_sides(n, f, z)
        return [{"n": n, "point": str(z), "relation_lhs": a, "relation_rhs": b,
                 "inversion_lhs": c, "inversion_rhs": d, "provenance": "exact"}]
    raise PreconditionError("kind in {classical, double, relation}", f"kind={kind!r}")


def cmd_ec(p: dict, ctx: dict) -> list[dict]:
    from .diophantine_experiments import everywhere_nonequidistribution_check
    from .measures import ec_area_bound, in_Ec_arrays, mc_mean

    c = p["c"]
    if p["area"]:
        cf = float(c)
        est = mc_mean(lambda x, y: in_Ec_arrays(x, y, cf).astype(float), p["samples"], ctx["seed"])
        return [{"c": _jsonable(real_to_json(c)), "area_mc": float(est), "stderr": est.error,
                 "bound": ec_area_bound(cf), "provenance": est.provenance}]
    if p.get("x") is None:
        raise PreconditionError("x given", "ec needs --x unless --area is set")
    rows = everywhere_nonequidistribution_check(p["x"], c, p["N"])
    return [{**r, "provenance": "exact"} for r in rows]


def cmd_verify(p: dict, ctx: dict) -> list[dict]:
    from .diophantine_experiments import verify

    with open(p["file"], encoding="utf-8") as fh:
        doc = json.load(fh)
    items = doc.get("records", [doc]) if isinstance(doc, dict) else doc
    out = []
    for i, item in enumerate(items):
        ok, problems = verify(item)
        out.append({"item": i, "type": item.get("type"), "ok": ok, "problems": problems})
    ctx["failed"] = any(not r["ok"] for r in out)
    return out


COMMON_F = Param("f", _testfn, "band:1.2:2", "test function, e.g. band:1.2:2, cusp:1, disk:0:2:0.5")

COMMANDS: dict[str, tuple[Callable, list[Param], str]] = {
    "reduce": (cmd_reduce, [Param("point", _point, help="point such as 1/3+1/100i")], "reduce a point into the fundamental domain"),
    "sample": (cmd_sample, [
        Param("n", _int), Param("x", _real, "0"), Param("y", _real),
        Param("primitive", _bool, False, flag=True), Param("f", _testfn, None),
    ], "list the points of R_n(x, y) with their orbit heights"),
    "equidist": (cmd_equidist, [
        Param("n", _int), Param("x", _real, "0"), Param("y", _frac, None, "explicit height (overrides c, alpha)"),
        Param("c", _frac, "1"), Param("alpha", _frac, "1"), COMMON_F,
        Param("primitive", _bool, False, flag=True),
        Param("reference", str, "area", "area, horocycle:<Y>[:grid] or nu:<m>:<Y>[:grid]"),
    ], "empirical mean over R_n(x, y) against a reference mean"),
    "symmetry": (cmd_symmetry, [
        Param("m", _int, 1), Param("k", _int, 1), Param("l", _int, 1), Param("n", _int), Param("j", _int, 0),
        Param("y", _frac), Param("decompose", _frac, None, "p/q: decompose R_n(p/q, y)"),
        Param("primitive_of", _frac, None, "p/q: partner of R^pr_n(p/q, y)"),
    ], "symmetry witnesses and set decompositions"),
    "cusps": (cmd_cusps, [Param("n", _int)], "cusps of Gamma_n with widths and scaling matrices"),
    "index": (cmd_index, [Param("n", _int), Param("bruteforce", _bool, False, flag=True)], "index and cusp count of Gamma_n"),
    "excursion": (cmd_excursion, [
        Param("x", _real), Param("psi", _psi, "inv_n_log_n"), Param("schedule", _schedule, "logpow:1:1"),
        Param("N", _int), Param("n_min", _int, None),
    ], "verified cusp excursions along psi-witnesses"),
    "horoball": (cmd_horoball, [Param("x", _real), Param("m", _int), Param("n", _int), Param("Y", _frac)],
                 "horoball window certificate"),
    "moment": (cmd_moment, [
        Param("n", _int), Param("y", _frac, "1/1000"), COMMON_F, Param("grid", _int, 2000),
        Param("samples", _int, 100000), Param("method", str, "both"), Param("primitive", _bool, False, flag=True),
    ], "second moment directly and via Hecke operators"),
    "hecke": (cmd_hecke, [Param("n", _int), COMMON_F, Param("point", _point), Param("kind", str, "relation")],
              "apply Hecke operators at a point"),
    "ec": (cmd_ec, [
        Param("x", _real, None), Param("c", _real, "1"), Param("N", _int, 1000),
        Param("area", _bool, False, flag=True), Param("samples", _int, 1000000),
    ], "inclusion of R_n(x, c/n^2) in E_c, or its Monte-Carlo area"),
    "verify": (cmd_verify, [Param("file", str)], "re-check an emitted certificate"),
}

CSV_COLUMNS = {
    "equidist": ["n", "x", "y", "f_spec", "empirical", "reference", "abs_error", "flags"],
    "moment": ["n", "y", "estimate", "stderr", "reps_count"],
}


def validate(command: str, raw: dict) -> dict:
    """Parse a raw parameter mapping; every problem is named by field."""
    if command not in COMMANDS:
        raise PreconditionError("known command", f"unknown command {command!r}")
    _, schema, _ = COMMANDS[command]
    known = {p.name for p in schema}
    errors = [f"{k}: unknown field" for k in raw if k not in known]
    out = {}
    for p in schema:
        v = raw.get(p.name)
        if v is None:
            if p.default is _REQUIRED:
                errors.append(f"{p.name}: required")
                continue
            v = p.default
            if v is None or isinstance(v, bool):
                out[p.name] = v
                continue
        try:
            out[p.name] = p.parse(v)
        except (ValueError, TypeError, ZeroDivisionError, PreconditionError) as e:
            errors.append(f"{p.name}: {e}")
    if errors:
        raise PreconditionError("config schema", "; ".join(errors))
    return out


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _csv(rows: list[dict], columns: list[str] | None) -> str:
    rows = [_jsonable(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(_jsonable(doc), sort_keys=True).encode()).hexdigest()


def _write(out: str | None, text: str, manifest: dict | None) -> None:
    if out is None:
        sys.stdout.buffer.write(text.encode("utf-8"))
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if manifest is not None:
        with open(out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(_dumps(manifest))


def run_one(command: str, raw: dict, seed: int, workers: int) -> tuple[dict, dict]:
    """Validate and run one experiment.  Returns (record, ctx); failures are
    recorded in the record rather than raised."""
    ctx = {"seed": seed, "workers": workers, "failed": False}
    record: dict = {"experiment": command, "seed": seed}
    try:
        params = validate(command, raw)
        record["parameters"] = _echo(params)
        record["records"] = COMMANDS[command][0](params, ctx)
        record["errors"] = []
    except (PreconditionError, IndeterminateError, QuadratureError, OSError, ValueError) as e:
        record.setdefault("parameters", _jsonable(raw))
        record["records"] = []
        record["errors"] = [f"{type(e).__name__}: {e}"]
        ctx["failed"] = True
    return record, ctx


def run_config(doc: dict, seed: int | None, workers: int) -> tuple[list[dict], bool]:
    if not isinstance(doc, dict) or not isinstance(doc.get("experiments"), list):
        raise PreconditionError("config schema", "experiments: required list")
    seed = doc.get("seed", 0) if seed is None else seed
    out, failed = [], False
    for i, exp in enumerate(doc["experiments"]):
        if not isinstance(exp, dict) or "command" not in exp:
            out.append({"experiment": None, "seed": seed, "records": [],
                        "errors": [f"experiments[{i}].command: required"]})
            failed = True
            continue
        rec, ctx = run_one(exp["command"], exp.get("params", {}), exp.get("seed", seed), workers)
        out.append(rec)
        failed |= ctx["failed"]
    return out, failed


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="horopoints", description="Experiments on horocycle sample points.")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--workers", type=int, default=None, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    common.add_argument("--out", default=None, help="output file; .csv for CSV, anything else JSON")
    common.add_argument("--config", default=None, help="JSON file of parameters overriding flags")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, schema, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext, description=helptext)
        for p in schema:
            opt = "--" + p.name.replace("_", "-")
            if p.flag:
                sp.add_argument(opt, dest=p.name, action="store_const", const=True, default=None, help=p.help)
            elif name == "verify" and p.name == "file":
                sp.add_argument("file", help="certificate JSON")
            else:
                sp.add_argument(opt, dest=p.name, default=None, help=p.help or None)
    rp = sub.add_parser("run", parents=[common], help="run a batch of experiments from --config")
    rp.set_defaults(batch=True)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    workers = args.workers if args.workers is not None else default_workers()
    if args.command == "run":
        if args.config is None:
            print("run: --config is required", file=sys.stderr)
            return 2
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            records, failed = run_config(doc, args.seed, workers)
        except PreconditionError as e:
            print(str(e), file=sys.stderr)
            return 2
        seed = doc.get("seed", 0) if args.seed is None else args.seed
        manifest = {"tool": "horopoints", "version": __version__, "config_sha256": config_hash(doc), "seed": seed}
        _write(args.out, _dumps({"manifest": manifest, "experiments": records}), manifest if args.out else None)
        return 1 if failed else 0

    _, schema, _ = COMMANDS[args.command]
    raw = {p.name: getattr(args, p.name) for p in schema if getattr(args, p.name) is not None}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as fh:
            raw.update(json.load(fh))
    seed = 0 if args.seed is None else args.seed
    record, ctx = run_one(args.command, raw, seed, workers)
    if record["errors"] and not record["records"]:
        print("; ".join(record["errors"]), file=sys.stderr)
        if args.command != "verify":
            return 2
    manifest = {"tool": "horopoints", "version": __version__, "experiment": args.command,
                "config_sha256": config_hash({"command": args.command, "params": record["parameters"]}), "seed": seed}
    if args.out and args.out.endswith(".csv"):
        text = _csv(record["records"], CSV_COLUMNS.get(args.command))
    else:
        text = _dumps(record)
    _write(args.out, text, manifest if args.out else None)
    return 1 if ctx["failed"] else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
