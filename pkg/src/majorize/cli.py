"""Command-line entry point: `majorize <command> ...`.

Exit codes: 0 positive verdict or success, 1 negative verdict (the report
carries a witness), 2 usage or input-format error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import birkhoff, graphs, numrange, oracles, schur_horn, sequences
from .errors import MajorizeError
from .sequences import SeqDescriptor

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    """Unreadable or malformed input; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    depth: int = 64
    tol: float = 1e-10
    seed: int = 0
    format: str = "json"
    exact: bool = False

    def __post_init__(self):
        if self.depth < 1:
            raise InputError("--depth must be at least 1")
        if not self.tol > 0:
            raise InputError("--tol must be positive")
        if self.format not in ("json", "csv"):
            raise InputError("--format must be json or csv")


# --- serialization ---------------------------------------------------------


def format_number(v):
    """Exact values become strings (decimal when terminating, else p/q); floats stay floats."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        d, powers = v.denominator, {2: 0, 5: 0}
        for p in powers:
            while d % p == 0:
                d //= p
                powers[p] += 1
        if d != 1:
            return f"{v.numerator}/{v.denominator}"
        digits = max(powers.values())
        s = str(abs(v.numerator) * 10**digits // v.denominator).rjust(digits + 1, "0")
        return ("-" if v < 0 else "") + s[:-digits] + "." + s[-digits:]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def to_plain(obj):
    """Recursively convert results into JSON-ready values."""
    if hasattr(obj, "to_json"):
        return to_plain(obj.to_json())
    if isinstance(obj, dict):
        return {(k if isinstance(k, str) else json.dumps(to_plain(k))): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [to_plain(v) for v in obj]
        if isinstance(obj, (set, frozenset)):
            items.sort(key=lambda a: json.dumps(a, sort_keys=True))
        return items
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    return format_number(obj)


def render(report, fmt: str) -> str:
    if fmt == "csv" and isinstance(report, dict) and "points" in report:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in report["points"]:
            w.writerow([repr(float(a)) for a in row])
        return buf.getvalue()
    return json.dumps(to_plain(report), sort_keys=True, indent=2) + "\n"


# --- input -----------------------------------------------------------------


def load_json(path: str, exact: bool):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    try:
        return json.loads(text, parse_float=Fraction if exact else float)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno} "
                         f"(offset {e.pos}): {e.msg}") from e


def load_csv(path: str) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [[float(a) for a in r] for r in csv.reader(fh) if r]
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    except ValueError as e:
        raise InputError(f"{path}: non-numeric CSV entry ({e})") from e
    if not rows or len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: CSV rows must be non-empty and of equal length")
    return np.array(rows)


def as_sequence(data) -> SeqDescriptor:
    """A JSON list is a finite sequence; an object is a descriptor."""
    try:
        if isinstance(data, list):
            return SeqDescriptor.finite(data)
        if isinstance(data, dict):
            return SeqDescriptor.from_json(data)
    except (TypeError, ValueError, KeyError) as e:
        raise InputError(f"bad sequence descriptor: {e}") from e
    raise InputError("a sequence is a JSON list or a descriptor object")


def as_operator(data) -> numrange.OperatorModel:
    try:
        if isinstance(data, list):
            return numrange.OperatorModel.diagonal(data)
        return numrange.OperatorModel.from_json(data)
    except (TypeError, ValueError, KeyError) as e:
        raise InputError(f"bad operator model: {e}") from e


def as_weight(data) -> dict:
    """{"weight": [[vertex, value], ...]}; list vertices become tuples."""
    pairs = data.get("weight") if isinstance(data, dict) else data
    if not isinstance(pairs, list):
        raise InputError("weight must be a list of [vertex, value] pairs")
    try:
        return {graphs._parse_vid(v): sequences.to_number(x) for v, x in pairs}
    except (TypeError, ValueError) as e:
        raise InputError(f"bad weight entry: {e}") from e


def as_family(data) -> graphs.SetFamily:
    if not isinstance(data, dict):
        raise InputError("a family is a JSON object with 'sets' or 'matrix'")
    return graphs.SetFamily.from_json(data)


# --- commands --------------------------------------------------------------


def cmd_seq(a, cfg: RunConfig):
    x = as_sequence(load_json(a.x, cfg.exact))
    if a.action == "q":
        y = as_sequence(load_json(a.y, cfg.exact))
        v = sequences.q_membership(y, x, cfg.depth)
        return (EXIT_OK if v.ok else EXIT_NEGATIVE), v
    if a.action == "envelope":
        m = a.m
        return EXIT_OK, {"m": m, "R_plus": sequences.partial_sum_max(x, m),
                         "R_minus": sequences.partial_sum_min(x, m),
                         "sup_attained": sequences.sup_attained(x, m)}
    if a.action == "hat":
        return EXIT_OK, sequences.hat_extension(x)
    return EXIT_OK, {"class": sequences.classify_space(x)}


def cmd_graph(a, cfg: RunConfig):
    f = as_family(load_json(a.family, cfg.exact))
    if a.action == "check":
        g1, v = graphs.check_g1(f)
        g2 = graphs.check_g2(f) if g1 else None
        g3, order = graphs.check_g3(f, depth=cfg.depth if f.count is None else None)
        report = {"g1": {"ok": g1, "witness": v}, "g3": {"ok": g3, "order": order}}
        if g2 is not None:
            report["g2"] = {"ok": g2.ok, "odd_cycle": g2.odd_cycle}
        ok = g1 and g2 is not None and g2.ok and g3
        return (EXIT_OK if ok else EXIT_NEGATIVE), report
    w = as_weight(load_json(a.weight, cfg.exact))
    if a.action == "validate":
        v = graphs.validate_stochastic(w, f, cfg.tol)
        return (EXIT_OK if v.valid else EXIT_NEGATIVE), {"valid": v.valid, "offending": v.offending}
    s = graphs.extreme_split(w, f, cfg.tol)
    report = {"outcome": s.outcome, "case": s.case, "detail": s.detail}
    if s.w_plus is not None:
        report["w_plus"] = sorted(([k, x] for k, x in s.w_plus.items()), key=lambda p: repr(p[0]))
        report["w_minus"] = sorted(([k, x] for k, x in s.w_minus.items()), key=lambda p: repr(p[0]))
    return EXIT_OK, report


def _decomposition_report(dec) -> dict:
    terms = [{"alpha": al, "pattern": sorted(to_plain(list(p)), key=json.dumps)} for al, p in dec.terms]
    return {"terms": terms, "residual_pk": dec.residual_pk, "coefficient_sum": dec.coefficient_sum()}


def cmd_birkhoff(a, cfg: RunConfig):
    data = load_json(a.input, cfg.exact)
    if isinstance(data, list) or (isinstance(data, dict) and isinstance(data.get("matrix"), list)):
        rows = data if isinstance(data, list) else data["matrix"]
        dec = birkhoff.decompose_finite(rows, cfg.tol)
        n = len(rows)
        fam = graphs.matrix_to_family(n, n)
        w = {(i, j): rows[i][j] for i in range(n) for j in range(n)}
        diff = {v: sequences.to_number(w[v]) - dec.weight().get(v, 0) for v in w}
        dec.residual_pk = [graphs.seminorm_pk(diff, fam, k) for k in range(min(a.K, fam.count))]
        return EXIT_OK, _decomposition_report(dec)
    if not isinstance(data, dict) or "family" not in data or "weight" not in data:
        raise InputError("birkhoff input is a square matrix, or an object with 'family' and 'weight'")
    f = as_family(data["family"])
    w = as_weight(data["weight"])
    dec = birkhoff.approximate_decompose(w, f, a.K, a.eps, cfg.tol)
    return EXIT_OK, _decomposition_report(dec)


def cmd_realize(a, cfg: RunConfig):
    x = as_sequence(load_json(a.x, cfg.exact))
    y = as_sequence(load_json(a.y, cfg.exact))
    v = schur_horn.sr_membership(y, x, cfg.depth)
    return (EXIT_OK if v.member else EXIT_NEGATIVE), v


def _ops_list(data) -> list:
    if not isinstance(data, list):
        raise InputError("a family of operators is a JSON list of models")
    return [as_operator(d) for d in data]


def cmd_range(a, cfg: RunConfig):
    op = as_operator(load_json(a.op, cfg.exact))
    if a.action == "member":
        y = as_sequence(load_json(a.y, cfg.exact))
        v = numrange.range_membership(y, op, cfg.depth)
        return (EXIT_OK if v.member else EXIT_NEGATIVE), v
    if a.action == "extreme":
        y = as_sequence(load_json(a.y, cfg.exact))
        fn = numrange.classify_extreme_Q if a.kind == "Q" else numrange.classify_extreme_sigma
        c = fn(y, op, cfg.depth)
        le = numrange.lambda_e(op)
        report = {**c.to_json(), "lambda_e": le.to_json() if le else None}
        return (EXIT_OK if c.extreme else EXIT_NEGATIVE), report
    if a.action == "exposed":
        y = as_sequence(load_json(a.y, cfg.exact))
        c = numrange.classify_exposed(y, op, a.kind, cfg.depth)
        return (EXIT_OK if c.verdict == "exposed" else EXIT_NEGATIVE), c
    if a.action == "variational":
        r = numrange.variational_check(a.psi, op, a.m, a.budget, cfg.seed, cfg.tol)
        return (EXIT_OK if r.ok else EXIT_NEGATIVE), vars(r)
    fam = _ops_list(load_json(a.family, cfg.exact))
    r = numrange.family_hull_check(op, fam, a.m)
    return (EXIT_OK if r.ok else EXIT_NEGATIVE), {**vars(r), "ok": r.ok}


def cmd_oracle(a, cfg: RunConfig):
    if a.action == "vertices":
        return EXIT_OK, {"n": a.n, "points": [m.ravel().tolist() for m in oracles.enumerate_ds_vertices(a.n)]}
    if a.action == "sample":
        diag = load_json(a.diag, cfg.exact)
        s = oracles.sample_rayleigh([float(sequences.to_number(v)) for v in diag], a.m, a.count, cfg.seed)
        return EXIT_OK, {"seed": s.seed, "m": s.m, "n": s.n, "max_gram_error": s.max_gram_error,
                         "points": s.values.tolist()}
    point = np.asarray([float(sequences.to_number(v)) for v in load_json(a.point, cfg.exact)])
    gens = load_csv(a.generators)
    if gens.shape[1] != len(point):
        raise InputError("point and generators differ in dimension")
    v = oracles.hull_membership(point, gens, cfg.tol)
    report = {"feasible": v.feasible, "margin": v.margin}
    if v.coefficients is not None:
        report["coefficients"] = v.coefficients.tolist()
    if v.normal is not None:
        report["normal"], report["offset"] = v.normal.tolist(), v.offset
    return (EXIT_OK if v.feasible else EXIT_NEGATIVE), report


# --- argument parsing ------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=64, help="truncation depth for infinite data (default 64)")
    common.add_argument("--tol", type=float, default=1e-10, help="numerical tolerance (default 1e-10)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    common.add_argument("--exact", action="store_true", help="read JSON decimals as exact rationals")

    p = argparse.ArgumentParser(prog="majorize", description="Majorization, Birkhoff decompositions and "
                                "m-numerical ranges. Exit 0: positive, 1: negative with witness, 2: usage error.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("seq", parents=[common], help="sequence envelopes and the Q_x test")
    s.add_argument("action", choices=("q", "envelope", "hat", "classify"))
    s.add_argument("--x", required=True, help="sequence JSON (list or descriptor)")
    s.add_argument("--y", help="sequence JSON tested against x (for q)")
    s.add_argument("--m", type=int, default=1, help="subset size (for envelope)")

    g = sub.add_parser("graph", parents=[common], help="set families: conditions, stochastic weights, splits")
    g.add_argument("action", choices=("check", "validate", "split"))
    g.add_argument("--family", required=True, help="family JSON")
    g.add_argument("--weight", help="weight JSON: {\"weight\": [[vertex, value], ...]}")

    b = sub.add_parser("birkhoff", parents=[common], help="convex decomposition into patterns")
    b.add_argument("--input", required=True, help="square matrix JSON, or {\"family\", \"weight\"}")
    b.add_argument("--K", type=int, default=5, help="number of seminorms to report / control")
    b.add_argument("--eps", type=float, default=1e-6, help="seminorm target for infinite families")

    r = sub.add_parser("realize", parents=[common], help="orthonormal realization of y against diag(x)")
    r.add_argument("--x", required=True)
    r.add_argument("--y", required=True)

    n = sub.add_parser("range", parents=[common], help="m-numerical range of an operator model")
    n.add_argument("action", choices=("member", "extreme", "exposed", "variational", "hull"))
    n.add_argument("--op", required=True, help="operator model JSON (or a list of diagonal entries)")
    n.add_argument("--y", help="sequence JSON")
    n.add_argument("--kind", choices=("sigma", "Q"), default="sigma")
    n.add_argument("--psi", choices=sorted(numrange.PSI), default="sum_m")
    n.add_argument("--m", type=int, default=1)
    n.add_argument("--budget", type=int, default=1000)
    n.add_argument("--family", help="JSON list of operator models (for hull)")

    o = sub.add_parser("oracle", parents=[common], help="slow reference oracles")
    o.add_argument("action", choices=("vertices", "sample", "hull"))
    o.add_argument("--n", type=int, default=3)
    o.add_argument("--diag", help="JSON list of diagonal entries (for sample)")
    o.add_argument("--m", type=int, default=1)
    o.add_argument("--count", type=int, default=1000)
    o.add_argument("--point", help="JSON list (for hull)")
    o.add_argument("--generators", help="CSV point cloud (for hull)")
    return p


REQUIRED = {
    ("seq", "q"): ("y",),
    ("graph", "validate"): ("weight",),
    ("graph", "split"): ("weight",),
    ("range", "member"): ("y",),
    ("range", "extreme"): ("y",),
    ("range", "exposed"): ("y",),
    ("range", "hull"): ("family",),
    ("oracle", "sample"): ("diag",),
    ("oracle", "hull"): ("point", "generators"),
}

COMMANDS = {"seq": cmd_seq, "graph": cmd_graph, "birkhoff": cmd_birkhoff, "realize": cmd_realize,
            "range": cmd_range, "oracle": cmd_oracle}


def dispatch(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        missing = [k for k in REQUIRED.get((a.command, getattr(a, "action", None)), ()) if getattr(a, k) is None]
        if missing:
            raise InputError(f"{a.command} {a.action} needs --{', --'.join(missing)}")
        cfg = RunConfig(a.command, {}, a.depth, a.tol, a.seed, a.format, a.exact)
        code, report = COMMANDS[a.command](a, cfg)
    except InputError as e:
        err.write(f"majorize: error: {e}\n")
        return EXIT_USAGE
    except MajorizeError as e:
        report = {"error": type(e).__name__, "message": str(e), "witness": e.witness}
        out.write(render(report, "json"))
        return EXIT_NEGATIVE
    out.write(render(report, cfg.format))
    return code


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
