"""Command-line entry point: one subcommand per operation, JSON or CSV on stdout.

Exit status is 0 on success (including "nothing found"), 1 on domain and
usage errors, 2 when a precision or work budget runs out.  Errors are written
to stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Callable

from . import blocks, discrepancy, numeric, totient
from .numeric import BudgetExceeded, DomainError, ExponentC

_SAFE_INT = 2**53


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    c: str | None
    precision_start_bits: int
    precision_cap_bits: int
    search_limit: int | None
    threads: int
    format: str
    seed: int


def _jsonable(x: Any) -> Any:
    if isinstance(x, bool) or x is None or isinstance(x, (str, float)):
        return x
    if isinstance(x, int):
        return x if abs(x) < _SAFE_INT else str(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in items]
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    if hasattr(x, "value") and hasattr(x, "name"):  # enums
        return x.value
    return str(x)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"not a rational number: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise DomainError(f"expected comma-separated integers, got {text!r}") from exc


def _load_points(args) -> discrepancy.PointSet:
    if args.points:
        raw = args.points
        if raw.startswith("@"):
            with open(raw[1:], encoding="utf-8") as fh:
                raw = fh.read()
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DomainError(f"points must be JSON: {exc}") from exc
        pts = [[_fraction(str(v)) for v in (p if isinstance(p, list) else [p])] for p in data]
        return discrepancy.PointSet.of(pts)
    if args.random:
        if args.dim < 1:
            raise DomainError("--dim must be >= 1")
        rng = random.Random(args.seed)
        den = 2**20
        return discrepancy.PointSet.of(
            [[Fraction(rng.randrange(den), den) for _ in range(args.dim)] for _ in range(args.random)]
        )
    if args.c is not None and args.modulus and args.n:
        return discrepancy.build_taylor_pointset(args.c, args.modulus, args.n)
    raise UsageError("give --points, --random N, or --c with --modulus and --n")


# ---------------------------------------------------------------------------
# Subcommands: each returns (payload, csv rows or None)
# ---------------------------------------------------------------------------


def cmd_floor_pow(a):
    res = numeric.floor_pow(a.m, a.c, Fraction(1, 1 << a.precision_start))
    return res.to_dict(), [{"m": a.m, "floor": res.floor_value, "exact_integer": res.exact_integer}]


def cmd_residues(a):
    vals = blocks.residue_sequence(a.c, a.modulus, a.n_from, a.n_to)
    rows = [
        {"n": n, "floor": numeric.floor_power_int(n, a.c), "residue": r}
        for n, r in zip(range(a.n_from, a.n_to + 1), vals)
    ]
    return {"R": a.modulus, "n_from": a.n_from, "n_to": a.n_to, "residues": vals}, rows


def cmd_find_block(a):
    if a.residue is not None:
        q = blocks.BlockQuery(a.c, a.modulus, a.block_len, a.residue, a.limit)
        res = blocks.find_ap_block(q, workers=a.threads)
        return res.to_dict(), [{"r": a.residue, "m": res.witness.m if res.found else "", "verified": res.found and res.witness.verified}]
    found = blocks.find_ap_blocks_all(a.c, a.modulus, a.block_len, a.limit, a.threads)
    per_r = {r: (w.to_dict() if w else None) for r, w in sorted(found.items())}
    rows = [{"r": r, "m": w.m if w else "", "verified": bool(w and w.verified)} for r, w in sorted(found.items())]
    covered = sum(1 for w in found.values() if w)
    return {"R": a.modulus, "H": a.block_len, "search_limit": a.limit, "covered": covered, "witnesses": per_r}, rows


def cmd_fracgame(a):
    if a.scan:
        scan = blocks.fracgame_scan(a.c, range(1, a.r_max + 1), range(1, a.h_max + 1), a.m_max)
        rows = [{"R": R, "H": H, "instances": v} for (R, H), v in sorted(scan.instances.items())]
        return scan.to_dict(), rows
    if a.m is None or a.modulus is None or a.block_len is None or a.residue is None:
        raise UsageError("fracgame needs --m, --modulus, --block-len and --residue (or --scan)")
    rep = blocks.check_fracgame(a.m, a.c, a.modulus, a.block_len, a.residue)
    return rep.to_dict(), None


def cmd_missing_blocks(a):
    missing = blocks.missing_block_scan(a.c, a.modulus, a.block_len, a.n_to)
    rows = [{"block": " ".join(map(str, t))} for t in sorted(missing)]
    return {"R": a.modulus, "H": a.block_len, "n_to": a.n_to, "missing": sorted(missing), "count": len(missing)}, rows


def cmd_exp_sum(a):
    if a.k is None:
        rows = discrepancy.exp_sum_table(a.c, a.n, a.modulus, a.kmax, a.tol, a.threads)
        csv_rows = [{"k": " ".join(map(str, r["k"])), "abs": r["abs"], "ratio": r["ratio"], "theory": r["theory"]} for r in rows]
        return {"N": a.n, "R": a.modulus, "K": a.kmax, "rows": rows}, csv_rows
    spec = discrepancy.ExpSumSpec(a.c, a.n, a.modulus, tuple(_int_list(a.k)))
    res = discrepancy.exp_sum(spec, a.tol, a.threads)
    out = res.to_dict()
    out["target"] = discrepancy.weyl_sum_target(spec.c, spec.N)
    out["theory"] = discrepancy.exp_sum_bound(spec)
    return out, [{"k": " ".join(map(str, spec.k)), "abs": res.abs, "ratio": res.ratio, "theory": out["theory"]["bound"]}]


def cmd_discrepancy(a):
    X = _load_points(a)
    rep = discrepancy.discrepancy_report(X, a.kmax, a.allow_estimate)
    return rep.to_dict(), [{"N": X.N, "s": X.s, "discrepancy": str(rep.discrepancy), "exact": rep.exact}]


def cmd_etks(a):
    X = _load_points(a)
    res = discrepancy.etks_bound(X, a.kmax or 1)
    return res.to_dict(), [{"k": " ".join(map(str, k)), "abs_mean": v} for k, v in sorted(res.sums.items())]


def cmd_vdc_bound(a):
    if a.k is not None:
        spec = discrepancy.ExpSumSpec(a.c, a.n, a.modulus, tuple(_int_list(a.k)))
        out = discrepancy.exp_sum_bound(spec)
        return out, [{"method": out["method"], "bound": out["bound"]}]
    if a.q is None or a.lam is None:
        raise UsageError("vdc-bound needs --q and --lambda (or --c, --modulus and --k)")
    P = discrepancy.VdcParams(a.q, a.lam, a.alpha)
    terms = discrepancy.vdc_terms(P, a.n)
    out = {"q": P.q, "Q": P.Q, "lambda": P.lam, "alpha": P.alpha, "N": a.n, "terms": list(terms), "bound": sum(terms)}
    return out, [{"term1": terms[0], "term2": terms[1], "term3": terms[2], "bound": sum(terms)}]


def cmd_phi(a):
    vals = [{"n": n, "phi": totient.euler_phi(n)} for n in a.n]
    return {"values": vals}, vals


def cmd_phi_sums(a):
    series = totient.partial_sums(a.c, a.n_max, a.threads)
    rows = list(series.rows())
    last = rows[-1]
    return {"n_max": a.n_max, "S": f"{last['S_num']}/{last['S_den']}", "frac": str(series.frac(a.n_max)), "rows": rows}, rows


def cmd_density_probe(a):
    series = totient.partial_sums(a.c, a.n_max, a.threads)
    targets = [_fraction(t) for t in a.targets.split(",")]
    eps = _fraction(a.eps)
    rows = []
    for t in targets:
        w = totient.density_probe(series, t, eps)
        rows.append({"t": str(t), "n": w.n if w else "", "frac": str(w.frac) if w else "", "frac_float": float(w.frac) if w else ""})
    covered = sum(1 for r in rows if r["n"] != "")
    return {"n_max": a.n_max, "eps": str(eps), "covered": covered, "targets": len(rows), "witnesses": rows}, rows


def cmd_mertens(a):
    res = totient.large_prime_product(totient.MertensQuery(a.n, _fraction(a.alpha), _fraction(a.C)))
    return res.to_dict(), [{"n": a.n, "value": str(res.value), "satisfied": res.satisfied}]


def cmd_build_window(a):
    w = totient.build_prime_families(a.H, allow_small=a.allow_small, enumeration_cap=a.enumeration_cap)
    return w.to_dict(), [
        {"h": f.h, "explicit": f.explicit, "value_lo": float(f.value_bounds[0]), "value_hi": float(f.value_bounds[1])}
        for f in w.families
    ]


def cmd_crt(a):
    pairs = []
    for item in a.pairs.split(","):
        try:
            r, m = item.split(":")
            pairs.append((int(r), int(m)))
        except ValueError as exc:
            raise DomainError(f"bad pair {item!r}, expected residue:modulus") from exc
    res = totient.crt_residue(pairs, a.zero_modulus)
    return res.to_dict(), [res.to_dict()]


def cmd_verify_window(a):
    w = totient.build_prime_families(a.H, allow_small=a.allow_small, enumeration_cap=a.enumeration_cap)
    if a.values:
        rep = totient.verify_window_values(w, _int_list(a.values))
    elif a.m is not None:
        if a.c is None:
            raise UsageError("verify-window --m needs --c")
        rep = totient.verify_window(w, a.m, a.c)
    else:
        raise UsageError("verify-window needs --m or --values")
    out = rep.to_dict()
    out["window"] = {"L": w.L, "R": w.R, "r": w.r}
    return out, [r.to_dict() for r in rep.rows]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--c", type=ExponentC.parse, default=None, help="exponent as n/d")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", type=_positive, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision-start", type=_positive, default=numeric.DEFAULT_START_BITS)
    common.add_argument(
        "--precision-cap", type=_positive, default=None, help="bits; defaults to $SPSDENSE_PRECISION_CAP or 16384"
    )

    p = _Parser(prog="spsdense", description="Residues and fractional parts of floor(n**c).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cmds: dict[str, Callable] = {}

    def add(name, fn, help_text, default_format="json"):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=fn, default_format=default_format)
        cmds[name] = fn
        return sp

    sp = add("floor-pow", cmd_floor_pow, "certified floor(m**c)")
    sp.add_argument("--m", type=_positive, required=True)

    sp = add("residues", cmd_residues, "floor(n**c) mod R over a range", "csv")
    sp.add_argument("--modulus", type=_positive, required=True)
    sp.add_argument("--from", dest="n_from", type=_positive, default=1)
    sp.add_argument("--to", dest="n_to", type=_positive, required=True)

    sp = add("find-block", cmd_find_block, "smallest m with floor((m+h)**c) = r+h mod R, h=1..H")
    sp.add_argument("--modulus", type=_positive, required=True)
    sp.add_argument("--block-len", type=_positive, required=True)
    sp.add_argument("--residue", type=int, default=None, help="omit to search every residue")
    sp.add_argument("--limit", type=_positive, default=blocks.DEFAULT_SEARCH_LIMIT)

    sp = add("fracgame", cmd_fracgame, "condition system for one m, or an exhaustive scan")
    sp.add_argument("--m", type=_positive)
    sp.add_argument("--modulus", type=_positive)
    sp.add_argument("--block-len", type=_positive)
    sp.add_argument("--residue", type=int)
    sp.add_argument("--scan", action="store_true")
    sp.add_argument("--r-max", type=_positive, default=50)
    sp.add_argument("--h-max", type=_positive, default=4)
    sp.add_argument("--m-max", type=_positive, default=10**4)

    sp = add("missing-blocks", cmd_missing_blocks, "residue blocks never observed up to n_to")
    sp.add_argument("--modulus", type=_positive, required=True)
    sp.add_argument("--block-len", type=_positive, required=True)
    sp.add_argument("--n-to", type=_positive, required=True)

    sp = add("exp-sum", cmd_exp_sum, "Weyl sum S(N; k, R), or a table over |k| <= K")
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--modulus", type=_positive, default=1)
    sp.add_argument("--k", default=None, help="comma-separated k_0..k_floor(c)")
    sp.add_argument("--kmax", type=_positive, default=1)
    sp.add_argument("--tol", type=float, default=1e-9)

    for name, fn, text in (
        ("discrepancy", cmd_discrepancy, "exact discrepancy of a point set"),
        ("etks", cmd_etks, "trigonometric-sum upper bound on the discrepancy"),
    ):
        sp = add(name, fn, text)
        sp.add_argument("--points", help="JSON list of points, or @file")
        sp.add_argument("--random", type=_positive, help="N seeded random dyadic points")
        sp.add_argument("--dim", type=int, default=1)
        sp.add_argument("--modulus", type=_positive)
        sp.add_argument("--n", type=_positive)
        sp.add_argument("--kmax", type=_positive, default=None if name == "discrepancy" else 4)
        if name == "discrepancy":
            sp.add_argument("--allow-estimate", action="store_true")
        else:
            sp.set_defaults(allow_estimate=False)

    sp = add("vdc-bound", cmd_vdc_bound, "van der Corput bound from (q, lambda, alpha) or from a Weyl sum")
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--q", type=int)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--modulus", type=_positive, default=1)
    sp.add_argument("--k", default=None)

    sp = add("phi", cmd_phi, "Euler's totient")
    sp.add_argument("--n", type=_positive, nargs="+", required=True)

    sp = add("phi-sums", cmd_phi_sums, "exact partial sums of phi(floor(m**c))/floor(m**c)", "csv")
    sp.add_argument("--n-max", type=_positive, required=True)

    sp = add("density-probe", cmd_density_probe, "first n with {S_n} within eps of each target")
    sp.add_argument("--n-max", type=_positive, required=True)
    sp.add_argument("--targets", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    sp.add_argument("--eps", default="0.05")

    sp = add("mertens", cmd_mertens, "product of (1 - 1/p) over large prime divisors")
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--alpha", default="3/4")
    sp.add_argument("--C", default="1/2")

    for name, fn, text in (
        ("build-window", cmd_build_window, "prime families, L, R and r for block length H"),
        ("verify-window", cmd_verify_window, "check gcd, totient and large-prime conditions on a block"),
    ):
        sp = add(name, fn, text)
        sp.add_argument("--H", type=_positive, required=True)
        sp.add_argument("--allow-small", action="store_true")
        sp.add_argument("--enumeration-cap", type=_positive, default=10**6)
        if name == "verify-window":
            sp.add_argument("--m", type=_positive)
            sp.add_argument("--values", help="comma-separated n_1..n_H")

    sp = add("crt", cmd_crt, "solve r = a_i mod m_i")
    sp.add_argument("--pairs", required=True, help="a1:m1,a2:m2,...")
    sp.add_argument("--zero-modulus", type=_positive, default=1)

    return p


def _emit(payload: dict, rows: list[dict] | None, fmt: str, out) -> None:
    if fmt == "csv":
        if not rows:
            rows = [payload]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        out.write(buf.getvalue())
    else:
        out.write(json.dumps(_jsonable(payload)) + "\n")


def _csv_cell(v):
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(_jsonable(v))
    return v


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return status


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    except DomainError as exc:
        return _fail("domain", str(exc), 1)
    fmt = args.format or args.default_format
    cap = args.precision_cap or int(os.environ.get("SPSDENSE_PRECISION_CAP", numeric.DEFAULT_CAP_BITS))
    previous_cap = numeric.precision_cap()
    try:
        numeric.set_precision_cap(cap)
        config = RunConfig(
            command=args.command,
            c=None if args.c is None else str(args.c),
            precision_start_bits=args.precision_start,
            precision_cap_bits=cap,
            search_limit=getattr(args, "limit", None),
            threads=args.threads,
            format=fmt,
            seed=args.seed,
        )
        needs_c = {"floor-pow", "residues", "find-block", "fracgame", "missing-blocks", "exp-sum", "phi-sums", "density-probe"}
        if args.command in needs_c and args.c is None:
            raise UsageError(f"{args.command} needs --c")
        if args.command == "vdc-bound" and args.k is not None and args.c is None:
            raise UsageError("vdc-bound --k needs --c")
        payload, rows = args.func(args)
        payload = {**payload, "config": asdict(config)}
        _emit(payload, rows, fmt, sys.stdout)
    except UsageError as exc:
        return _fail("usage", str(exc), 1)
    except BudgetExceeded as exc:
        return _fail("budget", str(exc), 2)
    except (DomainError, ZeroDivisionError, OSError) as exc:
        return _fail("domain", str(exc), 1)
    finally:
        numeric.set_precision_cap(previous_cap)
    return 0


if __name__ == "__main__":
    sys.exit(main())
