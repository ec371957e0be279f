"""Command-line front end: verification runs, lemma tables, bounds, scans.

Commands
--------
verify  run every runtime-checkable identity at one size, emit a JSON report
lemma   print the counting-recurrence table with the exhaustive-oracle column
bound   measure the adversary ratio at one size, emit one report row
scan    sweep n over a range, one row per point, CSV or JSON

All output is deterministic for a fixed seed; wall-clock timings are only
written when --timing is passed, since they would break byte-level
reproducibility of report files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, fields
from typing import Optional

from .analysis import RatioReport, adversary_ratio, lemma_table
from .builder import (
    AlphaProfile,
    alpha_profile_from_values,
    default_alpha_profile,
    grid_alpha_profiles,
)
from .limits import DENSE_LIMIT_DEFAULT, VEC_LIMIT_DEFAULT, ResourceLimitError
from .scheme import InstanceParams
from .verify import run_verification_suite


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def resolve_q(q_mode: str, n: int) -> int:
    if q_mode == "n2":
        return n * n
    if q_mode == "2n2":
        return 2 * n * n
    if q_mode.startswith("fixed:"):
        try:
            return int(q_mode.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad q-mode {q_mode!r}")
    raise ValueError(f"unknown q-mode {q_mode!r}")


def load_alpha_file(path: str, n: int) -> AlphaProfile:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                values.append(float(line))
    if len(values) != n - 1:
        raise ValueError(
            f"alpha file has {len(values)} values, need n-1={n - 1}"
        )
    return alpha_profile_from_values(values)


@dataclass
class ScanRow:
    """One scan point; numeric fields are None on skipped rows."""

    n: int
    q: int
    alpha0: Optional[float]
    r: Optional[float]
    norm_gamma_prime: Optional[float]
    norm_gamma: Optional[float]
    norm_gamma_delta1: Optional[float]
    surrogate_norm: Optional[float]
    allones_rayleigh: Optional[float]
    ratio: Optional[float]
    ratio_over_n23: Optional[float]
    converged: str
    runtime_ms: Optional[int]
    reason: str


SCAN_COLUMNS = [f.name for f in fields(ScanRow)]

# order of the per-norm convergence flags in the `converged` column
CONVERGED_ORDER = (
    "gamma_prime", "gamma", "gamma_masked", "gamma_prime_masked", "surrogate",
)


def row_from_report(rep: RatioReport, runtime_ms: Optional[int]) -> ScanRow:
    flags = "".join(
        "1" if rep.results[k].converged else "0" for k in CONVERGED_ORDER
    )
    return ScanRow(
        n=rep.n,
        q=rep.q,
        alpha0=rep.alpha0,
        r=rep.r,
        norm_gamma_prime=rep.norm_gamma_prime,
        norm_gamma=rep.norm_gamma,
        norm_gamma_delta1=rep.norm_gamma_masked,
        surrogate_norm=rep.surrogate_norm,
        allones_rayleigh=rep.allones_rayleigh,
        ratio=rep.ratio,
        ratio_over_n23=rep.ratio / rep.n ** (2.0 / 3.0),
        converged=flags,
        runtime_ms=runtime_ms,
        reason="",
    )


def skipped_row(n: int, q: int, reason: str) -> ScanRow:
    return ScanRow(n, q, None, None, None, None, None, None, None, None,
                   None, "", None, reason)


def emit_scan_csv(rows: list[ScanRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in SCAN_COLUMNS])
    return buf.getvalue()


def parse_scan_csv(text: str) -> list[ScanRow]:
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for rec in reader:
        def num(key, cast=float):
            return cast(rec[key]) if rec[key] != "" else None
        rows.append(ScanRow(
            n=int(rec["n"]), q=int(rec["q"]),
            alpha0=num("alpha0"), r=num("r"),
            norm_gamma_prime=num("norm_gamma_prime"),
            norm_gamma=num("norm_gamma"),
            norm_gamma_delta1=num("norm_gamma_delta1"),
            surrogate_norm=num("surrogate_norm"),
            allones_rayleigh=num("allones_rayleigh"),
            ratio=num("ratio"), ratio_over_n23=num("ratio_over_n23"),
            converged=rec["converged"],
            runtime_ms=num("runtime_ms", int),
            reason=rec["reason"],
        ))
    return rows


def emit_scan_json(rows: list[ScanRow]) -> str:
    payload = [
        {c: getattr(row, c) for c in SCAN_COLUMNS} for row in rows
    ]
    return json.dumps(payload, indent=2) + "\n"


def report_to_dict(rep: RatioReport, runtime_ms: Optional[int]) -> dict:
    out = {
        "n": rep.n,
        "q": rep.q,
        "alpha_label": rep.alpha_label,
        "alpha0": rep.alpha0,
        "r": rep.r,
        "norm_gamma_prime": rep.norm_gamma_prime,
        "norm_gamma": rep.norm_gamma,
        "norm_gamma_delta1": rep.norm_gamma_masked,
        "norm_gamma_prime_delta1": rep.norm_gamma_prime_masked,
        "surrogate_norm": rep.surrogate_norm,
        "allones_rayleigh": rep.allones_rayleigh,
        "weight0_bound": rep.weight0_bound,
        "ratio": rep.ratio,
        "ratio_over_n23": rep.ratio / rep.n ** (2.0 / 3.0),
        "weight0_flagged": rep.weight0_flagged,
        "sanity_ok": rep.sanity_ok,
        "sanity_violations": list(rep.sanity_violations),
        "converged": {k: r.converged for k, r in rep.results.items()},
        "iterations": {k: r.iterations for k, r in rep.results.items()},
        "residuals": {k: r.residual for k, r in rep.results.items()},
    }
    if rep.norm_masked_other is not None:
        out["norm_gamma_delta2"] = rep.norm_masked_other
    if runtime_ms is not None:
        out["runtime_ms"] = runtime_ms
    return out


def _write_output(text: str, out_path: Optional[str]) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_alpha(args, n: int) -> tuple[list[AlphaProfile], list[str]]:
    mode = args.alpha
    if mode == "auto":
        return [default_alpha_profile(n)], ["auto"]
    if mode == "grid":
        profiles = grid_alpha_profiles(n)
        return profiles, [f"grid(r={int(p.r)})" for p in profiles]
    if mode.startswith("file:"):
        path = mode.split(":", 1)[1]
        return [load_alpha_file(path, n)], [f"file:{path}"]
    raise ValueError(f"unknown alpha mode {mode!r}")


def cmd_verify(args) -> int:
    params = InstanceParams(args.n, resolve_q(args.q_mode, args.n))
    checks = run_verification_suite(
        params, dense_limit=args.dense_limit, seed=args.seed
    )
    n_pass = sum(c.status == "pass" for c in checks)
    n_fail = sum(c.status == "fail" for c in checks)
    n_skip = sum(c.status == "skipped" for c in checks)
    report = {
        "n": params.n,
        "q": params.q,
        "checks": [
            {
                "name": c.name,
                "predicted": c.predicted,
                "measured": c.measured,
                "deviation": c.deviation,
                "tol": c.tol,
                "status": c.status,
                "detail": c.detail,
            }
            for c in checks
        ],
        "summary": {"passed": n_pass, "failed": n_fail, "skipped": n_skip},
        "status": "fail" if n_fail else "pass",
    }
    _write_output(json.dumps(report, indent=2) + "\n", args.out)
    for c in checks:
        if c.status == "fail":
            print(f"FAIL {c.name}: deviation {c.deviation:.3g} > {c.tol:.3g}",
                  file=sys.stderr)
    print(f"verify n={params.n} q={params.q}: {n_pass} passed, "
          f"{n_fail} failed, {n_skip} skipped", file=sys.stderr)
    return 1 if n_fail else 0


def cmd_lemma(args) -> int:
    table = lemma_table(args.max_k, args.max_q)
    lines = []
    if args.format == "json":
        payload = {
            "rows": [
                {
                    "k": r.k, "ell": r.ell, "q": r.q, "g": r.g,
                    "brute": str(r.brute) if r.brute is not None else None,
                    "agree": r.agree,
                }
                for r in table.rows
            ],
            "all_nonnegative": table.all_nonnegative,
            "all_brute_agree": table.all_brute_agree,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "ell", "q", "g", "brute", "agree"])
        for r in table.rows:
            writer.writerow([
                r.k, r.ell, r.q, r.g,
                "" if r.brute is None else str(r.brute),
                "" if r.agree is None else _fmt(r.agree),
            ])
        text = buf.getvalue()
    _write_output(text, args.out)
    verdict = table.all_nonnegative and table.all_brute_agree
    print(f"lemma max_k={args.max_k} max_q={args.max_q}: "
          f"nonnegative={table.all_nonnegative} "
          f"brute_agree={table.all_brute_agree} "
          f"verdict={'PASS' if verdict else 'FAIL'}", file=sys.stderr)
    return 0 if verdict else 1


def _run_bound(args, n: int, q: int) -> tuple[RatioReport, Optional[int]]:
    params = InstanceParams(n, q)
    profiles, labels = _resolve_alpha(args, n)
    best = None
    t0 = time.monotonic()
    for profile, label in zip(profiles, labels):
        rep = adversary_ratio(
            params, profile, tol=args.tol, seed=args.seed,
            vec_limit=args.vec_limit, dense_limit=args.dense_limit,
            alpha_label=label,
        )
        if best is None or rep.ratio > best.ratio:
            best = rep
    runtime = int((time.monotonic() - t0) * 1000) if args.timing else None
    return best, runtime


def cmd_bound(args) -> int:
    q = resolve_q(args.q_mode, args.n)
    rep, runtime = _run_bound(args, args.n, q)
    if args.format == "csv":
        row = row_from_report(rep, runtime)
        text = emit_scan_csv([row])
    else:
        text = json.dumps(report_to_dict(rep, runtime), indent=2) + "\n"
    _write_output(text, args.out)
    if not rep.all_converged:
        print("warning: at least one norm did not converge", file=sys.stderr)
    if not rep.sanity_ok:
        print(f"warning: sanity violations: {rep.sanity_violations}",
              file=sys.stderr)
    return 0


def cmd_scan(args) -> int:
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        try:
            q = resolve_q(args.q_mode, n)
        except ValueError as exc:
            raise SystemExit(f"error: {exc}")
        if q < n:
            rows.append(skipped_row(n, q, "empty column space (q < n)"))
            continue
        if q**n > args.vec_limit:
            rows.append(skipped_row(
                n, q, f"vector-memory guard ({q}^{n} > {args.vec_limit})"))
            continue
        rep, runtime = _run_bound(args, n, q)
        rows.append(row_from_report(rep, runtime))
    text = emit_scan_json(rows) if args.format == "json" else emit_scan_csv(rows)
    _write_output(text, args.out)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--q-mode", default="n2",
                        help="alphabet size rule: n2, 2n2, or fixed:<int>")
    parser.add_argument("--alpha", default="auto",
                        help="profile: auto, grid, or file:<path>")
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="relative Gram residual tolerance")
    parser.add_argument("--dense-limit", type=int, default=DENSE_LIMIT_DEFAULT,
                        help="max entries for dense oracles")
    parser.add_argument("--vec-limit", type=int, default=VEC_LIMIT_DEFAULT,
                        help="max iteration-vector length")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock runtime (breaks byte "
                             "reproducibility of outputs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edadv",
        description="Adversary-matrix verification for element distinctness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the invariant suite at one size")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_verify, format="json")

    p = sub.add_parser("lemma", help="counting-recurrence table and oracle")
    p.add_argument("--max-k", type=int, default=4)
    p.add_argument("--max-q", type=int, default=7)
    _add_common(p)
    p.set_defaults(func=cmd_lemma)

    p = sub.add_parser("bound", help="one adversary-ratio measurement")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_bound, format=None)

    p = sub.add_parser("scan", help="sweep n over a range")
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "json" if args.command == "bound" else "csv"
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
