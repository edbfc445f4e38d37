"""
Command line front end.

    python -m smtrace_core.cli classnum --max 12
    python -m smtrace_core.cli verify --family boylan --n 1 --dmax 40
    python -m smtrace_core.cli slopes --p 13 --A 1

Exit status: 0 when no asserted claim fails, 1 on an asserted FAIL, 2 on bad
arguments, 3 on a precision shortfall (the message names the claim).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from smtrace_core import cache_io, padic_limits, shimura11, slopes
from smtrace_core.classnum import hurwitz_table
from smtrace_core.eisenstein import default_window, g2_limit_reports, prop21_reports, tilde_H_series
from smtrace_core.errors import PrecisionError, SMTraceError, VerificationError
from smtrace_core.harness import load_claims, run_claims, table_cap, write_run
from smtrace_core.schema import Config, CongruenceReport
from smtrace_core.series import rat_str
from smtrace_core.zagier_basis import build_table, cm_trace_oracle, expand_gD

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3
FAMILIES = ("jenkins", "thm12", "prop31", "boylan", "bo", "ao", "rate", "alternating", "eq_b1_lim", "p3_refined")
DEFAULT_CLAIMS = Path("assets/claims_default.jsonl")


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _emit(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def _exit_for(reports: Sequence[CongruenceReport]) -> int:
    return EXIT_FAIL if any(r.failed for r in reports) else EXIT_OK


def _cap(cfg: Config) -> Optional[int]:
    return None if cfg.deep_tier else cfg.g1_prec_cap


# ----------------------------
# Subcommands
# ----------------------------
def cmd_classnum(args: argparse.Namespace, cfg: Config) -> int:
    table = hurwitz_table(args.max + 1)
    sys.stdout.write("n,H(n)\n")
    for n, h in enumerate(table):
        if n == 0 or n % 4 in (0, 3):
            sys.stdout.write(f"{n},{rat_str(h)}\n")
    return EXIT_OK


def cmd_eisenstein(args: argparse.Namespace, cfg: Config) -> int:
    prec = args.prec or default_window(args.p)
    out: Dict[str, Any] = {"p": str(args.p), "prec": str(prec), "series": tilde_H_series(args.p, prec).series.to_json()}
    reports: List[CongruenceReport] = []
    if args.check:
        reports = prop21_reports(args.p, prec) + g2_limit_reports(args.p, prec)
        out["reports"] = [r.to_record() for r in reports]
    _emit(out)
    return _exit_for(reports)


def cmd_gbasis(args: argparse.Namespace, cfg: Config) -> int:
    dmax = cfg.default_dmax if args.dmax is None else args.dmax
    if args.D is not None:
        g = expand_gD(args.D, dmax + 1)
        sys.stdout.write("D,d,B\n")
        for d in range(dmax + 1):
            if d % 4 in (0, 3):
                sys.stdout.write(f"{args.D},{d},{g[d]}\n")
        return EXIT_OK
    table = build_table(args.Dmax, dmax, lift_primes=args.lift, threads=cfg.threads)
    if args.store or args.cache:
        path = args.cache or cfg.cache_path
        table = cache_io.store_table(table, path)
        log.info("table merged into %s", path)
    sys.stdout.write("D,d,B\n")
    for D, d, B in table.entries():
        sys.stdout.write(f"{D},{d},{B}\n")
    return EXIT_OK


def cmd_trace_oracle(args: argparse.Namespace, cfg: Config) -> int:
    g1 = expand_gD(1, args.d + 1)
    trace = cm_trace_oracle(args.d, args.digits)
    report = CongruenceReport.from_bool(
        "oracle", {"d": args.d}, trace == g1[args.d], notes=[f"B(1,{args.d}) = {g1[args.d]}", f"CM sum gives {trace}"],
    )
    _emit({"d": str(args.d), "oracle": str(trace), "B": str(g1[args.d]), "report": report.to_record()})
    return _exit_for([report])


def cmd_verify(args: argparse.Namespace, cfg: Config) -> int:
    cap = _cap(cfg)
    fam, D, p, n, dmax = args.family, args.D, args.p, args.n, args.dmax
    tcap = table_cap({} if args.table_cap is None else {"table_cap": args.table_cap}, cap)
    if fam == "jenkins":
        reports = padic_limits.jenkins_sweep(args.Dmax, dmax, [p], n, tcap)
    elif fam == "eq_b1_lim":
        reports = [padic_limits.eq_b1_lim_sweep(args.Dmax, dmax, p, n, tcap)]
    elif fam == "thm12":
        reports = [padic_limits.verify_thm12(D, p, n, dmax, args.slack, cap)]
    elif fam == "prop31":
        reports = [padic_limits.verify_prop31_iv(D, p, n, dmax, cap)]
    elif fam == "boylan":
        reports = padic_limits.boylan_reports(n, dmax, cap)
    elif fam == "bo":
        reports = padic_limits.bo_family(p, n, dmax, cap)
    elif fam == "ao":
        reports = padic_limits.ao_family(p, n, args.Dmax, dmax, cap)
    elif fam == "rate":
        reports = padic_limits.convergence_rate(D, p, n, dmax, cap)
    elif fam == "alternating":
        reports = padic_limits.alternating_check(D, p, n, dmax, cap)
    else:
        reports = padic_limits.p3_refined(n, dmax, cap)
    _emit([r.to_record() for r in reports])
    return _exit_for(reports)


def cmd_thm11(args: argparse.Namespace, cfg: Config) -> int:
    dmax = cfg.default_dmax if args.dmax is None else args.dmax
    data = shimura11.load_shimura11(cfg.default_prec)
    reports, rows = shimura11.verify_thm11(dmax, args.n, prec_cap=_cap(cfg))
    reports = reports + [shimura11.lambda_check(), shimura11.verify_B5_remark(dmax)]
    reports += shimura11.g_eigen_reports(data.G) + shimura11.hecke_F_reports(data.F)
    _emit({
        "lambda_residues": data.lambda_window,
        "reports": [r.to_record() for r in reports],
        "rows": [row.model_dump(mode="json") for row in rows],
    })
    return _exit_for(reports)


def cmd_slopes(args: argparse.Namespace, cfg: Config) -> int:
    if args.A is None:
        report = slopes.stabilize(args.p, M=args.M)
    else:
        A = args.A
        while slopes.cusp_dim(slopes.slope_weight(args.p, A)) == 0:
            A += 1
        report = slopes.slope_job(args.p, A, args.M)
    _emit(report.model_dump(mode="json"))
    return EXIT_OK


def cmd_reproduce_all(args: argparse.Namespace, cfg: Config) -> int:
    claims = load_claims(args.claims)
    summary, per_claim = run_claims(claims, threads=cfg.threads, prec_cap=_cap(cfg), deep_tier=cfg.deep_tier)
    out_dir = write_run(summary, per_claim, args.out)
    _emit(summary)
    log.info("run written to %s", out_dir)
    if summary["asserted_failures"]:
        return EXIT_FAIL
    if summary["precision_shortfalls"]:
        sys.stderr.write(f"precision shortfall in claims: {', '.join(summary['precision_shortfalls'])}\n")
        return EXIT_PRECISION
    return EXIT_OK


# ----------------------------
# Parser
# ----------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smtrace", description="Traces of singular moduli, class numbers and p-adic limits.")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--deep", action="store_true", default=None, help="enable long-running tiers")
    parser.add_argument("--cache-path", type=Path, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classnum", help="CSV of H(n)")
    p.add_argument("--max", type=int, required=True)
    p.set_defaults(func=cmd_classnum)

    p = sub.add_parser("eisenstein", help="operator identities for the modified Eisenstein series")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--prec", type=int, default=None, help="defaults to 40 p^2")
    p.add_argument("--check", action="store_true", help="also run the operator identities")
    p.set_defaults(func=cmd_eisenstein)

    p = sub.add_parser("gbasis", help="coefficients B(D,d)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--D", type=int)
    group.add_argument("--Dmax", type=int)
    p.add_argument("--dmax", type=int, default=None, help="defaults to Config.default_dmax")
    p.add_argument("--lift", type=int, nargs="*", default=[])
    p.add_argument("--store", action="store_true", help="merge into the GTable cache")
    p.add_argument("--cache", type=Path, default=None, help="cache file for --store")
    p.set_defaults(func=cmd_gbasis)

    p = sub.add_parser("trace-oracle", help="B(1,d) against the CM-point sum")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--digits", type=int, default=None)
    p.set_defaults(func=cmd_trace_oracle)

    p = sub.add_parser("verify", help="congruence families")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--D", type=int, default=1)
    p.add_argument("--Dmax", type=int, default=25)
    p.add_argument("--dmax", type=int, default=40)
    p.add_argument("--slack", type=int, default=0)
    p.add_argument("--table-cap", type=int, default=None, help="defaults to 1500, 20000 with --deep")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("thm11", help="conductor 11 class number congruences")
    p.add_argument("--dmax", type=int, default=None, help="defaults to Config.default_dmax")
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(func=cmd_thm11)

    p = sub.add_parser("slopes", help="minimal nonzero T_p slope")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--A", type=int, default=None)
    p.add_argument("--M", type=int, default=slopes.DEFAULT_M)
    p.set_defaults(func=cmd_slopes)

    p = sub.add_parser("reproduce-all", help="run the claim list")
    p.add_argument("--claims", type=Path, default=DEFAULT_CLAIMS)
    p.add_argument("--out", type=Path, default=Path("reports") / "repro_runs")
    p.set_defaults(func=cmd_reproduce_all)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    _configure_logging(args.verbose, args.quiet)
    overrides: Dict[str, Any] = {"threads": args.threads, "deep_tier": args.deep, "cache_path": args.cache_path}
    try:
        cfg = Config.from_env(**overrides)
        return args.func(args, cfg)
    except PrecisionError as exc:
        claim = exc.claim_id or getattr(args, "family", None) or args.command
        sys.stderr.write(f"precision shortfall in claim {claim}: {exc}\n")
        return EXIT_PRECISION
    except VerificationError as exc:
        sys.stderr.write(f"verification failed: {exc}\n")
        return EXIT_FAIL
    except (ValueError, SMTraceError) as exc:
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
