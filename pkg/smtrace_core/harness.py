# smtrace_core/harness.py
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from smtrace_core import eisenstein, padic_limits, shimura11, slopes
from smtrace_core.classnum import hurwitz_H
from smtrace_core.errors import PrecisionError
from smtrace_core.schema import CongruenceReport, Verdict
from smtrace_core.zagier_basis import cm_trace_oracle, expand_gD

log = logging.getLogger(__name__)

ORACLE_DS = (3, 4, 7, 8, 11, 12, 15, 16, 19, 20, 23)
TABLE_CAP = 1500
DEEP_TABLE_CAP = 20_000

Runner = Callable[[Dict[str, Any], Optional[int]], List[CongruenceReport]]


def table_cap(params: Dict[str, Any], cap: Optional[int]) -> int:
    """Explicit table_cap, else the tier default (cap is None only in the deep tier)."""
    return params.get("table_cap", TABLE_CAP if cap is not None else DEEP_TABLE_CAP)


def _anchors(params: Dict[str, Any], cap: Optional[int]) -> List[CongruenceReport]:
    g1 = expand_gD(1, 4)
    tH = eisenstein.tilde_H_series(11, 4)
    checks = {
        "H(0) = -1/12": hurwitz_H(0) == Fraction(-1, 12),
        "H(3) = 1/3": hurwitz_H(3) == Fraction(1, 3),
        "H(12) = 4/3": hurwitz_H(12) == Fraction(4, 3),
        "B(1,0) = -2": g1[0] == -2,
        "B(1,3) = 248": g1[3] == 248,
        "tH(3) = 2/3 at p=11": tH.coefficient(3) == Fraction(2, 3),
        "tH(0) = 5/6 at p=11": tH.coefficient(0) == Fraction(5, 6),
    }
    return [CongruenceReport.from_bool("anchor", {"value": k}, ok) for k, ok in checks.items()]


def _oracle(params: Dict[str, Any], cap: Optional[int]) -> List[CongruenceReport]:
    ds = params.get("ds", ORACLE_DS)
    g1 = expand_gD(1, max(ds) + 1)
    reports = []
    for d in ds:
        trace = cm_trace_oracle(d)
        reports.append(CongruenceReport.from_bool(
            "oracle", {"d": d}, trace == g1[d], notes=[f"B(1,{d}) = {g1[d]}", f"CM sum gives {trace}"],
        ))
    return reports


def _slopes(params: Dict[str, Any], cap: Optional[int]) -> List[CongruenceReport]:
    p = params["p"]
    report = slopes.stabilize(p, M=params.get("M", slopes.DEFAULT_M), A_max=params.get("A_max"))
    expected = slopes.EXPECTED_S.get(p)
    ok = report.stabilized and report.min_nonzero is not None and Fraction(report.min_nonzero) == expected
    return [CongruenceReport.from_bool(
        "slopes", {"p": p, "A": report.A, "k": report.k, "dim": report.dim}, ok,
        notes=[f"min nonzero slope {report.min_nonzero}, expected {expected}", f"stabilized={report.stabilized}"],
    )]


def _thm11(params: Dict[str, Any], cap: Optional[int]) -> List[CongruenceReport]:
    reports, _ = shimura11.verify_thm11(params["dmax"], params.get("n", 1), prec_cap=cap)
    return reports


FAMILIES: Dict[str, Runner] = {
    "anchors": _anchors,
    "oracle": _oracle,
    "eisenstein": lambda a, cap: eisenstein.prop21_reports(a["p"], a["prec"]),
    "g2_limit": lambda a, cap: eisenstein.g2_limit_reports(a["p"], a["prec"]),
    "jenkins": lambda a, cap: padic_limits.jenkins_sweep(
        a["Dmax"], a["dmax"], a["primes"], a["nmax"], table_cap(a, cap)),
    "eq_b1_lim": lambda a, cap: [padic_limits.eq_b1_lim_sweep(
        a["Dmax"], a["dmax"], a["p"], a["n"], table_cap(a, cap))],
    "thm12": lambda a, cap: [padic_limits.verify_thm12(a["D"], a["p"], a["n"], a["dmax"], a.get("slack", 0), cap)],
    "prop31": lambda a, cap: [padic_limits.verify_prop31_iv(a["D"], a["p"], a["n"], a["dmax"], cap)],
    "boylan": lambda a, cap: padic_limits.boylan_reports(a["n"], a["dmax"], cap),
    "bo": lambda a, cap: padic_limits.bo_family(a["p"], a["n"], a["dmax"], cap),
    "ao": lambda a, cap: padic_limits.ao_family(a["p"], a["n"], a["Dmax"], a["dmax"], cap),
    "rate": lambda a, cap: padic_limits.convergence_rate(a["D"], a["p"], a["nmax"], a["dmax"], cap),
    "alternating": lambda a, cap: padic_limits.alternating_check(a["D"], a["p"], a["nmax"], a["dmax"], cap),
    "p3_refined": lambda a, cap: padic_limits.p3_refined(a["n"], a["dmax"], cap),
    "thm11": _thm11,
    "lambda": lambda a, cap: [shimura11.lambda_check()],
    "B5": lambda a, cap: [shimura11.verify_B5_remark(a["dmax"])],
    "g_eigen": lambda a, cap: shimura11.g_eigen_check(a["prec"]),
    "F_hecke": lambda a, cap: shimura11.hecke_F_check(a["prec"]),
    "slopes": _slopes,
}


def load_claims(path: Path) -> List[Dict[str, Any]]:
    claims: List[Dict[str, Any]] = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if line.strip():
                claims.append(json.loads(line))
    return claims


def run_claim(claim: Dict[str, Any], prec_cap: Optional[int] = None, deep_tier: bool = False) -> Dict[str, Any]:
    """
    One claim record. Deep claims outside the deep tier are SKIPPED; a precision
    shortfall becomes an UNKNOWN report and is listed under `error`.
    """
    claim_id = claim["claim_id"]
    family = claim["family"]
    params = claim.get("params", {})
    record: Dict[str, Any] = {"claim_id": claim_id, "family": family, "params": params, "error": None}
    if family not in FAMILIES:
        raise ValueError(f"unknown claim family {family!r} in claim {claim_id}")
    if claim.get("deep", False) and not deep_tier:
        reports = [CongruenceReport.skipped(claim_id, params, "deep tier only")]
    else:
        try:
            reports = FAMILIES[family](params, prec_cap)
        except PrecisionError as exc:
            exc.with_claim(claim_id)
            log.warning("claim %s: %s", claim_id, exc)
            record["error"] = str(exc)
            reports = [CongruenceReport.unknown(claim_id, params, str(exc))]
    record["reports"] = [r.to_record() for r in reports]
    return record


def _run_claim_job(job: Tuple[Dict[str, Any], Optional[int], bool]) -> Dict[str, Any]:
    return run_claim(*job)


def run_claims(
    claims: List[Dict[str, Any]],
    *,
    threads: int = 1,
    prec_cap: Optional[int] = None,
    deep_tier: bool = False,
) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    jobs = [(c, prec_cap, deep_tier) for c in claims]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_claim = list(pool.map(_run_claim_job, jobs))
    else:
        per_claim = [_run_claim_job(j) for j in jobs]

    counts = {v.value: 0 for v in Verdict}
    asserted_failures: List[Dict[str, Any]] = []
    unasserted = 0
    for rec in per_claim:
        for r in rec["reports"]:
            counts[r["verdict"]] += 1
            if not r["asserted"]:
                unasserted += 1
            elif r["verdict"] == Verdict.FAIL.value:
                asserted_failures.append({"claim_id": rec["claim_id"], "report": r["claim_id"], "params": r["params"]})

    summary = {
        "n_claims": len(claims),
        "n_reports": sum(counts.values()),
        "verdicts": counts,
        "unasserted_reports": unasserted,
        "asserted_failures": asserted_failures,
        "precision_shortfalls": [rec["claim_id"] for rec in per_claim if rec["error"]],
    }
    return summary, per_claim


def write_run(summary: Dict[str, Any], per_claim: List[Dict[str, Any]], out_root: Path) -> Path:
    """<out_root>/<timestamp>/{summary.json, per_claim.jsonl}; returns the run directory."""
    run_id = datetime.now().strftime("%Y%m%d_%H%M%S")
    out_dir = Path(out_root) / run_id
    out_dir.mkdir(parents=True, exist_ok=True)

    with (out_dir / "per_claim.jsonl").open("w", encoding="utf-8") as f:
        for rec in per_claim:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    with (out_dir / "summary.json").open("w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, ensure_ascii=False, sort_keys=True)
    return out_dir
