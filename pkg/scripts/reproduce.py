import sys
from pathlib import Path
import json
import logging

# Ensure repo root is on sys.path when running `python scripts/reproduce.py`
ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from smtrace_core.harness import load_claims, run_claims, write_run
from smtrace_core.schema import Config

CLAIMS_PATH = ROOT_DIR / "assets" / "claims_default.jsonl"
OUT_ROOT = Path("reports") / "repro_runs"


def main():
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not CLAIMS_PATH.exists():
        raise SystemExit(f"Missing {CLAIMS_PATH}.")

    cfg = Config.from_env()
    claims = load_claims(CLAIMS_PATH)

    print(f"Running {len(claims)} claims (deep_tier={cfg.deep_tier}, threads={cfg.threads})...\n")

    summary, per_claim = run_claims(
        claims,
        threads=cfg.threads,
        prec_cap=None if cfg.deep_tier else cfg.g1_prec_cap,
        deep_tier=cfg.deep_tier,
    )

    # Per-claim quick view
    for rec in per_claim:
        verdicts = [r["verdict"] + ("" if r["asserted"] else "*") for r in rec["reports"]]
        print(f"[{rec['claim_id']}] family={rec['family']}")
        print(f"  verdicts={' '.join(verdicts)}")
        if rec["error"]:
            print(f"  error={rec['error']}")
        print("")

    print("=== SUMMARY ===")
    print(json.dumps(summary, indent=2))
    print("(* = reported, not asserted)")

    out_dir = write_run(summary, per_claim, OUT_ROOT)
    print(f"\nSaved per-claim results to: {out_dir / 'per_claim.jsonl'}")
    print(f"Saved summary to:           {out_dir / 'summary.json'}")

    if summary["asserted_failures"]:
        raise SystemExit(1)
    if summary["precision_shortfalls"]:
        raise SystemExit(3)


if __name__ == "__main__":
    main()
