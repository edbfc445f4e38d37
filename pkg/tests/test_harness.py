import json
from pathlib import Path

import pytest

from smtrace_core.harness import (
    DEEP_TABLE_CAP,
    FAMILIES,
    TABLE_CAP,
    load_claims,
    run_claim,
    run_claims,
    table_cap,
    write_run,
)

CLAIMS_PATH = Path(__file__).resolve().parents[1] / "assets" / "claims_default.jsonl"

CHEAP = [
    {"claim_id": "anchors", "family": "anchors", "params": {}},
    {"claim_id": "lambda", "family": "lambda", "params": {}},
    {"claim_id": "boylan_n1", "family": "boylan", "params": {"n": 1, "dmax": 20}},
]


def test_default_claim_list_is_well_formed():
    claims = load_claims(CLAIMS_PATH)
    ids = [c["claim_id"] for c in claims]
    assert len(ids) == len(set(ids))
    assert all(c["family"] in FAMILIES for c in claims)
    assert any(c.get("deep") for c in claims)


def _deep(claims, family, **params):
    return [
        c for c in claims
        if c.get("deep") and c["family"] == family and all(c["params"].get(k) == v for k, v in params.items())
    ]


def test_deep_tier_reaches_the_full_ranges():
    claims = load_claims(CLAIMS_PATH)
    jenkins = _deep(claims, "jenkins", Dmax=25, dmax=200, nmax=2)
    assert jenkins and set(jenkins[0]["params"]["primes"]) == {3, 5, 7, 11, 13}
    assert "table_cap" not in jenkins[0]["params"]
    for p in (3, 5, 7):
        assert _deep(claims, "ao", p=p, n=2, dmax=200)
    for p in (5, 7):
        assert _deep(claims, "bo", p=p, n=2, dmax=200)
    assert _deep(claims, "rate", D=1, p=3, dmax=100)


def test_table_cap_follows_the_tier():
    assert table_cap({}, 50_000) == TABLE_CAP
    assert table_cap({}, None) == DEEP_TABLE_CAP
    assert table_cap({"table_cap": 300}, None) == 300
    # p = 3, n = 2 fits the deep window for every d <= 200
    assert 3 ** 4 * 200 <= DEEP_TABLE_CAP


def test_anchor_claim_passes():
    rec = run_claim(CHEAP[0])
    assert rec["error"] is None
    assert rec["reports"] and all(r["verdict"] == "PASS" for r in rec["reports"])


def test_deep_claims_skipped_outside_deep_tier():
    claim = {"claim_id": "slopes_p3", "family": "slopes", "params": {"p": 3}, "deep": True}
    rec = run_claim(claim, deep_tier=False)
    assert [r["verdict"] for r in rec["reports"]] == ["SKIPPED"]


def test_precision_shortfall_becomes_unknown():
    claim = {"claim_id": "too_deep", "family": "thm12", "params": {"D": 1, "p": 3, "n": 5, "dmax": 100}}
    rec = run_claim(claim, prec_cap=50_000)
    assert rec["error"]
    assert [r["verdict"] for r in rec["reports"]] == ["UNKNOWN"]


def test_unknown_family_is_rejected():
    with pytest.raises(ValueError):
        run_claim({"claim_id": "x", "family": "nope", "params": {}})


def test_summary_counts():
    summary, per_claim = run_claims(CHEAP)
    assert summary["n_claims"] == 3
    assert [rec["claim_id"] for rec in per_claim] == ["anchors", "lambda", "boylan_n1"]
    assert summary["asserted_failures"] == []
    assert summary["precision_shortfalls"] == []
    assert summary["unasserted_reports"] == 1
    assert sum(summary["verdicts"].values()) == summary["n_reports"]


def test_output_is_independent_of_worker_count():
    _, serial = run_claims(CHEAP, threads=1)
    _, pooled = run_claims(CHEAP, threads=2)
    assert json.dumps(serial, sort_keys=True) == json.dumps(pooled, sort_keys=True)


def test_write_run(tmp_path):
    summary, per_claim = run_claims(CHEAP[:1])
    out_dir = write_run(summary, per_claim, tmp_path)
    assert out_dir.parent == tmp_path
    assert json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))["n_claims"] == 1
    lines = (out_dir / "per_claim.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["claim_id"] == "anchors"
