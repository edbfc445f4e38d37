import json

import pytest

from smtrace_core.cli import main


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("SMTRACE_DEEP_TIER", "SMTRACE_THREADS", "SMTRACE_CACHE_PATH"):
        monkeypatch.delenv(name, raising=False)


def test_classnum_csv(capsys):
    assert main(["classnum", "--max", "12"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,H(n)"
    assert lines[1] == "0,-1/12"
    assert lines[-1] == "12,4/3"


def test_bad_flags_exit_2(capsys):
    assert main(["classnum"]) == 2
    assert main(["--no-such-flag"]) == 2
    assert main(["verify", "--family", "nope"]) == 2


def test_bad_value_exit_2(capsys):
    assert main(["verify", "--family", "prop31", "--D", "8", "--p", "3"]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_boylan(capsys):
    assert main(["verify", "--family", "boylan", "--n", "1", "--dmax", "40"]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert reports[0]["verdict"] == "PASS"
    assert reports[0]["required"] == "5"


def test_precision_shortfall_exit_3(capsys):
    rc = main(["verify", "--family", "thm12", "--D", "1", "--p", "3", "--n", "5", "--dmax", "100"])
    assert rc == 3
    assert "thm12" in capsys.readouterr().err


def test_slopes_p13(capsys):
    assert main(["--quiet", "slopes", "--p", "13", "--A", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["min_nonzero"] == "1"
    assert out["certified"] is True
    assert out["dim"] == "12"


def test_trace_oracle(capsys):
    assert main(["trace-oracle", "--d", "7"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["B"] == out["oracle"] == "4119"


def test_eisenstein_check(capsys):
    assert main(["eisenstein", "--p", "3", "--prec", "400", "--check"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["series"]["coeffs"]["0"] == "1/6"
    assert all(r["verdict"] == "PASS" for r in out["reports"])


def test_gbasis_store(tmp_path, capsys):
    cache = tmp_path / "gtable.jsonl"
    assert main(["gbasis", "--Dmax", "5", "--dmax", "8", "--cache", str(cache)]) == 0
    assert cache.exists()
    assert "1,3,248" in capsys.readouterr().out


def test_thm11_json(capsys):
    assert main(["thm11", "--dmax", "20"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert [row["d"] for row in out["rows"]] == ["3", "4", "15", "20"]
    assert out["lambda_residues"]["target"] == 5
    ids = {r["claim_id"] for r in out["reports"]}
    assert {"shimura11.G_U121", "shimura11.F_hecke"} <= ids


def test_gbasis_single_row_uses_default_dmax(capsys):
    assert main(["gbasis", "--D", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "D,d,B"
    assert lines[1] == "1,0,-2"
    assert lines[-1].startswith("1,200,")


def test_reproduce_all(tmp_path, capsys):
    claims = tmp_path / "claims.jsonl"
    claims.write_text(
        '{"claim_id": "anchors", "family": "anchors", "params": {}}\n'
        '{"claim_id": "lambda", "family": "lambda", "params": {}}\n',
        encoding="utf-8",
    )
    out_root = tmp_path / "runs"
    assert main(["reproduce-all", "--claims", str(claims), "--out", str(out_root)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_claims"] == 2
    assert len(list(out_root.iterdir())) == 1
