from fractions import Fraction

import pytest

from smtrace_core.classnum import hurwitz_H
from smtrace_core.errors import PrecisionError
from smtrace_core.schema import Verdict
from smtrace_core.series import kronecker, rat_mod
from smtrace_core.shimura11 import (
    build_F,
    build_G,
    g_eigen_check,
    hecke_F_check,
    lambda_check,
    lambda_residues,
    load_shimura11,
    thm11_targets,
    verify_B5_remark,
    verify_thm11,
)
from smtrace_core.zagier_basis import expand_gD


def test_newform_coefficients():
    F = build_F(8)
    assert [F[n] for n in range(8)] == [0, 1, -2, -1, 2, 1, 2, -2]


def test_newform_is_hecke_eigenform():
    assert all(r.verdict == Verdict.PASS for r in hecke_F_check(400))


def test_G_in_minus_space_and_fixed_by_U121():
    membership, fixed = g_eigen_check(600)
    assert membership.verdict == Verdict.PASS
    assert fixed.verdict == Verdict.PASS


def test_G_support():
    G = build_G(200)
    for n, _ in G.items():
        assert n % 4 in (0, 3)
        assert kronecker(-n, 11) != 1
    with pytest.raises(ValueError):
        build_G(3)


def test_lambda_residues():
    assert lambda_residues() == {"B(1,3)": 6, "2B(1,3)": 1, "B(1,363)": 1, "target": 5}
    assert lambda_check().verdict == Verdict.PASS


def test_deviation_at_three():
    g1 = expand_gD(1, 364)
    dev = g1[363] + Fraction(24, 5) * hurwitz_H(3)
    assert rat_mod(dev, 11) == 7


def test_targets():
    assert thm11_targets(40) == [3, 4, 15, 20, 23, 31]


def test_scan_small_window():
    reports, rows = verify_thm11(40)
    assert not [r for r in reports if r.failed]
    unconditional = [r for r in reports if r.claim_id == "thm11.unconditional"]
    assert unconditional and unconditional[0].verdict == Verdict.PASS
    assert [row.d for row in rows] == [3, 4, 15, 20, 23, 31]
    first = rows[0]
    assert (first.chi, first.B_mod_11, first.B121_mod_11) == (-1, 6, 1)
    assert first.H_mod_55 == rat_mod(Fraction(1, 3), 55)
    dumped = first.model_dump(mode="json")
    assert dumped["d"] == "3" and dumped["verdicts"]["unconditional"] == "PASS"


def test_deviation_chain_starts_at_m_zero():
    reports, rows = verify_thm11(40)
    assert all(len(row.dev_valuations) == 2 for row in rows)
    # dev_0(3) = 248 + 8/5 and dev_1(3) == 7 mod 11 are both 11-adic units
    assert rows[0].dev_valuations == [0, 0]
    assert rows[0].model_dump(mode="json")["dev_valuations"] == ["0", "0"]
    G = build_G(41)
    for row in rows:
        if G[row.d] % 11:
            assert row.dev_valuations[1] == 0
    by_id = {r.claim_id: r for r in reports}
    divisible = by_id["thm11.deviation_divisible"]
    assert divisible.verdict == Verdict.SKIPPED or not divisible.asserted
    if "thm11.deviation_stable" in by_id:
        assert any("->" in note for note in by_id["thm11.deviation_stable"].notes)


def test_lambda_line_uses_first_unit_coefficient():
    reports, _ = verify_thm11(40)
    line = [r for r in reports if r.claim_id == "thm11.lambda_line"]
    if line:
        G = build_G(41)
        anchor = line[0].params["anchor"]
        assert G[anchor] % 11 != 0
        assert line[0].verdict == Verdict.PASS


def test_scan_respects_cap():
    with pytest.raises(PrecisionError):
        verify_thm11(300, prec_cap=1000)
    with pytest.raises(ValueError):
        verify_thm11(40, n=0)


def test_B5_remark_is_pass_or_honestly_skipped():
    report = verify_B5_remark(40)
    assert report.verdict in (Verdict.PASS, Verdict.SKIPPED)


def test_load_bundle():
    data = load_shimura11(20)
    assert data.F.prec == 20 and data.G.prec == 20
    assert data.lambda_window["target"] == 5
