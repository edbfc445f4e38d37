from fractions import Fraction

import pytest

from smtrace_core.classnum import hurwitz_H
from smtrace_core.eisenstein import tilde_H_series
from smtrace_core.errors import PrecisionError
from smtrace_core.padic_limits import (
    EpsilonData,
    alternating_check,
    ao_family,
    bo_family,
    boylan_check,
    boylan_reports,
    convergence_rate,
    eq_b1_lim_check,
    eq_b1_lim_sweep,
    jenkins_check,
    jenkins_sweep,
    jenkins_table,
    limit_approx,
    limit_target,
    p3_refined,
    verify_prop31_iv,
    verify_thm12,
)
from smtrace_core.schema import Verdict


def _asserted_ok(reports):
    bad = [r for r in reports if r.failed]
    assert not bad, [(r.claim_id, r.params, r.witness) for r in bad]


def test_epsilon_data():
    e = EpsilonData.from_D(1, 3)
    assert (e.t, e.D0, e.epsilon) == (0, 1, -1)
    assert e.sign(1) == 1 and e.guaranteed_rate(2) == 2
    e = EpsilonData.from_D(9, 3)
    assert (e.t, e.D0, e.epsilon) == (1, 1, -1)
    assert e.guaranteed_rate(2) == 1
    e = EpsilonData.from_D(12, 3)
    assert (e.t, e.epsilon) == (0, 0)
    assert e.guaranteed_rate(2) == 1
    e = EpsilonData.from_D(8, 3)
    assert e.epsilon == 1
    assert e.sign(1) == -1 and e.sign(2) == 1
    with pytest.raises(ValueError):
        EpsilonData.from_D(1, 4)


def test_limit_targets():
    assert limit_target(12, 3, 20).is_zero()
    assert limit_target(8, 3, 20).is_zero()
    assert limit_target(8, 11, 20).is_zero()
    assert limit_target(1, 11, 20) is None
    target = limit_target(1, 3, 20)
    assert target.agrees_with(tilde_H_series(3, 20).series.scale(-12))


def test_approximant_reads_deep_coefficients():
    approx = limit_approx(1, 3, 1, 10)
    assert approx.window == (0, 10)
    assert approx.series[0] == -2
    assert approx.series[3] == limit_approx(1, 3, 0, 30).series[27]


def test_precision_cap_is_enforced():
    with pytest.raises(PrecisionError):
        limit_approx(1, 3, 3, 100, prec_cap=1000)
    with pytest.raises(PrecisionError):
        verify_thm12(1, 3, 5, 100, prec_cap=50_000)


def test_jenkins_single_instances():
    table = jenkins_table(9, 6, 3, 1)
    for D, d in ((1, 3), (1, 4), (4, 3), (5, 4), (8, 3), (9, 3), (9, 4)):
        report = jenkins_check(D, d, 3, 1, table)
        assert report.verdict == Verdict.PASS, report.notes


def test_jenkins_sweep_small():
    reports = jenkins_sweep(8, 20, [3, 5], 1)
    assert len(reports) == 2
    assert all(r.verdict == Verdict.PASS for r in reports)
    assert all("instances checked" in r.notes[0] for r in reports)


def test_closed_form_when_D_is_a_square_class():
    table = jenkins_table(8, 12, 3, 1)
    assert eq_b1_lim_check(1, 3, 3, 1, table).verdict == Verdict.PASS
    assert eq_b1_lim_sweep(8, 12, 3, 1).verdict == Verdict.PASS
    with pytest.raises(ValueError):
        eq_b1_lim_check(5, 3, 3, 1, table)


@pytest.mark.parametrize("D,p,n,dmax", [(1, 3, 1, 40), (1, 3, 2, 20), (12, 3, 1, 20), (4, 5, 1, 20), (1, 5, 1, 30)])
def test_limit_theorem_windows(D, p, n, dmax):
    report = verify_thm12(D, p, n, dmax)
    assert report.verdict == Verdict.PASS, report.witness
    assert report.required == EpsilonData.from_D(D, p).guaranteed_rate(n)


def test_membership_only_where_cusp_part_unknown():
    report = verify_thm12(1, 11, 1, 10)
    assert report.verdict == Verdict.PASS
    assert report.notes[0].startswith("membership only")


def test_square_factor_reduction():
    assert verify_prop31_iv(9, 3, 2, 10).verdict == Verdict.PASS
    with pytest.raises(ValueError):
        verify_prop31_iv(8, 3, 1)


def test_boylan_minus_reading_is_asserted():
    minus, plus = boylan_reports(1, 40)
    assert minus.asserted and minus.verdict == Verdict.PASS
    assert minus.required == 5
    assert not plus.asserted


def test_boylan_check_rejects_bad_input():
    with pytest.raises(ValueError):
        boylan_check(0, 10)
    with pytest.raises(PrecisionError):
        boylan_check(2, 40, prec_cap=100)


def test_bruinier_ono_family():
    reports = bo_family(3, 1, 60)
    assert len(reports) == 3
    _asserted_ok(reports)
    assert [r.asserted for r in reports] == [True, True, False]


def test_bo_target_at_3():
    approx = limit_approx(1, 3, 1, 20).series
    # (-8/3) = -1
    assert (approx[8] - Fraction(48, -2) * hurwitz_H(8)) % 3 == 0


def test_ahlgren_ono_family():
    reports = ao_family(3, 1, 8, 40)
    assert reports
    assert all(r.verdict == Verdict.PASS for r in reports)
    assert {r.params["D"] for r in reports} == {1, 4, 5, 8}


def test_convergence_rate_and_excess():
    reports = convergence_rate(1, 3, 2, 20)
    _asserted_ok(reports)
    excess = {int(r.params["n"]): r for r in reports if r.claim_id == "rate_excess"}
    assert not excess[0].asserted
    assert excess[1].asserted and excess[1].verdict == Verdict.PASS
    assert excess[1].observed_valuation >= 3


def test_rate_excess_stays_unasserted_away_from_g1_at_3():
    reports = convergence_rate(1, 5, 2, 6)
    assert all(not r.asserted for r in reports if r.claim_id == "rate_excess")


def test_alternating_iterates():
    reports = alternating_check(8, 3, 2, 10)
    _asserted_ok(reports)
    assert reports[-1].claim_id == "alternating_monotone" and not reports[-1].asserted
    with pytest.raises(ValueError):
        alternating_check(1, 3, 2, 10)


def test_refined_p3_is_reported_not_asserted():
    reports = p3_refined(1, 20)
    assert len(reports) == 2
    assert not any(r.asserted for r in reports)
