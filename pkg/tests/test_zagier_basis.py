from fractions import Fraction

import mpmath
import pytest

from smtrace_core.errors import PrecisionError, TableWindowError, VerificationError
from smtrace_core.series import QSeries, eta_product
from smtrace_core.zagier_basis import (
    T_HAUPT,
    W6,
    GTable,
    _j_invariant,
    build_ambient,
    build_table,
    cm_trace_oracle,
    expand_gD,
    extend_by_hecke,
    g1_closed_form,
    hecke_lift,
    is_square,
    plus_space_gens,
    solve_gD,
    verify_gD,
)

G1 = {0: -2, 3: 248, 4: -492, 7: 4119, 8: -7256, 11: 33512, 12: -53008}


def test_g1_anchor_coefficients():
    g = solve_gD(1, 12)
    assert g[-1] == 1
    assert {d: g[d] for d in G1} == G1


def test_other_rows_match_known_values():
    assert solve_gD(4, 4)[0] == -2
    assert solve_gD(4, 4)[3] == -26752
    assert solve_gD(4, 4)[4] == -143376
    assert solve_gD(5, 4)[3] == 85995
    assert solve_gD(5, 4)[4] == -565760
    assert solve_gD(8, 3)[3] == -1707264
    assert solve_gD(5, 4)[0] == 0


def test_eta_quotients_match_generators():
    gens = plus_space_gens(60)
    assert eta_product(W6, 60).agrees_with(gens.w6)
    assert eta_product(T_HAUPT, 60).agrees_with(gens.f2 / gens.theta ** 4)


def test_closed_form_agrees_with_solve():
    assert g1_closed_form(200).agrees_with(solve_gD(1, 199))


def test_shared_table_agrees_with_single_rows():
    table = build_table(13, 60)
    for D in (1, 4, 5, 8, 9, 12, 13):
        assert table.series(D).agrees_with(solve_gD(D, 60)), D


def test_hecke_lift_agrees_with_direct_solve():
    g1 = solve_gD(1, 9 * 30 - 1)
    lifted = hecke_lift(g1, 1, 3)
    verify_gD(lifted, 9)
    assert lifted.prec == 30
    assert lifted.agrees_with(solve_gD(9, 29))
    assert expand_gD(9, 30).agrees_with(solve_gD(9, 29))


def test_extend_by_hecke_cross_checks_existing_rows():
    table = build_table(9, 80)
    lifted = extend_by_hecke(table, 3)
    assert lifted.windows[9] == 80
    assert 81 in lifted.windows and 36 in lifted.windows
    assert lifted.value(36, 3) == hecke_lift(table.series(4), 4, 3)[3]


def test_verify_rejects_wrong_principal_part():
    g = solve_gD(1, 8) + QSeries({-2: 1}, 9)
    with pytest.raises(VerificationError):
        verify_gD(g, 1)


def test_constant_term_rule():
    assert is_square(25) and not is_square(8)
    assert solve_gD(9, 4)[0] == -2
    assert solve_gD(12, 4)[0] == 0


def test_table_value_support_rules():
    table = build_table(5, 20)
    assert table.value(1, 3) == 248
    assert table.value(1, 5) == 0
    assert table.value(2, 3) == 0
    assert table.value(Fraction(1, 9), 3) == 0
    assert table.value(1, Fraction(3, 9)) == 0
    with pytest.raises(TableWindowError):
        table.value(1, 23)
    with pytest.raises(TableWindowError):
        table.value(8, 3)
    assert table.covers(1, 20) and not table.covers(1, 23)


def test_table_merge_keeps_larger_window():
    small = build_table(5, 12)
    big = GTable()
    big.add_row(1, solve_gD(1, 40))
    merged = small.merge(big)
    assert merged.windows[1] == 40
    assert merged.windows[5] == 12
    bad = GTable()
    bad.add_row(1, solve_gD(1, 12) + QSeries({3: 1}, 13))
    with pytest.raises(VerificationError):
        small.merge(bad)


@pytest.mark.parametrize("d", [3, 4, 7, 8, 11, 12, 15, 16, 19, 20, 23])
def test_cm_trace_oracle(d):
    g = expand_gD(1, 24)
    assert cm_trace_oracle(d) == g[d]


@pytest.mark.parametrize(
    "tau",
    [
        mpmath.mpc(0, 1),
        mpmath.mpc(-0.5, mpmath.sqrt(3) / 2),
        mpmath.mpc(0.5, mpmath.sqrt(7) / 2),
        mpmath.mpc(0.13, 1.7),
    ],
)
def test_j_expansion_matches_kleinj(tau):
    with mpmath.workdps(40):
        ours = _j_invariant(tau)
        ref = 1728 * mpmath.kleinj(tau)
        assert abs(ours - ref) < mpmath.mpf(10) ** -25 * max(1, abs(ref))


def test_ambient_space_needs_window():
    with pytest.raises(PrecisionError):
        build_ambient(4, 10)
    with pytest.raises(ValueError):
        solve_gD(2, 10)
