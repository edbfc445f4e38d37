from fractions import Fraction
from math import isqrt

import numpy as np
import pytest
from sympy import divisor_sigma, divisors

from smtrace_core.classnum import (
    BinQuadForm,
    class_number_by_reduction,
    class_number_h,
    fundamental_decomp,
    hurwitz_H,
    hurwitz_H_by_forms,
    hurwitz_table,
    hurwitz_table_by_forms,
    is_fundamental,
    reduced_forms,
    series_H,
    units_w,
)
from smtrace_core.series import theta

KNOWN_H = {
    0: Fraction(-1, 12),
    3: Fraction(1, 3),
    4: Fraction(1, 2),
    7: Fraction(1),
    8: Fraction(1),
    11: Fraction(1),
    12: Fraction(4, 3),
    15: Fraction(2),
    16: Fraction(3, 2),
    20: Fraction(2),
    23: Fraction(3),
    24: Fraction(2),
    27: Fraction(4, 3),
    28: Fraction(2),
}


@pytest.mark.parametrize("n,expected", sorted(KNOWN_H.items()))
def test_known_hurwitz_values(n, expected):
    assert hurwitz_H(n) == expected


def test_hurwitz_vanishes_off_discriminants():
    assert all(hurwitz_H(n) == 0 for n in (1, 2, 5, 6, 9, 10))
    with pytest.raises(ValueError):
        hurwitz_H(-3)


def test_class_numbers():
    expected = {3: 1, 4: 1, 7: 1, 8: 1, 15: 2, 20: 2, 23: 3, 47: 5, 56: 4, 71: 7, 163: 1}
    assert {r: class_number_h(r) for r in expected} == expected
    assert units_w(3) == 3 and units_w(4) == 2 and units_w(7) == 1
    with pytest.raises(ValueError):
        class_number_h(12)


def test_reduced_forms_of_23():
    assert reduced_forms(23) == [BinQuadForm(1, 1, 6), BinQuadForm(2, -1, 3), BinQuadForm(2, 1, 3)]


def test_is_fundamental():
    assert [r for r in range(1, 41) if is_fundamental(r)] == [3, 4, 7, 8, 11, 15, 19, 20, 23, 24, 31, 35, 39, 40]


def test_fundamental_decomposition_round_trip():
    assert (fundamental_decomp(12).r, fundamental_decomp(12).f) == (3, 2)
    assert (fundamental_decomp(16).r, fundamental_decomp(16).f) == (4, 2)
    for n in range(3, 600):
        if n % 4 not in (0, 3):
            continue
        dec = fundamental_decomp(n)
        assert dec.r * dec.f ** 2 == n
        assert is_fundamental(dec.r)


def test_class_number_matches_reduction_oracle():
    for r in range(3, 600):
        if is_fundamental(r):
            assert class_number_h(r) == class_number_by_reduction(r), r


def test_table_agrees_with_formula_and_form_count():
    nmax = 1000
    table = hurwitz_table(nmax)
    forms = hurwitz_table_by_forms(nmax)
    assert table == forms
    for n in range(0, 200):
        assert table[n] == hurwitz_H(n)
    for n in (27, 48, 99, 243):
        assert hurwitz_H_by_forms(n) == hurwitz_H(n)


def test_kronecker_hurwitz_class_number_relation():
    # sum_t H(4n - t^2) = 2 sigma(n) - sum_{d | n} min(d, n/d)
    table = hurwitz_table(4 * 40 + 1)
    for n in range(1, 41):
        top = isqrt(4 * n)
        lhs = sum(table[4 * n - t * t] for t in range(-top, top + 1))
        rhs = 2 * int(divisor_sigma(n)) - sum(min(d, n // d) for d in divisors(n))
        assert lhs == rhs, n


def test_theta_cube_counts_class_numbers():
    # r_3(n) = 12 (H(4n) - 2 H(n))
    cube = theta(1, 51) ** 3
    table = hurwitz_table(201)
    for n in range(1, 51):
        assert cube[n] == 12 * (table[4 * n] - 2 * table[n])


def _act(form, m):
    (al, be), (ga, de) = m
    a, b, c = form.a, form.b, form.c
    return BinQuadForm(
        a * al * al + b * al * ga + c * ga * ga,
        2 * a * al * be + b * (al * de + be * ga) + 2 * c * ga * de,
        a * be * be + b * be * de + c * de * de,
    )


def test_reduction_is_invariant_under_sl2z():
    rng = np.random.default_rng(11)
    words = {0: ((1, 1), (0, 1)), 1: ((1, -1), (0, 1)), 2: ((0, -1), (1, 0))}
    for d in (23, 47, 71, 84, 104):
        for form in reduced_forms(d):
            m = ((1, 0), (0, 1))
            for _ in range(12):
                (a, b), (c, e) = m
                (p, q), (r, s) = words[int(rng.integers(0, 3))]
                m = ((a * p + b * r, a * q + b * s), (c * p + e * r, c * q + e * s))
            moved = _act(form, m)
            assert moved.discriminant == form.discriminant
            assert moved.reduce() == form


def test_stabilizer_weights():
    assert BinQuadForm(2, 2, 2).stabilizer_weight == 3
    assert BinQuadForm(2, 0, 2).stabilizer_weight == 2
    assert BinQuadForm(1, 1, 6).stabilizer_weight == 1


def test_series_H():
    H = series_H(5)
    assert [H[n] for n in range(5)] == [Fraction(-1, 12), 0, 0, Fraction(1, 3), Fraction(1, 2)]
