"""
p-adic limits of g_D under iterated U_{p^2}.

For D = p^(2t) D0 with p^2 not dividing D0 and eps = -(D0/p), the signed iterates

    (-1)^(n eps (eps+1)/2) g_D | U^(2n)

converge p-adically. Everything here is a windowed check on exact integers:
a claim fails only on a concrete coefficient, and an empty window is UNKNOWN.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from sympy import multiplicity

from smtrace_core.classnum import hurwitz_H, is_fundamental
from smtrace_core.eisenstein import tilde_H_series
from smtrace_core.errors import PrecisionError, TableWindowError
from smtrace_core.schema import CongruenceReport, Verdict, Witness
from smtrace_core.series import (
    QSeries,
    _require_odd_prime,
    kronecker,
    padic_val_series,
    theta,
    u_op,
)
from smtrace_core.slopes import EXPECTED_S
from smtrace_core.zagier_basis import GTable, build_table, expand_gD, extend_by_hecke, is_square

log = logging.getLogger(__name__)

# primes where the cusp part of the limit is known to vanish for every D
EMPTY_CUSP_SPACE = (3, 5, 7, 13)


@dataclass(frozen=True)
class EpsilonData:
    p: int
    D: int
    t: int
    D0: int
    epsilon: int

    @classmethod
    def from_D(cls, D: int, p: int) -> "EpsilonData":
        _require_odd_prime(p)
        if D < 1:
            raise ValueError(f"D must be positive, got {D}")
        t = int(multiplicity(p, D)) // 2
        D0 = D // p ** (2 * t)
        return cls(p=p, D=D, t=t, D0=D0, epsilon=-kronecker(D0, p))

    def sign(self, n: int) -> int:
        return -1 if (self.epsilon == 1 and n % 2) else 1

    def guaranteed_rate(self, n: int) -> int:
        """Exponent m with approximant_n == limit mod p^m."""
        base = n if self.epsilon != 0 else n - 1
        return max(base - self.t, 0)


@dataclass(frozen=True)
class LimitApproximant:
    p: int
    D: int
    n: int
    series: QSeries
    window: Tuple[int, int]
    epsilon: int


def _approx_prec(p: int, n: int, dmax: int) -> int:
    return p ** (2 * n) * (dmax + 1)


def _check_cap(need: int, prec_cap: Optional[int], what: str) -> None:
    if prec_cap is not None and need > prec_cap:
        raise PrecisionError(f"{what} needs q-expansion to q^{need}, above the cap {prec_cap}")


def _masked(f: QSeries, keep: Callable[[int], bool]) -> QSeries:
    return QSeries({n: c for n, c in f.items() if keep(n)}, f.prec)


def limit_approx(D: int, p: int, n: int, dmax: int, prec_cap: Optional[int] = None) -> LimitApproximant:
    data = EpsilonData.from_D(D, p)
    if n < 0 or dmax < 0:
        raise ValueError("n and dmax must be non-negative")
    need = _approx_prec(p, n, dmax)
    _check_cap(need, prec_cap, f"approximant g_{D}|U^{2 * n} at p={p}")
    g = expand_gD(D, need)
    series = u_op(g, p ** (2 * n)).scale(data.sign(n))
    log.debug("approximant D=%d p=%d n=%d on [0, %d]", D, p, n, dmax)
    return LimitApproximant(p=p, D=D, n=n, series=series, window=(0, dmax), epsilon=data.epsilon)


def limit_target(D: int, p: int, prec: int) -> Optional[QSeries]:
    """The limit itself where the cusp part is known to vanish; None when it is not."""
    data = EpsilonData.from_D(D, p)
    if data.epsilon == 0:
        return QSeries(None, prec)
    if p in EMPTY_CUSP_SPACE or (p == 11 and data.epsilon == 1):
        if is_square(D):
            return tilde_H_series(p, prec).series.scale(Fraction(24, 1 - p))
        return QSeries(None, prec)
    return None


# ----------------------------
# Jenkins recursion
# ----------------------------
def jenkins_rhs(D: int, d: int, p: int, n: int, table: GTable) -> int:
    chi_D = kronecker(D, p)
    chi_d = kronecker(-d, p)
    pp = p * p
    total = p ** n * table.value(p ** (2 * n) * D, d)
    for k in range(n):
        w = chi_D ** (n - k - 1)
        if w == 0:
            continue
        lower = table.value(Fraction(D, pp), p ** (2 * k) * d)
        upper = table.value(p ** (2 * k) * D, Fraction(d, pp))
        total += w * (lower - p ** (k + 1) * upper)
        total += w * (chi_D - chi_d) * p ** k * table.value(p ** (2 * k) * D, d)
    return total


def jenkins_check(D: int, d: int, p: int, n: int, table: GTable) -> CongruenceReport:
    """Both sides of the three-term recursion for B(D, p^(2n) d), compared as integers."""
    _require_odd_prime(p)
    params = {"D": D, "d": d, "p": p, "n": n}
    lhs = table.value(D, p ** (2 * n) * d)
    rhs = jenkins_rhs(D, d, p, n, table)
    return CongruenceReport.from_bool("jenkins", params, lhs == rhs, notes=[f"lhs={lhs}", f"rhs={rhs}"])


def jenkins_table(Dmax: int, dmax: int, p: int, n: int, prec_cap: Optional[int] = None) -> GTable:
    """Rows D <= Dmax deep enough for B(D, p^(2n) d), then n rounds of Hecke lifts."""
    window = p ** (2 * n) * dmax
    if prec_cap is not None:
        window = min(window, prec_cap)
    table = build_table(Dmax, max(window, 4))
    for _ in range(n):
        table = extend_by_hecke(table, p)
    return table


def jenkins_sweep(
    Dmax: int,
    dmax: int,
    primes: Sequence[int],
    nmax: int,
    prec_cap: Optional[int] = None,
) -> List[CongruenceReport]:
    """One aggregated report per (p, n); instances outside the table window are counted, not judged."""
    reports: List[CongruenceReport] = []
    for p in primes:
        table = jenkins_table(Dmax, dmax, p, nmax, prec_cap)
        for n in range(1, nmax + 1):
            params = {"Dmax": Dmax, "dmax": dmax, "p": p, "n": n}
            checked, outside = 0, 0
            witness: Optional[Witness] = None
            for D in range(1, Dmax + 1):
                if D % 4 not in (0, 1):
                    continue
                for d in range(0, dmax + 1):
                    try:
                        lhs = table.value(D, p ** (2 * n) * d)
                        rhs = jenkins_rhs(D, d, p, n, table)
                    except TableWindowError:
                        outside += 1
                        continue
                    checked += 1
                    if lhs != rhs and witness is None:
                        witness = Witness(exponent=d, value=f"D={D}: {lhs} != {rhs}")
            notes = [f"{checked} instances checked", f"{outside} outside the table window"]
            if checked == 0:
                reports.append(CongruenceReport.unknown("jenkins", params, "table window too small for every instance"))
                continue
            reports.append(CongruenceReport(
                claim_id="jenkins",
                params=params,
                prime=p,
                window=(0, dmax),
                verdict=Verdict.FAIL if witness else Verdict.PASS,
                witness=witness,
                notes=notes,
            ))
            log.info("jenkins p=%d n=%d: %d checked, %d outside", p, n, checked, outside)
    return reports


def eq_b1_lim_check(D: int, d: int, p: int, n: int, table: GTable) -> CongruenceReport:
    """Closed form of B(D, p^(2n) d) when (D/p) = 1."""
    _require_odd_prime(p)
    if kronecker(D, p) != 1:
        raise ValueError(f"closed form needs (D/p) = 1, got ({D}/{p}) = {kronecker(D, p)}")
    params = {"D": D, "d": d, "p": p, "n": n}
    chi_d = kronecker(-d, p)
    lhs = table.value(D, p ** (2 * n) * d)
    rhs = p ** n * table.value(p ** (2 * n) * D, d)
    for k in range(n):
        rhs -= p ** (k + 1) * table.value(p ** (2 * k) * D, Fraction(d, p * p))
        rhs += (1 - chi_d) * p ** k * table.value(p ** (2 * k) * D, d)
    return CongruenceReport.from_bool("eq_b1_lim", params, lhs == rhs, notes=[f"lhs={lhs}", f"rhs={rhs}"])


# ----------------------------
# Limit congruences and their corollaries
# ----------------------------
def verify_thm12(
    D: int,
    p: int,
    n: int,
    dmax: int,
    slack: int = 0,
    prec_cap: Optional[int] = None,
) -> CongruenceReport:
    """
    approximant_n against the limit on [0, dmax], modulo p^(rate - slack).

    Where the cusp part of the limit is not known (p = 11 with eps = -1, or a
    prime outside the table) only the coefficients that must vanish in the
    limit are judged.
    """
    data = EpsilonData.from_D(D, p)
    params = {"D": D, "p": p, "n": n, "dmax": dmax, "slack": slack, "epsilon": data.epsilon}
    approx = limit_approx(D, p, n, dmax, prec_cap).series
    required = max(data.guaranteed_rate(n) - slack, 0)
    target = limit_target(D, p, dmax + 1)
    if target is not None:
        diff = approx - target
        notes = ["target " + ("24/(1-p) tH" if is_square(D) else "0")]
    else:
        diff = _masked(approx, lambda d: kronecker(-d, p) == -data.epsilon)
        notes = [f"membership only: coefficients with (-d/p) = {-data.epsilon}"]
    return CongruenceReport.judge("thm12", params, diff, p, required, 0, dmax + 1, notes=notes)


def verify_prop31_iv(D: int, p: int, n: int, dmax: int = 40, prec_cap: Optional[int] = None) -> CongruenceReport:
    """g_D|U^(2n) == g_(D/p^2)|U^(2n-2) mod p^(n-1)."""
    _require_odd_prime(p)
    if D % (p * p):
        raise ValueError(f"reduction needs p^2 | D, got D={D}, p={p}")
    if n < 1:
        raise ValueError("n must be >= 1")
    need = _approx_prec(p, n, dmax)
    _check_cap(need, prec_cap, f"g_{D}|U^{2 * n}")
    lhs = u_op(expand_gD(D, need), p ** (2 * n))
    rhs = u_op(expand_gD(D // (p * p), need // (p * p)), p ** (2 * n - 2))
    diff = lhs - rhs
    params = {"D": D, "p": p, "n": n, "dmax": dmax}
    return CongruenceReport.judge("prop31_iv", params, diff, p, n - 1, min(diff.low, 0), dmax + 1)


def boylan_check(n: int, dmax: int, sign: int = -1, prec_cap: Optional[int] = None) -> CongruenceReport:
    """g_1|U_(4^n) == sign * 2 theta^3 mod 2^(4n+1) on [0, dmax]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    need = 4 ** n * (dmax + 1)
    _check_cap(need, prec_cap, f"g_1|U_{4 ** n}")
    iterate = u_op(expand_gD(1, need), 4 ** n)
    target = (theta(1, dmax + 1) ** 3).scale(2 * sign)
    params = {"n": n, "dmax": dmax, "target": f"{'-' if sign < 0 else '+'}2*theta^3"}
    return CongruenceReport.judge(
        "boylan", params, iterate - target, 2, 4 * n + 1, 0, dmax + 1, asserted=sign < 0,
    )


def boylan_reports(n: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    return [boylan_check(n, dmax, -1, prec_cap), boylan_check(n, dmax, +1, prec_cap)]


def _fundamental_ds(dmax: int, keep: Callable[[int], bool]) -> List[int]:
    return [d for d in range(3, dmax + 1) if is_fundamental(d) and keep(d)]


def bo_family(p: int, n: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    """B(p^(2n) d) against 48/(1-p) H(d) for (-d/p) = -1 and 24/(1-p) H(d) for (-d/p) = 0."""
    _require_odd_prime(p)
    approx = limit_approx(1, p, n, dmax, prec_cap).series
    base = {"p": p, "n": n, "dmax": dmax}
    reports = []
    for chi, factor, asserted in ((-1, 48, True), (0, 24, True), (0, 48, False)):
        ds = _fundamental_ds(dmax, lambda d: kronecker(-d, p) == chi)
        params = dict(base, chi=chi, factor=f"{factor}/(1-p)")
        if not ds:
            reports.append(CongruenceReport.skipped("bo", params, "no fundamental d in range"))
            continue
        diff = QSeries({d: approx[d] - Fraction(factor, 1 - p) * hurwitz_H(d) for d in ds}, dmax + 1)
        report = CongruenceReport.judge("bo", params, diff, p, n, 0, dmax + 1, asserted=asserted,
                                        notes=[f"{len(ds)} fundamental d"])
        reports.append(report)
    return reports


def ao_family(p: int, n: int, Dmax: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    """ord_p B(D, p^(2n) d) >= n whenever (D/p) = (-d/p) != 0; one report per D."""
    _require_odd_prime(p)
    reports = []
    for D in range(1, Dmax + 1):
        chi = kronecker(D, p)
        if D % 4 not in (0, 1) or chi == 0:
            continue
        params = {"D": D, "p": p, "n": n, "dmax": dmax}
        need = _approx_prec(p, n, dmax)
        _check_cap(need, prec_cap, f"g_{D}|U^{2 * n}")
        iterate = u_op(expand_gD(D, need), p ** (2 * n))
        diff = _masked(iterate, lambda d: d >= 0 and kronecker(-d, p) == chi)
        reports.append(CongruenceReport.judge("ao", params, diff, p, n, 0, dmax + 1))
    return reports


def _signed_iterates(D: int, p: int, nmax: int, dmax: int, prec_cap: Optional[int]) -> List[QSeries]:
    data = EpsilonData.from_D(D, p)
    need = _approx_prec(p, nmax, dmax)
    _check_cap(need, prec_cap, f"g_{D}|U^{2 * nmax}")
    g = expand_gD(D, need)
    out = []
    for n in range(nmax + 1):
        it = u_op(g, p ** (2 * n)).truncate(dmax + 1)
        out.append(_masked(it, lambda d: d >= 0).scale(data.sign(n)))
    return out


def _window_val(f: QSeries, p: int, dmax: int) -> Optional[int]:
    v = padic_val_series(f, p, 0, dmax + 1)
    return None if v == float("inf") else int(v)


def _excess_asserted(D: int, p: int, n: int) -> bool:
    return D == 1 and p == 3 and n >= 1


def convergence_rate(D: int, p: int, nmax: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    """
    v_n = ord_p(a_(n+1) - a_n) for the signed approximants a_n, n < nmax.

    Asserted against the guaranteed rate. The excess over s*n (s from the
    slope table) is reported alongside; for g_1 at p = 3 it is asserted
    nonnegative from n = 1 on.
    """
    data = EpsilonData.from_D(D, p)
    iterates = _signed_iterates(D, p, nmax, dmax, prec_cap)
    s = EXPECTED_S.get(p)
    reports = []
    for n in range(nmax):
        diff = iterates[n + 1] - iterates[n]
        params = {"D": D, "p": p, "n": n, "dmax": dmax}
        report = CongruenceReport.judge("rate", params, diff, p, data.guaranteed_rate(n), 0, dmax + 1)
        if s is not None and report.observed_valuation is not None:
            report.notes.append(f"v_n - {s}n = {report.observed_valuation - s * n}")
        reports.append(report)
        if s is not None:
            excess_params = dict(params, s=s)
            reports.append(CongruenceReport.judge(
                "rate_excess", excess_params, diff, p, s * n, 0, dmax + 1,
                asserted=_excess_asserted(D, p, n),
            ))
    return reports


def alternating_check(D: int, p: int, nmax: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    """For eps = 1: differences of the sign-alternating iterates shrink at the guaranteed rate."""
    data = EpsilonData.from_D(D, p)
    if data.epsilon != 1:
        raise ValueError(f"alternating convergence needs eps = 1, got eps = {data.epsilon} for D={D}, p={p}")
    iterates = _signed_iterates(D, p, nmax, dmax, prec_cap)
    params = {"D": D, "p": p, "nmax": nmax, "dmax": dmax}
    reports = []
    vals: List[Optional[int]] = []
    for n in range(nmax):
        diff = iterates[n + 1] - iterates[n]
        vals.append(_window_val(diff, p, dmax))
        reports.append(CongruenceReport.judge(
            "alternating", dict(params, n=n), diff, p, data.guaranteed_rate(n), 0, dmax + 1,
        ))
    finite = [math.inf if v is None else v for v in vals]
    monotone = all(a <= b for a, b in zip(finite, finite[1:]))
    reports.append(CongruenceReport.from_bool(
        "alternating_monotone", params, monotone, asserted=False,
        notes=["valuations " + ", ".join("inf" if v is None else str(v) for v in vals)],
    ))
    return reports


def p3_refined(n: int, dmax: int, prec_cap: Optional[int] = None) -> List[CongruenceReport]:
    """
    The refined p = 3 picture modulo 3^(3n+3), reported without asserting:
    once against the limit -12 tH and once against the piecewise display
    (0 for (-d/3) in {0, 1}, -24 H(d) for (-d/3) = -1).
    """
    p = 3
    approx = limit_approx(1, p, n, dmax, prec_cap).series
    params = {"p": p, "n": n, "dmax": dmax}
    modulus = 3 * n + 3
    target = limit_target(1, p, dmax + 1)
    display = QSeries(
        {d: Fraction(-24) * hurwitz_H(d) for d in range(3, dmax + 1)
         if d % 4 in (0, 3) and kronecker(-d, 3) == -1},
        dmax + 1,
    )
    return [
        CongruenceReport.judge("p3_refined", dict(params, target="-12*tH"), approx - target, p, modulus,
                               0, dmax + 1, asserted=False),
        CongruenceReport.judge("p3_refined", dict(params, target="piecewise"), approx - display, p, modulus,
                               1, dmax + 1, asserted=False),
    ]



def eq_b1_lim_sweep(Dmax: int, dmax: int, p: int, n: int, prec_cap: Optional[int] = None) -> CongruenceReport:
    """eq_b1_lim_check over every D <= Dmax with (D/p) = 1 and every d in the table window."""
    table = jenkins_table(Dmax, dmax, p, n, prec_cap)
    params = {"Dmax": Dmax, "dmax": dmax, "p": p, "n": n}
    checked, outside = 0, 0
    failures: List[str] = []
    for D in range(1, Dmax + 1):
        if D % 4 not in (0, 1) or kronecker(D, p) != 1:
            continue
        for d in range(dmax + 1):
            try:
                report = eq_b1_lim_check(D, d, p, n, table)
            except TableWindowError:
                outside += 1
                continue
            checked += 1
            if report.verdict == Verdict.FAIL:
                failures.append(f"D={D} d={d}")
    if checked == 0:
        return CongruenceReport.unknown("eq_b1_lim", params, "table window too small for every instance")
    notes = [f"{checked} instances checked", f"{outside} outside the table window"] + failures[:5]
    return CongruenceReport.from_bool("eq_b1_lim", params, not failures, notes=notes)
