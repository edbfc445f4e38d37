"""
Modified Zagier-Eisenstein series and the weight 2 analogue.

    tH = H - H (x) chi_p - p H|V^2      (constant term (p-1)/12)
    tG = H - (1/p) H (x) chi_p - H|V^2

Everything here is checked on the trusted coefficient window only.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

from smtrace_core.classnum import series_H
from smtrace_core.schema import CongruenceReport
from smtrace_core.series import (
    QSeries,
    divisor_sigma_table,
    hecke_T_ell2,
    kronecker,
    padic_val_series,
    twist,
    u_op,
    v_op,
)

log = logging.getLogger(__name__)

DEFAULT_ELLS = (3, 5, 7, 11, 13)


def _check_p(p: int) -> None:
    if p == 2:
        raise ValueError("the modified Eisenstein series is only defined here for odd p")


@dataclass(frozen=True)
class ModEisenstein:
    p: int
    series: QSeries

    @property
    def prec(self) -> int:
        return self.series.prec

    def coefficient(self, d: int) -> Fraction:
        return Fraction(self.series[d])


def default_window(p: int) -> int:
    return 4 * p * p * 10


def tilde_H_series(p: int, prec: int) -> ModEisenstein:
    _check_p(p)
    H = series_H(prec)
    series = H - twist(H, p) - v_op(H, p * p).scale(p)
    return ModEisenstein(p=p, series=series)


def tilde_G_series(p: int, prec: int) -> QSeries:
    _check_p(p)
    H = series_H(prec)
    return H - twist(H, p).scale(Fraction(1, p)) - v_op(H, p * p)


def g2_series(prec: int) -> QSeries:
    sig = divisor_sigma_table(1, prec)
    coeffs = {n: sig[n] for n in range(1, prec)}
    coeffs[0] = Fraction(-1, 24)
    return QSeries(coeffs, prec)


def tilde_g2(p: int, prec: int) -> QSeries:
    g2 = g2_series(prec)
    return g2 - v_op(g2, p).scale(p)


def iterate_u(f: QSeries, p: int, times: int) -> QSeries:
    for _ in range(times):
        f = u_op(f, p)
    return f


# ----------------------------
# Identity reports
# ----------------------------
def membership_report(p: int, tH: QSeries) -> CongruenceReport:
    """tH lies in the minus space: zero at n = 1,2 mod 4 and wherever (-n/p) = +1."""
    params = {"p": p, "prec": tH.prec}
    bad = [
        n for n, _ in tH.items()
        if n > 0 and (n % 4 in (1, 2) or kronecker(-n, p) == 1)
    ]
    notes = [] if not bad else [f"nonzero coefficient at q^{bad[0]}"]
    ok = not bad and tH[0] == Fraction(p - 1, 12)
    return CongruenceReport.from_bool("eis.membership", params, ok, notes=notes)


def prop21_reports(p: int, prec: int, ells: Sequence[int] = DEFAULT_ELLS) -> List[CongruenceReport]:
    """The operator identities satisfied by H, tH and tG on a window of length prec."""
    _check_p(p)
    H = series_H(prec)
    tH = tilde_H_series(p, prec).series
    tG = tilde_G_series(p, prec)
    base = {"p": p, "prec": prec}
    reports: List[CongruenceReport] = [
        CongruenceReport.exact("eis.tildeH_U2", base, u_op(tH, p * p), tH),
        CongruenceReport.exact("eis.tildeH_from_U2", base, tH, u_op(H, p * p) - H.scale(p)),
        CongruenceReport.exact("eis.tildeG_U2", base, u_op(tG, p * p), tG.scale(p)),
        CongruenceReport.exact("eis.tildeH_minus_pG", base, tH - tG.scale(p), H.scale(1 - p)),
        membership_report(p, tH),
    ]
    for ell in ells:
        params = dict(base, ell=ell)
        reports.append(CongruenceReport.exact("classnum.H_hecke", params, hecke_T_ell2(H, ell), H.scale(ell + 1)))
        if ell != p:
            reports.append(CongruenceReport.exact("eis.tildeH_hecke", params, hecke_T_ell2(tH, ell), tH.scale(ell + 1)))

    m = 1
    while p ** (2 * m) < prec and m <= 4:
        lhs = iterate_u(H, p * p, m).scale(1 - p)
        params = dict(base, m=m)
        reports.append(CongruenceReport.exact("eis.U2m_identity", params, lhs - tH, tG.scale(-(p ** (m + 1)))))
        window_top = lhs.prec
        shift = padic_val_series(tG, p, 0, window_top)
        required = m + 1 + (shift if shift != float("inf") else 0)
        reports.append(CongruenceReport.judge(
            "eis.U2m_congruence", params, lhs - tH, p, int(required), 0, window_top,
            notes=[f"ord_p(tG) on the window is {shift}"],
        ))
        m += 1
    log.info("operator identity suite for p=%d prec=%d: %d reports", p, prec, len(reports))
    return reports


def g2_limit_reports(p: int, prec: int, mmax: int = 4) -> List[CongruenceReport]:
    """tG2|U = tG2 and (1-p) G2|U^m == tG2 mod p^(m+1)."""
    g2 = g2_series(prec)
    tg2 = tilde_g2(p, prec)
    base = {"p": p, "prec": prec}
    reports = [CongruenceReport.exact("eis.tildeG2_U", base, u_op(tg2, p), tg2)]
    m = 1
    while p ** m < prec and m <= mmax:
        lhs = iterate_u(g2, p, m).scale(1 - p)
        reports.append(CongruenceReport.judge("eis.G2_limit", dict(base, m=m), lhs - tg2, p, m + 1, 0, lhs.prec))
        m += 1
    return reports
