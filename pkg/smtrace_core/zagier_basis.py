"""
Zagier basis g_D = q^-D + sum B(D,d) q^d of the weight 3/2 plus space on Gamma0(4).

The ambient space of weakly holomorphic forms with poles of order <= N at the
cusps is spanned by theta^a F2^b / w6^N (a + 4b = 3 + 12N). With the
hauptmodul t = F2/theta^4 and s = theta^4/theta(-q)^4 = 1/(1 - 16t) these are

    theta^3 * s^N * t^(b - N),   b = 0 .. 3N,

and all three factors are eta quotients, so every element expands through the
sparse eta machinery of `series`. g_D is pinned down by its principal part and
the plus condition, solved exactly over QQ; the remaining coefficients of the
window are then checked, never assumed.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt, lcm
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from sympy import QQ, factorint
from sympy.polys.matrices import DomainMatrix

from smtrace_core.classnum import reduced_forms
from smtrace_core.errors import PrecisionError, TableWindowError, VerificationError
from smtrace_core.series import (
    EtaProduct,
    QSeries,
    as_rat,
    divisor_sigma_table,
    eisenstein_E,
    eta_multiply,
    eta_product,
    hecke_T_ell2,
    kronecker,
    theta,
    v_op,
)

log = logging.getLogger(__name__)

T_HAUPT = EtaProduct(((1, 8), (2, -24), (4, 16)))   # F2 / theta^4
S_RATIO = EtaProduct(((1, -16), (2, 24), (4, -8)))  # theta^4 / theta(-q)^4
THETA_CUBE = EtaProduct(((1, -6), (2, 15), (4, -6)))
W6 = EtaProduct(((2, 12),))


def _check_D(D: int) -> None:
    if D < 1 or D % 4 not in (0, 1):
        raise ValueError(f"g_D needs D >= 1 with D = 0,1 mod 4, got {D}")


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


# ----------------------------
# Generators and ambient space
# ----------------------------
@dataclass(frozen=True)
class PlusSpaceGens:
    theta: QSeries
    f2: QSeries
    w6: QSeries


def plus_space_gens(prec: int) -> PlusSpaceGens:
    """theta, F2 = sum_{n odd} sigma_1(n) q^n and w6 = F2 (theta^4 - 16 F2) theta^4, each from its definition."""
    th = theta(1, prec)
    sig = divisor_sigma_table(1, prec)
    f2 = QSeries({n: sig[n] for n in range(1, prec, 2)}, prec)
    th4 = th ** 4
    return PlusSpaceGens(theta=th, f2=f2, w6=f2 * (th4 - f2.scale(16)) * th4)


def times_t(f: QSeries) -> QSeries:
    return eta_multiply(f, T_HAUPT.factors).shift(1)


def build_ambient(Npole: int, prec: int) -> List[QSeries]:
    """theta^a F2^b w6^-N for b = 0..3N (so a = 3 + 12N - 4b), element b led by q^(b-N)."""
    if Npole < 1:
        raise ValueError("Npole must be >= 1")
    if prec <= 4 * Npole:
        raise PrecisionError(f"ambient space with poles of order {Npole} needs prec > {4 * Npole}, got {prec}")
    N = Npole
    element = eta_product(THETA_CUBE * S_RATIO ** N * T_HAUPT ** (-N), prec)
    basis = [element]
    for _ in range(3 * N):
        element = times_t(element)
        basis.append(element.truncate(prec))
    log.debug("ambient space N=%d built to q^%d (%d elements)", N, prec, len(basis))
    return basis


# ----------------------------
# Exact solve
# ----------------------------
def _to_fraction(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def _constraint_exponents(N: int, prec: int) -> List[int]:
    return [e for e in range(-N, prec) if e < 0 or e % 4 in (1, 2)]


@lru_cache(maxsize=32)
def solve_coordinates(N: int, Ds: Tuple[int, ...]) -> Dict[int, Tuple[Fraction, ...]]:
    """
    Coordinates of g_D (D in Ds, all D <= N) in the ambient space with poles <= N.

    One row reduction of [A | B]: A holds the ambient coefficients at q^-N..q^-1
    and at every plus-forbidden exponent of the solve window, B one right-hand
    side per D. The solve window doubles until the system is uniquely solvable.
    """
    for D in Ds:
        _check_D(D)
        if D > N:
            raise ValueError(f"D={D} exceeds pole order N={N}")
    solve_prec = 8 * N + 40
    for _ in range(3):
        ambient = build_ambient(N, solve_prec)
        exps = _constraint_exponents(N, solve_prec)
        ncols = len(ambient)
        rows = []
        for e in exps:
            values = [Fraction(f.get(e)) for f in ambient]
            row = [QQ(v.numerator, v.denominator) for v in values]
            row += [QQ(1) if e == -D else QQ(0) for D in Ds]
            rows.append(row)
        mat = DomainMatrix(rows, (len(rows), ncols + len(Ds)), QQ)
        rref, pivots = mat.rref()
        pivots = tuple(pivots)
        if any(pc >= ncols for pc in pivots):
            raise VerificationError(f"ambient system for N={N} is inconsistent; no plus-space form with these poles")
        if pivots == tuple(range(ncols)):
            red = rref.to_Matrix()
            return {
                D: tuple(_to_fraction(red[i, ncols + j]) for i in range(ncols))
                for j, D in enumerate(Ds)
            }
        log.info("ambient system N=%d underdetermined at prec %d; doubling", N, solve_prec)
        solve_prec *= 2
    raise PrecisionError(f"could not pin down g_D for N={N}; increase the solve precision")


def _clear_denominators(x: Sequence[Fraction]) -> Tuple[List[int], int]:
    den = 1
    for v in x:
        den = lcm(den, v.denominator)
    return [int(v * den) for v in x], den


def _divide_exact(values: np.ndarray, den: int) -> List[object]:
    if den == 1:
        return list(values)
    return [as_rat(Fraction(int(v), den)) for v in values]


def combine_ambient(ambient: Sequence[QSeries], x: Sequence[Fraction], N: int, prec: int) -> QSeries:
    """sum x_b * ambient[b] on q^-N .. q^(prec-1)."""
    X, den = _clear_denominators(x)
    acc = np.zeros(prec + N, dtype=object)
    for phi, coeff in zip(ambient, X):
        if coeff:
            acc += phi.dense(-N, prec) * coeff
    return QSeries.from_dense(_divide_exact(acc, den), -N, prec)


def horner_expand(N: int, x: Sequence[Fraction], prec: int) -> QSeries:
    """theta^3 s^N t^-N * sum x_b t^b to q^(prec-1), by Horner's rule in t."""
    X, den = _clear_denominators(x)
    acc = QSeries.constant(X[-1], prec + N)
    for coeff in reversed(X[:-1]):
        acc = times_t(acc) + coeff
    front = eta_product(THETA_CUBE * S_RATIO ** N * T_HAUPT ** (-N), prec)
    g = front * acc
    return QSeries.from_dense(_divide_exact(g.dense(-N, prec), den), -N, prec)


def verify_gD(g: QSeries, D: int) -> None:
    """Principal part q^-D, plus condition on the whole window, integrality, constant term."""
    principal = {n: c for n, c in g.items() if n < 0}
    if principal != {-D: 1}:
        raise VerificationError(f"g_{D}: principal part {principal} is not q^-{D}")
    bad = [n for n, c in g.items() if n >= 0 and n % 4 in (1, 2)]
    if bad:
        raise VerificationError(f"g_{D}: plus condition fails at q^{bad[0]} (overdetermination check)")
    if not g.is_integral():
        raise VerificationError(f"g_{D}: non-integral coefficient")
    if g.prec > 0 and g[0] != (-2 if is_square(D) else 0):
        raise VerificationError(f"g_{D}: constant term {g[0]} breaks the perfect-square rule")


def solve_gD(D: int, dmax: int) -> QSeries:
    """g_D with coefficients up to q^dmax."""
    _check_D(D)
    x = solve_coordinates(D, (D,))[D]
    g = horner_expand(D, x, dmax + 1)
    verify_gD(g, D)
    return g


# ----------------------------
# Deep expansions
# ----------------------------
def g1_closed_form(prec: int) -> QSeries:
    """g_1 = theta(-q) E4(q^4) / eta(4z)^6, up to q^(prec-1)."""
    span = -(-(prec + 1) // 4)
    inner = eta_multiply(eisenstein_E(4, span), ((1, -6),))
    g = theta(1, prec + 1, alternating=True) * v_op(inner, 4)
    return g.shift(-1).truncate(prec)


def hecke_lift(g: QSeries, D: int, p: int, g_lower: Optional[QSeries] = None) -> QSeries:
    """g_{p^2 D} = (g_D|T_{p^2} - (D/p) g_D - g_{D/p^2}) / p."""
    lifted = hecke_T_ell2(g, p) - g.scale(kronecker(D, p))
    if g_lower is not None:
        lifted = lifted - g_lower
    return lifted.scale(Fraction(1, p))


@lru_cache(maxsize=16)
def expand_gD(D: int, prec: int, route_cap: int = 400_000) -> QSeries:
    """
    g_D to q^(prec-1) by the cheapest available route: closed form for D = 1,
    Hecke lift when an odd p^2 divides D, otherwise Horner in t.
    """
    _check_D(D)
    if D == 1:
        g = g1_closed_form(prec)
        verify_gD(g, 1)
        return g
    for p in sorted(q for q, e in factorint(D).items() if q > 2 and e >= 2):
        if p * p * prec > route_cap:
            continue
        E = D // (p * p)
        base = expand_gD(E, p * p * prec, route_cap)
        lower = expand_gD(E // (p * p), prec, route_cap) if E % (p * p) == 0 else None
        g = hecke_lift(base, E, p, lower).truncate(prec)
        verify_gD(g, D)
        log.info("g_%d to q^%d via T_%d^2 lift of g_%d", D, prec, p, E)
        return g
    x = solve_coordinates(D, (D,))[D]
    log.info("g_%d to q^%d via Horner in the hauptmodul", D, prec)
    g = horner_expand(D, x, prec)
    verify_gD(g, D)
    return g


# ----------------------------
# GTable
# ----------------------------
@dataclass
class GTable:
    """B(D,d) for d = 0,3 mod 4, 0 <= d <= windows[D]."""

    rows: Dict[int, Dict[int, int]] = field(default_factory=dict)
    windows: Dict[int, int] = field(default_factory=dict)

    @property
    def Dmax(self) -> int:
        return max(self.windows, default=0)

    @property
    def dmax(self) -> int:
        return max(self.windows.values(), default=-1)

    def add_row(self, D: int, g: QSeries, dmax: Optional[int] = None) -> None:
        _check_D(D)
        top = g.prec - 1 if dmax is None else min(dmax, g.prec - 1)
        self.rows[D] = {d: int(g[d]) for d in range(0, top + 1) if d % 4 in (0, 3)}
        self.windows[D] = top

    def covers(self, D: int, d: int) -> bool:
        try:
            self.value(D, d)
        except TableWindowError:
            return False
        return True

    def value(self, D, d) -> int:
        """B(D,d); zero whenever (D,d) violates the support conditions."""
        D, d = Fraction(D), Fraction(d)
        if D.denominator != 1 or d.denominator != 1:
            return 0
        D, d = int(D), int(d)
        if D < 1 or d < 0 or D % 4 not in (0, 1) or d % 4 not in (0, 3):
            return 0
        if D not in self.windows or d > self.windows[D]:
            raise TableWindowError(f"table window too small for B({D},{d})")
        return self.rows[D].get(d, 0)

    def series(self, D: int) -> QSeries:
        coeffs = dict(self.rows[D])
        coeffs[-D] = 1
        return QSeries(coeffs, self.windows[D] + 1)

    def entries(self) -> Iterator[Tuple[int, int, int]]:
        for D in sorted(self.rows):
            for d in sorted(self.rows[D]):
                yield D, d, self.rows[D][d]

    def merge(self, other: "GTable") -> "GTable":
        out = GTable({D: dict(r) for D, r in self.rows.items()}, dict(self.windows))
        for D, row in other.rows.items():
            if D not in out.rows:
                out.rows[D] = dict(row)
                out.windows[D] = other.windows[D]
                continue
            overlap = min(out.windows[D], other.windows[D])
            for d in range(0, overlap + 1):
                if out.rows[D].get(d, 0) != row.get(d, 0):
                    raise VerificationError(f"conflicting values for B({D},{d}) while merging tables")
            if other.windows[D] > out.windows[D]:
                out.rows[D] = dict(row)
                out.windows[D] = other.windows[D]
        return out


def extend_by_hecke(table: GTable, p: int) -> GTable:
    """Add rows p^2 D for every stored row D; rows already present are cross-checked."""
    out = GTable({D: dict(r) for D, r in table.rows.items()}, dict(table.windows))
    for D in sorted(table.rows):
        new_D = p * p * D
        if D % (p * p) == 0 and (D // (p * p)) not in table.rows:
            log.debug("skip lift of g_%d: g_%d missing", D, D // (p * p))
            continue
        new_dmax = -(-(table.windows[D] + 1) // (p * p)) - 1
        if new_dmax < 0:
            continue
        lower = table.series(D // (p * p)) if D % (p * p) == 0 else None
        g = hecke_lift(table.series(D), D, p, lower)
        verify_gD(g, new_D)
        lifted = GTable()
        lifted.add_row(new_D, g, new_dmax)
        out = out.merge(lifted)
    return out


def _solve_row(job: Tuple[int, int]) -> Tuple[int, QSeries]:
    D, dmax = job
    return D, solve_gD(D, dmax)


def build_table(Dmax: int, dmax: int, lift_primes: Sequence[int] = (), threads: int = 1) -> GTable:
    """Rows D <= Dmax to q^dmax, then Hecke lifts for each prime until they stop producing rows."""
    Ds = tuple(D for D in range(1, Dmax + 1) if D % 4 in (0, 1))
    table = GTable()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for D, g in pool.map(_solve_row, [(D, dmax) for D in Ds]):
                table.add_row(D, g)
    else:
        coords = solve_coordinates(Dmax, Ds)
        ambient = build_ambient(Dmax, max(dmax + 1, 4 * Dmax + 1))
        for D in Ds:
            g = combine_ambient(ambient, coords[D], Dmax, dmax + 1)
            verify_gD(g, D)
            table.add_row(D, g)
            log.info("row g_%d solved to q^%d", D, dmax)
    for p in lift_primes:
        while True:
            before = dict(table.windows)
            table = extend_by_hecke(table, p)
            if table.windows == before:
                break
    return table


# ----------------------------
# CM trace oracle
# ----------------------------
def _j_invariant(tau: mpmath.mpc) -> mpmath.mpc:
    """j = E4^3 / Delta from q-expansions, summed until the tail drops below the working precision."""
    q = mpmath.exp(2j * mpmath.pi * tau)
    eps = mpmath.mpf(10) ** (-(mpmath.mp.dps + 10))
    e4 = mpmath.mpc(1)
    prod = mpmath.mpc(1)
    qn = mpmath.mpc(1)
    n = 0
    while True:
        n += 1
        qn *= q
        if n ** 3 * abs(qn) < eps:
            break
        e4 += 240 * n ** 3 * qn / (1 - qn)
        prod *= 1 - qn
    return e4 ** 3 / (q * prod ** 24)


def oracle_digits(d: int) -> int:
    forms = reduced_forms(d)
    a_min = min(q.a for q in forms)
    return int(2 * math.pi * math.sqrt(d) / a_min / math.log(10)) + 60


def cm_trace_oracle(d: int, precision_digits: Optional[int] = None) -> int:
    """-t(d) with t(d) = sum over reduced forms of (j(tau_Q) - 744)/w_Q."""
    forms = reduced_forms(d)
    digits = precision_digits or oracle_digits(d)
    with mpmath.workdps(digits):
        total = mpmath.mpc(0)
        for form in forms:
            tau = mpmath.mpc(-form.b, mpmath.sqrt(d)) / (2 * form.a)
            total += (_j_invariant(tau) - 744) / form.stabilizer_weight
        t = int(mpmath.nint(total.real))
        residual = abs(total.real - t) + abs(total.imag)
        if residual > mpmath.mpf(10) ** -10:
            raise PrecisionError(f"CM trace for d={d} not resolved at {digits} digits (residual {mpmath.nstr(residual, 5)})")
    return -t
