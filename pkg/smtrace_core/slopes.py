"""
Slopes of T_p on level one cusp forms of weight k = 2 + (p-1) p^A.

The Victor Miller basis is built modulo p^M (or exactly, for small k) with
series products done by Kronecker substitution: pack the residues into one big
integer, multiply once, unpack. The characteristic polynomial comes from the
division-free Berkowitz recurrence, so every step stays in Z/p^M.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, multiplicity

from smtrace_core.errors import PrecisionError
from smtrace_core.schema import SlopeReport
from smtrace_core.series import EtaProduct, QSeries, divisor_sigma_table, eisenstein_E, eta_product, rat_str

log = logging.getLogger(__name__)

EXPECTED_S = {3: 3, 5: 2, 7: 2, 11: 2, 13: 1}
DEFAULT_M = 64
M_CAP = 1024


def A_cap(p: int) -> int:
    return 5 if p == 3 else 2


def slope_weight(p: int, A: int) -> int:
    return 2 + (p - 1) * p ** A


def cusp_dim(k: int) -> int:
    if k < 12 or k % 2:
        return 0
    return k // 12 - 1 if k % 12 == 2 else k // 12


# ----------------------------
# Truncated products
# ----------------------------
def _slot_bytes(prec: int, modulus: int) -> int:
    bits = 2 * modulus.bit_length() + prec.bit_length() + 1
    return -(-bits // 8)


def _pack(a: np.ndarray, width: int) -> int:
    return int.from_bytes(b"".join(int(x).to_bytes(width, "little") for x in a), "little")


def _unpack(n: int, width: int, count: int, modulus: int) -> np.ndarray:
    raw = n.to_bytes(width * (2 * count + 1), "little")
    out = np.empty(count, dtype=object)
    for i in range(count):
        out[i] = int.from_bytes(raw[i * width:(i + 1) * width], "little") % modulus
    return out


def _mul(a: np.ndarray, b: np.ndarray, prec: int, modulus: Optional[int]) -> np.ndarray:
    if modulus is not None:
        width = _slot_bytes(prec, modulus)
        return _unpack(_pack(a[:prec], width) * _pack(b[:prec], width), width, prec, modulus)
    out = np.zeros(prec, dtype=object)
    for i in range(prec):
        x = a[i]
        if x:
            out[i:] += x * b[:prec - i]
    return out


def _dense(f: QSeries, prec: int, modulus: Optional[int]) -> np.ndarray:
    arr = f.dense(0, prec)
    return arr % modulus if modulus is not None else arr


def delta_series(prec: int) -> QSeries:
    """(E4^3 - E6^2) / 1728."""
    e4 = eisenstein_E(4, prec)
    e6 = eisenstein_E(6, prec)
    return (e4 ** 3 - e6 ** 2).scale(Fraction(1, 1728))


# ----------------------------
# Victor Miller basis
# ----------------------------
@dataclass
class Level1Basis:
    k: int
    dim: int
    prec: int
    modulus: Optional[int]
    rows: np.ndarray  # rows[i-1] holds f_i = q^i + sum_{j > dim} a_i(j) q^j

    @property
    def basis(self) -> List[QSeries]:
        return [QSeries.from_dense(list(row), 0, self.prec) for row in self.rows]

    def is_echelon(self) -> bool:
        for i in range(self.dim):
            for j in range(1, self.dim + 1):
                if self.rows[i][j] != (1 if j == i + 1 else 0):
                    return False
        return True


def _weight_split(r: int) -> Tuple[int, int]:
    """(a, b) with 4a + 6b = r, r in {0, 4, 6, 8, 10, 14}."""
    for b in (0, 1):
        if (r - 6 * b) >= 0 and (r - 6 * b) % 4 == 0:
            return (r - 6 * b) // 4, b
    raise ValueError(f"no E4^a E6^b of weight {r}")


def victor_miller(k: int, prec: int, modulus: Optional[int] = None) -> Level1Basis:
    """
    Echelon basis f_1..f_d of S_k, f_i = q^i + O(q^(d+1)).

    g_i = Delta^i E6^(2(d-i)) E4^a E6^b with 4a + 6b = k - 12d, then
    back-substitution clears the q^j coefficients, j = i+1..d.
    """
    if k % 2 or k < 12:
        raise ValueError(f"victor_miller needs even k >= 12, got {k}")
    d = cusp_dim(k)
    if d == 0:
        raise ValueError(f"S_{k} is zero")
    if prec <= d:
        raise PrecisionError(f"basis of S_{k} needs prec > {d}, got {prec}")
    a, b = _weight_split(k - 12 * d)
    e4 = _dense(eisenstein_E(4, prec), prec, modulus)
    e6 = _dense(eisenstein_E(6, prec), prec, modulus)
    delta = _dense(eta_product(EtaProduct(((1, 24),)), prec), prec, modulus)
    e6_sq = _mul(e6, e6, prec, modulus)

    tail = np.zeros(prec, dtype=object)
    tail[0] = 1
    for _ in range(a):
        tail = _mul(tail, e4, prec, modulus)
    if b:
        tail = _mul(tail, e6, prec, modulus)
    # tails[j] = E6^(2j) E4^a E6^b
    tails = [tail]
    for _ in range(d - 1):
        tails.append(_mul(tails[-1], e6_sq, prec, modulus))

    rows = np.zeros((d, prec), dtype=object)
    power = delta
    for i in range(1, d + 1):
        rows[i - 1] = _mul(power, tails[d - i], prec, modulus)
        if i < d:
            power = _mul(power, delta, prec, modulus)

    for i in range(d - 2, -1, -1):
        for j in range(i + 1, d):
            c = rows[i][j + 1]
            if c:
                rows[i] = rows[i] - c * rows[j]
                if modulus is not None:
                    rows[i] = rows[i] % modulus
    log.debug("Victor Miller basis k=%d dim=%d prec=%d", k, d, prec)
    return Level1Basis(k=k, dim=d, prec=prec, modulus=modulus, rows=rows)


def hecke_Tp_matrix(basis: Level1Basis, p: int) -> np.ndarray:
    """Row i: coordinates of T_p f_i, read off the q^1..q^dim coefficients a(pn) + p^(k-1) a(n/p)."""
    if not isprime(p):
        raise ValueError(f"T_p needs a prime, got {p}")
    d = basis.dim
    if basis.prec <= p * d:
        raise PrecisionError(f"T_{p} on S_{basis.k} needs prec > {p * d}, got {basis.prec}")
    m = basis.modulus
    pk = pow(p, basis.k - 1, m) if m is not None else p ** (basis.k - 1)
    mat = np.zeros((d, d), dtype=object)
    for i in range(d):
        row = basis.rows[i]
        for j in range(1, d + 1):
            v = row[p * j]
            if j % p == 0:
                v += pk * row[j // p]
            mat[i, j - 1] = v % m if m is not None else v
    return mat


def charpoly_mod(matrix: Sequence[Sequence[int]], p: int, M: int) -> List[int]:
    """det(xI - A) mod p^M by Berkowitz; coefficients c_0..c_n ascending, c_n = 1."""
    if M < 1:
        raise ValueError("M must be >= 1")
    m = p ** M
    A = np.array(matrix, dtype=object) % m if len(matrix) else np.zeros((0, 0), dtype=object)
    n = A.shape[0]
    poly = [1]
    for r in range(1, n + 1):
        R = A[r - 1, :r - 1]
        C = A[:r - 1, r - 1]
        sub = A[:r - 1, :r - 1]
        col = [1, int(-A[r - 1, r - 1]) % m]
        v = C
        for step in range(r - 1):
            col.append(int(-np.dot(R, v)) % m)
            if step < r - 2:
                v = np.dot(sub, v) % m
        new = []
        for i in range(r + 1):
            s = 0
            for j in range(max(0, i - r), min(i, r - 1) + 1):
                s += col[i - j] * poly[j]
            new.append(s % m)
        poly = new
    return list(reversed(poly))


# ----------------------------
# Newton polygon
# ----------------------------
@dataclass
class NewtonPolygon:
    p: int
    M: int
    points: List[Tuple[int, int]]
    hull: List[Tuple[int, int]]
    slopes: List[Fraction]
    infinite: int = 0
    uncertified: Tuple[int, ...] = ()
    valuations: List[Optional[int]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not any(i in self.uncertified for i, _ in self.hull)

    def min_nonzero(self) -> Optional[Fraction]:
        """
        Smallest positive slope, or None when every root is a unit.

        Coefficients that vanish mod p^M only bound their valuation from below
        by M; the answer stands if no such point could lower it.
        """
        vals = self.valuations
        i0 = min(i for i, v in enumerate(vals) if v == 0)
        if i0 == 0:
            return None
        best: Optional[Fraction] = None
        bound: Optional[Fraction] = None
        for i in range(i0):
            if vals[i] is None:
                r = Fraction(self.M, i0 - i)
                bound = r if bound is None else min(bound, r)
            else:
                r = Fraction(vals[i], i0 - i)
                best = r if best is None else min(best, r)
        if best is None or (bound is not None and bound < best):
            raise PrecisionError(f"minimal slope not certified at M={self.M}; increase M")
        return best


def _cross(o: Tuple[int, int], a: Tuple[int, int], b: Tuple[int, int]) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_hull(points: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    hull: List[Tuple[int, int]] = []
    for pt in points:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return hull


def newton_slopes(poly: Sequence[int], p: int, M: int) -> NewtonPolygon:
    """
    Lower hull of (i, ord_p c_i) for ascending coefficients reduced mod p^M.

    A leading run c_0 = ... = c_(z-1) = 0 counts as z infinite slopes; other
    zero residues sit at height M and are flagged uncertified.
    """
    m = p ** M
    coeffs = [int(c) % m for c in poly]
    if not coeffs or coeffs[-1] % p == 0:
        raise ValueError("leading coefficient must be a unit mod p")
    vals: List[Optional[int]] = [None if c == 0 else int(multiplicity(p, c)) for c in coeffs]
    z = 0
    while vals[z] is None:
        z += 1
    points = [(i, M if v is None else v) for i, v in enumerate(vals) if i >= z]
    flagged = tuple(i for i, v in enumerate(vals) if v is None and i >= z)
    hull = _lower_hull(points)
    slopes: List[Fraction] = []
    for (i1, v1), (i2, v2) in zip(hull, hull[1:]):
        slopes.extend([Fraction(v1 - v2, i2 - i1)] * (i2 - i1))
    slopes.sort()
    return NewtonPolygon(p=p, M=M, points=points, hull=hull, slopes=slopes, infinite=z,
                         uncertified=flagged, valuations=vals)


def up_root_valuations(slopes: Sequence[Fraction], k: int) -> List[Tuple[Fraction, Fraction]]:
    """Valuations of the two roots of x^2 - a_p x + p^(k-1) for each T_p slope v."""
    half = Fraction(k - 1, 2)
    out = []
    for v in slopes:
        v = Fraction(v)
        out.append((v, k - 1 - v) if v < half else (half, half))
    return out


# ----------------------------
# Jobs
# ----------------------------
def slope_job(p: int, A: int, M: int = DEFAULT_M) -> SlopeReport:
    """One (p, A): T_p charpoly mod p^M, M doubling until the minimal nonzero slope is certified."""
    k = slope_weight(p, A)
    dim = cusp_dim(k)
    if dim == 0:
        return SlopeReport(p=p, A=A, k=k, dim=0, M=M, certified=True)
    while True:
        basis = victor_miller(k, p * dim + 1, modulus=p ** M)
        poly = charpoly_mod(hecke_Tp_matrix(basis, p), p, M)
        polygon = newton_slopes(poly, p, M)
        try:
            s = polygon.min_nonzero()
            break
        except PrecisionError:
            if 2 * M > M_CAP:
                raise
            log.info("p=%d A=%d: raising M %d -> %d", p, A, M, 2 * M)
            M *= 2
    log.info("p=%d A=%d k=%d dim=%d: minimal nonzero slope %s", p, A, k, dim, s)
    return SlopeReport(
        p=p, A=A, k=k, dim=dim, M=M,
        slopes=[rat_str(v) for v in polygon.slopes],
        min_nonzero=None if s is None else rat_str(s),
        certified=True,
        up_root_valuations=[[rat_str(a), rat_str(b)] for a, b in up_root_valuations(polygon.slopes, k)],
    )


def min_nonzero_slope(p: int, A: int, M: int = DEFAULT_M) -> Optional[Fraction]:
    """Minimal nonzero T_p slope at the first A' >= A with a nonzero cusp space."""
    while cusp_dim(slope_weight(p, A)) == 0:
        log.debug("S_%d is zero; raising A", slope_weight(p, A))
        A += 1
    report = slope_job(p, A, M)
    return None if report.min_nonzero is None else Fraction(report.min_nonzero)


def stabilize(p: int, M: int = DEFAULT_M, A_max: Optional[int] = None, A_start: int = 1) -> SlopeReport:
    """Raise A until the minimal nonzero slope agrees on two consecutive informative A, or the cap."""
    cap = A_cap(p) if A_max is None else A_max
    history: List[Dict[str, object]] = []
    last: Optional[SlopeReport] = None
    for A in range(A_start, cap + 1):
        job = slope_job(p, A, M)
        history.append({"A": A, "k": job.k, "dim": job.dim, "M": job.M, "min_nonzero": job.min_nonzero})
        if job.dim == 0 or job.min_nonzero is None:
            continue
        if last is not None and last.min_nonzero == job.min_nonzero:
            return job.model_copy(update={"stabilized": True, "history": history})
        last = job
    if last is None:
        raise PrecisionError(f"no informative weight for p={p} up to A={cap}")
    log.warning("p=%d: minimal slope did not stabilize by A=%d", p, cap)
    return last.model_copy(update={"stabilized": False, "history": history})
