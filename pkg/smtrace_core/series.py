"""
Exact truncated Laurent series in q.

A QSeries stores its nonzero coefficients sparsely (exponent -> int or Fraction)
together with `prec`: every coefficient at an exponent below `prec` is trusted,
nothing at or above it is. All arithmetic derives the precision of its result
from the operands, so a caller can never read a coefficient that was not
actually computed.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import bernoulli, isprime, jacobi_symbol, multiplicity

from smtrace_core.errors import PrecisionError

log = logging.getLogger(__name__)

Rat = Union[int, Fraction]


def as_rat(x: Any) -> Rat:
    """Normalize to int when the value is integral, Fraction otherwise."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str):
        return as_rat(Fraction(x))
    raise TypeError(f"not an exact rational: {x!r}")


def rat_str(x: Rat) -> str:
    return str(Fraction(x))


def rat_mod(x: Rat, m: int) -> Optional[int]:
    """Residue of a rational modulo m, or None when the denominator is not invertible."""
    x = Fraction(x)
    try:
        inv = pow(x.denominator, -1, m)
    except ValueError:
        return None
    return (x.numerator * inv) % m


def padic_val(x: Rat, p: int) -> Union[int, float]:
    """ord_p of a rational; math.inf for 0."""
    x = Fraction(x)
    if x == 0:
        return math.inf
    return int(multiplicity(p, abs(x.numerator))) - int(multiplicity(p, x.denominator))


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers a, n."""
    a, n = int(a), int(n)
    if n == 0:
        return 1 if abs(a) == 1 else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -sign
    twos = 0
    while n % 2 == 0:
        n //= 2
        twos += 1
    if twos:
        if a % 2 == 0:
            return 0
        if twos % 2 and a % 8 in (3, 5):
            sign = -sign
    if n == 1:
        return sign
    return sign * int(jacobi_symbol(a % n, n))


def _require_odd_prime(p: int) -> None:
    if p == 2 or not isprime(p):
        raise ValueError(f"expected an odd prime, got {p}")


class QSeries:
    """Truncated Laurent series sum c_n q^n, trusted for n < prec."""

    __slots__ = ("_coeffs", "prec")

    def __init__(self, coeffs: Optional[Mapping[int, Any]] = None, prec: int = 0):
        self.prec = int(prec)
        store: Dict[int, Rat] = {}
        for n, c in (coeffs or {}).items():
            n = int(n)
            if n >= self.prec:
                continue
            c = as_rat(c)
            if c:
                store[n] = c
        self._coeffs = store

    # ----------------------------
    # Construction / access
    # ----------------------------
    @classmethod
    def constant(cls, c: Any, prec: int) -> "QSeries":
        return cls({0: c}, prec)

    @classmethod
    def from_dense(cls, values: Sequence[Any], low: int, prec: int) -> "QSeries":
        out = cls(None, prec)
        store = out._coeffs
        for i, v in enumerate(values):
            if v:
                n = low + i
                if n < prec:
                    store[n] = as_rat(v)
        return out

    @property
    def low(self) -> int:
        return min(self._coeffs) if self._coeffs else self.prec

    def __getitem__(self, n: int) -> Rat:
        if n >= self.prec:
            raise PrecisionError(f"coefficient q^{n} requested but series is only known below q^{self.prec}")
        return self._coeffs.get(n, 0)

    def get(self, n: int, default: Rat = 0) -> Rat:
        return self._coeffs.get(n, default)

    def items(self) -> List[Tuple[int, Rat]]:
        return sorted(self._coeffs.items())

    def exponents(self) -> Iterator[int]:
        return iter(sorted(self._coeffs))

    def __len__(self) -> int:
        return len(self._coeffs)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_integral(self) -> bool:
        return all(not isinstance(c, Fraction) for c in self._coeffs.values())

    def dense(self, lo: int, hi: int) -> np.ndarray:
        """Object array of the coefficients at lo..hi-1 (hi must not exceed prec)."""
        if hi > self.prec:
            raise PrecisionError(f"dense window up to q^{hi} exceeds precision {self.prec}")
        arr = np.zeros(max(hi - lo, 0), dtype=object)
        for n, c in self._coeffs.items():
            if lo <= n < hi:
                arr[n - lo] = c
        return arr

    def principal_part(self) -> "QSeries":
        return QSeries({n: c for n, c in self._coeffs.items() if n < 0}, min(self.prec, 0))

    def truncate(self, prec: int) -> "QSeries":
        return QSeries(self._coeffs, min(prec, self.prec))

    def shift(self, k: int) -> "QSeries":
        """Multiply by q^k exactly."""
        return QSeries({n + k: c for n, c in self._coeffs.items()}, self.prec + k)

    # ----------------------------
    # Arithmetic
    # ----------------------------
    def _coerce(self, other: Any) -> "QSeries":
        if isinstance(other, QSeries):
            return other
        return QSeries.constant(other, self.prec)

    def __add__(self, other: Any) -> "QSeries":
        other = self._coerce(other)
        prec = min(self.prec, other.prec)
        out = dict(self._coeffs)
        for n, c in other._coeffs.items():
            out[n] = out.get(n, 0) + c
        return QSeries(out, prec)

    __radd__ = __add__

    def __neg__(self) -> "QSeries":
        return QSeries({n: -c for n, c in self._coeffs.items()}, self.prec)

    def __sub__(self, other: Any) -> "QSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Any) -> "QSeries":
        return (-self) + other

    def scale(self, c: Any) -> "QSeries":
        c = as_rat(c)
        return QSeries({n: v * c for n, v in self._coeffs.items()}, self.prec)

    def __mul__(self, other: Any) -> "QSeries":
        if isinstance(other, QSeries):
            return _mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "QSeries":
        if isinstance(other, QSeries):
            return _div(self, other)
        return self.scale(Fraction(1) / Fraction(as_rat(other)))

    def __pow__(self, k: int) -> "QSeries":
        if k < 0:
            return QSeries.constant(1, self.prec - self.low) / (self ** (-k))
        if k == 0:
            return QSeries.constant(1, self.prec - self.low)
        result: Optional[QSeries] = None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return self.prec == other.prec and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.prec, tuple(sorted(self._coeffs.items()))))

    def agrees_with(self, other: "QSeries", lo: Optional[int] = None) -> bool:
        """Equality on the common trusted window (from lo, if given)."""
        hi = min(self.prec, other.prec)
        lo = min(self.low, other.low) if lo is None else lo
        mine = {n: c for n, c in self._coeffs.items() if lo <= n < hi}
        theirs = {n: c for n, c in other._coeffs.items() if lo <= n < hi}
        return mine == theirs

    # ----------------------------
    # Serialization
    # ----------------------------
    def to_json(self) -> Dict[str, Any]:
        return {
            "low": self.low,
            "prec": self.prec,
            "coeffs": {str(n): rat_str(c) for n, c in self.items()},
        }

    def __repr__(self) -> str:
        terms = [f"{rat_str(c)}*q^{n}" for n, c in self.items()[:8]]
        more = " + ..." if len(self._coeffs) > 8 else ""
        return f"QSeries({' + '.join(terms) or '0'}{more} + O(q^{self.prec}))"


def _mul(f: QSeries, g: QSeries) -> QSeries:
    prec = min(f.prec + g.low, g.prec + f.low)
    if f.is_zero() or g.is_zero():
        return QSeries(None, prec)
    if len(f) > len(g):
        f, g = g, f
    lo = f.low + g.low
    width = prec - lo
    if width <= 0:
        return QSeries(None, prec)
    # g dense on g.low .. prec - f.low, which never exceeds g.prec
    gd = g.dense(g.low, g.low + width)
    acc = np.zeros(width, dtype=object)
    f_low = f.low
    for e, c in f._coeffs.items():
        off = e - f_low
        if off >= width:
            continue
        acc[off:] += gd[: width - off] * c
    return QSeries.from_dense(acc, lo, prec)


def _div(f: QSeries, g: QSeries) -> QSeries:
    if g.is_zero():
        raise ZeroDivisionError("division by a series with no trusted nonzero coefficient")
    g_low = g.low
    g0 = g._coeffs[g_low]
    low = f.low - g_low
    rel = min(f.prec - f.low, g.prec - g_low)
    if rel <= 0 or f.is_zero():
        return QSeries(None, low + max(rel, 0))
    fd = f.dense(f.low, f.low + rel).tolist()
    tail = [(e - g_low, c) for e, c in g.items() if 0 < e - g_low < rel]
    h: List[Rat] = [0] * rel
    for i in range(rel):
        s = fd[i]
        for k, c in tail:
            if k > i:
                break
            hk = h[i - k]
            if hk:
                s -= c * hk
        if g0 == 1:
            h[i] = s
        elif g0 == -1:
            h[i] = -s
        else:
            h[i] = as_rat(Fraction(s) / g0)
    return QSeries.from_dense(h, low, low + rel)


# ----------------------------
# Operators U, V, twist, T_{l^2}
# ----------------------------
def u_op(f: QSeries, p: int) -> QSeries:
    """f|U_p: coefficient a(pn) at q^n."""
    if p < 1:
        raise ValueError("U_p needs p >= 1")
    return QSeries({n // p: c for n, c in f._coeffs.items() if n % p == 0}, -(-f.prec // p))


def v_op(f: QSeries, p: int) -> QSeries:
    """f|V_p: q -> q^p."""
    if p < 1:
        raise ValueError("V_p needs p >= 1")
    return QSeries({n * p: c for n, c in f._coeffs.items()}, f.prec * p)


def twist(f: QSeries, p: int) -> QSeries:
    """f (x) chi_p with chi_p(m) = (-m/p)."""
    _require_odd_prime(p)
    return QSeries({n: c * kronecker(-n, p) for n, c in f._coeffs.items()}, f.prec)


def hecke_T_ell2(f: QSeries, ell: int, p_coeff: Optional[Rat] = None) -> QSeries:
    """
    Weight 3/2 Hecke operator T_{ell^2}:
        f|U_{ell^2} + f (x) chi_ell + p_coeff * f|V_{ell^2}
    with p_coeff = ell unless given.
    """
    if ell % 2 == 0:
        raise ValueError(f"T_(ell^2) needs an odd prime ell, got {ell}")
    _require_odd_prime(ell)
    scalar = ell if p_coeff is None else p_coeff
    sq = ell * ell
    return u_op(f, sq) + twist(f, ell) + v_op(f, sq).scale(scalar)


# ----------------------------
# Theta, eta and Eisenstein expansions
# ----------------------------
def theta(scale: int, prec: int, alternating: bool = False) -> QSeries:
    """theta(q^scale) = sum over n in Z of q^(scale*n^2); alternating gives theta(-q^scale)."""
    coeffs: Dict[int, int] = {}
    k = 0
    while scale * k * k < prec:
        sign = -1 if (alternating and k % 2) else 1
        coeffs[scale * k * k] = sign * (1 if k == 0 else 2)
        k += 1
    return QSeries(coeffs, prec)


@lru_cache(maxsize=256)
def _euler(scale: int, prec: int) -> QSeries:
    """prod (1 - q^(scale*n)) via the pentagonal number theorem."""
    coeffs: Dict[int, int] = {}
    k = 0
    while scale * (k * (3 * k - 1) // 2) < prec:
        sign = -1 if k % 2 else 1
        coeffs[scale * (k * (3 * k - 1) // 2)] = sign
        if k:
            coeffs[scale * (k * (3 * k + 1) // 2)] = sign
        k += 1
    return QSeries(coeffs, prec)


@lru_cache(maxsize=256)
def _euler_cube(scale: int, prec: int) -> QSeries:
    """prod (1 - q^(scale*n))^3 via Jacobi's identity."""
    coeffs: Dict[int, int] = {}
    k = 0
    while scale * (k * (k + 1) // 2) < prec:
        coeffs[scale * (k * (k + 1) // 2)] = (-1) ** k * (2 * k + 1)
        k += 1
    return QSeries(coeffs, prec)


def eta_multiply(f: QSeries, factors: Sequence[Tuple[int, int]]) -> QSeries:
    """f * prod E(q^delta)^e with E(x) = prod (1 - x^n); no q^(1/24) powers."""
    if f.is_zero():
        return f
    rel = f.prec - f.low
    for delta, e in factors:
        if e == 0:
            continue
        cubes, single = divmod(abs(e), 3)
        for factor, times in ((_euler_cube(delta, rel), cubes), (_euler(delta, rel), single)):
            for _ in range(times):
                f = f * factor if e > 0 else f / factor
    return f


@dataclass(frozen=True)
class EtaProduct:
    """prod eta(delta*z)^e, kept symbolic until expanded."""

    factors: Tuple[Tuple[int, int], ...]

    @property
    def fractional_power(self) -> Fraction:
        return Fraction(sum(d * e for d, e in self.factors), 24)

    @property
    def weight(self) -> Fraction:
        return Fraction(sum(e for _, e in self.factors), 2)

    def __mul__(self, other: "EtaProduct") -> "EtaProduct":
        exps: Dict[int, int] = {}
        for d, e in self.factors + other.factors:
            exps[d] = exps.get(d, 0) + e
        return EtaProduct(tuple(sorted((d, e) for d, e in exps.items() if e)))

    def __pow__(self, k: int) -> "EtaProduct":
        return EtaProduct(tuple((d, e * k) for d, e in self.factors if e * k))


def eta_product(spec: EtaProduct, prec: int) -> QSeries:
    frac = spec.fractional_power
    if frac.denominator != 1:
        raise ValueError(f"eta product {spec.factors} has non-integral q-power {frac}")
    m = int(frac)
    if prec - m <= 0:
        return QSeries(None, prec)
    return eta_multiply(QSeries.constant(1, prec - m), spec.factors).shift(m)


def divisor_sigma_table(k: int, n: int) -> np.ndarray:
    """sigma_k(m) for 0 <= m < n as an object array (entry 0 is 0)."""
    table = np.zeros(max(n, 1), dtype=object)
    for d in range(1, n):
        table[d::d] += d ** k
    return table


def eisenstein_E(k: int, prec: int, scale: int = 1) -> QSeries:
    """Normalized level-one Eisenstein series E_k(q^scale) = 1 - (2k/B_k) sum sigma_(k-1)(n) q^(scale n)."""
    if k < 4 or k % 2:
        raise ValueError(f"E_k needs even k >= 4, got {k}")
    b = bernoulli(k)
    c = Fraction(-2 * k) / Fraction(int(b.p), int(b.q))
    span = -(-prec // scale)
    sig = divisor_sigma_table(k - 1, span)
    coeffs = {scale * m: c * sig[m] for m in range(1, span)}
    coeffs[0] = 1
    return QSeries(coeffs, prec)


# ----------------------------
# Valuations
# ----------------------------
def padic_val_series(f: QSeries, p: int, lo: Optional[int] = None, hi: Optional[int] = None) -> Union[int, float]:
    """inf over the trusted window lo <= n < min(hi, prec) of ord_p(a(n)); lo defaults to min(0, low)."""
    lo = min(f.low, 0) if lo is None else lo
    top = f.prec if hi is None else min(hi, f.prec)
    if lo >= top:
        raise PrecisionError(f"empty trusted window [{lo}, {top})")
    best: Union[int, float] = math.inf
    for n, c in f._coeffs.items():
        if lo <= n < top:
            v = padic_val(c, p)
            if v < best:
                best = v
    return best


def first_below(f: QSeries, p: int, m: int, lo: int, hi: int) -> Optional[Tuple[int, Rat, int]]:
    """Smallest exponent in [lo, hi) whose coefficient has ord_p < m, as (n, a(n), ord)."""
    for n, c in f.items():
        if lo <= n < min(hi, f.prec):
            v = padic_val(c, p)
            if v < m:
                return n, c, v
    return None


def congruent_mod(f: QSeries, g: QSeries, p: int, m: int, lo: Optional[int] = None) -> bool:
    """f == g mod p^m on the common trusted window."""
    diff = f - g
    start = min(f.low, g.low, 0) if lo is None else lo
    return padic_val_series(diff, p, start) >= m
