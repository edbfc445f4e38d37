"""
Hurwitz-Kronecker class numbers.

H(n) comes from the fundamental decomposition n = r*f^2 (-r a fundamental
discriminant) and the class numbers h(r), which are counted directly as
reduced positive definite forms. A numpy sieve over all reduced forms gives
both the bulk h(r) table behind `hurwitz_table` and an independent weighted
count used as an oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import gcd, isqrt
from typing import List, Set, Tuple

import numpy as np
from sympy import divisor_sigma, factorint, primerange

from smtrace_core.series import QSeries, kronecker

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinQuadForm:
    """Positive definite form a x^2 + b xy + c y^2."""

    a: int
    b: int
    c: int

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def normalize(self) -> "BinQuadForm":
        a, b, c = self.a, self.b, self.c
        r = (a - b) // (2 * a)
        return BinQuadForm(a, b + 2 * r * a, a * r * r + b * r + c)

    def reduce(self) -> "BinQuadForm":
        f = self.normalize()
        a, b, c = f.a, f.b, f.c
        while not (a < c or (a == c and b >= 0)):
            s = (c + b) // (2 * c)
            a, b, c = c, -b + 2 * s * c, c * s * s - b * s + a
        return BinQuadForm(a, b, c)

    @property
    def stabilizer_weight(self) -> int:
        """Half the order of the stabilizer of the reduced form: 3, 2 or 1."""
        if self.a == self.b == self.c:
            return 3
        if self.b == 0 and self.a == self.c:
            return 2
        return 1

    def content(self) -> int:
        return gcd(gcd(self.a, self.b), self.c)


@dataclass(frozen=True)
class FundDecomp:
    r: int
    f: int


def _check_discriminant(d: int) -> None:
    if d <= 0 or d % 4 not in (0, 3):
        raise ValueError(f"-{d} is not a negative discriminant (need d > 0, d = 0,3 mod 4)")


def reduced_forms(d: int, primitive: bool = False) -> List[BinQuadForm]:
    """All reduced forms of discriminant -d, optionally only the primitive ones."""
    _check_discriminant(d)
    out: List[BinQuadForm] = []
    for a in range(1, isqrt(d // 3) + 1):
        for b in range(-a + 1, a + 1):
            if (b - d) % 2:
                continue
            num = b * b + d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (a == c and b < 0):
                continue
            form = BinQuadForm(a, b, c)
            if primitive and form.content() > 1:
                continue
            out.append(form)
    return out


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(n).values())


def is_fundamental(r: int) -> bool:
    """True when -r is a fundamental discriminant."""
    if r <= 0:
        return False
    if r % 4 == 3:
        return _squarefree(r)
    if r % 4 == 0:
        m = r // 4
        return m % 4 in (1, 2) and _squarefree(m)
    return False


def fundamental_decomp(n: int) -> FundDecomp:
    """n = r*f^2 with -r fundamental."""
    _check_discriminant(n)
    square_free, root = 1, 1
    for p, e in factorint(n).items():
        if e % 2:
            square_free *= p
        root *= p ** (e // 2)
    if square_free % 4 == 3:
        return FundDecomp(square_free, root)
    return FundDecomp(4 * square_free, root // 2)


@lru_cache(maxsize=None)
def class_number_h(r: int) -> int:
    if not is_fundamental(r):
        raise ValueError(f"-{r} is not a fundamental discriminant")
    return len(reduced_forms(r))


def class_number_by_reduction(r: int) -> int:
    """Count classes by reducing every form in a box around the reduced region."""
    if not is_fundamental(r):
        raise ValueError(f"-{r} is not a fundamental discriminant")
    bound = isqrt(r) + 1
    seen: Set[Tuple[int, int, int]] = set()
    for a in range(1, bound + 1):
        for b in range(-bound, bound + 1):
            num = b * b + r
            if num % (4 * a):
                continue
            red = BinQuadForm(a, b, num // (4 * a)).reduce()
            seen.add((red.a, red.b, red.c))
    return len(seen)


def units_w(r: int) -> int:
    if not is_fundamental(r):
        raise ValueError(f"-{r} is not a fundamental discriminant")
    return {3: 3, 4: 2}.get(r, 1)


def _sigma1_prime_power(p: int, e: int) -> int:
    return (p ** (e + 1) - 1) // (p - 1)


def _mobius_sum(r: int, f: int) -> int:
    """sum over m | f of mu(m) (-r/m) sigma_1(f/m), as an Euler product."""
    total = 1
    for p, e in factorint(f).items():
        total *= _sigma1_prime_power(p, e) - kronecker(-r, p) * _sigma1_prime_power(p, e - 1)
    return total


@lru_cache(maxsize=None)
def hurwitz_H(n: int) -> Fraction:
    if n < 0:
        raise ValueError(f"H(n) needs n >= 0, got {n}")
    if n == 0:
        return Fraction(-1, 12)
    if n % 4 in (1, 2):
        return Fraction(0)
    dec = fundamental_decomp(n)
    primes = list(factorint(dec.f))
    total = 0
    for size in range(len(primes) + 1):
        for chosen in combinations(primes, size):
            m = 1
            for p in chosen:
                m *= p
            total += (-1) ** size * kronecker(-dec.r, m) * int(divisor_sigma(dec.f // m))
    return Fraction(class_number_h(dec.r), units_w(dec.r)) * total


# ----------------------------
# Bulk tables
# ----------------------------
@lru_cache(maxsize=8)
def _form_sieve(nmax: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Walk every reduced form with discriminant below nmax.

    Returns (counts, weighted6): counts[d] is the number of reduced forms of
    discriminant -d, weighted6[d] is 6 * sum 1/w_Q over the same forms.
    """
    counts = np.zeros(nmax, dtype=np.int64)
    weighted6 = np.zeros(nmax, dtype=np.int64)
    for a in range(1, isqrt(max(nmax - 1, 0) // 3) + 1):
        step = 4 * a
        for b in range(-a + 1, a + 1):
            c0 = a if b >= 0 else a + 1
            d0 = 4 * a * c0 - b * b
            if d0 >= nmax:
                continue
            counts[d0::step] += 1
            weighted6[d0::step] += 6
        if 3 * a * a < nmax:
            weighted6[3 * a * a] -= 4
        if 4 * a * a < nmax:
            weighted6[4 * a * a] -= 3
    log.debug("form sieve below %d done", nmax)
    return counts, weighted6


def _squarefree_mask(nmax: int) -> np.ndarray:
    mask = np.ones(max(nmax, 1), dtype=bool)
    for p in primerange(2, isqrt(max(nmax - 1, 1)) + 1):
        mask[p * p::p * p] = False
    return mask


@lru_cache(maxsize=8)
def hurwitz_table(nmax: int) -> Tuple[Fraction, ...]:
    """H(n) for 0 <= n < nmax by the class number formula, h(r) read off the form sieve."""
    counts, _ = _form_sieve(nmax)
    sqfree = _squarefree_mask(nmax)
    table = [Fraction(0)] * nmax
    if nmax > 0:
        table[0] = Fraction(-1, 12)
    for r in range(3, nmax):
        if r % 4 == 3:
            fundamental = bool(sqfree[r])
        elif r % 4 == 0:
            fundamental = (r // 4) % 4 in (1, 2) and bool(sqfree[r // 4])
        else:
            fundamental = False
        if not fundamental:
            continue
        base = Fraction(int(counts[r]), units_w(r))
        f = 1
        while r * f * f < nmax:
            table[r * f * f] = base * _mobius_sum(r, f)
            f += 1
    log.info("Hurwitz table below %d built", nmax)
    return tuple(table)


def hurwitz_table_by_forms(nmax: int) -> Tuple[Fraction, ...]:
    """Weighted count of all reduced forms (primitive or not); H(0) = -1/12 by convention."""
    _, weighted6 = _form_sieve(nmax)
    table = [Fraction(int(w), 6) for w in weighted6[:nmax]]
    if nmax > 0:
        table[0] = Fraction(-1, 12)
    return tuple(table)


def hurwitz_H_by_forms(n: int) -> Fraction:
    if n == 0:
        return Fraction(-1, 12)
    _check_discriminant(n)
    return Fraction(sum(Fraction(1, q.stabilizer_weight) for q in reduced_forms(n)))


@lru_cache(maxsize=8)
def series_H(prec: int) -> QSeries:
    """The generating series -1/12 + sum H(n) q^n."""
    if prec < 1:
        raise ValueError("series_H needs prec >= 1")
    return QSeries(dict(enumerate(hurwitz_table(prec))), prec)
