# src/wick/algebra.py

"""
Wick (Hermite) polynomial algebra for jointly Gaussian coordinates Z_1..Z_r with
covariance table C.

Polynomials are dicts {exponent tuple: coefficient}. Wick monomials are the
Hermite monomials orthogonalized with respect to C:
    :Z^a: = sum over partial pairings pi of (-1)^|pi| prod_{(i,j) in pi} C_ij Z^(unpaired)
Every identity here is checked against the pair-partition oracle
(Isserlis), which is unambiguous about constants.
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from src.utils.errors import ArgumentError

logger = logging.getLogger(__name__)

ISSERLIS_MAX_DEGREE = 8


@dataclass(frozen=True)
class WickMonomial:
    """:psi_{i_1} ... psi_{i_n}: with a rational coefficient; arguments are kept sorted."""
    arguments: tuple
    coefficient: Fraction = field(default=Fraction(1))

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(sorted(self.arguments)))

    @property
    def degree(self):
        return len(self.arguments)

    def exponents(self, n_vars):
        exps = [0] * n_vars
        for a in self.arguments:
            exps[a] += 1
        return tuple(exps)

    def to_polynomial(self, cov):
        poly = wick_polynomial(self.exponents(len(cov)), cov)
        return poly_scale(poly, self.coefficient)


def wick_product_expand(m, n):
    """
    Coefficient table of :phi^m: :psi^n: = sum_l m! n! / (p! q! l!) c^l :phi^p psi^q:,
    with p = m - l, q = n - l and c = E[phi psi].

    Returns:
        list[tuple]: (p, q, l, coefficient) for l = 0..min(m, n)
    """
    if m < 0 or n < 0:
        raise ArgumentError(f"Wick degrees must be nonnegative, got {m}, {n}")
    table = []
    for l in range(min(m, n) + 1):
        p, q = m - l, n - l
        coeff = factorial(m) * factorial(n) // (factorial(p) * factorial(q) * factorial(l))
        table.append((p, q, l, coeff))
    return table


def _expand_exponents(exps):
    return [i for i, e in enumerate(exps) for _ in range(e)]


def _partial_matchings(items):
    """Yield (pairs, unpaired) over all partial matchings of a list of slots."""
    if not items:
        yield [], []
        return
    first, rest = items[0], items[1:]
    for pairs, free in _partial_matchings(rest):
        yield pairs, [first] + free
    for i in range(len(rest)):
        others = rest[:i] + rest[i + 1:]
        for pairs, free in _partial_matchings(others):
            yield [(first, rest[i])] + pairs, free


def _perfect_matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        others = rest[:i] + rest[i + 1:]
        for pairs in _perfect_matchings(others):
            yield [(first, rest[i])] + pairs


def poly_add(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def poly_scale(a, c):
    return {k: v * c for k, v in a.items() if v * c != 0}


def poly_multiply(a, b):
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def wick_polynomial(exponents, cov):
    """
    Expand :Z^a: into ordinary monomials.

    Args:
        exponents (tuple[int]): Exponent per coordinate
        cov (list[list]): Covariance table E[Z_i Z_j]

    Returns:
        dict: {exponent tuple: coefficient}
    """
    slots = _expand_exponents(exponents)
    r = len(exponents)
    poly = {}
    for pairs, free in _partial_matchings(list(range(len(slots)))):
        coeff = (-1) ** len(pairs)
        for i, j in pairs:
            coeff = coeff * cov[slots[i]][slots[j]]
        exps = [0] * r
        for s in free:
            exps[slots[s]] += 1
        key = tuple(exps)
        poly[key] = poly.get(key, 0) + coeff
    return {k: v for k, v in poly.items() if v != 0}


def gaussian_moment(exponents, cov):
    """E[Z^a] by summing covariance products over perfect pairings."""
    slots = _expand_exponents(exponents)
    if len(slots) % 2:
        return 0
    total = 0
    for pairs in _perfect_matchings(list(range(len(slots)))):
        term = 1
        for i, j in pairs:
            term = term * cov[slots[i]][slots[j]]
        total = total + term
    return total


def isserlis_oracle(poly, cov):
    """
    Exact expectation of a polynomial in jointly Gaussian coordinates.

    Args:
        poly (dict): {exponent tuple: coefficient}
        cov (list[list]): Covariance table

    Returns:
        Expectation (Fraction when the inputs are rational)
    """
    total = 0
    for exps, coeff in poly.items():
        degree = sum(exps)
        if degree > ISSERLIS_MAX_DEGREE:
            raise ArgumentError(f"Monomial degree {degree} exceeds the pairing cap {ISSERLIS_MAX_DEGREE}")
        total = total + coeff * gaussian_moment(exps, cov)
    return total


def permanent(matrix):
    """Ryser's formula; exact for Fraction entries."""
    n = len(matrix)
    if n == 0:
        return 1
    total = 0
    for size in range(1, n + 1):
        for cols in itertools.combinations(range(n), size):
            prod = 1
            for row in matrix:
                prod = prod * sum(row[c] for c in cols)
            total = total + (-1) ** size * prod
    return (-1) ** n * total


def wick_expectation(args, gram):
    """E[:psi_args: :psi_args:] = permanent of the Gram table restricted to args."""
    sub = [[gram[a][b] for b in args] for a in args]
    return permanent(sub)


def wick_product_polynomial(m, n, cov):
    """Right-hand side of the product formula for coordinates 0 and 1, as a polynomial."""
    c = cov[0][1]
    out = {}
    for p, q, l, coeff in wick_product_expand(m, n):
        out = poly_add(out, poly_scale(wick_polynomial((p, q), cov), coeff * c ** l))
    return out


def check_product_identity(m, n, cov):
    """
    Compare :Z_0^m: :Z_1^n: with its Wick expansion; returns (polynomials equal,
    oracle expectation of the product, expectation of the expansion).
    """
    lhs = poly_multiply(wick_polynomial((m, 0), cov), wick_polynomial((0, n), cov))
    rhs = wick_product_polynomial(m, n, cov)
    same = poly_add(lhs, poly_scale(rhs, -1)) == {}
    return same, isserlis_oracle(lhs, cov), isserlis_oracle(rhs, cov)


def random_gram(n_vars, rng, denominator=8):
    """Random rational covariance C = A A^T, A with entries in {-3..3}/denominator."""
    a = [[Fraction(int(rng.integers(-3, 4)), denominator) for _ in range(n_vars)] for _ in range(n_vars)]
    return [[sum(a[i][k] * a[j][k] for k in range(n_vars)) for j in range(n_vars)] for i in range(n_vars)]
