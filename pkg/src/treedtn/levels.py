"""Whole-level evaluation of the explicit solution.

The per-vertex :class:`~treedtn.dirichlet.Solution` is convenient for a
handful of queries; sweeps over every vertex of a deep tree go through the
vectorized routines here.

Exact sweeps keep everything as integers.  With ``beta = a/b`` and
``p = beta/(1-beta) = P/Q`` in lowest terms, and level integrals sharing the
denominator ``E``, the solution at level ``k`` is ``N_k / (E * Q**k)`` where

    N_0 = I_0,
    N_k = P * N_{k-1}[parent] + (Q - P) * Q**(k-1) * m**k * I_k.

Multiplying the mean-value residual by ``b * m * E * Q**(k+1)`` gives the
integer

    R_k = b*m*Q * N_k - a*m*Q**2 * N_{k-1}[parent] - (b - a) * sum N_{k+1}[children]

(and ``m*Q*N_0 - sum N_1`` at the root).  These recurrences run either on
Python integers or in int64 modulo a few primes below 2**31; in the modular
case ``R = 0`` is certified once the product of the primes exceeds ``2|R|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, NoBoundedSolutionError, UnsupportedOperationError
from .tree import Vertex, as_rational

# primes just below 2**31; products of two residues fit in int64
PRIMES = (2147483647, 2147483629, 2147483587, 2147483579, 2147483563,
          2147483549, 2147483543, 2147483497, 2147483489, 2147483477,
          2147483423, 2147483399, 2147483353, 2147483323, 2147483269,
          2147483249, 2147483237, 2147483179, 2147483171, 2147483137)


def _check_beta(beta) -> Fraction:
    beta = as_rational(beta)
    if not 0 <= beta < Fraction(1, 2):
        raise NoBoundedSolutionError(f"level sweeps need 0 <= beta < 1/2, got {beta}")
    return beta


def _aggregate_levels(deepest, m, depth, modulus):
    levels = [deepest]
    for _ in range(depth):
        up = levels[-1].reshape(-1, m).sum(axis=1)
        if modulus is not None:
            up %= modulus
        levels.append(up)
    return levels[::-1]


def integer_level_integrals(datum, m: int, depth: int, modulus: int | None = None):
    """Integral numerators for levels ``0..depth`` over a common denominator."""
    if not hasattr(datum, "exact_level_integrals"):
        raise UnsupportedOperationError(f"{type(datum).__name__} has no exact level integrals")
    deepest, denominator = datum.exact_level_integrals(m, depth, modulus)
    return _aggregate_levels(deepest, m, depth, modulus), denominator


def _numerators(integrals, beta: Fraction, m: int, modulus):
    P, Q = beta.numerator, beta.denominator - beta.numerator
    nums = [integrals[0]]
    qpow = 1  # Q**(k-1)
    for k in range(1, len(integrals)):
        coef = (Q - P) * qpow * m**k
        parent = np.repeat(nums[-1], m)
        if modulus is None:
            nums.append(P * parent + coef * integrals[k])
        else:
            nums.append((P % modulus * parent % modulus
                         + coef % modulus * integrals[k] % modulus) % modulus)
        qpow *= Q
    return nums


def _residuals(nums, beta: Fraction, m: int, modulus):
    """Integer residual numerators for levels ``0..len(nums)-2``."""
    a, b = beta.numerator, beta.denominator
    Q = b - a
    out = []
    child_sums = [n.reshape(-1, m).sum(axis=1) for n in nums[1:]]
    for k in range(len(nums) - 1):
        if modulus is not None:
            child_sums[k] %= modulus
        if k == 0:
            c_self, c_par, c_kids = m * Q, 0, 1
            parent = 0
        else:
            c_self, c_par, c_kids = b * m * Q, a * m * Q * Q, b - a
            parent = np.repeat(nums[k - 1], m)
        if modulus is None:
            r = c_self * nums[k] - c_par * parent - c_kids * child_sums[k]
        else:
            r = (c_self % modulus * nums[k] % modulus
                 - c_par % modulus * parent % modulus
                 - c_kids % modulus * child_sums[k] % modulus) % modulus
        out.append(r)
    return out


def exact_level_values(datum, beta, m: int, depth: int) -> list[np.ndarray]:
    """Exact solution values (object arrays of ``Fraction``) for levels ``0..depth``."""
    beta = _check_beta(beta)
    integrals, E = integer_level_integrals(datum, m, depth)
    nums = _numerators(integrals, beta, m, None)
    Q = beta.denominator - beta.numerator
    return [np.array([Fraction(int(v), E * Q**k) for v in n], dtype=object)
            for k, n in enumerate(nums)]


def exact_level_residuals(datum, beta, m: int, depth: int) -> list[np.ndarray]:
    """Exact residual numerators (Python integers) at every vertex of level ``<= depth``.

    Zero entries are exactly the vertices where the mean-value identity holds.
    """
    beta = _check_beta(beta)
    integrals, _ = integer_level_integrals(datum, m, depth + 1)
    return _residuals(_numerators(integrals, beta, m, None), beta, m, None)


def _sup_bound(datum) -> Fraction:
    """A crude rational bound for sup|g|."""
    pieces = getattr(datum, "pieces", None)
    if pieces is None and hasattr(datum, "coefficients"):
        pieces = [datum]
    if pieces is None:
        return Fraction(1)  # indicators
    return max(sum(abs(c) for c in p.coefficients) for p in pieces)


@dataclass
class ResidualCertificate:
    """Outcome of an exact residual sweep."""

    m: int
    beta: Fraction
    depth: int
    vertices_checked: int
    nonzero: list = field(default_factory=list)
    primes: tuple = ()
    bound_bits: int = 0

    @property
    def all_zero(self) -> bool:
        return not self.nonzero


def certify_harmonic(datum, beta, m: int, depth: int) -> ResidualCertificate:
    """Check the mean-value identity exactly at every vertex of level ``<= depth``.

    Residual numerators are computed modulo enough primes that a residual
    vanishing modulo all of them is zero as an integer.
    """
    beta = _check_beta(beta)
    a, b = beta.numerator, beta.denominator
    Q = b - a
    first = integer_level_integrals(datum, m, depth + 1, PRIMES[0])
    E = first[1]
    bound = 2 * math.ceil(_sup_bound(datum)) * b * m * E * Q ** (depth + 1)
    primes, product = [], 1
    for prime in PRIMES:
        if product > 2 * bound:
            break
        primes.append(prime)
        product *= prime
    if product <= 2 * bound:
        raise UnsupportedOperationError("residual bound exceeds the available prime product")

    nonzero = set()
    for prime in primes:
        integrals = first[0] if prime == PRIMES[0] else \
            integer_level_integrals(datum, m, depth + 1, prime)[0]
        residuals = _residuals(_numerators(integrals, beta, m, prime), beta, m, prime)
        for k, r in enumerate(residuals):
            for idx in np.flatnonzero(r):
                nonzero.add((k, int(idx)))
    bad = [_vertex_from_index(m, k, i) for k, i in sorted(nonzero)]
    checked = sum(m**k for k in range(depth + 1))
    return ResidualCertificate(m, beta, depth, checked, bad, tuple(primes), bound.bit_length())


def _vertex_from_index(m, level, index) -> Vertex:
    digits = []
    for _ in range(level):
        index, d = divmod(index, m)
        digits.append(d)
    return Vertex(m, tuple(reversed(digits)))


def float_level_integrals(datum, m: int, depth: int) -> list[np.ndarray]:
    if hasattr(datum, "float_level_integrals"):
        deepest = datum.float_level_integrals(m, depth)
    else:
        # black-box data: one adaptive quadrature per deepest interval
        n = m**depth
        deepest = np.array([datum.integral(i / n, (i + 1) / n) for i in range(n)])
    return _aggregate_levels(deepest, m, depth, None)


def float_level_values(datum, beta, m: int, depth: int) -> list[np.ndarray]:
    """Double-precision solution values for levels ``0..depth``."""
    beta = _check_beta(beta)
    p = float(beta / (1 - beta))
    integrals = float_level_integrals(datum, m, depth)
    values = [integrals[0]]
    for k in range(1, depth + 1):
        values.append(p * np.repeat(values[-1], m) + (1 - p) * integrals[k] * float(m) ** k)
    return values


def float_level_residuals(values, beta, m: int) -> list[np.ndarray]:
    beta = float(as_rational(beta))
    out = [values[0] - values[1].reshape(-1, m).mean(axis=1)]
    for k in range(1, len(values) - 1):
        out.append(values[k] - beta * np.repeat(values[k - 1], m)
                   - (1 - beta) * values[k + 1].reshape(-1, m).mean(axis=1))
    return out


def level_vertices(m: int, level: int) -> list[Vertex]:
    return [_vertex_from_index(m, level, i) for i in range(m**level)]


def check_depth(depth: int) -> int:
    if depth < 0:
        raise DomainError("depth must be non-negative")
    return depth
