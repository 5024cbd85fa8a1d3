"""The beta-Dirichlet problem on the m-branching tree.

A function is beta-harmonic when ``u(root)`` is the mean of the root's
children and, elsewhere,

    u(x) = beta * u(parent) + (1 - beta)/m * sum_i u(x, i).

For ``0 <= beta < 1/2`` and bounded data ``g`` the unique bounded solution is

    u(x) = p**|x| * avg_[0,1] g + sum_{j<|x|} p**j (1-p) avg_{I(x^-j)} g,

with ``p = beta/(1-beta)``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from . import levels
from .data import BoundaryDatum, CharacteristicIndicator, Polynomial, chi
from .errors import DomainError, NoBoundedSolutionError
from .tree import Branch, MadicInterval, Vertex, as_rational, vertices

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class BetaParam:
    """Weight of the parent in the mean-value identity."""

    beta: Fraction

    def __post_init__(self):
        beta = as_rational(self.beta)
        if not 0 <= beta <= 1:
            raise DomainError(f"beta must lie in [0, 1], got {beta}")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def of(cls, beta) -> "BetaParam":
        return beta if isinstance(beta, BetaParam) else cls(beta)

    @property
    def p(self) -> Fraction:
        if self.beta == 1:
            raise DomainError("p = beta/(1-beta) is undefined at beta = 1")
        return self.beta / (1 - self.beta)

    @property
    def bounded_solvable(self) -> bool:
        return self.beta < HALF

    def __str__(self):
        return str(self.beta)


class Solution:
    """Memoized value oracle for the solution with datum ``g``.

    Exact data give ``Fraction`` values; callable data give floats and an
    accumulated quadrature error in :meth:`error`.
    """

    def __init__(self, datum: BoundaryDatum, beta, m: int):
        self.datum = datum
        self.beta = BetaParam.of(beta)
        self.m = m
        self.exact = bool(datum.exact)
        self.note = None
        self._constant = None
        if not self.beta.bounded_solvable:
            if not datum.is_constant():
                raise NoBoundedSolutionError(
                    f"beta = {self.beta} >= 1/2: every bounded beta-harmonic function is constant, "
                    "so a non-constant datum has no bounded solution")
            self._constant = datum.eval(Fraction(0))
            self.note = ("beta = 1: only constants are 1-harmonic" if self.beta.beta == 1
                         else "beta >= 1/2: bounded solutions are constant")
        self._values: dict = {}
        self._errors: dict = {}
        self._averages: dict = {}

    def __repr__(self):
        return f"Solution({self.datum!r}, beta={self.beta}, m={self.m})"

    def _vertex(self, x) -> Vertex:
        if isinstance(x, Vertex):
            if x.m != self.m:
                raise DomainError(f"vertex has m={x.m}, solution has m={self.m}")
            return x
        return Vertex(self.m, tuple(x))

    def average(self, x: Vertex):
        key = x.digits
        if key not in self._averages:
            self._averages[key] = self.datum.average_with_error(x.interval())
        return self._averages[key]

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        """``u(x)`` by root-first accumulation ``u(x) = p u(parent) + (1-p) avg_{I_x} g``."""
        x = self._vertex(x)
        if self._constant is not None:
            return self._constant
        key = x.digits
        if key in self._values:
            return self._values[key]
        # walk up to the deepest cached ancestor, then fill downwards
        chain = []
        y = x
        while y.digits not in self._values:
            chain.append(y)
            if y.is_root:
                break
            y = y.parent
        p = self.beta.p if self.exact else float(self.beta.p)
        for y in reversed(chain):
            avg, err = self.average(y)
            if y.is_root:
                value, error = avg, err
            else:
                value = p * self._values[y.parent.digits] + (1 - p) * avg
                error = p * self._errors[y.parent.digits] + (1 - p) * err
            self._values[y.digits] = value
            self._errors[y.digits] = error
        return self._values[key]

    def error(self, x) -> float:
        """Accumulated quadrature error bound for ``u(x)`` (zero for exact data)."""
        self.value(x)
        return self._errors.get(self._vertex(x).digits, 0)

    def explicit(self, x):
        """``u(x)`` by summing the explicit series from the vertex upwards (no caching)."""
        x = self._vertex(x)
        if self._constant is not None:
            return self._constant
        p = self.beta.p if self.exact else float(self.beta.p)
        total = 0
        weight = 1 - p
        for j in range(x.level):
            total += (p**j) * weight * self.datum.average_with_error(x.ancestor(j).interval())[0]
        return total + p**x.level * self.datum.average_with_error(MadicInterval(self.m, 0, 0))[0]

    def residual(self, x):
        return harmonic_residual(self, x)

    def level_values(self, depth: int) -> list[np.ndarray]:
        """Values at every vertex of levels ``0..depth`` (vectorized)."""
        if self.exact:
            return levels.exact_level_values(self.datum, self.beta.beta, self.m, depth)
        return levels.float_level_values(self.datum, self.beta.beta, self.m, depth)


def solve(g: BoundaryDatum, beta, x: Vertex):
    """Value at ``x`` of the bounded solution with boundary datum ``g``."""
    return Solution(g, beta, x.m).value(x)


def harmonic_residual(s, x: Vertex, beta=None):
    """Mean-value defect of ``s`` at ``x``; zero for a beta-harmonic function.

    ``s`` is a :class:`Solution` or any callable on vertices, in which case
    ``beta`` must be given.
    """
    if beta is None:
        beta = s.beta
    beta = BetaParam.of(beta).beta
    kids = [s(y) for y in x.successors()]
    if x.is_root:
        return s(x) - sum(kids) / x.m
    return s(x) - beta * s(x.parent) - (1 - beta) * sum(kids) / x.m


# characteristic data, built by recursion instead of the explicit formula

@dataclass
class RecursionTrace:
    """Unnormalized beta-harmonic function ``w`` with boundary values ``b`` on
    ``I_z`` and ``0`` elsewhere, for the level-``n`` vertex ``z``.

    ``sequence`` holds ``b_{n,1}, b_{n,2}, ...`` (the values of ``w`` down the
    subtree of ``z``, one per level); ``b`` is their limit in closed form.
    """

    m: int
    beta: Fraction
    z: Vertex
    sequence: list
    path_values: list  # w at the ancestors of z, root first
    b: Fraction
    increments: list = field(default_factory=list)

    @property
    def p(self) -> Fraction:
        return self.beta / (1 - self.beta)

    def b_term(self, i: int) -> Fraction:
        """``b_{n,i}`` for any ``i >= 1`` in closed form."""
        b1, b2 = self.path_values[-1], self._second
        return b1 + (b2 - b1) * (1 - self.p ** (i - 1)) / (1 - self.p)

    @property
    def _second(self) -> Fraction:
        n = self.z.level
        parent = self.path_values[n - 1] if n >= 1 else Fraction(1)
        if n == 0:
            return Fraction(1)
        return (self.path_values[n] - self.beta * parent) / (1 - self.beta)

    def w(self, x: Vertex) -> Fraction:
        n = self.z.level
        common = 0
        while common < min(n, x.level) and x.digits[common] == self.z.digits[common]:
            common += 1
        if common == n:
            if n == 0:
                return Fraction(1)
            return self.b_term(x.level - n + 1)
        if x.level == common:
            return self.path_values[common]
        # off the path below the level-`common` ancestor of z
        return self.path_values[common] * self.p ** (x.level - common)

    def u(self, x: Vertex) -> Fraction:
        return self.w(x) / self.b

    def boundary_limit(self, branch: Branch) -> Fraction:
        """Limit of ``u`` along a branch: 1 through ``z``, else 0."""
        return Fraction(int(branch.digits(self.z.level) == self.z.digits))


def solve_characteristic(n: int, j: int, beta, depth: int, m: int = 2) -> RecursionTrace:
    """Build the beta-harmonic function with boundary values ``chi(I_{n,j})``
    level by level, without using the explicit formula.

    The vertex ``z`` of level ``n`` owning ``I_{n,j}`` carries ``b_{n,1}``;
    each further level of its subtree obeys
    ``b_{i+1} = b_i + p (b_i - b_{i-1})``.  Siblings off the path decay like
    powers of ``p``.  ``depth`` is the number of sequence terms recorded.
    """
    beta = BetaParam.of(beta).beta
    if not 0 < beta < HALF:
        raise DomainError(f"the recursion needs 0 < beta < 1/2, got {beta}")
    if n < 0 or not 0 <= j < m**n:
        raise DomainError(f"no interval I_(n={n}, j={j}) for m={m}")
    p = beta / (1 - beta)
    z_vertex = levels._vertex_from_index(m, n, j)

    # w along the path root -> z; the root is normalized to 1
    path = [Fraction(1)]
    for level in range(1, n + 1):
        parent = path[level - 1]
        if level == 1:
            b1 = m - (m - 1) * p
        else:
            grand = path[level - 2]
            b1 = parent * (m - (m - 1) * beta) / (1 - beta) - m * p * grand
        path.append(b1)

    if n == 0:
        seq = [Fraction(1)] * depth
        return RecursionTrace(m, beta, z_vertex, seq, path, Fraction(1), [Fraction(0)] * max(depth - 1, 0))

    parent = path[n - 1]
    b1 = path[n]
    b2 = (b1 - beta * parent) / (1 - beta)
    seq = [b1, b2]
    while len(seq) < depth:
        seq.append(seq[-1] + p * (seq[-1] - seq[-2]))
    seq = seq[:max(depth, 1)]
    # increments shrink by exactly p, so the limit is a geometric sum
    b = b1 + (b2 - b1) / (1 - p)
    increments = [v - u for u, v in zip(seq, seq[1:])]
    return RecursionTrace(m, beta, z_vertex, seq, path, b, increments)


# comparison principles

@dataclass
class ComparisonReport:
    m: int
    beta: Fraction
    depth: int
    vertices_checked: int
    violations: list
    max_excess: float

    @property
    def ok(self) -> bool:
        return not self.violations


def _grid_ordered(f, g, points=1025) -> bool:
    ts = np.linspace(0.0, 1.0, points)
    return bool(np.all(f.eval_array(ts) <= g.eval_array(ts) + 1e-12))


def comparison_check(f: BoundaryDatum, g: BoundaryDatum, beta, m: int, depth: int,
                     tol: float = 1e-12, exact: bool = False) -> ComparisonReport:
    """Vertices of level ``<= depth`` where ``u_f > u_g + tol``.

    ``f <= g`` is the caller's promise; it is spot-checked on a grid and a
    :class:`DomainError` is raised if the grid disagrees.
    """
    beta = BetaParam.of(beta).beta
    if beta >= HALF:
        raise NoBoundedSolutionError("comparison needs beta < 1/2")
    if not _grid_ordered(f, g):
        raise DomainError("f <= g fails on the sample grid")
    if exact:
        uf = levels.exact_level_values(f, beta, m, depth)
        ug = levels.exact_level_values(g, beta, m, depth)
    else:
        uf = levels.float_level_values(f, beta, m, depth)
        ug = levels.float_level_values(g, beta, m, depth)
    violations, worst = [], 0.0
    for k, (a, b) in enumerate(zip(uf, ug)):
        excess = a - b
        worst = max(worst, float(np.max(excess)))
        for idx in np.flatnonzero(excess > tol):
            violations.append(levels._vertex_from_index(m, k, int(idx)))
    checked = sum(m**k for k in range(depth + 1))
    return ComparisonReport(m, beta, depth, checked, violations, worst)


@dataclass
class StrongComparisonReport:
    m: int
    beta: Fraction
    depth: int
    touching: list           # interior vertices where u_f = u_g
    propagation_failures: list  # touching vertices whose neighbours differ
    applicable: bool         # the strong principle is only claimed for 0 < beta < 1/2

    @property
    def ok(self) -> bool:
        return not self.propagation_failures


def strong_comparison_check(f: BoundaryDatum, g: BoundaryDatum, beta, m: int, depth: int,
                            tol: float = 1e-12) -> StrongComparisonReport:
    """Find interior vertices where ``u_f`` touches ``u_g`` and test whether
    equality spreads to the parent and all children, as it must when
    ``0 < beta < 1/2``.  For ``beta = 0`` the report is produced but flagged
    as not applicable: touching need not propagate upwards.
    """
    beta = BetaParam.of(beta).beta
    if beta >= HALF:
        raise NoBoundedSolutionError("comparison needs beta < 1/2")
    if not _grid_ordered(f, g):
        raise DomainError("f <= g fails on the sample grid")
    exact = f.exact and g.exact
    values = (levels.exact_level_values if exact else levels.float_level_values)
    uf, ug = values(f, beta, m, depth + 1), values(g, beta, m, depth + 1)
    diff = [np.abs(np.asarray(a - b, dtype=float)) for a, b in zip(uf, ug)]

    def equal(k, idx):
        if exact:
            return uf[k][idx] == ug[k][idx]
        return diff[k][idx] <= tol

    touching, failures = [], []
    for k in range(depth + 1):
        for idx in range(m**k):
            if not equal(k, idx):
                continue
            x = levels._vertex_from_index(m, k, idx)
            touching.append(x)
            neighbours = [(k + 1, idx * m + i) for i in range(m)]
            if k > 0:
                neighbours.append((k - 1, idx // m))
            if not all(equal(*nb) for nb in neighbours):
                failures.append(x)
    return StrongComparisonReport(m, beta, depth, touching, failures, applicable=0 < beta < HALF)


# named constructions

@dataclass
class Counterexample:
    datum: BoundaryDatum
    values: dict  # vertex string -> exact value
    touching_vertex: Vertex
    witness_vertex: Vertex

    @property
    def u_touch(self) -> Fraction:
        return self.values[str(self.touching_vertex)]

    @property
    def u_witness(self) -> Fraction:
        return self.values[str(self.witness_vertex)]


def counterexample_beta0() -> Counterexample:
    """For ``beta = 0`` a nonnegative, nonzero solution can vanish at an
    interior vertex: ``m = 3`` with data equal to 1 on ``[2/3, 1]`` and 0
    elsewhere (mean value 1 over its support) gives ``u(0) = 0`` and
    ``u(2) = 1``.
    """
    m = 3
    g = chi(1, 2, m)
    s = Solution(g, 0, m)
    values = {str(x): s(x) for x in vertices(m, 2)}
    return Counterexample(g, values, Vertex(m, (0,)), Vertex(m, (2,)))


class GrowthWitness:
    """A non-constant beta-harmonic function for ``1/2 <= beta < 1`` that is
    unbounded along the branch ``0, 0, 0, ...``.

    The root and level 1 equal 1.  Along the path ``x_n = (0,)*(n+1)`` the
    values are ``1 + a_n`` with ``a_0 = 0``, ``a_1`` the seed and
    ``a_{n+1} = a_n + p (a_n - a_{n-1})``.  All children of ``x_n``
    (``n >= 1``) share the value ``1 + a_{n+1}``; the non-path children of
    ``x_0`` balance the seed.  Every other vertex takes the value forced by
    the mean-value identity with equal children.
    """

    def __init__(self, beta, a1=1, m: int = 2):
        self.beta = BetaParam.of(beta).beta
        if not HALF <= self.beta < 1:
            raise DomainError(f"the growth witness needs 1/2 <= beta < 1, got {self.beta}")
        self.a1 = as_rational(a1)
        if self.a1 <= 0:
            raise DomainError("the seed discrepancy a_1 must be positive")
        self.m = m
        self.p = self.beta / (1 - self.beta)
        self._a = [Fraction(0), self.a1]
        self._cache: dict = {}

    def a(self, n: int) -> Fraction:
        while len(self._a) <= n:
            self._a.append(self._a[-1] + self.p * (self._a[-1] - self._a[-2]))
        return self._a[n]

    def path(self) -> Iterator[tuple]:
        """Lazily yield ``(n, x_n, u(x_n))``."""
        for n in itertools.count():
            yield n, Vertex(self.m, (0,) * (n + 1)), 1 + self.a(n)

    def increments(self, count: int) -> list:
        return [self.a(n + 1) - self.a(n) for n in range(1, count + 1)]

    def first_exceeding(self, threshold) -> tuple:
        """Smallest ``n`` with ``u(x_n) > threshold``, found by stepping the recursion."""
        threshold = as_rational(threshold)
        # integer form of the recursion: a_n = N_n / (den * Q**(n-1))
        P, Q = self.p.numerator, self.p.denominator
        den = self.a1.denominator
        prev, cur, scale, n = 0, self.a1.numerator, den, 1
        while (scale + cur) * threshold.denominator <= threshold.numerator * scale:
            prev, cur = cur, (P + Q) * cur - P * Q * prev
            scale *= Q
            n += 1
        return n, 1 + Fraction(cur, scale)

    def __call__(self, x: Vertex) -> Fraction:
        return self.value(x)

    def value(self, x: Vertex) -> Fraction:
        key = x.digits
        if key in self._cache:
            return self._cache[key]
        level = x.level
        if level <= 1:
            v = Fraction(1)
        elif all(d == 0 for d in key):
            v = 1 + self.a(level - 1)
        elif all(d == 0 for d in key[:-1]):
            # child of the path vertex x_{level-2}, off the path
            n = level - 2
            if n == 0:
                v = (self.m - 1 - self.a1) / Fraction(self.m - 1)
            else:
                v = 1 + self.a(n + 1)
        else:
            parent = x.parent
            v = (self.value(parent) - self.beta * self.value(parent.parent)) / (1 - self.beta)
        self._cache[key] = v
        return v


def growth_witness(beta, a1=1, steps: int = 10, m: int = 2) -> GrowthWitness:
    """Construct the witness and unroll ``steps`` terms of its path."""
    w = GrowthWitness(beta, a1, m)
    w.a(steps)
    return w


@dataclass
class TraceRow:
    k: int
    value: object
    target: object
    gap: object


def boundary_trace(g: BoundaryDatum, beta, branch: Branch, depths,
                   solution: Solution | None = None) -> list[TraceRow]:
    """``u(x_k)`` along the branch next to ``g(psi(branch))``."""
    s = solution or Solution(g, beta, branch.m)
    target = g.eval(branch.point) if g.exact else g.eval(float(branch.point))
    rows = []
    for k in depths:
        value = s(branch.prefix(k))
        rows.append(TraceRow(k, value, target, abs(value - target)))
    return rows


def random_ordered_pair(rng: np.random.Generator, degree: int = 3, touching: bool = False):
    """Polynomials ``f <= g`` on [0, 1] with small rational coefficients.

    ``g - f`` is ``c0 + c1 (t - r)**2``; with ``touching`` set, ``c0 = 0`` so
    the two data meet at ``t = r``.
    """
    f = Polynomial([Fraction(int(c), 8) for c in rng.integers(-8, 9, size=degree + 1)])
    r = Fraction(int(rng.integers(0, 9)), 8)
    c0 = Fraction(0) if touching else Fraction(int(rng.integers(0, 5)), 16)
    c1 = Fraction(int(rng.integers(0, 9)), 4)
    gap = Polynomial([c0 + c1 * r * r, -2 * c1 * r, c1])
    return f, f + gap
