"""Addressing on the regular m-branching tree.

Vertices are finite base-m digit strings; the root is the empty string.  A
vertex ``x`` of level ``k`` owns the closed interval
``[psi(x), psi(x) + m**-k]`` of boundary points whose expansion starts with
``x``.  All endpoints are exact :class:`fractions.Fraction` values so that
m-adic ties are never decided by rounding.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import DomainError, SingularPointError


def as_rational(value) -> Fraction:
    """Convert ``value`` to an exact rational.

    Strings accept ``"p/q"`` and decimal notation.  Floats are read through
    their shortest decimal representation, so ``0.35`` becomes ``7/20``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    # numpy scalars and the like
    if hasattr(value, "__index__"):
        return Fraction(int(value))
    if hasattr(value, "__float__"):
        return as_rational(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def _check_m(m) -> int:
    if not isinstance(m, int) or isinstance(m, bool) or m < 2:
        raise DomainError(f"branching factor must be an integer >= 2, got {m!r}")
    return m


@dataclass(frozen=True)
class TreeConfig:
    m: int

    def __post_init__(self):
        _check_m(self.m)

    @property
    def root(self) -> "Vertex":
        return Vertex(self.m)

    def vertex(self, *digits) -> "Vertex":
        return Vertex(self.m, tuple(digits))


@dataclass(frozen=True)
class Vertex:
    """A vertex of the m-branching tree, identified by its digit string."""

    m: int
    digits: tuple = ()

    def __post_init__(self):
        _check_m(self.m)
        digits = tuple(int(d) for d in self.digits)
        for d in digits:
            if not 0 <= d < self.m:
                raise DomainError(f"digit {d} out of range for m={self.m}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def root(cls, m: int) -> "Vertex":
        return cls(m)

    @classmethod
    def parse(cls, text: str, m: int) -> "Vertex":
        """Inverse of ``str``: ``"1.0.2"``; ``""`` or ``"root"`` is the root."""
        text = text.strip()
        if text in ("", "root", "∅"):
            return cls(m)
        return cls(m, tuple(int(part) for part in text.split(".")))

    def __str__(self):
        return ".".join(str(d) for d in self.digits)

    @property
    def level(self) -> int:
        return len(self.digits)

    @property
    def is_root(self) -> bool:
        return not self.digits

    @property
    def parent(self) -> "Vertex":
        return self.ancestor(1)

    def child(self, i: int) -> "Vertex":
        return Vertex(self.m, self.digits + (i,))

    def successors(self) -> list["Vertex"]:
        return [self.child(i) for i in range(self.m)]

    def ancestor(self, j: int) -> "Vertex":
        if not 0 <= j <= self.level:
            raise DomainError(f"ancestor index {j} outside [0, {self.level}]")
        if j == 0:
            return self
        return Vertex(self.m, self.digits[:-j])

    def prefix(self, k: int) -> "Vertex":
        """The level-``k`` vertex on the path from the root to ``self``."""
        return self.ancestor(self.level - k)

    @property
    def index(self) -> int:
        """Position of the vertex among its level, in lexicographic order."""
        j = 0
        for d in self.digits:
            j = j * self.m + d
        return j

    def psi(self) -> Fraction:
        return Fraction(self.index, self.m**self.level)

    def interval(self) -> "MadicInterval":
        return MadicInterval(self.m, self.index, self.level)


def successors(x: Vertex) -> list[Vertex]:
    return x.successors()


def ancestor(x: Vertex, j: int) -> Vertex:
    return x.ancestor(j)


def psi(x: Vertex) -> Fraction:
    return x.psi()


def interval(x: Vertex) -> "MadicInterval":
    return x.interval()


def vertices(m: int, depth: int) -> Iterator[Vertex]:
    """All vertices of level ``<= depth``, level by level, lexicographically."""
    for level in range(depth + 1):
        for digits in itertools.product(range(m), repeat=level):
            yield Vertex(m, digits)


@dataclass(frozen=True)
class MadicInterval:
    """The closed interval ``[index/m**depth, (index+1)/m**depth]``."""

    m: int
    index: int
    depth: int

    def __post_init__(self):
        _check_m(self.m)
        if self.depth < 0 or not 0 <= self.index < self.m**self.depth:
            raise DomainError(f"no m-adic interval ({self.index}, {self.depth}) for m={self.m}")

    @classmethod
    def from_lower(cls, lower, depth: int, m: int) -> "MadicInterval":
        scaled = as_rational(lower) * m**depth
        if scaled.denominator != 1:
            raise DomainError(f"{lower} is not a multiple of m^-{depth}")
        return cls(m, int(scaled), depth)

    @property
    def lower(self) -> Fraction:
        return Fraction(self.index, self.m**self.depth)

    @property
    def upper(self) -> Fraction:
        return Fraction(self.index + 1, self.m**self.depth)

    @property
    def length(self) -> Fraction:
        return Fraction(1, self.m**self.depth)

    @property
    def midpoint(self) -> Fraction:
        return Fraction(2 * self.index + 1, 2 * self.m**self.depth)

    def contains(self, t) -> bool:
        t = as_rational(t)
        return self.lower <= t <= self.upper

    def __contains__(self, t):
        return self.contains(t)

    def children(self) -> list["MadicInterval"]:
        return [MadicInterval(self.m, self.index * self.m + i, self.depth + 1)
                for i in range(self.m)]

    def issubset(self, other: "MadicInterval") -> bool:
        if other.depth > self.depth:
            return False
        return self.index // other.m ** (self.depth - other.depth) == other.index

    def __str__(self):
        return f"{self.lower},{self.upper}"



_REAL_FUNCS = ("sqrt", "exp", "log", "sin", "cos", "tan", "atan", "cbrt")
_REAL_CONSTS = ("pi", "e", "phi")


def _eval_real(text: str):
    """Evaluate an arithmetic expression with mpmath at the current precision."""
    import ast
    import operator

    import mpmath

    ops = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return mpmath.mpf(str(node.value)) if isinstance(node.value, float) else mpmath.mpf(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in ops:
            return ops[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _REAL_CONSTS:
            return +getattr(mpmath, node.id)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _REAL_FUNCS and len(node.args) == 1 and not node.keywords):
            return getattr(mpmath, node.func.id)(walk(node.args[0]))
        raise DomainError(f"unsupported expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise DomainError(f"cannot parse real number {text!r}") from None
    return walk(tree)


class Branch:
    """An infinite root-to-boundary path, i.e. a point of the tree boundary.

    Digits are produced on demand.  ``point`` is always an exact rational:
    rational inputs are expanded by exact long division, and real inputs are
    first rounded to a binary value with a recorded precision budget.
    """

    def __init__(self, m: int, digit_fn, point: Fraction, reliable_digits=None, label=None):
        self.m = _check_m(m)
        self._digit_fn = digit_fn
        self.point = point
        self.reliable_digits = reliable_digits
        self.label = label if label is not None else str(point)
        self._cache: list[int] = []

    def __repr__(self):
        return f"Branch(m={self.m}, point={self.point})"

    @classmethod
    def from_point(cls, t, m: int) -> "Branch":
        """Canonical branch through ``t``.

        m-adic rationals below 1 get the expansion ending in zeros; ``t = 1``
        gets all digits ``m - 1``.
        """
        t = as_rational(t)
        if not 0 <= t <= 1:
            raise DomainError(f"boundary point {t} outside [0, 1]")
        if t == 1:
            return cls(m, lambda k: m - 1, t)
        return cls(m, _long_division(t, m), t)

    @classmethod
    def from_digits(cls, prefix: Sequence[int] = (), period: Sequence[int] = (0,), m: int = 2) -> "Branch":
        """Eventually periodic branch ``prefix`` followed by ``period`` repeated."""
        prefix, period = tuple(prefix), tuple(period)
        if not period:
            raise DomainError("period must be non-empty")
        for d in prefix + period:
            if not 0 <= d < m:
                raise DomainError(f"digit {d} out of range for m={m}")
        head = Fraction(sum(d * m ** (len(prefix) - i - 1) for i, d in enumerate(prefix)), m ** len(prefix))
        rep = sum(d * m ** (len(period) - i - 1) for i, d in enumerate(period))
        point = head + Fraction(rep, (m ** len(period) - 1) * m ** len(prefix))

        def digit(k):
            if k <= len(prefix):
                return prefix[k - 1]
            return period[(k - len(prefix) - 1) % len(period)]

        label = ".".join(map(str, prefix)) + "(" + ".".join(map(str, period)) + ")"
        return cls(m, digit, point, label=label)

    @classmethod
    def from_real(cls, x, m: int, bits: int = 256) -> "Branch":
        """Branch through a real number given to ``bits`` binary digits.

        ``x`` is a number, an ``mpf`` or an arithmetic expression such as
        ``"sqrt(2)/2"`` or ``"1/pi"``.  Digits past ``reliable_digits``
        describe the rounded binary value, not ``x``.
        """
        import mpmath

        with mpmath.workprec(bits):
            value = _eval_real(x) if isinstance(x, str) else mpmath.mpmathify(x)
            man, exp = mpmath.mpf(value).man_exp
        point = Fraction(int(man)) * Fraction(2) ** int(exp) if man else Fraction(0)
        branch = cls.from_point(point, m)
        branch.reliable_digits = int(bits / math.log2(m)) - 2
        branch.label = str(x)
        return branch

    def digit(self, k: int) -> int:
        """The ``k``-th digit, ``k >= 1``."""
        if k < 1:
            raise DomainError("digits are indexed from 1")
        if self.reliable_digits is not None and k > self.reliable_digits:
            warnings.warn(f"digit {k} exceeds the precision budget of {self.reliable_digits} digits",
                          stacklevel=2)
        while len(self._cache) < k:
            self._cache.append(self._digit_fn(len(self._cache) + 1))
        return self._cache[k - 1]

    def digits(self, n: int) -> tuple:
        return tuple(self.digit(k) for k in range(1, n + 1))

    def prefix(self, k: int) -> Vertex:
        return Vertex(self.m, self.digits(k))

    def interval(self, k: int) -> MadicInterval:
        return self.prefix(k).interval()


def _long_division(t: Fraction, m: int):
    # digits of t in [0, 1) by exact long division; cached by Branch
    state = {"k": 0, "r": t}

    def digit(k):
        while state["k"] < k:
            scaled = state["r"] * m
            d = scaled.numerator // scaled.denominator
            state["r"] = scaled - d
            state["k"] += 1
            state["last"] = d
        return state["last"]

    return digit


def branch_of_point(t, m: int) -> Branch:
    return Branch.from_point(t, m)


def n_of(x: Vertex, t) -> int:
    """Deepest level ``k <= |x|`` whose ancestor interval contains ``t``.

    Requires ``|x| >= 1`` and ``t`` in the interval of the level-1 ancestor.
    """
    t = as_rational(t)
    if x.level < 1:
        raise DomainError("n(x, t) needs a vertex of level >= 1")
    if not x.prefix(1).interval().contains(t):
        raise DomainError(f"{t} is outside the level-1 interval of {x}")
    k = 1
    while k < x.level and x.prefix(k + 1).interval().contains(t):
        k += 1
    return k


def big_n(pi: Branch, t) -> int:
    """``max{k : t in I_{pi,k}}`` for ``t != psi(pi)`` in ``I_{pi,1}``.

    Membership is closed, so a shared endpoint counts as inside.
    """
    t = as_rational(t)
    if t == pi.point:
        raise SingularPointError(f"N(psi(pi), t) is infinite at t = psi(pi) = {t}")
    if not pi.interval(1).contains(t):
        raise DomainError(f"{t} is outside I_(pi,1)")
    k = 1
    while pi.interval(k + 1).contains(t):
        k += 1
    return k
