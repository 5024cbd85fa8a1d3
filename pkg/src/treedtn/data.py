"""Boundary data on [0, 1].

Polynomial, piecewise-polynomial and indicator data are exact: values,
integrals and derivatives at rational points come back as ``Fraction``.
:class:`CallableDatum` wraps an arbitrary function and falls back on
adaptive quadrature and Richardson-extrapolated differences, reporting the
error estimate next to every value.
"""
from __future__ import annotations

import bisect
import math
import re
import warnings
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy import integrate

from .errors import DomainError, ToleranceNotMetError, UnsupportedOperationError
from .tree import MadicInterval, as_rational

QUAD_TOL = 1e-12
QUAD_BUDGET = 10**6


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _check_unit(t):
    if not 0 <= t <= 1:
        raise DomainError(f"t = {t} outside [0, 1]")


def _madic_depth(b: Fraction, m: int):
    """Smallest d with b * m**d an integer, or None if b is not m-adic."""
    den = b.denominator
    d = 0
    while den != 1:
        g = math.gcd(den, m)
        if g == 1:
            return None
        den //= g
        d += 1
    # den divides m**d but d may overshoot by a few; tighten
    while d > 0 and (b * m ** (d - 1)).denominator == 1:
        d -= 1
    return d


class BoundaryDatum:
    """Common interface; subclasses provide the actual representation."""

    exact = False
    smoothness = "L1"

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        raise NotImplementedError

    def eval_array(self, ts) -> np.ndarray:
        return np.array([float(self.eval(float(t))) for t in np.asarray(ts, dtype=float)])

    def integral(self, a, b):
        raise NotImplementedError

    def integral_with_error(self, a, b):
        return self.integral(a, b), 0.0

    def average(self, interval: MadicInterval):
        """Mean value over an m-adic interval."""
        return self.average_with_error(interval)[0]

    def average_with_error(self, interval: MadicInterval):
        value, err = self.integral_with_error(interval.lower, interval.upper)
        length = interval.length
        if self.exact:
            return value / length, 0
        return value / float(length), err / float(length)

    def derivative(self, t):
        return self.derivative_with_error(t)[0]

    def derivative_with_error(self, t):
        raise UnsupportedOperationError(f"{type(self).__name__} has no derivative")

    def lipschitz_bound(self):
        """An upper bound for ``sup |g'|`` on [0, 1], or None if g is not Lipschitz."""
        return None

    def bounds(self):
        """``(inf g, sup g)`` over [0, 1] (floats)."""
        ts = np.linspace(0.0, 1.0, 2001)
        values = self.eval_array(ts)
        return float(values.min()), float(values.max())

    def is_constant(self) -> bool:
        return False

    # linear structure, available on exact representations
    def __add__(self, other):
        return PiecewisePolynomial.combine(self, other, 1, 1)

    def __sub__(self, other):
        return PiecewisePolynomial.combine(self, other, 1, -1)

    def __mul__(self, scalar):
        return PiecewisePolynomial.combine(self, Polynomial([0]), as_rational(scalar), 0)

    __rmul__ = __mul__


class Polynomial(BoundaryDatum):
    """``g(t) = sum c[d] t**d`` with rational coefficients (ascending order)."""

    exact = True
    smoothness = "C2"

    def __init__(self, coefficients):
        coeffs = [as_rational(c) for c in coefficients] or [Fraction(0)]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = tuple(coeffs)

    def __repr__(self):
        return f"Polynomial({[str(c) for c in self.coefficients]})"

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coefficients == other.coefficients

    def __hash__(self):
        return hash(self.coefficients)

    def __add__(self, other):
        if isinstance(other, Polynomial):
            return self._linear(other, 1, 1)
        return super().__add__(other)

    def __sub__(self, other):
        if isinstance(other, Polynomial):
            return self._linear(other, 1, -1)
        return super().__sub__(other)

    def __mul__(self, scalar):
        return Polynomial([as_rational(scalar) * c for c in self.coefficients])

    __rmul__ = __mul__

    def _linear(self, other, alpha, gamma):
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (Fraction(0),) * (n - len(self.coefficients))
        b = other.coefficients + (Fraction(0),) * (n - len(other.coefficients))
        return Polynomial([alpha * x + gamma * y for x, y in zip(a, b)])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_constant(self):
        return self.degree == 0

    def _horner(self, coeffs, t):
        acc = 0 * t
        for c in reversed(coeffs):
            acc = acc * t + c
        return acc

    def eval(self, t):
        if isinstance(t, float):
            _check_unit(t)
            return self._horner([float(c) for c in self.coefficients], t)
        t = as_rational(t)
        _check_unit(t)
        return self._horner(self.coefficients, t)

    def eval_array(self, ts):
        return np.polynomial.polynomial.polyval(np.asarray(ts, dtype=float),
                                                [float(c) for c in self.coefficients])

    def antiderivative(self) -> "Polynomial":
        return Polynomial([0] + [c / (d + 1) for d, c in enumerate(self.coefficients)])

    def differentiate(self) -> "Polynomial":
        return Polynomial([d * c for d, c in enumerate(self.coefficients)][1:])

    def integral(self, a, b):
        a, b = as_rational(a), as_rational(b)
        big = self.antiderivative()
        return big._horner(big.coefficients, b) - big._horner(big.coefficients, a)

    def derivative_with_error(self, t):
        d = self.differentiate()
        if isinstance(t, float):
            return d.eval(t), 0.0
        return d.eval(as_rational(t)), 0

    def _extremes(self, poly):
        # max/min of a polynomial over [0, 1] via its critical points
        coeffs = [float(c) for c in poly.coefficients]
        candidates = [0.0, 1.0]
        if len(coeffs) > 2:
            roots = np.polynomial.polynomial.polyroots(
                [d * c for d, c in enumerate(coeffs)][1:])
            candidates += [r.real for r in np.atleast_1d(roots)
                           if abs(r.imag) < 1e-12 and 0 <= r.real <= 1]
        values = np.polynomial.polynomial.polyval(np.array(candidates), coeffs)
        return float(values.min()), float(values.max())

    def bounds(self):
        return self._extremes(self)

    def lipschitz_bound(self):
        lo, hi = self._extremes(self.differentiate())
        bound = max(abs(lo), abs(hi))
        return bound * (1 + 1e-12)


class PiecewisePolynomial(BoundaryDatum):
    """Polynomial pieces on ``[b[i], b[i+1])``; the last piece includes 1.

    Breakpoints are rationals; when they are m-adic the vectorized level
    integrals below apply.
    """

    exact = True
    smoothness = "L1"

    def __init__(self, breakpoints, pieces):
        bps = [as_rational(b) for b in breakpoints]
        pieces = [p if isinstance(p, Polynomial) else Polynomial(p) for p in pieces]
        if len(bps) != len(pieces) + 1 or bps[0] != 0 or bps[-1] != 1:
            raise DomainError("breakpoints must run from 0 to 1 with one more entry than pieces")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        self.breakpoints = tuple(bps)
        self.pieces = tuple(pieces)
        if self._is_continuous():
            self.smoothness = "C0"

    def __repr__(self):
        return f"PiecewisePolynomial({[str(b) for b in self.breakpoints]}, {list(self.pieces)})"

    def _is_continuous(self):
        return all(p.eval(b) == q.eval(b)
                   for b, p, q in zip(self.breakpoints[1:-1], self.pieces, self.pieces[1:]))

    def as_piecewise(self):
        return self

    def is_constant(self):
        values = {p.coefficients for p in self.pieces}
        return len(values) == 1 and self.pieces[0].is_constant()

    def _piece_index(self, t):
        i = bisect.bisect_right(self.breakpoints, t) - 1
        return min(i, len(self.pieces) - 1)

    def eval(self, t):
        if isinstance(t, float):
            _check_unit(t)
            return self.pieces[self._piece_index(as_rational(t))].eval(t)
        t = as_rational(t)
        _check_unit(t)
        return self.pieces[self._piece_index(t)].eval(t)

    def eval_array(self, ts):
        ts = np.asarray(ts, dtype=float)
        out = np.empty_like(ts)
        edges = np.array([float(b) for b in self.breakpoints])
        idx = np.clip(np.searchsorted(edges, ts, side="right") - 1, 0, len(self.pieces) - 1)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            out[mask] = piece.eval_array(ts[mask])
        return out

    def integral(self, a, b):
        a, b = as_rational(a), as_rational(b)
        total = Fraction(0)
        for lo, hi, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            left, right = max(lo, a), min(hi, b)
            if left < right:
                total += piece.integral(left, right)
        return total

    def derivative_with_error(self, t):
        exact_t = as_rational(t)
        _check_unit(exact_t)
        if exact_t in self.breakpoints[1:-1]:
            i = self.breakpoints.index(exact_t)
            left, right = self.pieces[i - 1], self.pieces[i]
            if left.eval(exact_t) != right.eval(exact_t) or \
                    left.derivative(exact_t) != right.derivative(exact_t):
                raise UnsupportedOperationError(f"datum is not differentiable at {exact_t}")
        return self.pieces[self._piece_index(exact_t)].derivative_with_error(t)

    def bounds(self):
        lows, highs = [], []
        for lo, hi, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            # affine rescaling of the piece to [0, 1] keeps the extremes
            shifted = _compose_affine(piece, lo, hi - lo)
            a, b = shifted.bounds()
            lows.append(a)
            highs.append(b)
        return min(lows), max(highs)

    def lipschitz_bound(self):
        if self.smoothness == "L1":
            return None
        bound = 0.0
        for lo, hi, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            shifted = _compose_affine(piece.differentiate(), lo, hi - lo)
            a, b = shifted.bounds()
            bound = max(bound, abs(a), abs(b))
        return bound * (1 + 1e-12)

    @staticmethod
    def combine(f, g, alpha, gamma) -> "PiecewisePolynomial":
        """``alpha * f + gamma * g`` on the merged breakpoints."""
        f, g = _as_piecewise(f), _as_piecewise(g)
        alpha, gamma = as_rational(alpha), as_rational(gamma)
        bps = sorted(set(f.breakpoints) | set(g.breakpoints))
        pieces = []
        for lo in bps[:-1]:
            pf = f.pieces[f._piece_index(lo)].coefficients
            pg = g.pieces[g._piece_index(lo)].coefficients
            n = max(len(pf), len(pg))
            pf = pf + (Fraction(0),) * (n - len(pf))
            pg = pg + (Fraction(0),) * (n - len(pg))
            pieces.append(Polynomial([alpha * a + gamma * b for a, b in zip(pf, pg)]))
        return PiecewisePolynomial(bps, pieces)

    # vectorized integrals over every interval of one tree level

    def _level_plan(self, m, k):
        depths = [_madic_depth(b, m) for b in self.breakpoints]
        if any(d is None for d in depths):
            raise UnsupportedOperationError("level integrals need m-adic breakpoints")
        return max([k] + depths)

    def exact_level_integrals(self, m: int, k: int, modulus: int | None = None):
        """Integrals of g over the ``m**k`` intervals of level ``k``.

        Returns ``(numerators, denominator)`` with a common denominator.  With
        ``modulus`` the numerators are reduced modulo that prime (int64);
        otherwise they are exact Python integers in an object array.
        """
        deep = self._level_plan(m, k)
        degree = max(p.degree for p in self.pieces)
        scale = reduce(_lcm, (Fraction(c, d + 1).denominator
                              for p in self.pieces
                              for d, c in enumerate(p.coefficients)), 1)
        denominator = scale * m ** (deep * (degree + 1))
        n = m**deep
        if modulus is None:
            out = np.zeros(n, dtype=object)
        else:
            out = np.zeros(n, dtype=np.int64)
        for lo, hi, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            start, stop = int(lo * n), int(hi * n)
            if modulus is None:
                j = np.arange(start, stop, dtype=object)
            else:
                j = np.arange(start, stop, dtype=np.int64) % modulus
            jp1 = j + 1
            pow_j, pow_jp1 = j, jp1
            acc = np.zeros(stop - start, dtype=out.dtype)
            for d, c in enumerate(piece.coefficients):
                coef = c / (d + 1) * scale * m ** (deep * (degree - d))
                coef = int(coef)
                if c != 0:
                    term = pow_jp1 - pow_j
                    if modulus is None:
                        acc = acc + coef * term
                    else:
                        acc = (acc + (coef % modulus) * (term % modulus)) % modulus
                if d < piece.degree:
                    if modulus is None:
                        pow_j, pow_jp1 = pow_j * j, pow_jp1 * jp1
                    else:
                        pow_j, pow_jp1 = (pow_j * j) % modulus, (pow_jp1 * jp1) % modulus
            out[start:stop] = acc
        return _aggregate(out, m, deep - k, modulus), denominator

    def float_level_integrals(self, m: int, k: int) -> np.ndarray:
        deep = self._level_plan(m, k)
        degree = max(p.degree for p in self.pieces)
        nodes, weights = np.polynomial.legendre.leggauss(degree // 2 + 1)
        n = m**deep
        h = 1.0 / n
        out = np.zeros(n)
        for lo, hi, piece in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            start, stop = int(lo * n), int(hi * n)
            left = np.arange(start, stop) * h
            pts = left[:, None] + h * (nodes[None, :] + 1) / 2
            out[start:stop] = (piece.eval_array(pts) @ weights) * (h / 2)
        return _aggregate(out, m, deep - k, None)


def _aggregate(values, m, levels, modulus):
    for _ in range(levels):
        values = values.reshape(-1, m).sum(axis=1)
        if modulus is not None:
            values %= modulus
    return values


def _compose_affine(poly: Polynomial, shift, scale) -> Polynomial:
    """``s -> poly(shift + scale * s)`` as a polynomial in s."""
    result = [Fraction(0)] * len(poly.coefficients)
    power = [Fraction(1)]  # coefficients of (shift + scale s)^d
    for c in poly.coefficients:
        for i, a in enumerate(power):
            result[i] += c * a
        nxt = [Fraction(0)] * (len(power) + 1)
        for i, a in enumerate(power):
            nxt[i] += a * shift
            nxt[i + 1] += a * scale
        power = nxt
    return Polynomial(result)


class CharacteristicIndicator(BoundaryDatum):
    """Indicator of the closed interval ``[lower, upper]``."""

    exact = True
    smoothness = "L1"

    def __init__(self, lower, upper):
        self.lower, self.upper = as_rational(lower), as_rational(upper)
        if not 0 <= self.lower < self.upper <= 1:
            raise DomainError("need 0 <= lower < upper <= 1")

    @classmethod
    def of_interval(cls, interval: MadicInterval):
        return cls(interval.lower, interval.upper)

    def __repr__(self):
        return f"chi[{self.lower}, {self.upper}]"

    def eval(self, t):
        exact_t = as_rational(t)
        _check_unit(exact_t)
        inside = self.lower <= exact_t <= self.upper
        if isinstance(t, float):
            return 1.0 if inside else 0.0
        return Fraction(int(inside))

    def eval_array(self, ts):
        ts = np.asarray(ts, dtype=float)
        return ((ts >= float(self.lower)) & (ts <= float(self.upper))).astype(float)

    def integral(self, a, b):
        a, b = as_rational(a), as_rational(b)
        return max(Fraction(0), min(b, self.upper) - max(a, self.lower))

    def bounds(self):
        return 0.0, 1.0

    def as_piecewise(self) -> PiecewisePolynomial:
        bps, pieces = [Fraction(0)], []
        if self.lower > 0:
            bps.append(self.lower)
            pieces.append(Polynomial([0]))
        pieces.append(Polynomial([1]))
        if self.upper < 1:
            bps.append(self.upper)
            pieces.append(Polynomial([0]))
        bps.append(Fraction(1)) if bps[-1] != 1 else None
        return PiecewisePolynomial(bps, pieces)

    def exact_level_integrals(self, m, k, modulus=None):
        return self.as_piecewise().exact_level_integrals(m, k, modulus)

    def float_level_integrals(self, m, k):
        return self.as_piecewise().float_level_integrals(m, k)


def chi(n: int, j: int, m: int) -> CharacteristicIndicator:
    """Indicator of ``I_{n,j} = [j/m**n, (j+1)/m**n]``."""
    return CharacteristicIndicator.of_interval(MadicInterval(m, j, n))


# polynomials reuse the piecewise machinery for level integrals
def _poly_level_exact(self, m, k, modulus=None):
    return PiecewisePolynomial([0, 1], [self]).exact_level_integrals(m, k, modulus)


def _poly_level_float(self, m, k):
    return PiecewisePolynomial([0, 1], [self]).float_level_integrals(m, k)


Polynomial.exact_level_integrals = _poly_level_exact
Polynomial.float_level_integrals = _poly_level_float


def _as_piecewise(datum) -> PiecewisePolynomial:
    if isinstance(datum, PiecewisePolynomial):
        return datum
    if isinstance(datum, Polynomial):
        return PiecewisePolynomial([0, 1], [datum])
    if isinstance(datum, CharacteristicIndicator):
        return datum.as_piecewise()
    raise UnsupportedOperationError(f"cannot combine {type(datum).__name__} exactly")


class CallableDatum(BoundaryDatum):
    """A black-box datum.

    ``smoothness`` is declared by the caller ("C2", "C0" or "L1"), as are the
    optional bounds on ``|g'|`` and ``|g''|``.  Averages use adaptive
    quadrature and derivatives use Richardson-extrapolated central
    differences; both return an error estimate.
    """

    exact = False

    def __init__(self, fn, smoothness="C2", lipschitz=None, second_derivative_bound=None,
                 tol=QUAD_TOL, budget=QUAD_BUDGET, vectorized=False, name=None):
        if smoothness not in ("C2", "C0", "L1"):
            raise DomainError(f"unknown smoothness class {smoothness!r}")
        self.fn = fn
        self.smoothness = smoothness
        self.lipschitz = lipschitz
        self.second_derivative_bound = second_derivative_bound
        self.tol = tol
        self.budget = budget
        self.vectorized = vectorized
        self.name = name or getattr(fn, "__name__", "callable")

    def __repr__(self):
        return f"CallableDatum({self.name})"

    def eval(self, t):
        t = float(t)
        _check_unit(t)
        return float(self.fn(t))

    def eval_array(self, ts):
        ts = np.asarray(ts, dtype=float)
        if self.vectorized:
            return np.asarray(self.fn(ts), dtype=float)
        return np.array([float(self.fn(t)) for t in ts.ravel()]).reshape(ts.shape)

    def integral_with_error(self, a, b, tol=None):
        tol = self.tol if tol is None else tol
        a, b = float(a), float(b)
        # QUADPACK spends 21 evaluations per subinterval; its warnings become the error below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, err = integrate.quad(self.fn, a, b, epsabs=tol, epsrel=0.0,
                                        limit=max(1, self.budget // 21))
        if err > tol:
            raise ToleranceNotMetError(f"quadrature on [{a}, {b}] reached {err:.3g} > {tol:.3g}",
                                       estimate=value, error=err)
        return value, err

    def integral(self, a, b):
        return self.integral_with_error(a, b)[0]

    def derivative_with_error(self, t, h=1e-3, tol=1e-8):
        if self.smoothness == "L1":
            raise UnsupportedOperationError("datum declared non-differentiable")
        t = float(t)
        _check_unit(t)
        if t - h >= 0 and t + h <= 1:
            def diff(step):
                return (self.fn(t + step) - self.fn(t - step)) / (2 * step)
            order = 2
        else:
            sign = 1.0 if t + h <= 1 else -1.0

            def diff(step):
                s = sign * step
                return (-3 * self.fn(t) + 4 * self.fn(t + s) - self.fn(t + 2 * s)) / (2 * s)
            order = 2
        # Richardson table on halving steps
        previous = diff(h)
        best, err = previous, math.inf
        for _ in range(8):
            h /= 2
            current = diff(h)
            extrapolated = current + (current - previous) / (2**order - 1)
            err = abs(extrapolated - best)
            best, previous = extrapolated, current
            if err < tol:
                break
        return best, err

    def lipschitz_bound(self):
        return self.lipschitz


_BUILTIN = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def parse_datum(spec, m: int | None = None) -> BoundaryDatum:
    """Build a datum from a config value.

    Accepted strings: ``linear``, ``square``, ``cubic``, ``const(c)``,
    ``poly(c0, c1, ...)``, ``chi(n, j)`` (needs ``m``) and
    ``indicator(a, b)``.  Dicts carry a ``kind`` of ``polynomial``,
    ``piecewise`` or ``indicator`` plus the matching fields.
    """
    if isinstance(spec, BoundaryDatum):
        return spec
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "polynomial":
            return Polynomial(spec["coefficients"])
        if kind == "piecewise":
            return PiecewisePolynomial(spec["breakpoints"], spec["pieces"])
        if kind == "indicator":
            if "interval" in spec:
                n, j = spec["interval"]
                if m is None:
                    raise DomainError("chi(n, j) needs the branching factor m")
                return chi(int(n), int(j), m)
            return CharacteristicIndicator(spec["lower"], spec["upper"])
        if kind == "builtin":
            return parse_datum(spec["name"], m)
        raise DomainError(f"unknown datum kind {kind!r}")
    match = _BUILTIN.match(str(spec))
    if not match:
        raise DomainError(f"cannot parse datum {spec!r}")
    name, args = match.group(1).lower(), match.group(2)
    values = [a.strip() for a in args.split(",")] if args else []
    if name == "linear":
        return Polynomial([0, 1])
    if name == "square":
        return Polynomial([0, 0, 1])
    if name == "cubic":
        return Polynomial([0, 0, 0, 1])
    if name in ("const", "constant"):
        return Polynomial([values[0] if values else 1])
    if name == "poly":
        return Polynomial(values)
    if name == "chi":
        if m is None:
            raise DomainError("chi(n, j) needs the branching factor m")
        return chi(int(values[0]), int(values[1]), m)
    if name == "indicator":
        return CharacteristicIndicator(values[0], values[1])
    raise DomainError(f"unknown built-in datum {name!r}")


def datum_to_spec(datum: BoundaryDatum):
    """JSON-friendly description, the inverse of :func:`parse_datum`."""
    if isinstance(datum, Polynomial):
        return {"kind": "polynomial", "coefficients": [str(c) for c in datum.coefficients]}
    if isinstance(datum, PiecewisePolynomial):
        return {"kind": "piecewise", "breakpoints": [str(b) for b in datum.breakpoints],
                "pieces": [[str(c) for c in p.coefficients] for p in datum.pieces]}
    if isinstance(datum, CharacteristicIndicator):
        return {"kind": "indicator", "lower": str(datum.lower), "upper": str(datum.upper)}
    return {"kind": "callable", "name": getattr(datum, "name", repr(datum))}
