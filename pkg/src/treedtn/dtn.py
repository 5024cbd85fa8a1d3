"""Dirichlet-to-Neumann maps along a branch.

Two normal derivatives of the solution ``u_g`` are studied at a boundary
point ``psi(pi)``:

* ``Lambda``: ``m**k * <grad u(x_k), eta>`` as ``k -> oo``.  For ``beta = 0``
  the limit is ``g'(psi pi) <eta, omega_m>``; for ``0 < beta < 1/2`` and
  ``sum(eta) = 0`` it is ``(1-2 beta)/(m (1-beta)) g'(psi pi) <eta, varpi_m>``.
* ``Gamma``: ``p**-k (u(x_{k+1}) - u(x_k))``.  For ``1/(m+1) < beta < 1/2``
  the limit is the singular integral
  ``(1-p) int K(pi, t) (g(psi pi) - g(t)) dt`` with
  ``K = 1 + c ((m/p)**N - 1)`` on ``I_(pi,1)`` and ``K = 1`` elsewhere,
  where ``c = m (1-p)/(m-p)`` and ``N`` is the depth at which ``t`` leaves
  the branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .data import BoundaryDatum
from .dirichlet import HALF, BetaParam, Solution
from .errors import DomainError, HypothesisError, NoBoundedSolutionError
from .tree import Branch, MadicInterval, Vertex, as_rational, big_n, n_of


@dataclass(frozen=True)
class NormalVector:
    eta: tuple

    def __post_init__(self):
        values = []
        for v in self.eta:
            values.append(v if isinstance(v, float) else as_rational(v))
        object.__setattr__(self, "eta", tuple(values))

    @classmethod
    def parse(cls, text: str) -> "NormalVector":
        return cls(tuple(as_rational(part) for part in text.replace(";", ",").split(",")))

    @classmethod
    def of(cls, eta) -> "NormalVector":
        return eta if isinstance(eta, NormalVector) else cls(tuple(eta))

    @property
    def m(self) -> int:
        return len(self.eta)

    @property
    def zero_sum(self) -> bool:
        total = sum(self.eta)
        if isinstance(total, float):
            return abs(total) <= 1e-12 * max(1.0, max(abs(float(e)) for e in self.eta))
        return total == 0

    def dot(self, other: Sequence) -> object:
        return sum(a * b for a, b in zip(self.eta, other))

    def __str__(self):
        return ",".join(str(e) for e in self.eta)


def gradient(s: Solution, x: Vertex) -> list:
    """``(u(x,0) - u(x), ..., u(x,m-1) - u(x))``."""
    ux = s(x)
    return [s(y) - ux for y in x.successors()]


def omega(m: int) -> list[Fraction]:
    """``((1-m)/2m, (3-m)/2m, ..., (m-1)/2m)``; contains 0 iff m is odd."""
    return [Fraction(2 * i + 1 - m, 2 * m) for i in range(m)]


def varpi(m: int) -> list[Fraction]:
    return [Fraction(i) for i in range(m)]


def midpoint(x: Vertex) -> Fraction:
    return x.psi() + Fraction(1, 2 * x.m**x.level)


@dataclass
class DtnEstimate:
    k: int
    value: object
    target: object = None
    gap: object = None
    diagnostics: dict = field(default_factory=dict)


def _beta(beta) -> Fraction:
    beta = BetaParam.of(beta).beta
    if beta >= HALF:
        raise NoBoundedSolutionError(f"beta = {beta} >= 1/2 has no bounded solutions to differentiate")
    return beta


def lambda_closed_form(g: BoundaryDatum, beta, eta, t):
    """The limit of the local map at ``t`` where it is known in closed form."""
    beta = _beta(beta)
    eta = NormalVector.of(eta)
    m = eta.m
    slope = g.derivative(t)
    if beta == 0:
        return slope * eta.dot(omega(m))
    if not eta.zero_sum:
        raise HypothesisError("for beta > 0 the closed form needs sum(eta) = 0; "
                              "the prelimit then has an extra divergent term")
    return (1 - 2 * beta) / (m * (1 - beta)) * slope * eta.dot(varpi(m))


def lambda_estimate(g: BoundaryDatum, beta, eta, branch: Branch, k: int,
                    solution: Solution | None = None) -> DtnEstimate:
    """``m**k <grad u(x_k), eta>`` with the closed-form target when one applies.

    Diagnostics carry the target at the midpoint ``t_x`` of ``I_(x_k)`` as well.
    """
    beta = _beta(beta)
    eta = NormalVector.of(eta)
    if eta.m != branch.m:
        raise DomainError(f"eta has {eta.m} components, the tree has m={branch.m}")
    s = solution or Solution(g, beta, branch.m)
    x = branch.prefix(k)
    value = branch.m**k * eta.dot(gradient(s, x))
    diagnostics = {}
    try:
        point = branch.point if g.exact else float(branch.point)
        target = lambda_closed_form(g, beta, eta, point)
        tx = midpoint(x) if g.exact else float(midpoint(x))
        diagnostics["midpoint_target"] = lambda_closed_form(g, beta, eta, tx)
        diagnostics["midpoint_gap"] = abs(value - diagnostics["midpoint_target"])
    except HypothesisError as exc:
        target = None
        diagnostics["note"] = str(exc)
    gap = abs(value - target) if target is not None else None
    return DtnEstimate(k, value, target, gap, diagnostics)


def fit_log_slope(ks: Sequence[int], gaps: Sequence) -> float | None:
    """Least-squares slope of ``log(gap)`` against ``k``; ``None`` if fewer
    than three gaps are positive (zero gaps mean the prelimit is exact)."""
    pairs = [(k, float(g)) for k, g in zip(ks, gaps) if g is not None and g > 0]
    if len(pairs) < 3:
        return None
    x, y = np.array(pairs).T
    return float(np.polyfit(x, np.log(y), 1)[0])


@dataclass
class Sweep:
    estimates: list
    slope: float | None = None
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> DtnEstimate:
        return self.estimates[-1]


def lambda_sweep(g, beta, eta, branch: Branch, depths) -> Sweep:
    s = Solution(g, beta, branch.m)
    estimates = [lambda_estimate(g, beta, eta, branch, k, s) for k in depths]
    slope = fit_log_slope([e.k for e in estimates], [e.gap for e in estimates])
    return Sweep(estimates, slope, {"expected_slope": -math.log(branch.m)})


# the nonlocal map

def _gamma_beta(beta) -> Fraction:
    beta = BetaParam.of(beta).beta
    if not 0 < beta < HALF:
        raise DomainError(f"the nonlocal map needs 0 < beta < 1/2, got {beta}")
    return beta


def _kernel_form_beta(beta, m) -> Fraction:
    beta = _gamma_beta(beta)
    if beta <= Fraction(1, m + 1):
        raise HypothesisError(f"the kernel form needs beta > 1/(m+1) = 1/{m + 1}, got {beta}")
    return beta


def _c(p, m):
    return m * (1 - p) / (m - p)


def _gap_integral(g: BoundaryDatum, gp, interval: MadicInterval):
    """``int_I (g(psi pi) - g(t)) dt``."""
    if g.exact:
        return gp * interval.length - g.integral(interval.lower, interval.upper)
    value, _ = g.integral_with_error(interval.lower, interval.upper)
    return gp * float(interval.length) - value


def _anchor(g: BoundaryDatum, branch: Branch):
    return g.eval(branch.point) if g.exact else g.eval(float(branch.point))


def gamma_terms(g: BoundaryDatum, beta, branch: Branch, k: int) -> dict:
    """The split ``p**-k (u(x_{k+1}) - u(x_k)) = (1-p) (bulk + J1 + J2)``.

    * ``bulk = int (1 - c chi_{I_(x_1)}) (g(psi pi) - g)``,
    * ``J1 = c sum_{n=1..k} (m/p)**n int_{I_(x_n) minus I_(x_(n+1))} (g(psi pi) - g)``,
    * ``J2 = -m (m-1)/(m-p) (m/p)**k int_{I_(x_(k+1))} (g(psi pi) - g)``.
    """
    beta = _gamma_beta(beta)
    m = branch.m
    p = beta / (1 - beta) if g.exact else float(beta / (1 - beta))
    c = _c(p, m)
    gp = _anchor(g, branch)
    whole = [_gap_integral(g, gp, branch.interval(n)) for n in range(0, k + 2)]
    bulk = whole[0] - c * whole[1]
    j1 = c * sum((m / p) ** n * (whole[n] - whole[n + 1]) for n in range(1, k + 1)) if k >= 1 else 0 * c
    j2 = -m * (m - 1) / (m - p) * (m / p) ** k * whole[k + 1]
    return {"bulk": bulk, "J1": j1, "J2": j2, "p": p}


def gamma_estimate(g: BoundaryDatum, beta, branch: Branch, k: int,
                   solution: Solution | None = None) -> DtnEstimate:
    """``p**-k (u(x_{k+1}) - u(x_k))`` with the bulk/J1/J2 split in the diagnostics.

    ``diagnostics["convergent"]`` is False when ``p m <= 1``: J2 then need
    not vanish and no limit is reported.
    """
    beta = _gamma_beta(beta)
    m = branch.m
    s = solution or Solution(g, beta, m)
    p = beta / (1 - beta) if g.exact else float(beta / (1 - beta))
    value = (s(branch.prefix(k + 1)) - s(branch.prefix(k))) / p**k
    terms = gamma_terms(g, beta, branch, k)
    diagnostics = dict(terms)
    diagnostics["convergent"] = p * m > 1
    diagnostics["split_defect"] = value - (1 - p) * (terms["bulk"] + terms["J1"] + terms["J2"])
    return DtnEstimate(k, value, None, None, diagnostics)


def gamma_sweep(g, beta, branch: Branch, depths, quadrature_depth: int | None = None) -> Sweep:
    beta = _gamma_beta(beta)
    s = Solution(g, beta, branch.m)
    estimates = [gamma_estimate(g, beta, branch, k, s) for k in depths]
    info = {"convergent": estimates[0].diagnostics["convergent"]}
    if info["convergent"]:
        quad = gamma_kernel_quadrature(g, beta, branch, quadrature_depth or max(depths))
        info["quadrature"] = quad
        for e in estimates:
            e.target = quad.value
            e.gap = abs(e.value - quad.value)
    return Sweep(estimates, None, info)


# finite-depth kernels

def kernel_Kj(x: Vertex, j: int, t, beta):
    """``K_m^j(x, t)`` from the annulus form

    ``m**-k K = (p/m)**k + (1-p) sum_{i<k} (p/m)**i chi_{I(x^-i)}(t) - m chi_{I(x,j)}(t)``

    with ``k = |x|`` and closed intervals."""
    beta = _gamma_beta(beta)
    if x.level < 1:
        raise DomainError("the kernel needs a vertex of level >= 1")
    if not 0 <= j < x.m:
        raise DomainError(f"digit {j} out of range")
    t = as_rational(t)
    if not 0 <= t <= 1:
        raise DomainError(f"t = {t} outside [0, 1]")
    m, k = x.m, x.level
    p = beta / (1 - beta)
    total = (p / m) ** k
    total += (1 - p) * sum((p / m) ** i for i in range(k) if x.ancestor(i).interval().contains(t))
    if x.child(j).interval().contains(t):
        total -= m
    return m**k * total


def kernel_Kj_piecewise(x: Vertex, j: int, t, beta):
    """The same kernel from its piecewise closed form (uses ``n(x, t)``)."""
    beta = _gamma_beta(beta)
    t = as_rational(t)
    m, k = x.m, x.level
    p = beta / (1 - beta)
    c = _c(p, m)
    if x.child(j).interval().contains(t):
        return p**k - c * (p**k - m**k) - m ** (k + 1)
    if not x.prefix(1).interval().contains(t):
        return p**k
    n = n_of(x, t)
    return p**k * (1 - c * (1 - (p / m) ** (-n)))


def kernel_pieces(x: Vertex, j: int, beta) -> list[tuple]:
    """``(lower, upper, value)`` for the open intervals on which ``K_m^j(x, .)``
    is constant; together they cover [0, 1] up to finitely many points."""
    beta = _gamma_beta(beta)
    chain = [x.prefix(n).interval() for n in range(1, x.level + 1)] + [x.child(j).interval()]
    pieces = [(Fraction(0), chain[0].lower), (chain[0].upper, Fraction(1))]
    for outer, inner in zip(chain, chain[1:]):
        pieces += [(outer.lower, inner.lower), (inner.upper, outer.upper)]
    pieces.append((chain[-1].lower, chain[-1].upper))
    out = []
    for a, b in pieces:
        if a < b:
            out.append((a, b, kernel_Kj(x, j, (a + b) / 2, beta)))
    return sorted(out)


def kernel_integral(x: Vertex, j: int, beta, g: BoundaryDatum | None = None):
    """``int_0^1 K_m^j(x, t) g(t) dt`` exactly (``g = 1`` when omitted)."""
    total = Fraction(0)
    for a, b, value in kernel_pieces(x, j, beta):
        total += value * (b - a if g is None else g.integral(a, b))
    return total


def kernel_limit(branch: Branch, t, beta):
    """``K(pi, t) = 1 + c ((m/p)**N(psi pi, t) - 1) chi_{I_(pi,1)}(t)``."""
    m = branch.m
    beta = _kernel_form_beta(beta, m)
    t = as_rational(t)
    if t == branch.point:
        big_n(branch, t)  # raises the singular-point error
    if not branch.interval(1).contains(t):
        return Fraction(1)
    p = beta / (1 - beta)
    return 1 + _c(p, m) * ((m / p) ** big_n(branch, t) - 1)


@dataclass
class KernelProfile:
    branch: Branch
    beta: Fraction
    ts: list
    values: list
    depths: list  # N(psi pi, t), or 0 outside I_(pi,1)


def kernel_profile(branch: Branch, beta, ts) -> KernelProfile:
    ts = [as_rational(t) for t in ts]
    values, depths = [], []
    for t in ts:
        values.append(kernel_limit(branch, t, beta))
        depths.append(big_n(branch, t) if branch.interval(1).contains(t) else 0)
    return KernelProfile(branch, as_rational(beta), ts, values, depths)


@dataclass
class GammaQuadrature:
    value: object
    tail_bound: float
    truncation_depth: int
    bulk: object
    annuli: list
    quadrature_error: float = 0.0
    nominal_tail: float | None = None  # c (1 + 1/m) (pm)**-K L, reported for reference

    @property
    def error_bound(self) -> float:
        return self.tail_bound + self.quadrature_error


def gamma_kernel_quadrature(g: BoundaryDatum, beta, branch: Branch, K: int,
                            lipschitz=None) -> GammaQuadrature:
    """``(1-p) int K(pi, t) (g(psi pi) - g(t)) dt`` over ``[0,1] minus I_(pi,1)``
    and the annuli ``I_(pi,n) minus I_(pi,n+1)`` for ``n <= K``, where the
    kernel is constant.

    The neglected part is bounded using ``|g(psi pi) - g(t)| <= L m**-n`` on
    the n-th annulus (measure ``(m-1) m**-(n+1)``), with ``L`` the Lipschitz
    constant of ``g``:

        (1-p) L [c (m-1)/(m (pm - 1)) (pm)**-K + (1-c) m**-2K/(m (m+1))].
    """
    m = branch.m
    beta = _kernel_form_beta(beta, m)
    exact = g.exact
    p = beta / (1 - beta) if exact else float(beta / (1 - beta))
    c = _c(p, m)
    gp = _anchor(g, branch)
    whole = [_gap_integral(g, gp, branch.interval(n)) for n in range(0, K + 2)]
    bulk = whole[0] - whole[1]
    annuli = [(1 + c * ((m / p) ** n - 1)) * (whole[n] - whole[n + 1]) for n in range(1, K + 1)]
    value = (1 - p) * (bulk + sum(annuli))

    L = lipschitz if lipschitz is not None else g.lipschitz_bound()
    if L is None:
        tail = math.inf
        nominal = None
    else:
        pf, cf, L = float(p), float(c), float(L)
        tail = (1 - pf) * L * (cf * (m - 1) / (m * (pf * m - 1)) * (pf * m) ** (-K)
                               + (1 - cf) * float(m) ** (-2 * K) / (m * (m + 1)))
        tail *= 1 + 1e-12
        nominal = cf * (1 + 1 / m) * (pf * m) ** (-K) * L
    quad_err = 0.0 if exact else 1e-12 * (K + 2) * (1 + abs(float(c)) * (m / float(p)) ** K)
    return GammaQuadrature(value, tail, K, bulk, annuli, quad_err, nominal)
