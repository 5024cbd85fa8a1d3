"""Acceptance suite: one group of tests per criterion, summarized at the end
of the run by ``conftest.py``."""
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from treedtn import (Branch, Polynomial, Solution, Vertex, chi, counterexample_beta0,
                     estimate_u, gamma_estimate, gamma_kernel_quadrature, lambda_estimate,
                     solve, solve_characteristic, WalkConfig)
from treedtn.dirichlet import GrowthWitness, comparison_check, random_ordered_pair
from treedtn.dtn import NormalVector, fit_log_slope, gamma_terms, kernel_integral, omega, varpi
from treedtn.levels import certify_harmonic
from treedtn.tree import vertices

M_VALUES = (2, 3, 5)
BETAS = (F(0), F(1, 10), F(1, 3), F(9, 20))
BRANCH_POINTS = (F(0), F(1), F(1, 2), F(1, 3), F(3, 4))
LINEAR, SQUARE = Polynomial([0, 1]), Polynomial([0, 0, 1])


def crit(number, title):
    return pytest.mark.criterion(number, title)


# 1 -------------------------------------------------------------------------

@crit(1, "exact harmonicity to depth 8")
def test_c01_harmonicity_exact():
    start = time.perf_counter()
    failures = []
    for m in M_VALUES:
        for beta in BETAS:
            for g in (Polynomial([1]), LINEAR, SQUARE, chi(1, 0, m)):
                cert = certify_harmonic(g, beta, m, 8)
                if not cert.all_zero:
                    failures.append((m, beta, g, cert.nonzero[:3]))
    elapsed = time.perf_counter() - start
    assert not failures
    assert elapsed < 10.0, f"took {elapsed:.1f} s"


# 2 -------------------------------------------------------------------------

@crit(2, "boundary trace decreases and is below 1e-4 at k = 20")
@pytest.mark.parametrize("m", M_VALUES)
@pytest.mark.parametrize("beta", BETAS, ids=str)
def test_c02_boundary_trace(m, beta):
    s = Solution(LINEAR, beta, m)
    kinds = {(t * m**30).denominator == 1 for t in BRANCH_POINTS}
    assert kinds == {True, False}  # both m-adic and non-m-adic points
    for t in BRANCH_POINTS:
        branch = Branch.from_point(t, m)
        gaps = [abs(s(branch.prefix(k)) - t) for k in range(21)]
        assert all(gaps[k + 1] <= gaps[k] for k in range(3, 20)), (t, gaps)
        assert gaps[20] < F(1, 10**4), (t, float(gaps[20]))


# 3 -------------------------------------------------------------------------

def _basis(m):
    return [tuple(int(i == j) for j in range(m)) for i in range(m)]


@crit(3, "beta = 0 closed form and gradient-level rate")
@pytest.mark.parametrize("m", (2, 3))
@pytest.mark.parametrize("g", (LINEAR, SQUARE), ids=("t", "t2"))
def test_c03_lambda_beta0(m, g):
    for t in BRANCH_POINTS:
        branch = Branch.from_point(t, m)
        s = Solution(g, 0, m)
        for eta in _basis(m):
            estimates = [lambda_estimate(g, 0, eta, branch, k, s) for k in range(2, 15)]
            final = estimates[-1]
            assert final.target == g.derivative(t) * NormalVector(eta).dot(omega(m))
            assert final.gap < F(1, 1000)
            slope = fit_log_slope([e.k for e in estimates], [e.gap for e in estimates])
            if slope is None:
                # the prelimit is already exact at every depth
                assert all(e.gap == 0 for e in estimates)
            else:
                assert abs(slope / -math.log(m) - 1) <= 0.10, (t, eta, slope)


# 4 -------------------------------------------------------------------------

def _zero_sum_etas(m):
    if m == 2:
        return [(-1, 1), (2, -2)]
    return [(-1, 1, 0), (0, -1, 1), (1, -2, 1), (F(1, 2), F(1, 3), F(-5, 6))]


@crit(4, "0 < beta < 1/2 closed form for zero-sum eta")
@pytest.mark.parametrize("beta", (F(1, 10), F(1, 4), F(2, 5)), ids=str)
@pytest.mark.parametrize("m", (2, 3))
def test_c04_lambda_beta_positive(beta, m):
    for g in (LINEAR, SQUARE):
        for t in BRANCH_POINTS:
            branch = Branch.from_point(t, m)
            s = Solution(g, beta, m)
            for eta in _zero_sum_etas(m):
                e = lambda_estimate(g, beta, eta, branch, 14, s)
                expected = (1 - 2 * beta) / (m * (1 - beta)) * g.derivative(t) * \
                    NormalVector(eta).dot(varpi(m))
                assert e.target == expected
                assert e.gap < F(1, 1000), (g, t, eta, float(e.gap))


# 5 -------------------------------------------------------------------------

def _random_zero_sum(rng, m):
    eta = [F(rng.randint(-20, 20), rng.randint(1, 9)) for _ in range(m - 1)]
    return eta + [-sum(eta)]


@crit(5, "<eta, omega_m> = <eta, varpi_m> for zero-sum eta")
@pytest.mark.parametrize("m", range(2, 7))
def test_c05_pairing_identity_as_stated(m):
    rng = random.Random(m)
    mismatches = []
    for _ in range(100):
        eta = NormalVector(_random_zero_sum(rng, m))
        if eta.dot(omega(m)) != eta.dot(varpi(m)):
            mismatches.append(eta)
    assert not mismatches, f"{len(mismatches)}/100 vectors differ, e.g. {mismatches[0]}"


@pytest.mark.parametrize("m", range(2, 7))
def test_pairing_identity_with_factor_m(m):
    # the relation that does hold, and that makes the two closed forms agree at beta = 0
    rng = random.Random(100 + m)
    for _ in range(100):
        eta = NormalVector(_random_zero_sum(rng, m))
        assert m * eta.dot(omega(m)) == eta.dot(varpi(m))


# 6 and 7 -------------------------------------------------------------------

KERNEL_GRID = [(m, beta) for m in (2, 3) for beta in (F(1, 3), F(2, 5))]


@crit(6, "kernel has zero mass")
@pytest.mark.parametrize("m,beta", KERNEL_GRID, ids=lambda v: str(v))
def test_c06_kernel_zero_mass(m, beta):
    for x in vertices(m, 6):
        if x.is_root:
            continue
        for j in range(m):
            assert kernel_integral(x, j, beta) == 0, (x, j)


@crit(7, "kernel reproduces successor differences")
@pytest.mark.parametrize("m,beta", KERNEL_GRID, ids=lambda v: str(v))
@pytest.mark.parametrize("g", (LINEAR, SQUARE, Polynomial([F(1, 3), -2, 0, 5])), ids=("t", "t2", "cubic"))
def test_c07_kernel_difference_identity(m, beta, g):
    p = beta / (1 - beta)
    s = Solution(g, beta, m)
    for x in vertices(m, 6):
        if x.is_root:
            continue
        for j in range(m):
            assert s(x.child(j)) - s(x) == -(1 - p) * kernel_integral(x, j, beta, g), (x, j)


# 8 -------------------------------------------------------------------------

GAMMA_BETAS = (F(35, 100), F(40, 100), F(45, 100))
GAMMA_BRANCHES = (F(0), F(1, 3), F(3, 4))


@crit(8, "nonlocal map: prelimit vs kernel quadrature, J2 decay")
@pytest.mark.parametrize("beta", GAMMA_BETAS, ids=str)
@pytest.mark.parametrize("g", (LINEAR, SQUARE), ids=("t", "t2"))
def test_c08_gamma_two_paths(beta, g):
    for t in GAMMA_BRANCHES:
        branch = Branch.from_point(t, 2)
        estimate = gamma_estimate(g, beta, branch, 16)
        quad = gamma_kernel_quadrature(g, beta, branch, 16)
        assert abs(estimate.value - quad.value) < 1e-3 + quad.error_bound, t


@crit(8, "nonlocal map: prelimit vs kernel quadrature, J2 decay")
@pytest.mark.parametrize("beta", GAMMA_BETAS, ids=str)
@pytest.mark.parametrize("g", (LINEAR, SQUARE), ids=("t", "t2"))
def test_c08_j2_decay(beta, g):
    for t in GAMMA_BRANCHES:
        branch = Branch.from_point(t, 2)
        j2 = [abs(gamma_terms(g, beta, branch, k)["J2"]) for k in range(6, 17)]
        ratios = [a / b for a, b in zip(j2, j2[1:])]
        assert all(r >= F(6, 5) for r in ratios), (t, [round(float(r), 4) for r in ratios])


# 9 -------------------------------------------------------------------------

@crit(9, "growth witness for beta >= 1/2")
@pytest.mark.parametrize("beta", (F(1, 2), F(3, 5)), ids=str)
def test_c09_growth_witness(beta):
    w = GrowthWitness(beta)
    p = beta / (1 - beta)
    base = w.a(2) - w.a(1)
    for n in range(1, 60):
        assert w.a(n + 1) - w.a(n) == p ** (n - 1) * base
    n, value = w.first_exceeding(10**6)
    assert value > 10**6
    assert value == 1 + w.a(n)


# 10 ------------------------------------------------------------------------

@crit(10, "beta = 0 strong comparison counterexample")
def test_c10_counterexample():
    ce = counterexample_beta0()
    assert ce.u_touch == 0
    assert ce.u_witness == 1
    assert ce.values[""] == F(1, 3)


# 11 ------------------------------------------------------------------------

@crit(11, "characteristic-datum recursion")
def test_c11_characteristic_recursion():
    trace = solve_characteristic(1, 0, F(1, 3), 10, m=2)
    assert trace.sequence[:3] == [F(3, 2), F(7, 4), F(15, 8)]
    assert trace.b == 2
    s = Solution(chi(1, 0, 2), F(1, 3), 2)
    for x in vertices(2, 8):
        assert trace.u(x) == s(x), x


# 12 ------------------------------------------------------------------------

@crit(12, "comparison principle on random ordered pairs")
@pytest.mark.parametrize("m", M_VALUES)
@pytest.mark.parametrize("beta", BETAS, ids=str)
def test_c12_comparison(m, beta):
    rng = np.random.default_rng(2024)
    for i in range(50):
        f, g = random_ordered_pair(rng, touching=(i % 5 == 0))
        report = comparison_check(f, g, beta, m, 8)
        assert report.ok, (f, g, report.violations[:3])


# 13 ------------------------------------------------------------------------

MC_CASES = [
    (2, F(0), ()),
    (2, F(1, 3), (1,)),
    (3, F(1, 4), (0, 2)),
    (3, F(9, 20), (2,)),
    (5, F(1, 10), (3, 1)),
    (2, F(2, 5), (0, 1, 1)),
]


@crit(13, "Monte Carlo oracle agrees with the solver")
def test_c13_monte_carlo():
    start = time.perf_counter()
    g = SQUARE
    failures = []
    for idx, (m, beta, digits) in enumerate(MC_CASES):
        x = Vertex(m, digits)
        est = estimate_u(g, WalkConfig(beta, m, 30, 100_000, seed=idx), x)
        exact = solve(g, beta, x)
        if not est.consistent_with(exact):
            failures.append((m, beta, digits, est, float(exact)))
    elapsed = time.perf_counter() - start
    assert not failures
    assert elapsed < 60.0, f"took {elapsed:.1f} s"


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
