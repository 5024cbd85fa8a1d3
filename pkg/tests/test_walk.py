import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from treedtn import Polynomial, Solution, Vertex, WalkConfig, chi, estimate_u
from treedtn.errors import DomainError
from treedtn.walk import (depth_drift, exit_points, transition_counts, truncation_bias_bound,
                          walk_step)

SQUARE = Polynomial([0, 0, 1])


def test_root_always_moves_down():
    rng = np.random.default_rng(0)
    for _ in range(200):
        y = walk_step(Vertex(3), rng, F(2, 5))
        assert y.level == 1


def test_step_from_interior_is_a_neighbour():
    rng = np.random.default_rng(1)
    x = Vertex(2, (1, 0))
    seen = {walk_step(x, rng, F(1, 3)) for _ in range(500)}
    assert seen == {x.parent, *x.successors()}


@pytest.mark.parametrize("m,beta", [(2, F(1, 3)), (3, F(1, 10)), (5, F(9, 20))])
def test_transition_frequencies(m, beta):
    steps = 200_000
    counts = transition_counts(Vertex(m, (1, 0)), beta, steps, seed=3)
    probs = [float(beta)] + [float(1 - beta) / m] * m
    for c, q in zip(counts, probs):
        se = math.sqrt(q * (1 - q) / steps)
        assert abs(c / steps - q) < 4 * se


def test_root_transition_frequencies():
    counts = transition_counts(Vertex(3), F(1, 3), 60_000, seed=4)
    assert counts[0] == 0
    assert all(abs(c / 60_000 - 1 / 3) < 0.01 for c in counts[1:])


@pytest.mark.parametrize("beta", [F(0), F(1, 4), F(2, 5)])
def test_depth_drift(beta):
    mean, se = depth_drift(beta, 2, 100_000, seed=5)
    assert abs(mean - float(1 - 2 * beta)) < 4 * se + 1e-12


def test_constant_datum_is_exact():
    est = estimate_u(Polynomial([F(7, 4)]), WalkConfig(F(1, 3), 2, 12, 2_000), Vertex(2, (1,)))
    assert est.mean == 1.75 and est.stderr == 0 and est.bias_bound == 0


def test_determinism_and_block_independence():
    cfg = WalkConfig(F(1, 4), 3, 15, 20_000, seed=11)
    a = exit_points(cfg, Vertex(3, (2,)))
    b = exit_points(cfg, Vertex(3, (2,)))
    assert np.array_equal(a, b)
    # full blocks do not depend on the total sample count
    short = exit_points(WalkConfig(F(1, 4), 3, 15, 8192, seed=11), Vertex(3, (2,)))
    assert np.array_equal(a[:8192], short)
    other = exit_points(WalkConfig(F(1, 4), 3, 15, 8192, seed=12), Vertex(3, (2,)))
    assert not np.array_equal(short, other)


def test_exit_points_lie_under_start():
    x = Vertex(2, (1, 1))
    pts = exit_points(WalkConfig(0, 2, 10, 3_000), x)
    # at beta = 0 the walk never leaves the subtree of x
    assert np.all((pts >= 0.75) & (pts < 1.0))


def test_one_step_martingale():
    rng = np.random.default_rng(9)
    beta = F(1, 3)
    s = Solution(SQUARE, beta, 2)
    x = Vertex(2, (0, 1, 1))
    samples = np.array([float(s(walk_step(x, rng, beta))) for _ in range(20_000)])
    se = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(samples.mean() - float(s(x))) < 4 * se


@pytest.mark.parametrize("m,beta,digits", [(2, F(1, 3), (0,)), (3, F(1, 5), (2, 2)), (4, F(2, 5), ())])
def test_estimate_consistent_with_solver(m, beta, digits):
    x = Vertex(m, digits)
    est = estimate_u(SQUARE, WalkConfig(beta, m, 25, 40_000, seed=2), x)
    assert est.consistent_with(Solution(SQUARE, beta, m)(x))


def test_indicator_uses_oscillation_bound():
    assert truncation_bias_bound(chi(1, 0, 2), F(1, 3), 2, 20) == 1.0


def test_bias_bound_shrinks_with_depth():
    bounds = [truncation_bias_bound(SQUARE, F(2, 5), 2, D) for D in (10, 20, 30)]
    assert bounds[0] > bounds[1] > bounds[2] > 0


def test_json_report():
    est = estimate_u(SQUARE, WalkConfig(F(1, 3), 2, 10, 1_000, seed=1), Vertex(2))
    data = json.loads(est.to_json())
    assert set(data) == {"mean", "stderr", "bias_bound", "N", "D", "seed"}
    assert data["N"] == 1_000 and data["D"] == 10


def test_config_validation():
    with pytest.raises(DomainError):
        WalkConfig(F(1, 2), 2)
    with pytest.raises(DomainError):
        WalkConfig(F(1, 3), 1)
    with pytest.raises(DomainError):
        exit_points(WalkConfig(F(1, 3), 2, 3, 10), Vertex(2, (0, 0, 0)))
    with pytest.raises(DomainError):
        exit_points(WalkConfig(F(1, 3), 2, 5, 10), Vertex(3, (0,)))
