"""Monte Carlo estimates of the solution from a biased walk on the tree.

From a non-root vertex the walk moves to the parent with probability
``beta`` and to each child with probability ``(1-beta)/m``; from the root it
moves to a uniform child.  The solution is a martingale along the walk, so
``u(x)`` is the expected value of ``u`` where the walk first reaches depth
``D``; the estimator scores ``g(psi(.))`` there instead and reports a bound on
the bias that introduces.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .data import BoundaryDatum
from .dirichlet import HALF, BetaParam
from .errors import DomainError
from .tree import Vertex

BLOCK = 8192


@dataclass(frozen=True)
class WalkConfig:
    beta: Fraction
    m: int
    max_depth: int = 30
    samples: int = 100_000
    seed: int = 0
    block: int = BLOCK

    def __post_init__(self):
        beta = BetaParam.of(self.beta).beta
        object.__setattr__(self, "beta", beta)
        if beta >= HALF:
            raise DomainError("the walk needs beta < 1/2 to drift towards the boundary")
        if self.m < 2 or self.max_depth < 1 or self.samples < 1 or self.block < 1:
            raise DomainError("need m >= 2, max_depth >= 1, samples >= 1")


def walk_step(current: Vertex, rng: np.random.Generator, beta) -> Vertex:
    """One transition of the walk."""
    beta = float(BetaParam.of(beta).beta)
    m = current.m
    if current.is_root:
        return current.child(int(rng.integers(m)))
    u = rng.random()
    if u < beta:
        return current.parent
    return current.child(min(int((u - beta) / (1 - beta) * m), m - 1))


def step_many(digits: np.ndarray, depth: np.ndarray, rng: np.random.Generator, beta: float, m: int):
    """Advance every walk one step in place.

    ``digits[i, :depth[i]]`` is the current vertex of walk ``i``.  Returns the
    move taken: ``-1`` for the parent, otherwise the child digit.
    """
    u = rng.random(depth.shape[0])
    at_root = depth == 0
    up = (u < beta) & ~at_root
    child = np.where(at_root, u * m, (u - beta) / (1 - beta) * m)
    child = np.minimum(child.astype(np.int64), m - 1)
    down = ~up
    rows = np.flatnonzero(down)
    digits[rows, depth[rows]] = child[rows]
    depth[down] += 1
    depth[up] -= 1
    return np.where(up, -1, child)


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, block]))


def exit_points(cfg: WalkConfig, x: Vertex) -> np.ndarray:
    """``psi`` of the vertex where each walk first reaches depth ``max_depth``."""
    if x.m != cfg.m:
        raise DomainError("vertex and walk use different m")
    if x.level >= cfg.max_depth:
        raise DomainError(f"start level {x.level} is not below the exit depth {cfg.max_depth}")
    D = cfg.max_depth
    weights = float(cfg.m) ** -np.arange(1, D + 1)
    out = np.empty(cfg.samples)
    beta = float(cfg.beta)
    for b, start in enumerate(range(0, cfg.samples, cfg.block)):
        n = min(cfg.block, cfg.samples - start)
        rng = _block_rng(cfg.seed, b)
        digits = np.zeros((n, D), dtype=np.int64)
        digits[:, :x.level] = x.digits
        depth = np.full(n, x.level, dtype=np.int64)
        active = np.arange(n)
        while active.size:
            sub_digits, sub_depth = digits[active], depth[active]
            step_many(sub_digits, sub_depth, rng, beta, cfg.m)
            digits[active], depth[active] = sub_digits, sub_depth
            active = active[sub_depth < D]
        out[start:start + n] = digits @ weights
    return out


@dataclass
class WalkEstimate:
    mean: float
    stderr: float
    bias_bound: float
    N: int
    D: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def consistent_with(self, exact, z: float = 3.0) -> bool:
        return abs(self.mean - float(exact)) <= z * self.stderr + self.bias_bound


def truncation_bias_bound(g: BoundaryDatum, beta, m: int, D: int) -> float:
    """Bound on ``|E u(X_tau) - E g(psi X_tau)|`` for walks stopped at depth ``D``.

    At a depth-``D`` vertex ``y``, ``u(y) - g(psi y)`` is a convex combination
    of ``avg_{I(y^-j)} g - g(psi y)``, each at most ``L m**-(D-j)`` for
    Lipschitz ``g``.  Without a Lipschitz constant the oscillation of ``g`` is
    used.
    """
    p = float(BetaParam.of(beta).p)
    L = g.lipschitz_bound()
    lo, hi = g.bounds()
    osc = hi - lo
    if L is None:
        return osc
    weights = (1 - p) * sum(p**j * float(m) ** -(D - j) for j in range(D)) + p**D
    return min(osc, L * weights * (1 + 1e-12))


def estimate_u(g: BoundaryDatum, cfg: WalkConfig, x: Vertex) -> WalkEstimate:
    """Sample mean of ``g(psi(exit vertex))`` over ``cfg.samples`` walks."""
    points = exit_points(cfg, x)
    scores = g.eval_array(points)
    mean = float(scores.mean())
    stderr = float(scores.std(ddof=1) / math.sqrt(len(scores))) if len(scores) > 1 else math.inf
    bias = truncation_bias_bound(g, cfg.beta, cfg.m, cfg.max_depth)
    return WalkEstimate(mean, stderr, bias, cfg.samples, cfg.max_depth, cfg.seed)


def transition_counts(start: Vertex, beta, steps: int, seed: int = 0) -> np.ndarray:
    """How often ``steps`` independent moves from ``start`` go to the parent
    (index 0) or to each child (indices ``1..m``)."""
    m = start.m
    rng = _block_rng(seed, 0)
    digits = np.zeros((steps, start.level + 1), dtype=np.int64)
    digits[:, :start.level] = start.digits
    depth = np.full(steps, start.level, dtype=np.int64)
    moves = step_many(digits, depth, rng, float(BetaParam.of(beta).beta), m)
    return np.bincount(moves + 1, minlength=m + 1)


def depth_drift(beta, m: int, steps: int, seed: int = 0, start_level: int = 5) -> tuple:
    """Mean and standard error of the depth change per step away from the root."""
    counts = transition_counts(Vertex(m, (0,) * start_level), beta, steps, seed)
    changes = np.concatenate([-np.ones(counts[0]), np.ones(counts[1:].sum())])
    return float(changes.mean()), float(changes.std(ddof=1) / math.sqrt(steps))
