"""Check the solver against a biased random walk on the tree.

Run with ``python3 demos/random_walk_oracle.py``.
"""
from fractions import Fraction as F

from treedtn import Polynomial, Solution, Vertex, WalkConfig, estimate_u
from treedtn.walk import depth_drift

g = Polynomial([0, 0, 1])

print("Each step goes to the parent with probability beta, so depth drifts at 1 - 2 beta:")
for beta in (F(0), F(1, 4), F(2, 5)):
    mean, se = depth_drift(beta, 2, 200_000, seed=1)
    print(f"  beta = {str(beta):>4}: observed {mean:+.4f} +- {se:.4f}, expected {float(1 - 2 * beta):+.4f}")

print("\nScoring g at the exit point estimates u; the gap stays within 3 standard errors plus bias:")
for m, beta, digits in [(2, F(1, 3), (1,)), (3, F(1, 4), (0, 2)), (5, F(1, 10), ())]:
    x = Vertex(m, digits)
    est = estimate_u(g, WalkConfig(beta, m, max_depth=30, samples=100_000, seed=7), x)
    exact = Solution(g, beta, m)(x)
    print(f"  m={m} beta={str(beta):>4} x={str(x) or 'root':>4}: walk {est.mean:.5f} +- {est.stderr:.5f}"
          f"  exact {float(exact):.5f}  consistent {est.consistent_with(exact)}")
