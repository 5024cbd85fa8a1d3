"""Solve a Dirichlet problem on the binary tree and watch it reach its boundary data.

Run with ``python3 demos/solve_and_trace.py``.
"""
from fractions import Fraction as F

from treedtn import Branch, Polynomial, Solution, Vertex
from treedtn.dirichlet import boundary_trace, harmonic_residual
from treedtn.levels import certify_harmonic

g = Polynomial([0, 0, 1])  # g(t) = t^2
beta = F(1, 3)             # weight of the parent in the mean-value identity
s = Solution(g, beta, m=2)

print("Values of u near the root (exact rationals):")
for digits in [(), (0,), (1,), (1, 0), (1, 1)]:
    x = Vertex(2, digits)
    print(f"  u({str(x) or 'root':>4}) = {s(x)!s:>8}   residual {harmonic_residual(s, x)}")

cert = certify_harmonic(g, beta, 2, 12)
print(f"\nExact mean-value check on {cert.vertices_checked} vertices "
      f"(levels 0..12, {len(cert.primes)} primes): all zero = {cert.all_zero}")

print("\nAlong the branch to t = 1/3 the values approach g(1/3) = 1/9:")
for row in boundary_trace(g, beta, Branch.from_point(F(1, 3), 2), [1, 2, 4, 8, 12, 16, 20]):
    print(f"  k = {row.k:2d}   u = {float(row.value):.10f}   gap = {float(row.gap):.2e}")

print("\nFor beta >= 1/2 only constants are bounded solutions:")
try:
    Solution(g, F(1, 2), 2)
except Exception as exc:
    print(f"  {type(exc).__name__}: {exc}")
print(f"  constant data: {Solution(Polynomial([4]), F(3, 5), 2).note}")
