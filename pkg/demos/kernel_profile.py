"""The singular kernel of the nonlocal map and its finite-depth versions.

Run with ``python3 demos/kernel_profile.py``.
"""
from fractions import Fraction as F

from treedtn import Branch, Polynomial, Solution, Vertex
from treedtn.dtn import kernel_integral, kernel_pieces, kernel_profile

beta = F(2, 5)
p = beta / (1 - beta)
branch = Branch.from_point(0, 2)

print("K(pi, t) for the branch through 0 and beta = 2/5 grows like (m/p)^N near 0:")
ts = [F(3, 2**n) / 2 for n in range(1, 9)]
profile = kernel_profile(branch, beta, ts)
for t, n, k in zip(profile.ts, profile.depths, profile.values):
    print(f"  t = {str(t):>6}   N = {n}   K = {k}")

x, j = Vertex(2, (0, 1, 0)), 1
print(f"\nThe depth-3 kernel K^{j}(x, .) at x = {x} is piecewise constant:")
for a, b, value in kernel_pieces(x, j, beta):
    print(f"  ({str(a):>5}, {str(b):>5})   {value}")
print(f"  total mass: {kernel_integral(x, j, beta)}")

g = Polynomial([F(1, 3), -2, 0, 5])
s = Solution(g, beta, 2)
lhs = s(x.child(j)) - s(x)
rhs = -(1 - p) * kernel_integral(x, j, beta, g)
print(f"\nFor g = 1/3 - 2t + 5t^3 the successor difference is {lhs}")
print(f"and -(1-p) times the kernel integral is           {rhs}")
