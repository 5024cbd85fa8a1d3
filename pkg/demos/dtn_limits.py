"""Normal derivatives at the boundary: the local map and the nonlocal map.

Run with ``python3 demos/dtn_limits.py``.
"""
from fractions import Fraction as F

from treedtn import Branch, Polynomial
from treedtn.dtn import (NormalVector, gamma_kernel_quadrature, gamma_sweep, lambda_sweep,
                         omega, varpi)

g = Polynomial([0, 0, 1])
branch = Branch.from_point(F(1, 3), 2)

print("Local map, beta = 0, eta = (-1, 1): m^k <grad u(x_k), eta> -> g'(1/3) <eta, omega_2> = 1/3")
sweep = lambda_sweep(g, 0, (-1, 1), branch, range(2, 15, 2))
for e in sweep.estimates:
    print(f"  k = {e.k:2d}   estimate {float(e.value):.8f}   gap {float(e.gap):.2e}")
print(f"  fitted log-gap slope {sweep.slope:.4f} (expected {sweep.info['expected_slope']:.4f})")

print("\nLocal map, beta = 1/4: target (1-2b)/(m(1-b)) g'(t) <eta, varpi_m> for zero-sum eta")
sweep = lambda_sweep(g, F(1, 4), (-1, 1), branch, [6, 10, 14])
for e in sweep.estimates:
    print(f"  k = {e.k:2d}   estimate {float(e.value):.8f}   target {float(e.target):.8f}")

print("\nThe two weight vectors differ by a factor m on zero-sum vectors:")
for m in (2, 3, 4):
    eta = NormalVector([1] + [0] * (m - 2) + [-1])
    print(f"  m = {m}: <eta, omega> = {eta.dot(omega(m))},  <eta, varpi> = {eta.dot(varpi(m))}")

print("\nNonlocal map, beta = 2/5 (p m = 4/3 > 1): prelimit against the kernel integral")
sweep = gamma_sweep(g, F(2, 5), branch, [4, 8, 12, 16])
quad = sweep.info["quadrature"]
print(f"  kernel quadrature {float(quad.value):.8f}  (tail bound {quad.tail_bound:.1e})")
for e in sweep.estimates:
    d = e.diagnostics
    print(f"  k = {e.k:2d}   estimate {float(e.value):.8f}   |J2| {abs(float(d['J2'])):.2e}")

print("\nBelow p m = 1 the prelimit does not settle (beta = 3/10):")
sweep = gamma_sweep(g, F(3, 10), branch, [4, 8, 12])
for e in sweep.estimates:
    print(f"  k = {e.k:2d}   estimate {float(e.value):.6f}")
print(f"  convergent = {sweep.info['convergent']}")
q = gamma_kernel_quadrature(Polynomial([0, 1]), F(9, 20), Branch.from_point(F(3, 4), 2), 30)
print(f"\nKernel integral for g = t at t = 3/4, beta = 9/20: {float(q.value):.10f}")
