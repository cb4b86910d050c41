"""The first Robin eigenvalue of the square squeezed between two 1D problems.

Lower end: the mixed 1D problem on a segment of length t0 = sqrt(2 M), with M
the maximum of the Dirichlet torsion function.  Upper end: the same problem on
a segment of length |Omega|/P.  The square is separable, so the exact value is
also available as a sum of two 1D eigenvalues.
"""

import math

from robinlab import dirichlet_torsion, rectangle, robin_eigenvalue
from robinlab.onedim import nu1

beta = 1.0
square = rectangle(1.0, 1.0)
_, M = dirichlet_torsion(square)
lam = robin_eigenvalue(square, beta, levels=4)

t0 = math.sqrt(2 * M.value)
lo, hi = nu1(beta, t0).nu1, nu1(beta, 0.25).nu1
exact = 2 * nu1(beta, 0.5).nu1

print(f"t0 = sqrt(2M) = {t0:.6f}")
print(f"nu1(beta, t0)   = {lo:.6f}")
print(f"FEM lambda_beta = {lam.value:.8f}  (order {lam.observed_order:.2f}, levels {lam.level_values})")
print(f"exact (separable) = {exact:.8f}")
print(f"nu1(beta, 1/4)  = {hi:.6f}")
