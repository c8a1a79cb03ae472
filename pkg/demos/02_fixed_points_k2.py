"""
Fixed points at k = 2
=====================

Every continuous solution of H_2 phi = phi is C1 + C2 theta e(t), so the
problem reduces to a map on two numbers.  Below the threshold 5/6 only the
constant survives; above it two mirror-image positive solutions appear.
"""

# %%
import numpy as np

from treegibbs.hammerstein import hammerstein_residual
from treegibbs.kernel import ModelParams
from treegibbs.reduction import analytic_fixed_points, enumerate_fixed_points

for theta in (0.5, 0.9):
    rep = analytic_fixed_points(ModelParams(2, theta))
    print(f"\ntheta = {theta}")
    print(rep.to_table())

# %%
# The positive branches and their residuals on a 129-point Chebyshev grid.
params = ModelParams(2, 0.9)
for phi in analytic_fixed_points(params).positive_branches():
    print(f"phi(0)={phi(0.0):.6f}  phi(1)={phi(1.0):.6f}  residual={hammerstein_residual(phi):.1e}")

# %%
# Multistart Newton recovers the same set without the closed-form algebra.
newton = enumerate_fixed_points(params)
print("\nnewton roots:", np.round([fp.pair for fp in newton.points], 10).tolist())
