"""
The kernel and why the quadrature splits at one half
====================================================

The basis e(t) = cbrt(4 (t - 1/2)) has a vertical tangent at t = 1/2, so a
plain Gauss rule on [0, 1] converges slowly for integrands built from it.
Substituting u = 1/2 + w^3 / 2 turns every family member into a polynomial
in w, and then a 16-point rule is exact.
"""

# %%
import numpy as np

from treegibbs.kernel import ModelParams, basis, kernel_eval, kernel_factorized
from treegibbs.quadrature import gauss_legendre, integrate_cube_substituted, integrate_unit

params = ModelParams(2, 0.9)
t = np.linspace(0, 1, 5)
print("e(t)        ", basis(t))
print("K(t, 0.75)  ", kernel_eval(params, t, 0.75))
print("factorized  ", kernel_factorized(params, t, 0.75))

# %%
# Integral of e(t)^2 over [0, 1] is 6 / (5 cbrt(2)).
exact = 6 / (5 * np.cbrt(2))
print("\norder  plain Gauss   split at 1/2   substituted")
for n in (4, 16, 64, 256):
    rule = gauss_legendre(n)
    plain = integrate_unit(lambda u: basis(u) ** 2, rule, breakpoints=())
    split = integrate_unit(lambda u: basis(u) ** 2, rule)
    subst = integrate_cube_substituted(lambda w: np.cbrt(2) ** 2 * w**2, rule)
    print(f"{n:5d}  {abs(plain - exact):.2e}      {abs(split - exact):.2e}       {abs(subst - exact):.2e}")
