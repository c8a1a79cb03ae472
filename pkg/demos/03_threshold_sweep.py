"""
Where does uniqueness break?
============================

Sweep theta, count positive fixed points, bisect the jump.  For k = 2 and 3
the thresholds are 5/6 and 5/9.  For k = 4 and 5 Newton multistart places
them near 5/(3k), a pattern that is observed here rather than proved.
"""

# %%
from treegibbs.bifurcation import refine_threshold, sweep
from treegibbs.kernel import ModelParams

for k, method in ((2, "analytic"), (3, "analytic"), (4, "newton"), (5, "newton")):
    base = ModelParams(k, 0.5)
    table = sweep(base, 0.05, 0.95, 0.01, method=method)
    tc = refine_threshold(base, table.threshold_bracket, 1e-6)
    tag = " (conjectural)" if table.notes else ""
    print(f"k={k}: bracket {table.threshold_bracket}, theta_c = {tc:.6f}, 5/(3k) = {5 / (3 * k):.6f}{tag}")

# %%
# The first few rows of the k = 3 table as CSV.
print(sweep(ModelParams(3, 0.5), 0.54, 0.6, 0.01).to_csv("k=3 sweep"))
