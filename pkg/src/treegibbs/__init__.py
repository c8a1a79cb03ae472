"""Gibbs measures of a continuous-spin model on Cayley trees via Hammerstein fixed points."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kernel import ModelParams, basis, kernel_eval, real_cbrt
from .quadrature import QuadratureRule, gauss_legendre, integrate_cube_substituted, integrate_unit
from .hammerstein import (
    ClosedFormDensity,
    SampledDensity,
    apply_hammerstein,
    consistency_map,
    hammerstein_residual,
    lift_fixed_point,
    picard_iterate,
    project_onto_family,
)
from .reduction import (
    FixedPointReport,
    MomentPair,
    analytic_fixed_points,
    apply_Vk,
    apply_Vk_closedform,
    enumerate_fixed_points,
    to_density,
)
from .bifurcation import SweepTable, refine_threshold, sweep
from .treesim import BoundaryField, TreeSpec, dlr_check, observable, sample_tree, transition_density
