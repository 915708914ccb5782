"""Fully discrete DG schemes for 1D periodic conservation laws with
reconstruction-based a posteriori error control."""

from .dg import DGFunction, DGSpace, FluxSpec, chi_smooth, flux_w, \
    jump_indicator, numerical_flux
from .estimator import CompactBox, EntropyPair, EstimatorReport, \
    builtin_entropy, entropy_constants, error_estimate, verify_in_box
from .mesh import Mesh1D, build_mesh
from .quadrature import QuadratureRule, gauss_rule, legendre_eval
from .recon import OdeBoundReport, ReconSpec, TemporalPoly, \
    divided_difference, f2_backward_fd, f2_directional, hermite_interval, \
    ode_error_bound, reconstruct, residual_norms, temporal_residual
from .spacetime import ResidualField, SpaceTimeRecon, spatial_reconstruct
from .steppers import StepperSpec, Trajectory, evolve, rk_step
from .systems import SystemDef, advection, burgers, euler

__version__ = "0.1.0"
