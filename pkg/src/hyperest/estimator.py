"""Entropy pairs, compact-box constants and the relative-entropy error bound.

For an entropy/entropy-flux pair (eta, q) with (D eta) Dg = Dq and eta
strictly convex on a compact convex box K containing the reconstruction, the
squared L2 error of the scheme at a node t_n is bounded by

    2 |u_hat^st(t_n) - u_h^n|^2
    + 2 C_under^-1 (|R_st|^2_{L2((0,t_n)xT)} + C_over |u_0 - u_hat^st(0)|^2)
      * exp( int_0^{t_n} (C_over C_g sup_x|d_x u_hat^st| + C_over^2)
             / C_under ds ),

where C_under/C_over bound the eigenvalues of Hess(eta) and C_g the flux
Hessians on K. The box assumption on the reconstruction is checkable a
posteriori (the exact solution's membership is not, and stays an assumption).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AssumptionViolation, ConvexityError
from .spacetime import ResidualField

__all__ = ["EntropyPair", "CompactBox", "EntropyConstants", "EstimatorReport",
           "builtin_entropy", "verify_in_box", "entropy_constants",
           "error_estimate", "default_box"]

SAFETY_FACTOR = 1.05


@dataclass
class EntropyPair:
    """Strictly convex entropy with its flux and derivatives (states with the
    component axis last, vectorized)."""

    name: str
    eta: Callable[[np.ndarray], np.ndarray]
    q_flux: Callable[[np.ndarray], np.ndarray]
    grad_eta: Callable[[np.ndarray], np.ndarray]
    hess_eta: Callable[[np.ndarray], np.ndarray]


def builtin_entropy(sys) -> EntropyPair:
    """The shipped entropy pair for a system: u^2/2 for scalar equations,
    -rho s / (gamma - 1) with s = log(p rho^-gamma) for Euler (entropy flux
    u eta in both cases, which satisfies the compatibility relation)."""
    if sys.name == "advection":
        a = sys.params["speed"]
        return EntropyPair(
            name="quadratic",
            eta=lambda u: 0.5 * u[..., 0] ** 2,
            q_flux=lambda u: 0.5 * a * u[..., 0] ** 2,
            grad_eta=lambda u: u.copy(),
            hess_eta=lambda u: np.ones(u.shape + (1,)))
    if sys.name == "burgers":
        return EntropyPair(
            name="quadratic",
            eta=lambda u: 0.5 * u[..., 0] ** 2,
            q_flux=lambda u: u[..., 0] ** 3 / 3.0,
            grad_eta=lambda u: u.copy(),
            hess_eta=lambda u: np.ones(u.shape + (1,)))
    if sys.name == "euler":
        gm = sys.params["gamma"]
        gm1 = gm - 1.0

        def _parts(u):
            rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
            p = gm1 * (en - 0.5 * mom**2 / rho)
            s = np.log(p) - gm * np.log(rho)
            return rho, mom, en, p, s

        def eta(u):
            rho, _, _, _, s = _parts(u)
            return -rho * s / gm1

        def q_flux(u):
            rho, mom, _, _, s = _parts(u)
            return -(mom / rho) * rho * s / gm1

        def grad_eta(u):
            rho, mom, _, p, s = _parts(u)
            out = np.empty_like(u)
            out[..., 0] = (gm - s) / gm1 - 0.5 * mom**2 / (rho * p)
            out[..., 1] = mom / p
            out[..., 2] = -rho / p
            return out

        def hess_eta(u):
            rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
            pe = 2.0 * en * rho - mom**2          # = 2 rho p / (gamma - 1)
            fac = 1.0 / (gm1 * pe**2)
            out = np.empty(u.shape + (3,))
            out[..., 0, 0] = (gm * pe**2 + mom**4) / rho
            out[..., 0, 1] = out[..., 1, 0] = -2.0 * mom**3
            out[..., 0, 2] = out[..., 2, 0] = -2.0 * rho * (pe - mom**2)
            out[..., 1, 1] = 2.0 * rho * (pe + 2.0 * mom**2)
            out[..., 1, 2] = out[..., 2, 1] = -4.0 * mom * rho**2
            out[..., 2, 2] = 4.0 * rho**3
            return out * fac[..., None, None]

        return EntropyPair(name="gas_dynamic", eta=eta, q_flux=q_flux,
                           grad_eta=grad_eta, hess_eta=hess_eta)
    raise ValueError(f"no builtin entropy pair for system {sys.name!r}")


@dataclass(frozen=True)
class CompactBox:
    """Componentwise bounds defining the compact convex set K (closed box)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ValueError("box bounds must satisfy lower <= upper componentwise")

    @property
    def m(self):
        return self.lower.size

    def contains(self, u, tol=0.0):
        u = np.asarray(u)
        return np.all((u >= self.lower - tol) & (u <= self.upper + tol), axis=-1)

    def sample_grid(self, resolution):
        axes = [np.linspace(lo, hi, resolution) if hi > lo else np.array([lo])
                for lo, hi in zip(self.lower, self.upper)]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)


def default_box(sample_min, sample_max, pad=0.1) -> CompactBox:
    """Box around sampled reconstruction values, padded by a fraction of the
    componentwise spread (an absolute floor keeps flat components usable)."""
    sample_min = np.asarray(sample_min, dtype=float)
    sample_max = np.asarray(sample_max, dtype=float)
    spread = np.maximum(sample_max - sample_min, 1e-8 + 0.0 * sample_min)
    return CompactBox(sample_min - pad * spread, sample_max + pad * spread)


def verify_in_box(field, box: CompactBox, tol=1e-12):
    """Check the bounded-reconstruction assumption on the sampling grid of a
    ResidualField (quadrature times x per-cell extrema-candidate points).

    Returns (ok, first_violation) with first_violation = (t, x, state) or None.
    """
    if isinstance(field, ResidualField):
        samples = field.iter_samples()
    else:
        samples = field.residual_field().iter_samples()
    for tg, xg, vals in samples:
        states = np.moveaxis(vals, -2, -1)        # (B,S,M,Gs,m)
        ok = box.contains(states, tol=tol)
        if not bool(np.all(ok)):
            b, s, i, g = [int(v) for v in np.argwhere(~ok)[0]]
            return False, (float(tg[b, s]), float(xg[i, g]), states[b, s, i, g])
    return True, None


@dataclass
class EntropyConstants:
    """Hessian eigenvalue bounds on the box, with the safety-inflated values
    used by the estimator alongside the raw sampled extremes."""

    c_eta_lower: float
    c_eta_upper: float
    c_g: float
    raw_eta_lower: float
    raw_eta_upper: float
    raw_c_g: float
    resolution: int
    safety: float


def entropy_constants(pair: EntropyPair, sys, box: CompactBox, resolution=9,
                      safety=SAFETY_FACTOR) -> EntropyConstants:
    """Sample the entropy and flux Hessians over a state grid on the box.

    The returned c_eta_lower is deflated (and c_eta_upper / c_g inflated) by
    the safety factor, since a finite grid can miss interior extrema; pass
    safety=1 for the raw sampled values.
    """
    states = box.sample_grid(resolution)
    if sys.admissible is not None and not bool(np.all(sys.admissible(states))):
        raise ConvexityError("box contains inadmissible states")
    H = pair.hess_eta(states)
    if H.shape[-1] == 1:
        eigs = H[..., 0, 0][..., None]
    else:
        eigs = np.linalg.eigvalsh(H)
    lo = float(eigs.min())
    hi = float(eigs[..., -1].max())
    if lo <= 0.0:
        raise ConvexityError(
            f"entropy Hessian not positive definite on the box (min eig {lo:.3e})")
    if sys.flux_hessian is not None:
        Hg = sys.flux_hessian(states)
        geigs = np.abs(np.linalg.eigvalsh(Hg))
        comp = geigs.max(axis=-1)                 # spectral radius per component
        cg = float(np.sqrt(np.sum(comp**2, axis=-1)).max())
    else:
        cg = 0.0
    return EntropyConstants(
        c_eta_lower=lo / safety, c_eta_upper=hi * safety, c_g=cg * safety,
        raw_eta_lower=lo, raw_eta_upper=hi, raw_c_g=cg,
        resolution=resolution, safety=safety)


@dataclass
class EstimatorReport:
    """All terms of the error bound at one checkpoint."""

    t: float
    recon_gap_sq: float
    residual_sq: float
    init_sq: float
    exp_factor: float
    bound: float
    supdx_integral: float = math.nan   # int_0^t sup_x |d_x u_hat^st| ds
    in_box: bool = True
    forced: bool = False


def error_estimate(constants: EntropyConstants, checkpoints, init_sq,
                   in_box=True, force=False):
    """Assemble the squared-error bound at each checkpoint.

    checkpoints: iterable of (t, recon_gap_sq, residual_sq, supdx_integral)
    where supdx_integral = int_0^t sup_x |d_x u_hat^st(s, .)| ds accumulated
    slab-wise (each slab contributes its length times its sampled sup, which
    overestimates the true integral and keeps the bound valid).
    """
    if not in_box and not force:
        raise AssumptionViolation(
            "reconstruction left the compact box; rerun with force=True to "
            "emit a (formally invalid) bound")
    cu, co, cg = constants.c_eta_lower, constants.c_eta_upper, constants.c_g
    reports = []
    for t, gap_sq, res_sq, sup_int in checkpoints:
        exponent = (co * cg * sup_int + co**2 * t) / cu
        # the exponential factor can overflow for systems / steep solutions;
        # an infinite bound is still a valid (useless) upper bound
        exp_factor = math.exp(exponent) if exponent < 700.0 else math.inf
        bound = 2.0 * gap_sq + 2.0 / cu * (res_sq + co * init_sq) * exp_factor
        reports.append(EstimatorReport(
            t=float(t), recon_gap_sq=float(gap_sq), residual_sq=float(res_sq),
            init_sq=float(init_sq), exp_factor=float(exp_factor),
            bound=float(bound), supdx_integral=float(sup_int),
            in_box=in_box, forced=bool(force and not in_box)))
    return reports
