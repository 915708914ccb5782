"""Conservation-law system definitions: flux, Jacobian, eigen-structure.

States are numpy arrays with the component axis last, so every callable is
vectorized over arbitrary leading (cell / quadrature / time) axes.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import StateSpaceError

__all__ = ["SystemDef", "advection", "burgers", "euler",
           "EULER_RHO_FLOOR", "EULER_P_FLOOR"]

EULER_RHO_FLOOR = 1e-8
EULER_P_FLOOR = 1e-8


@dataclass
class SystemDef:
    """A hyperbolic system u_t + g(u)_x = 0 with m components.

    `eig(u)` returns (R, L, D) with right eigenvectors as columns of R, left
    eigenvectors as rows of L, L @ R = I, and D the eigenvalue vector.
    `admissible(u)` returns a boolean mask (or None if every state is valid).
    `flux_hessian(u)` returns the (..., m, m, m) tensor of component Hessians.
    """

    name: str
    m: int
    g: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    max_speed: Callable[[np.ndarray], np.ndarray]
    eig: Optional[Callable] = None
    admissible: Optional[Callable[[np.ndarray], np.ndarray]] = None
    flux_hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def check_states(self, u, t=None, x=None, mesh=None):
        """Raise StateSpaceError at the first inadmissible state in u.

        `x` (same leading shape as u without the component axis) or `mesh`
        is used only to report the violating location.
        """
        if self.admissible is None:
            return
        ok = self.admissible(u)
        if bool(np.all(ok)):
            return
        flat = np.argwhere(~ok)
        first = tuple(flat[0])
        loc_x = None
        if x is not None:
            loc_x = float(np.asarray(x)[first])
        raise StateSpaceError(
            f"inadmissible {self.name} state {np.asarray(u)[first]}",
            t=t, x=loc_x, cell=first[0] if x is None else None)


def _scalar_system(name, gfun, dgfun, d2gfun, **params):
    def g(u):
        return gfun(u)

    def jacobian(u):
        return dgfun(u)[..., None]

    def eig(u):
        lam = dgfun(u)[..., 0]
        one = np.ones(u.shape[:-1] + (1, 1))
        return one, one, lam[..., None]

    def max_speed(u):
        return np.abs(dgfun(u)[..., 0])

    def flux_hessian(u):
        return d2gfun(u)[..., None, None]

    return SystemDef(name=name, m=1, g=g, jacobian=jacobian, eig=eig,
                     max_speed=max_speed, flux_hessian=flux_hessian,
                     params=params)


def advection(speed=1.0):
    """Linear advection u_t + a u_x = 0."""
    a = float(speed)
    return _scalar_system(
        "advection",
        lambda u: a * u,
        lambda u: np.full_like(u, a),
        lambda u: np.zeros_like(u),
        speed=a)


def burgers():
    """Burgers equation with flux u^2/2."""
    return _scalar_system(
        "burgers",
        lambda u: 0.5 * u**2,
        lambda u: u.copy(),
        lambda u: np.ones_like(u))


def euler(gamma=1.4):
    """1D compressible Euler equations in conservative variables (rho, m, E)
    with an ideal-gas pressure law."""
    gm = float(gamma)
    gm1 = gm - 1.0

    def pressure(u):
        return gm1 * (u[..., 2] - 0.5 * u[..., 1]**2 / u[..., 0])

    def g(u):
        rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
        vel = mom / rho
        p = gm1 * (en - 0.5 * mom * vel)
        out = np.empty_like(u)
        out[..., 0] = mom
        out[..., 1] = mom * vel + p
        out[..., 2] = vel * (en + p)
        return out

    def jacobian(u):
        rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
        vel = mom / rho
        out = np.empty(u.shape + (u.shape[-1],))
        out[..., 0, 0] = 0.0
        out[..., 0, 1] = 1.0
        out[..., 0, 2] = 0.0
        out[..., 1, 0] = 0.5 * (gm - 3.0) * vel**2
        out[..., 1, 1] = (3.0 - gm) * vel
        out[..., 1, 2] = gm1
        out[..., 2, 0] = gm1 * vel**3 - gm * vel * en / rho
        out[..., 2, 1] = gm * en / rho - 1.5 * gm1 * vel**2
        out[..., 2, 2] = gm * vel
        return out

    def eig(u):
        """Analytic eigen-decomposition of Dg(u); left and right eigenvectors
        are normalized to be dual (l_i . r_j = delta_ij), with unit density
        perturbation in each right eigenvector."""
        rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
        vel = mom / rho
        p = gm1 * (en - 0.5 * mom * vel)
        c = np.sqrt(gm * p / rho)
        H = (en + p) / rho
        ke = 0.5 * vel**2

        lam = np.stack([vel - c, vel, vel + c], axis=-1)

        R = np.empty(u.shape + (u.shape[-1],))
        # columns: r_1 (u-c), r_2 (u), r_3 (u+c)
        R[..., 0, 0] = 1.0
        R[..., 1, 0] = vel - c
        R[..., 2, 0] = H - vel * c
        R[..., 0, 1] = 1.0
        R[..., 1, 1] = vel
        R[..., 2, 1] = ke
        R[..., 0, 2] = 1.0
        R[..., 1, 2] = vel + c
        R[..., 2, 2] = H + vel * c

        b1 = gm1 / c**2
        b2 = b1 * ke
        L = np.empty_like(R)
        L[..., 0, 0] = 0.5 * (b2 + vel / c)
        L[..., 0, 1] = -0.5 * (b1 * vel + 1.0 / c)
        L[..., 0, 2] = 0.5 * b1
        L[..., 1, 0] = 1.0 - b2
        L[..., 1, 1] = b1 * vel
        L[..., 1, 2] = -b1
        L[..., 2, 0] = 0.5 * (b2 - vel / c)
        L[..., 2, 1] = -0.5 * (b1 * vel - 1.0 / c)
        L[..., 2, 2] = 0.5 * b1
        return R, L, lam

    def max_speed(u):
        p = pressure(u)
        return np.abs(u[..., 1] / u[..., 0]) + np.sqrt(gm * p / u[..., 0])

    def admissible(u):
        return (u[..., 0] >= EULER_RHO_FLOOR) & (pressure(u) >= EULER_P_FLOOR)

    def flux_hessian(u):
        rho, mom, en = u[..., 0], u[..., 1], u[..., 2]
        out = np.zeros(u.shape + (u.shape[-1], u.shape[-1]))
        # component 0 flux is m: zero Hessian
        h2_00 = (3.0 - gm) * mom**2 / rho**3
        h2_01 = (gm - 3.0) * mom / rho**2
        h2_11 = (3.0 - gm) / rho
        out[..., 1, 0, 0] = h2_00
        out[..., 1, 0, 1] = out[..., 1, 1, 0] = h2_01
        out[..., 1, 1, 1] = h2_11
        h3_00 = mom * (2.0 * gm * en * rho - 3.0 * gm1 * mom**2) / rho**4
        h3_01 = (-gm * en * rho + 3.0 * gm1 * mom**2) / rho**3
        h3_02 = -gm * mom / rho**2
        h3_11 = -3.0 * gm1 * mom / rho**2
        h3_12 = gm / rho
        out[..., 2, 0, 0] = h3_00
        out[..., 2, 0, 1] = out[..., 2, 1, 0] = h3_01
        out[..., 2, 0, 2] = out[..., 2, 2, 0] = h3_02
        out[..., 2, 1, 1] = h3_11
        out[..., 2, 1, 2] = out[..., 2, 2, 1] = h3_12
        return out

    sys = SystemDef(name="euler", m=3, g=g, jacobian=jacobian, eig=eig,
                    max_speed=max_speed, admissible=admissible,
                    flux_hessian=flux_hessian, params={"gamma": gm})
    sys.pressure = pressure
    return sys


def euler_conservative(rho, vel, p, gamma=1.4):
    """Stack primitive (rho, u, p) fields into conservative states."""
    rho = np.asarray(rho, dtype=float)
    vel = np.broadcast_to(np.asarray(vel, dtype=float), rho.shape)
    p = np.broadcast_to(np.asarray(p, dtype=float), rho.shape)
    mom = rho * vel
    en = p / (gamma - 1.0) + 0.5 * rho * vel**2
    return np.stack([rho, mom, en], axis=-1)
