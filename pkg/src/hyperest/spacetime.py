"""Continuous spatial reconstruction and the full space-time residual.

Given the temporal reconstruction u_hat^t (a piecewise polynomial in time
with DG-coefficient values), each time slice is lifted to a globally
continuous piecewise polynomial of one degree higher: the first q orthonormal
coefficients per cell are kept, and the top two coefficients are solved from
the requirement that the lift matches w(left trace, right trace) at both cell
endpoints. The residual of the lifted function in the PDE,

    R_st = d/dt u_hat^st + d/dx g(u_hat^st),

is integrated slab by slab; the same sweep collects the sup of the spatial
derivative and the componentwise range of the reconstruction (used for the
bounded-reconstruction check and the entropy constants).

Time derivatives of the lift are exact whenever the flux's w function has
analytic Jacobians; for the characteristic-upwinding w on systems a central
finite difference in t (step tau * 1e-4) is used instead.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dg import DGSpace, DGFunction, flux_w, flux_w_jacobian
from .quadrature import gauss_rule, legendre_table
from .recon import TemporalPoly

__all__ = ["spatial_reconstruct", "SpaceTimeRecon", "ResidualField",
           "SweepResult", "spacetime_l2"]

FD_TIME_STEP_FACTOR = 1e-4


def _lift_tables(space):
    """Endpoint solve data for raising degree q -> q+1 on each cell."""
    q = space.q
    mesh = space.mesh
    k = np.arange(q + 2)
    scale_up = np.sqrt((2.0 * k + 1.0) / mesh.cell_widths[:, None])   # (M, q+2)
    left_sigma = (-1.0) ** k
    sl_q, sl_q1 = scale_up[:, q] * left_sigma[q], scale_up[:, q + 1] * left_sigma[q + 1]
    sr_q, sr_q1 = scale_up[:, q], scale_up[:, q + 1]
    det = sl_q * sr_q1 - sl_q1 * sr_q
    low_left = space.scale[:, :q] * left_sigma[None, :q]               # (M, q)
    low_right = space.scale[:, :q]
    return {"sl_q": sl_q, "sl_q1": sl_q1, "sr_q": sr_q, "sr_q1": sr_q1,
            "det": det, "low_left": low_left, "low_right": low_right}


def _lift_endpoint_solve(space, tables, A, W):
    """Solve the per-cell 2x2 endpoint system; A: (..., M, m, q+1) DG
    coefficients, W: (..., M, m) interface values. Returns (..., M, m, q+2)."""
    q = space.q
    wl = W                                     # interface i = left end of cell i
    wr = np.roll(W, -1, axis=-2)
    low = A[..., :q]
    rl = wl - np.einsum("...imk,ik->...im", low, tables["low_left"])
    rr = wr - np.einsum("...imk,ik->...im", low, tables["low_right"])
    det = tables["det"][:, None]
    c_q = (rl * tables["sr_q1"][:, None] - rr * tables["sl_q1"][:, None]) / det
    c_q1 = (rr * tables["sl_q"][:, None] - rl * tables["sr_q"][:, None]) / det
    return np.concatenate([low, c_q[..., None], c_q1[..., None]], axis=-1)


def spatial_reconstruct(u: DGFunction, spec, sys) -> DGFunction:
    """Lift a DG function to the globally continuous degree-(q+1) function
    matching w(traces) at every interface and the first q orthonormal
    coefficients per cell (linear interface interpolation when q = 0)."""
    space = u.space
    minus, plus = space.trace_values(u.coeffs)
    W = flux_w(spec, sys, minus, plus, h=space.mesh.interface_widths)
    tables = _lift_tables(space)
    lifted = _lift_endpoint_solve(space, tables, u.coeffs, W)
    return DGFunction(DGSpace(space.mesh, space.q + 1, space.m), lifted)


@dataclass
class SweepResult:
    """Per-slab accumulators from a residual sweep."""

    slab_l2sq: np.ndarray         # integral of |R_st|^2 over each slab
    slab_supdx: np.ndarray        # sup of |d/dx u_hat^st| per slab
    sample_min: np.ndarray        # componentwise range of u_hat^st samples
    sample_max: np.ndarray

    def residual_sq_until(self, times, t):
        """Cumulative squared residual norm over (0, t), t a breakpoint."""
        n = int(np.searchsorted(times, t - 1e-12 * max(abs(t), 1.0)))
        return float(np.sum(self.slab_l2sq[:n]))

    def supdx_integral_until(self, times, t):
        n = int(np.searchsorted(times, t - 1e-12 * max(abs(t), 1.0)))
        taus = np.diff(times)[:n]
        return float(np.sum(taus * self.slab_supdx[:n]))


class SpaceTimeRecon:
    """The space-time reconstruction and its residual machinery."""

    def __init__(self, space: DGSpace, sys, flux_spec, recon_t: TemporalPoly,
                 n_quad=None, n_sup=None):
        if recon_t.value_shape != space.shape:
            raise ValueError("temporal reconstruction does not live in the DG space")
        self.space = space
        self.sys = sys
        self.spec = flux_spec
        self.recon = recon_t
        self.space_up = DGSpace(space.mesh, space.q + 1, space.m)
        self._tables = _lift_tables(space)
        q = space.q
        self.n_quad = n_quad if n_quad is not None else q + 3
        self.n_sup = n_sup if n_sup is not None else q + 4
        self._wjac_available = flux_w_jacobian(
            flux_spec, sys, np.zeros((1, sys.m)) + 1.0, np.zeros((1, sys.m)) + 1.0,
            h=space.mesh.h) is not None

        rule_x = gauss_rule(self.n_quad)
        self.xq_weights = rule_x.weights
        self.P_res, self.dP_res = legendre_table(q + 1, rule_x.points)
        self.xq_points = rule_x.points
        rule_t = gauss_rule(self.n_quad)
        self.theta_q = 0.5 * (rule_t.points + 1.0)
        self.t_weights = 0.5 * rule_t.weights
        # Chebyshev extrema (endpoints included) for sup sampling
        xs = np.cos(np.pi * np.arange(self.n_sup) / (self.n_sup - 1))[::-1]
        self.P_sup, self.dP_sup = legendre_table(q + 1, xs)
        self.xs_points = xs
        # box verification samples: quadrature, interface and extrema
        # candidate points combined
        xb = np.unique(np.concatenate([rule_x.points, xs]))
        self.P_box, _ = legendre_table(q + 1, xb)
        self.xb_points = xb

    # -- lifting ------------------------------------------------------------

    def lift(self, A):
        """Raise (..., M, m, q+1) coefficients of u_hat^t to u_hat^st."""
        minus, plus = self.space.trace_values(A)
        W = flux_w(self.spec, self.sys, minus, plus,
                   h=self.space.mesh.interface_widths)
        return _lift_endpoint_solve(self.space, self._tables, A, W)

    def _w_and_dot(self, A, Adot, slabs, theta):
        minus, plus = self.space.trace_values(A)
        h_ifc = self.space.mesh.interface_widths
        W = flux_w(self.spec, self.sys, minus, plus, h=h_ifc)
        if self._wjac_available:
            dminus, dplus = self.space.trace_values(Adot)
            Da, Db = flux_w_jacobian(self.spec, self.sys, minus, plus, h=h_ifc)
            Wdot = (np.einsum("...ij,...j->...i", Da, dminus)
                    + np.einsum("...ij,...j->...i", Db, dplus))
        else:
            eps_th = FD_TIME_STEP_FACTOR
            Wp = self._w_of(self.recon.eval_at(slabs, theta + eps_th))
            Wm = self._w_of(self.recon.eval_at(slabs, theta - eps_th))
            scales = self.recon.scales[slabs].reshape(slabs.shape + (1,) * (Wp.ndim - 1))
            Wdot = (Wp - Wm) / (2.0 * eps_th * scales)
        return W, Wdot

    def _w_of(self, A):
        minus, plus = self.space.trace_values(A)
        return flux_w(self.spec, self.sys, minus, plus,
                      h=self.space.mesh.interface_widths)

    def lift_pair(self, A, Adot, slabs=None, theta=None):
        """Lift coefficients and their exact time derivative."""
        W, Wdot = self._w_and_dot(A, Adot, slabs, theta)
        B = _lift_endpoint_solve(self.space, self._tables, A, W)
        Bdot = _lift_endpoint_solve(self.space, self._tables, Adot, Wdot)
        return B, Bdot

    def at_time(self, t, deriv=False):
        """u_hat^st(t, .) as a DGFunction of degree q+1 (optionally with its
        time derivative as a second function)."""
        A = self.recon.evaluate(t)
        if not deriv:
            return DGFunction(self.space_up, self.lift(A))
        Adot = self.recon.evaluate(t, deriv=1)
        idx = np.atleast_1d(self.recon._locate(np.asarray(t, dtype=float)))
        theta = np.atleast_1d((t - self.recon.times[idx]) / self.recon.scales[idx])
        B, Bdot = self.lift_pair(A[None], Adot[None], slabs=idx, theta=theta)
        return DGFunction(self.space_up, B[0]), DGFunction(self.space_up, Bdot[0])

    def recon_gap_sq(self, t, u_coeffs):
        """Squared L2 distance between u_hat^st(t) and a degree-q DG state."""
        B = self.lift(self.recon.evaluate(t))
        diff = B.copy()
        diff[..., :-1] -= u_coeffs
        return float(np.sum(diff**2))

    # -- pointwise residual evaluators (probe/test use) ----------------------

    def _point_eval(self, coeffs, x, deriv=False):
        space = self.space_up
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi, cells = space.mesh.reference_coord(x)
        P, dP = legendre_table(space.q, xi)
        sc = space.scale[cells]
        table = dP if deriv else P
        vals = np.einsum("nmk,kn->nm", coeffs[cells] * sc[:, None, :], table)
        if deriv:
            vals *= (2.0 / space.mesh.cell_widths[cells])[:, None]
        return vals

    def eval_rst(self, t, x):
        """R_st(t, x) pointwise; x may be an array."""
        idx = np.atleast_1d(self.recon._locate(np.asarray(t, dtype=float)))
        theta = np.atleast_1d((t - self.recon.times[idx]) / self.recon.scales[idx])
        A = self.recon.eval_at(idx, theta)
        Adot = self.recon.eval_at(idx, theta, deriv=1)
        B, Bdot = self.lift_pair(A, Adot, slabs=idx, theta=theta)
        B, Bdot = B[0], Bdot[0]
        ut = self._point_eval(Bdot, x)
        u = self._point_eval(B, x)
        ux = self._point_eval(B, x, deriv=True)
        Dg = self.sys.jacobian(u)
        return ut + np.einsum("...ij,...j->...i", Dg, ux)

    def eval_rt(self, t, x):
        """Temporal residual R_t(t, x) = (d/dt u_hat^t + f(u_hat^t))(x)."""
        A = self.recon.evaluate(t)
        Adot = self.recon.evaluate(t, deriv=1)
        F = self.space.operator(self.sys, self.spec, A, t=t)
        coeffs = Adot + F
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.space.evaluate(coeffs, x)

    def eval_rs(self, t, x):
        """Spatial residual R_s = d/dt(u_hat^st - u_hat^t) + d/dx g(u_hat^st)
        - f(u_hat^t), so that R_st = R_s + R_t pointwise."""
        return self.eval_rst(t, x) - self.eval_rt(t, x)

    # -- the slab sweep -------------------------------------------------------

    def residual_field(self):
        return ResidualField(self)


class ResidualField:
    """Slab-wise integrals and sups of the space-time residual."""

    def __init__(self, strec: SpaceTimeRecon, max_chunk_elems=3_000_000):
        self.strec = strec
        self.recon = strec.recon
        N = self.recon.num_intervals
        space = strec.space
        per_slab = strec.n_quad * space.num_cells * max(strec.n_quad, strec.n_sup) \
            * space.m
        self.chunk = max(1, min(N, max_chunk_elems // max(per_slab, 1)))
        self._sweep = None

    def _process_chunk(self, slabs):
        st = self.strec
        space, sys = st.space, st.sys
        mesh = space.mesh
        S = st.theta_q.size
        theta = np.broadcast_to(st.theta_q, (slabs.size, S))
        A = self.recon.eval_at(slabs, theta)                  # (B,S,M,m,K)
        Adot = self.recon.eval_at(slabs, theta, deriv=1)
        B, Bdot = st.lift_pair(A, Adot, slabs=slabs, theta=theta)

        up = st.space_up
        vals = up.cell_values(B, st.P_res)                    # (B,S,M,m,G)
        states = np.swapaxes(vals, -1, -2)                    # (B,S,M,G,m)
        if sys.admissible is not None:
            xg = mesh.nodes[:-1, None] + 0.5 * mesh.cell_widths[:, None] \
                * (st.xq_points + 1.0)
            sys.check_states(states,
                             x=np.broadcast_to(xg[None, None], states.shape[:-1]))
        ut = np.swapaxes(up.cell_values(Bdot, st.P_res), -1, -2)
        ux = np.swapaxes(up.cell_derivatives(B, st.dP_res), -1, -2)
        Dg = sys.jacobian(states)
        R = ut + np.einsum("...ij,...j->...i", Dg, ux)
        R2 = np.sum(R * R, axis=-1)                           # (B,S,M,G)
        cell_meas = 0.5 * mesh.cell_widths
        space_int = np.einsum("bsmg,g,m->bs", R2, st.xq_weights, cell_meas)
        slab_l2sq = (space_int @ st.t_weights) * self.recon.scales[slabs]

        # sup of |d/dx u_hat^st| and sample range on the denser grid
        uxs = up.cell_derivatives(B, st.dP_sup)               # (B,S,M,m,Gs)
        mag = np.sqrt(np.sum(uxs * uxs, axis=-2))             # (B,S,M,Gs)
        slab_supdx = mag.max(axis=(1, 2, 3))
        vs = up.cell_values(B, st.P_sup)                      # (B,S,M,m,Gs)
        smin = vs.min(axis=(0, 1, 2, 4))
        smax = vs.max(axis=(0, 1, 2, 4))
        return slab_l2sq, slab_supdx, smin, smax

    def sweep(self) -> SweepResult:
        """Run (and cache) the full slab sweep."""
        if self._sweep is not None:
            return self._sweep
        N = self.recon.num_intervals
        m = self.strec.space.m
        l2sq = np.empty(N)
        supdx = np.empty(N)
        smin = np.full(m, np.inf)
        smax = np.full(m, -np.inf)
        for start in range(0, N, self.chunk):
            slabs = np.arange(start, min(start + self.chunk, N))
            c_l2, c_sup, c_min, c_max = self._process_chunk(slabs)
            l2sq[slabs] = c_l2
            supdx[slabs] = c_sup
            smin = np.minimum(smin, c_min)
            smax = np.maximum(smax, c_max)
        self._sweep = SweepResult(slab_l2sq=l2sq, slab_supdx=supdx,
                                  sample_min=smin, sample_max=smax)
        return self._sweep

    def residual_l2(self, t_end=None):
        """Space-time L2 norm of R_st over (0, t_end)."""
        sw = self.sweep()
        if t_end is None:
            return math.sqrt(float(np.sum(sw.slab_l2sq)))
        return math.sqrt(sw.residual_sq_until(self.recon.times, t_end))

    def sup_dx(self, slab):
        return float(self.sweep().slab_supdx[slab])

    def iter_samples(self):
        """Yield (times (B,S), x (M,Gb), values (B,S,M,m,Gb)) over the
        combined quadrature / interface / extrema-candidate grid, chunk by
        chunk (used by the box verifier)."""
        st = self.strec
        mesh = st.space.mesh
        xg = mesh.nodes[:-1, None] + 0.5 * mesh.cell_widths[:, None] \
            * (st.xb_points + 1.0)
        N = self.recon.num_intervals
        for start in range(0, N, self.chunk):
            slabs = np.arange(start, min(start + self.chunk, N))
            theta = np.broadcast_to(st.theta_q, (slabs.size, st.theta_q.size))
            A = self.recon.eval_at(slabs, theta)
            B = st.lift(A)
            vals = st.space_up.cell_values(B, st.P_box)
            tg = self.recon.times[slabs][:, None] + theta * self.recon.scales[slabs][:, None]
            yield tg, xg, vals


def spacetime_l2(fn, mesh, t0, t1, n_points=6, n_time=None):
    """Space-time L2 norm of a callable (t, x) -> (..., m) by tensor Gauss
    quadrature (oracle-grade helper, not a hot path)."""
    rx = gauss_rule(n_points)
    rt = gauss_rule(n_time if n_time is not None else n_points)
    xg = mesh.nodes[:-1, None] + 0.5 * mesh.cell_widths[:, None] * (rx.points + 1.0)
    acc = 0.0
    for tp, tw in zip(rt.points, rt.weights):
        t = t0 + 0.5 * (tp + 1.0) * (t1 - t0)
        vals = np.asarray(fn(t, xg))
        if vals.shape == xg.shape:
            vals = vals[..., None]
        mag2 = np.sum(vals**2, axis=-1)
        space_int = float(np.sum((mag2 @ rx.weights) * 0.5 * mesh.cell_widths))
        acc += tw * 0.5 * (t1 - t0) * space_int
    return math.sqrt(acc)
