"""Hermite reconstruction in time for single- and multi-step trajectories.

An H(p, d, r) reconstruction fixes, on each step interval [t_n, t_{n+1}], the
value and the first d+1 derivatives at the past nodes t_{n-p}..t_n and the
value and the first r+1 derivatives at t_{n+1}; the interval polynomial has
degree (d+2)(p+1) + r + 1. Derivative conditions come from the cached
right-hand-side values (first order) and, for d >= 1, from directional or
backward finite-difference approximations of the second total derivative.

Values live in an arbitrary vector space: every condition is a numpy array
and all algebra broadcasts over its shape, so the same code reconstructs
scalar ODE solutions and full DG coefficient trajectories.

The method does not constrain the time integrator; only the node data enters.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConditioningError, ReconstructionError
from .quadrature import gauss_rule
from .steppers import Trajectory

__all__ = ["ReconSpec", "TemporalPoly", "PolynomialPiece", "divided_difference",
           "hermite_interval", "reconstruct", "temporal_residual",
           "residual_norms", "f2_directional", "f2_backward_fd",
           "OdeBoundReport", "ode_error_bound", "estimate_lipschitz"]

DERIVATIVE_MODES = ("none", "exact_callable", "directional", "backward_fd")

BACKWARD_FD_WEIGHTS = np.array([0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0])

# 4th-order 5-point first-derivative stencils at offsets 0..3 from the left
# end of the buffer, used to fill early-node second-derivative data.
_STARTUP_FD_WEIGHTS = {
    0: np.array([-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25]),
    1: np.array([-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0]),
    2: np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]),
    3: np.array([-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25]),
}


@dataclass(frozen=True)
class ReconSpec:
    """Reconstruction parameters H(p, d, r) plus the second-derivative mode.

    Supported configurations: H(p, 0, 0) and H(p, 0, -1) for any p >= 0
    (no f derivatives needed) and H(0, 1, 0) / H(0, 1, 1) with approximated
    second derivatives.
    """

    p: int = 0
    d: int = 0
    r: int = 0
    derivative_mode: str = "none"

    def __post_init__(self):
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ReconstructionError(f"unknown derivative mode {self.derivative_mode!r}")
        scalar_ok = self.d == 0 and self.r in (-1, 0) and self.p >= 0
        deriv_ok = self.d == 1 and self.p == 0 and self.r in (0, 1)
        if not (scalar_ok or deriv_ok):
            raise ReconstructionError(
                f"unsupported reconstruction H({self.p},{self.d},{self.r})")
        if self.d >= 1 and self.derivative_mode == "none":
            raise ReconstructionError(
                "d >= 1 needs derivative_mode exact_callable, directional or backward_fd")

    @property
    def degree(self):
        return (self.d + 2) * (self.p + 1) + self.r + 1

    @classmethod
    def for_order(cls, order, derivative_mode="none"):
        """Default pairing for a time integrator of the given order."""
        if order <= 3:
            return cls(0, 0, 0)
        if order == 4:
            return cls(1, 0, 0)
        if order == 5:
            mode = derivative_mode if derivative_mode != "none" else "backward_fd"
            return cls(0, 1, 1, derivative_mode=mode)
        raise ReconstructionError(f"no default reconstruction for order {order}")

    def __str__(self):
        return f"H({self.p},{self.d},{self.r})"


# ---------------------------------------------------------------------------
# confluent divided differences and Newton polynomials


def _dd_table(zetas, group_ids, data, groups):
    """Top row of the confluent divided-difference table.

    zetas/group_ids: flattened node positions and their group index;
    data: list of base-column arrays (the value condition of each slot);
    groups: per-group list of derivative condition arrays (0th, 1st, ...).
    Returns the Newton coefficients [dd over zetas[0..j]] for all j.
    """
    n = len(zetas)
    col = list(data)
    out = [col[0]]
    for j in range(1, n):
        new = []
        for i in range(n - j):
            if group_ids[i] == group_ids[i + j]:
                new.append(groups[group_ids[i]][j] / math.factorial(j))
            else:
                dz = zetas[i + j] - zetas[i]
                if abs(dz) < 1e-14:
                    raise ConditioningError(
                        f"distinct interpolation nodes separated by {dz}")
                new.append((col[i + 1] - col[i]) / dz)
        col = new
        out.append(col[0])
    return out


def _newton_to_monomial(zetas, coeffs):
    """Expand sum_j c_j prod_{l<j}(x - z_l) into ascending monomial coefficients."""
    n = len(coeffs)
    poly = [coeffs[-1]]
    for j in range(n - 2, -1, -1):
        z = zetas[j]
        new = [coeffs[j] - z * poly[0]]
        for k in range(len(poly) - 1):
            new.append(poly[k] - z * poly[k + 1])
        new.append(poly[-1])
        poly = new
    return poly


def _hermite_monomial(node_conditions):
    """Monomial coefficients of the unique polynomial matching every
    (position, [value, 1st derivative, ...]) condition group.

    Condition arrays may carry arbitrary (batch) shape; derivatives must
    already be scaled to the coordinate in which the positions are given.
    """
    zetas, gids, base = [], [], []
    groups = []
    for g, (z, conds) in enumerate(node_conditions):
        groups.append([np.asarray(c, dtype=float) for c in conds])
        for _ in conds:
            zetas.append(float(z))
            gids.append(g)
            base.append(groups[g][0])
    newton = _dd_table(zetas, gids, base, groups)
    return _newton_to_monomial(zetas, newton)


def divided_difference(nodes, values):
    """Divided difference over nodes listed with multiplicities.

    `values[i]` is the k-th derivative at nodes[i], where k counts previous
    occurrences of that node in the list (confluent convention: a node
    repeated i times consumes derivatives up to order i-1).
    """
    nodes = [float(z) for z in nodes]
    gids = []
    groups = []
    last = None
    for z, v in zip(nodes, values):
        if last is None or z != last:
            groups.append([np.asarray(v, dtype=float)])
            last = z
        else:
            groups[-1].append(np.asarray(v, dtype=float))
        gids.append(len(groups) - 1)
    base = [groups[g][0] for g in gids]
    table = _dd_table(nodes, gids, base, groups)
    out = table[-1]
    return float(out) if np.ndim(out) == 0 else out


class PolynomialPiece:
    """A single polynomial in the scaled variable theta = (t - t0) / scale."""

    def __init__(self, t0, scale, coeffs):
        self.t0 = float(t0)
        self.scale = float(scale)
        self.coeffs = np.asarray(coeffs, dtype=float)   # (K, *value_shape)

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    def __call__(self, t):
        return self.derivative(t, order=0)

    def derivative(self, t, order=1):
        c = self.coeffs
        for _ in range(order):
            K = c.shape[0]
            if K == 1:
                c = np.zeros_like(c)
                break
            ks = np.arange(1, K).reshape((K - 1,) + (1,) * (c.ndim - 1))
            c = c[1:] * ks / self.scale
        th = (np.asarray(t, dtype=float) - self.t0) / self.scale
        scalar = th.ndim == 0
        th = np.atleast_1d(th)
        th_b = th.reshape(th.shape + (1,) * (c.ndim - 1))
        out = np.broadcast_to(c[-1], th.shape + c.shape[1:]).copy()
        for k in range(c.shape[0] - 2, -1, -1):
            out = out * th_b + c[k]
        return out[0] if scalar else out


def hermite_interval(node_conditions, anchor=None, scale=None):
    """Interpolate (t_j, [value, derivative, ...]) condition groups.

    Returns the unique PolynomialPiece of degree (#conditions - 1) matching
    every condition; the k-th listed derivative condition fixes the k-th
    t-derivative at that node.
    """
    times = [float(t) for t, _ in node_conditions]
    t0 = float(anchor) if anchor is not None else times[0]
    sc = float(scale) if scale is not None else max(max(times) - min(times), 1.0)
    if sc <= 0:
        raise ConditioningError("nonpositive interval scale")
    scaled = []
    for t, conds in node_conditions:
        zeta = (t - t0) / sc
        scaled.append((zeta, [np.asarray(c, dtype=float) * sc**k
                              for k, c in enumerate(conds)]))
    mono = _hermite_monomial(scaled)
    return PolynomialPiece(t0, sc, np.stack(mono))


# ---------------------------------------------------------------------------
# the piecewise reconstruction


class TemporalPoly:
    """Piecewise polynomial on [t_0, t_N] with values in a vector space.

    Interval n holds monomial coefficients in theta = (t - t_n) / tau_n; the
    coefficient array has shape (N, K, *value_shape).
    """

    def __init__(self, times, coeffs):
        self.times = np.asarray(times, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.scales = np.diff(self.times)
        if self.coeffs.shape[0] != self.scales.size:
            raise ValueError("one coefficient block per interval required")

    @property
    def num_intervals(self):
        return self.coeffs.shape[0]

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    @property
    def value_shape(self):
        return self.coeffs.shape[2:]

    def piece(self, n) -> PolynomialPiece:
        return PolynomialPiece(self.times[n], self.scales[n], self.coeffs[n])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.times[0], self.times[-1]
        tol = 1e-12 * max(abs(lo), abs(hi), 1.0)
        if np.any(t < lo - tol) or np.any(t > hi + tol):
            raise ValueError(f"query time outside [{lo}, {hi}]")
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(idx, 0, self.num_intervals - 1)

    def evaluate(self, t, deriv=0):
        """Value (or time derivative of given order) at scalar or array t."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(t_arr)
        theta = (t_arr - self.times[idx]) / self.scales[idx]
        out = self.eval_at(idx, theta, deriv=deriv)
        return out[0] if np.ndim(t) == 0 else out

    def __call__(self, t):
        return self.evaluate(t)

    def derivative(self, t, order=1):
        return self.evaluate(t, deriv=order)

    def eval_at(self, intervals, theta, deriv=0):
        """Evaluate on given intervals at local coordinates theta.

        intervals: (B,) interval indices; theta: (B,) or (B, S) coordinates
        in [0, 1]; returns (B[, S], *value_shape).
        """
        intervals = np.asarray(intervals)
        theta = np.asarray(theta, dtype=float)
        nv = len(self.value_shape)
        c = self.coeffs[intervals]                        # (B, K, *V)
        sc = self.scales[intervals]
        for _ in range(deriv):
            K = c.shape[1]
            if K == 1:
                return np.zeros(theta.shape + self.value_shape)
            ks = np.arange(1, K).reshape((1, K - 1) + (1,) * nv)
            c = c[:, 1:] * ks / sc.reshape((-1, 1) + (1,) * nv)
        extra = theta.ndim - 1                            # sample axes beyond batch
        cb = c.reshape((c.shape[0],) + (1,) * extra + c.shape[1:])
        th = theta.reshape(theta.shape + (1,) * nv)
        axis = 1 + extra
        K = c.shape[1]
        out = np.broadcast_to(np.take(cb, K - 1, axis=axis),
                              theta.shape + self.value_shape).copy()
        for k in range(K - 2, -1, -1):
            out = out * th + np.take(cb, k, axis=axis)
        return out

    def check_continuity(self, order=0):
        """Max mismatch of traces (and derivatives up to `order`) across
        interior breakpoints, relative to the coefficient scale."""
        worst = 0.0
        scale = max(float(np.max(np.abs(self.coeffs))), 1e-300)
        for n in range(self.num_intervals - 1):
            for k in range(order + 1):
                left = self.piece(n).derivative(self.times[n + 1], k)
                right = self.piece(n + 1).derivative(self.times[n + 1], k)
                worst = max(worst, float(np.max(np.abs(left - right))) / scale)
        return worst


def _window_conditions(spec, tau, U, F, F2, node_slots, zeta, drop_last_deriv):
    """Condition groups for one batch of intervals.

    U/F/F2 are (B, W, *S) windowed arrays; node_slots indexes the window,
    zeta gives each node's position in theta units; derivative conditions are
    scaled by tau**k.
    """
    groups = []
    last = len(node_slots) - 1
    for j, (slot, z) in enumerate(zip(node_slots, zeta)):
        conds = [U[:, slot]]
        n_derivs = spec.d + 1
        if j == last and drop_last_deriv:
            n_derivs = spec.r + 1
        if n_derivs >= 1:
            conds.append(tau * F[:, slot])
        if n_derivs >= 2:
            conds.append(tau**2 * F2[:, slot])
        groups.append((float(z), conds))
    return groups


def reconstruct(traj: Trajectory, spec: ReconSpec, rhs: Optional[Callable] = None,
                f2_fn: Optional[Callable] = None) -> TemporalPoly:
    """Build the H(p, d, r) reconstruction of a trajectory.

    On interval [t_n, t_{n+1}] (n >= p) the polynomial matches value and
    first-derivative data at t_{n-p}..t_{n+1} (second derivatives too when
    d = 1, at the nodes the configuration prescribes). The first p intervals
    use the mirrored window {t_0, ..., t_{p+1}} with the same condition
    counts, so the start-up pieces keep the full interpolation order.

    rhs is required for derivative_mode="directional"; f2_fn(t, u) supplies
    exact second total derivatives for derivative_mode="exact_callable".
    """
    N = traj.num_steps
    if N < 1:
        raise ReconstructionError("trajectory has no steps to reconstruct")
    if N < spec.p + 1:
        raise ReconstructionError(
            f"H({spec.p},{spec.d},{spec.r}) needs at least {spec.p + 1} steps, got {N}")
    if not traj.is_equidistant():
        raise ReconstructionError("reconstruction requires an equidistant time grid")
    tau = float(traj.times[1] - traj.times[0])
    if tau < 1e-14:
        raise ConditioningError(f"time step {tau} below conditioning floor")

    U = np.stack(traj.states)                      # (N+1, *S)
    F = np.stack(traj.f_values)
    F2 = None
    if spec.d >= 1:
        F2 = _second_derivative_data(traj, spec, rhs, f2_fn, U, F, tau)

    p = spec.p
    W = p + 2                                       # window width in nodes
    # interior intervals n = p..N-1, all sharing the zeta pattern -p..1
    widx = np.arange(p, N)[:, None] + np.arange(-p, 2)[None, :]
    Uw = U[widx]                                    # (N-p, W, *S)
    Fw = F[widx]
    F2w = F2[widx] if F2 is not None else None
    zeta = np.arange(-p, 2, dtype=float)
    groups = _window_conditions(spec, tau, Uw, Fw, F2w,
                                node_slots=range(W), zeta=zeta,
                                drop_last_deriv=True)
    mono = _hermite_monomial(groups)                # list of K arrays (N-p, *S)
    K = len(mono)
    coeffs = np.empty((N, K) + U.shape[1:])
    coeffs[p:] = np.stack(mono, axis=1)

    # start-up intervals: window {t_0..t_{p+1}}, full conditions at every node
    for n in range(p):
        slots = np.arange(0, p + 2)
        zeta_n = slots.astype(float) - n
        g = _window_conditions(spec, tau, U[None, slots], F[None, slots],
                               F2[None, slots] if F2 is not None else None,
                               node_slots=range(W), zeta=zeta_n,
                               drop_last_deriv=(spec.r < spec.d))
        mono_n = _hermite_monomial(g)
        coeffs[n] = np.stack([m[0] for m in mono_n])

    return TemporalPoly(traj.times, coeffs)


def _second_derivative_data(traj, spec, rhs, f2_fn, U, F, tau):
    mode = spec.derivative_mode
    if mode == "exact_callable":
        if f2_fn is None:
            raise ReconstructionError("exact_callable mode needs f2_fn")
        return np.stack([np.asarray(f2_fn(t, u), dtype=float)
                         for t, u in zip(traj.times, traj.states)])
    if mode == "directional":
        if rhs is None:
            raise ReconstructionError("directional mode needs the rhs callable")
        return np.stack([f2_directional(rhs, t, u, tau, f_at_u=fv)
                         for t, u, fv in zip(traj.times, traj.states, traj.f_values)])
    if mode == "backward_fd":
        if traj.num_steps < 6:
            raise ReconstructionError(
                "backward_fd start-up buffers 6 steps; trajectory too short")
        return _fd_time_derivative(F, tau)
    raise ReconstructionError(f"derivative data unavailable for mode {mode!r}")


def f2_directional(f, t, u, tau, f_at_u=None):
    """Approximate d^2u/dt^2 = f_t + (Df) f by central differences with step
    tau^2 (four extra f evaluations; exact for f linear in u and t)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    eps = tau * tau
    fu = np.asarray(f(t, u), dtype=float) if f_at_u is None else np.asarray(f_at_u)
    part_t = (np.asarray(f(t + eps, u)) - np.asarray(f(t - eps, u))) / (2.0 * eps)
    part_u = (np.asarray(f(t, u + eps * fu)) - np.asarray(f(t, u - eps * fu))) / (2.0 * eps)
    return part_t + part_u


def f2_backward_fd(f_history: Sequence[np.ndarray], tau):
    """Backward five-point stencil for the time derivative of f at the newest
    node; f_history is ordered oldest to newest and must hold 5 equidistant
    values. Exact for polynomial histories of degree <= 4."""
    if len(f_history) != 5:
        raise ReconstructionError(
            f"backward stencil needs exactly 5 history values, got {len(f_history)}")
    acc = BACKWARD_FD_WEIGHTS[0] * np.asarray(f_history[0], dtype=float)
    for w, fv in zip(BACKWARD_FD_WEIGHTS[1:], f_history[1:]):
        acc = acc + w * np.asarray(fv, dtype=float)
    return acc / tau


def _fd_time_derivative(F, tau):
    """d/dt of the node-sampled f values at every node: backward stencils
    where history exists, one-sided/central fills at nodes 0..3."""
    n_nodes = F.shape[0]
    out = np.empty_like(F)
    for node in range(min(4, n_nodes)):
        w = _STARTUP_FD_WEIGHTS[node].reshape((-1,) + (1,) * (F.ndim - 1))
        out[node] = np.sum(w * F[:5], axis=0) / tau
    if n_nodes > 4:
        windows = np.stack([F[k:n_nodes - 4 + k] for k in range(5)])
        w = BACKWARD_FD_WEIGHTS.reshape((-1,) + (1,) * (windows.ndim - 1))
        out[4:] = np.sum(w * windows, axis=0) / tau
    return out


# ---------------------------------------------------------------------------
# residual and a posteriori bounds


def temporal_residual(recon: TemporalPoly, f: Callable, sign="ode"):
    """The computable defect of the reconstruction.

    sign="ode": R(t) = d/dt u_hat - f(t, u_hat) for trajectories of u' = f.
    sign="dg":  R(t) = d/dt u_hat + f(u_hat) where f is the spatial DG
    operator of the semi-discrete scheme du/dt = -f(u).
    """
    if sign not in ("ode", "dg"):
        raise ValueError("sign must be 'ode' or 'dg'")
    sgn = -1.0 if sign == "ode" else 1.0

    def residual(t):
        uh = recon.evaluate(t)
        du = recon.evaluate(t, deriv=1)
        if np.ndim(t) == 0:
            return du + sgn * np.asarray(f(t, uh) if sign == "ode" else f(uh))
        out = np.empty_like(du)
        for i, ti in enumerate(np.asarray(t, dtype=float)):
            fi = f(ti, uh[i]) if sign == "ode" else f(uh[i])
            out[i] = du[i] + sgn * np.asarray(fi)
        return out

    return residual


def residual_norms(recon: TemporalPoly, f: Callable, sign="ode", n_points=None,
                   t_end=None):
    """(sup, L1, L2) norms of the temporal residual over [t_0, t_end].

    Per-interval Gauss quadrature with degree+2 points; the sup norm also
    samples both interval endpoints. Vector values are measured in the
    Euclidean norm of the flattened value array (the L2(T) norm when the
    values are orthonormal DG coefficients).
    """
    R = temporal_residual(recon, f, sign)
    n = n_points if n_points is not None else min(recon.degree + 2, 20)
    rule = gauss_rule(n)
    theta = 0.5 * (rule.points + 1.0)
    sample_theta = np.concatenate([[0.0], theta, [1.0]])
    sup = 0.0
    l1 = 0.0
    l2sq = 0.0
    n_last = recon.num_intervals
    if t_end is not None:
        n_last = int(np.searchsorted(recon.times, t_end - 1e-12 * max(t_end, 1.0)))
    for i in range(n_last):
        ts = recon.times[i] + sample_theta * recon.scales[i]
        vals = R(ts)
        mags = np.linalg.norm(np.reshape(vals, (vals.shape[0], -1)), axis=1)
        sup = max(sup, float(mags.max()))
        w = rule.weights * 0.5 * recon.scales[i]
        l1 += float(np.dot(w, mags[1:-1]))
        l2sq += float(np.dot(w, mags[1:-1] ** 2))
    return sup, l1, math.sqrt(l2sq)


@dataclass
class OdeBoundReport:
    """A posteriori bounds for an ODE reconstruction.

    bound_linf bounds sup_t |u - u_hat|; bound_l2 bounds the space-time
    L2 norm of the error. Both are guaranteed upper bounds whenever L is a
    Lipschitz constant of f on a neighborhood of u and u_hat.
    """

    lipschitz: float
    residual_l1: float
    residual_l2: float
    initial_error: float
    t_end: float
    bound_linf: float
    bound_l2: float


def ode_error_bound(residual_l1, residual_l2, lipschitz, t_end,
                    initial_error=0.0) -> OdeBoundReport:
    """Evaluate the exponential-stability error bounds from the residual."""
    if lipschitz <= 0 or t_end <= 0:
        raise ValueError("need positive Lipschitz constant and final time")
    linf = (initial_error + residual_l1) * math.exp(lipschitz * t_end)
    l2 = math.sqrt((initial_error**2 + residual_l2**2)
                   * math.exp((lipschitz + 1.0) * t_end))
    return OdeBoundReport(lipschitz=lipschitz, residual_l1=residual_l1,
                          residual_l2=residual_l2, initial_error=initial_error,
                          t_end=t_end, bound_linf=linf, bound_l2=l2)


def estimate_lipschitz(f, traj: Trajectory, eps=1e-6, n_dirs=4, seed=0):
    """Sampled Lipschitz estimate: max finite-difference directional
    derivative norm of f over the trajectory states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t, u in zip(traj.times, traj.states):
        u = np.asarray(u, dtype=float)
        scale = max(float(np.max(np.abs(u))), 1.0) * eps
        for _ in range(n_dirs):
            direction = rng.standard_normal(u.shape)
            direction /= np.linalg.norm(direction)
            df = np.asarray(f(t, u + scale * direction)) - np.asarray(f(t, u - scale * direction))
            worst = max(worst, float(np.linalg.norm(df)) / (2.0 * scale))
    return worst
