"""Explicit single- and multi-step time integrators over plain ndarrays.

The state is any numpy array; the right-hand side is a callable f(t, u)
returning an array of the same shape. evolve() caches f at every grid node
because the temporal reconstruction needs exactly those values.
"""

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import HyperestError

__all__ = ["StepperSpec", "Trajectory", "rk_step", "evolve", "STEPPER_ORDERS"]

STEPPER_ORDERS = {
    "rk1": 1,
    "rk2_heun": 2,
    "rk3_ssp": 3,
    "rk4_classic": 4,
    "ab2": 2,
    "ab3": 3,
}

_AB_COEFFS = {
    "ab2": np.array([-1.0 / 2.0, 3.0 / 2.0]),
    "ab3": np.array([5.0 / 12.0, -16.0 / 12.0, 23.0 / 12.0]),
}


@dataclass(frozen=True)
class StepperSpec:
    family: str

    def __post_init__(self):
        if self.family not in STEPPER_ORDERS:
            raise ValueError(f"unknown stepper family {self.family!r}")

    @property
    def order(self):
        return STEPPER_ORDERS[self.family]

    @property
    def is_multistep(self):
        return self.family in _AB_COEFFS


def rk_step(f, t, u, tau, family, f_at_u=None):
    """One explicit Runge-Kutta step of the named tableau.

    `f_at_u` can supply the already computed f(t, u) (first stage reuse).
    """
    if tau <= 0:
        raise ValueError("step size must be positive")
    k1 = f(t, u) if f_at_u is None else f_at_u
    if family == "rk1":
        return u + tau * k1
    if family == "rk2_heun":
        k2 = f(t + tau, u + tau * k1)
        return u + 0.5 * tau * (k1 + k2)
    if family == "rk3_ssp":
        u1 = u + tau * k1
        u2 = 0.75 * u + 0.25 * (u1 + tau * f(t + tau, u1))
        return u / 3.0 + 2.0 / 3.0 * (u2 + tau * f(t + 0.5 * tau, u2))
    if family == "rk4_classic":
        k2 = f(t + 0.5 * tau, u + 0.5 * tau * k1)
        k3 = f(t + 0.5 * tau, u + 0.5 * tau * k2)
        k4 = f(t + tau, u + tau * k3)
        return u + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ValueError(f"unknown Runge-Kutta family {family!r}")


_RK_STARTUP = {1: "rk1", 2: "rk2_heun", 3: "rk3_ssp", 4: "rk4_classic"}


@dataclass
class Trajectory:
    """Discrete solution (t_n, u^n) together with the cached f(t_n, u^n)."""

    times: np.ndarray
    states: list
    f_values: list
    order: int

    def __len__(self):
        return len(self.states)

    @property
    def num_steps(self):
        return len(self.states) - 1

    @property
    def tau(self):
        """The (maximal) time step."""
        return float(np.max(np.diff(self.times))) if len(self.states) > 1 else 0.0

    def is_equidistant(self, rtol=1e-10):
        dt = np.diff(self.times)
        return dt.size == 0 or float(np.ptp(dt)) <= rtol * float(dt[0])


def evolve(f: Callable, u0, t_grid: Sequence[float], spec: StepperSpec) -> Trajectory:
    """March u' = f(t, u) over the grid, caching f at every node.

    Multi-step families start with Runge-Kutta steps of the same order.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("need a nonempty 1D time grid")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    u = np.asarray(u0, dtype=float).copy()
    states = [u]
    f_values = [np.asarray(f(times[0], u), dtype=float)]

    if spec.is_multistep:
        coeffs = _AB_COEFFS[spec.family]
        n_hist = coeffs.size
        startup = _RK_STARTUP[spec.order]
        for n in range(times.size - 1):
            tau = times[n + 1] - times[n]
            if n + 1 < n_hist:
                u = rk_step(f, times[n], states[n], tau, startup, f_at_u=f_values[n])
            else:
                hist = f_values[n - n_hist + 1:n + 1]
                incr = sum(c * fv for c, fv in zip(coeffs, hist))
                u = states[n] + tau * incr
            states.append(u)
            f_values.append(np.asarray(f(times[n + 1], u), dtype=float))
    else:
        for n in range(times.size - 1):
            tau = times[n + 1] - times[n]
            try:
                u = rk_step(f, times[n], states[n], tau, spec.family, f_at_u=f_values[n])
            except HyperestError as exc:
                raise type(exc)(f"step {n}: {exc}") from exc
            states.append(u)
            f_values.append(np.asarray(f(times[n + 1], u), dtype=float))

    return Trajectory(times=times, states=states, f_values=f_values, order=spec.order)
