import math

import numpy as np
import pytest

from hyperest.steppers import STEPPER_ORDERS, StepperSpec, Trajectory, \
    evolve, rk_step

ALL_FAMILIES = list(STEPPER_ORDERS)
RK_FAMILIES = [f for f in ALL_FAMILIES if f.startswith("rk")]


class TestRkStep:
    @pytest.mark.parametrize("family", RK_FAMILIES)
    def test_zero_rhs_fixed_point(self, family):
        u = np.array([1.0, -2.0])
        out = rk_step(lambda t, v: np.zeros_like(v), 0.0, u, 0.1, family)
        assert np.array_equal(out, u)

    def test_rk4_linear_equals_taylor4(self):
        # u' = u, u(0) = 1, one step tau = 0.1
        out = rk_step(lambda t, v: v, 0.0, np.array([1.0]), 0.1, "rk4_classic")
        expected = 1 + 0.1 + 0.1**2 / 2 + 0.1**3 / 6 + 0.1**4 / 24
        assert out[0] == pytest.approx(expected, abs=1e-15)
        assert out[0] == pytest.approx(1.1051708333333332, abs=1e-14)

    @pytest.mark.parametrize("family", RK_FAMILIES)
    def test_constant_rhs_exact(self, family):
        out = rk_step(lambda t, v: np.ones_like(v), 0.0, np.array([2.0]),
                      0.25, family)
        assert out[0] == pytest.approx(2.25, abs=1e-14)

    def test_nonpositive_step_rejected(self):
        with pytest.raises(ValueError):
            rk_step(lambda t, v: v, 0.0, np.array([1.0]), 0.0, "rk1")


class TestEvolve:
    def test_single_node_grid(self):
        f = lambda t, u: -u
        traj = evolve(f, np.array([3.0]), [0.0], StepperSpec("rk4_classic"))
        assert len(traj) == 1
        assert traj.f_values[0] == pytest.approx(-3.0)

    def test_decay_endpoint_accuracy(self):
        # RK4 endpoint for u' = -u is R(-tau)^N with R the degree-4 Taylor
        # polynomial; against exp(-1) that gives 3.334e-7 for tau = 0.1.
        f = lambda t, u: -u
        grid = np.linspace(0.0, 1.0, 11)
        traj = evolve(f, np.array([1.0]), grid, StepperSpec("rk4_classic"))
        stability = sum((-0.1) ** k / math.factorial(k) for k in range(5))
        oracle = stability**10
        assert traj.states[-1][0] == pytest.approx(oracle, abs=1e-15)
        err = abs(traj.states[-1][0] - np.exp(-1.0))
        assert err == pytest.approx(3.334e-7, rel=1e-3)

    def test_single_step_matches_rk_step(self):
        f = lambda t, u: np.sin(u) - t
        u0 = np.array([0.7])
        traj = evolve(f, u0, [0.0, 0.05], StepperSpec("rk3_ssp"))
        direct = rk_step(f, 0.0, u0, 0.05, "rk3_ssp")
        assert np.allclose(traj.states[-1], direct, atol=0, rtol=0)

    def test_cached_f_values_fresh(self):
        f = lambda t, u: -(u**3) + np.cos(t)
        grid = np.linspace(0.0, 1.0, 9)
        traj = evolve(f, np.array([0.5]), grid, StepperSpec("ab3"))
        for t, u, fv in zip(traj.times, traj.states, traj.f_values):
            assert np.allclose(fv, f(t, u), atol=0, rtol=0)

    @pytest.mark.parametrize("family", ALL_FAMILIES)
    def test_declared_order_observed(self, family):
        spec = StepperSpec(family)
        f = lambda t, u: -u
        errs = []
        for lvl in range(6):
            n = 8 * 2**lvl
            traj = evolve(f, np.array([1.0]), np.linspace(0, 1, n + 1), spec)
            errs.append(abs(traj.states[-1][0] - np.exp(-1.0)))
        eocs = [np.log2(errs[i - 1] / errs[i]) for i in range(1, len(errs))]
        assert abs(eocs[-1] - spec.order) < 0.2, (family, eocs)

    def test_deterministic(self):
        f = lambda t, u: np.array([u[1], -u[0]]) + 0.1 * u**2
        grid = np.linspace(0.0, 2.0, 33)
        a = evolve(f, np.array([1.0, 0.0]), grid, StepperSpec("rk4_classic"))
        b = evolve(f, np.array([1.0, 0.0]), grid, StepperSpec("rk4_classic"))
        assert all(np.array_equal(x, y) for x, y in zip(a.states, b.states))

    def test_nonmonotone_grid_rejected(self):
        with pytest.raises(ValueError):
            evolve(lambda t, u: u, np.array([1.0]), [0.0, 0.2, 0.1],
                   StepperSpec("rk1"))

    def test_equidistant_detection(self):
        traj = Trajectory(times=np.array([0.0, 0.1, 0.2]),
                          states=[np.zeros(1)] * 3,
                          f_values=[np.zeros(1)] * 3, order=1)
        assert traj.is_equidistant()
        traj2 = Trajectory(times=np.array([0.0, 0.1, 0.35]),
                           states=[np.zeros(1)] * 3,
                           f_values=[np.zeros(1)] * 3, order=1)
        assert not traj2.is_equidistant()

    def test_multistep_startup_uses_matching_order(self):
        # AB2 startup is one Heun step: first step error is O(tau^3)
        f = lambda t, u: -u
        traj = evolve(f, np.array([1.0]), [0.0, 0.01, 0.02],
                      StepperSpec("ab2"))
        heun = rk_step(f, 0.0, np.array([1.0]), 0.01, "rk2_heun")
        assert np.allclose(traj.states[1], heun, atol=0, rtol=0)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            StepperSpec("rk9")
