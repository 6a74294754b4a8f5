"""Extremal integration, lattice residuals, action values."""

import math
import random

import numpy as np
import pytest

from jetlag.config import assemble
from jetlag.errors import DimensionError, StencilError
from jetlag.extremal import (
    ExtremalProblem,
    GridMap,
    Trajectory,
    action_value,
    harmonic_residual,
    integrate_extremal,
)
from jetlag.fields import (
    ElectrodynamicsLagrangian,
    ExpressionField,
    LagrangianModel,
    constant_field,
    temporal_entry,
)
from jetlag.jet_core import Dims
from jetlag.metric_engine import TemporalMetric

from conftest import sphere_config


def flat_metric_model(n, h=None):
    d = Dims(1, n)
    h = h or TemporalMetric.flat(1)
    g = [[constant_field(1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    return LagrangianModel.from_family(ElectrodynamicsLagrangian(d, h, g), "harmonic"), h


def sphere_geodesic_oracle(x0, y0, t_end, dt):
    """Independent RK4 for x'' = -gamma(x)(x', x') with the sphere chart
    Christoffels hardcoded."""

    def acc(x, y):
        th = x[0]
        s, c = math.sin(th), math.cos(th)
        return np.array([
            s * c * y[1] * y[1],
            -2.0 * (c / s) * y[0] * y[1],
        ])

    steps = round(t_end / dt)
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    for _ in range(steps):
        k1x, k1y = y, acc(x, y)
        k2x, k2y = y + 0.5 * dt * k1y, acc(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
        k3x, k3y = y + 0.5 * dt * k2y, acc(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
        k4x, k4y = y + dt * k3y, acc(x + dt * k3x, y + dt * k3y)
        x = x + (dt / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
        y = y + (dt / 6) * (k1y + 2 * k2y + 2 * k3y + k4y)
    return x, y


class TestIntegration:
    def test_straight_lines_flat(self):
        L, h = flat_metric_model(2)
        traj = integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=(0.0, 0.0), y0=(1.0, 2.0), t_end=1.0, dt=1e-2))
        assert np.allclose(traj.x[-1], [1.0, 2.0], atol=1e-12)
        # reference: x(t) = t * y0 at every recorded step
        for k, t in enumerate(traj.t):
            assert np.allclose(traj.x[k], [t, 2 * t], atol=1e-12)

    def test_exponential_h_closed_form(self):
        # h_11 = e^{2t} (so H^1_11 = 1), flat g: x'' = x'
        d = Dims(1, 2)
        h = TemporalMetric(p=1, entries=[[temporal_entry(ExpressionField("exp(2*t1)", d))]],
                           signature=(1, 0))
        L, _ = flat_metric_model(2, h)
        x0, y0 = (0.5, -0.2), (1.0, 0.5)
        traj = integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=x0, y0=y0, t_end=1.0, dt=1e-3))
        exact = np.array(x0) + np.array(y0) * (math.e - 1.0)
        assert np.max(np.abs(traj.x[-1] - exact)) <= 1e-9

    def test_rk4_convergence_order(self):
        d = Dims(1, 1)
        h = TemporalMetric(p=1, entries=[[temporal_entry(ExpressionField("exp(2*t1)", d))]],
                           signature=(1, 0))
        L, _ = flat_metric_model(1, h)
        exact = 0.5 + 1.0 * (math.e - 1.0)
        errors = []
        for dt in (0.05, 0.025, 0.0125):
            traj = integrate_extremal(ExtremalProblem(
                L=L, h=h, t0=0.0, x0=(0.5,), y0=(1.0,), t_end=1.0, dt=dt))
            errors.append(abs(traj.x[-1][0] - exact))
        orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert all(o >= 3.8 for o in orders), orders

    def test_sphere_vs_independent_oracle(self):
        inst = assemble(sphere_config(dt=1e-3))
        sol = inst.solver
        traj = integrate_extremal(ExtremalProblem(
            L=inst.L, h=inst.h, t0=sol["t0"], x0=sol["x0"], y0=sol["y0"],
            t_end=sol["t_end"], dt=sol["dt"]))
        # non-trivial start: tilt off the equator
        x0, y0 = (1.1, 0.3), (0.2, 0.8)
        traj2 = integrate_extremal(ExtremalProblem(
            L=inst.L, h=inst.h, t0=0.0, x0=x0, y0=y0, t_end=1.0, dt=1e-3))
        ox, _ = sphere_geodesic_oracle(x0, y0, 1.0, 1e-3)
        assert np.max(np.abs(traj2.x[-1] - ox)) <= 1e-6
        # equator start stays a great circle
        assert np.allclose(traj.x[-1], [math.pi / 2, 1.0], atol=1e-9)

    def test_el_residual_along_trajectory(self):
        inst = assemble(sphere_config(dt=1e-3))
        traj = integrate_extremal(ExtremalProblem(
            L=inst.L, h=inst.h, t0=0.0, x0=(1.1, 0.3), y0=(0.2, 0.8),
            t_end=1.0, dt=1e-3))
        assert traj.max_el_residual <= 1e-6

    def test_degeneracy_aborts_with_state(self):
        from jetlag.errors import DegeneracyError
        from jetlag.fields import CallableField

        d = Dims(1, 1)
        h = TemporalMetric.flat(1)

        def guarded(pt):
            from jetlag.scalars import scalar_value

            if scalar_value(pt.x[0]) >= 0.5:
                raise DegeneracyError("metric patch ends at x1 = 0.5", det=0.0)
            return 1.0

        g = [[CallableField(guarded)]]
        L = LagrangianModel.from_family(ElectrodynamicsLagrangian(d, h, g), "harmonic")
        traj = integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=(0.0,), y0=(1.0,), t_end=2.0, dt=1e-2))
        assert traj.aborted
        assert 2 <= len(traj.t) < 60  # stopped near x = 0.5, kept valid states
        assert "0.5" in traj.abort_reason

    def test_bad_dt_rejected(self):
        L, h = flat_metric_model(1)
        with pytest.raises(DimensionError):
            ExtremalProblem(L=L, h=h, t0=0.0, x0=(0.0,), y0=(1.0,), t_end=1.0, dt=0.0)


class TestHarmonicResidual:
    def setup_method(self):
        self.d = Dims(2, 2)
        self.h = TemporalMetric.flat(2)
        g = [[constant_field(1.0), constant_field(0.0)],
             [constant_field(0.0), constant_field(1.0)]]
        self.L_flat = LagrangianModel.from_family(
            ElectrodynamicsLagrangian(self.d, self.h, g), "harmonic")
        gs = [[constant_field(1.0), constant_field(0.0)],
              [constant_field(0.0), ExpressionField("sin(x1)^2", self.d)]]
        self.L_sphere = LagrangianModel.from_family(
            ElectrodynamicsLagrangian(self.d, self.h, gs), "harmonic")

    def test_affine_map_truncation_exact(self):
        grid = GridMap.from_function(
            self.d, [(0, 1), (0, 1)], (9, 9),
            lambda ts: [0.3 * ts[0] + 0.1 * ts[1] + 0.2, -0.5 * ts[0] + 0.7 * ts[1]])
        rf = harmonic_residual(self.L_flat, self.h, grid)
        assert rf.max_norm <= 1e-12

    def test_laplace_sheet_second_order(self):
        norms = []
        for m in (9, 17, 33):
            grid = GridMap.from_function(
                self.d, [(0, 1), (0, 1)], (m, m),
                lambda ts: [math.pi / 2, math.sin(ts[0]) * math.sinh(ts[1])])
            rf = harmonic_residual(self.L_sphere, self.h, grid)
            norms.append(rf.rms)
        ratios = [norms[i] / norms[i + 1] for i in range(2)]
        assert all(r >= 3.5 for r in ratios), ratios

    def test_non_harmonic_map_separates(self):
        grid_good = GridMap.from_function(
            self.d, [(0, 1), (0, 1)], (17, 17),
            lambda ts: [math.pi / 2, math.sin(ts[0]) * math.sinh(ts[1])])
        good = harmonic_residual(self.L_sphere, self.h, grid_good).max_norm
        grid_bad = GridMap.from_function(
            self.d, [(0, 1), (0, 1)], (17, 17),
            lambda ts: [math.pi / 2 + 0.3 * ts[0] ** 2, math.sin(3 * ts[0]) + ts[1] ** 3])
        bad = harmonic_residual(self.L_sphere, self.h, grid_bad).max_norm
        assert bad >= 10 * good

    def test_small_grid_rejected(self):
        with pytest.raises(StencilError):
            GridMap.from_function(self.d, [(0, 1), (0, 1)], (4, 9), lambda ts: [0.0, 0.0])

    def test_p1_rejected(self):
        inst = assemble(sphere_config())
        grid = GridMap.from_function(Dims(2, 2), [(0, 1), (0, 1)], (5, 5),
                                     lambda ts: [1.0, 1.0])
        with pytest.raises(DimensionError):
            harmonic_residual(inst.L, inst.h, grid)


class TestAction:
    def test_unit_speed_line(self):
        L, h = flat_metric_model(1)
        traj = integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=(0.0,), y0=(1.0,), t_end=1.0, dt=1e-2))
        assert action_value(L, h, traj) == pytest.approx(1.0, abs=1e-12)

    def test_kinetic_scaling(self):
        L, h = flat_metric_model(1)
        a1 = action_value(L, h, integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=(0.0,), y0=(1.0,), t_end=1.0, dt=1e-2)))
        a2 = action_value(L, h, integrate_extremal(ExtremalProblem(
            L=L, h=h, t0=0.0, x0=(0.0,), y0=(2.0,), t_end=1.0, dt=1e-2)))
        assert a2 == pytest.approx(4.0 * a1, rel=1e-12)

    def test_first_variation_vanishes(self):
        # perturbing an extremal by eps*phi changes the action at O(eps^2)
        inst = assemble(sphere_config())
        base = integrate_extremal(ExtremalProblem(
            L=inst.L, h=inst.h, t0=0.0, x0=(1.1, 0.3), y0=(0.2, 0.8),
            t_end=1.0, dt=1e-3))
        s0 = action_value(inst.L, inst.h, base)

        def perturbed_action(eps):
            phi = np.sin(np.pi * base.t) ** 2   # compactly supported in (0,1)
            dphi = 2 * np.pi * np.sin(np.pi * base.t) * np.cos(np.pi * base.t)
            x = base.x + eps * np.stack([phi, -0.5 * phi], axis=1)
            y = base.y + eps * np.stack([dphi, -0.5 * dphi], axis=1)
            traj = Trajectory(t=base.t, x=x, y=y)
            return action_value(inst.L, inst.h, traj)

        d3 = perturbed_action(1e-3) - s0
        d4 = perturbed_action(1e-4) - s0
        # quadratic: shrinking eps by 10 shrinks the change by ~100
        assert abs(d4) <= abs(d3) / 30.0
        assert abs(d3) <= 5e-4  # no O(eps) term of size ~eps*scale

    def test_action_minimality_against_perturbations(self):
        inst = assemble(sphere_config())
        base = integrate_extremal(ExtremalProblem(
            L=inst.L, h=inst.h, t0=0.0, x0=(1.1, 0.3), y0=(0.2, 0.8),
            t_end=1.0, dt=2e-3))
        s0 = action_value(inst.L, inst.h, base)
        rng = random.Random(17)
        for _ in range(50):
            eps = rng.uniform(0.01, 0.1)
            k = rng.randrange(1, 4)
            phi = np.sin(k * np.pi * base.t)
            dphi = k * np.pi * np.cos(k * np.pi * base.t)
            w = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1)])
            x = base.x + eps * np.outer(phi, w)
            y = base.y + eps * np.outer(dphi, w)
            traj = Trajectory(t=base.t, x=x, y=y)
            assert action_value(inst.L, inst.h, traj) >= s0 - 1e-10

    def test_grid_action_flat(self):
        d = Dims(2, 1)
        h = TemporalMetric.flat(2)
        g = [[constant_field(1.0)]]
        L = LagrangianModel.from_family(ElectrodynamicsLagrangian(d, h, g), "harmonic")
        grid = GridMap.from_function(d, [(0, 1), (0, 1)], (21, 21),
                                     lambda ts: [ts[0] + 2.0 * ts[1]])
        # L = h^{ab} x_a x_b = 1 + 4 = 5 everywhere
        assert action_value(L, h, grid) == pytest.approx(5.0, abs=1e-9)
