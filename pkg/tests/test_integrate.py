import io
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from curvlam import bvp, geometry, systems
from curvlam.errors import SingularityError
from curvlam.geometry import Space
from curvlam.integrate import (Arc, Tolerances, endpoint_jacobian, propagate,
                               write_csv)
from curvlam.systems import Problem, State, SystemSpec, eom_rhs, flat_state

from _helpers import ATTRACTIVE_SPECS

KEPLER_FLAT = SystemSpec(Problem.KEPLER, Space.FLAT)
HOOKE_FLAT = SystemSpec(Problem.HOOKE, Space.FLAT)


class TestCircularOrbits:
    def test_hooke_quarter_turn(self):
        arc = propagate(HOOKE_FLAT, State([1, 0], [0, 1]), math.pi / 2)
        assert np.allclose(arc.end.q, [0, 1], atol=1e-10)
        assert np.allclose(arc.end.v, [-1, 0], atol=1e-10)
        assert arc.action == pytest.approx(0.0, abs=1e-10)
        assert arc.maupertuis == pytest.approx(math.pi / 2, abs=1e-10)

    def test_kepler_half_turn(self):
        arc = propagate(KEPLER_FLAT, State([1, 0], [0, 1]), math.pi)
        assert np.allclose(arc.end.q, [-1, 0], atol=1e-9)
        assert np.allclose(arc.end.v, [0, -1], atol=1e-9)
        assert arc.action == pytest.approx(1.5 * math.pi, abs=1e-9)
        assert arc.maupertuis == pytest.approx(math.pi, abs=1e-9)

    def test_sphere_kepler_circular_closure(self):
        # Oracle: on the latitude circle through chart (tan(theta), 0) the
        # acceleration of uniform circular motion is -omega^2 (u - u3 * O);
        # solve that balance against eom_rhs for the speed, then propagate
        # one full period and require closure.
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        theta = math.pi / 4
        u = np.array([math.sin(theta), 0.0, math.cos(theta)])
        e_y = np.array([0.0, 1.0, 0.0])

        def balance(speed):
            _, dv = eom_rhs(spec, State(u, speed * e_y))
            omega2 = (speed / math.sin(theta)) ** 2
            centripetal = -omega2 * (u - u[2] * np.array([0, 0, 1.0]))
            return float((dv - centripetal)[0])

        speed = brentq(balance, 0.5, 3.0, xtol=1e-14)
        _, dv = eom_rhs(spec, State(u, speed * e_y))
        omega = speed / math.sin(theta)
        assert np.allclose(
            dv, -omega ** 2 * (u - u[2] * np.array([0, 0, 1.0])), atol=1e-12)

        arc = propagate(spec, State(u, speed * e_y), 2 * math.pi / omega)
        assert np.linalg.norm(arc.end.q - u) <= 1e-8
        assert np.linalg.norm(arc.end.v - speed * e_y) <= 1e-8


class TestArcInvariants:
    @pytest.mark.parametrize("spec", ATTRACTIVE_SPECS, ids=lambda s: s.label)
    def test_action_energy_identity(self, spec):
        start = flat_state(spec, [0.5, 0.1], [0.2, 0.6])
        arc = propagate(spec, start, 2.5)
        h = arc.energy
        assert arc.maupertuis - arc.action - h * arc.dt == pytest.approx(
            0.0, abs=1e-9)
        assert systems.total_energy(spec, arc.end) == pytest.approx(h, abs=1e-9)

    @pytest.mark.parametrize("spec", ATTRACTIVE_SPECS, ids=lambda s: s.label)
    def test_reversibility(self, spec):
        start = flat_state(spec, [0.5, 0.1], [0.2, 0.6])
        arc = propagate(spec, start, 3.0)
        back = propagate(spec, State(arc.end.q, -arc.end.v), 3.0)
        assert np.linalg.norm(back.end.q - start.q) <= 1e-8

    def test_constraints_on_samples(self):
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        start = flat_state(spec, [0.6, 0], [0.1, 0.7])
        arc = propagate(spec, start, 5.0,
                        sample_times=np.linspace(0, 5.0, 40))
        for s in arc.samples:
            assert geometry.quadric_residual(spec.space, s.q) <= 1e-10
            assert abs(geometry.ambient_dot(spec.space, s.q, s.v)) <= 1e-10

    def test_tolerance_halving(self):
        start = State([1, 0], [0.2, 0.9])
        coarse = Tolerances(rel=1e-8, abs=1e-10)
        fine = Tolerances(rel=5e-9, abs=5e-11)
        a1 = propagate(KEPLER_FLAT, start, 5.0, tol=coarse)
        a2 = propagate(KEPLER_FLAT, start, 5.0, tol=fine)
        assert np.linalg.norm(a1.end.q - a2.end.q) <= 10 * 1e-8


class TestSampling:
    def test_requested_sample_grid(self):
        times = np.linspace(0, 2.0, 17)
        arc = propagate(KEPLER_FLAT, State([1, 0], [0, 1]), 2.0,
                        sample_times=times)
        assert len(arc.samples) == 17
        assert np.allclose(arc.times, times)
        assert np.allclose(arc.samples[0].q, [1, 0])
        assert np.allclose(arc.samples[-1].q, arc.end.q, atol=1e-12)

    def test_interpolated_samples_track_trajectory(self):
        # Hermite samples against exact circular motion.
        times = np.linspace(0, math.pi, 31)
        arc = propagate(KEPLER_FLAT, State([1, 0], [0, 1]), math.pi,
                        sample_times=times)
        for t, s in zip(times, arc.samples):
            assert np.linalg.norm(
                s.q - [math.cos(t), math.sin(t)]) <= 1e-6

    def test_default_samples_at_accepted_steps(self):
        arc = propagate(KEPLER_FLAT, State([1, 0], [0, 1]), 1.0)
        assert len(arc.samples) >= 3
        assert arc.times[0] == 0.0
        assert arc.times[-1] == pytest.approx(1.0)
        assert np.all(np.diff(arc.times) > 0)


class TestErrors:
    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            propagate(KEPLER_FLAT, State([1, 0], [0, 1]), 0.0)

    def test_kepler_collision(self):
        with pytest.raises(SingularityError):
            propagate(KEPLER_FLAT, State([1, 0], [-1, 0]), 3.0)

    def test_sphere_hooke_equator_plunge(self):
        spec = SystemSpec(Problem.HOOKE, Space.SPHERE, -1)
        start = bvp.departure_state(spec, [0.5, 0], 0.0, 0.8)
        with pytest.raises(SingularityError):
            propagate(spec, start, 10.0)


class TestEndpointJacobian:
    def test_hooke_quarter_period_identity(self):
        _, det = endpoint_jacobian(HOOKE_FLAT, State([0.7, 0.2], [0.3, 0.5]),
                                   math.pi / 2)
        jac, _ = endpoint_jacobian(HOOKE_FLAT, State([0.7, 0.2], [0.3, 0.5]),
                                   math.pi / 2)
        assert np.allclose(jac, np.eye(2), atol=1e-7)
        assert det == pytest.approx(1.0, abs=1e-6)

    def test_hooke_half_period_degenerate(self):
        _, det = endpoint_jacobian(HOOKE_FLAT, State([0.7, 0.2], [0.3, 0.5]),
                                   math.pi)
        assert abs(det) <= 1e-6

    def test_kepler_full_period_degenerate(self):
        _, det = endpoint_jacobian(KEPLER_FLAT, State([1, 0], [0, 1]),
                                   2 * math.pi)
        assert abs(det) <= 1e-6

    def test_curved_jacobian_runs(self):
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        start = flat_state(spec, [0.5, 0], [0.1, 0.8])
        jac, det = endpoint_jacobian(spec, start, 1.0)
        assert jac.shape == (2, 2)
        assert math.isfinite(det)


class TestCsvExport:
    def test_schema_and_precision(self):
        arc = propagate(KEPLER_FLAT, State([1, 0], [0, 1]), 1.0,
                        sample_times=np.linspace(0, 1, 5))
        buf = io.StringIO()
        write_csv(arc, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,x,y,vx,vy,H,S,w"
        assert len(lines) == 6
        row = [float(v) for v in lines[1].split(",")]
        assert len(row) == 8
        assert row[5] == pytest.approx(-0.5, abs=1e-12)  # circular energy
        # 17 significant digits survive a round trip
        value = lines[-1].split(",")[1]
        assert float(value) == arc.samples[-1].q[0]

    def test_curved_has_z_columns(self):
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        arc = propagate(spec, flat_state(spec, [0.5, 0], [0, 0.8]), 0.5)
        buf = io.StringIO()
        write_csv(arc, buf)
        assert buf.getvalue().splitlines()[0] == "t,x,y,z,vx,vy,vz,H,S,w"
