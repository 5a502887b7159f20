import math

import numpy as np
import pytest

from curvlam import bvp, geometry, integrate, systems
from curvlam.errors import DomainError, SingularityError
from curvlam.geometry import Space
from curvlam.systems import (Problem, State, SystemSpec, eom_rhs,
                             force_function, force_gradient, flat_state,
                             kepler_first_integrals, kinetic_energy,
                             lagrangian, rotation_momentum, total_energy)

from _helpers import ALL_SPECS, ATTRACTIVE_SPECS, random_chart_point

KEPLER_FLAT = SystemSpec(Problem.KEPLER, Space.FLAT)
HOOKE_FLAT = SystemSpec(Problem.HOOKE, Space.FLAT)


class TestSpecParsing:
    def test_parse(self):
        spec = SystemSpec.parse("kepler:sphere")
        assert spec.problem is Problem.KEPLER
        assert spec.space is Space.SPHERE
        assert spec.force_sign == 1

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            SystemSpec.parse("newton:plane")

    def test_force_sign_validation(self):
        with pytest.raises(ValueError):
            SystemSpec(Problem.KEPLER, Space.FLAT, 2)


class TestForceFunction:
    def test_flat_kepler(self):
        assert force_function(KEPLER_FLAT, [2, 0]) == pytest.approx(0.5)

    def test_sphere_kepler_quarter_angle(self):
        # chart radius tan(pi/4) = 1
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        assert force_function(spec, [1, 0]) == pytest.approx(1.0)

    def test_sphere_hooke_quarter_angle(self):
        spec = SystemSpec(Problem.HOOKE, Space.SPHERE)
        assert force_function(spec, [1, 0]) == pytest.approx(-0.5)

    def test_hyperbolic_values(self):
        s = math.atanh(0.5)
        assert force_function(
            SystemSpec(Problem.KEPLER, Space.HYPERBOLIC), [0.5, 0]
        ) == pytest.approx(1 / math.tanh(s), rel=1e-14)
        assert force_function(
            SystemSpec(Problem.HOOKE, Space.HYPERBOLIC), [0.5, 0]
        ) == pytest.approx(-0.5 * math.tanh(s) ** 2, rel=1e-14)

    def test_repulsive_flips_sign(self):
        for spec in ATTRACTIVE_SPECS:
            p = [0.5, 0.2]
            flipped = SystemSpec(spec.problem, spec.space, -1)
            assert force_function(flipped, p) == -force_function(spec, p)

    def test_kepler_centre_singular(self):
        with pytest.raises(SingularityError):
            force_function(KEPLER_FLAT, [0, 0])

    def test_sphere_hooke_equator_singular(self):
        spec = SystemSpec(Problem.HOOKE, Space.SPHERE)
        with pytest.raises(SingularityError):
            force_function(spec, np.array([1.0, 0.0, 0.0]))


class TestForceGradient:
    def test_flat_kepler(self):
        assert np.allclose(force_gradient(KEPLER_FLAT, [1, 0]), [-1, 0])

    def test_flat_hooke(self):
        assert np.allclose(force_gradient(HOOKE_FLAT, [0.3, 0.4]), [-0.3, -0.4])

    def test_matches_finite_differences(self):
        # Directional derivatives of U along geodesic variations versus the
        # ambient pairing with the gradient, at 100 random points per spec.
        rng = np.random.default_rng(31)
        h = 1e-5
        for spec in ALL_SPECS:
            for _ in range(100):
                p = random_chart_point(rng, spec.space, r_min=0.25)
                if spec.space is Space.FLAT:
                    grad = force_gradient(spec, p)
                    for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
                        fd = (force_function(spec, p + h * e)
                              - force_function(spec, p - h * e)) / (2 * h)
                        assert fd == pytest.approx(float(grad @ e),
                                                   rel=1e-6, abs=1e-8)
                    continue
                u = geometry.chart_to_ambient(spec.space, p)
                grad = force_gradient(spec, u)
                for w in (rng.normal(size=2), rng.normal(size=2)):
                    _, e = geometry.chart_velocity_to_ambient(spec.space, p, w)
                    e = e / math.sqrt(geometry.ambient_dot(spec.space, e, e))
                    if spec.space is Space.SPHERE:
                        up = math.cos(h) * u + math.sin(h) * e
                        um = math.cos(h) * u - math.sin(h) * e
                    else:
                        up = math.cosh(h) * u + math.sinh(h) * e
                        um = math.cosh(h) * u - math.sinh(h) * e
                    fd = (force_function(spec, up)
                          - force_function(spec, um)) / (2 * h)
                    pairing = geometry.ambient_dot(spec.space, grad, e)
                    assert fd == pytest.approx(pairing, rel=1e-6, abs=1e-8)

    def test_gradient_is_tangent(self):
        rng = np.random.default_rng(37)
        for spec in ATTRACTIVE_SPECS:
            if spec.space is Space.FLAT:
                continue
            for _ in range(50):
                p = random_chart_point(rng, spec.space, r_min=0.2)
                u = geometry.chart_to_ambient(spec.space, p)
                grad = force_gradient(spec, u)
                assert abs(geometry.ambient_dot(spec.space, u, grad)) <= 1e-12


class TestEnergies:
    def test_kepler_circular(self):
        s = State([1, 0], [0, 1])
        assert total_energy(KEPLER_FLAT, s) == pytest.approx(-0.5)

    def test_hooke_unit(self):
        s = State([1, 0], [0, 1])
        assert total_energy(HOOKE_FLAT, s) == pytest.approx(1.0)
        assert lagrangian(HOOKE_FLAT, s) == pytest.approx(0.0)

    def test_rest_state(self):
        for spec in ATTRACTIVE_SPECS:
            s = flat_state(spec, [0.5, 0.1], [0.0, 0.0])
            u0 = force_function(spec, s.q)
            assert total_energy(spec, s) == pytest.approx(-u0)
            assert lagrangian(spec, s) == pytest.approx(u0)
            assert kinetic_energy(spec, s) == 0.0


class TestEquationsOfMotion:
    def test_flat_kepler_example(self):
        dq, dv = eom_rhs(KEPLER_FLAT, State([1, 0], [0, 1]))
        assert np.allclose(dq, [0, 1])
        assert np.allclose(dv, [-1, 0])

    def test_flat_hooke_example(self):
        dq, dv = eom_rhs(HOOKE_FLAT, State([1, 0], [0, 0]))
        assert np.allclose(dq, [0, 0])
        assert np.allclose(dv, [-1, 0])

    def test_reaction_preserves_constraint(self):
        # Differentiating the quadric constraint twice along the motion gives
        # <q, dv/dt> + <v, v> = 0 in the ambient product.
        rng = np.random.default_rng(41)
        for spec in ALL_SPECS:
            if spec.space is Space.FLAT:
                continue
            for _ in range(50):
                p = random_chart_point(rng, spec.space, r_min=0.2)
                w = rng.normal(size=2)
                s = flat_state(spec, p, w)
                _, dv = eom_rhs(spec, s)
                residual = (geometry.ambient_dot(spec.space, s.q, dv)
                            + geometry.ambient_dot(spec.space, s.v, s.v))
                assert abs(residual) <= 1e-12 * max(
                    1.0, float(np.linalg.norm(dv)))


class TestFirstIntegrals:
    def test_circular(self):
        f = kepler_first_integrals(State([1, 0], [0, 1]))
        assert (f.C, f.alpha, f.beta) == pytest.approx((1.0, 0.0, 0.0))

    def test_rectilinear(self):
        f = kepler_first_integrals(State([1, 0], [0, 0]))
        assert (f.C, f.alpha, f.beta) == pytest.approx((0.0, 1.0, 0.0))

    def test_generic(self):
        # alpha from the orbit identity alpha*x + beta*y = r - C^2 at (2, 0):
        # 2*alpha = 2 - 1, so alpha = 0.5 and beta = y/r + vx*C = 0.
        f = kepler_first_integrals(State([2, 0], [0, 0.5]))
        assert (f.C, f.alpha, f.beta) == pytest.approx((1.0, 0.5, 0.0))

    def test_eccentricity_energy_relation(self):
        rng = np.random.default_rng(43)
        for sign in (1, -1):
            spec = SystemSpec(Problem.KEPLER, Space.FLAT, sign)
            for _ in range(50):
                s = State(random_chart_point(rng, Space.FLAT, r_min=0.3),
                          rng.normal(size=2))
                f = kepler_first_integrals(s, sign)
                h = total_energy(spec, s)
                assert f.alpha ** 2 + f.beta ** 2 == pytest.approx(
                    1.0 + 2.0 * h * f.C ** 2, abs=1e-10)


class TestConservationAlongOrbits:
    # Full-length conservation runs live in the acceptance suite; here the
    # attractive systems are spot-checked over a shorter horizon.
    STATES = {
        Space.FLAT: {"kepler": State([1, 0], [0.2, 0.9]),
                     "hooke": State([1, 0], [0.3, 0.8])},
    }

    def _bounded_state(self, spec):
        if spec.space is Space.FLAT:
            return self.STATES[Space.FLAT][spec.problem.value]
        if spec.problem is Problem.KEPLER:
            speed = math.sqrt(1.4) if spec.space is Space.HYPERBOLIC else 1.0
            return bvp.departure_state(spec, [0.6, 0], 1.1, speed)
        return bvp.departure_state(spec, [0.5, 0], 1.2, 0.7)

    @pytest.mark.parametrize("spec", ATTRACTIVE_SPECS,
                             ids=lambda s: s.label)
    def test_energy_and_momentum_drift(self, spec):
        state = self._bounded_state(spec)
        arc = integrate.propagate(spec, state, 12.0)
        h0 = total_energy(spec, arc.start)
        drift = abs(total_energy(spec, arc.end) - h0)
        assert drift <= 1e-9 * max(1.0, abs(h0))
        rot_drift = abs(rotation_momentum(spec, arc.end)
                        - rotation_momentum(spec, arc.start))
        assert rot_drift <= 1e-9

    def test_flat_kepler_integrals_drift(self):
        state = self.STATES[Space.FLAT]["kepler"]
        arc = integrate.propagate(KEPLER_FLAT, state, 12.0)
        f0 = kepler_first_integrals(arc.start)
        f1 = kepler_first_integrals(arc.end)
        assert abs(f1.C - f0.C) <= 1e-9
        assert abs(f1.alpha - f0.alpha) <= 1e-9
        assert abs(f1.beta - f0.beta) <= 1e-9


class TestStateValidation:
    def test_off_quadric_rejected(self):
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        with pytest.raises(DomainError):
            systems.make_state(spec, [0.5, 0, 1.0], [0, 0, 0])

    def test_non_tangent_rejected(self):
        spec = SystemSpec(Problem.KEPLER, Space.SPHERE)
        with pytest.raises(DomainError):
            systems.make_state(spec, [0, 0, 1], [0, 0, 1])

    def test_lower_sheet_rejected(self):
        spec = SystemSpec(Problem.KEPLER, Space.HYPERBOLIC)
        with pytest.raises(DomainError):
            systems.make_state(spec, [0, 0, -1], [0, 1, 0])
