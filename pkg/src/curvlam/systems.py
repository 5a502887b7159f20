"""The six natural mechanical systems (times two force signs).

Kepler and Hooke problems on the flat, spherical, and hyperbolic planes in
nondimensional units: unit gravitational parameter, unit Hooke constant,
unit curvature.  Force functions, with ``rho`` the geodesic distance from
the centre ``O``:

================  ==================  ====================
problem           flat                curved
================  ==================  ====================
Kepler            1/r                 1/tan(rho), 1/tanh(rho)
Hooke             -r^2/2              -tan(rho)^2/2, -tanh(rho)^2/2
================  ==================  ====================

A repulsive variant flips the sign of the force function.  Flat states are
chart 2-vectors; curved states are ambient 3-vectors on the quadric with
tangent velocities.  Curved equations of motion carry the radial reaction
``lambda * q`` that keeps the configuration on the quadric.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import DomainError, SingularityError
from .geometry import Space

# Distance below which Kepler (and the spherical-Hooke equator) counts as
# a singular encounter.
SINGULARITY_RADIUS = 1e-8


class Problem(enum.Enum):
    KEPLER = "kepler"
    HOOKE = "hooke"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SystemSpec:
    """Which problem, on which space, with which force sign."""

    problem: Problem
    space: Space
    force_sign: int = 1

    def __post_init__(self):
        if self.force_sign not in (1, -1):
            raise ValueError("force_sign must be +1 (attractive) or -1 (repulsive)")

    @classmethod
    def parse(cls, text: str, force_sign: int = 1) -> "SystemSpec":
        """Build a spec from a ``problem:space`` label such as ``kepler:flat``."""
        try:
            problem_s, space_s = text.lower().split(":")
            return cls(Problem(problem_s), Space(space_s), force_sign)
        except ValueError as exc:
            raise ValueError(f"cannot parse system spec {text!r}") from exc

    @property
    def label(self) -> str:
        sign = "attractive" if self.force_sign > 0 else "repulsive"
        return f"{self.problem.value}:{self.space.value}:{sign}"

    @property
    def dim(self) -> int:
        """Configuration dimension: 2 in the chart (flat), 3 ambient (curved)."""
        return 2 if self.space is Space.FLAT else 3


def all_specs(force_signs=(1, -1)) -> list[SystemSpec]:
    """Every problem/space combination for the requested force signs."""
    return [SystemSpec(p, s, f)
            for f in force_signs for p in Problem for s in Space]


@dataclass(frozen=True)
class State:
    """Configuration, velocity, and time.

    ``q`` and ``v`` are chart 2-vectors for flat systems and ambient
    3-vectors for curved ones.
    """

    q: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float).copy())
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).copy())
        object.__setattr__(self, "t", float(self.t))
        if self.q.shape != self.v.shape or self.q.shape not in ((2,), (3,)):
            raise ValueError("q and v must both be 2-vectors or both 3-vectors")


def make_state(spec: SystemSpec, q, v, t: float = 0.0) -> State:
    """Construct a state and validate it against the spec's constraints."""
    s = State(q, v, t)
    check_state(spec, s)
    return s


def check_state(spec: SystemSpec, s: State) -> None:
    """Raise ``DomainError`` unless the state satisfies the quadric and
    tangency constraints of the spec's space."""
    if s.q.shape != (spec.dim,):
        raise DomainError(
            f"{spec.label} expects {spec.dim}-vector states, got shape {s.q.shape}")
    if spec.space is Space.FLAT:
        return
    if geometry.quadric_residual(spec.space, s.q) > geometry.QUADRIC_TOL:
        raise DomainError("configuration is off the quadric")
    if abs(geometry.ambient_dot(spec.space, s.q, s.v)) > geometry.TANGENCY_TOL:
        raise DomainError("velocity is not tangent to the quadric")
    if spec.space is Space.HYPERBOLIC and s.q[2] <= 0.0:
        raise DomainError("hyperbolic states live on the upper sheet (u3 > 0)")


def flat_state(spec: SystemSpec, chart_q, chart_v, t: float = 0.0) -> State:
    """State from chart data, lifted to the quadric for curved specs."""
    if spec.space is Space.FLAT:
        return make_state(spec, chart_q, chart_v, t)
    u, v = geometry.chart_velocity_to_ambient(spec.space, chart_q, chart_v)
    return make_state(spec, u, v, t)


# ---------------------------------------------------------------------------
# force functions and their gradients
# ---------------------------------------------------------------------------

def _radial_parts(space: Space, q) -> tuple[float, float]:
    """(perpendicular distance from the polar axis, axis coordinate).

    On the quadric these equal (sin rho, cos rho) for the sphere and
    (sinh rho, cosh rho) for the hyperboloid; in the flat chart they are
    (r, 1).
    """
    if space is Space.FLAT:
        return float(math.hypot(q[0], q[1])), 1.0
    return float(math.hypot(q[0], q[1])), float(q[2])


def force_function(spec: SystemSpec, p) -> float:
    """Force function U at a chart or ambient point.

    The potential energy is ``-U``; attractive problems have U decreasing
    away from the centre.
    """
    q = _config(spec, p)
    perp, axis = _radial_parts(spec.space, q)
    if spec.problem is Problem.KEPLER:
        # 1/r, 1/tan, 1/tanh all read axis/perp in these coordinates.
        if perp < SINGULARITY_RADIUS:
            raise SingularityError("Kepler force function singular at the centre")
        value = axis / perp
    else:
        if spec.space is Space.SPHERE and abs(axis) < SINGULARITY_RADIUS:
            raise SingularityError("spherical Hooke singular on the equator")
        value = -0.5 * (perp / axis) ** 2
    return spec.force_sign * value


def force_gradient(spec: SystemSpec, p) -> np.ndarray:
    """Metric gradient of the force function, tangent to the space.

    Chart 2-vector for flat specs, ambient 3-vector for curved ones.
    """
    q = _config(spec, p)
    perp, axis = _radial_parts(spec.space, q)
    if spec.space is Space.FLAT:
        if spec.problem is Problem.KEPLER:
            if perp < SINGULARITY_RADIUS:
                raise SingularityError("Kepler gradient singular at the centre")
            grad = -q / perp ** 3
        else:
            grad = -q
        return spec.force_sign * grad

    # Curved: U depends only on the axis coordinate c = u3; differentiate,
    # take the ambient (Euclidean / Minkowski) gradient, project tangent.
    if spec.problem is Problem.KEPLER:
        if perp < SINGULARITY_RADIUS:
            raise SingularityError("Kepler gradient singular on the polar axis")
        dU_dc = 1.0 / perp ** 3
    else:
        if spec.space is Space.SPHERE and abs(axis) < SINGULARITY_RADIUS:
            raise SingularityError("spherical Hooke gradient singular on the equator")
        dU_dc = 1.0 / axis ** 3
    if spec.space is Space.HYPERBOLIC:
        dU_dc = -dU_dc
        # Minkowski gradient of f(u3) is (0, 0, -f'); tangent part:
        grad = np.array([0.0, 0.0, -dU_dc]) + (dU_dc * axis) * q
    else:
        grad = np.array([0.0, 0.0, dU_dc]) - (dU_dc * axis) * q
    return spec.force_sign * grad


def _config(spec: SystemSpec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if spec.space is Space.FLAT:
        if p.shape != (2,):
            raise ValueError("flat systems take chart 2-vectors")
        return p
    if p.shape == (2,):
        return geometry.chart_to_ambient(spec.space, p)
    if p.shape == (3,):
        return p
    raise ValueError(f"expected a 2- or 3-vector, got shape {p.shape}")


# ---------------------------------------------------------------------------
# energies and equations of motion
# ---------------------------------------------------------------------------

def kinetic_energy(spec: SystemSpec, s: State) -> float:
    """T = |v|^2 / 2 in the ambient norm of the spec's space."""
    return 0.5 * geometry.ambient_dot(spec.space, s.v, s.v)


def total_energy(spec: SystemSpec, s: State) -> float:
    """H = T - U, conserved along orbits."""
    return kinetic_energy(spec, s) - force_function(spec, s.q)


def lagrangian(spec: SystemSpec, s: State) -> float:
    """L = T + U."""
    return kinetic_energy(spec, s) + force_function(spec, s.q)


def reaction_multiplier(spec: SystemSpec, s: State) -> float:
    """Scalar of the radial reaction term keeping curved motion on the quadric.

    Obtained by differentiating the quadric constraint twice along the
    motion; zero for flat systems.
    """
    if spec.space is Space.SPHERE:
        return -float(s.v @ s.v)
    if spec.space is Space.HYPERBOLIC:
        return geometry.minkowski_dot(s.v, s.v)
    return 0.0


def eom_rhs(spec: SystemSpec, s: State) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side (dq/dt, dv/dt) of the equations of motion."""
    dv = force_gradient(spec, s.q)
    if spec.space is not Space.FLAT:
        dv = dv + reaction_multiplier(spec, s) * s.q
    return s.v.copy(), dv


@dataclass(frozen=True)
class FirstIntegralsKepler:
    """Flat-Kepler conserved quantities: angular momentum and the
    eccentricity vector."""

    C: float
    alpha: float
    beta: float


def kepler_first_integrals(s: State, force_sign: int = 1) -> FirstIntegralsKepler:
    """Angular momentum C = x vy - y vx and eccentricity vector
    (alpha, beta) = (x/r - vy C, y/r + vx C) of a flat Kepler state.

    Under a repulsive force the conserved eccentricity components carry the
    opposite sign on the velocity terms; pass ``force_sign=-1`` for them.
    """
    if s.q.shape != (2,):
        raise ValueError("first integrals are defined for flat states")
    x, y = s.q
    vx, vy = s.v
    r = math.hypot(x, y)
    if r < SINGULARITY_RADIUS:
        raise SingularityError("first integrals undefined at the centre")
    C = x * vy - y * vx
    return FirstIntegralsKepler(C=C,
                                alpha=x / r - force_sign * vy * C,
                                beta=y / r + force_sign * vx * C)


def rotation_momentum(spec: SystemSpec, s: State) -> float:
    """First integral generated by rotation about the polar axis.

    ``x vy - y vx`` in the flat chart; ``u1 v2 - u2 v1`` in ambient
    coordinates (the same expression under both ambient inner products).
    """
    return float(s.q[0] * s.v[1] - s.q[1] * s.v[0])
