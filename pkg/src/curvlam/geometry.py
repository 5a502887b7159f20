"""Charts, metrics, and distances for the three constant-curvature planes.

Each configuration space is used in two coordinate systems:

* central-projection (gnomonic) chart coordinates ``(x, y)`` on the tangent
  plane at the pole ``O``, and
* ambient coordinates ``(u1, u2, u3)`` on the embedded quadric: the unit
  sphere in Euclidean 3-space, or the upper sheet of the unit two-sheeted
  hyperboloid in Minkowski 3-space.

The chart point ``(x, y)`` corresponds to the ambient point
``gamma * (x, y, 1)`` with ``gamma = (1 + x^2 + y^2)**-0.5`` on the sphere and
``gamma = (1 - x^2 - y^2)**-0.5`` on the hyperboloid.  The chart covers the
open upper hemisphere (sphere) or the open unit disk (hyperboloid); the
ambient form is authoritative for dynamics.  Curvature magnitude is fixed
at 1.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError

QUADRIC_TOL = 1e-12
TANGENCY_TOL = 1e-10

# Pole of the chart: tangency point of the projection plane.
POLE = np.array([0.0, 0.0, 1.0])


class Space(enum.Enum):
    """Which constant-curvature plane the configuration space is."""

    FLAT = "flat"
    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"

    @property
    def curvature(self) -> int:
        return {Space.FLAT: 0, Space.SPHERE: 1, Space.HYPERBOLIC: -1}[self]

    @property
    def is_curved(self) -> bool:
        return self is not Space.FLAT

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


def _chart(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ValueError(f"chart point must be a 2-vector, got shape {p.shape}")
    return p


def _ambient(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise ValueError(f"ambient point must be a 3-vector, got shape {u.shape}")
    return u


def minkowski_dot(u, w) -> float:
    """Bilinear form of signature (+, +, -) on the embedding space."""
    return u[0] * w[0] + u[1] * w[1] - u[2] * w[2]


def ambient_dot(space: Space, u, w) -> float:
    """Inner product of the embedding space: Euclidean for the sphere,
    Minkowski for the hyperboloid."""
    if space is Space.HYPERBOLIC:
        return minkowski_dot(u, w)
    return float(np.dot(u, w))


def gamma(space: Space, p) -> float:
    """Central-projection factor at a chart point.

    Returns 1 on the plane, ``(1 + r^2)**-0.5`` on the sphere and
    ``(1 - r^2)**-0.5`` on the hyperboloid, where ``r`` is the chart radius.
    Raises ``DomainError`` for hyperbolic points with ``r >= 1``.
    """
    p = _chart(p)
    if space is Space.FLAT:
        return 1.0
    r2 = float(p @ p)
    if space is Space.SPHERE:
        return 1.0 / math.sqrt(1.0 + r2)
    if r2 >= 1.0:
        raise DomainError(f"hyperbolic chart requires x^2+y^2 < 1, got {r2}")
    return 1.0 / math.sqrt(1.0 - r2)


def metric(space: Space, p) -> np.ndarray:
    """Riemannian metric in chart coordinates as a symmetric 2x2 matrix.

    ``v @ metric(space, p) @ v`` is twice the kinetic energy of a unit-mass
    point moving through chart point ``p`` with chart velocity ``v``.
    """
    p = _chart(p)
    if space is Space.FLAT:
        return np.eye(2)
    x, y = p
    g = gamma(space, p)
    if space is Space.SPHERE:
        m = np.array([[1.0 + y * y, -x * y], [-x * y, 1.0 + x * x]])
    else:
        m = np.array([[1.0 - y * y, x * y], [x * y, 1.0 - x * x]])
    return g ** 4 * m


def metric_inverse(space: Space, p) -> np.ndarray:
    """Inverse of :func:`metric`, computed in closed form:
    ``gamma**-2 * (I + sign * p p^T)`` with sign +1 (sphere) / -1 (hyperboloid).
    """
    p = _chart(p)
    if space is Space.FLAT:
        return np.eye(2)
    g = gamma(space, p)
    sign = 1.0 if space is Space.SPHERE else -1.0
    return (np.eye(2) + sign * np.outer(p, p)) / (g * g)


def chart_to_ambient(space: Space, p) -> np.ndarray:
    """Lift a chart point onto the quadric (or the z=1 plane when flat)."""
    p = _chart(p)
    g = gamma(space, p)
    return np.array([g * p[0], g * p[1], g])


def ambient_to_chart(space: Space, u) -> np.ndarray:
    """Central projection of an ambient point back to the chart plane.

    On the sphere only the open upper hemisphere (``u3 > 0``) projects into
    the chart; other points raise ``DomainError``.
    """
    u = _ambient(u)
    if space is Space.FLAT:
        return u[:2].copy()
    if u[2] <= 0.0:
        raise DomainError(f"ambient point with u3 = {u[2]} has no chart image")
    return np.array([u[0] / u[2], u[1] / u[2]])


def quadric_residual(space: Space, u) -> float:
    """Absolute violation of the defining quadric equation."""
    u = _ambient(u)
    if space is Space.SPHERE:
        return abs(float(u @ u) - 1.0)
    if space is Space.HYPERBOLIC:
        return abs(minkowski_dot(u, u) + 1.0)
    return 0.0


def project_to_quadric(space: Space, u) -> np.ndarray:
    """Radially rescale an ambient point back onto its quadric."""
    u = _ambient(u)
    if space is Space.SPHERE:
        return u / np.linalg.norm(u)
    if space is Space.HYPERBOLIC:
        n2 = -minkowski_dot(u, u)
        if n2 <= 0.0 or u[2] <= 0.0:
            raise DomainError("point cannot be rescaled onto the upper sheet")
        return u / math.sqrt(n2)
    return u


def tangent_project(space: Space, u, v) -> np.ndarray:
    """Remove the component of ``v`` normal to the quadric at ``u``."""
    u = _ambient(u)
    v = _ambient(v)
    if space is Space.SPHERE:
        return v - float(u @ v) * u
    if space is Space.HYPERBOLIC:
        # <u, u>_M = -1, so the normal component is -<u, v>_M u.
        return v + minkowski_dot(u, v) * u
    return v


def geodesic_distance(space: Space, p, q) -> float:
    """Geodesic distance between two points.

    Points may be given in chart form (2-vectors) or ambient form
    (3-vectors); mixed forms are allowed.  Euclidean on the plane, arc angle
    on the sphere, Minkowski arc length on the hyperboloid.
    """
    if space is Space.FLAT:
        return float(np.linalg.norm(_chart(p) - _chart(q)))
    u = _as_ambient(space, p)
    w = _as_ambient(space, q)
    if space is Space.SPHERE:
        # atan2 form: exact for coincident points, well conditioned at both
        # ends of [0, pi] (a plain arccos of the dot product is neither).
        return math.atan2(float(np.linalg.norm(np.cross(u, w))),
                          float(u @ w))
    # 2 sinh(d/2)^2 = cosh(d) - 1, via the Minkowski norm of the difference.
    diff = u - w
    return 2.0 * math.asinh(0.5 * math.sqrt(max(minkowski_dot(diff, diff), 0.0)))


def radial_distance(space: Space, p) -> float:
    """Geodesic distance from the pole ``O``."""
    if space is Space.FLAT:
        return float(np.linalg.norm(_chart(p)))
    u = _as_ambient(space, p)
    if space is Space.SPHERE:
        return math.acos(float(np.clip(u[2], -1.0, 1.0)))
    return math.acosh(max(float(u[2]), 1.0))


def antipode_reflect(p) -> np.ndarray:
    """Point reflection of a chart point through the pole: (x, y) -> (-x, -y).

    On the sphere this is the rotation by pi about the polar axis.
    """
    return -_chart(p)


def _as_ambient(space: Space, point) -> np.ndarray:
    point = np.asarray(point, dtype=float)
    if point.shape == (2,):
        return chart_to_ambient(space, point)
    if point.shape == (3,):
        return point
    raise ValueError(f"expected a 2- or 3-vector, got shape {point.shape}")


def chart_velocity_to_ambient(space: Space, p, w) -> tuple[np.ndarray, np.ndarray]:
    """Lift a chart point and chart velocity to the quadric.

    Returns ``(u, v)`` where ``u = gamma * (x, y, 1)`` and ``v`` is the
    push-forward of ``w`` along the lift (the time derivative of ``u`` when
    the chart point moves with velocity ``w``).  The result satisfies the
    quadric and tangency constraints exactly up to rounding.
    """
    p = _chart(p)
    w = _chart(w)
    if space is Space.FLAT:
        return p.copy(), w.copy()
    g = gamma(space, p)
    sign = -1.0 if space is Space.SPHERE else 1.0
    u = np.array([g * p[0], g * p[1], g])
    # d(gamma)/dt = sign * gamma^3 (p . w)
    gdot_over_g = sign * g * g * float(p @ w)
    v = gdot_over_g * u + g * np.array([w[0], w[1], 0.0])
    return u, v


def ambient_velocity_to_chart(space: Space, u, v) -> np.ndarray:
    """Differential of :func:`ambient_to_chart`: ambient velocity to chart
    velocity at the ambient point ``u``."""
    u = _ambient(u)
    v = _ambient(v)
    if space is Space.FLAT:
        return v[:2].copy()
    if u[2] <= 0.0:
        raise DomainError("no chart image for u3 <= 0")
    z = u[2]
    return np.array([(v[0] * z - u[0] * v[2]) / (z * z),
                     (v[1] * z - u[1] * v[2]) / (z * z)])
