"""Central projection between the flat systems and their curved images.

The flat plane sits tangent to the quadric at the pole; rays through the
centre of the embedding space carry each plane point to a quadric point.
Three rules define the corresponding dynamics: positions map by the
projection, velocities map by the push-forward divided by ``gamma^2``, and
forces by the push-forward divided by ``gamma^4``.  The velocity rule
implies the time change ``dt_curved = gamma^2 dt_flat``, which
:func:`reparametrized_time` accumulates by quadrature.

:func:`verify_projection` checks the whole correspondence end to end: it
projects a flat arc's start, propagates the independently defined curved
system for the reparametrized time, and measures how far the result lands
from the projection of the flat arc's end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import geometry, integrate, systems
from .errors import DomainError
from .geometry import Space
from .integrate import Arc, Tolerances
from .systems import State, SystemSpec


@dataclass(frozen=True)
class ProjectionMap:
    """Target screen of the central projection (the source is always the
    flat tangent plane at the pole)."""

    space: Space

    def __post_init__(self):
        if self.space is Space.FLAT:
            raise ValueError("projection target must be curved")


def target_spec(flat_spec: SystemSpec, pmap: ProjectionMap) -> SystemSpec:
    """The curved system a flat system projects onto."""
    if flat_spec.space is not Space.FLAT:
        raise ValueError("source system must be flat")
    return replace(flat_spec, space=pmap.space)


def project_state(pmap: ProjectionMap, s: State) -> State:
    """Map a flat state to the corresponding curved state.

    The position is the central projection of ``(x, y, 1)`` onto the
    quadric; the velocity is the push-forward divided by ``gamma^2``,
    equivalently the chart velocity ``v / gamma^2`` lifted to the quadric.
    The returned state's clock starts at zero: the two screens do not share
    a time parameter.
    """
    if s.q.shape != (2,):
        raise ValueError("project_state expects a flat (chart) state")
    g = geometry.gamma(pmap.space, s.q)
    u, v = geometry.chart_velocity_to_ambient(pmap.space, s.q, s.v / (g * g))
    return State(u, v, 0.0)


def _gamma_squared(pmap: ProjectionMap):
    sphere = pmap.space is Space.SPHERE

    def quad(q, v):
        r2 = q[0] * q[0] + q[1] * q[1]
        if sphere:
            return 1.0 / (1.0 + r2)
        if r2 >= 1.0:
            raise DomainError("flat trajectory left the hyperbolic chart disk")
        return 1.0 / (1.0 - r2)
    return quad


def _require_in_domain(flat_arc: Arc, pmap: ProjectionMap) -> None:
    if pmap.space is not Space.HYPERBOLIC:
        return
    r2 = max(float(s.q @ s.q) for s in flat_arc.samples)
    if r2 >= 1.0:
        raise DomainError(
            "flat arc leaves the unit disk: its hyperbolic image needs "
            "infinite time to reach the boundary")


def reparametrized_time(flat_arc: Arc, pmap: ProjectionMap,
                        tol: Tolerances | None = None) -> float:
    """Elapsed time of the projected motion: integral of ``gamma^2`` along
    the flat arc, re-propagated so the quadrature shares the integrator's
    error control."""
    if flat_arc.spec.space is not Space.FLAT:
        raise ValueError("reparametrized_time expects a flat arc")
    _require_in_domain(flat_arc, pmap)
    arc = integrate.propagate(flat_arc.spec, flat_arc.start, flat_arc.dt,
                              tol=tol, sample_times=np.array([flat_arc.dt]),
                              extra_quadratures=(_gamma_squared(pmap),))
    return float(arc.extras[0])


@dataclass(frozen=True)
class ProjectionCheck:
    """Residuals of one flat-vs-curved correspondence test."""

    dt_curved: float
    endpoint_residual: float
    max_sample_residual: float


def verify_projection(flat_arc: Arc, pmap: ProjectionMap,
                      tol: Tolerances | None = None,
                      n_samples: int = 25) -> ProjectionCheck:
    """Propagate the curved image of a flat arc and report the mismatch.

    The flat arc is re-propagated with the time-change quadrature and
    sampled at ``n_samples`` uniform times; the curved system is propagated
    from the projected start state over the reparametrized total time and
    sampled at the image times.  Residuals are Euclidean norms of ambient
    coordinate differences.
    """
    spec = flat_arc.spec
    if spec.space is not Space.FLAT:
        raise ValueError("verify_projection expects a flat arc")
    _require_in_domain(flat_arc, pmap)
    curved = target_spec(spec, pmap)

    flat_times = np.linspace(0.0, flat_arc.dt, n_samples)
    flat = integrate.propagate(spec, flat_arc.start, flat_arc.dt, tol=tol,
                               sample_times=flat_times,
                               extra_quadratures=(_gamma_squared(pmap),))
    dt_curved = float(flat.extras[0])
    curved_times = flat.sample_extras[:, 0].copy()
    curved_times[0] = 0.0
    curved_times[-1] = dt_curved

    start_curved = project_state(pmap, flat.start)
    image = integrate.propagate(curved, start_curved, dt_curved, tol=tol,
                                sample_times=curved_times)

    end_residual = float(np.linalg.norm(
        image.end.q - project_state(pmap, flat.end).q))
    sample_residual = max(
        float(np.linalg.norm(img.q - project_state(pmap, src).q))
        for img, src in zip(image.samples, flat.samples))
    return ProjectionCheck(dt_curved=dt_curved,
                           endpoint_residual=end_residual,
                           max_sample_residual=sample_residual)
