"""Lambert vector fields, their flows, and the conserved pair of invariants.

A Lambert vector at an end pair (A, B) is a variation (dA, dB) whose pairing
with the end velocities, through the metric, agrees for every arc from A to
B.  Flowing an end pair along such a field (at fixed energy) leaves elapsed
time and both action integrals of the connecting arcs unchanged; the flows
also preserve a pair of geometric invariants:

* Kepler: the chord d(A, B) and the radius sum d(O, A) + d(O, B);
* Hooke: the chord d(A, B) and the antichord d(A', B), with A' the point
  reflection of A through the centre.

All fields are expressed in chart coordinates.  The curved fields are the
flat ones multiplied by the matrices ``G = I + q q^T`` (sphere) and
``G = I - q q^T`` (hyperboloid); spherical flows stay inside the open
hemisphere the chart covers.  :func:`arcs_through_flat_kepler` provides an
integration-free family of flat Kepler end velocities for testing the
defining identity without any propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import geometry
from .errors import DomainError, SingularityError
from .geometry import Space
from .integrate import Arc
from .systems import Problem, SystemSpec

# Chart radius beyond which a spherical flow counts as having left the
# hemisphere (the true boundary is at infinity in the chart).
SPHERE_CHART_LIMIT = 1e6
FLOW_STEP = 1e-3


@dataclass(frozen=True)
class EndPair:
    """Departure and arrival chart points."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).copy())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).copy())
        if self.a.shape != (2,) or self.b.shape != (2,):
            raise ValueError("end points must be chart 2-vectors")


@dataclass(frozen=True)
class LambertVector:
    """A candidate end-pair variation (chart components)."""

    da: np.ndarray
    db: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "da", np.asarray(self.da, dtype=float).copy())
        object.__setattr__(self, "db", np.asarray(self.db, dtype=float).copy())


class InvariantPair(NamedTuple):
    chord: float
    second: float  # radius sum (Kepler) or antichord (Hooke)


def check_domain(spec: SystemSpec, pair: EndPair) -> None:
    """Raise if either end leaves the chart domain of the spec's space."""
    for p in (pair.a, pair.b):
        geometry.gamma(spec.space, p)
        if spec.space is Space.SPHERE and float(p @ p) > SPHERE_CHART_LIMIT ** 2:
            raise DomainError("end point left the chart hemisphere")


def trivial_lambert_vector(pair: EndPair) -> LambertVector:
    """The variation generated by the rotational symmetry: an infinitesimal
    rotation of both ends about the centre."""
    ax, ay = pair.a
    bx, by = pair.b
    return LambertVector(da=np.array([-ay, ax]), db=np.array([-by, bx]))


def _flat_field(problem: Problem, pair: EndPair) -> tuple[np.ndarray, np.ndarray]:
    a, b = pair.a, pair.b
    if problem is Problem.KEPLER:
        ra = np.linalg.norm(a)
        rb = np.linalg.norm(b)
        if ra < 1e-12 or rb < 1e-12:
            raise SingularityError("Kepler Lambert field undefined at the centre")
        x = b / rb - a / ra
        return x, x.copy()
    da = np.array([a[1] - b[1], b[0] - a[0]])
    return da, -da


def _transfer_matrix(space: Space, p) -> np.ndarray:
    sign = 1.0 if space is Space.SPHERE else -1.0
    return np.eye(2) + sign * np.outer(p, p)


def lambert_vector(spec: SystemSpec, pair: EndPair) -> LambertVector:
    """The non-trivial Lambert vector of the spec's system at an end pair.

    Flat Kepler: both components equal the difference of the unit radial
    directions.  Flat Hooke: the 90-degree rotation of the chord, with
    opposite signs at the two ends.  Curved systems: the flat vector at each
    end multiplied by ``I +/- q q^T``.
    """
    check_domain(spec, pair)
    da, db = _flat_field(spec.problem, pair)
    if spec.space is not Space.FLAT:
        da = _transfer_matrix(spec.space, pair.a) @ da
        db = _transfer_matrix(spec.space, pair.b) @ db
    return LambertVector(da=da, db=db)


def lambert_defect(spec: SystemSpec, pair: EndPair, vec: LambertVector,
                   v_a, v_b) -> float:
    """Absolute mismatch of the defining identity for one arc.

    ``v_a`` and ``v_b`` are the chart end velocities of an arc of ``spec``
    from ``pair.a`` to ``pair.b``; the pairing uses the chart metric at each
    end.  The value vanishes (to arc accuracy) exactly when ``vec`` is a
    Lambert vector.
    """
    ga = geometry.metric(spec.space, pair.a)
    gb = geometry.metric(spec.space, pair.b)
    va = np.asarray(v_a, dtype=float)
    vb = np.asarray(v_b, dtype=float)
    return float(abs(va @ ga @ vec.da - vb @ gb @ vec.db))


def arc_end_data(arc: Arc) -> tuple[EndPair, np.ndarray, np.ndarray]:
    """Chart end pair and chart end velocities of a propagated arc."""
    space = arc.spec.space
    if space is Space.FLAT:
        return (EndPair(arc.start.q, arc.end.q),
                arc.start.v.copy(), arc.end.v.copy())
    a = geometry.ambient_to_chart(space, arc.start.q)
    b = geometry.ambient_to_chart(space, arc.end.q)
    v_a = geometry.ambient_velocity_to_chart(space, arc.start.q, arc.start.v)
    v_b = geometry.ambient_velocity_to_chart(space, arc.end.q, arc.end.v)
    return EndPair(a, b), v_a, v_b


def arc_defect(arc: Arc, vec: LambertVector | None = None) -> float:
    """Defect of a vector (default: the system's Lambert vector) against a
    propagated arc's end velocities."""
    pair, v_a, v_b = arc_end_data(arc)
    if vec is None:
        vec = lambert_vector(arc.spec, pair)
    return lambert_defect(arc.spec, pair, vec, v_a, v_b)


def invariant_pair(spec: SystemSpec, pair: EndPair) -> InvariantPair:
    """The two scalars conserved along the system's Lambert flow."""
    check_domain(spec, pair)
    space = spec.space
    chord = geometry.geodesic_distance(space, pair.a, pair.b)
    if spec.problem is Problem.KEPLER:
        second = (geometry.radial_distance(space, pair.a)
                  + geometry.radial_distance(space, pair.b))
    else:
        second = geometry.geodesic_distance(
            space, geometry.antipode_reflect(pair.a), pair.b)
    return InvariantPair(chord=chord, second=second)


@dataclass(frozen=True)
class FlowResult:
    """A numerically integrated Lambert path."""

    s_values: np.ndarray
    pairs: tuple[EndPair, ...]
    truncated: bool


FieldFn = Callable[[EndPair], LambertVector]


def lambert_flow(spec: SystemSpec, start: EndPair, s_span: float,
                 step: float = FLOW_STEP,
                 n_samples: int | None = None,
                 field: FieldFn | None = None) -> FlowResult:
    """Integrate the end-pair field from ``start`` over ``s in [0, s_span]``.

    Classical fixed-step fourth-order Runge-Kutta in the flow parameter;
    the step is shrunk so every requested sample lands on a step boundary.
    If an end leaves the domain (hemisphere, unit disk, or the Kepler
    centre) the path is truncated there and flagged.

    Returns samples at ``n_samples`` evenly spaced parameter values
    (default: every integration step).
    """
    if s_span <= 0.0:
        raise ValueError("flow span must be positive")
    if field is None:
        field = lambda p: lambert_vector(spec, p)
    check_domain(spec, start)

    if n_samples is not None:
        if n_samples < 2:
            raise ValueError("need at least two samples")
        sample_s = np.linspace(0.0, s_span, n_samples)
    else:
        n_steps = max(1, math.ceil(s_span / step - 1e-12))
        sample_s = np.linspace(0.0, s_span, n_steps + 1)

    def rhs(z: np.ndarray) -> np.ndarray:
        vec = field(EndPair(z[:2], z[2:]))
        return np.concatenate([vec.da, vec.db])

    z = np.concatenate([start.a, start.b])
    pairs = [EndPair(z[:2], z[2:])]
    s_done = [0.0]
    truncated = False
    for k in range(len(sample_s) - 1):
        seg = sample_s[k + 1] - sample_s[k]
        n_sub = max(1, math.ceil(seg / step - 1e-12))
        h = seg / n_sub
        try:
            for _ in range(n_sub):
                k1 = rhs(z)
                k2 = rhs(z + 0.5 * h * k1)
                k3 = rhs(z + 0.5 * h * k2)
                k4 = rhs(z + h * k3)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                check_domain(spec, EndPair(z[:2], z[2:]))
        except (DomainError, SingularityError):
            truncated = True
            break
        pairs.append(EndPair(z[:2], z[2:]))
        s_done.append(sample_s[k + 1])
    return FlowResult(s_values=np.array(s_done), pairs=tuple(pairs),
                      truncated=truncated)


@dataclass(frozen=True)
class KeplerChordArc:
    """End velocities of one analytic flat-Kepler orbit through a pair.

    The orbit is the conic ``alpha x + beta y = r - C^2``; the velocities
    follow from the angular momentum and eccentricity-vector integrals and
    hold without any numerical integration.
    """

    v_a: np.ndarray
    v_b: np.ndarray
    C: float
    alpha: float
    beta: float


def arcs_through_flat_kepler(a, b, beta: float) -> KeplerChordArc | None:
    """Solve the orbit-family constraints for a given ``beta``.

    The two affine conditions ``alpha x + beta y + C^2 = r`` at the ends
    determine ``(alpha, C^2)``; a positive ``C^2`` yields the end
    velocities of a Keplerian orbit through both points (the ``C > 0``
    branch; negate both velocities for the other).  Returns ``None`` when
    the requested ``beta`` gives ``C^2 <= 0``.

    Raises ``DomainError`` when the pair is collinear with the centre (only
    rectilinear orbits connect it) or when the ends share the same ``x``
    (this parametrization of the family degenerates).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ra = float(np.linalg.norm(a))
    rb = float(np.linalg.norm(b))
    if ra < 1e-12 or rb < 1e-12:
        raise SingularityError("end point at the centre")
    scale = max(ra, rb)
    if abs(a[0] * b[1] - a[1] * b[0]) < 1e-12 * scale * scale:
        raise DomainError("ends collinear with the centre: only rectilinear orbits")
    if abs(a[0] - b[0]) < 1e-12 * scale:
        raise DomainError("ends share their x coordinate: family not "
                          "parametrizable by beta")
    alpha = (ra - rb - beta * (a[1] - b[1])) / (a[0] - b[0])
    c2 = ra - beta * a[1] - alpha * a[0]
    if c2 <= 0.0:
        return None
    c = float(np.sqrt(c2))
    v_a = np.array([beta - a[1] / ra, -alpha + a[0] / ra]) / c
    v_b = np.array([beta - b[1] / rb, -alpha + b[0] / rb]) / c
    return KeplerChordArc(v_a=v_a, v_b=v_b, C=c, alpha=float(alpha), beta=beta)
