"""Orbit propagation with simultaneous action accumulation.

The equations of motion are integrated with an adaptive Dormand-Prince-type
embedded pair (scipy's DOP853), augmented with quadrature variables for the
Lagrangian action ``S = integral L dt`` and the Maupertuis action
``w = integral 2T dt`` so that both are accumulated under the same error
control as the trajectory.  Curved states are rescaled onto their quadric
(and velocities re-tangented) after every accepted step; the residual drift
is bounded by tests, not trusted.

Samples between accepted steps come from cubic Hermite interpolation, good
to about 1e-6, which suffices for export; interpolated curved samples are
projected back onto the quadric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853

from . import geometry, systems
from .errors import ConvergenceError, SingularityError
from .geometry import Space
from .systems import Problem, State, SystemSpec

_GUARD = systems.SINGULARITY_RADIUS


@dataclass(frozen=True)
class Tolerances:
    """Integration accuracy knobs."""

    rel: float = 1e-10
    abs: float = 1e-12
    max_step: float = 0.1

    def __post_init__(self):
        if min(self.rel, self.abs, self.max_step) <= 0.0:
            raise ValueError("tolerances must be positive")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Arc:
    """A propagated orbit segment with its action integrals.

    ``action`` is the Lagrangian action (integral of L), ``maupertuis`` the
    Maupertuis action (integral of 2T); they satisfy
    ``maupertuis = action + H * dt`` up to integration error.  ``extras``
    holds the final values of any caller-supplied quadratures.
    """

    spec: SystemSpec
    start: State
    end: State
    dt: float
    action: float
    maupertuis: float
    times: np.ndarray
    samples: tuple[State, ...]
    sample_actions: np.ndarray
    extras: np.ndarray | None = None
    sample_extras: np.ndarray | None = None

    @property
    def energy(self) -> float:
        return systems.total_energy(self.spec, self.start)


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def _rhs_factory(spec: SystemSpec, quads):
    """Specialised time-derivative of the augmented state
    ``[q, v, S, w, extras...]`` for one system."""
    sign = float(spec.force_sign)
    kepler = spec.problem is Problem.KEPLER
    nq = len(quads)

    if spec.space is Space.FLAT:
        def rhs(t, y):
            x, yy, vx, vy = y[0], y[1], y[2], y[3]
            vv = vx * vx + vy * vy
            r2 = x * x + yy * yy
            if kepler:
                r3 = max(math.sqrt(r2) * r2, 1e-300)
                ax, ay = -sign * x / r3, -sign * yy / r3
                lag = 0.5 * vv + sign / max(math.sqrt(r2), 1e-300)
            else:
                ax, ay = -sign * x, -sign * yy
                lag = 0.5 * vv - sign * 0.5 * r2
            out = np.empty(6 + nq)
            out[0], out[1], out[2], out[3] = vx, vy, ax, ay
            out[4], out[5] = lag, vv
            for i, f in enumerate(quads):
                out[6 + i] = f(y[0:2], y[2:4])
            return out
        return rhs

    hyperbolic = spec.space is Space.HYPERBOLIC

    def rhs(t, y):
        u1, u2, u3 = y[0], y[1], y[2]
        v1, v2, v3 = y[3], y[4], y[5]
        perp2 = u1 * u1 + u2 * u2
        perp = max(math.sqrt(perp2), 1e-300)
        if hyperbolic:
            vv = v1 * v1 + v2 * v2 - v3 * v3
            if kepler:
                fp = -sign / perp ** 3
                lag = 0.5 * vv + sign * u3 / perp
            else:
                fp = -sign / u3 ** 3
                lag = 0.5 * vv - sign * 0.5 * perp2 / (u3 * u3)
            # tangent gradient of f(u3) plus radial reaction lambda = <v,v>_M
            coeff = fp * u3 + vv
            a1, a2, a3 = coeff * u1, coeff * u2, coeff * u3 - fp
        else:
            vv = v1 * v1 + v2 * v2 + v3 * v3
            if kepler:
                fp = sign / perp ** 3
                lag = 0.5 * vv + sign * u3 / perp
            else:
                c3 = max(abs(u3), 1e-300) ** 3 * math.copysign(1.0, u3)
                fp = sign / c3
                lag = 0.5 * vv - sign * 0.5 * perp2 / (u3 * u3)
            # tangent gradient plus radial reaction lambda = -<v,v>
            coeff = -(fp * u3 + vv)
            a1, a2, a3 = coeff * u1, coeff * u2, coeff * u3 + fp
        out = np.empty(8 + nq)
        out[0], out[1], out[2] = v1, v2, v3
        out[3], out[4], out[5] = a1, a2, a3
        out[6], out[7] = lag, vv
        for i, f in enumerate(quads):
            out[8 + i] = f(y[0:3], y[3:6])
        return out
    return rhs


def _check_singular(spec: SystemSpec, q) -> None:
    perp = math.hypot(q[0], q[1])
    if spec.problem is Problem.KEPLER:
        if perp < _GUARD:
            raise SingularityError(
                f"{spec.label}: close approach within {_GUARD} of the centre")
    elif spec.space is Space.SPHERE and abs(q[2]) < _GUARD:
        raise SingularityError(
            f"{spec.label}: trajectory reached the equatorial singularity")


def _project_inplace(space: Space, y: np.ndarray, d: int) -> None:
    q = geometry.project_to_quadric(space, y[:d])
    y[:d] = q
    y[d:2 * d] = geometry.tangent_project(space, q, y[d:2 * d])


def _run(spec: SystemSpec, q0, v0, dt: float, tol: Tolerances,
         quads=(), record: bool = False):
    """Integrate the augmented system over local time [0, dt].

    Returns ``(y_end, nodes)`` where ``nodes`` is a list of
    ``(t, y.copy(), f.copy())`` at accepted steps when ``record`` is set.
    """
    if dt <= 0.0:
        raise ValueError("propagation requires dt > 0")
    d = 2 if spec.space is Space.FLAT else 3
    rhs = _rhs_factory(spec, quads)
    y0 = np.concatenate([q0, v0, np.zeros(2 + len(quads))])
    _check_singular(spec, y0)
    solver = DOP853(rhs, 0.0, y0, dt,
                    rtol=tol.rel, atol=tol.abs, max_step=tol.max_step)
    nodes = None
    if record:
        nodes = [(0.0, y0.copy(), rhs(0.0, y0))]
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            q = solver.y[:d]
            perp = math.hypot(q[0], q[1])
            if (spec.problem is Problem.KEPLER and perp < 1e-4) or (
                    spec.problem is Problem.HOOKE
                    and spec.space is Space.SPHERE and abs(q[2]) < 1e-4):
                raise SingularityError(
                    f"{spec.label}: step size underflow near a singularity")
            raise ConvergenceError(f"integrator failed: {msg}")
        y = solver.y
        if spec.space is not Space.FLAT:
            y = y.copy()
            _project_inplace(spec.space, y, d)
            solver.y = y
            solver.f = rhs(solver.t, y)
        _check_singular(spec, y)
        if record:
            f = solver.f if spec.space is not Space.FLAT else rhs(solver.t, y)
            nodes.append((solver.t, y.copy(), f.copy()))
    return solver.y, nodes


def propagate_raw(spec: SystemSpec, q0, v0, dt: float,
                  tol: Tolerances | None = None):
    """Low-level propagation: returns ``(q_end, v_end, action, maupertuis)``
    without building sample states.  Used heavily by shooting iterations."""
    tol = tol or DEFAULT_TOL
    d = 2 if spec.space is Space.FLAT else 3
    y, _ = _run(spec, np.asarray(q0, float), np.asarray(v0, float), dt, tol)
    return y[:d], y[d:2 * d], float(y[2 * d]), float(y[2 * d + 1])


def _hermite(t, t0, y0, f0, t1, y1, f1):
    h = t1 - t0
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


def propagate(spec: SystemSpec, start: State, dt: float,
              tol: Tolerances | None = None,
              sample_times=None,
              extra_quadratures=()) -> Arc:
    """Propagate a state for time ``dt > 0`` and return the resulting arc.

    Parameters
    ----------
    spec : SystemSpec
    start : State
        Chart state (flat) or ambient quadric state (curved).
    dt : float
        Elapsed time; must be positive.
    tol : Tolerances, optional
    sample_times : array_like, optional
        Local times in ``[0, dt]`` at which samples are interpolated.  When
        omitted, samples sit at the integrator's accepted steps.
    extra_quadratures : sequence of callables ``(q, v) -> float``, optional
        Additional integrands accumulated alongside the actions; their final
        values land in ``Arc.extras`` and per-sample values in
        ``Arc.sample_extras``.

    Raises
    ------
    SingularityError
        On close approach to a force singularity.
    ConvergenceError
        On step-size underflow away from singularities.
    """
    tol = tol or DEFAULT_TOL
    systems.check_state(spec, start)
    d = spec.dim
    y_end, nodes = _run(spec, start.q, start.v, dt, tol,
                        quads=tuple(extra_quadratures), record=True)

    n_extra = len(extra_quadratures)
    if sample_times is None:
        local_times = np.array([n[0] for n in nodes])
        rows = np.array([n[1] for n in nodes])
    else:
        local_times = np.asarray(sample_times, dtype=float)
        if local_times.size and (local_times.min() < -1e-12
                                 or local_times.max() > dt + 1e-12):
            raise ValueError("sample_times must lie within [0, dt]")
        node_t = np.array([n[0] for n in nodes])
        rows = np.empty((local_times.size, y_end.size))
        for k, t in enumerate(local_times):
            i = int(np.clip(np.searchsorted(node_t, t, side="right") - 1,
                            0, len(nodes) - 2))
            t0, y0, f0 = nodes[i]
            t1, y1, f1 = nodes[i + 1]
            row = _hermite(min(t, dt), t0, y0, f0, t1, y1, f1)
            if spec.space is not Space.FLAT:
                _project_inplace(spec.space, row, d)
            rows[k] = row

    samples = tuple(
        State(rows[k, :d], rows[k, d:2 * d], start.t + local_times[k])
        for k in range(len(local_times)))
    sample_actions = rows[:, 2 * d:2 * d + 2].copy()
    sample_extras = rows[:, 2 * d + 2:].copy() if n_extra else None

    end = State(y_end[:d], y_end[d:2 * d], start.t + dt)
    return Arc(
        spec=spec,
        start=start,
        end=end,
        dt=float(dt),
        action=float(y_end[2 * d]),
        maupertuis=float(y_end[2 * d + 1]),
        times=start.t + local_times,
        samples=samples,
        sample_actions=sample_actions,
        extras=y_end[2 * d + 2:].copy() if n_extra else None,
        sample_extras=sample_extras,
    )


def endpoint_jacobian(spec: SystemSpec, start: State, dt: float,
                      tol: Tolerances | None = None,
                      step: float = 1e-6) -> tuple[np.ndarray, float]:
    """Sensitivity of the final configuration to the initial velocity.

    Central finite differences of the chart end position with respect to the
    chart components of the start velocity.  Returns ``(J, det(J))``; a
    vanishing determinant marks arcs around which the fixed-ends family
    parametrized by elapsed time degenerates.
    """
    tol = tol or DEFAULT_TOL
    systems.check_state(spec, start)
    if spec.space is Space.FLAT:
        p, w = start.q, start.v
    else:
        p = geometry.ambient_to_chart(spec.space, start.q)
        w = geometry.ambient_velocity_to_chart(spec.space, start.q, start.v)

    def end_chart(w_trial):
        if spec.space is Space.FLAT:
            q0, v0 = p, w_trial
        else:
            q0, v0 = geometry.chart_velocity_to_ambient(spec.space, p, w_trial)
        y, _ = _run(spec, q0, v0, dt, tol)
        q_end = y[:spec.dim]
        if spec.space is Space.FLAT:
            return q_end
        return geometry.ambient_to_chart(spec.space, q_end)

    jac = np.empty((2, 2))
    for i in range(2):
        dw = np.zeros(2)
        dw[i] = step
        plus = end_chart(w + dw)
        minus = end_chart(w - dw)
        jac[:, i] = (plus - minus) / (2.0 * step)
    return jac, float(np.linalg.det(jac))


def write_csv(arc: Arc, path) -> None:
    """Write the arc's samples as CSV: t,x,y(,z),vx,vy(,vz),H,S,w."""
    d = arc.spec.dim
    if d == 2:
        header = "t,x,y,vx,vy,H,S,w"
    else:
        header = "t,x,y,z,vx,vy,vz,H,S,w"
    lines = [header]
    for k, s in enumerate(arc.samples):
        vals = [s.t, *s.q, *s.v, systems.total_energy(arc.spec, s),
                arc.sample_actions[k, 0], arc.sample_actions[k, 1]]
        lines.append(",".join(f"{v:.17g}" for v in vals))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
