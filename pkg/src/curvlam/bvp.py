"""Two-point boundary-value solver by shooting.

Given end points A, B and a total energy H, find an arc of the system from
A to B with that energy.  The energy is enforced analytically at departure
(the speed follows from ``|v|^2 = 2 (H + U(A))``), leaving two unknowns:
the departure direction angle ``psi`` measured in the chart, and the
elapsed time.  A damped Newton iteration with finite-difference Jacobians
drives the chart miss ``q(dt) - B`` to zero; step caps keep the iteration
on the branch selected by the caller's guess.

:func:`sweep_family` continues an arc with fixed ends through its
one-parameter family parametrized by elapsed time, solving for the full
departure velocity at each prescribed time; the family realizes the
derivative identities dS/d(dt) = -H and dw/dH = dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry, integrate, systems
from .errors import (ConvergenceError, CurvlamError, DomainError,
                     SingularityError, UnreachableEnergyError)
from .geometry import Space
from .integrate import Arc, Tolerances
from .systems import State, SystemSpec

FD_STEP = 1e-7
MAX_PSI_STEP = 0.5
MIN_DT = 1e-5


@dataclass(frozen=True)
class BvpProblem:
    """End points, energy, and a branch-selecting initial guess."""

    spec: SystemSpec
    a: np.ndarray
    b: np.ndarray
    energy: float
    guess: tuple[float, float]  # (psi0, dt0)

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).copy())
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).copy())
        if self.a.shape != (2,) or self.b.shape != (2,):
            raise ValueError("end points must be chart 2-vectors")
        if self.guess[1] <= 0.0:
            raise ValueError("guessed elapsed time must be positive")


@dataclass(frozen=True)
class BvpSolution:
    """Converged arc plus the shooting unknowns that produced it."""

    arc: Arc
    psi: float
    dt: float
    iterations: int
    miss: float


def initial_speed(spec: SystemSpec, a, energy: float) -> float:
    """Departure speed fixed by the energy: sqrt(2 (H + U(A))).

    The speed is geodesic (equals the ambient norm of the velocity for
    curved states).  Raises ``UnreachableEnergyError`` when H + U(A) <= 0.
    """
    u = systems.force_function(spec, np.asarray(a, dtype=float))
    kin2 = 2.0 * (energy + u)
    if kin2 <= 0.0:
        raise UnreachableEnergyError(
            f"energy {energy} leaves no kinetic energy at A (U = {u})")
    return math.sqrt(kin2)


def departure_state(spec: SystemSpec, a, psi: float, speed: float) -> State:
    """State leaving chart point ``a`` in chart direction ``psi`` with the
    given geodesic speed."""
    a = np.asarray(a, dtype=float)
    d = np.array([math.cos(psi), math.sin(psi)])
    if spec.space is Space.FLAT:
        return State(a, speed * d)
    g = geometry.metric(spec.space, a)
    w = (speed / math.sqrt(float(d @ g @ d))) * d
    u, v = geometry.chart_velocity_to_ambient(spec.space, a, w)
    return State(u, v)


def _end_chart(spec: SystemSpec, start: State, dt: float,
               tol: Tolerances) -> np.ndarray:
    q_end, _, _, _ = integrate.propagate_raw(spec, start.q, start.v, dt, tol)
    if spec.space is Space.FLAT:
        return q_end
    return geometry.ambient_to_chart(spec.space, q_end)


def solve_arc(problem: BvpProblem, tol: Tolerances | None = None,
              miss_tol: float = 1e-10, max_iter: int = 100) -> BvpSolution:
    """Shoot for an arc from A to B at the prescribed energy.

    Newton on (psi, dt) with central finite-difference Jacobians; steps are
    capped at 0.5 rad in psi and half the guessed time in dt so the
    iteration cannot hop branches, and are halved when a trial leaves the
    domain or makes the miss much worse.  Raises ``ConvergenceError`` after
    ``max_iter`` iterations.
    """
    tol = tol or integrate.DEFAULT_TOL
    spec = problem.spec
    speed = initial_speed(spec, problem.a, problem.energy)
    max_dt_step = 0.5 * problem.guess[1]

    def miss_of(z):
        start = departure_state(spec, problem.a, z[0], speed)
        return _end_chart(spec, start, z[1], tol) - problem.b

    z = np.array([problem.guess[0], problem.guess[1]], dtype=float)
    m = miss_of(z)
    m_norm = float(np.linalg.norm(m))
    for iteration in range(1, max_iter + 1):
        if m_norm <= miss_tol:
            start = departure_state(spec, problem.a, z[0], speed)
            arc = integrate.propagate(spec, start, z[1], tol=tol)
            return BvpSolution(arc=arc, psi=float(z[0]), dt=float(z[1]),
                               iterations=iteration - 1, miss=m_norm)
        jac = np.empty((2, 2))
        for i in range(2):
            dz = np.zeros(2)
            dz[i] = FD_STEP
            jac[:, i] = (miss_of(z + dz) - miss_of(z - dz)) / (2.0 * FD_STEP)
        try:
            delta = np.linalg.solve(jac, -m)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular shooting Jacobian") from exc
        delta[0] = float(np.clip(delta[0], -MAX_PSI_STEP, MAX_PSI_STEP))
        delta[1] = float(np.clip(delta[1], -max_dt_step, max_dt_step))

        accepted = False
        scale = 1.0
        for _ in range(8):
            z_try = z + scale * delta
            z_try[1] = max(z_try[1], MIN_DT)
            try:
                m_try = miss_of(z_try)
            except CurvlamError:
                scale *= 0.5
                continue
            m_try_norm = float(np.linalg.norm(m_try))
            if m_try_norm <= max(2.0 * m_norm, miss_tol):
                z, m, m_norm = z_try, m_try, m_try_norm
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"shooting stalled at miss {m_norm:.3e} (iteration {iteration})")
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (miss {m_norm:.3e})")


def seed_guess(spec: SystemSpec, a, b, energy: float,
               n_psi: int = 24, dt_max: float = 8.0,
               n_dt: int = 32) -> tuple[float, float]:
    """Coarse scan for a shooting guess: march one cheap trajectory per
    departure direction and keep the (psi, dt) with the smallest chart miss."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    speed = initial_speed(spec, a, energy)
    coarse = Tolerances(rel=1e-6, abs=1e-8, max_step=0.25)
    dts = np.linspace(dt_max / n_dt, dt_max, n_dt)
    best = (math.inf, 0.0, dts[0])
    for psi in np.linspace(0.0, 2.0 * math.pi, n_psi, endpoint=False):
        state = departure_state(spec, a, psi, speed)
        q, v = state.q, state.v
        t_prev = 0.0
        for t_next in dts:
            try:
                q, v, _, _ = integrate.propagate_raw(
                    spec, q, v, t_next - t_prev, coarse)
            except CurvlamError:
                break
            t_prev = t_next
            try:
                p = (q if spec.space is Space.FLAT
                     else geometry.ambient_to_chart(spec.space, q))
            except DomainError:
                continue
            miss = float(np.linalg.norm(p - b))
            if miss < best[0]:
                best = (miss, psi, t_next)
    if not math.isfinite(best[0]):
        raise ConvergenceError("seed scan found no candidate arc")
    return best[1], best[2]


@dataclass(frozen=True)
class FamilyMember:
    """One fixed-ends arc of the family parametrized by elapsed time."""

    dt: float
    energy: float
    action: float
    maupertuis: float
    v_a: np.ndarray  # chart departure velocity
    iterations: int


def _solve_fixed_time(spec: SystemSpec, a, b, dt: float, w_guess,
                      tol: Tolerances, miss_tol: float,
                      max_iter: int) -> tuple[np.ndarray, int]:
    """Newton in the chart departure velocity for a fixed elapsed time."""
    w = np.asarray(w_guess, dtype=float).copy()

    def miss_of(w_trial):
        start = systems.flat_state(spec, a, w_trial)
        return _end_chart(spec, start, dt, tol) - b

    m = miss_of(w)
    m_norm = float(np.linalg.norm(m))
    for iteration in range(1, max_iter + 1):
        if m_norm <= miss_tol:
            return w, iteration - 1
        jac = np.empty((2, 2))
        for i in range(2):
            dw = np.zeros(2)
            dw[i] = FD_STEP
            jac[:, i] = (miss_of(w + dw) - miss_of(w - dw)) / (2.0 * FD_STEP)
        try:
            delta = np.linalg.solve(jac, -m)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                "degenerate endpoint Jacobian: fixed-ends family stalls") from exc
        cap = 0.5 * (1.0 + float(np.linalg.norm(w)))
        norm = float(np.linalg.norm(delta))
        if norm > cap:
            delta *= cap / norm
        scale = 1.0
        accepted = False
        for _ in range(8):
            try:
                m_try = miss_of(w + scale * delta)
            except CurvlamError:
                scale *= 0.5
                continue
            m_try_norm = float(np.linalg.norm(m_try))
            if m_try_norm <= max(2.0 * m_norm, miss_tol):
                w = w + scale * delta
                m, m_norm = m_try, m_try_norm
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"fixed-time shot stalled at miss {m_norm:.3e}")
    raise ConvergenceError(
        f"fixed-time shot: no convergence after {max_iter} iterations")


def sweep_family(spec: SystemSpec, a, b, dts, seed_velocity,
                 seed_index: int = 0,
                 tol: Tolerances | None = None,
                 miss_tol: float = 1e-11,
                 max_iter: int = 50) -> list[FamilyMember]:
    """Continue the fixed-ends arc family over the elapsed times ``dts``.

    ``seed_velocity`` is an approximate chart departure velocity for the
    member at ``dts[seed_index]``; continuation proceeds outward in both
    directions, warm-starting each solve from its neighbour.  Members come
    back sorted by ``dt``.
    """
    tol = tol or Tolerances(rel=1e-12, abs=1e-14)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dts = np.asarray(dts, dtype=float)
    if np.any(dts <= 0.0):
        raise ValueError("family times must be positive")

    members: dict[int, FamilyMember] = {}

    def solve_at(i: int, w_guess) -> np.ndarray:
        w, iters = _solve_fixed_time(spec, a, b, float(dts[i]), w_guess,
                                     tol, miss_tol, max_iter)
        start = systems.flat_state(spec, a, w)
        arc = integrate.propagate(spec, start, float(dts[i]), tol=tol)
        members[i] = FamilyMember(
            dt=float(dts[i]),
            energy=systems.total_energy(spec, start),
            action=arc.action,
            maupertuis=arc.maupertuis,
            v_a=w,
            iterations=iters,
        )
        return w

    w_seed = solve_at(seed_index, seed_velocity)
    w = w_seed
    for i in range(seed_index + 1, len(dts)):
        w = solve_at(i, w)
    w = w_seed
    for i in range(seed_index - 1, -1, -1):
        w = solve_at(i, w)
    return [members[i] for i in sorted(members)]
