"""Executable harness: invariance experiments and command-line wrappers.

The central experiment (:func:`run_theorem_check`) flows an end pair along
a Lambert field, re-solves the boundary-value problem at a fixed energy at
each flow sample (warm-starting from the previous solution so every sample
stays on one arc branch), and reports the spreads of elapsed time and both
action integrals.  For a genuine Lambert field those spreads sit at
integration-noise level; the perturbed control field demonstrates that the
test has power.

Subcommands: ``propagate``, ``project``, ``flow``, ``solve``, ``verify``.
Exit codes: 0 success/pass, 1 experiment failure, 2 usage error.  The
``CURVLAM_LOG`` environment variable (error|warn|info|debug) controls
diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import appell, bvp, integrate, lambert, systems
from .errors import ConvergenceError, CurvlamError
from .geometry import Space
from .integrate import Tolerances
from .lambert import EndPair, FieldFn, LambertVector
from .systems import SystemSpec

log = logging.getLogger("curvlam")

SCHEMA_VERSION = 1
DEFAULT_SPREAD_TOL = 1e-6
DEFAULT_DRIFT_TOL = 1e-9

FIELD_NAMES = ("lambert", "trivial", "perturbed")


@dataclass(frozen=True)
class ExperimentConfig:
    """One invariance experiment: system, end pair, energy, and flow."""

    problem: str
    space: str
    a: tuple[float, float]
    b: tuple[float, float]
    energy: float
    flow_span: float
    n_samples: int = 20
    force_sign: int = 1
    seed: int = 0
    tol_rel: float = 1e-10
    tol_abs: float = 1e-12
    guess: tuple[float, float] | None = None
    field: str = "lambert"
    spread_tol: float = DEFAULT_SPREAD_TOL
    drift_tol: float = DEFAULT_DRIFT_TOL

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be at least 2")
        if self.flow_span <= 0.0:
            raise ValueError("flow_span must be positive")
        if self.field not in FIELD_NAMES:
            raise ValueError(f"field must be one of {FIELD_NAMES}")
        SystemSpec.parse(f"{self.problem}:{self.space}", self.force_sign)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("a", "b"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        if kwargs.get("guess") is not None:
            kwargs["guess"] = tuple(float(v) for v in kwargs["guess"])
        return cls(**kwargs)

    @property
    def spec(self) -> SystemSpec:
        return SystemSpec.parse(f"{self.problem}:{self.space}", self.force_sign)

    @property
    def tolerances(self) -> Tolerances:
        return Tolerances(rel=self.tol_rel, abs=self.tol_abs)


@dataclass
class Report:
    """Machine-readable result of one experiment."""

    config: dict
    rows: list[dict]
    summary: dict
    schema: int = SCHEMA_VERSION
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def passed(self) -> bool:
        return bool(self.summary["pass"])


def experiment_field(cfg_field: str, spec: SystemSpec) -> FieldFn:
    """The end-pair field an experiment flows along.

    ``lambert``: the system's Lambert field.  ``trivial``: the rotational
    symmetry field.  ``perturbed``: the trivial field plus a translation of
    A only, which is deliberately not a Lambert field and serves as the
    negative control.
    """
    if cfg_field == "lambert":
        return lambda pair: lambert.lambert_vector(spec, pair)
    if cfg_field == "trivial":
        return lambert.trivial_lambert_vector

    def perturbed(pair: EndPair) -> LambertVector:
        vec = lambert.trivial_lambert_vector(pair)
        return LambertVector(da=vec.da + np.array([1.0, 0.0]), db=vec.db)
    return perturbed


def relative_spread(values) -> float:
    """(max - min) scaled by max(1, |mean|): relative for order-one data,
    absolute for data that happens to sit near zero."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return float("nan")
    scale = max(1.0, abs(float(values.mean())))
    return float((values.max() - values.min()) / scale)


def run_theorem_check(cfg: ExperimentConfig) -> Report:
    """Flow the end pair, re-solve the arc at fixed energy at every sample,
    and summarize the spreads the invariance theorems predict to vanish."""
    spec = cfg.spec
    tol = cfg.tolerances
    pair0 = EndPair(np.array(cfg.a), np.array(cfg.b))
    flow = lambert.lambert_flow(spec, pair0, cfg.flow_span,
                                n_samples=cfg.n_samples,
                                field=experiment_field(cfg.field, spec))
    if flow.truncated:
        log.warning("flow left the domain after s = %.4g", flow.s_values[-1])

    if cfg.guess is not None:
        guess = (float(cfg.guess[0]), float(cfg.guess[1]))
    else:
        guess = bvp.seed_guess(spec, pair0.a, pair0.b, cfg.energy)
        log.info("seed scan guess: psi = %.4f, dt = %.4f", *guess)

    rows = []
    inv0 = None
    for s_val, pair in zip(flow.s_values, flow.pairs):
        inv = lambert.invariant_pair(spec, pair)
        if inv0 is None:
            inv0 = inv
        row = {
            "s": float(s_val),
            "a": [float(pair.a[0]), float(pair.a[1])],
            "b": [float(pair.b[0]), float(pair.b[1])],
            "invariant_chord": inv.chord,
            "invariant_second": inv.second,
            "converged": False,
            "dt": None,
            "action": None,
            "maupertuis": None,
            "defect": None,
            "iterations": None,
        }
        try:
            sol = bvp.solve_arc(
                bvp.BvpProblem(spec, pair.a, pair.b, cfg.energy, guess),
                tol=tol, miss_tol=1e-11)
        except CurvlamError as exc:
            log.warning("sample s = %.4g failed to converge: %s", s_val, exc)
            rows.append(row)
            continue
        guess = (sol.psi, sol.dt)
        vec = lambert.lambert_vector(spec, pair)
        row.update({
            "converged": True,
            "dt": sol.dt,
            "action": sol.arc.action,
            "maupertuis": sol.arc.maupertuis,
            "defect": lambert.arc_defect(sol.arc, vec),
            "iterations": sol.iterations,
        })
        rows.append(row)

    good = [r for r in rows if r["converged"]]
    n_good = len(good)
    summary = {
        "system": spec.label,
        "field": cfg.field,
        "energy": cfg.energy,
        "n_samples": len(rows),
        "n_converged": n_good,
        "flow_truncated": flow.truncated,
        "dt_rel_spread": relative_spread([r["dt"] for r in good]),
        "action_rel_spread": relative_spread([r["action"] for r in good]),
        "maupertuis_rel_spread": relative_spread(
            [r["maupertuis"] for r in good]),
        "invariant_chord_drift": float(max(
            abs(r["invariant_chord"] - rows[0]["invariant_chord"])
            for r in rows)),
        "invariant_second_drift": float(max(
            abs(r["invariant_second"] - rows[0]["invariant_second"])
            for r in rows)),
        "max_defect": max((r["defect"] for r in good), default=None),
    }
    enough = n_good >= max(2, cfg.n_samples // 2)
    summary["pass"] = bool(
        enough
        and summary["dt_rel_spread"] <= cfg.spread_tol
        and summary["action_rel_spread"] <= cfg.spread_tol
        and summary["maupertuis_rel_spread"] <= cfg.spread_tol
        and summary["invariant_chord_drift"] <= cfg.drift_tol
        and summary["invariant_second_drift"] <= cfg.drift_tol)
    return Report(config=asdict(cfg), rows=rows, summary=summary)


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------

def _parse_vec2(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        parts = []
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected two comma-separated numbers, got {text!r}")
    return np.array(parts)


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True,
                   help="system as problem:space, e.g. kepler:flat")
    p.add_argument("--force-sign", type=int, default=1, choices=(1, -1),
                   help="+1 attractive (default), -1 repulsive")


def _add_tol_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-rel", type=float, default=1e-10)
    p.add_argument("--tol-abs", type=float, default=1e-12)


def _spec_of(args) -> SystemSpec:
    return SystemSpec.parse(args.spec, args.force_sign)


def _tol_of(args) -> Tolerances:
    return Tolerances(rel=args.tol_rel, abs=args.tol_abs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvlam",
        description="Kepler/Hooke dynamics on constant-curvature planes and "
                    "Lambert-invariance experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="propagate a state, optionally to CSV")
    _add_spec_args(p)
    _add_tol_args(p)
    p.add_argument("--q", type=_parse_vec2, required=True,
                   help="chart position x,y")
    p.add_argument("--v", type=_parse_vec2, required=True,
                   help="chart velocity vx,vy")
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--samples", type=int, default=None,
                   help="uniform sample count (default: integrator steps)")
    p.add_argument("--csv", type=Path, default=None)

    p = sub.add_parser("project",
                       help="check a flat arc against its curved image")
    _add_spec_args(p)
    _add_tol_args(p)
    p.add_argument("--target", required=True, choices=("sphere", "hyperbolic"))
    p.add_argument("--q", type=_parse_vec2, required=True)
    p.add_argument("--v", type=_parse_vec2, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--tol", type=float, default=1e-7,
                   help="endpoint residual giving exit status 1")

    p = sub.add_parser("flow", help="integrate a Lambert flow, optionally to CSV")
    _add_spec_args(p)
    p.add_argument("--a", type=_parse_vec2, required=True)
    p.add_argument("--b", type=_parse_vec2, required=True)
    p.add_argument("--span", type=float, required=True)
    p.add_argument("--step", type=float, default=lambert.FLOW_STEP)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--field", choices=FIELD_NAMES, default="lambert")
    p.add_argument("--csv", type=Path, default=None)

    p = sub.add_parser("solve", help="two-point boundary solve at fixed energy")
    _add_spec_args(p)
    _add_tol_args(p)
    p.add_argument("--a", type=_parse_vec2, required=True)
    p.add_argument("--b", type=_parse_vec2, required=True)
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--guess", type=_parse_vec2, default=None,
                   help="psi,dt shooting guess (default: coarse scan)")

    p = sub.add_parser("verify", help="run invariance experiments from JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--csv-dir", type=Path, default=None)

    return parser


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_propagate(args) -> int:
    spec = _spec_of(args)
    state = systems.flat_state(spec, args.q, args.v)
    sample_times = (np.linspace(0.0, args.dt, args.samples)
                    if args.samples else None)
    arc = integrate.propagate(spec, state, args.dt, tol=_tol_of(args),
                              sample_times=sample_times)
    if args.csv:
        integrate.write_csv(arc, args.csv)
    _emit({
        "spec": spec.label,
        "dt": arc.dt,
        "end_q": arc.end.q.tolist(),
        "end_v": arc.end.v.tolist(),
        "energy": arc.energy,
        "action": arc.action,
        "maupertuis": arc.maupertuis,
        "n_samples": len(arc.samples),
        "csv": str(args.csv) if args.csv else None,
    })
    return 0


def _cmd_project(args) -> int:
    spec = _spec_of(args)
    if spec.space is not Space.FLAT:
        print("project: --spec must be a flat system", file=sys.stderr)
        return 2
    tol = _tol_of(args)
    state = systems.State(args.q, args.v)
    arc = integrate.propagate(spec, state, args.dt, tol=tol)
    pmap = appell.ProjectionMap(Space(args.target))
    check = appell.verify_projection(arc, pmap, tol=tol,
                                     n_samples=args.samples)
    _emit({
        "spec": spec.label,
        "target": args.target,
        "dt_flat": arc.dt,
        "dt_curved": check.dt_curved,
        "endpoint_residual": check.endpoint_residual,
        "max_sample_residual": check.max_sample_residual,
        "tolerance": args.tol,
    })
    return 0 if check.endpoint_residual <= args.tol else 1


def _cmd_flow(args) -> int:
    spec = _spec_of(args)
    result = lambert.lambert_flow(
        spec, EndPair(args.a, args.b), args.span, step=args.step,
        n_samples=args.samples, field=experiment_field(args.field, spec))
    invs = [lambert.invariant_pair(spec, p) for p in result.pairs]
    if args.csv:
        lines = ["s,a_x,a_y,b_x,b_y,invariant1,invariant2"]
        for s_val, pair, inv in zip(result.s_values, result.pairs, invs):
            lines.append(",".join(
                f"{v:.17g}" for v in
                (s_val, *pair.a, *pair.b, inv.chord, inv.second)))
        args.csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit({
        "spec": spec.label,
        "field": args.field,
        "n_pairs": len(result.pairs),
        "truncated": result.truncated,
        "chord_drift": max(abs(i.chord - invs[0].chord) for i in invs),
        "second_drift": max(abs(i.second - invs[0].second) for i in invs),
        "csv": str(args.csv) if args.csv else None,
    })
    return 0


def _cmd_solve(args) -> int:
    spec = _spec_of(args)
    tol = _tol_of(args)
    if args.guess is not None:
        guess = (float(args.guess[0]), float(args.guess[1]))
    else:
        guess = bvp.seed_guess(spec, args.a, args.b, args.energy)
    try:
        sol = bvp.solve_arc(
            bvp.BvpProblem(spec, args.a, args.b, args.energy, guess), tol=tol)
    except CurvlamError as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 1
    pair, v_a, v_b = lambert.arc_end_data(sol.arc)
    _emit({
        "spec": spec.label,
        "energy_requested": args.energy,
        "energy": sol.arc.energy,
        "psi": sol.psi,
        "dt": sol.dt,
        "v_a": v_a.tolist(),
        "v_b": v_b.tolist(),
        "action": sol.arc.action,
        "maupertuis": sol.arc.maupertuis,
        "miss": sol.miss,
        "iterations": sol.iterations,
    })
    return 0


def _write_report_csvs(report: Report, directory: Path, tag: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["s,a_x,a_y,b_x,b_y,invariant1,invariant2,dt,action,maupertuis,"
             "defect,iterations,converged"]
    for r in report.rows:
        vals = (r["s"], *r["a"], *r["b"], r["invariant_chord"],
                r["invariant_second"], r["dt"], r["action"], r["maupertuis"],
                r["defect"], r["iterations"], int(r["converged"]))
        lines.append(",".join(
            "" if v is None else (f"{v:.17g}" if isinstance(v, float) else str(v))
            for v in vals))
    (directory / f"{tag}.csv").write_text("\n".join(lines) + "\n",
                                          encoding="utf-8")


def _cmd_verify(args) -> int:
    try:
        data = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    if isinstance(data, dict) and "experiments" in data:
        entries = data["experiments"]
    elif isinstance(data, list):
        entries = data
    else:
        entries = [data]
    try:
        configs = [ExperimentConfig.from_dict(e) for e in entries]
    except (TypeError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2

    reports = []
    for i, cfg in enumerate(configs):
        try:
            report = run_theorem_check(cfg)
        except CurvlamError as exc:
            print(f"experiment {i} ({cfg.spec.label}) failed: {exc}",
                  file=sys.stderr)
            return 1
        reports.append(report)
        if args.csv_dir:
            _write_report_csvs(report, args.csv_dir, f"experiment_{i:03d}")

    if len(reports) == 1:
        print(reports[0].to_json())
    else:
        _emit({"schema": SCHEMA_VERSION,
               "reports": [r.to_dict() for r in reports]})
    return 0 if all(r.passed for r in reports) else 1


_COMMANDS = {
    "propagate": _cmd_propagate,
    "project": _cmd_project,
    "flow": _cmd_flow,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
}

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging() -> None:
    level = os.environ.get("CURVLAM_LOG", "warn").lower()
    logging.basicConfig(stream=sys.stderr,
                        level=_LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CurvlamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
