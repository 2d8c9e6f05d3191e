"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 numerical failure. Artifacts are only
written once every one of them has been computed, each through a temporary
file renamed into place.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import analysis, bifurcation, equal_area, stability, tables
from .integrator import IntegrationError, RunConfig, integrate
from .model import ModelError, wrap_angle
from .scenario import ScenarioError, ScenarioSpec, resolve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2

CHIMERA_T_END = 400.0


class InputError(Exception):
    pass


class NumericalFailure(Exception):
    pass


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = field(default_factory=list)
    summary: str = ""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write_artifacts(out_dir: str, files: dict[str, str]) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}-", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def _scenario(args) -> ScenarioSpec:
    try:
        return resolve(args.scenario)
    except ScenarioError as exc:
        raise InputError(str(exc)) from None


def _run_config(spec: ScenarioSpec, args, t_end_default: Optional[float] = None) -> RunConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    elif t_end_default is not None:
        changes["t_end"] = t_end_default
    try:
        return replace(spec.run, **changes)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _integrate(model, cfg):
    try:
        return integrate(model, cfg)
    except IntegrationError as exc:
        last = exc.last_state
        raise NumericalFailure(
            f"{exc}; last finite delta={np.array2string(last.delta, precision=6)} "
            f"ddelta={np.array2string(last.delta_dot, precision=6)}"
        ) from None


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def cmd_simulate(args) -> CommandOutcome:
    spec = _scenario(args)
    model = spec.build_model()
    cfg = _run_config(spec, args)
    traj = _integrate(model, cfg)
    label = analysis.classify_state(traj, model)
    start = analysis.evaluation_start(traj)
    files = {
        "trajectory.csv": tables.trajectory_csv(traj),
        "order_parameter.csv": tables.order_csv(analysis.order_parameter_series(traj, model)),
        "classification.txt": label.record() + "\n",
    }
    compass = "written"
    try:
        files["compass.csv"] = tables.compass_csv(analysis.compass_vectors(traj, start))
    except analysis.NoSteadyStateError:
        compass = "unavailable(no_steady_state)"
    parts = [f"simulate,scenario={spec.name}", f"label={label.label}"]
    if len(model.areas) == 2:
        geo = analysis.area_phase_summary(traj, model, start)
        parts += [f"inter_area={geo.inter:.6g}", f"intra_area={geo.intra:.6g}"]
    parts += [f"converged_at={_fmt(traj.converged_at)}", f"compass={compass}"]
    written = _write_artifacts(args.out, files)
    return CommandOutcome(EXIT_OK, written, ",".join(parts))


def parse_range(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"malformed range {text!r}; expected lo:hi:step") from None
    if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(step)):
        raise InputError(f"malformed range {text!r}")
    if not lo < hi or not step > 0:
        raise InputError(f"empty range {text!r}: need lo < hi and step > 0")
    return lo, hi, step


def cmd_sweep(args) -> CommandOutcome:
    if args.param is None or args.range is None:
        raise InputError("sweep needs --param and --range")
    lo, hi, step = parse_range(args.range)
    spec = _scenario(args)
    model = spec.build_model()
    cfg = _run_config(spec, args, t_end_default=max(spec.run.t_end, bifurcation.SWEEP_T_END))
    try:
        sweep = bifurcation.SweepSpec(args.param, lo, hi, step, run=cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    runner = bifurcation.sweep_r1 if args.param == "r1" else bifurcation.sweep_r2
    try:
        diagram = runner(model, sweep)
    except IntegrationError as exc:
        raise NumericalFailure(str(exc)) from None
    point_rows = [
        [pt.param, pt.label, *pt.r_area, pt.n_roots, pt.spread] for pt in diagram.points
    ]
    header = ["param", "label"] + [f"R_area_{k}" for k in range(1, len(model.areas) + 1)] + [
        "n_roots", "spread_rad",
    ]
    files = {
        "diagram.csv": tables.diagram_csv(diagram),
        "points.csv": tables.render_rows(header, point_rows),
    }
    parts = [f"sweep,scenario={spec.name}", f"param={args.param}", f"points={len(diagram.points)}"]
    if args.param == "r2":
        onset = bifurcation.chimera_onset(diagram)
        files["chimera_onset.txt"] = f"chimera_onset,param={_fmt(onset) if onset is not None else 'none'}\n"
        parts.append(f"chimera_onset={_fmt(onset) if onset is not None else 'none'}")
    else:
        scattered = [pt.param for pt in diagram.points if pt.spread > 0.1]
        parts.append(f"scattered_points={len(scattered)}")
    written = _write_artifacts(args.out, files)
    return CommandOutcome(EXIT_OK, written, ",".join(parts))


def _equilibrium_pattern(model, eq) -> str:
    d = eq.delta_star
    areas = model.areas
    if len(areas) != 2:
        return "other"
    a, b = (model.area_members(x) for x in areas)
    intra = [abs(wrap_angle(d[j] - d[i])) for m in (a, b) for i in m for j in m if i < j]
    inter = [abs(wrap_angle(d[j] - d[i])) for i in a for j in b]
    if intra and max(intra) >= analysis.THETA_IN:
        return "other"
    if all(x < analysis.THETA_IN for x in inter):
        return "in_phase"
    if all(abs(x - np.pi) <= analysis.THETA_PI for x in inter):
        return "pi_state"
    return "traveling_wave"


def cmd_stability(args) -> CommandOutcome:
    spec = _scenario(args)
    model = spec.build_model()
    seed = spec.run.seed if args.seed is None else args.seed
    eqs = stability.solve_equilibria(model, seeds=8, rng_seed=seed)
    if not len(eqs):
        raise NumericalFailure(f"no equilibrium found: {eqs.note}")
    files = {}
    lines = []
    for k, eq in enumerate(eqs, start=1):
        report = stability.classify_modes(stability.eigen(stability.linearize(model, eq)), eq, model)
        stable = stability.is_stable(report)
        pattern = _equilibrium_pattern(model, eq)
        files[f"equilibrium_{k}.csv"] = tables.equilibrium_csv(eq)
        files[f"eigen_{k}.csv"] = tables.eigen_csv(report)
        nonzero = [l.real for l, c in zip(report.eigenvalues, report.mode_class) if c != "zero_mode"]
        lines.append(
            f"equilibrium={k},pattern={pattern},stable={stable},"
            f"max_re={max(nonzero):.6g},residual={eq.residual:.3g}"
        )
    files["stability.txt"] = "\n".join(lines) + "\n"
    stable_pi = [
        ln.split(",")[0].split("=")[1] for ln in lines if "pattern=pi_state" in ln and "stable=True" in ln
    ]
    written = _write_artifacts(args.out, files)
    summary = (
        f"stability,scenario={spec.name},equilibria={len(eqs)},"
        f"frame_velocity={eqs.frame_velocity:.6g},stable_pi_state={'|'.join(stable_pi) or 'none'}"
    )
    return CommandOutcome(EXIT_OK, written, summary)


def cmd_equal_area(args) -> CommandOutcome:
    spec = _scenario(args)
    model = spec.build_model()
    g = args.generator if args.generator is not None else 1
    if not 1 <= g <= model.n:
        raise InputError(f"--generator must lie in 1..{model.n}, got {g}")
    cfg = _run_config(spec, args)
    frozen = _integrate(model, cfg).final_state
    try:
        curve = equal_area.power_angle_curve(model, g - 1, frozen)
    except equal_area.DisconnectedGeneratorError as exc:
        raise NumericalFailure(str(exc)) from None
    files = {"curve.csv": tables.curve_csv(curve), "nodes.csv": tables.nodes_csv(curve)}
    written = _write_artifacts(args.out, files)
    kinds = "|".join(kind for _, kind in curve.nodes) or "none"
    summary = (
        f"equal_area,scenario={spec.name},generator={g},p_mech={curve.p_mech:.6g},"
        f"p_max={curve.p_max:.6g},nodes={kinds}"
    )
    return CommandOutcome(EXIT_OK, written, summary)


def cmd_chimera(args) -> CommandOutcome:
    spec = _scenario(args)
    model = spec.build_model()
    cfg = _run_config(spec, args, t_end_default=CHIMERA_T_END)
    step_at = 250.0 if args.step_at is None else args.step_at
    omega4 = 10.0 if args.omega4 is None else args.omega4
    try:
        run = bifurcation.step_protocol(model, cfg, step_at=step_at, new_omega=omega4)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    except IntegrationError as exc:
        raise NumericalFailure(str(exc)) from None
    traj = run.trajectory
    series = analysis.order_parameter_series(traj, model)
    files = {
        "trajectory.csv": tables.trajectory_csv(traj),
        "order_parameter.csv": tables.order_csv(series),
    }
    t = traj.t
    before = (t >= max(t[0], step_at - 50.0)) & (t < step_at)
    after = t >= step_at
    parts = [f"chimera,scenario={spec.name},step_at={step_at:g},omega4={omega4:g}"]
    for k, a in enumerate(model.areas, start=1):
        r = np.array([s.R_per_area[a] for s in series])
        parts.append(f"R_area_{k}_before={r[before].mean():.4f}")
        parts.append(f"R_area_{k}_after={r[after].mean():.4f}")
    written = _write_artifacts(args.out, files)
    return CommandOutcome(EXIT_OK, written, ",".join(parts))


COMMANDS: dict[str, Callable] = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "stability": cmd_stability,
    "equal-area": cmd_equal_area,
    "chimera": cmd_chimera,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridsync", description="Conformist-contrarian Kuramoto grid analyses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--scenario", required=True, help="built-in name (case1, case2) or scenario file path")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, default=None, help="initial-condition seed (unsigned integer)")
        p.add_argument("--dt", type=float, default=None, help="integration step, s")
        p.add_argument("--t-end", dest="t_end", type=float, default=None, help="run horizon, s")

    p = sub.add_parser("simulate", help="integrate a scenario and report its collective state")
    common(p)
    p = sub.add_parser("sweep", help="bifurcation sweep over r1 or r2")
    common(p)
    p.add_argument("--param", choices=("r1", "r2"), help="swept parameter")
    p.add_argument("--range", help="lo:hi:step")
    p = sub.add_parser("stability", help="equilibria and eigenvalues")
    common(p)
    p = sub.add_parser("equal-area", help="power-angle curve for one generator")
    common(p)
    p.add_argument("--generator", type=int, default=None, help="1-based generator index (default 1)")
    p = sub.add_parser("chimera", help="mid-run frequency step of the last generator")
    common(p)
    p.add_argument("--step-at", dest="step_at", type=float, default=None, help="step time, s (default 250)")
    p.add_argument("--omega4", type=float, default=None, help="stepped natural frequency, rad/s (default 10)")
    return parser


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    # argparse would read "--range -1:1:0.05" as two flags
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--range", "--omega4", "--step-at"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(tok)
    return out


def run(argv: Optional[Sequence[str]] = None) -> CommandOutcome:
    args = build_parser().parse_args(_join_negative_values(list(sys.argv[1:] if argv is None else argv)))
    try:
        return COMMANDS[args.command](args)
    except (InputError, ScenarioError, ModelError) as exc:
        return CommandOutcome(EXIT_INPUT, [], f"error: {exc}")
    except (NumericalFailure, stability.EigenError) as exc:
        return CommandOutcome(EXIT_NUMERIC, [], f"numerical failure: {exc}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    outcome = run(argv)
    stream = sys.stdout if outcome.exit_code == EXIT_OK else sys.stderr
    print(outcome.summary, file=stream)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
