"""Parameter sweeps over the inter-area coupling (r1) and one generator's
natural frequency (r2), plus chimera-onset detection."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import analysis
from .integrator import RunConfig, Trajectory, integrate
from .model import GridModel, wrap_angle
from .stability import solve_equilibria

PARAMETERS = ("r1", "r2")
OBSERVABLES = ("inter_area_difference", "area_order")
SAMPLINGS = ("poincare", "equilibrium_roots")

POINCARE_COUNT = 64
POINCARE_SPACING = 0.5
SWEEP_T_END = 200.0


def sweep_threads(default: int = 4) -> int:
    raw = os.environ.get("GRIDSYNC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return default


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    lo: float
    hi: float
    step: float
    run: RunConfig = field(default_factory=lambda: RunConfig(t_end=SWEEP_T_END))
    sampling: str = "poincare"
    samples: int = POINCARE_COUNT
    spacing: float = POINCARE_SPACING
    observable: str = "inter_area_difference"

    def __post_init__(self) -> None:
        if self.parameter not in PARAMETERS:
            raise ValueError(f"parameter must be one of {PARAMETERS}, got {self.parameter!r}")
        if not self.lo < self.hi:
            raise ValueError(f"empty range: lo={self.lo} must be below hi={self.hi}")
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.sampling not in SAMPLINGS:
            raise ValueError(f"sampling must be one of {SAMPLINGS}")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}")
        if self.samples < 1 or not self.spacing > 0:
            raise ValueError("need at least one sample at positive spacing")
        if (self.samples - 1) * self.spacing > self.run.t_end - self.run.init_t:
            raise ValueError("Poincare window is longer than the run")

    def values(self) -> np.ndarray:
        count = int(np.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return np.round(self.lo + self.step * np.arange(count), 12)


@dataclass(frozen=True)
class BifurcationPoint:
    param: float
    samples: tuple[float, ...]
    label: str
    r_area: tuple[float, ...]
    n_roots: int

    @property
    def spread(self) -> float:
        return sample_spread(self.samples)


@dataclass(frozen=True)
class BifurcationDiagram:
    parameter: str
    observable: str
    points: tuple[BifurcationPoint, ...]

    def __post_init__(self) -> None:
        p = [pt.param for pt in self.points]
        if any(b <= a for a, b in zip(p, p[1:])):
            raise ValueError("parameter values must be strictly increasing")

    def params(self) -> np.ndarray:
        return np.array([pt.param for pt in self.points])

    def labels(self) -> list[str]:
        return [pt.label for pt in self.points]

    def point(self, value: float, atol: float = 1e-9) -> BifurcationPoint:
        for pt in self.points:
            if abs(pt.param - value) <= atol:
                return pt
        raise KeyError(value)


def sample_spread(samples) -> float:
    """Circular standard deviation, sqrt(-2 ln R), of angle samples."""
    s = np.asarray(samples, dtype=np.float64)
    if s.size == 0:
        return float("nan")
    R = float(np.abs(np.mean(np.exp(1j * s))))
    return float(np.sqrt(-2.0 * np.log(min(max(R, 1e-300), 1.0))))


def _inter_pairs(model: GridModel) -> np.ndarray:
    return model.area_of[:, None] != model.area_of[None, :]


def r1_model(template: GridModel, r1: float) -> GridModel:
    """Template with homogeneous frequencies and inter-area entries set from r1.

    The inter-area term reads -r1 sin(.), so the magnitude |r1| goes into K and
    sign(r1) multiplies the template's inter-area sign.
    """
    inter = _inter_pairs(template)
    if not inter.any():
        raise ValueError("r1 sweep needs a model with at least two areas")
    K = template.coupling.copy()
    K[inter] = abs(r1)
    S = template.sign.copy()
    if r1 < 0:
        S[inter] = -S[inter]
    omega = np.full(template.n, float(template.omega.mean()))
    return template.replace(omega=omega, coupling=K, sign=S)


def r2_model(template: GridModel, r2: float, index: int | None = None) -> GridModel:
    """Template with one generator's natural frequency (default: the last) set to r2."""
    omega = template.omega.copy()
    omega[template.n - 1 if index is None else index] = r2
    return template.replace(omega=omega)


def _observable(model: GridModel, delta: np.ndarray) -> np.ndarray:
    return wrap_angle(delta[..., model.n - 1] - delta[..., 0])


def _area_r(model: GridModel, delta: np.ndarray) -> np.ndarray:
    areas = model.areas
    last = model.area_members(areas[-1])
    return np.abs(np.mean(np.exp(1j * delta[..., last]), axis=-1))


def poincare_samples(traj: Trajectory, count: int, spacing: float) -> np.ndarray:
    """Indices of ``count`` samples at ``spacing`` s ending at the last sample."""
    times = traj.t[-1] - spacing * np.arange(count - 1, -1, -1)
    idx = np.searchsorted(traj.t, times - 0.5 * traj.spacing)
    return np.clip(idx, 0, len(traj) - 1)


def _run_point(model: GridModel, spec: SweepSpec, value: float) -> BifurcationPoint:
    traj = integrate(model, spec.run)
    state = analysis.classify_state(traj, model)
    r_area = tuple(
        state.evidence[f"R_area_{k}"] for k in range(1, len(model.areas) + 1)
    )
    roots = solve_equilibria(model, seeds=8, rng_seed=spec.run.seed)
    if spec.sampling == "equilibrium_roots" and len(roots):
        d = np.array([r.delta_star for r in roots])
    else:
        d = traj.delta[poincare_samples(traj, spec.samples, spec.spacing)]
    if spec.observable == "inter_area_difference":
        obs = _observable(model, d)
    else:
        obs = _area_r(model, d)
    return BifurcationPoint(
        float(value), tuple(float(x) for x in obs), state.label, r_area, len(roots)
    )


def _sweep(template, spec, build, threads):
    values = spec.values()
    workers = threads or sweep_threads()
    if workers <= 1:
        points = [_run_point(build(template, v), spec, v) for v in values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda v: _run_point(build(template, v), spec, v), values))
    return BifurcationDiagram(spec.parameter, spec.observable, tuple(points))


def sweep_r1(template: GridModel, spec: SweepSpec, *, threads: int | None = None) -> BifurcationDiagram:
    if spec.parameter != "r1":
        raise ValueError("sweep_r1 needs a spec with parameter 'r1'")
    if len(template.areas) != 2:
        raise ValueError("sweep_r1 needs a two-area template")
    return _sweep(template, spec, r1_model, threads)


def sweep_r2(template: GridModel, spec: SweepSpec, *, threads: int | None = None) -> BifurcationDiagram:
    if spec.parameter != "r2":
        raise ValueError("sweep_r2 needs a spec with parameter 'r2'")
    if len(template.areas) != 2:
        raise ValueError("sweep_r2 needs a two-area template")
    return _sweep(template, spec, r2_model, threads)


def chimera_onset(diagram: BifurcationDiagram) -> Optional[float]:
    """Parameter value at which the first run of chimera labels begins."""
    for pt in diagram.points:
        if pt.label == "chimera":
            return pt.param
    return None


@dataclass(frozen=True, eq=False)
class StepRun:
    trajectory: Trajectory
    before: GridModel
    after: GridModel
    step_at: float


def step_protocol(
    model: GridModel,
    cfg: RunConfig,
    *,
    step_at: float = 250.0,
    new_omega: float = 10.0,
    index: int | None = None,
) -> StepRun:
    """Run with one natural frequency stepped to ``new_omega`` at ``step_at`` s.

    The returned trajectory is the concatenation of both segments.
    """
    if not cfg.init_t < step_at < cfg.t_end:
        raise ValueError("step time must fall inside the run")
    offset = (step_at - cfg.init_t) / (cfg.dt * cfg.record_stride)
    if abs(offset - round(offset)) > 1e-6:
        raise ValueError("step time must land on a recorded sample")
    after = r2_model(model, new_omega, index)
    first = integrate(model, replace(cfg, t_end=step_at), detect=False)
    second = integrate(after, RunConfig.from_state(
        first.final_state, dt=cfg.dt, t_end=cfg.t_end, record_stride=cfg.record_stride,
        seed=cfg.seed,
    ), detect=False)
    traj = Trajectory(
        np.concatenate([first.t, second.t[1:]]),
        np.vstack([first.delta, second.delta[1:]]),
        np.vstack([first.delta_dot, second.delta_dot[1:]]),
        f"{model.fingerprint()}>{after.fingerprint()}@{step_at:g}",
        cfg.dt,
        cfg.record_stride,
    )
    return StepRun(traj, model, after, float(step_at))
