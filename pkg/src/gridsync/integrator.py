"""Fixed-step RK4 integration of grid models.

Initial angles for ``uniform_random`` runs are drawn from numpy's PCG64 bit
generator (``numpy.random.Generator(PCG64(seed)).uniform``), which produces
the same stream on every platform for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .model import FloatArray, GridModel, ModelError, PhaseState

INIT_MODES = ("zero", "uniform_random", "explicit")

DEFAULT_DT = 1e-3
DEFAULT_T_END = 100.0
DEFAULT_WINDOW = 10.0
DEFAULT_TOL = 1e-4


class IntegrationError(RuntimeError):
    """Numerical blow-up; carries the last finite state."""

    def __init__(self, message: str, last_state: PhaseState):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class RunConfig:
    dt: float = DEFAULT_DT
    t_end: float = DEFAULT_T_END
    record_stride: int = 10
    seed: int = 0
    init_mode: str = "uniform_random"
    init_low: float = -math.pi
    init_high: float = math.pi
    init_delta: Optional[tuple[float, ...]] = None
    init_delta_dot: Optional[tuple[float, ...]] = None
    init_t: float = 0.0

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= self.init_t + self.dt:
            raise ValueError(f"t_end must be at least one step past the start, got {self.t_end}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be an unsigned integer, got {self.seed}")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if self.init_mode == "uniform_random" and not self.init_low < self.init_high:
            raise ValueError("uniform_random needs init_low < init_high")
        if self.init_mode == "explicit":
            if self.init_delta is None or self.init_delta_dot is None:
                raise ValueError("explicit init needs init_delta and init_delta_dot")
            if len(self.init_delta) != len(self.init_delta_dot):
                raise ValueError("init_delta and init_delta_dot differ in length")

    @classmethod
    def from_state(cls, state: PhaseState, **kwargs) -> "RunConfig":
        return cls(
            init_mode="explicit",
            init_delta=tuple(float(x) for x in state.delta),
            init_delta_dot=tuple(float(x) for x in state.delta_dot),
            init_t=state.t,
            **kwargs,
        )

    @property
    def n_steps(self) -> int:
        steps = (self.t_end - self.init_t) / self.dt
        near = round(steps)
        return int(near) if abs(steps - near) < 1e-9 * max(1.0, steps) else int(math.floor(steps))


def initial_state(model: GridModel, cfg: RunConfig) -> PhaseState:
    n = model.n
    if cfg.init_mode == "zero":
        return PhaseState(np.zeros(n), np.zeros(n), cfg.init_t)
    if cfg.init_mode == "uniform_random":
        rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
        delta = rng.uniform(cfg.init_low, cfg.init_high, size=n)
        return PhaseState(delta, np.zeros(n), cfg.init_t)
    if len(cfg.init_delta) != n:
        raise ModelError(f"explicit initial state has {len(cfg.init_delta)} entries, model has {n}")
    return PhaseState(np.array(cfg.init_delta), np.array(cfg.init_delta_dot), cfg.init_t)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded samples at uniform spacing ``dt * record_stride``.

    Stored column-wise: ``t`` is (m,), ``delta`` and ``delta_dot`` are (m, n).
    """

    t: FloatArray
    delta: FloatArray
    delta_dot: FloatArray
    model_fingerprint: str
    dt: float
    record_stride: int
    converged_at: Optional[float] = None

    @property
    def n(self) -> int:
        return int(self.delta.shape[1])

    @property
    def spacing(self) -> float:
        return self.dt * self.record_stride

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def samples(self) -> list[PhaseState]:
        return [PhaseState(d, v, t) for t, d, v in zip(self.t, self.delta, self.delta_dot)]

    @property
    def final_state(self) -> PhaseState:
        return PhaseState(self.delta[-1], self.delta_dot[-1], self.t[-1])

    def index_from(self, t_from: float) -> int:
        if t_from > self.t[-1] + 1e-12:
            raise ValueError(f"time {t_from} lies beyond the trajectory end {self.t[-1]}")
        return int(np.searchsorted(self.t, t_from - 1e-9 * self.spacing, side="left"))

    def with_convergence(self, converged_at: Optional[float]) -> "Trajectory":
        return Trajectory(
            self.t, self.delta, self.delta_dot, self.model_fingerprint,
            self.dt, self.record_stride, converged_at,
        )


@njit(nogil=True, cache=True)
def _accel(d, v, omega, alpha, sk, out):
    n = d.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if j != i:
                acc += sk[i, j] * math.sin(d[j] - d[i])
        out[i] = omega[i] - alpha[i] * v[i] + acc


@njit(nogil=True, cache=True)
def _rk4_run(d, v, omega, alpha, sk, dt, n_steps, stride, out_d, out_v):
    """Advance in place; returns -1 or the index of the first non-finite step."""
    n = d.shape[0]
    a1 = np.empty(n)
    a2 = np.empty(n)
    a3 = np.empty(n)
    a4 = np.empty(n)
    dt_ = np.empty(n)
    vt = np.empty(n)
    h2 = 0.5 * dt
    out_d[0, :] = d
    out_v[0, :] = v
    for step in range(1, n_steps + 1):
        _accel(d, v, omega, alpha, sk, a1)
        for i in range(n):
            dt_[i] = d[i] + h2 * v[i]
            vt[i] = v[i] + h2 * a1[i]
        _accel(dt_, vt, omega, alpha, sk, a2)
        for i in range(n):
            dt_[i] = d[i] + h2 * (v[i] + h2 * a1[i])
            vt[i] = v[i] + h2 * a2[i]
        _accel(dt_, vt, omega, alpha, sk, a3)
        for i in range(n):
            dt_[i] = d[i] + dt * (v[i] + h2 * a2[i])
            vt[i] = v[i] + dt * a3[i]
        _accel(dt_, vt, omega, alpha, sk, a4)
        finite = True
        for i in range(n):
            # delta' stages are v, v + h/2 a1, v + h/2 a2, v + h a3
            nd = d[i] + dt / 6.0 * (6.0 * v[i] + dt * (a1[i] + a2[i] + a3[i]))
            nv = v[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
            if not (math.isfinite(nd) and math.isfinite(nv)):
                finite = False
            dt_[i] = nd
            vt[i] = nv
        if not finite:
            return step
        for i in range(n):
            d[i] = dt_[i]
            v[i] = vt[i]
        if step % stride == 0:
            out_d[step // stride, :] = d
            out_v[step // stride, :] = v
    return -1


def integrate(model: GridModel, cfg: RunConfig, *, detect: bool = True) -> Trajectory:
    """Integrate ``model`` over [init_t, t_end] with classical RK4.

    Bitwise reproducible for identical (model, cfg). Raises
    :class:`IntegrationError` if the state becomes non-finite.
    """
    start = initial_state(model, cfg)
    n_steps = cfg.n_steps
    stride = int(cfg.record_stride)
    n_rec = n_steps // stride + 1
    d = start.delta.copy()
    v = start.delta_dot.copy()
    out_d = np.empty((n_rec, model.n))
    out_v = np.empty((n_rec, model.n))
    bad = _rk4_run(
        d, v,
        np.ascontiguousarray(model.omega), np.ascontiguousarray(model.alpha),
        np.ascontiguousarray(model.signed_coupling),
        float(cfg.dt), n_steps, stride, out_d, out_v,
    )
    if bad >= 0:
        t_last = cfg.init_t + (bad - 1) * cfg.dt
        raise IntegrationError(
            f"state became non-finite at step {bad} (t={t_last + cfg.dt:.6g} s); "
            f"last finite state at t={t_last:.6g} s",
            PhaseState(d, v, t_last),
        )
    t = cfg.init_t + np.arange(n_rec) * (cfg.dt * stride)
    traj = Trajectory(t, out_d, out_v, model.fingerprint(), float(cfg.dt), stride)
    if detect:
        span = t[-1] - t[0]
        if span >= DEFAULT_WINDOW:
            traj = traj.with_convergence(detect_steady_state(traj))
    return traj


def pairwise_differences(delta: FloatArray) -> tuple[FloatArray, list[tuple[int, int]]]:
    """delta_j - delta_i for all i < j, as an (m, n(n-1)/2) array."""
    n = delta.shape[1]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        return np.empty((delta.shape[0], 0)), pairs
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    return delta[:, jj] - delta[:, ii], pairs


def detect_steady_state(
    traj: Trajectory, window: float = DEFAULT_WINDOW, tol: float = DEFAULT_TOL
) -> Optional[float]:
    """Earliest window-end time from which every pairwise phase difference stays
    within a band of ``tol * window`` rad over each trailing window, up to the
    end of the run. Returns None if that never holds."""
    span = traj.t[-1] - traj.t[0]
    if window > span + 1e-12:
        raise ValueError(f"window {window} s exceeds trajectory span {span} s")
    diffs, pairs = pairwise_differences(traj.delta)
    w = int(round(window / traj.spacing)) + 1
    m = len(traj)
    if not pairs:
        return float(traj.t[w - 1])
    # centred filter at c covers [c - w//2, c - w//2 + w - 1]
    hi = maximum_filter1d(diffs, size=w, axis=0, mode="nearest")
    lo = minimum_filter1d(diffs, size=w, axis=0, mode="nearest")
    band = np.full_like(hi, np.inf)
    ends = np.arange(w - 1, m)
    centres = ends - (w - 1) + w // 2
    band[ends] = (hi - lo)[centres]
    ok = np.all(band < tol * window, axis=1)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    first = int(bad[-1]) + 1
    return float(traj.t[first])
