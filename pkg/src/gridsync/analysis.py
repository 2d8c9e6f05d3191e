"""Synchronization observables and collective-state classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .integrator import DEFAULT_TOL, DEFAULT_WINDOW, Trajectory, detect_steady_state
from .model import FloatArray, GridModel, PhaseState, wrap_angle

# Classification thresholds (rad and order-parameter units).
THETA_IN = 0.15
THETA_PI = 0.15
R_IN_PHASE = 0.95
R_COHERENT = 0.9
R_BROKEN = 0.7
R_STD_MAX = 0.05
R_INCOHERENT = 0.3
LOCK_MIN = 0.95

LABELS = ("in_phase", "pi_state", "traveling_wave", "incoherent", "chimera")
SYNCHRONIZED_LABELS = frozenset({"in_phase", "pi_state", "traveling_wave"})


class NoSteadyStateError(ValueError):
    pass


def order_parameter(delta) -> tuple[float, float]:
    """Magnitude and phase of the mean unit phasor, R in [0, 1], psi in (-pi, pi]."""
    z = np.mean(np.exp(1j * np.asarray(delta, dtype=np.float64)))
    R = min(float(np.abs(z)), 1.0)
    return R, float(wrap_angle(np.angle(z)))


def _order_rows(delta: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Row-wise order parameter for an (m, k) array of phases."""
    z = np.mean(np.exp(1j * delta), axis=1)
    return np.minimum(np.abs(z), 1.0), wrap_angle(np.angle(z))


def per_area_order_parameters(state: PhaseState, model: GridModel) -> dict[int, float]:
    return {
        a: order_parameter(state.delta[model.area_members(a)])[0] for a in model.areas
    }


def circular_mean(x: FloatArray, axis=0) -> FloatArray:
    return wrap_angle(np.angle(np.mean(np.exp(1j * np.asarray(x)), axis=axis)))


def circular_concentration(x: FloatArray, axis=0) -> FloatArray:
    return np.abs(np.mean(np.exp(1j * np.asarray(x)), axis=axis))


@dataclass(frozen=True)
class PairStats:
    """Statistics of the wrapped difference delta_j - delta_i (0-based i, j).

    ``mean`` is the circular mean, so pairs sitting near +-pi do not average to
    zero; ``rms`` is the root-mean-square of the wrapped values.
    """

    i: int
    j: int
    mean: float
    rms: float
    concentration: float


def wrapped_pair_differences(traj: Trajectory, t_from: float) -> dict[tuple[int, int], PairStats]:
    """Per ordered pair (i != j) statistics over samples with t >= t_from."""
    k = traj.index_from(t_from)
    d = traj.delta[k:]
    out: dict[tuple[int, int], PairStats] = {}
    n = traj.n
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = wrap_angle(d[:, j] - d[:, i])
            out[(i, j)] = PairStats(
                i, j,
                float(circular_mean(w)),
                float(np.sqrt(np.mean(w**2))),
                float(circular_concentration(w)),
            )
    return out


@dataclass(frozen=True)
class AreaPhaseSummary:
    """Aggregated steady-state phase geometry of a two-area run.

    ``inter`` is the circular mean of delta_j - delta_i over pairs with i in the
    first area and j in the second; ``intra`` is the circular mean over i < j
    pairs inside an area.
    """

    inter: float
    intra: float
    inter_pairs: dict
    intra_pairs: dict


def area_phase_summary(traj: Trajectory, model: GridModel, t_from: float) -> AreaPhaseSummary:
    stats = wrapped_pair_differences(traj, t_from)
    areas = model.areas
    inter, intra = {}, {}
    for (i, j), s in stats.items():
        if i >= j and model.area_of[i] == model.area_of[j]:
            continue
        if model.area_of[i] == model.area_of[j]:
            intra[(i, j)] = s.mean
        elif len(areas) >= 2 and model.area_of[i] == areas[0] and model.area_of[j] == areas[1]:
            inter[(i, j)] = s.mean
    inter_mean = float(circular_mean(np.array(list(inter.values())))) if inter else float("nan")
    intra_mean = float(circular_mean(np.array(list(intra.values())))) if intra else float("nan")
    return AreaPhaseSummary(inter_mean, intra_mean, inter, intra)


def evaluation_start(
    traj: Trajectory, window: float = DEFAULT_WINDOW, tol: float = DEFAULT_TOL
) -> float:
    """Start of the steady-state evaluation window.

    The detected steady-state time when available, otherwise the start of the
    trailing quarter of the run.
    """
    span = traj.t[-1] - traj.t[0]
    found = traj.converged_at
    if found is None and span >= window:
        found = detect_steady_state(traj, window, tol)
    if found is not None and found < traj.t[-1]:
        return float(found)
    return float(traj.t[-1] - 0.25 * span)


@dataclass(frozen=True)
class OrderParameterSample:
    t: float
    R_global: float
    psi_global: float
    R_per_area: dict


def order_parameter_series(traj: Trajectory, model: GridModel) -> list[OrderParameterSample]:
    R, psi = _order_rows(traj.delta)
    per_area = {a: _order_rows(traj.delta[:, model.area_members(a)])[0] for a in model.areas}
    return [
        OrderParameterSample(
            float(traj.t[k]), float(R[k]), float(psi[k]),
            {a: float(r[k]) for a, r in per_area.items()},
        )
        for k in range(len(traj))
    ]


@dataclass(frozen=True)
class StateLabel:
    label: str
    evidence: dict = field(default_factory=dict)

    def record(self) -> str:
        """Single-line machine-readable form: ``label,key=value,...``."""
        parts = [self.label]
        for key, value in self.evidence.items():
            if isinstance(value, float):
                parts.append(f"{key}={value:.6g}")
            else:
                parts.append(f"{key}={value}")
        return ",".join(parts)

    @property
    def synchronized(self) -> bool:
        return self.label in SYNCHRONIZED_LABELS


def classify_state(
    traj: Trajectory,
    model: GridModel,
    *,
    window: float = DEFAULT_WINDOW,
    tol: float = DEFAULT_TOL,
) -> StateLabel:
    """Label the collective state over the steady-state evaluation window."""
    if traj.n != model.n:
        raise ValueError("trajectory and model sizes differ")
    span = traj.t[-1] - traj.t[0]
    if span < window:
        raise ValueError(f"trajectory span {span} s is shorter than the evaluation window {window} s")
    start = evaluation_start(traj, window, tol)
    k = traj.index_from(start)
    d = traj.delta[k:]

    R_glob, _ = _order_rows(d)
    areas = model.areas
    R_mean, R_std, psi_area = {}, {}, {}
    for a in areas:
        r, psi = _order_rows(d[:, model.area_members(a)])
        R_mean[a] = float(r.mean())
        R_std[a] = float(r.std())
        psi_area[a] = psi

    evidence: dict = {"t_from": float(traj.t[k]), "R_global": float(R_glob.mean())}
    for idx, a in enumerate(areas, start=1):
        evidence[f"R_area_{idx}"] = R_mean[a]
        evidence[f"Rstd_area_{idx}"] = R_std[a]

    n = model.n
    pair_means = {}
    for i in range(n):
        for j in range(i + 1, n):
            m = float(circular_mean(wrap_angle(d[:, j] - d[:, i])))
            pair_means[(i, j)] = m
            evidence[f"d_{i + 1}_{j + 1}"] = m

    all_in = all(abs(m) < THETA_IN for m in pair_means.values())
    if all_in and evidence["R_global"] > R_IN_PHASE and all(r > R_IN_PHASE for r in R_mean.values()):
        return StateLabel("in_phase", evidence)

    coherent = [a for a in areas if R_mean[a] >= R_COHERENT and R_std[a] <= R_STD_MAX]
    broken = [a for a in areas if R_mean[a] < R_BROKEN or R_std[a] > R_STD_MAX]

    if len(areas) == 2 and len(coherent) == 2:
        gap = wrap_angle(psi_area[areas[1]] - psi_area[areas[0]])
        lock = float(circular_concentration(gap))
        sep = float(circular_mean(gap))
        evidence["inter_area_delta"] = sep
        evidence["inter_area_lock"] = lock
        strong = all(R_mean[a] > R_IN_PHASE for a in areas)
        if lock > LOCK_MIN and strong:
            if abs(abs(sep) - np.pi) <= THETA_PI:
                return StateLabel("pi_state", evidence)
            if THETA_IN <= abs(sep) <= np.pi - THETA_PI:
                return StateLabel("traveling_wave", evidence)

    if coherent and broken:
        return StateLabel("chimera", evidence)

    evidence["R_global_below_incoherent"] = evidence["R_global"] < R_INCOHERENT
    return StateLabel("incoherent", evidence)


@dataclass(frozen=True)
class CompassVector:
    oscillator: int
    magnitude: float
    angle: float


def compass_vectors(
    traj: Trajectory,
    t_from: Optional[float] = None,
    *,
    window: float = DEFAULT_WINDOW,
    tol: float = DEFAULT_TOL,
) -> list[CompassVector]:
    """Steady-state compass vectors, one per oscillator (1-based index).

    The magnitude is the rms of wrapped delta_j - delta_i over j != i and the
    window. The angle is the circular mean of delta_i measured from the
    instantaneous centroid of the unwrapped angles, i.e. in the frame that
    co-rotates with the network.
    """
    found = traj.converged_at
    if found is None and traj.t[-1] - traj.t[0] >= window:
        found = detect_steady_state(traj, window, tol)
    if found is None:
        raise NoSteadyStateError("no steady state detected in trajectory")
    if t_from is None:
        t_from = found
    if found > t_from + 1e-9:
        raise NoSteadyStateError(f"steady state reached at {found} s, after requested start {t_from} s")
    k = traj.index_from(t_from)
    d = traj.delta[k:]
    centroid = d.mean(axis=1, keepdims=True)
    rel = wrap_angle(d - centroid)
    out = []
    n = traj.n
    for i in range(n):
        if n > 1:
            others = np.delete(np.arange(n), i)
            w = wrap_angle(d[:, others] - d[:, [i]])
            mag = float(np.sqrt(np.mean(w**2)))
        else:
            mag = 0.0
        out.append(CompassVector(i + 1, mag, float(circular_mean(rel[:, i]))))
    return out
