"""Oscillator network model for generator swing dynamics.

Every dynamics variant (standard, conformist, contrarian, conformist-contrarian)
is evaluated through one signed-coupling right-hand side::

    ddelta_i = omega_i - alpha_i * ddelta_i + sum_j S_ij K_ij sin(delta_j - delta_i)

The variants differ only in the sign matrix ``S``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]

SIGN_MODES = ("conformist", "contrarian", "cc")

TWO_PI = 2.0 * np.pi


class ModelError(ValueError):
    """Raised when model parameters violate a structural invariant."""


def wrap_angle(x: ArrayLike) -> FloatArray | float:
    """Wrap angles to the half-open interval (-pi, pi]."""
    a = np.asarray(x, dtype=np.float64)
    w = np.pi - np.mod(np.pi - a, TWO_PI)
    if w.ndim == 0:
        return float(w)
    return w


def _frozen(a: ArrayLike, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def sign_matrix(area_of: Sequence[int], mode: str) -> NDArray[np.int8]:
    """Build the +1/-1 interaction sign matrix for a sign mode.

    ``cc`` is +1 inside an area and -1 across areas.
    """
    area = np.asarray(area_of)
    n = area.shape[0]
    if mode == "conformist":
        s = np.ones((n, n), dtype=np.int8)
    elif mode == "contrarian":
        s = -np.ones((n, n), dtype=np.int8)
        np.fill_diagonal(s, 1)
    elif mode == "cc":
        s = np.where(area[:, None] == area[None, :], 1, -1).astype(np.int8)
    else:
        raise ModelError(f"unknown sign mode {mode!r}; expected one of {SIGN_MODES}")
    return s


@dataclass(frozen=True)
class PhysicalGeneratorSpec:
    """Physical generator data from which the oscillator constants are derived.

    Units: E in per-unit volts, P_m in W, admittances in S, J in kg m^2,
    K_D in W s^2/rad^2 and Omega in Hz.
    """

    internal_voltage: FloatArray
    mechanical_power: FloatArray
    self_admittance_real: FloatArray
    admittance_magnitudes: FloatArray
    inertia: float
    dissipation: float = 0.0
    sync_frequency: float = 1.0

    def __post_init__(self) -> None:
        E = _frozen(self.internal_voltage)
        n = E.shape[0]
        object.__setattr__(self, "internal_voltage", E)
        for name in ("mechanical_power", "self_admittance_real"):
            v = _frozen(getattr(self, name))
            if v.shape != (n,):
                raise ModelError(f"{name} must have shape ({n},), got {v.shape}")
            object.__setattr__(self, name, v)
        Y = _frozen(self.admittance_magnitudes)
        if Y.shape != (n, n):
            raise ModelError(f"admittance_magnitudes must be {n}x{n}, got {Y.shape}")
        if not np.allclose(Y, Y.T, rtol=0.0, atol=0.0):
            raise ModelError("admittance_magnitudes must be symmetric")
        if np.any(Y < 0):
            raise ModelError("admittance_magnitudes must be non-negative")
        object.__setattr__(self, "admittance_magnitudes", Y)
        if not self.inertia > 0:
            raise ModelError(f"inertia must be positive, got {self.inertia}")
        if not self.sync_frequency > 0:
            raise ModelError(f"sync_frequency must be positive, got {self.sync_frequency}")
        if not self.dissipation >= 0:
            raise ModelError(f"dissipation must be non-negative, got {self.dissipation}")

    @property
    def n(self) -> int:
        return int(self.internal_voltage.shape[0])


def derive_coupling(spec: PhysicalGeneratorSpec) -> FloatArray:
    """Coupling constants k_ij = E_i E_j |Y_ij| / (J Omega), in rad/s^2."""
    E = spec.internal_voltage
    with np.errstate(over="ignore", invalid="ignore"):
        K = np.outer(E, E) * spec.admittance_magnitudes / (spec.inertia * spec.sync_frequency)
    np.fill_diagonal(K, 0.0)
    if not np.all(np.isfinite(K)):
        raise ModelError("coupling derivation produced non-finite values")
    return K


def derive_natural_frequencies(spec: PhysicalGeneratorSpec) -> FloatArray:
    """omega_i = (P_m,i - E_i^2 Re(Y_ii)) / (J Omega), in rad/s."""
    E = spec.internal_voltage
    scale = spec.inertia * spec.sync_frequency
    with np.errstate(over="ignore", invalid="ignore"):
        omega = (spec.mechanical_power - E**2 * spec.self_admittance_real) / scale
    if not np.all(np.isfinite(omega)):
        raise ModelError("natural frequency derivation produced non-finite values")
    return omega


def derive_damping(spec: PhysicalGeneratorSpec) -> float:
    """Dissipation constant alpha = 2 K_D / J."""
    if not spec.inertia > 0:
        raise ModelError("inertia must be positive")
    return 2.0 * spec.dissipation / spec.inertia


@dataclass(frozen=True, eq=False)
class GridModel:
    """Immutable signed-coupling oscillator network.

    ``coupling`` holds non-negative magnitudes K_ij; ``sign`` holds S_ij in
    {+1, -1}. Arrays are copied and made read-only on construction.
    """

    omega: FloatArray
    alpha: FloatArray
    coupling: FloatArray
    sign: NDArray[np.int8]
    area_of: NDArray[np.int64]
    signed_coupling: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        omega = _frozen(self.omega)
        n = omega.shape[0]
        if omega.ndim != 1 or n < 1:
            raise ModelError("omega must be a non-empty vector")
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.ndim == 0:
            alpha = np.full(n, float(alpha))
        alpha = _frozen(alpha)
        K = _frozen(self.coupling)
        S = _frozen(self.sign, dtype=np.int8)
        area = _frozen(self.area_of, dtype=np.int64)
        if alpha.shape != (n,):
            raise ModelError(f"alpha must have shape ({n},), got {alpha.shape}")
        if K.shape != (n, n):
            raise ModelError(f"coupling must be {n}x{n}, got {K.shape}")
        if S.shape != (n, n):
            raise ModelError(f"sign must be {n}x{n}, got {S.shape}")
        if area.shape != (n,):
            raise ModelError(f"area_of must have shape ({n},), got {area.shape}")
        for name, arr in (("omega", omega), ("alpha", alpha), ("coupling", K)):
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} contains non-finite entries")
        if np.any(alpha < 0):
            raise ModelError("alpha must be non-negative")
        if np.any(np.diag(K) != 0):
            raise ModelError("coupling diagonal must be zero")
        if np.any(K < 0):
            i, j = np.argwhere(K < 0)[0]
            raise ModelError(f"coupling[{i + 1}][{j + 1}] is negative")
        asym = np.argwhere(K != K.T)
        if asym.size:
            i, j = asym[0]
            raise ModelError(f"coupling not symmetric: K[{i + 1}][{j + 1}] != K[{j + 1}][{i + 1}]")
        if not np.all(np.isin(S, (-1, 1))):
            raise ModelError("sign entries must be +1 or -1")
        if np.any(S != S.T):
            raise ModelError("sign matrix must be symmetric")
        if np.any(np.diag(S) != 1):
            raise ModelError("sign diagonal must be +1")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "coupling", K)
        object.__setattr__(self, "sign", S)
        object.__setattr__(self, "area_of", area)
        object.__setattr__(self, "signed_coupling", _frozen(S * K))

    @classmethod
    def from_mode(
        cls,
        omega: ArrayLike,
        alpha: ArrayLike | float,
        coupling: ArrayLike,
        area_of: Sequence[int],
        mode: str = "cc",
    ) -> "GridModel":
        return cls(
            omega=omega,
            alpha=alpha,
            coupling=coupling,
            sign=sign_matrix(area_of, mode),
            area_of=area_of,
        )

    @property
    def n(self) -> int:
        return int(self.omega.shape[0])

    @property
    def areas(self) -> tuple[int, ...]:
        """Distinct area labels in order of first appearance."""
        seen: dict[int, None] = {}
        for a in self.area_of.tolist():
            seen.setdefault(a, None)
        return tuple(seen)

    def area_members(self, label: int) -> NDArray[np.int64]:
        return np.flatnonzero(self.area_of == label)

    def replace(self, **changes) -> "GridModel":
        fields = dict(
            omega=self.omega,
            alpha=self.alpha,
            coupling=self.coupling,
            sign=self.sign,
            area_of=self.area_of,
        )
        fields.update(changes)
        return GridModel(**fields)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for arr in (self.omega, self.alpha, self.coupling, self.sign, self.area_of):
            h.update(str(arr.dtype).encode())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Rotor angles (rad, unwrapped) and angular velocities (rad/s) at time t."""

    delta: FloatArray
    delta_dot: FloatArray
    t: float = 0.0

    def __post_init__(self) -> None:
        d = _frozen(self.delta)
        v = _frozen(self.delta_dot)
        if d.ndim != 1 or d.shape != v.shape:
            raise ModelError("delta and delta_dot must be vectors of equal length")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(v)) and np.isfinite(self.t)):
            raise ModelError("phase state must be finite")
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "delta_dot", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return int(self.delta.shape[0])

    def wrapped(self) -> FloatArray:
        return wrap_angle(self.delta)


def coupling_torque(signed_coupling: FloatArray, delta: FloatArray) -> FloatArray:
    """sum_j S_ij K_ij sin(delta_j - delta_i) for every i."""
    diff = delta[None, :] - delta[:, None]
    return np.sum(signed_coupling * np.sin(diff), axis=1)


def rhs(model: GridModel, state: PhaseState) -> FloatArray:
    """Angular acceleration of every oscillator, rad/s^2."""
    if state.n != model.n:
        raise ModelError(f"state has {state.n} oscillators, model has {model.n}")
    return (
        model.omega
        - model.alpha * state.delta_dot
        + coupling_torque(model.signed_coupling, state.delta)
    )


def stationary_frame_angles(state: PhaseState, sync_frequency: float) -> FloatArray:
    """Output phase angle in the stationary frame, theta = 2 pi Omega t + delta."""
    return TWO_PI * sync_frequency * state.t + state.delta


@dataclass(frozen=True)
class CriticalCouplingReport:
    bound: float
    pairs: tuple[tuple[int, int, float, bool], ...]

    @property
    def all_pass(self) -> bool:
        return all(ok for *_, ok in self.pairs)

    def failing(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j, _, ok in self.pairs if not ok]


def check_critical_coupling(model: GridModel) -> CriticalCouplingReport:
    """Compare each connected pair against (w_max - w_min) n / (2 (n - 1)).

    Pairs are reported 0-based with i < j; equality passes.
    """
    n = model.n
    if n < 2:
        raise ModelError("critical coupling needs at least two oscillators")
    bound = float((model.omega.max() - model.omega.min()) * n / (2 * (n - 1)))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            k = float(model.coupling[i, j])
            if k > 0:
                pairs.append((i, j, k, k >= bound))
    return CriticalCouplingReport(bound=bound, pairs=tuple(pairs))
