"""Single-machine-versus-rest power-angle view and equal-area areas.

With the other rotor angles frozen, the electrical term seen by generator i
collapses to one sinusoid::

    P_e(delta_i) = sum_j S_ij K_ij sin(delta_i - delta_j) = P_max sin(delta_i + phase)

and the mechanical side is the generator's surplus in the co-rotating frame,
omega_i - alpha_i * v, with v the common rotation speed. Damping is left off
the static curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .model import GridModel, PhaseState, wrap_angle
from .stability import frame_velocity

QUAD_ABS = 1e-11


class DisconnectedGeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class PowerAngleCurve:
    """Static power-angle curve; node angles are absolute delta_i in rad."""

    p_mech: float
    p_max: float
    phase: float
    nodes: tuple[tuple[float, str], ...]
    delta_0: Optional[float]
    delta_m: Optional[float]

    def electrical(self, delta):
        return self.p_max * np.sin(np.asarray(delta) + self.phase)

    def slope(self, delta):
        return self.p_max * np.cos(np.asarray(delta) + self.phase)


def curve_from_sinusoid(p_mech: float, p_max: float, phase: float = 0.0) -> PowerAngleCurve:
    """Build a curve directly from its sinusoid parameters."""
    if not p_max > 0:
        raise DisconnectedGeneratorError("no electrical curve: P_max is zero")
    ratio = p_mech / p_max
    if ratio > 1.0 or ratio < -1.0:
        return PowerAngleCurve(p_mech, p_max, phase, (), None, None)
    base = float(np.arcsin(ratio))
    d0 = float(wrap_angle(base - phase))
    if ratio == 1.0 or ratio == -1.0:
        # tangent crossing: not restoring
        return PowerAngleCurve(p_mech, p_max, phase, ((d0, "source"),), d0, d0)
    dm = d0 + (np.pi - 2.0 * base)
    return PowerAngleCurve(p_mech, p_max, phase, ((d0, "sink"), (dm, "source")), d0, dm)


def power_angle_curve(
    model: GridModel, i: int, frozen: PhaseState, p_mech: Optional[float] = None
) -> PowerAngleCurve:
    """Power-angle curve of generator ``i`` (0-based) against the frozen rest.

    Crossings are classified sink when dP_e/ddelta > 0 there (restoring) and
    source otherwise.
    """
    if not 0 <= i < model.n:
        raise IndexError(f"generator index {i} out of range for n={model.n}")
    c = model.signed_coupling[i].copy()
    c[i] = 0.0
    if not np.any(model.coupling[i] > 0):
        raise DisconnectedGeneratorError(f"generator {i + 1} has no coupling: no electrical curve")
    phasor = np.sum(c * np.exp(-1j * frozen.delta))
    p_max = float(np.abs(phasor))
    phase = float(np.angle(phasor))
    if p_mech is None:
        v = frame_velocity(model)
        p_mech = float(model.omega[i] - model.alpha[i] * (v or 0.0))
    return curve_from_sinusoid(p_mech, p_max, phase)


@dataclass(frozen=True)
class SwingAreas:
    accelerating: float
    decelerating: float
    stable: bool
    note: str = ""


def swing_areas(curve: PowerAngleCurve, delta_start: float, delta_c: float) -> SwingAreas:
    """Accelerating area over [delta_start, delta_c] and decelerating area
    over [delta_c, delta_m]; stable when the second is at least the first."""
    if curve.delta_m is None:
        raise ValueError("curve has no crossing: the generator accelerates without bound")
    if delta_start > delta_c:
        raise ValueError("delta_start must not exceed delta_c")
    if delta_c - delta_start > 2.0 * np.pi:
        raise ValueError("swing must lie within one period")

    def acc(x):
        return curve.p_mech - curve.p_max * np.sin(x + curve.phase)

    a_acc = quad(acc, delta_start, delta_c, epsabs=QUAD_ABS, epsrel=0.0, limit=200)[0]
    if delta_c > curve.delta_m:
        return SwingAreas(a_acc, 0.0, False, "clearing angle beyond the source node")
    a_dec = quad(lambda x: -acc(x), delta_c, curve.delta_m, epsabs=QUAD_ABS, epsrel=0.0, limit=200)[0]
    return SwingAreas(a_acc, a_dec, a_dec >= a_acc, "damping omitted from the static curve")
