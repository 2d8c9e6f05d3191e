"""CSV layouts for every artifact the command line writes.

=====================  ================================================
file                   header
=====================  ================================================
trajectory             t,delta_1..delta_n,ddelta_1..ddelta_n
order parameter        t,R_global,psi_global,R_area_1,R_area_2,...
compass                oscillator,magnitude_rad,angle_rad
classification         single line ``label,key=value,...`` (no header)
equilibrium            oscillator,delta_star_rad,residual
eigen                  re,im,class
bifurcation diagram    param,sample_index,observable,label
power-angle curve      delta_rad,p_electrical,p_mechanical
power-angle nodes      delta_rad,kind
=====================  ================================================

Floats use 9 significant digits; trajectory angles are unwrapped.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

import numpy as np

from .analysis import CompassVector, OrderParameterSample
from .bifurcation import BifurcationDiagram
from .equal_area import PowerAngleCurve
from .integrator import Trajectory
from .stability import EigenReport, Equilibrium

FMT = "{:.9g}"

COMPASS_HEADER = ["oscillator", "magnitude_rad", "angle_rad"]
EQUILIBRIUM_HEADER = ["oscillator", "delta_star_rad", "residual"]
EIGEN_HEADER = ["re", "im", "class"]
DIAGRAM_HEADER = ["param", "sample_index", "observable", "label"]
CURVE_HEADER = ["delta_rad", "p_electrical", "p_mechanical"]
NODES_HEADER = ["delta_rad", "kind"]


def trajectory_header(n: int) -> list[str]:
    return ["t"] + [f"delta_{k}" for k in range(1, n + 1)] + [f"ddelta_{k}" for k in range(1, n + 1)]


def order_header(n_areas: int) -> list[str]:
    return ["t", "R_global", "psi_global"] + [f"R_area_{k}" for k in range(1, n_areas + 1)]


def _f(x: float) -> str:
    return FMT.format(float(x))


def render_rows(header: Sequence[str] | None, rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([_f(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    block = np.column_stack([traj.t, traj.delta, traj.delta_dot])
    lines = [",".join(trajectory_header(traj.n))]
    lines.extend(",".join(_f(x) for x in row) for row in block)
    return "\n".join(lines) + "\n"


def order_csv(series: Sequence[OrderParameterSample]) -> str:
    areas = list(series[0].R_per_area) if series else []
    rows = (
        [s.t, s.R_global, s.psi_global] + [s.R_per_area[a] for a in areas] for s in series
    )
    return render_rows(order_header(len(areas)), rows)


def compass_csv(vectors: Sequence[CompassVector]) -> str:
    return render_rows(COMPASS_HEADER, ([v.oscillator, v.magnitude, v.angle] for v in vectors))


def equilibrium_csv(eq: Equilibrium) -> str:
    return render_rows(
        EQUILIBRIUM_HEADER,
        ([k + 1, float(d), float(eq.residual)] for k, d in enumerate(eq.delta_star)),
    )


def eigen_csv(report: EigenReport) -> str:
    classes = report.mode_class or ("",) * len(report)
    return render_rows(
        EIGEN_HEADER,
        ([float(l.real), float(l.imag), c] for l, c in zip(report.eigenvalues, classes)),
    )


def diagram_csv(diagram: BifurcationDiagram) -> str:
    rows = (
        [pt.param, k, s, pt.label] for pt in diagram.points for k, s in enumerate(pt.samples)
    )
    return render_rows(DIAGRAM_HEADER, rows)


def curve_csv(curve: PowerAngleCurve, points: int = 361) -> str:
    start = curve.delta_0 - np.pi if curve.delta_0 is not None else -np.pi - curve.phase
    grid = start + np.linspace(0.0, 2.0 * np.pi, points)
    rows = ([float(d), float(curve.electrical(d)), float(curve.p_mech)] for d in grid)
    return render_rows(CURVE_HEADER, rows)


def nodes_csv(curve: PowerAngleCurve) -> str:
    return render_rows(NODES_HEADER, ([float(d), kind] for d, kind in curve.nodes))


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return [], []
    return rows[0], rows[1:]
