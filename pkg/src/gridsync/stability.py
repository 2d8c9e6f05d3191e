"""Equilibria, linearization and eigen-analysis of the signed-coupling dynamics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .model import FloatArray, GridModel, PhaseState, coupling_torque, wrap_angle

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 200
DEDUP_TOL = 1e-6
EIG_RESIDUAL = 1e-8
EIG_MAX_DIM = 512
MAX_PATTERN_BITS = 12

MODE_CLASSES = ("in_phase_like", "anti_phase_like", "mixed", "zero_mode")


class EigenError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Fixed point in the frame co-rotating at the common velocity.

    ``delta_star`` is gauge-fixed so that delta_star[0] == 0.
    """

    delta_star: FloatArray
    delta_dot_star: FloatArray
    residual: float

    def as_state(self) -> PhaseState:
        return PhaseState(self.delta_star, self.delta_dot_star)


@dataclass(frozen=True)
class SeedDiagnostic:
    seed: tuple[float, ...]
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class EquilibriumSet:
    roots: list[Equilibrium]
    diagnostics: list[SeedDiagnostic] = field(default_factory=list)
    frame_velocity: float = 0.0
    note: str = ""

    def __len__(self) -> int:
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def __getitem__(self, k):
        return self.roots[k]


def frame_velocity(model: GridModel) -> float | None:
    """Common rotation speed sum(omega)/sum(alpha); None when none exists."""
    sa = float(model.alpha.sum())
    sw = float(model.omega.sum())
    if sa > 0:
        return sw / sa
    return 0.0 if abs(sw) <= NEWTON_TOL else None


def _balance(model: GridModel, x: FloatArray, v: float) -> FloatArray:
    return model.omega - model.alpha * v + coupling_torque(model.signed_coupling, x)


def coupling_laplacian(model: GridModel, delta: FloatArray) -> FloatArray:
    """d(coupling torque)/d(delta): L_ij = S_ij K_ij cos(delta_j - delta_i), zero row sums."""
    L = model.signed_coupling * np.cos(delta[None, :] - delta[:, None])
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def _newton(model, x0, v, tol, max_iter):
    """Damped Newton on delta_2..delta_n with delta_1 pinned at 0."""
    x = np.array(x0, dtype=np.float64)
    x[0] = 0.0
    F = _balance(model, x, v)
    res = float(np.max(np.abs(F)))
    for it in range(1, max_iter + 1):
        if res <= tol:
            return x, res, it - 1, True
        J = coupling_laplacian(model, x)[1:, 1:]
        try:
            step = np.linalg.solve(J, -F[1:])
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F[1:], rcond=None)[0]
        lam = 1.0
        while True:
            trial = x.copy()
            trial[1:] += lam * step
            Ft = _balance(model, trial, v)
            rt = float(np.max(np.abs(Ft)))
            if rt <= (1.0 - 1e-4 * lam) * res or lam < 1e-9:
                break
            lam *= 0.5
        x, F, res = trial, Ft, rt
    return x, res, max_iter, res <= tol


def solve_equilibria(
    model: GridModel,
    seeds: int = 8,
    *,
    rng_seed: int = 0,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> EquilibriumSet:
    """Multi-start damped Newton for static equilibria in the co-rotating frame.

    Starts are every {0, pi} pattern on delta_2..delta_n plus ``seeds`` uniform
    random draws. Roots are gauge-fixed and deduplicated by wrapped distance.
    """
    if seeds < 1:
        raise ValueError("seeds must be at least 1")
    n = model.n
    v = frame_velocity(model)
    if v is None:
        return EquilibriumSet([], [], float("nan"), "no static equilibrium: undamped with net drift")
    starts = []
    bits = min(n - 1, MAX_PATTERN_BITS)
    for pattern in itertools.product((0.0, np.pi), repeat=bits):
        s = np.zeros(n)
        s[1 : 1 + bits] = pattern
        starts.append(s)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    for _ in range(seeds):
        s = rng.uniform(-np.pi, np.pi, size=n)
        s[0] = 0.0
        starts.append(s)

    roots: list[Equilibrium] = []
    diags = []
    for s in starts:
        x, res, iters, ok = _newton(model, s, v, tol, max_iter)
        diags.append(SeedDiagnostic(tuple(float(a) for a in s), ok, iters, res))
        if not ok:
            continue
        xw = wrap_angle(x)
        if any(np.max(np.abs(wrap_angle(xw - r.delta_star))) < DEDUP_TOL for r in roots):
            continue
        roots.append(Equilibrium(xw, np.full(n, v), res))
    note = "" if roots else "no seed converged; static equilibria may not exist"
    return EquilibriumSet(roots, diags, v, note)


def linearize(model: GridModel, eq: Equilibrium | PhaseState) -> FloatArray:
    """2n x 2n Jacobian of (delta, delta_dot) -> (delta_dot, accel) at ``eq``."""
    delta = eq.delta_star if isinstance(eq, Equilibrium) else eq.delta
    n = model.n
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = coupling_laplacian(model, np.asarray(delta, dtype=np.float64))
    J[n:, n:] = -np.diag(model.alpha)
    return J


@dataclass(frozen=True, eq=False)
class EigenReport:
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    mode_class: tuple[str, ...] = ()

    def __len__(self) -> int:
        return int(self.eigenvalues.shape[0])


def eigen(A) -> EigenReport:
    """Full spectrum with unit-norm left and right eigenvectors.

    Backed by LAPACK's Hessenberg QR iteration (scipy.linalg.eig); every pair
    is checked against ||A v - lambda v|| <= 1e-8 ||A||.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eigen needs a square matrix")
    if A.shape[0] > EIG_MAX_DIM:
        raise ValueError(f"matrix dimension {A.shape[0]} exceeds {EIG_MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(A)
        raise EigenError(f"eigen iteration did not converge (condition number {cond:.3g})") from exc
    vr = vr / np.linalg.norm(vr, axis=0, keepdims=True)
    vl = vl / np.linalg.norm(vl, axis=0, keepdims=True)
    scale = max(np.linalg.norm(A, 2), 1.0)
    res_r = np.linalg.norm(A @ vr - vr * w, axis=0)
    res_l = np.linalg.norm(vl.conj().T @ A - w[:, None] * vl.conj().T, axis=1)
    worst = float(max(res_r.max(initial=0.0), res_l.max(initial=0.0)))
    if worst > EIG_RESIDUAL * scale:
        cond = np.linalg.cond(A)
        raise EigenError(
            f"eigenpair residual {worst:.3g} exceeds bound (condition number {cond:.3g})"
        )
    order = np.lexsort((w.imag, -w.real))
    return EigenReport(w[order], vr[:, order], vl[:, order])


def _angle_pattern(vec: np.ndarray, n: int) -> np.ndarray:
    """Angle part of an eigenvector rotated onto the real axis and normalized."""
    a = np.asarray(vec[:n], dtype=complex)
    k = int(np.argmax(np.abs(a)))
    if abs(a[k]) == 0:
        return np.zeros(n)
    real = (a * np.exp(-1j * np.angle(a[k]))).real
    return real / np.max(np.abs(real))


def classify_modes(
    report: EigenReport, eq: Equilibrium | PhaseState, model: GridModel, *, tol: float = 1e-8
) -> EigenReport:
    """Attach a phase-pattern class to every eigenpair."""
    n = model.n
    areas = model.areas
    zero_tol = tol * max(1.0, float(np.max(np.abs(report.eigenvalues), initial=0.0)))
    classes = []
    for lam, vec in zip(report.eigenvalues, report.right.T):
        p = _angle_pattern(vec, n)
        uniform = bool(np.max(np.abs(p - p[0])) < 1e-6) and abs(p[0]) > 0
        if abs(lam) <= zero_tol and uniform:
            classes.append("zero_mode")
            continue
        small = np.abs(p) < 1e-6
        if uniform or (not small.any() and (np.all(p > 0) or np.all(p < 0))):
            classes.append("in_phase_like")
            continue
        if not small.any() and len(areas) >= 2:
            signs = {a: set(np.sign(p[model.area_members(a)]).tolist()) for a in areas}
            if all(len(s) == 1 for s in signs.values()) and len({s.pop() for s in signs.values()}) == 2:
                classes.append("anti_phase_like")
                continue
        classes.append("mixed")
    return EigenReport(report.eigenvalues, report.right, report.left, tuple(classes))


def is_stable(report: EigenReport, *, tol: float = 1e-8) -> bool:
    """No eigenvalue with positive real part, ignoring the phase-shift zero mode."""
    for lam, cls in zip(report.eigenvalues, report.mode_class or ("",) * len(report)):
        if cls == "zero_mode":
            continue
        if lam.real > tol:
            return False
    return True


def reduced_curvature(k: float, sign: float, phi: float) -> float:
    """Coefficient c in the linearized pair equation Phi'' = c Phi.

    For Phi'' = -2 S k sin(Phi), c = -2 S k cos(Phi*).
    """
    return -2.0 * sign * k * np.cos(phi)


def reduced_eigenvalues(curvature: float, alpha: float = 0.0) -> np.ndarray:
    """Eigenvalues of [[0, 1], [c, -alpha]], the damped reduced mode."""
    return np.linalg.eigvals(np.array([[0.0, 1.0], [curvature, -alpha]]))
