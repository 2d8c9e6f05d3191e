import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsync import scenario
from gridsync.model import GridModel, PhaseState, rhs
from gridsync.stability import (
    EigenError,
    classify_modes,
    coupling_laplacian,
    eigen,
    is_stable,
    linearize,
    reduced_curvature,
    reduced_eigenvalues,
    solve_equilibria,
)

from conftest import pair


def random_model(rng, n):
    K = np.triu(rng.uniform(0, 3, (n, n)), 1)
    S = np.triu(rng.choice([-1, 1], (n, n)), 1)
    return GridModel(
        omega=rng.normal(0, 2, n), alpha=rng.uniform(0, 1, n),
        coupling=K + K.T, sign=S + S.T + np.eye(n, dtype=int), area_of=np.arange(n) % 2,
    )


def fd_jacobian(model, delta, ddelta, h=1e-6):
    """Central differences of the full vector field, no shared code with linearize."""
    n = model.n
    x0 = np.concatenate([delta, ddelta])

    def f(x):
        return np.concatenate([x[n:], rhs(model, PhaseState(x[:n], x[n:]))])

    J = np.empty((2 * n, 2 * n))
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        J[:, k] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return J


def jacobian_rel_error(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    m = random_model(rng, n)
    d = rng.uniform(-np.pi, np.pi, n)
    v = rng.normal(0, 1, n)
    A = linearize(m, PhaseState(d, v))
    B = fd_jacobian(m, d, v)
    return np.max(np.abs(A - B)) / max(np.max(np.abs(B)), 1.0)


@pytest.mark.parametrize("seed", range(50))
def test_jacobian_finite_difference(seed):
    assert jacobian_rel_error(seed) <= 1e-5


def test_pair_roots_are_zero_and_pi():
    for sign in (1, -1):
        eqs = solve_equilibria(pair(k=1.0, sign=sign, alpha=0.1))
        phis = sorted(abs(float(e.delta_star[1])) for e in eqs)
        assert phis == pytest.approx([0.0, np.pi], abs=1e-9)


def stability_of(model, phi):
    eqs = solve_equilibria(model)
    e = next(e for e in eqs if abs(abs(e.delta_star[1]) - phi) < 1e-6)
    rep = classify_modes(eigen(linearize(model, e)), e, model)
    return is_stable(rep), rep


def test_conformist_and_contrarian_swap_stability():
    conf = pair(k=1.0, sign=1, alpha=0.1)
    contra = pair(k=1.0, sign=-1, alpha=0.1)
    assert stability_of(conf, 0.0)[0] and not stability_of(conf, np.pi)[0]
    assert stability_of(contra, np.pi)[0] and not stability_of(contra, 0.0)[0]
    _, rep = stability_of(conf, np.pi)
    assert np.max(rep.eigenvalues.real) > 0


def test_laplacian_hand_value():
    k = 1.7
    L = coupling_laplacian(pair(k=k), np.zeros(2))
    assert np.allclose(L, [[-k, k], [k, -k]])


@given(st.integers(0, 10_000))
def test_laplacian_rows_sum_to_zero(seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(2, 8)))
    L = coupling_laplacian(m, rng.uniform(-10, 10, m.n))
    assert np.allclose(L.sum(axis=1), 0.0, atol=1e-12)


def test_antiphase_reduced_dynamics_unstable():
    k = 0.8
    J = linearize(pair(k=k), PhaseState(np.array([0.0, np.pi]), np.zeros(2)))
    # perturb delta_2 alone: Phi'' = (L[1, 1] - L[0, 1]) Phi
    L = J[2:, :2]
    c = L[1, 1] - L[0, 1]
    assert c == pytest.approx(2 * k)
    assert reduced_curvature(k, 1, np.pi) == pytest.approx(2 * k)


def test_eigen_diagonal_and_in_phase_block():
    assert sorted(eigen(np.diag([1.0, -2.0])).eigenvalues.real) == [-2.0, 1.0]
    J = linearize(pair(k=1.0), PhaseState(np.zeros(2), np.zeros(2)))
    w = eigen(J).eigenvalues
    nonzero = w[np.abs(w) > 1e-8]
    assert sorted(nonzero.imag) == pytest.approx([-np.sqrt(2), np.sqrt(2)])
    assert np.allclose(nonzero.real, 0.0, atol=1e-12)


def test_eigen_vectors_and_errors():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(6, 6))
    rep = eigen(A)
    for lam, v, u in zip(rep.eigenvalues, rep.right.T, rep.left.T):
        assert np.linalg.norm(A @ v - lam * v) < 1e-10
        assert np.linalg.norm(u.conj() @ A - lam * u.conj()) < 1e-10
    with pytest.raises(ValueError):
        eigen(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigen(np.array([[np.nan]]))
    assert issubclass(EigenError, np.linalg.LinAlgError)


def test_zero_mode_and_mode_classes():
    m = pair(k=1.0, alpha=0.2)
    eqs = solve_equilibria(m)
    e = next(e for e in eqs if abs(e.delta_star[1]) < 1e-6)
    rep = classify_modes(eigen(linearize(m, e)), e, m)
    assert "zero_mode" in rep.mode_class
    assert "anti_phase_like" in rep.mode_class
    assert is_stable(rep)


def test_case1_homogeneous_has_pi_state_root():
    spec = scenario.builtin("case1")
    m = spec.build_model()
    m = m.replace(omega=np.full(4, m.omega.mean()))
    eqs = solve_equilibria(m)
    found = []
    for e in eqs:
        d = e.delta_star
        if abs(np.angle(np.exp(1j * (d[1] - d[0])))) < 1e-6 and abs(abs(np.angle(np.exp(1j * (d[2] - d[0])))) - np.pi) < 1e-6:
            found.append(e)
            acc = rhs(m, PhaseState(d, np.full(4, eqs.frame_velocity)))
            assert np.max(np.abs(acc)) < 1e-9
    assert found


def test_case1_has_stable_pi_like_equilibrium():
    m = scenario.builtin("case1").build_model()
    eqs = solve_equilibria(m)
    stable = [e for e in eqs if is_stable(classify_modes(eigen(linearize(m, e)), e, m))]
    assert len(stable) >= 1
    d = stable[0].delta_star
    assert abs(abs(np.angle(np.exp(1j * (d[2] - d[0])))) - np.pi) < 0.2


def test_no_roots_when_undamped_with_drift():
    eqs = solve_equilibria(pair(omega=(1.0, 1.0), alpha=0.0))
    assert len(eqs) == 0 and eqs.note


def reduced_sign_structure(k, sign):
    cin = reduced_curvature(k, sign, 0.0)
    cap = reduced_curvature(k, sign, np.pi)
    return np.sign(cin), np.sign(cap)


@settings(max_examples=100)
@given(st.floats(1e-3, 50.0), st.sampled_from([1, -1]), st.floats(0.0, 2.0))
def test_reduced_sign_structure(k, sign, alpha):
    sin_, sap = reduced_sign_structure(k, sign)
    assert sin_ == -sap
    fin, fap = reduced_sign_structure(k, -sign)
    assert (fin, fap) == (-sin_, -sap)
    # stable mode is the one with negative curvature
    lam = reduced_eigenvalues(reduced_curvature(k, sign, 0.0), alpha)
    assert (np.max(lam.real) > 0) == (sin_ > 0)


def test_reduced_incoherent_curvature_zero():
    for k in (0.1, 1.0, 10.0):
        for s in (1, -1):
            assert abs(reduced_curvature(k, s, np.pi / 2)) <= 1e-10
    lam = reduced_eigenvalues(reduced_curvature(1.0, 1, np.pi / 2), 0.0)
    assert np.allclose(lam, 0.0, atol=1e-7)


@given(st.floats(1e-3, 20.0), st.sampled_from([1, -1]), st.floats(-np.pi, np.pi))
def test_reduced_curvature_matches_full_linearization(k, sign, phi):
    J = linearize(pair(k=k, sign=sign), PhaseState(np.array([0.0, phi]), np.zeros(2)))
    L = J[2:, :2]
    assert reduced_curvature(k, sign, phi) == pytest.approx(L[1, 1] - L[0, 1], abs=1e-12)
