"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL ...`` line. Run standalone with
``python3 tests/test_acceptance.py`` for just the summary lines.
"""

import time

import numpy as np
import pytest
import yaml

import test_equal_area as ea_oracles
import test_integrator as int_oracles
import test_scenario as sc_oracles
import test_stability as stab_oracles
from gridsync import cli, scenario
from gridsync.analysis import (
    area_phase_summary,
    classify_state,
    evaluation_start,
    order_parameter,
)
from gridsync.bifurcation import SweepSpec, chimera_onset, sweep_r1, sweep_r2
from gridsync.integrator import RunConfig, integrate
from gridsync.model import GridModel, PhaseState
from gridsync.scenario import ModelSpec, ScenarioSpec
from gridsync.stability import linearize, reduced_curvature

from conftest import pair

SYNC = {"in_phase", "pi_state", "traveling_wave"}


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {n}: {detail}"

    return emit


def simulate_geometry(name, t_end=None):
    spec = scenario.builtin(name)
    model = spec.build_model()
    cfg = spec.run if t_end is None else RunConfig(**{**spec.run.__dict__, "t_end": t_end})
    t0 = time.perf_counter()
    traj = integrate(model, cfg)
    label = classify_state(traj, model)
    geo = area_phase_summary(traj, model, evaluation_start(traj))
    return label.label, geo, time.perf_counter() - t0


def test_criterion_1_case1(report, tmp_path):
    # the command itself, with the built-in scenario's run settings
    outcome = cli.run(["simulate", "--scenario", "case1", "--out", str(tmp_path)])
    label, geo, _ = simulate_geometry("case1")
    _, _, elapsed = simulate_geometry("case1", t_end=100.0)
    ok = (
        outcome.exit_code == 0
        and abs(geo.inter - (-3.12)) <= 0.05
        and abs(geo.intra - 0.06) <= 0.05
        and elapsed < 10.0
    )
    report(1, ok, f"label={label} inter={geo.inter:.4f} intra={geo.intra:.4f} runtime_t100={elapsed:.2f}s")


def test_criterion_2_case2(report):
    label, geo, elapsed = simulate_geometry("case2")
    ok = (
        abs(geo.inter - (-2.6)) <= 0.1
        and abs(geo.intra - 0.05) <= 0.05
        and label == "traveling_wave"
        and elapsed < 10.0
    )
    report(2, ok, f"label={label} inter={geo.inter:.4f} intra={geo.intra:.4f} runtime={elapsed:.2f}s")


def test_criterion_3_r2_sweep(report):
    model = scenario.builtin("case1").build_model()
    spec = SweepSpec("r2", 5.0, 12.0, 0.25, run=RunConfig(t_end=200.0, seed=7))
    t0 = time.perf_counter()
    d = sweep_r2(model, spec, threads=4)
    elapsed = time.perf_counter() - t0
    p7, p10 = d.point(7.0), d.point(10.0)
    onset = chimera_onset(d)
    ok = (
        p7.label in SYNC
        and p10.label == "chimera"
        and p10.r_area[0] >= 0.9
        and onset is not None
        and 7.0 < onset <= 10.0
        and elapsed < 300.0
    )
    report(3, ok, f"r2=7:{p7.label} r2=10:{p10.label} R1(10)={p10.r_area[0]:.4f} onset={onset} runtime={elapsed:.1f}s")


def test_criterion_4_r1_sweep(report):
    model = scenario.builtin("case1").build_model()
    spec = SweepSpec("r1", -1.0, 1.0, 0.05, run=RunConfig(t_end=200.0, seed=7))
    d = sweep_r1(model, spec, threads=4)
    inner = [pt.spread for pt in d.points if abs(pt.param) <= 0.5 + 1e-12]
    outer = [pt.spread for pt in d.points if 0.6 + 1e-12 < abs(pt.param) <= 1.0 + 1e-12]
    frac = float(np.mean([s > 0.1 for s in outer]))
    ok = max(inner) < 0.01 and frac >= 0.8
    report(4, ok, f"max_spread(|r1|<=0.5)={max(inner):.3g} scattered_fraction(|r1|in(0.6,1])={frac:.2f}")


def test_criterion_5_eigen_sign_structure(report):
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(100):
        k = rng.uniform(0.01, 10.0)
        s = rng.choice([-1, 1])
        curv = {}
        for sign in (s, -s):
            for phi in (0.0, np.pi):
                # full-Jacobian route, compared against the reduced formula
                L = linearize(pair(k=k, sign=sign), PhaseState(np.array([0.0, phi]), np.zeros(2)))[2:, :2]
                full = L[1, 1] - L[0, 1]
                red = reduced_curvature(k, sign, phi)
                if abs(full - red) > 1e-12 * max(1.0, abs(red)):
                    bad += 1
                curv[(sign, phi)] = np.sign(red)
        if curv[(s, 0.0)] != -curv[(s, np.pi)]:
            bad += 1
        if curv[(-s, 0.0)] != -curv[(s, 0.0)] or curv[(-s, np.pi)] != -curv[(s, np.pi)]:
            bad += 1
        if abs(reduced_curvature(k, s, np.pi / 2)) > 1e-10:
            bad += 1
    report(5, bad == 0, f"violations={bad} over 100 models")


def test_criterion_6_jacobian(report):
    errs = [stab_oracles.jacobian_rel_error(seed) for seed in range(50)]
    report(6, max(errs) <= 1e-5, f"max_rel_err={max(errs):.2e} over 50 pairs")


def test_criterion_7_convergence(report):
    slope = int_oracles.convergence_slope()
    report(7, 3.7 <= slope <= 4.3, f"slope={slope:.3f}")


def test_criterion_8_order_parameter(report):
    rng = np.random.default_rng(8)
    in_range, shift = True, 0.0
    for _ in range(10_000):
        d = rng.uniform(-20, 20, int(rng.integers(1, 50)))
        R, _ = order_parameter(d)
        in_range &= 0.0 <= R <= 1.0
        shift = max(shift, abs(order_parameter(d + rng.uniform(-50, 50))[0] - R))
    hand = abs(order_parameter([0.0, 0.0, np.pi / 2, np.pi / 2])[0] - np.sqrt(2) / 2)
    ok = in_range and shift <= 1e-12 and hand <= 1e-12
    report(8, ok, f"in_range={in_range} max_shift_diff={shift:.1e} hand_err={hand:.1e}")


def test_criterion_9_equal_area(report):
    cases = ea_oracles.analytic_cases()
    worst = max(max(ea_oracles.oracle_errors(*c)) for c in cases)
    signs = all(ea_oracles.node_signs_agree(*c[:3]) for c in cases)
    report(9, worst <= 1e-8 and signs, f"max_area_err={worst:.1e} node_signs_agree={signs} curves={len(cases)}")


def random_spec(rng):
    n = int(rng.integers(2, 7))
    K = np.triu(rng.uniform(0, 5, (n, n)), 1)
    K = K + K.T
    mode = str(rng.choice(["cc", "conformist", "contrarian", "custom"]))
    S = None
    if mode == "custom":
        s = np.triu(rng.choice([-1, 1], (n, n)), 1)
        S = tuple(tuple(int(x) for x in row) for row in s + s.T + np.eye(n, dtype=int))
    return ScenarioSpec(
        name=f"rand{int(rng.integers(1e9))}",
        model=ModelSpec(
            n=n, p=int(rng.integers(1, n)),
            omega=tuple(float(x) for x in rng.normal(0, 20, n)),
            alpha=tuple(float(x) for x in rng.uniform(0, 2, n)),
            K=tuple(tuple(float(x) for x in row) for row in K), sign_mode=mode, S=S,
        ),
        run=RunConfig(
            dt=float(rng.choice([1e-3, 5e-4])), t_end=float(rng.uniform(10, 400)),
            record_stride=int(rng.integers(1, 20)), seed=int(rng.integers(0, 2**62)),
        ),
        metadata={"tag": int(rng.integers(100))},
    )


def test_criterion_10_scenarios(report):
    exact = sc_oracles.builtins_match_printed()
    rng = np.random.default_rng(10)
    trips = sum(
        scenario.from_dict(yaml.safe_load(scenario.dumps(s))) == s
        for s in (random_spec(rng) for _ in range(100))
    )
    report(10, exact and trips == 100, f"builtins_exact={exact} round_trips={trips}/100")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
