import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from gridsync import scenario
from gridsync.integrator import RunConfig
from gridsync.scenario import ModelSpec, ScenarioError, ScenarioSpec

# values as printed for the two-area four-machine cases
PRINTED_K1 = [
    [0, 1.9689, 0.1766, 0.1782],
    [1.9689, 0, 0.1782, 0.1801],
    [0.1766, 0.1782, 0, 1.9363],
    [0.1782, 0.1801, 1.9363, 0],
]
PRINTED_K2 = [
    [0, 2.5960, 0.2130, 0.2151],
    [2.5960, 0, 0.2151, 0.2171],
    [0.2130, 0.2151, 0, 1.7214],
    [0.2151, 0.2171, 1.7214, 0],
]
PRINTED_W1 = [17.5290, 17.7923, 17.5640, 17.8285]
PRINTED_W2 = [16.8882, 17.1532, 17.7931, 18.0629]


def builtins_match_printed():
    c1, c2 = scenario.builtin("case1"), scenario.builtin("case2")
    return (
        [list(r) for r in c1.model.K] == PRINTED_K1
        and [list(r) for r in c2.model.K] == PRINTED_K2
        and list(c1.model.omega) == PRINTED_W1
        and list(c2.model.omega) == PRINTED_W2
        and all(a == 0.125 for a in c1.model.alpha + c2.model.alpha)
    )


def test_builtin_values():
    assert builtins_match_printed()
    assert scenario.builtin("case1").model.K[0][1] == 1.9689
    assert scenario.builtin("case2").model.omega[3] == 18.0629
    m = scenario.builtin("case1").build_model()
    assert m.sign.tolist() == [[1, 1, -1, -1], [1, 1, -1, -1], [-1, -1, 1, 1], [-1, -1, 1, 1]]


def test_unknown_builtin_lists_names():
    with pytest.raises(ScenarioError, match="case1, case2"):
        scenario.builtin("case3")


@st.composite
def specs(draw):
    n = draw(st.integers(2, 6))
    mode = draw(st.sampled_from(["cc", "conformist", "contrarian", "custom"]))
    p = draw(st.integers(1, n - 1))
    num = st.floats(-1e3, 1e3, allow_nan=False)
    omega = tuple(draw(st.lists(num, min_size=n, max_size=n)))
    alpha = tuple(draw(st.lists(st.floats(0, 10), min_size=n, max_size=n)))
    upper = draw(st.lists(st.floats(0, 50), min_size=n * n, max_size=n * n))
    K = [[0.0] * n for _ in range(n)]
    S = [[1] * n for _ in range(n)]
    signs = draw(st.lists(st.sampled_from([1, -1]), min_size=n * n, max_size=n * n))
    for i in range(n):
        for j in range(i + 1, n):
            K[i][j] = K[j][i] = upper[i * n + j]
            S[i][j] = S[j][i] = signs[i * n + j]
    explicit = draw(st.booleans())
    run = RunConfig(
        dt=draw(st.sampled_from([1e-3, 2e-3, 5e-4])),
        t_end=draw(st.floats(1.0, 500.0)),
        record_stride=draw(st.integers(1, 50)),
        seed=draw(st.integers(0, 2**63 - 1)),
        init_mode="explicit" if explicit else "uniform_random",
        init_delta=tuple(draw(st.lists(num, min_size=n, max_size=n))) if explicit else None,
        init_delta_dot=tuple(draw(st.lists(num, min_size=n, max_size=n))) if explicit else None,
    )
    meta = draw(st.dictionaries(st.text("abcxyz_", min_size=1, max_size=6), st.integers() | st.text(max_size=8), max_size=3))
    return ScenarioSpec(
        name=draw(st.text("abcdefghij-_0123456789", min_size=1, max_size=12)),
        model=ModelSpec(n, p, omega, alpha, tuple(map(tuple, K)), mode,
                        tuple(map(tuple, S)) if mode == "custom" else None),
        run=run,
        metadata=meta,
    )


@settings(max_examples=100, deadline=None)
@given(specs())
def test_round_trip_identity(spec):
    back = scenario.from_dict(yaml.safe_load(scenario.dumps(spec)))
    assert back == spec


def test_save_and_load_case1(tmp_path):
    path = tmp_path / "c1.yaml"
    scenario.save(scenario.builtin("case1"), path)
    assert scenario.load(path) == scenario.builtin("case1")
    assert scenario.resolve(str(path)) == scenario.builtin("case1")


def write(tmp_path, data):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def base_dict():
    return scenario.builtin("case1").to_dict()


def test_asymmetric_coupling_names_both_indices(tmp_path):
    d = base_dict()
    d["model"]["K"][0][1] = 1.0
    with pytest.raises(ScenarioError, match=r"K\[1\]\[2\] != model.K\[2\]\[1\]"):
        scenario.load(write(tmp_path, d))


def test_empty_area_rejected(tmp_path):
    d = base_dict()
    d["model"]["p"] = 0
    with pytest.raises(ScenarioError, match="model.p"):
        scenario.load(write(tmp_path, d))


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["model"]["omega"].pop(), "model.omega"),
        (lambda d: d["model"]["alpha"].__setitem__(2, -1.0), r"model.alpha\[3\]"),
        (lambda d: d["model"]["K"][1].__setitem__(1, 0.5), r"model.K\[2\]\[2\]"),
        (lambda d: d["model"].__setitem__("sign_mode", "mixed"), "model.sign_mode"),
        (lambda d: d["run"].__setitem__("dt", -1.0), "run"),
        (lambda d: d["run"].__setitem__("seed", "x"), "run.seed"),
        (lambda d: d.__setitem__("extra", 1), "extra"),
        (lambda d: d["model"].__setitem__("S", [[1]]), "model.S"),
    ],
)
def test_field_errors(tmp_path, mutate, field):
    d = base_dict()
    mutate(d)
    with pytest.raises(ScenarioError, match=field):
        scenario.load(write(tmp_path, d))


def test_malformed_yaml_reports_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("name: x\nmodel: [1, 2\n")
    with pytest.raises(ScenarioError, match="line"):
        scenario.load(path)


def test_resolve_unknown():
    with pytest.raises(ScenarioError, match="valid names"):
        scenario.resolve("no-such-thing")


def test_built_model_matches_spec():
    spec = scenario.builtin("case2")
    m = spec.build_model()
    assert np.array_equal(m.coupling, np.array(PRINTED_K2))
    assert m.area_of.tolist() == [1, 1, 2, 2]
