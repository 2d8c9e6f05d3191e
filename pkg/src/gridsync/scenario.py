"""Scenario files and the built-in two-area four-machine cases.

A scenario file is YAML with three required sections::

    name: case1
    model:
      n: 4
      p: 2                 # generators 1..p form area 1, p+1..n area 2
      sign_mode: cc        # conformist | contrarian | cc | custom
      omega: [...]         # rad/s
      alpha: [...]         # 1/s
      K: [[...], ...]      # rad/s^2, symmetric, zero diagonal
      S: [[...], ...]      # only with sign_mode: custom
    run:
      dt: 0.001
      t_end: 200.0
      record_stride: 10
      seed: 7
      init_mode: uniform_random   # zero | uniform_random | explicit
      init_low: -3.141592653589793
      init_high: 3.141592653589793
      init_delta: [...]           # explicit only
      init_delta_dot: [...]       # explicit only
      init_t: 0.0
    metadata: {}                  # free-form, never interpreted

CSV layouts written by the command line live in :mod:`gridsync.tables`.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .integrator import INIT_MODES, RunConfig
from .model import SIGN_MODES, GridModel, ModelError, sign_matrix


class ScenarioError(ValueError):
    """Schema or invariant violation, naming the offending field."""


CASE1_K = (
    (0.0, 1.9689, 0.1766, 0.1782),
    (1.9689, 0.0, 0.1782, 0.1801),
    (0.1766, 0.1782, 0.0, 1.9363),
    (0.1782, 0.1801, 1.9363, 0.0),
)
CASE2_K = (
    (0.0, 2.5960, 0.2130, 0.2151),
    (2.5960, 0.0, 0.2151, 0.2171),
    (0.2130, 0.2151, 0.0, 1.7214),
    (0.2151, 0.2171, 1.7214, 0.0),
)
CASE1_OMEGA = (17.5290, 17.7923, 17.5640, 17.8285)
CASE2_OMEGA = (16.8882, 17.1532, 17.7931, 18.0629)
CASE_ALPHA = 0.125
CASE_INERTIA = 0.4
CASE_SYNC_HZ = 1.0
BUILTIN_T_END = 200.0
BUILTIN_SEED = 7


@dataclass(frozen=True)
class ModelSpec:
    n: int
    p: int
    omega: tuple[float, ...]
    alpha: tuple[float, ...]
    K: tuple[tuple[float, ...], ...]
    sign_mode: str = "cc"
    S: Optional[tuple[tuple[int, ...], ...]] = None

    def area_of(self) -> list[int]:
        return [1 if i < self.p else 2 for i in range(self.n)]

    def build(self) -> GridModel:
        if self.sign_mode == "custom":
            sign = np.array(self.S, dtype=np.int8)
        else:
            sign = sign_matrix(self.area_of(), self.sign_mode)
        return GridModel(
            omega=np.array(self.omega), alpha=np.array(self.alpha),
            coupling=np.array(self.K), sign=sign, area_of=self.area_of(),
        )


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    model: ModelSpec
    run: RunConfig = field(default_factory=RunConfig)
    metadata: dict = field(default_factory=dict)

    def build_model(self) -> GridModel:
        return self.model.build()

    def to_dict(self) -> dict:
        m = asdict(self.model)
        m["K"] = [list(r) for r in self.model.K]
        m["omega"] = list(self.model.omega)
        m["alpha"] = list(self.model.alpha)
        if self.model.S is None:
            del m["S"]
        else:
            m["S"] = [list(r) for r in self.model.S]
        r = asdict(self.run)
        for key in ("init_delta", "init_delta_dot"):
            if r[key] is None:
                del r[key]
            else:
                r[key] = list(r[key])
        return {"name": self.name, "model": m, "run": r, "metadata": dict(self.metadata)}


def _case(name, K, omega, metadata):
    return ScenarioSpec(
        name=name,
        model=ModelSpec(
            n=4, p=2, omega=omega, alpha=(CASE_ALPHA,) * 4, K=K, sign_mode="cc",
        ),
        run=RunConfig(dt=1e-3, t_end=BUILTIN_T_END, record_stride=10, seed=BUILTIN_SEED),
        metadata=metadata,
    )


def _builtins() -> dict[str, ScenarioSpec]:
    common = {
        "system": "two-area four-machine",
        "inertia_kg_m2": CASE_INERTIA,
        "sync_frequency_hz": CASE_SYNC_HZ,
    }
    return {
        "case1": _case("case1", CASE1_K, CASE1_OMEGA, {
            **common,
            "area1_generation_load_mw": "1400/1367",
            "area2_generation_load_mw": "1400/1367",
            "tie_flow_area1_to_area2_mw": 0,
        }),
        "case2": _case("case2", CASE2_K, CASE2_OMEGA, {
            **common,
            "area1_generation_load_mw": "1400/967",
            "area2_generation_load_mw": "1450/1767",
            "tie_flow_area1_to_area2_mw": 400,
        }),
    }


BUILTIN_NAMES = ("case1", "case2")


def builtin(name: str) -> ScenarioSpec:
    table = _builtins()
    if name not in table:
        raise ScenarioError(f"unknown scenario {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")
    return table[name]


def _num(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            out = float(value)
        except ValueError:
            raise ScenarioError(f"{path}: expected a number, got {value!r}") from None
    else:
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(out):
        raise ScenarioError(f"{path}: must be finite")
    return out


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path}: expected an integer, got {value!r}")
    return value


def _vector(value: Any, n: int, path: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{path}: expected a list of {n} numbers")
    if len(value) != n:
        raise ScenarioError(f"{path}: expected {n} entries, got {len(value)}")
    return tuple(_num(x, f"{path}[{k + 1}]") for k, x in enumerate(value))


def _matrix(value: Any, n: int, path: str) -> tuple[tuple[float, ...], ...]:
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"{path}: expected {n} rows")
    return tuple(_vector(row, n, f"{path}[{k + 1}]") for k, row in enumerate(value))


def _section(data: dict, key: str, path: str = "") -> dict:
    value = data.get(key)
    if not isinstance(value, dict):
        raise ScenarioError(f"{path}{key}: missing or not a mapping")
    return value


def _check_unknown(data: dict, allowed: set, path: str) -> None:
    extra = sorted(set(data) - allowed)
    if extra:
        raise ScenarioError(f"{path}{extra[0]}: unknown field")


def from_dict(data: Any) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: top level must be a mapping")
    _check_unknown(data, {"name", "model", "run", "metadata"}, "")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name: missing or not a string")

    m = _section(data, "model")
    _check_unknown(m, {"n", "p", "omega", "alpha", "K", "sign_mode", "S"}, "model.")
    n = _int(m.get("n"), "model.n")
    if n < 1:
        raise ScenarioError("model.n: must be at least 1")
    p = _int(m.get("p"), "model.p")
    mode = m.get("sign_mode", "cc")
    if mode not in SIGN_MODES + ("custom",):
        raise ScenarioError(f"model.sign_mode: must be one of {SIGN_MODES + ('custom',)}, got {mode!r}")
    if mode == "cc" and not 1 <= p < n:
        raise ScenarioError(f"model.p: cc mode needs two non-empty areas, got p={p} for n={n}")
    if not 0 <= p <= n:
        raise ScenarioError(f"model.p: must lie in [0, {n}], got {p}")
    omega = _vector(m.get("omega"), n, "model.omega")
    alpha = _vector(m.get("alpha"), n, "model.alpha")
    for k, a in enumerate(alpha):
        if a < 0:
            raise ScenarioError(f"model.alpha[{k + 1}]: must be non-negative")
    K = _matrix(m.get("K"), n, "model.K")
    for i in range(n):
        if K[i][i] != 0:
            raise ScenarioError(f"model.K[{i + 1}][{i + 1}]: diagonal must be zero")
        for j in range(n):
            if K[i][j] < 0:
                raise ScenarioError(f"model.K[{i + 1}][{j + 1}]: negative coupling {K[i][j]}")
            if K[i][j] != K[j][i]:
                raise ScenarioError(
                    f"model.K[{i + 1}][{j + 1}] != model.K[{j + 1}][{i + 1}]: coupling must be symmetric"
                )
    S = None
    if mode == "custom":
        raw = _matrix(m.get("S"), n, "model.S")
        for i in range(n):
            for j in range(n):
                if raw[i][j] not in (1.0, -1.0):
                    raise ScenarioError(f"model.S[{i + 1}][{j + 1}]: entry must be +1 or -1")
                if raw[i][j] != raw[j][i]:
                    raise ScenarioError(f"model.S[{i + 1}][{j + 1}] != model.S[{j + 1}][{i + 1}]")
            if raw[i][i] != 1.0:
                raise ScenarioError(f"model.S[{i + 1}][{i + 1}]: diagonal must be +1")
        S = tuple(tuple(int(x) for x in row) for row in raw)
    elif "S" in m:
        raise ScenarioError("model.S: only allowed with sign_mode: custom")
    model = ModelSpec(n=n, p=p, omega=omega, alpha=alpha, K=K, sign_mode=mode, S=S)

    r = data.get("run", {})
    if not isinstance(r, dict):
        raise ScenarioError("run: not a mapping")
    fields = {
        "dt", "t_end", "record_stride", "seed", "init_mode", "init_low", "init_high",
        "init_delta", "init_delta_dot", "init_t",
    }
    _check_unknown(r, fields, "run.")
    kwargs: dict[str, Any] = {}
    for key in ("dt", "t_end", "init_low", "init_high", "init_t"):
        if key in r:
            kwargs[key] = _num(r[key], f"run.{key}")
    for key in ("record_stride", "seed"):
        if key in r:
            kwargs[key] = _int(r[key], f"run.{key}")
    if "init_mode" in r:
        if r["init_mode"] not in INIT_MODES:
            raise ScenarioError(f"run.init_mode: must be one of {INIT_MODES}")
        kwargs["init_mode"] = r["init_mode"]
    for key in ("init_delta", "init_delta_dot"):
        if key in r:
            kwargs[key] = _vector(r[key], n, f"run.{key}")
    try:
        run = RunConfig(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"run: {exc}") from None

    meta = data.get("metadata", {}) or {}
    if not isinstance(meta, dict):
        raise ScenarioError("metadata: not a mapping")
    spec = ScenarioSpec(name=name, model=model, run=run, metadata=meta)
    try:
        spec.build_model()
    except ModelError as exc:
        raise ScenarioError(f"model: {exc}") from None
    return spec


def load(path: str | os.PathLike) -> ScenarioSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: malformed scenario file{where}: {exc}") from None
    try:
        return from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def dumps(spec: ScenarioSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=False, default_flow_style=None, width=100)


def save(spec: ScenarioSpec, path: str | os.PathLike) -> None:
    text = dumps(spec)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scenario-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve(name_or_path: str) -> ScenarioSpec:
    """Built-in name or path to a scenario file."""
    if name_or_path in BUILTIN_NAMES:
        return builtin(name_or_path)
    if os.path.exists(name_or_path):
        return load(name_or_path)
    raise ScenarioError(
        f"unknown scenario {name_or_path!r}; valid names: {', '.join(BUILTIN_NAMES)} or a file path"
    )
