"""YAML run configuration with defaults and line-anchored validation errors."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import yaml

from .levy import LevyModel
from .reward import RewardExpr
from .solver import ETA_KINDS, EtaMode, ScanGrid, StoppingProblem, infer_eta_mode

DEFAULT_CONFIG = {
    "process": {"mu": 0.0, "sigma": 1.0},
    "q": 0.02,
    "reward": {
        "terms": [{"c": 1.0, "n": 0, "r": 0.1}, {"c": 1.0, "n": 0, "r": -0.05}, {"c": -2.0, "n": 0, "r": 0.0}],
        "positive_part": False,
    },
    "eta_mode": "auto",
    "solver": {"grid_lo": None, "grid_hi": None, "grid_step": None, "tol": 1e-10},
    "mc": {"paths": 100000, "step": 0.01, "seed": 20240601, "horizon_cap": None, "workers": 1},
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class Config:
    data: dict

    @property
    def mc(self) -> dict:
        return self.data["mc"]

    def problem(self) -> StoppingProblem:
        d = self.data
        model = LevyModel(d["process"]["mu"], d["process"]["sigma"], d["q"])
        reward = RewardExpr.from_terms(d["reward"]["terms"], d["reward"]["positive_part"])
        mode = d["eta_mode"]
        if mode == "auto":
            eta = infer_eta_mode(reward)
        elif isinstance(mode, str):
            eta = EtaMode(mode)
        else:
            eta = EtaMode(**mode)
        s = d["solver"]
        grid = None
        if s["grid_lo"] is not None:
            grid = ScanGrid(s["grid_lo"], s["grid_hi"], s["grid_step"])
        return StoppingProblem(model, reward, eta, grid, s["tol"])

    def resolved(self) -> dict:
        """Config with the derived eta mode and scan grid filled in."""
        p = self.problem()
        out = copy.deepcopy(self.data)
        mode = {"kind": p.eta_mode.kind}
        if p.eta_mode.kind == "two_sided":
            mode.update(a=p.eta_mode.a, b=p.eta_mode.b)
        if p.eta_mode.kind == "empirical":
            mode.update(samples=p.eta_mode.samples, step=p.eta_mode.step, seed=p.eta_mode.seed)
        out["eta_mode"] = mode
        out["solver"].update(grid_lo=p.grid.lo, grid_hi=p.grid.hi, grid_step=p.grid.step)
        return out


def _line(marks, path):
    while path:
        if path in marks:
            return marks[path]
        path = path[:-1]
    return None


def _walk(node, path, marks):
    marks[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _walk(v, path + (k.value,), marks)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _walk(v, path + (i,), marks)


def _number(value, path, marks, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{'.'.join(map(str, path))} must be a number", _line(marks, path))
    if not math.isfinite(value):
        raise ConfigError(f"{'.'.join(map(str, path))} must be finite", _line(marks, path))
    if integer:
        if int(value) != value:
            raise ConfigError(f"{'.'.join(map(str, path))} must be an integer", _line(marks, path))
        return int(value)
    return float(value)


def _merge(defaults, given, path, marks):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'} must be a mapping", _line(marks, path))
    unknown = set(given) - set(defaults)
    if unknown:
        key = sorted(map(str, unknown))[0]
        raise ConfigError(f"unknown field {key!r}", _line(marks, path + (key,)))
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def parse_config(text: str) -> Config:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    marks: dict = {}
    if node is not None:
        _walk(node, (), marks)
    d = _merge(DEFAULT_CONFIG, raw if raw is not None else {}, (), marks)
    for key in ("process", "solver", "mc"):
        d[key] = _merge(DEFAULT_CONFIG[key], (raw or {}).get(key), (key,), marks)
    d["reward"] = _merge(DEFAULT_CONFIG["reward"], (raw or {}).get("reward"), ("reward",), marks)

    d["process"]["mu"] = _number(d["process"]["mu"], ("process", "mu"), marks)
    d["process"]["sigma"] = _number(d["process"]["sigma"], ("process", "sigma"), marks)
    d["q"] = _number(d["q"], ("q",), marks)
    if d["process"]["sigma"] <= 0:
        raise ConfigError("process.sigma must be positive", _line(marks, ("process", "sigma")))
    if d["q"] <= 0:
        raise ConfigError("q must be positive", _line(marks, ("q",)))

    terms = d["reward"]["terms"]
    if not isinstance(terms, list) or not terms:
        raise ConfigError("reward.terms must be a nonempty list", _line(marks, ("reward", "terms")))
    clean = []
    for i, t in enumerate(terms):
        p = ("reward", "terms", i)
        if not isinstance(t, dict) or set(t) - {"c", "n", "r"}:
            raise ConfigError("each term needs fields c, n, r", _line(marks, p))
        n = _number(t.get("n", 0), p + ("n",), marks, integer=True)
        if n < 0:
            raise ConfigError("term power n must be nonnegative", _line(marks, p + ("n",)))
        clean.append({"c": _number(t.get("c"), p + ("c",), marks), "n": n,
                      "r": _number(t.get("r", 0.0), p + ("r",), marks)})
    d["reward"]["terms"] = clean
    if not isinstance(d["reward"]["positive_part"], bool):
        raise ConfigError("reward.positive_part must be true or false", _line(marks, ("reward", "positive_part")))
    if not any(t["c"] != 0 for t in clean):
        raise ConfigError("reward has no nonzero terms", _line(marks, ("reward", "terms")))

    mode = d["eta_mode"]
    if isinstance(mode, str):
        if mode != "auto" and mode not in ETA_KINDS:
            raise ConfigError(f"eta_mode must be auto or one of {ETA_KINDS}", _line(marks, ("eta_mode",)))
        if mode == "two_sided":
            raise ConfigError("two_sided eta_mode needs a and b", _line(marks, ("eta_mode",)))
    elif isinstance(mode, dict):
        if mode.get("kind") not in ETA_KINDS or set(mode) - {"kind", "a", "b", "samples", "step", "seed"}:
            raise ConfigError("eta_mode mapping needs a valid kind", _line(marks, ("eta_mode",)))
        for k in ("a", "b", "step"):
            if k in mode:
                mode[k] = _number(mode[k], ("eta_mode", k), marks)
        for k in ("samples", "seed"):
            if k in mode:
                mode[k] = _number(mode[k], ("eta_mode", k), marks, integer=True)
    else:
        raise ConfigError("eta_mode must be a string or mapping", _line(marks, ("eta_mode",)))

    s = d["solver"]
    for k in ("grid_lo", "grid_hi", "grid_step"):
        s[k] = _number(s[k], ("solver", k), marks, allow_none=True)
    s["tol"] = _number(s["tol"], ("solver", "tol"), marks)
    given = [s[k] is not None for k in ("grid_lo", "grid_hi", "grid_step")]
    if any(given) and not all(given):
        raise ConfigError("grid_lo, grid_hi and grid_step go together", _line(marks, ("solver",)))
    if all(given) and not s["grid_lo"] < s["grid_hi"]:
        raise ConfigError("solver.grid_lo must be below grid_hi", _line(marks, ("solver", "grid_lo")))
    if all(given) and s["grid_step"] <= 0:
        raise ConfigError("solver.grid_step must be positive", _line(marks, ("solver", "grid_step")))
    if s["tol"] <= 0:
        raise ConfigError("solver.tol must be positive", _line(marks, ("solver", "tol")))

    m = d["mc"]
    m["paths"] = _number(m["paths"], ("mc", "paths"), marks, integer=True)
    m["seed"] = _number(m["seed"], ("mc", "seed"), marks, integer=True)
    m["workers"] = _number(m["workers"], ("mc", "workers"), marks, integer=True)
    m["step"] = _number(m["step"], ("mc", "step"), marks)
    m["horizon_cap"] = _number(m["horizon_cap"], ("mc", "horizon_cap"), marks, allow_none=True)
    if m["paths"] < 2:
        raise ConfigError("mc.paths must be at least 2", _line(marks, ("mc", "paths")))
    if m["step"] <= 0:
        raise ConfigError("mc.step must be positive", _line(marks, ("mc", "step")))
    if m["workers"] < 1:
        raise ConfigError("mc.workers must be at least 1", _line(marks, ("mc", "workers")))

    cfg = Config(d)
    try:
        cfg.problem()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str | None) -> Config:
    if path is None:
        return parse_config("")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
