"""Experiment configuration: parsing, validation, defaults and model assembly.

A config is a YAML (or JSON) mapping with sections ``model``, ``rates``,
``hh``, ``numerics``, ``run`` and ``output``.  Example::

    model:
      class: sde            # sde | delay-finite | delay-infinite
      preset: double-well
      period: 1.0
      initial: 2.0
      initial_y: -2.0
    hh: {K1: 1.0, K2: 1.0, L: 2.8284271247461903}
    rates:
      alpha: {type: trig, period: 1.0, const: 1.0, terms: [[1, 0.0, 0.5]]}
    run: {seed: 3, ensemble: 10000, horizon: 10.0}

Validation collects every violation before raising :class:`ConfigError`.
"""

import copy
import inspect
import json
import math
import re
from dataclasses import dataclass

import yaml

from . import presets
from .certificates import (HHParams, RateTriple, certify_reflection, certify_theorem2,
                           check_theorem3, digest)
from .defaults import NUMERICS, RUN, eps_couple, history_cut
from .errors import ConfigError
from .models import SegmentState
from .rates import PeriodicRate, as_multiple

CLASSES = {"sde": presets.SDE_PRESETS, "delay-finite": presets.DELAY_PRESETS,
           "delay-infinite": presets.INFINITE_PRESETS}

SECTIONS = {
    "model": {"class", "preset", "dimension", "period", "params", "r0", "alpha0", "history",
              "initial", "initial_y"},
    "rates": {"lambda1", "lambda2", "lambda3", "alpha"},
    "hh": {"K1", "K2", "L"},
    "numerics": set(NUMERICS),
    "run": set(RUN) | {"horizon", "shift", "mode", "pullback_depth", "tolerance"},
    "output": {"dir", "precision"},
}

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (1e-8)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))

RUN_DEFAULTS = {"horizon": 10.0, "shift": None, "mode": "dist", "pullback_depth": None,
                "tolerance": RUN["pullback_target"]}


@dataclass
class ExperimentConfig:
    model: dict
    rates: dict
    hh: dict
    numerics: dict
    run: dict
    output: dict

    def as_dict(self):
        return {k: copy.deepcopy(getattr(self, k)) for k in SECTIONS}

    @property
    def digest(self):
        # where results are written does not change them
        d = self.as_dict()
        d["output"].pop("dir", None)
        return digest(d)

    @property
    def model_class(self):
        return self.model["class"]

    @property
    def step(self):
        return self.numerics["step"]


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def parse_config(text):
    """Parse and validate config text; defaults are filled in."""
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError([("", f"not valid YAML/JSON: {exc}")])
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError([("", "config must be a mapping of sections")])
    bad = []
    for key in raw:
        if key not in SECTIONS:
            bad.append((key, f"unknown section; expected one of {sorted(SECTIONS)}"))
    sec = {}
    for name, allowed in SECTIONS.items():
        body = raw.get(name) or {}
        if not isinstance(body, dict):
            bad.append((name, "must be a mapping"))
            body = {}
        for key in body:
            if key not in allowed:
                bad.append((f"{name}.{key}", f"unknown field; expected one of {sorted(allowed)}"))
        sec[name] = dict(body)

    model = sec["model"]
    model.setdefault("class", "sde")
    model.setdefault("dimension", 1)
    model.setdefault("period", 1.0)
    model.setdefault("params", {})
    model.setdefault("initial", 0.0)
    model.setdefault("initial_y", None)
    cls = model["class"]
    if cls not in CLASSES:
        bad.append(("model.class", f"unknown class {cls!r}; expected one of {sorted(CLASSES)}"))
        table = {}
    else:
        table = CLASSES[cls]
    if "preset" not in model:
        bad.append(("model.preset", f"missing; available presets: {sorted(table)}"))
    elif table and model["preset"] not in table:
        bad.append(("model.preset", f"unknown preset {model['preset']!r}; "
                                    f"available presets: {sorted(table)}"))
    if not (isinstance(model["dimension"], int) and model["dimension"] >= 1):
        bad.append(("model.dimension", "must be a positive integer"))
    if not (_number(model["period"]) and model["period"] > 0):
        bad.append(("model.period", "must be a positive number"))
    if not isinstance(model["params"], dict):
        bad.append(("model.params", "must be a mapping"))
        model["params"] = {}
    for key in ("initial", "initial_y"):
        v = model[key]
        if v is not None and not (_number(v) or (isinstance(v, list) and all(map(_number, v)))):
            bad.append((f"model.{key}", "must be a number or a list of numbers"))

    num = {**NUMERICS, **sec["numerics"]}
    step = num["step"]
    if not (_number(step) and step > 0):
        bad.append(("numerics.step", "must be a positive number"))
        step = None
    for key in ("truncation", "phi_table_step", "phi_tail_mass", "phi_limit_tol",
                "divergence_guard"):
        if not (_number(num[key]) and num[key] > 0):
            bad.append((f"numerics.{key}", "must be a positive number"))
    for key in ("window_grid", "sign_grid"):
        if not (isinstance(num[key], int) and num[key] >= 2):
            bad.append((f"numerics.{key}", "must be an integer >= 2"))
    if num["eps_couple"] is None and step is not None:
        num["eps_couple"] = eps_couple(step)
    elif num["eps_couple"] is not None and not (_number(num["eps_couple"]) and num["eps_couple"] > 0):
        bad.append(("numerics.eps_couple", "must be a positive number"))

    if step is not None and _number(model["period"]) and model["period"] > 0:
        if as_multiple(model["period"], step) is None:
            bad.append(("numerics.step / model.period",
                        f"step {step!r} does not divide the period {model['period']!r}"))

    if cls == "delay-finite":
        r0 = model.get("r0")
        if not (_number(r0) and r0 > 0):
            bad.append(("model.r0", "finite memory needs r0 > 0"))
        elif step is not None and as_multiple(r0, step) is None:
            bad.append(("numerics.step / model.r0", f"step {step!r} does not divide r0 {r0!r}"))
        for key in ("alpha0", "history"):
            if model.get(key) is not None:
                bad.append((f"model.{key}", "only applies to class delay-infinite"))
    elif cls == "delay-infinite":
        a0 = model.get("alpha0")
        if not (_number(a0) and a0 > 0):
            bad.append(("model.alpha0", "infinite memory needs alpha0 > 0"))
        elif step is not None:
            if model.get("history") is None:
                model["history"] = history_cut(a0, step, num["truncation"])
            H = model["history"]
            if not (_number(H) and H > 0):
                bad.append(("model.history", "must be a positive number"))
            elif as_multiple(H, step) is None:
                bad.append(("numerics.step / model.history",
                            f"step {step!r} does not divide the history H {H!r}"))
            elif math.exp(-a0 * H) > num["truncation"] * (1 + 1e-9):
                bad.append(("model.history", f"exp(-alpha0*H) exceeds numerics.truncation "
                                             f"{num['truncation']!r}"))
        if model.get("r0") is not None:
            bad.append(("model.r0", "only applies to class delay-finite"))

    rates = {}
    for key, spec in sec["rates"].items():
        if key not in SECTIONS["rates"]:
            continue
        try:
            r = PeriodicRate.from_spec(spec, f"rates.{key}")
            if _number(model["period"]) and r.period != model["period"]:
                bad.append((f"rates.{key}.period", "must equal model.period"))
            rates[key] = r.to_spec()
        except ConfigError as exc:
            bad.extend(exc.violations)

    hh = sec["hh"]
    if hh:
        for key in ("K1", "K2", "L"):
            if key not in hh:
                bad.append((f"hh.{key}", "missing"))
            elif not _number(hh[key]):
                bad.append((f"hh.{key}", "must be a number"))
        if _number(hh.get("K2")) and hh["K2"] <= 0:
            bad.append(("hh.K2", "must be > 0"))
        for key in ("K1", "L"):
            if _number(hh.get(key)) and hh[key] < 0:
                bad.append((f"hh.{key}", "must be >= 0"))

    run = {**RUN, **RUN_DEFAULTS, **sec["run"]}
    for key in ("seed", "ensemble", "pullback_max", "bootstrap", "probe_points"):
        if not (isinstance(run[key], int) and not isinstance(run[key], bool) and run[key] >= 0):
            bad.append((f"run.{key}", "must be a nonnegative integer"))
    if isinstance(run["ensemble"], int) and run["ensemble"] < 1:
        bad.append(("run.ensemble", "must be at least 1"))
    if run["pullback_depth"] is not None and not (isinstance(run["pullback_depth"], int)
                                                  and run["pullback_depth"] >= 2):
        bad.append(("run.pullback_depth", "must be an integer >= 2"))
    if not (_number(run["pullback_target"]) and 0 < run["pullback_target"] < 1):
        bad.append(("run.pullback_target", "must lie in (0, 1)"))
    if run["mode"] not in ("dist", "path"):
        bad.append(("run.mode", "must be 'dist' or 'path'"))
    for key in ("anchor", "horizon"):
        if not _number(run[key]):
            bad.append((f"run.{key}", "must be a number"))
    if step is not None:
        for key in ("anchor", "horizon", "shift"):
            v = run[key]
            if _number(v) and as_multiple(v, step) is None:
                bad.append((f"numerics.step / run.{key}",
                            f"step {step!r} does not divide run.{key} {v!r}"))
    if _number(run["horizon"]) and run["horizon"] <= 0:
        bad.append(("run.horizon", "must be positive"))

    out = {"dir": ".", "precision": None, **sec["output"]}
    if out["precision"] is not None and not (isinstance(out["precision"], int)
                                             and out["precision"] > 0):
        bad.append(("output.precision", "must be null (shortest round-trip) or a positive integer"))

    if not bad and table:
        preset = table[model["preset"]]
        accepted = set(inspect.signature(preset).parameters)
        for key in model["params"]:
            if key not in accepted or key in _SUPPLIED:
                bad.append((f"model.params.{key}", f"not a parameter of preset "
                                                   f"{model['preset']!r}"))
    if bad:
        raise ConfigError(bad)
    cfg = ExperimentConfig(model, {k: rates[k] for k in sorted(rates)}, hh, num, run, out)
    if not bad:
        try:
            build_model(cfg)
        except ConfigError as exc:
            raise ConfigError([(f"model.{p}" if p else "model", m) for p, m in exc.violations])
        except TypeError as exc:
            raise ConfigError([("model.params", str(exc))])
    return cfg


def serialize_config(cfg):
    """Canonical text of a parsed config (JSON, sorted keys); parse/serialize is idempotent."""
    return json.dumps(cfg.as_dict(), sort_keys=True, indent=2) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- assembly --------------------------------------------------------------

# arguments filled from the config structure rather than model.params
_SUPPLIED = {"period", "step", "r0", "alpha0", "history", "truncation", "dim", "alpha"}


def build_model(cfg):
    m = cfg.model
    preset = CLASSES[m["class"]][m["preset"]]
    accepted = set(inspect.signature(preset).parameters)
    supplied = {"period": m["period"], "step": cfg.step, "dim": m["dimension"],
                "truncation": cfg.numerics["truncation"]}
    if m["class"] == "delay-finite":
        supplied["r0"] = m["r0"]
    if m["class"] == "delay-infinite":
        supplied["alpha0"] = m["alpha0"]
        supplied["history"] = m["history"]
    if "alpha" in cfg.rates:
        supplied["alpha"] = PeriodicRate.from_spec(cfg.rates["alpha"], "rates.alpha")
    kwargs = {k: v for k, v in supplied.items() if k in accepted}
    kwargs.update(m["params"])
    model = preset(**kwargs)
    if getattr(model, "dim", m["dimension"]) != m["dimension"]:
        raise ConfigError([("dimension", f"preset {m['preset']!r} has dimension {model.dim}")])
    return model


def initial_state(cfg, model, which="initial", anchor=None):
    """The configured start: a state vector, or a constant segment for delay models."""
    v = cfg.model[which]
    if v is None:
        return None
    if cfg.model_class == "sde":
        return [float(x) for x in (v if isinstance(v, list) else [v] * model.dim)]
    anchor = cfg.run["anchor"] if anchor is None else anchor
    return SegmentState.for_model(model, anchor, cfg.step, v)


def rate_triple(cfg):
    missing = [k for k in ("lambda1", "lambda2", "lambda3") if k not in cfg.rates]
    if missing:
        raise ConfigError([(f"rates.{k}", "required for this certificate") for k in missing])
    return RateTriple(*(PeriodicRate.from_spec(cfg.rates[k], f"rates.{k}")
                        for k in ("lambda1", "lambda2", "lambda3")))


def hh_params(cfg, model=None):
    if not cfg.hh:
        raise ConfigError([("hh", "K1, K2 and L are required for the reflection certificate")])
    alpha = None
    if "alpha" in cfg.rates:
        alpha = PeriodicRate.from_spec(cfg.rates["alpha"], "rates.alpha")
    elif model is not None and getattr(model, "alpha", None) is not None:
        alpha = model.alpha
    if alpha is None:
        raise ConfigError([("rates.alpha", "required for the reflection certificate")])
    return HHParams(float(cfg.hh["K1"]), float(cfg.hh["K2"]), float(cfg.hh["L"]), alpha)


def certify(cfg, model=None):
    """Certificate for the configured model class."""
    grid = cfg.numerics["window_grid"]
    if cfg.model_class == "sde":
        model = build_model(cfg) if model is None else model
        from .metric import build_phi
        p = hh_params(cfg, model)
        n = cfg.numerics
        metric = build_phi(p.K1, p.K2, p.L, n["phi_table_step"], n["phi_tail_mass"],
                           n["phi_limit_tol"])
        # the default (t, x, y) sample grid is one-dimensional
        return certify_reflection(p, metric, drift=model.drift if model.dim == 1 else None)
    if cfg.model_class == "delay-finite":
        return certify_theorem2(rate_triple(cfg), cfg.model["r0"], grid=grid)
    return check_theorem3(rate_triple(cfg), cfg.model["alpha0"], grid=grid)
