"""The ``rps`` command line.

Exit codes: 0 success (and every requested check passed), 2 a certificate or
periodicity test failed, 1 an operational error (bad config, I/O, ...).
"""

import argparse
import os
import sys

import numpy as np

from . import analysis, io
from .config import build_model, certify, initial_state, load_config
from .defaults import NUMERICS
from .engine import (simulate, simulate_delay, simulate_delay_coupled,
                     simulate_reflection_coupled)
from .errors import ConfigError, RpsError
from .metric import build_phi
from .noise import ensemble_noise, make_noise
from .rates import as_multiple


def _paths(args, cfg, default):
    out_dir = args.out_dir or (cfg.output["dir"] if cfg is not None else ".")
    primary = args.out or os.path.join(out_dir, default)
    stem, _ = os.path.splitext(primary)
    return primary, stem


def _meta(cfg, command, **extra):
    return {"seed": cfg.run["seed"], "config_digest": cfg.digest, "command": command, **extra}


def _steps(span, h, what):
    n = as_multiple(span, h)
    if n is None:
        raise ConfigError([(what, f"{span!r} is not a multiple of the step {h!r}")])
    return n


def _record_every(cfg):
    P = _steps(cfg.model["period"], cfg.step, "model.period")
    return max(1, P // 100) if P % max(1, P // 100) == 0 else 1


def _state_columns(prefix, d):
    return [f"{prefix}{i + 1}" for i in range(d)]


def _metric(cfg):
    if not cfg.hh:
        return None
    n = cfg.numerics
    return build_phi(float(cfg.hh["K1"]), float(cfg.hh["K2"]), float(cfg.hh["L"]),
                     n["phi_table_step"], n["phi_tail_mass"], n["phi_limit_tol"])


def _depth(cfg, model):
    if cfg.run["pullback_depth"] is not None:
        return cfg.run["pullback_depth"]
    try:
        cert = certify(cfg, model)
    except ConfigError:
        return cfg.run["pullback_max"]
    decay = cert.per_period_decay if cert.passed else 0.0
    return analysis.pullback_depth(decay, cfg.run["pullback_target"], cfg.run["pullback_max"])


# -- subcommands -----------------------------------------------------------

def cmd_certify(args, cfg):
    cert = certify(cfg)
    out, _ = _paths(args, cfg, "cert.json")
    d = cert.to_dict()
    d["config_digest"] = cfg.digest
    io.write_json(out, d)
    print(f"{cert.theorem}: {'PASS' if cert.passed else 'FAIL'} -> {out}")
    return 0 if cert.passed else 2


def cmd_phi(args, cfg):
    n = cfg.numerics if cfg is not None else NUMERICS
    hh = cfg.hh if cfg is not None else {}
    k1 = args.k1 if args.k1 is not None else hh.get("K1")
    k2 = args.k2 if args.k2 is not None else hh.get("K2")
    L = args.L if args.L is not None else hh.get("L")
    if None in (k1, k2, L):
        raise ConfigError([("hh", "give --k1, --k2 and --L (or an hh section in --config)")])
    m = build_phi(float(k1), float(k2), float(L), n["phi_table_step"], n["phi_tail_mass"],
                  n["phi_limit_tol"])
    out, _ = _paths(args, cfg, "phi.csv")
    meta = {"K1": float(k1), "K2": float(k2), "L": float(L), "C_star": m.C_star,
            "C_upper_star": m.C_upper_star, "r_max": m.r_max}
    if cfg is not None:
        meta.update(seed=cfg.run["seed"], config_digest=cfg.digest)
    io.write_csv(out, ["r", "phi", "phi_prime"],
                 zip(m.grid, m.phi_values, m.phi_prime_values), meta)
    print(f"C_* = {m.C_star!r}, C^* = {m.C_upper_star!r}, r_max = {m.r_max!r} -> {out}")
    return 0


def cmd_simulate(args, cfg):
    model = build_model(cfg)
    h, s = cfg.step, cfg.run["anchor"]
    t = s + cfg.run["horizon"]
    w = make_noise(cfg.run["seed"], 0, s, h, _steps(cfg.run["horizon"], h, "run.horizon"),
                   model.dim)
    out, _ = _paths(args, cfg, "path.csv")
    cols = ["time"] + _state_columns("x", model.dim)
    if cfg.model_class == "sde":
        p = simulate(model, s, t, initial_state(cfg, model), w)
    else:
        p = simulate_delay(model, s, t, initial_state(cfg, model), w)
    rows = ([tt, *v] for tt, v in zip(p.times, p.values))
    io.write_csv(out, cols, rows, _meta(cfg, "simulate", step=h), cfg.output["precision"])
    print(f"path on [{s!r}, {t!r}] -> {out}")
    return 0


def cmd_couple(args, cfg):
    model = build_model(cfg)
    if cfg.model["initial_y"] is None:
        raise ConfigError([("model.initial_y", "coupling needs a second initial state")])
    h, s = cfg.step, cfg.run["anchor"]
    t = s + cfg.run["horizon"]
    N = cfg.run["ensemble"]
    w = ensemble_noise(cfg.run["seed"], N, s, h, _steps(cfg.run["horizon"], h, "run.horizon"),
                       model.dim)
    every = _record_every(cfg)
    out, stem = _paths(args, cfg, "couple.csv")
    summary = {"ensemble": N, "config_digest": cfg.digest, "seed": cfg.run["seed"]}
    try:
        cert = certify(cfg, model)
        predicted = -cert.per_period_decay
        summary["certificate_passed"] = cert.passed
    except ConfigError:
        predicted = None
    if cfg.model_class == "sde":
        metric = _metric(cfg)
        run = simulate_reflection_coupled(model, s, t, initial_state(cfg, model),
                                          initial_state(cfg, model, "initial_y"), w,
                                          cfg.numerics["eps_couple"], metric, every)
        ca = np.asarray(run.coupled_at)
        d = model.dim
        cols = (["time"] + _state_columns("x", d) + _state_columns("y", d)
                + ["z_norm", "phi_z", "coupled_flag"])
        phi = run.phi_z if run.phi_z is not None else np.full(run.z_norms.shape, np.nan)
        k = np.rint((run.times - s) / h)
        flag = (ca[0] >= 0) & (k >= ca[0])
        rows = ([tt, *x, *y, z, p, bool(f)] for tt, x, y, z, p, f in
                zip(run.times, run.x_path[:, 0], run.y_path[:, 0], run.z_norms[:, 0],
                    phi[:, 0], flag))
        summary.update(eps_couple=run.eps_couple, coupled_fraction=run.coupled_fraction,
                       quantity="E phi(|Z|)" if metric is not None else "E|Z|")
    else:
        run = simulate_delay_coupled(model, s, t, initial_state(cfg, model),
                                     initial_state(cfg, model, "initial_y"), w, every)
        cols = ["time", "diff_norm"]
        rows = zip(run.times, np.atleast_2d(run.diff_norms.T).T[:, 0])
        metric = None
        if cfg.model_class == "delay-finite" and predicted is not None:
            predicted = cert.ell
    io.write_csv(out, cols, rows, _meta(cfg, "couple", step=h), cfg.output["precision"])
    if N >= 100 and cfg.run["horizon"] >= 2 * model.period:
        try:
            fit = analysis.contraction_fit(run, model.period, metric, predicted=predicted,
                                           n_boot=cfg.run["bootstrap"], seed=cfg.run["seed"])
            summary["fit"] = fit.to_dict()
        except RpsError as exc:
            summary["fit_error"] = str(exc)
    io.write_json(stem + ".json", summary)
    print(f"coupled run -> {out}, {stem}.json")
    return 0


def cmd_pullback(args, cfg):
    model = build_model(cfg)
    h, t = cfg.step, cfg.run["anchor"]
    K = _depth(cfg, model)
    span = K * model.period
    w = make_noise(cfg.run["seed"], 0, t - span, h, _steps(span, h, "pull-back span"), model.dim)
    xi = initial_state(cfg, model)
    res = analysis.pullback(model, t, xi.values if hasattr(xi, "values") else xi, K, w)
    out, stem = _paths(args, cfg, "pullback.csv")
    io.write_csv(out, ["k", "gap"], ((k + 1, g) for k, g in enumerate(res.cauchy_gaps)),
                 _meta(cfg, "pullback", K=K), cfg.output["precision"])
    io.write_json(stem + ".json", {**res.to_dict(), "config_digest": cfg.digest,
                                   "seed": cfg.run["seed"]})
    print(f"K = {K}, fitted ratio {res.fitted_ratio!r} -> {out}")
    return 0


def cmd_periodicity(args, cfg):
    model = build_model(cfg)
    mode = args.mode or cfg.run["mode"]
    K = _depth(cfg, model)
    xi = initial_state(cfg, model)
    xi = xi.values if hasattr(xi, "values") else xi
    if mode == "dist":
        rep = analysis.distributional_periodicity_test(
            model, cfg.run["anchor"], xi, K, cfg.run["ensemble"], cfg.run["seed"], cfg.step,
            shift=cfg.run["shift"])
    else:
        rep = analysis.pathwise_periodicity_test(model, cfg.run["anchor"], xi, K,
                                                 cfg.run["seed"], cfg.step,
                                                 tolerance=cfg.run["tolerance"])
    out, _ = _paths(args, cfg, "periodicity.json")
    io.write_json(out, {**rep.to_dict(), "config_digest": cfg.digest})
    print(f"{mode}: statistic {rep.statistic!r}, {'PASS' if rep.passed else 'FAIL'} -> {out}")
    return 0 if rep.passed else 2


def cmd_probe(args, cfg):
    model = build_model(cfg)
    xi = initial_state(cfg, model)
    xi = xi.values if hasattr(xi, "values") else xi
    p = analysis.moment_probe(model, cfg.run["anchor"], cfg.run["horizon"], xi,
                              cfg.run["ensemble"], cfg.run["seed"], cfg.step,
                              cfg.run["probe_points"])
    out, stem = _paths(args, cfg, "probe.csv")
    io.write_csv(out, ["probe_time", "mean_square", "stderr"],
                 zip(p.times, p.mean_square, p.stderr), _meta(cfg, "probe"),
                 cfg.output["precision"])
    io.write_json(stem + ".json", {**p.to_dict(), "config_digest": cfg.digest})
    print(f"max mean square {p.max_mean_square!r}, trend {'yes' if p.trend else 'no'} -> {out}")
    return 0


COMMANDS = {"certify": cmd_certify, "phi": cmd_phi, "simulate": cmd_simulate,
            "couple": cmd_couple, "pullback": cmd_pullback, "periodicity": cmd_periodicity,
            "probe": cmd_probe}


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (YAML or JSON)")
    common.add_argument("--out", help="primary output file")
    common.add_argument("--out-dir", help="directory for outputs (overrides output.dir)")
    common.add_argument("--seed", type=int, help="overrides run.seed")
    parser = argparse.ArgumentParser(prog="rps", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "phi":
            p.add_argument("--k1", type=float)
            p.add_argument("--k2", type=float)
            p.add_argument("--L", type=float)
        if name == "periodicity":
            p.add_argument("--mode", choices=["dist", "path"])
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.command != "phi":
            raise ConfigError([("--config", f"required for {args.command}")])
        if cfg is not None:
            if args.seed is not None:
                cfg.run["seed"] = args.seed
            if args.out_dir is not None:
                cfg.output["dir"] = args.out_dir
        return COMMANDS[args.command](args, cfg)
    except (RpsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
