"""Command-line interface: config parsing, orchestration, CSV/JSON emission.

Every run is driven by a strict JSON config (unknown keys are rejected) plus
a handful of flag overrides, executes one subcommand, writes RFC-4180 CSV
data files and a JSON summary carrying the config echo, a content hash of
the config, the master seed and the wall time. Exit codes: 0 success,
1 config error, 2 analysis failure (bracketing, budgets).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import brw_engine, fixed_point, kinetic_solver, spectral
from .errors import AnalysisError, ConfigError, KineticBrwError
from .initial_laws import law_from_config
from .seeding import substream
from .weight_models import model_from_config

SUBCOMMANDS = (
    "spectral",
    "theta",
    "simulate",
    "scaling-study",
    "fixed-point",
    "check-assumptions",
    "martingales",
)

_TOP_KEYS = {"model", "initial", "command", "seed", "budgets", "output"}
_BUDGET_KEYS = {"particle_cap", "samples", "bootstrap"}
_COMMAND_KEYS = {
    "spectral": {"name", "theta_grid", "budget"},
    "theta": {"name", "bracket", "tol", "budget"},
    "simulate": {"name", "t", "samples"},
    "scaling-study": {
        "name", "t_grid", "samples", "xi_grid", "regime_override", "ks_threshold",
    },
    "fixed-point": {"name", "seed_from", "iters", "ks_tol", "pool_size"},
    "check-assumptions": {"name", "budget"},
    "martingales": {"name", "delta", "n_max", "replicates"},
}

DEFAULT_SAMPLES = 1000
DEFAULT_BOOTSTRAP = 500


def _fmt(x) -> str:
    """Stable text form: shortest round-trip repr for floats."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _config_hash(config: dict) -> str:
    data = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path}: {exc.msg} (line {exc.lineno}, column {exc.colno})"
        ) from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    return config


def _command_block(config: dict, name: str) -> dict:
    block = config.get("command", {})
    if not isinstance(block, dict):
        raise ConfigError("command block must be an object")
    declared = block.get("name")
    if declared is not None and declared != name:
        raise ConfigError(f"config command block names {declared!r}, not {name!r}")
    unknown = set(block) - _COMMAND_KEYS[name]
    if unknown:
        raise ConfigError(f"command: unknown keys {sorted(unknown)} for {name!r}")
    return block


def _budgets(config: dict, args) -> dict:
    block = config.get("budgets", {})
    if not isinstance(block, dict):
        raise ConfigError("budgets block must be an object")
    unknown = set(block) - _BUDGET_KEYS
    if unknown:
        raise ConfigError(f"budgets: unknown keys {sorted(unknown)}")
    cap = int(block.get("particle_cap", brw_engine.DEFAULT_CAP))
    if args.cap is not None:
        cap = args.cap
    return {
        "particle_cap": cap,
        "samples": int(block.get("samples", DEFAULT_SAMPLES)),
        "bootstrap": int(block.get("bootstrap", DEFAULT_BOOTSTRAP)),
    }


def _seed(config: dict, args) -> int:
    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is None:
        raise ConfigError("a master seed is required (config 'seed' or --seed)")
    seed = int(seed)
    if not (0 <= seed < 2**64):
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _profile_for(model, budgets, rng, block=None):
    block = block or {}
    bracket = tuple(block.get("bracket", spectral.DEFAULT_BRACKET))
    tol = float(block.get("tol", 1e-9))
    budget = int(block.get("budget", budgets["samples"] * 100))
    return spectral.find_theta_star(model, bracket=bracket, tol=tol, budget=budget, rng=rng)


# ---------------------------------------------------------------------------
# subcommand runners: each returns (summary_dict, {filename: (header, rows)})


def _run_spectral(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    block = _command_block(config, "spectral")
    grid = block.get("theta_grid") or [round(0.1 * k, 10) for k in range(31)]
    budget = int(block.get("budget", 100_000))
    rows = []
    method = None
    for theta in grid:
        est = spectral.phi(model, float(theta), budget=budget, rng=rng)
        method = est.method
        f_val = est.value / theta if theta > 0 else math.nan
        rows.append((theta, est.value, est.se, f_val))
    summary = {"model": model.describe(), "method": method}
    return summary, {"spectral.csv": (("theta", "phi", "phi_se", "F"), rows)}


def _run_theta(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    block = _command_block(config, "theta")
    profile = _profile_for(model, budgets, rng, block)
    screen = spectral.screen_assumptions(model, profile, rng=rng)
    header = ("theta_star", "theta_se", "F_at_theta", "D_at_theta", "log2_at_theta", "method")
    row = (profile.theta_star, profile.theta_se, profile.f_at_theta,
           profile.d_at_theta, profile.log2_at_theta, profile.method)
    summary = {
        "model": model.describe(),
        "theta_star": profile.theta_star,
        "theta_se": profile.theta_se,
        "F_at_theta": profile.f_at_theta,
        "D_at_theta": profile.d_at_theta,
        "log2_at_theta": profile.log2_at_theta,
        "method": profile.method,
        "assumptions": {
            "nonlattice_declared": screen.nonlattice,
            "log2_moment": {"value": screen.log2_moment.value, "se": screen.log2_moment.se},
            "x_log2_x": {"value": screen.x_log2_x.value, "se": screen.x_log2_x.se},
            "xt_log_xt": {"value": screen.xt_log_xt.value, "se": screen.xt_log_xt.se},
            "bounded_offspring": screen.bounded_offspring,
        },
    }
    return summary, {"theta.csv": (header, [row])}


def _run_simulate(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    law = law_from_config(config.get("initial"))
    block = _command_block(config, "simulate")
    if "t" not in block:
        raise ConfigError("simulate needs command.t")
    t = float(block["t"])
    n = int(block.get("samples", budgets["samples"]))
    sample_set = brw_engine.sample_mu_t(
        model, law, t, n, rng, cap=budgets["particle_cap"], threads=args.threads, seed=seed
    )
    rows = [(i, t, v) for i, v in enumerate(sample_set.values)]
    mean = float(sample_set.values.mean())
    se = float(sample_set.values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    summary = {
        "model": model.describe(),
        "initial": law.describe(),
        "t": t,
        "mean": mean,
        "se": se,
        "count": n,
        "truncations": 0,
    }
    return summary, {"samples.csv": (("replicate", "t", "u_t"), rows)}


def _run_scaling_study(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    law = law_from_config(config.get("initial"))
    block = _command_block(config, "scaling-study")
    profile = _profile_for(model, budgets, rng)
    t_grid = args.t_grid if args.t_grid is not None else block.get("t_grid")
    if not t_grid:
        raise ConfigError("scaling-study needs command.t_grid or --t-grid")
    n = args.samples if args.samples is not None else int(block.get("samples", budgets["samples"]))
    override_name = args.regime_override or block.get("regime_override")
    override = None
    if override_name:
        if override_name not in ("subcritical", "boundary", "beyond_boundary"):
            raise ConfigError(f"unknown regime override {override_name!r}")
        ts = profile.theta_star
        p = {"subcritical": 0.0, "boundary": 1.0 / (2 * ts),
             "beyond_boundary": 3.0 / (2 * ts)}[override_name]
        r = profile.phi(law.gamma) / law.gamma if override_name == "subcritical" else profile.f_at_theta
        override = spectral.RegimeReport(law.gamma, ts, override_name, p, r)
    result = kinetic_solver.scaling_study(
        model, law, profile, [float(t) for t in t_grid], n, rng,
        cap=budgets["particle_cap"], threads=args.threads,
        bootstrap=budgets["bootstrap"],
        ks_threshold=float(block.get("ks_threshold", 0.05)),
        regime_override=override,
        seed=seed,
    )
    rows = []
    for i, t in enumerate(result.times):
        rows.append((t, "ks_prev", result.ks_prev[i], "", ""))
        rows.append((t, "iqr", result.iqr[i], "", ""))
        rows.append((t, "median_abs", result.median_abs[i], "", ""))
        rows.append((t, "mean_unscaled", result.mean_unscaled[i],
                     result.mean_unscaled[i] - result.mean_unscaled_se[i],
                     result.mean_unscaled[i] + result.mean_unscaled_se[i]))
        for pt in result.cf[i]:
            rows.append((t, f"cf_re@{_fmt(pt.xi)}", pt.re, pt.re_lo, pt.re_hi))
            rows.append((t, f"cf_im@{_fmt(pt.xi)}", pt.im, pt.im_lo, pt.im_hi))
    terminal = result.sets[-1]
    sample_rows = [(i, terminal.t, v) for i, v in enumerate(terminal.values)]
    summary = {
        "model": model.describe(),
        "initial": law.describe(),
        "regime": result.regime.regime,
        "theta_star": profile.theta_star,
        "p": result.regime.p,
        "r": result.regime.r,
        "verdict": {
            "converged": result.converged,
            "final_ks": result.final_ks,
            "iqr": result.iqr[-1],
        },
    }
    return summary, {
        "study.csv": (("t", "diagnostic", "value", "lo", "hi"), rows),
        "terminal_samples.csv": (("replicate", "t", "value"), sample_rows),
    }


def _read_sample_column(path: str) -> np.ndarray:
    """Read the sample column of a CSV written by simulate or scaling-study."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for name in ("u_t", "value"):
            if name in header:
                col = header.index(name)
                break
        else:
            col = len(header) - 1
        return np.array([float(row[col]) for row in reader])


def _run_fixed_point(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    block = _command_block(config, "fixed-point")
    seed_from = args.seed_from or block.get("seed_from")
    if not seed_from:
        raise ConfigError("fixed-point needs command.seed_from or --seed-from")
    values = _read_sample_column(seed_from)
    pool_size = block.get("pool_size")
    if pool_size is not None:
        values = values[: int(pool_size)]
    if values.size == 0:
        raise ConfigError(f"no samples found in {seed_from}")
    profile = _profile_for(model, budgets, rng)
    iters = args.iters if args.iters is not None else int(block.get("iters", 20))
    ks_tol = args.ks_tol if args.ks_tol is not None else float(block.get("ks_tol", 0.05))
    pool = fixed_point.FixedPointPool.from_samples(values)
    final, report = fixed_point.iterate_to_fixed_point(
        pool, model, profile.f_at_theta, iters, ks_tol, rng
    )
    iter_rows = [
        (k + 1, ks, report.scale_trajectory[k + 1])
        for k, ks in enumerate(report.ks_trajectory)
    ]
    pool_rows = [(v,) for v in final.samples]
    summary = {
        "model": model.describe(),
        "F_at_theta": profile.f_at_theta,
        "pool_size": int(final.samples.size),
        "iterations": report.iterations,
        "converged": report.converged,
        "collapsed": report.collapsed,
        "final_ks": report.ks_trajectory[-1] if report.ks_trajectory else math.nan,
    }
    return summary, {
        "iterations.csv": (("iteration", "ks", "median_abs"), iter_rows),
        "pool.csv": (("value",), pool_rows),
    }


def _run_check_assumptions(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    block = _command_block(config, "check-assumptions")
    profile = _profile_for(model, budgets, rng)
    budget = int(block.get("budget", 200_000))
    screen = spectral.screen_assumptions(model, profile, budget=budget, rng=rng)
    rows = [
        ("nonlattice_declared", _none_as_unknown(screen.nonlattice), ""),
        ("log2_moment", screen.log2_moment.value, screen.log2_moment.se),
        ("x_log2_x", screen.x_log2_x.value, screen.x_log2_x.se),
        ("xt_log_xt", screen.xt_log_xt.value, screen.xt_log_xt.se),
        ("bounded_offspring", _none_as_unknown(screen.bounded_offspring), ""),
    ]
    summary = {
        "model": model.describe(),
        "theta_star": profile.theta_star,
        "screen": {name: value for name, value, _ in rows},
    }
    return summary, {"screen.csv": (("assumption", "value", "se"), rows)}


def _none_as_unknown(flag):
    return "unknown" if flag is None else flag


def _run_martingales(config, args, budgets, rng, seed):
    model = model_from_config(config.get("model"))
    block = _command_block(config, "martingales")
    profile = _profile_for(model, budgets, rng)
    delta = float(block.get("delta", 1.0))
    n_max = int(block.get("n_max", 5))
    replicates = int(block.get("replicates", budgets["samples"]))
    report = brw_engine.skeleton_diagnostics(
        model, profile, delta, n_max, replicates, rng,
        cap=budgets["particle_cap"], threads=args.threads,
    )
    rows = [
        (
            n,
            report.w_mean[i], report.w_se[i],
            report.d_mean[i], report.d_se[i],
            report.v2_mean[i], report.v2_se[i],
            report.min_recentred_mean[i], report.min_recentred_se[i],
        )
        for i, n in enumerate(report.steps)
    ]
    summary = {
        "model": model.describe(),
        "delta": delta,
        "replicates": replicates,
        "sigma2": report.sigma2,
        "sigma2_se": report.v2_se[0],
        "theta_star": profile.theta_star,
    }
    return summary, {
        "martingales.csv": (
            ("n", "w_mean", "w_se", "d_mean", "d_se", "v2_mean", "v2_se",
             "min_recentred_mean", "min_recentred_se"),
            rows,
        )
    }


_RUNNERS = {
    "spectral": _run_spectral,
    "theta": _run_theta,
    "simulate": _run_simulate,
    "scaling-study": _run_scaling_study,
    "fixed-point": _run_fixed_point,
    "check-assumptions": _run_check_assumptions,
    "martingales": _run_martingales,
}


def run(subcommand: str, args) -> int:
    """Execute one subcommand; returns the process exit code."""
    started = time.monotonic()
    config = _load_config(args.config)
    seed = _seed(config, args)
    budgets = _budgets(config, args)
    out_dir = Path(args.out if args.out is not None else config.get("output", {}).get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = substream(seed, subcommand)

    summary, files = _RUNNERS[subcommand](config, args, budgets, rng, seed)

    written = []
    for name, (header, rows) in files.items():
        path = out_dir / name
        _write_csv(path, header, rows)
        written.append(str(path))
    payload = {
        "command": subcommand,
        "seed": seed,
        "config": config,
        "config_hash": _config_hash(config),
        "budgets": budgets,
        "threads": args.threads,
        "wall_time_s": round(time.monotonic() - started, 3),
        "outputs": written,
        **summary,
    }
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    print(json.dumps({"command": subcommand, "out": str(out_dir),
                      "summary": str(summary_path)}))
    return 0


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinetic-brw",
        description="Monte Carlo analysis of kinetic-type evolution equations "
                    "via branching random walks",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="replicate-level worker threads")
        p.add_argument("--cap", type=int, default=None, help="particle budget per replicate")
        if name == "scaling-study":
            p.add_argument("--t-grid", dest="t_grid", default=None,
                           type=lambda s: [float(x) for x in s.split(",")])
            p.add_argument("--samples", type=int, default=None)
            p.add_argument("--regime-override", dest="regime_override", default=None)
        else:
            p.set_defaults(t_grid=None, samples=None, regime_override=None)
        if name == "fixed-point":
            p.add_argument("--seed-from", dest="seed_from", default=None)
            p.add_argument("--iters", type=int, default=None)
            p.add_argument("--ks-tol", dest="ks_tol", type=float, default=None)
        else:
            p.set_defaults(seed_from=None, iters=None, ks_tol=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return run(args.subcommand, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 2
    except KineticBrwError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
