"""Command-line entry points for simulation, fitting, and backtesting.

Commands: simulate, transform, fit, backtest, approx-error,
replicate-table1. Flag values override a JSON config file, which overrides
builtin defaults; every output file carries a metadata header with the
tool version, a hash of the resolved configuration, and the numerical
conventions in effect. All outputs are plain CSV/JSON; plotting is left to
external tooling.
"""

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import dataio
from .data import PanelData, build_lag_matrix, build_panel, ar_residual_stds
from .dgp import (DgpSpec, approx_error_surface, replication_study,
                  simulate_dgp)
from .exceptions import ConfigError
from .forecast import recursive_backtest, standard_model_set
from .hypergrid import HyperPriorConfig, posterior_summary_q, score_grid

OUTDIR_ENV = "FACTORVAR_OUTDIR"


def _parse_floats(text):
    return tuple(float(v) for v in str(text).split(","))


def _parse_ints(text):
    return tuple(int(v) for v in str(text).split(","))


def _resolve(args: argparse.Namespace, file_config: dict, defaults: dict) -> dict:
    """Merge flag values over config-file values over defaults."""
    resolved = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_config:
            resolved[key] = file_config[key]
        else:
            resolved[key] = default
    return resolved


def _outdir(resolved: dict) -> Path:
    out = Path(resolved["outdir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _content_config(resolved: dict) -> dict:
    """Configuration that determines output content (hash ignores locations)."""
    return {k: v for k, v in resolved.items() if k not in ("outdir", "prefix")}


def _load_panel(path, focus_names) -> PanelData:
    names, _, _, values = dataio.read_panel_csv(path)
    if focus_names is None:
        focus = (0, 1, 2)
    else:
        focus_names = list(focus_names)
        missing = [f for f in focus_names if f not in names]
        if missing:
            raise ConfigError(f"focus variables {missing} not in panel columns")
        focus = tuple(names.index(f) for f in focus_names)
    return PanelData(names=names, data=values, focus=focus)


def _hyper_config(resolved: dict) -> HyperPriorConfig:
    updates = {"omega_prior": resolved.get("omega_prior", "flat")}
    if resolved.get("omega_grid") is not None:
        updates["omega_grid"] = tuple(resolved["omega_grid"])
    if resolved.get("theta_grid") is not None:
        updates["theta_grid"] = tuple(resolved["theta_grid"])
    if resolved.get("q_cap") is not None:
        updates["q_cap"] = int(resolved["q_cap"])
    return HyperPriorConfig(**updates)


def cmd_simulate(args, file_config) -> int:
    defaults = {"vars": 10, "factors": 3, "obs": 500, "seed": 0,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "dgp"}
    cfg = _resolve(args, file_config, defaults)
    spec = DgpSpec(n_vars=int(cfg["vars"]), n_factors=int(cfg["factors"]),
                   n_obs=int(cfg["obs"]), seed=int(cfg["seed"]))
    panel = simulate_dgp(spec)
    out = _outdir(cfg)
    names = [f"V{j + 1}" for j in range(spec.n_vars)]
    panel_path = out / f"{cfg['prefix']}_panel.csv"
    dataio.write_panel_csv(panel_path, names, panel.data,
                           tcodes=[1] * spec.n_vars, config=_content_config(cfg))
    truth_path = out / f"{cfg['prefix']}_truth.json"
    dataio.write_json_with_meta(truth_path, {
        "n_factors": spec.n_factors,
        "seed": spec.seed,
        "loadings": panel.loadings.tolist(),
        "chol_sigma": panel.chol_sigma.tolist(),
    }, config=_content_config(cfg))
    print(f"wrote {panel_path} and {truth_path}")
    return 0


def cmd_transform(args, file_config) -> int:
    defaults = {"data": None, "manifest": None, "size": "S", "focus": None,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "panel"}
    cfg = _resolve(args, file_config, defaults)
    if cfg["data"] is None or cfg["manifest"] is None:
        raise ConfigError("transform requires --data and --manifest")
    if cfg["focus"] is None:
        raise ConfigError("transform requires --focus with three identifiers")
    series = dataio.raw_series_from_csv(cfg["data"], cfg["manifest"])
    panel = build_panel(series, cfg["size"], cfg["focus"])
    out = _outdir(cfg)
    path = out / f"{cfg['prefix']}_{cfg['size']}.csv"
    dataio.write_panel_csv(path, panel.names, panel.data,
                           tcodes=[1] * panel.M, config=_content_config(cfg))
    print(f"wrote {path} ({panel.T} x {panel.M}, focus {list(panel.focus)})")
    return 0


def cmd_fit(args, file_config) -> int:
    defaults = {"data": None, "variant": "minn", "omega_prior": "flat",
                "selection": "ml", "p": 2, "focus": None, "seed": 0,
                "omega_grid": None, "theta_grid": None, "q_cap": None,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "fit"}
    cfg = _resolve(args, file_config, defaults)
    if cfg["data"] is None:
        raise ConfigError("fit requires --data")
    variant = {"minn": "minnesota", "minnesota": "minnesota",
               "flat": "flat"}.get(cfg["variant"])
    if variant is None:
        raise ConfigError(f"unknown variant {cfg['variant']!r}")
    panel = _load_panel(cfg["data"], cfg["focus"])
    data = build_lag_matrix(panel, int(cfg["p"]))
    sigma = ar_residual_stds(panel.data, int(cfg["p"]))
    hyper = _hyper_config(cfg)
    points = score_grid(data, variant, hyper, sigma_ar=sigma,
                        selection=str(cfg["selection"]).lower(),
                        focus=panel.focus)
    frame = pd.DataFrame([{
        "q": p.q, "omega": p.omega,
        "theta": np.nan if p.theta is None else p.theta,
        "log_prior": p.log_prior, "log_score": p.log_score, "weight": p.weight,
    } for p in points])
    summary = posterior_summary_q(points)
    summary["variant"] = variant
    summary["selection"] = str(cfg["selection"]).lower()
    summary["omega_prior"] = hyper.omega_prior
    summary["benchmark_equivalent"] = bool(all(p.omega == 0.0 for p in points))
    if summary["selection"] == "bic":
        argmin = max(points, key=lambda p: p.log_score)
        summary["bic_argmin"] = {"q": argmin.q, "omega": argmin.omega,
                                 "theta": argmin.theta}
    out = _outdir(cfg)
    grid_path = out / f"{cfg['prefix']}_grid.csv"
    dataio.write_csv_with_meta(grid_path, frame, config=_content_config(cfg))
    summary_path = out / f"{cfg['prefix']}_summary.json"
    dataio.write_json_with_meta(summary_path, summary, config=_content_config(cfg))
    print(f"wrote {grid_path} and {summary_path}")
    return 0


def _model_configs(names, selection, theta_grid=None) -> list:
    known = {m.name: m for m in standard_model_set()}
    configs = []
    for name in names:
        if name not in known:
            raise ConfigError(f"unknown model {name!r}; choose from {sorted(known)}")
        base = known[name]
        updates = {}
        if base.variant != "dfm":
            updates["selection"] = selection
        if theta_grid is not None and base.variant == "minnesota":
            updates["theta_grid"] = tuple(theta_grid)
        configs.append(dataclasses.replace(base, **updates) if updates else base)
    return configs


def cmd_backtest(args, file_config) -> int:
    defaults = {"data": None, "models": "minn0,minn1,flat0,flat1,dfm,bvar",
                "start": None, "end": None, "horizons": (1, 4), "p": 2,
                "selection": "ml", "n_hyper": 200, "n_param": 10, "seed": 0,
                "focus": None, "size_label": "", "theta_grid": None,
                "min_estimation": 40,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "backtest"}
    cfg = _resolve(args, file_config, defaults)
    if cfg["data"] is None or cfg["start"] is None or cfg["end"] is None:
        raise ConfigError("backtest requires --data, --start, and --end")
    panel = _load_panel(cfg["data"], cfg["focus"])
    _, _, dates, _ = dataio.read_panel_csv(cfg["data"])
    model_names = (cfg["models"].split(",") if isinstance(cfg["models"], str)
                   else list(cfg["models"]))
    configs = _model_configs(model_names, str(cfg["selection"]).lower(),
                             cfg["theta_grid"])
    benchmark = "bvar" if "bvar" in model_names else model_names[0]
    result = recursive_backtest(
        panel, configs, int(cfg["start"]), int(cfg["end"]),
        horizons=tuple(int(h) for h in cfg["horizons"]), p=int(cfg["p"]),
        seed=int(cfg["seed"]), n_hyper=int(cfg["n_hyper"]),
        n_param=int(cfg["n_param"]), benchmark=benchmark,
        size_label=str(cfg["size_label"]),
        min_estimation=int(cfg["min_estimation"]))
    out = _outdir(cfg)
    date_of = {i: d.date().isoformat() for i, d in enumerate(dates)}
    per_origin = result.per_origin.assign(
        origin_date=result.per_origin.origin.map(date_of))
    hyper_path = result.hyper_path.assign(
        origin_date=result.hyper_path.origin.map(date_of))
    paths = {}
    for label, frame in (("origins", per_origin),
                         ("summary", result.summary),
                         ("hyper_path", hyper_path)):
        paths[label] = out / f"{cfg['prefix']}_{label}.csv"
        dataio.write_csv_with_meta(paths[label], frame, config=_content_config(cfg))
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_approx_error(args, file_config) -> int:
    defaults = {"data": None, "q": 3, "p": 1, "theta_grid": None,
                "omega_grid": None, "focus": None, "seed": 0,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "approx"}
    cfg = _resolve(args, file_config, defaults)
    if cfg["data"] is None:
        raise ConfigError("approx-error requires --data")
    panel = _load_panel(cfg["data"], cfg["focus"])
    data = build_lag_matrix(panel, int(cfg["p"]))
    sigma = ar_residual_stds(panel.data, int(cfg["p"]))
    hyper = HyperPriorConfig()
    thetas = cfg["theta_grid"] if cfg["theta_grid"] is not None else hyper.theta_grid
    omegas = cfg["omega_grid"] if cfg["omega_grid"] is not None else hyper.omega_grid
    surface = approx_error_surface(data, thetas, omegas, int(cfg["q"]), sigma)
    out = _outdir(cfg)
    path = out / f"{cfg['prefix']}_surface.csv"
    dataio.write_csv_with_meta(path, surface, config=_content_config(cfg))
    print(f"wrote {path} ({len(surface)} rows)")
    return 0


def cmd_replicate_table1(args, file_config) -> int:
    defaults = {"M_list": (10,), "q_list": (1, 3), "reps": 20,
                "variants": "minn0,minn1,flat0,flat1", "T": 500, "p": 1,
                "seed": 0, "jobs": 1,
                "outdir": os.environ.get(OUTDIR_ENV, "."), "prefix": "table1"}
    cfg = _resolve(args, file_config, defaults)
    variants = (cfg["variants"].split(",") if isinstance(cfg["variants"], str)
                else list(cfg["variants"]))
    m_list = tuple(int(m) for m in cfg["M_list"])
    q_list = tuple(int(q) for q in cfg["q_list"])
    jobs = int(cfg["jobs"])
    cells = [(m, q) for m in m_list for q in q_list]

    def run(m, q):
        return replication_study([m], [q], int(cfg["reps"]), variants,
                                 int(cfg["seed"]), T=int(cfg["T"]), p=int(cfg["p"]))

    if jobs > 1:
        from joblib import Parallel, delayed
        frames = Parallel(n_jobs=jobs)(delayed(run)(m, q) for m, q in cells)
    else:
        frames = [run(m, q) for m, q in cells]
    long = pd.concat(frames, ignore_index=True)
    wide = long.pivot_table(index=["variant", "M"], columns="q_true",
                            values="avg_median_q").reset_index()
    wide.columns = ["variant", "M"] + [f"q{int(c)}" for c in wide.columns[2:]]
    out = _outdir(cfg)
    long_path = out / f"{cfg['prefix']}_long.csv"
    wide_path = out / f"{cfg['prefix']}.csv"
    dataio.write_csv_with_meta(long_path, long, config=_content_config(cfg))
    dataio.write_csv_with_meta(wide_path, wide, config=_content_config(cfg))
    print(f"wrote {wide_path} and {long_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorvar",
        description="Bayesian VARs with shrinkage toward a factor model")
    parser.add_argument("--config", help="JSON file with per-command settings")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a synthetic factor-model panel")
    sim.add_argument("--vars", type=int)
    sim.add_argument("--factors", type=int)
    sim.add_argument("--obs", type=int)

    tra = sub.add_parser("transform", help="transform raw levels into a panel")
    tra.add_argument("--data")
    tra.add_argument("--manifest")
    tra.add_argument("--size", choices=("S", "M", "L", "XL"))
    tra.add_argument("--focus", nargs=3)

    fit = sub.add_parser("fit", help="score the hyperparameter grid on a panel")
    fit.add_argument("--data")
    fit.add_argument("--variant", choices=("minn", "minnesota", "flat"))
    fit.add_argument("--omega-prior", dest="omega_prior",
                     choices=("flat", "informative"))
    fit.add_argument("--selection", choices=("ml", "bic", "ML", "BIC"))
    fit.add_argument("--p", type=int)
    fit.add_argument("--focus", nargs=3)
    fit.add_argument("--omega-grid", dest="omega_grid", type=_parse_floats)
    fit.add_argument("--theta-grid", dest="theta_grid", type=_parse_floats)
    fit.add_argument("--q-cap", dest="q_cap", type=int)

    bt = sub.add_parser("backtest", help="recursive forecast evaluation")
    bt.add_argument("--data")
    bt.add_argument("--models")
    bt.add_argument("--start", type=int)
    bt.add_argument("--end", type=int)
    bt.add_argument("--horizons", type=_parse_ints)
    bt.add_argument("--p", type=int)
    bt.add_argument("--selection", choices=("ml", "bic", "ML", "BIC"))
    bt.add_argument("--n-hyper", dest="n_hyper", type=int)
    bt.add_argument("--n-param", dest="n_param", type=int)
    bt.add_argument("--focus", nargs=3)
    bt.add_argument("--size-label", dest="size_label")
    bt.add_argument("--theta-grid", dest="theta_grid", type=_parse_floats)
    bt.add_argument("--min-estimation", dest="min_estimation", type=int)

    ae = sub.add_parser("approx-error", help="approximation-error surface")
    ae.add_argument("--data")
    ae.add_argument("--q", type=int)
    ae.add_argument("--p", type=int)
    ae.add_argument("--theta-grid", dest="theta_grid", type=_parse_floats)
    ae.add_argument("--omega-grid", dest="omega_grid", type=_parse_floats)
    ae.add_argument("--focus", nargs=3)

    t1 = sub.add_parser("replicate-table1", help="factor-recovery study")
    t1.add_argument("--M-list", dest="M_list", type=_parse_ints)
    t1.add_argument("--q-list", dest="q_list", type=_parse_ints)
    t1.add_argument("--reps", type=int)
    t1.add_argument("--variants")
    t1.add_argument("--T", type=int)
    t1.add_argument("--p", type=int)
    t1.add_argument("--jobs", type=int)

    for cmd in (sim, tra, fit, bt, ae, t1):
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--outdir")
        cmd.add_argument("--prefix")
    return parser


HANDLERS = {
    "simulate": cmd_simulate,
    "transform": cmd_transform,
    "fit": cmd_fit,
    "backtest": cmd_backtest,
    "approx-error": cmd_approx_error,
    "replicate-table1": cmd_replicate_table1,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    file_config = {}
    if args.config:
        full = json.loads(Path(args.config).read_text(encoding="utf-8"))
        file_config = full.get(args.command, full)
    try:
        return HANDLERS[args.command](args, file_config)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
