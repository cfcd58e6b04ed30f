"""Config loading, scenario execution, sweeps, and CSV/JSON serialization.

Config files are a single JSON document; every rate is in units of
kappa[0].  Top-level sections: params, tier, init, time, outputs, reduced,
quantum, kappa_hz, sweep (see README for the schema).  ``kappa_hz`` only
converts rates on output; it never enters a computation.

Exit codes: 0 success, 2 configuration, 3 numerics, 4 physics-regime
refusal.  On failure a machine-readable JSON error object is printed to
stdout.
"""

import argparse
import concurrent.futures
import copy
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import presets
from .errors import (
    ConfigError,
    ParseError,
    PhysicsError,
    PtmechError,
    UnbalancedRates,
    ValidationError,
)
from .model import PhysicalParams, pt_threshold, solve_steady_state
from .ptanalysis import Phase, beat_frequency, build_heff, spectrum
from .quantum import (
    InitialMoments,
    NoiseModel,
    build_drift,
    phonon_total,
    stability_spectrum,
)
from .semiclassical import (
    ClassicalState,
    ReducedState,
    integrate_full,
    integrate_linearized,
    integrate_reduced,
)

TIERS = ("full", "linearized", "reduced", "quantum", "spectrum")
QUANTUM_COLUMNS = ("n_st1", "n_st2", "n_sp1", "n_sp2",
                   "n_cm1", "n_cm2", "n_mr1", "n_mr2", "n_tt1", "n_tt2")
OUT_ENV_VAR = "PTMECH_OUT"
DEFAULT_BALANCE_TOL = 1e-6


@dataclass(frozen=True)
class Sweep:
    path: str
    values: tuple


@dataclass(frozen=True)
class ReducedOverrides:
    gamma_eff: float = None
    shift: object = None            # None, "auto", or a pair
    gamma_intrinsic: object = None  # None, "auto", or a pair
    balance_tol: float = DEFAULT_BALANCE_TOL


@dataclass(frozen=True)
class Scenario:
    params: PhysicalParams
    tier: str = "full"
    init: object = None
    t_max: float = None
    dt: float = None
    stride: int = None
    outputs: tuple = None
    reduced: ReducedOverrides = ReducedOverrides()
    quad_tol: float = 1e-8
    samples: int = 1000
    kappa_hz: float = None
    sweep: Sweep = None


def _req_pair(raw, name):
    if np.isscalar(raw):
        raw = [raw, raw]
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise ValidationError(f"{name} must be a scalar or a 2-element list")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} entries must be numbers")


def _parse_init(tier, raw):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ValidationError("init must be an object")
    if tier in ("full", "linearized"):
        a_raw = raw.get("a", [[0.0, 0.0], [0.0, 0.0]])
        a = []
        for i, entry in enumerate(a_raw):
            if np.isscalar(entry):
                a.append(complex(entry))
            elif len(entry) == 2:
                a.append(complex(float(entry[0]), float(entry[1])))
            else:
                raise ValidationError(f"init.a[{i}] must be [re, im]")
        return ClassicalState(a=tuple(a),
                              q=_req_pair(raw.get("q", 0.0), "init.q"),
                              p=_req_pair(raw.get("p", 0.0), "init.p"))
    if tier == "reduced":
        return ReducedState(q=_req_pair(raw.get("q", 0.0), "init.q"),
                            p=_req_pair(raw.get("p", 0.0), "init.p"))
    if tier == "quantum":
        return InitialMoments(
            n_cavity=_req_pair(raw.get("n_cavity", 0.0), "init.n_cavity"),
            q_sq=_req_pair(raw.get("q_sq", 0.5), "init.q_sq"),
            p_sq=_req_pair(raw.get("p_sq", 0.5), "init.p_sq"))
    return None  # spectrum tier needs no initial state


def _parse_reduced(raw):
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ValidationError("reduced must be an object")
    gamma_eff = raw.get("gamma_eff")
    if gamma_eff is not None:
        gamma_eff = float(gamma_eff)
    out = {}
    for key in ("shift", "gamma_intrinsic"):
        val = raw.get(key)
        if val is None or val == "auto":
            out[key] = val
        else:
            out[key] = _req_pair(val, f"reduced.{key}")
    return ReducedOverrides(gamma_eff=gamma_eff, shift=out["shift"],
                            gamma_intrinsic=out["gamma_intrinsic"],
                            balance_tol=float(raw.get("balance_tol", DEFAULT_BALANCE_TOL)))


def scenario_from_dict(cfg):
    if not isinstance(cfg, dict):
        raise ValidationError("top-level config must be an object")
    if "params" not in cfg:
        raise ValidationError("params section is required")
    p = cfg["params"]
    if not isinstance(p, dict):
        raise ValidationError("params must be an object")
    params = PhysicalParams(
        kappa=_req_pair(p.get("kappa", 1.0), "kappa"),
        gamma=_req_pair(p.get("gamma", 0.0), "gamma"),
        omega=_req_pair(p.get("omega", 10.0), "omega"),
        g=_req_pair(p.get("g", 0.0), "g"),
        delta=_req_pair(p.get("delta", 0.0), "delta"),
        drive=_req_pair(p.get("drive", 0.0), "drive"),
        j_coupling=float(p.get("j_coupling", 0.0)),
        n_th=_req_pair(p.get("n_th", 0.0), "n_th"),
    )
    tier = cfg.get("tier", "full")
    if tier not in TIERS:
        raise ValidationError(f"tier must be one of {TIERS}, got {tier!r}")
    time_cfg = cfg.get("time", {}) or {}
    t_max = time_cfg.get("t_max")
    if t_max is None and tier != "spectrum":
        raise ValidationError("time.t_max is required for this tier")
    if t_max is not None:
        t_max = float(t_max)
        if t_max <= 0:
            raise ValidationError("time.t_max must be > 0")
    dt = time_cfg.get("dt")
    dt = float(dt) if dt is not None else None
    stride = time_cfg.get("stride")
    stride = int(stride) if stride is not None else None
    outputs = cfg.get("outputs")
    if outputs is not None:
        if not isinstance(outputs, (list, tuple)) or not all(isinstance(c, str) for c in outputs):
            raise ValidationError("outputs must be a list of channel names")
        outputs = tuple(outputs)
    sweep_cfg = cfg.get("sweep")
    sweep = None
    if sweep_cfg is not None:
        if not isinstance(sweep_cfg, dict) or "path" not in sweep_cfg:
            raise ValidationError("sweep must be an object with a path")
        values = sweep_cfg.get("values", [])
        if not isinstance(values, (list, tuple)) or len(values) == 0:
            raise ValidationError("sweep.values must be a non-empty list")
        if not all(np.isfinite(v) for v in values):
            raise ValidationError("sweep.values must be finite")
        sweep = Sweep(path=str(sweep_cfg["path"]),
                      values=tuple(float(v) for v in values))
    q_cfg = cfg.get("quantum", {}) or {}
    kappa_hz = cfg.get("kappa_hz")
    return Scenario(
        params=params,
        tier=tier,
        init=_parse_init(tier, cfg.get("init")),
        t_max=t_max,
        dt=dt,
        stride=stride,
        outputs=outputs,
        reduced=_parse_reduced(cfg.get("reduced")),
        quad_tol=float(q_cfg.get("quad_tol", 1e-8)),
        samples=int(q_cfg.get("samples", 1000)),
        kappa_hz=float(kappa_hz) if kappa_hz is not None else None,
        sweep=sweep,
    )


def load_config(path):
    """Parse and validate a scenario file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(cfg)


def serialize(scenario):
    """Canonical dict form; load/serialize round-trips exactly."""
    out = {
        "params": {
            "kappa": list(scenario.params.kappa),
            "gamma": list(scenario.params.gamma),
            "omega": list(scenario.params.omega),
            "g": list(scenario.params.g),
            "delta": list(scenario.params.delta),
            "drive": list(scenario.params.drive),
            "j_coupling": scenario.params.j_coupling,
            "n_th": list(scenario.params.n_th),
        },
        "tier": scenario.tier,
        "time": {"t_max": scenario.t_max, "dt": scenario.dt,
                 "stride": scenario.stride},
        "kappa_hz": scenario.kappa_hz,
    }
    init = scenario.init
    if isinstance(init, ClassicalState):
        out["init"] = {"a": [[complex(v).real, complex(v).imag] for v in init.a],
                       "q": list(init.q), "p": list(init.p)}
    elif isinstance(init, ReducedState):
        out["init"] = {"q": list(init.q), "p": list(init.p)}
    elif isinstance(init, InitialMoments):
        out["init"] = {"n_cavity": list(init.n_cavity),
                       "q_sq": list(init.q_sq), "p_sq": list(init.p_sq)}
    if scenario.outputs is not None:
        out["outputs"] = list(scenario.outputs)
    red = scenario.reduced
    out["reduced"] = {
        "gamma_eff": red.gamma_eff,
        "shift": list(red.shift) if isinstance(red.shift, tuple) else red.shift,
        "gamma_intrinsic": (list(red.gamma_intrinsic)
                            if isinstance(red.gamma_intrinsic, tuple)
                            else red.gamma_intrinsic),
        "balance_tol": red.balance_tol,
    }
    out["quantum"] = {"quad_tol": scenario.quad_tol, "samples": scenario.samples}
    if scenario.sweep is not None:
        out["sweep"] = {"path": scenario.sweep.path,
                        "values": list(scenario.sweep.values)}
    return out


def _fmt(x):
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _reduced_rates(scenario, wp):
    """Resolve (gamma_eff, shift, gamma_intrinsic) for the reduced model."""
    params = scenario.params
    red = scenario.reduced
    if params.omega[0] != params.omega[1]:
        raise ValidationError("the reduced tier requires omega[0] == omega[1]")
    if red.gamma_eff is not None:
        gamma_eff = red.gamma_eff
    else:
        imbalance = wp.rate_imbalance()
        if imbalance > red.balance_tol:
            raise UnbalancedRates(
                f"gain/damping imbalance {imbalance:.3e} exceeds "
                f"balance_tol={red.balance_tol:g}; set reduced.gamma_eff "
                f"explicitly or loosen reduced.balance_tol")
        gamma_eff = wp.gamma_eff
    shift = red.shift
    if shift == "auto":
        shift = wp.spring_shift
    elif shift is None:
        shift = (0.0, 0.0)
    gamma_intrinsic = red.gamma_intrinsic
    if gamma_intrinsic == "auto":
        gamma_intrinsic = params.gamma
    elif gamma_intrinsic is None:
        gamma_intrinsic = (0.0, 0.0)
    return gamma_eff, shift, gamma_intrinsic


def _si(summary, kappa_hz):
    if kappa_hz is None:
        return None
    rates = {}
    for key in ("gamma_eff", "pt_threshold", "lambda_max"):
        if summary.get(key) is not None:
            rates[key + "_hz"] = summary[key] * kappa_hz
    return rates


def summarize(scenario):
    """Derived rates, reduced spectrum, and stability for one scenario."""
    params = scenario.params
    wp = solve_steady_state(params)
    omega_m = 0.5 * (params.omega[0] + params.omega[1])
    summary = {
        "alpha": [[complex(a).real, complex(a).imag] for a in wp.alpha],
        "xi": list(wp.xi),
        "delta_eff": list(wp.delta_eff),
        "g_eff_abs": [abs(g) for g in wp.g_eff],
        "spring_shift": list(wp.spring_shift),
        "rate": list(wp.rate),
        "gamma_eff": wp.gamma_eff,
        "rate_imbalance": wp.rate_imbalance(),
        "pt_threshold": pt_threshold(omega_m, params.j_coupling),
    }
    gamma_eff = scenario.reduced.gamma_eff
    if gamma_eff is None:
        gamma_eff = wp.gamma_eff
    if params.omega[0] == params.omega[1]:
        spec = spectrum(build_heff(omega_m, params.j_coupling, gamma_eff))
        summary["spectrum"] = [[v.real, v.imag] for v in spec.lam]
        summary["phase"] = spec.phase.value
        summary["beat"] = (beat_frequency(spec)
                           if spec.phase is Phase.PT_SYMMETRIC else None)
    else:
        summary["spectrum"] = None
        summary["phase"] = None
        summary["beat"] = None
    lam_max, region = stability_spectrum(build_drift(wp, params))
    summary["lambda_max"] = lam_max
    summary["region"] = region.value
    si = _si(summary, scenario.kappa_hz)
    if si:
        summary["si"] = si
    return summary, wp


def _timeseries_table(scenario, wp):
    params = scenario.params
    if scenario.tier == "full":
        series = integrate_full(params, scenario.init, scenario.t_max,
                                dt=scenario.dt, stride=scenario.stride)
    elif scenario.tier == "linearized":
        series = integrate_linearized(wp, params, scenario.init, scenario.t_max,
                                      dt=scenario.dt, stride=scenario.stride)
    elif scenario.tier == "reduced":
        gamma_eff, shift, gamma_intrinsic = _reduced_rates(scenario, wp)
        series = integrate_reduced(gamma_eff, params.omega[0], params.j_coupling,
                                   scenario.init, scenario.t_max,
                                   shift=shift, gamma_intrinsic=gamma_intrinsic,
                                   dt=scenario.dt, stride=scenario.stride)
    else:
        return None, None
    columns = list(series.columns)
    if scenario.outputs:
        missing = [c for c in scenario.outputs if c not in columns]
        if missing:
            raise ValidationError(f"unknown output channels {missing}; "
                                  f"tier provides {columns}")
        keep = [columns.index(c) for c in scenario.outputs]
        return (["t"] + list(scenario.outputs),
                np.column_stack([series.t, series.rows[:, keep]]))
    return ["t"] + columns, np.column_stack([series.t, series.rows])


def _quantum_table(scenario, wp):
    params = scenario.params
    dm = build_drift(wp, params)
    noise = NoiseModel.from_params(params)
    ts = np.linspace(0.0, scenario.t_max, scenario.samples + 1)
    bd = phonon_total(dm, scenario.init, noise, ts, scenario.quad_tol)
    data = np.column_stack([bd.t, bd.n_st, bd.n_sp, bd.n_cm, bd.n_mr, bd.n_tt])
    return ["t"] + list(QUANTUM_COLUMNS), data, bd


def run(scenario, out_dir, fmt="csv"):
    """Execute a scenario and write its result files into ``out_dir``.

    Returns the summary dict (also written as summary.json).
    """
    os.makedirs(out_dir, exist_ok=True)
    summary, wp = summarize(scenario)
    header = data = None
    if scenario.tier == "quantum":
        header, data, bd = _quantum_table(scenario, wp)
        last = -1
        summary["phonons_final"] = {
            "t": float(bd.t[last]),
            "n_st": bd.n_st[last].tolist(),
            "n_sp": bd.n_sp[last].tolist(),
            "n_cm": bd.n_cm[last].tolist(),
            "n_mr": bd.n_mr[last].tolist(),
            "n_tt": bd.n_tt[last].tolist(),
        }
    elif scenario.tier != "spectrum":
        header, data = _timeseries_table(scenario, wp)
    files = []
    if header is not None:
        if fmt == "csv":
            path = os.path.join(out_dir, "timeseries.csv")
            write_csv(path, header, data)
            files.append(path)
        elif fmt == "json":
            path = os.path.join(out_dir, "timeseries.json")
            with open(path, "w") as fh:
                json.dump({"columns": header, "rows": data.tolist()}, fh)
            files.append(path)
        else:
            raise ValidationError(f"unknown format {fmt!r}")
    summary["tier"] = scenario.tier
    summary["files"] = [os.path.basename(f) for f in files]
    spath = os.path.join(out_dir, "summary.json")
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def _apply_sweep_value(cfg, path, value):
    parts = path.split(".")
    node = cfg
    for key in parts[:-1]:
        if key not in node or not isinstance(node[key], (dict, list)):
            node[key] = {}
        node = node[key]
    leaf = parts[-1]
    if leaf.isdigit() and isinstance(node, (list, tuple)):
        node[int(leaf)] = value
    else:
        node[leaf] = value
    return cfg


def _sweep_point(args):
    cfg, path, value = args
    try:
        cfg = _apply_sweep_value(copy.deepcopy(cfg), path, value)
        cfg.pop("sweep", None)
        scenario = scenario_from_dict(cfg)
        summary, _ = summarize(scenario)
        return value, summary, ""
    except PtmechError as exc:
        return value, None, f"{type(exc).__name__}: {exc}"


SWEEP_COLUMNS = ("value", "gamma_eff", "rate1", "rate2", "g_abs1", "g_abs2",
                 "pt_threshold", "phase", "beat", "lambda_max", "region", "error")


def run_sweep(scenario, base_cfg, out_dir, jobs=1):
    """Execute every sweep point; per-point failures land in the error column."""
    if scenario.sweep is None:
        raise ValidationError("sweep section is required for the sweep command")
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(base_cfg, scenario.sweep.path, v) for v in scenario.sweep.values]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    results.sort(key=lambda item: item[0])
    rows = []
    for value, summary, err in results:
        if summary is None:
            rows.append([value] + [""] * (len(SWEEP_COLUMNS) - 2) + [err])
            continue
        rows.append([
            value, summary["gamma_eff"], summary["rate"][0], summary["rate"][1],
            summary["g_eff_abs"][0], summary["g_eff_abs"][1],
            summary["pt_threshold"],
            summary["phase"] if summary["phase"] is not None else "",
            summary["beat"] if summary["beat"] is not None else "",
            summary["lambda_max"], summary["region"], err,
        ])
    path = os.path.join(out_dir, "sweep.csv")
    write_csv(path, list(SWEEP_COLUMNS), rows)
    return path


def run_figure(name, out_dir):
    if name not in presets.FIGURE_NAMES:
        raise ValidationError(f"unknown figure {name!r}; choose from "
                              f"{', '.join(presets.FIGURE_NAMES)}")
    os.makedirs(out_dir, exist_ok=True)
    tables = presets.figure_tables(name)
    files = []
    for key, (header, data) in sorted(tables.items()):
        path = os.path.join(out_dir, f"{name}_{key}.csv")
        write_csv(path, header, data)
        files.append(path)
    manifest = {"figure": name, "files": [os.path.basename(f) for f in files]}
    with open(os.path.join(out_dir, f"{name}_summary.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return files


def _default_out():
    return os.environ.get(OUT_ENV_VAR, ".")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ptmech",
        description="Coupled-optomechanics gain/loss dynamics: semiclassical "
                    "tiers, non-Hermitian spectrum, and quantum phonon budgets.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario from a config file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--tier", choices=TIERS)
    sim.add_argument("--t-max", type=float, dest="t_max")
    sim.add_argument("--dt", type=float)
    sim.add_argument("--out", default=None)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")

    fig = sub.add_parser("figure", help="regenerate a bundled reference data set")
    fig.add_argument("name", choices=list(presets.FIGURE_NAMES))
    fig.add_argument("--out", default=None)

    swp = sub.add_parser("sweep", help="run the sweep defined in a config file")
    swp.add_argument("--config", required=True)
    swp.add_argument("--out", default=None)
    swp.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out if args.out is not None else _default_out()
    try:
        if args.command == "simulate":
            scenario = load_config(args.config)
            overrides = {}
            if args.tier:
                overrides["tier"] = args.tier
            if args.t_max:
                overrides["t_max"] = args.t_max
            if args.dt:
                overrides["dt"] = args.dt
            if overrides:
                cfg = serialize(scenario)
                cfg.update({"tier": overrides.get("tier", scenario.tier)})
                cfg.setdefault("time", {})
                if "t_max" in overrides:
                    cfg["time"]["t_max"] = overrides["t_max"]
                if "dt" in overrides:
                    cfg["time"]["dt"] = overrides["dt"]
                scenario = scenario_from_dict(cfg)
            summary = run(scenario, out_dir, fmt=args.format)
            print(json.dumps({"ok": True, "out": out_dir,
                              "tier": summary["tier"]}))
        elif args.command == "figure":
            files = run_figure(args.name, out_dir)
            print(json.dumps({"ok": True, "figure": args.name,
                              "files": [os.path.basename(f) for f in files]}))
        elif args.command == "sweep":
            scenario = load_config(args.config)
            with open(args.config) as fh:
                base_cfg = json.load(fh)
            path = run_sweep(scenario, base_cfg, out_dir, jobs=args.jobs)
            print(json.dumps({"ok": True, "sweep": os.path.basename(path)}))
        return 0
    except PtmechError as exc:
        if isinstance(exc, ConfigError):
            code = 2
        elif isinstance(exc, PhysicsError):
            code = 4
        else:
            code = 3
        print(json.dumps({"ok": False, "error": type(exc).__name__,
                          "message": str(exc), "exit_code": code}))
        return code


if __name__ == "__main__":
    sys.exit(main())
