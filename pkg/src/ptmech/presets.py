"""Built-in scenarios that regenerate the reference data sets fig3..fig11d.

Each preset writes plain CSV files (17 significant digits, bit-stable
across runs) plus a small JSON manifest.  Trajectory presets emit one file
per plotted channel; fig8 emits the stability scan; fig9/10/11 emit the
phonon budgets.
"""

import numpy as np

from .model import canonical_params
from .quantum import (
    InitialMoments,
    NoiseModel,
    drift_from_rates,
    phonon_total,
    stability_spectrum,
)
from .semiclassical import (
    ClassicalState,
    ReducedState,
    integrate_full,
    integrate_reduced,
)

# shift used by the fig6 preset: the value stated alongside the reference
# figure; evaluating the shift formula at drive 6700 gives 2.2374e-4 instead
# (both are recorded in the README)
FIG6_SHIFT = 2.25e-5

_FIG8_KW = dict(delta_eff=(-10.0, 10.0), omega=(10.0, 10.0),
                kappa=(1.0, 1.0), gamma=(1e-5, 1e-5), j=0.01)


def _full_traj(drive, j_coupling, t_max, stride=8):
    params = canonical_params(drive=drive, j_coupling=j_coupling)
    return integrate_full(params, ClassicalState(), t_max, stride=stride)


def _reduced_traj(gamma_eff, q0, t_max, shift=(0.0, 0.0), stride=8):
    init = ReducedState(q=(q0, q0), p=(0.0, 0.0))
    return integrate_reduced(gamma_eff, 10.0, 0.01, init, t_max,
                             shift=shift, stride=stride)


def _channels(series, names):
    return {name: np.column_stack([series.t, series.channel(name)])
            for name in names}


def _phonons(g, n_th, q_sq, t_max=500.0, samples=2001, quad_tol=1e-8):
    dm = drift_from_rates(g_eff=(g, g), **_FIG8_KW)
    noise = NoiseModel(cavity_strength=(1.0, 1.0),
                       brownian_strength=(1e-5 * (n_th + 0.5),) * 2)
    init = InitialMoments(n_cavity=(0.0, 0.0), q_sq=(q_sq, q_sq), p_sq=(q_sq, q_sq))
    ts = np.linspace(0.0, t_max, samples)
    return phonon_total(dm, init, noise, ts, quad_tol)


def fig3():
    series = _full_traj(5000.0, 0.0, 1000.0)
    return _channels(series, ("q1", "q2"))


def fig4():
    series = _full_traj(5000.0, 0.01, 60.0, stride=2)
    return _channels(series, ("q1", "q2"))


def _fig5_full(drive, t_max):
    series = _full_traj(drive, 0.01, t_max)
    return _channels(series, ("q1", "q2"))


def _fig5_reduced(gamma_eff, q0, t_max):
    series = _reduced_traj(gamma_eff, q0, t_max)
    return _channels(series, ("q1", "q2"))


def fig6():
    series = _reduced_traj(1.8 * 0.01, 90.0, 20000.0,
                           shift=(FIG6_SHIFT, FIG6_SHIFT), stride=32)
    return _channels(series, ("q1", "q2"))


def fig7():
    series = _full_traj(5000.0, 0.01, 1500.0)
    return _channels(series, ("I1", "I2", "q1", "q2"))


def fig8(n_points=201, g_max=0.1):
    rows = []
    for g in np.linspace(0.0, g_max, n_points):
        dm = drift_from_rates(g_eff=(g, g), **_FIG8_KW)
        lam_max, region = stability_spectrum(dm)
        rows.append([g, lam_max, region.value])
    return {"lambda_max": rows}


_FIG9_G = {"a": 0.05, "b": 0.069, "c": 0.08,
           "d": 0.05, "e": 0.069, "f": 0.08,
           "g": 0.05, "h": 0.069, "i": 0.08}
_FIG9_KIND = {"a": "n_sp", "b": "n_sp", "c": "n_sp",
              "d": "n_st", "e": "n_st", "f": "n_st",
              "g": "n_tt", "h": "n_tt", "i": "n_tt"}


def fig9(panel):
    g = _FIG9_G[panel]
    kind = _FIG9_KIND[panel]
    bd = _phonons(g, n_th=0.0, q_sq=1.5)
    values = getattr(bd, kind)
    return {kind: np.column_stack([bd.t, values])}


_FIG10 = {"a": (0.05, 0.0), "b": (0.08, 0.0),
          "c": (0.05, 1000.0), "d": (0.08, 1000.0)}


def fig10(panel):
    g, n_th = _FIG10[panel]
    bd = _phonons(g, n_th=n_th, q_sq=1.5)
    return {"noise_split": np.column_stack([bd.t, bd.n_cm, bd.n_mr])}


_FIG11 = {"a": (0.05, 1.5), "b": (0.08, 1.5),
          "c": (0.05, 100.5), "d": (0.08, 100.5)}


def fig11(panel):
    g, q_sq = _FIG11[panel]
    bd = _phonons(g, n_th=1000.0, q_sq=q_sq)
    return {"phonons": np.column_stack([bd.t, bd.n_st[:, 0], bd.n_tt[:, 0]])}


def _headers(key):
    if key == "lambda_max":
        return ["g_over_kappa", "lambda_max_over_kappa", "region"]
    if key in ("q1", "q2", "I1", "I2"):
        return ["t", key]
    if key in ("n_sp", "n_st", "n_tt"):
        return ["t", f"{key}1", f"{key}2"]
    if key == "noise_split":
        return ["t", "n_cm1", "n_cm2", "n_mr1", "n_mr2"]
    if key == "phonons":
        return ["t", "n_st1", "n_tt1"]
    raise KeyError(key)


def figure_tables(name):
    """Mapping of file key -> (header list, column data) for one preset."""
    builders = {"fig3": fig3, "fig4": fig4, "fig6": fig6, "fig7": fig7,
                "fig8": fig8}
    fig5_full = {"fig5a": (5000.0, 1500.0), "fig5c": (6700.0, 3000.0),
                 "fig5e": (10000.0, 1200.0)}
    fig5_reduced = {"fig5b": (0.01, 50.0, 1500.0),
                    "fig5d": (1.8 * 0.01, 90.0, 3000.0),
                    "fig5f": (4.0 * 0.01, 200.0, 1200.0)}
    if name in builders:
        tables = builders[name]()
    elif name in fig5_full:
        tables = _fig5_full(*fig5_full[name])
    elif name in fig5_reduced:
        tables = _fig5_reduced(*fig5_reduced[name])
    elif name.startswith("fig9") and name[4:] in _FIG9_G:
        tables = fig9(name[4:])
    elif name.startswith("fig10") and name[5:] in _FIG10:
        tables = fig10(name[5:])
    elif name.startswith("fig11") and name[5:] in _FIG11:
        tables = fig11(name[5:])
    else:
        raise KeyError(name)
    return {key: (_headers(key), data) for key, data in tables.items()}


FIGURE_NAMES = (
    ["fig3", "fig4"]
    + [f"fig5{p}" for p in "abcdef"]
    + ["fig6", "fig7", "fig8"]
    + [f"fig9{p}" for p in "abcdefghi"]
    + [f"fig10{p}" for p in "abcd"]
    + [f"fig11{p}" for p in "abcd"]
)
