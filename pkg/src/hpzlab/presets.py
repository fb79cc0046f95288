"""Scenario presets with the figure-caption parameters (natural units).

Time ranges are not given in the captions; the values below cover the
decay of each trace.
"""

import math

_FIG3_BATH = {"gamma": 1e-5, "temperature": 10.0}
_FIG4_BATH = {"gamma": 1e-3, "temperature": 0.0}


def _fig3(cutoff, alpha0, t_max, n_points=401):
    return {
        "bath": dict(_FIG3_BATH, cutoff=cutoff),
        "system": {"alpha0": alpha0},
        "state": {"kind": "cat"},
        "grid": {"t_max": t_max, "n_points": n_points},
        "outputs": ["timescales", "mu"],
    }


def _fig4(cutoff, alpha0, t_max, n_points=601):
    return {
        "bath": dict(_FIG4_BATH, cutoff=cutoff),
        "system": {},
        "state": {"kind": "ecs", "n_modes": 2, "theta": 0.0, "alpha2": float(alpha0) ** 2},
        "grid": {"t_max": t_max, "n_points": n_points},
        "outputs": ["timescales", "coeffs", "concurrence"],
    }


PRESETS = {
    "fig1": {
        "bath": {"gamma": 1e-5, "cutoff": 10.0, "temperature": 50.0},
        "system": {},
        "state": {"kind": "cat"},
        "grid": {"t_max": 1.0, "n_points": 2},
        "outputs": ["timescales", "tau_d_sweep"],
        "sweep": {"q0_min": 1.0, "q0_max": 1e4, "n": 41, "cutoffs": [10.0, 100.0], "kernel": "classical"},
    },
    "fig2a": {
        "bath": {"gamma": 1e-5, "cutoff": 10.0, "temperature": 10.0},
        "system": {"alpha0": math.sqrt(30.0)},
        "state": {"kind": "cat"},
        "grid": {"t_max": 50.0, "n_points": 501},
        "outputs": ["timescales", "coeffs", "mu"],
    },
    "fig2b": {
        "bath": {"gamma": 1e-5, "cutoff": 10.0, "temperature": 1e-3},
        "system": {"alpha0": 10.0},
        "state": {"kind": "cat"},
        "grid": {"t_max": 50.0, "n_points": 301, "log_spaced": True, "t_min_log": 1e-3},
        "outputs": ["timescales", "mu"],
    },
    "fig3a": _fig3(100.0, 100.0, 0.5),
    "fig3b": _fig3(10.0, 100.0, 0.5),
    "fig3c": _fig3(2.0, 100.0, 1.5),
    "fig3d": _fig3(10.0, 500.0, 0.1),
    "fig3e": _fig3(10.0, 10.0, 30.0),
    "fig3f": {
        "bath": {"gamma": 0.05, "cutoff": 0.01, "temperature": 10.0},
        "system": {"alpha0": 30.0},
        "state": {"kind": "cat"},
        "grid": {"t_max": 10.0, "n_points": 501},
        "outputs": ["timescales", "coeffs", "mu"],
        "compare_gamma": 0.1,
    },
    "fig4a": _fig4(3.0, 20.0, 3.0),
    "fig4b": _fig4(0.5, 20.0, 3.0),
    "fig4c": _fig4(0.01, 1500.0, 3.0),
    "fig4d": _fig4(1e-3, 3500.0, 10.0),
}
