"""Scenario runner: config or preset in, CSV + metadata + plot script out.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import decoherence as dec
from . import entanglement as ent
from . import hpz
from .errors import ConfigError, HpzLabError, NumericalError, OracleMismatch
from .io import write_csv
from .kernels import DEFAULT_SETTINGS, QuadratureSettings
from .langevin import green_function, green_function_ode
from .model import BathSpec, SystemSpec, TimeGrid, classify_regime, timescales
from .presets import PRESETS

OUTPUTS = ("timescales", "coeffs", "mu", "concurrence", "tau_d_sweep")
SUBCOMMAND_OUTPUT = {
    "timescales": "timescales",
    "coeffs": "coeffs",
    "decohere": "mu",
    "concurrence": "concurrence",
    "sweep-taud": "tau_d_sweep",
}
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ORACLE = 0, 2, 3, 4
MOMENT_COLUMNS = ["t", "q2", "p2", "qp", "kq", "kp", "kqp", "f", "fdot"]


@dataclass(frozen=True)
class SweepSpec:
    q0_min: float
    q0_max: float
    n: int = 41
    cutoffs: Tuple[float, ...] = ()
    kernel: str = "classical"

    def q0_range(self) -> np.ndarray:
        return np.geomspace(self.q0_min, self.q0_max, self.n)


@dataclass(frozen=True)
class Scenario:
    name: str
    bath: BathSpec
    system: SystemSpec
    grid: TimeGrid
    outputs: Tuple[str, ...]
    state_kind: str = "cat"
    theta: float = 0.0
    n_modes: int = 2
    alpha2: float = 0.0
    sweep: Optional[SweepSpec] = None
    compare_gamma: Optional[float] = None

    def __post_init__(self):
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; choose from {list(OUTPUTS)}")
        if self.state_kind not in ("cat", "ecs"):
            raise ConfigError("state kind must be 'cat' or 'ecs'")
        if "concurrence" in self.outputs and self.state_kind != "ecs":
            raise ConfigError("concurrence output needs an 'ecs' state")
        if "tau_d_sweep" in self.outputs and self.sweep is None:
            raise ConfigError("tau_d_sweep output needs a 'sweep' block")

    @classmethod
    def from_dict(cls, raw: dict, name: str = "scenario") -> "Scenario":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        try:
            bath = BathSpec(**{k: _num(v) if k != "noise" else v for k, v in raw.get("bath", {}).items()})
            sys_raw = {k: _num(v) for k, v in (raw.get("system") or {}).items()}
            alpha0 = sys_raw.pop("alpha0", None)
            system = SystemSpec.from_alpha0(alpha0, **sys_raw) if alpha0 is not None else SystemSpec(**sys_raw)
            g = raw.get("grid", {})
            grid = TimeGrid(
                t_max=_num(g.get("t_max", 10.0)),
                n_points=int(g.get("n_points", 400)),
                log_spaced=bool(g.get("log_spaced", False)),
                t_min_log=_num(g["t_min_log"]) if g.get("t_min_log") is not None else None,
            )
            st = raw.get("state", {}) or {}
            sweep = None
            if raw.get("sweep"):
                sw = raw["sweep"]
                sweep = SweepSpec(
                    q0_min=_num(sw["q0_min"]), q0_max=_num(sw["q0_max"]), n=int(sw.get("n", 41)),
                    cutoffs=tuple(_num(c) for c in sw.get("cutoffs", ())),
                    kernel=sw.get("kernel", "classical"),
                )
            return cls(
                name=str(raw.get("name", name)),
                bath=bath,
                system=system,
                grid=grid,
                outputs=tuple(raw.get("outputs", ["timescales"])),
                state_kind=st.get("kind", "cat"),
                theta=_num(st.get("theta", 0.0)),
                n_modes=int(st.get("n_modes", 2)),
                alpha2=_num(st.get("alpha2", 0.0)),
                sweep=sweep,
                compare_gamma=_num(raw["compare_gamma"]) if raw.get("compare_gamma") is not None else None,
            )
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config: {exc}") from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["outputs"] = list(self.outputs)
        return d

    def with_grid(self, t_max: Optional[float] = None, n_points: Optional[int] = None) -> "Scenario":
        g = self.grid
        grid = TimeGrid(t_max if t_max is not None else g.t_max,
                        n_points if n_points is not None else g.n_points, g.log_spaced, g.t_min_log)
        return dataclasses.replace(self, grid=grid)


def _num(v) -> float:
    # yaml 1.1 reads "1e-5" as a string
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {v!r}")


def load_config(path) -> Scenario:
    p = Path(path)
    try:
        raw = yaml.safe_load(p.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return Scenario.from_dict(raw, name=p.stem)


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return Scenario.from_dict(PRESETS[name], name=name)


@dataclass
class RunReport:
    scenario: dict
    regime: str
    timescales: dict
    files: List[str] = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    failures: List[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def exit_code(self) -> int:
        codes = [f["exit"] for f in self.failures]
        for c in (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ORACLE):
            if c in codes:
                return c
        return EXIT_OK

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    return str(x)


def _finite(x):
    return None if x is None or not math.isfinite(x) else float(x)


def sweep_tau_d(q0_range: Sequence[float], bath: BathSpec, system: SystemSpec,
                settings: QuadratureSettings = DEFAULT_SETTINGS, kernel: str = "classical"):
    """Table rows (q0, tau_d, branch) for the log-log crossover plot."""
    return [(r.q0, r.tau_d, r.branch.value) for r in dec.sweep_tau_d(q0_range, bath, system, settings, kernel)]


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _failure(report: RunReport, output: str, exc: Exception):
    if isinstance(exc, OracleMismatch):
        code = EXIT_ORACLE
    elif isinstance(exc, ConfigError):
        code = EXIT_CONFIG
    else:
        code = EXIT_NUMERICAL
    report.failures.append({"output": output, "code": getattr(exc, "code", type(exc).__name__),
                            "message": str(exc), "exit": code})


def run(scenario: Scenario, out_dir, settings: QuadratureSettings = DEFAULT_SETTINGS,
        check_oracle: bool = False) -> RunReport:
    """Execute every requested output; failures are recorded, not raised."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bath, system = scenario.bath, scenario.system
    tsc = timescales(bath, system)
    report = RunReport(
        scenario=scenario.to_dict(),
        regime=classify_regime(tsc).value,
        timescales={k: _finite(v) for k, v in dataclasses.asdict(tsc).items()},
    )
    # the figure captions read tau_b as 1/Gamma even when hbar/kT is shorter
    report.summary["regime_tau_b_cutoff"] = classify_regime(
        dataclasses.replace(tsc, tau_b=1.0 / bath.cutoff)).value
    grid = scenario.grid.points()
    steps = {
        "coeffs": _run_coeffs,
        "mu": _run_mu,
        "concurrence": _run_concurrence,
        "tau_d_sweep": _run_sweep,
    }
    for name in scenario.outputs:
        if name == "timescales":
            continue
        try:
            steps[name](scenario, grid, out, settings, check_oracle, report)
        except (HpzLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
            _failure(report, name, exc)
    _write_plot_script(out, scenario, report)
    report_path = out / "report.json"
    report.files.append(str(report_path))
    report_path.write_text(report.to_json() + "\n")
    return report


def _meta(scenario: Scenario, report: RunReport, **extra) -> dict:
    b = scenario.bath
    meta = {
        "scenario": scenario.name,
        "gamma": b.gamma, "cutoff": b.cutoff, "kT": b.temperature, "noise": b.noise,
        "alpha0_sq": scenario.system.alpha0_sq, "regime": report.regime,
    }
    meta.update(extra)
    return meta


def _run_coeffs(sc: Scenario, grid, out: Path, settings, check, report: RunReport):
    bath, system = sc.bath, sc.system
    series = hpz.hpz_series(float(grid[-1]), bath, system, settings)
    co = series.resample(grid)
    rates = hpz.integrated_rates(grid, bath, system, settings, series=series)
    asym = hpz.asymptotic_coefficients(bath, system, settings)
    path = out / "coeffs.csv"
    write_csv(path, ["t", "gamma_p", "delta_omega2", "d_qp", "d_p", "gamma_down", "gamma_up",
                     "big_gamma_p", "delta_p"],
              [grid, co.gamma_p, co.delta_omega2, co.d_qp, co.d_p, co.gamma_down, co.gamma_up,
               rates.big_gamma_p, rates.delta_p],
              _meta(sc, report, non_lindblad=series.non_lindblad,
                    gamma_p_inf=asym.gamma_p, d_p_inf=asym.d_p, d_qp_inf=asym.d_qp))
    report.files.append(str(path))
    report.summary["non_lindblad"] = series.non_lindblad
    if check:
        ts = grid[grid <= 50.0]
        green = green_function(bath, system)
        ode = green_function_ode(bath, system, ts)
        err = float(np.max(np.abs(green(ts) - ode[0])))
        t_probe = float(grid[-1]) if grid[-1] > 0 else 1.0
        ref = hpz.diffusion_nested(t_probe, bath, system, settings)
        got = hpz.diffusion_coefficients(t_probe, bath, system, settings)
        rel = max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(got, ref))
        report.oracle["green_vs_ode_abs"] = err
        report.oracle["diffusion_vs_nested_rel"] = rel
        if err > 1e-6 or rel > 1e-6:
            raise OracleMismatch(f"coefficient oracles: green {err:.3g}, diffusion {rel:.3g}")


def _run_mu(sc: Scenario, grid, out: Path, settings, check, report: RunReport):
    state = dec.CatState(sc.system, sc.theta)
    trace = dec.decay_trace(grid, state, sc.bath, settings)
    tau, branch = dec.decoherence_time(state, sc.bath, settings, method="auto") \
        if dec.is_high_temperature(sc.bath, sc.system) else (None, None)
    if tau is None:
        tau = dec.first_crossing(grid, trace.mu, math.exp(-1.0))
        branch = dec.Branch.NUMERIC if tau is not None else dec.Branch.NO_DECOHERENCE
    path = out / "mu.csv"
    trace.to_csv(path, _meta(sc, report, tau_d=tau if tau is not None else "inf", branch=branch.value,
                             revivals=[list(r) for r in trace.revivals]))
    report.files.append(str(path))
    ms = trace.moments
    path = out / "moments.csv"
    write_csv(path, MOMENT_COLUMNS, [[getattr(m, c) for m in ms] for c in MOMENT_COLUMNS], _meta(sc, report))
    report.files.append(str(path))
    report.summary.update(tau_d=_finite(tau) if tau is not None else None, branch=branch.value,
                          tau_d_numeric=dec.first_crossing(grid, trace.mu, math.exp(-1.0)),
                          revivals=trace.revivals)
    problems = []
    if abs(trace.mu[0] - 1.0) > 1e-12:
        problems.append("mu(0) != 1")
    if np.any(trace.mu <= 0) or np.any(trace.mu > 1 + 1e-9):
        problems.append("mu outside (0, 1 + 1e-9]")
    if not all(m.satisfies_uncertainty(sc.system.hbar) for m in trace.moments):
        problems.append("uncertainty relation violated")
    report.summary["invariants"] = problems or "ok"
    if sc.compare_gamma is not None:
        alt = dataclasses.replace(sc.bath, gamma=sc.compare_gamma)
        alt_trace = dec.decay_trace(grid, state, alt, settings)
        path = out / "mu_compare.csv"
        alt_trace.to_csv(path, _meta(dataclasses.replace(sc, bath=alt), report,
                                     revivals=[list(r) for r in alt_trace.revivals]))
        report.files.append(str(path))
    if check:
        worst, checked = 0.0, 0
        for ms in trace.moments[:: max(1, len(trace.moments) // 5)][1:]:
            if sum(dec._panels_for(ms, state, 8)) > 4000:
                continue
            q = dec.mu_quadrature(ms, state)
            worst = max(worst, abs(dec.mu_closed_form(ms, state) - q) / q)
            checked += 1
        report.oracle["mu_vs_quadrature_rel"] = worst if checked else "skipped: fringes too dense"
        if worst > 1e-6:
            raise OracleMismatch(f"mu closed form vs quadrature: {worst:.3g}")
    if problems:
        raise NumericalError("; ".join(problems))


def _run_concurrence(sc: Scenario, grid, out: Path, settings, check, report: RunReport):
    spec = ent.EcsSpec(sc.n_modes, sc.theta, sc.alpha2)
    rates = hpz.integrated_rates(grid, sc.bath, sc.system, settings)
    trace = ent.concurrence_nonmarkovian(grid, spec, rates, sc.bath, sc.system)
    path = out / "concurrence.csv"
    trace.to_csv(path, _meta(sc, report))
    report.files.append(str(path))
    report.summary.update(separability_time=trace.separability_time, concurrence_revivals=trace.revivals)
    if np.any(trace.c < 0) or np.any(trace.c > 1):
        raise NumericalError("concurrence outside [0, 1]")
    if check:
        p, q, m = trace.params
        worst = max(abs(ent.wootters_concurrence(ent.rebuild_density(a, b, c, spec.theta, spec.norm_sq)) - cv)
                    for a, b, c, cv in zip(p, q, m, trace.c))
        report.oracle["concurrence_vs_wootters_abs"] = worst
        if worst > 1e-10:
            raise OracleMismatch(f"concurrence vs Wootters: {worst:.3g}")


def _run_sweep(sc: Scenario, grid, out: Path, settings, check, report: RunReport):
    sw = sc.sweep
    cutoffs = sw.cutoffs or (sc.bath.cutoff,)
    q0 = sw.q0_range()
    slopes = {}
    for G in cutoffs:
        bath = dataclasses.replace(sc.bath, cutoff=G)
        rows = sweep_tau_d(q0, bath, sc.system, settings, sw.kernel)
        tau = np.array([r[1] for r in rows])
        k = max(4, len(q0) // 5)
        slopes[G] = (loglog_slope(q0[:k], tau[:k]), loglog_slope(q0[-k:], tau[-k:]))
        path = out / f"taud_cutoff{G:g}.csv"
        write_csv(path, ["q0", "tau_d", "branch"], [q0, tau, np.array([r[2] for r in rows])],
                  _meta(dataclasses.replace(sc, bath=bath), report, kernel=sw.kernel,
                        slope_small_q0=slopes[G][0], slope_large_q0=slopes[G][1]))
        report.files.append(str(path))
    report.summary["tau_d_slopes"] = {f"{G:g}": s for G, s in slopes.items()}


_PLOT_TEMPLATE = '''"""Plots for scenario {name}; generated, edit freely."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).parent


def load(name):
    rows = [r for r in (HERE / name).read_text().splitlines() if r and not r.startswith("#")]
    header, body = rows[0].split(","), [r.split(",") for r in rows[1:]]
    cols = {{}}
    for i, h in enumerate(header):
        try:
            cols[h] = [float(r[i]) for r in body]
        except ValueError:
            cols[h] = [r[i] for r in body]
    return cols


figs = []
{body}
for fig, stem in figs:
    fig.savefig(HERE / (stem + ".png"), dpi=150, bbox_inches="tight")
'''

_PLOT_BODIES = {
    "coeffs.csv": '''d = load("coeffs.csv")
fig, axes = plt.subplots(2, 2, figsize=(9, 6))
for ax, key in zip(axes.flat, ["gamma_p", "delta_omega2", "d_p", "d_qp"]):
    ax.plot(d["t"], d[key]); ax.set_xlabel("omega0 t"); ax.set_ylabel(key)
figs.append((fig, "coeffs"))
''',
    "mu.csv": '''d = load("mu.csv")
fig, ax = plt.subplots()
ax.plot(d["t"], d["mu"], "r", label="mu_I")
ax.plot(d["t"], d["mu_vacuum"], "b", label="short-time law")
ax.plot(d["t"], d["mu_thermal"], "y--", label="thermal law")
ax.set_xlabel("omega0 t"); ax.set_ylabel("mu_I"); ax.legend()
figs.append((fig, "mu"))
''',
    "concurrence.csv": '''d = load("concurrence.csv")
fig, ax = plt.subplots()
ax.plot(d["t"], d["c"], "r", label="non-Markovian")
ax.plot(d["t"], d["c_markov_bare"], "b", label="Markov, bare gamma")
ax.plot(d["t"], d["c_markov_adjusted"], "y--", label="Markov, adjusted")
ax.set_xlabel("omega0 t"); ax.set_ylabel("C12"); ax.legend()
figs.append((fig, "concurrence"))
''',
}


def _write_plot_script(out: Path, sc: Scenario, report: RunReport):
    names = [Path(f).name for f in report.files]
    parts = [_PLOT_BODIES[n] for n in ("coeffs.csv", "mu.csv", "concurrence.csv") if n in names]
    sweeps = sorted(n for n in names if n.startswith("taud_"))
    if sweeps:
        lines = ["fig, ax = plt.subplots()"]
        for n in sweeps:
            lines.append(f'd = load("{n}"); ax.loglog(d["q0"], d["tau_d"], label="{n[:-4]}")')
        lines.append('ax.set_xlabel("q0"); ax.set_ylabel("tau_d"); ax.legend()')
        lines.append('figs.append((fig, "tau_d"))')
        parts.append("\n".join(lines) + "\n")
    if not parts:
        return
    path = out / f"plot_{sc.name}.py"
    path.write_text(_PLOT_TEMPLATE.format(name=sc.name, body="\n".join(parts)))
    report.files.append(str(path))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="runs", help="output directory (default: runs/<scenario>)")
    common.add_argument("--grid-points", type=int, help="override the number of time points")
    common.add_argument("--t-max", type=float, help="override the final time (units of 1/omega0)")
    common.add_argument("--tol", type=float, help="relative tolerance of the frequency quadratures")
    common.add_argument("--check-oracle", action="store_true", help="run the independent oracles inline")

    parser = argparse.ArgumentParser(prog="hpzlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in SUBCOMMAND_OUTPUT:
        p = sub.add_parser(cmd, parents=[common], help=f"compute {SUBCOMMAND_OUTPUT[cmd]} from a YAML config")
        p.add_argument("--config", required=True, help="YAML scenario file")
    p = sub.add_parser("preset", parents=[common], help="run a figure preset")
    p.add_argument("name", help=f"one of: {', '.join(PRESETS)}")
    p.add_argument("--config", help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            scenario = preset(args.name)
        else:
            scenario = load_config(args.config)
            wanted = SUBCOMMAND_OUTPUT[args.command]
            scenario = dataclasses.replace(
                scenario, outputs=("timescales",) if wanted == "timescales" else ("timescales", wanted))
        scenario = scenario.with_grid(args.t_max, args.grid_points)
        settings = DEFAULT_SETTINGS if args.tol is None else dataclasses.replace(
            DEFAULT_SETTINGS, rel_tol=args.tol)
    except ConfigError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) / scenario.name
    report = run(scenario, out, settings, check_oracle=args.check_oracle)
    print(f"scenario {scenario.name}: regime {report.regime}")
    for k, v in report.timescales.items():
        print(f"  {k} = {v}")
    for k, v in report.summary.items():
        print(f"  {k}: {v}")
    for k, v in report.oracle.items():
        print(f"  oracle {k}: {v}")
    for f in report.failures:
        print(f"error [{f['code']}] in {f['output']}: {f['message']}", file=sys.stderr)
    print(f"  wrote {len(report.files)} files to {out}")
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
