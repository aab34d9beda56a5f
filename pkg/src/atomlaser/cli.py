"""Scenario runner: flat-file configs in, deterministic CSV tables out.

Configuration files are plain ``key = value`` text with dotted section
prefixes (``grid.n = 512``); unknown keys are hard errors so that typos in
physics parameters cannot pass silently.  Each scenario writes one CSV file
whose first lines record the package version and the fully resolved
configuration; identical configs produce byte-identical files.

Scenarios
---------
single-pulse      density of the outcoupled pulse at snapshot times
variance-vs-time  relative number variance v(N) for the three probe states
flux-squeezing    flux, flux variance and v(J) at the observation point
omega-sweep       min_t v(J) for a list of coupling strengths
opo-twin-beams    twin-beam density at snapshot times
epr               quadrature variances, inferred variances and the
                  flux-difference ratio versus time

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .grids import GridError, fourier_kernel
from .model import (OpoModel, PhysicalParams, ReducedModel, default_params,
                    opo_params, single_probe_grid)
from .optics import coherent, fock, squeezed
from .prop_opo import evolve_opo, twin_beam_grid
from .prop_single import IntegrationError, evolve
from . import observables as obs

SCENARIOS = ("single-pulse", "variance-vs-time", "flux-squeezing",
             "omega-sweep", "opo-twin-beams", "epr")
_OPO_SCENARIOS = ("opo-twin-beams", "epr")


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    # physical parameters
    m: float
    omega_t: float
    k_kick: float
    omega: float
    omega_a: float
    chi_beta: float
    # grid (n is the total sample count for single-probe scenarios and the
    # per-band count for the twin-beam ones)
    n: int
    k_halfwidth: float
    # integrator
    dt: float
    t_final: float
    mode: str
    snapshot_times: tuple[float, ...]
    # optical probe state (single-probe scenarios)
    state: str
    alpha_sq: float
    r: float
    photons: int
    # observation geometry
    x0: float
    x1: float
    x2: float
    literal_carrier: bool
    x_min: float
    x_max: float
    x_points: int
    time_step: float
    # sweep
    omegas: tuple[float, ...]
    # output
    out_dir: str

    def params(self) -> PhysicalParams:
        return PhysicalParams(m=self.m, omega_t=self.omega_t, k_kick=self.k_kick,
                              Omega=self.omega, omega_a=self.omega_a,
                              chi_beta=self.chi_beta)

    def optical_state(self):
        if self.state == "coherent":
            return coherent(self.alpha_sq)
        if self.state == "fock":
            return fock(self.photons)
        if self.state == "squeezed":
            return squeezed(self.alpha_sq, self.r)
        raise ConfigError(f"unknown optical state '{self.state}'")

    def observe_times(self) -> tuple[float, ...]:
        n_steps = int(round(self.t_final / self.time_step))
        return tuple(round(i * self.time_step, 12) for i in range(n_steps + 1))


def default_config(scenario: str) -> ScenarioConfig:
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario '{scenario}' (choose from {', '.join(SCENARIOS)})")
    is_opo = scenario in _OPO_SCENARIOS
    p = opo_params() if is_opo else default_params()
    t_final = {"epr": 0.25}.get(scenario, 0.1 if is_opo else 0.2)
    return ScenarioConfig(
        scenario=scenario,
        m=p.m, omega_t=p.omega_t, k_kick=p.k_kick, omega=p.Omega,
        omega_a=p.omega_a, chi_beta=p.chi_beta,
        n=256 if is_opo else 512,
        k_halfwidth=5.0e4 if is_opo else 8.0e4,
        dt=1.0e-4,
        t_final=t_final,
        mode="interaction",
        snapshot_times=(0.02, 0.05, 0.1) if is_opo else (0.05, 0.11, 0.15, 0.2),
        state="coherent", alpha_sq=1000.0, r=1.38, photons=1000,
        x0=0.45e-3 if is_opo else 1.5e-3,
        x1=2.4e-3, x2=0.4e-3, literal_carrier=False,
        x_min=-3.0e-3 if is_opo else -0.5e-3,
        x_max=3.0e-3,
        x_points=241,
        time_step=0.005 if scenario == "epr" else 0.002,
        omegas=(18.0, 54.0, 90.0, 126.0, 162.0, 198.0, 234.0, 270.0, 306.0,
                342.0, 378.0),
        out_dir="out",
    )


# configuration-file key <-> dataclass field
_KEY_MAP = {
    "scenario": "scenario",
    "params.m": "m",
    "params.omega_t": "omega_t",
    "params.k_kick": "k_kick",
    "params.omega": "omega",
    "params.omega_a": "omega_a",
    "params.chi_beta": "chi_beta",
    "grid.n": "n",
    "grid.k_halfwidth": "k_halfwidth",
    "integrator.dt": "dt",
    "integrator.t_final": "t_final",
    "integrator.mode": "mode",
    "integrator.snapshot_times": "snapshot_times",
    "optics.state": "state",
    "optics.alpha_sq": "alpha_sq",
    "optics.r": "r",
    "optics.n": "photons",
    "observation.x0": "x0",
    "observation.x1": "x1",
    "observation.x2": "x2",
    "observation.literal_carrier": "literal_carrier",
    "observation.x_min": "x_min",
    "observation.x_max": "x_max",
    "observation.x_points": "x_points",
    "observation.time_step": "time_step",
    "sweep.omegas": "omegas",
    "output.dir": "out_dir",
}
_FIELD_TO_KEY = {v: k for k, v in _KEY_MAP.items()}


def _parse_value(key: str, field_type, text: str):
    text = text.strip()
    try:
        if field_type is float:
            return float(text)
        if field_type is int:
            return int(text)
        if field_type is bool:
            if text.lower() in ("true", "yes", "on", "1"):
                return True
            if text.lower() in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if field_type is str:
            return text
        # tuple of floats
        if text == "":
            return ()
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for '{key}': {text!r}") from exc


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines; '#' starts a comment; unknown keys raise."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown configuration key '{key}' (line {lineno})")
        if key in raw:
            raise ConfigError(f"duplicate configuration key '{key}' (line {lineno})")
        raw[key] = value.strip()

    if "scenario" not in raw:
        raise ConfigError("configuration must set 'scenario'")
    cfg = default_config(raw.pop("scenario"))
    updates = {}
    for key, value in raw.items():
        name = _KEY_MAP[key]
        ftype = {"m": float, "omega_t": float, "k_kick": float, "omega": float,
                 "omega_a": float, "chi_beta": float, "n": int,
                 "k_halfwidth": float, "dt": float, "t_final": float,
                 "mode": str, "snapshot_times": tuple, "state": str,
                 "alpha_sq": float, "r": float, "photons": int, "x0": float,
                 "x1": float, "x2": float, "literal_carrier": bool,
                 "x_min": float, "x_max": float, "x_points": int,
                 "time_step": float, "omegas": tuple, "out_dir": str}[name]
        updates[name] = _parse_value(key, ftype, value)
    cfg = replace(cfg, **updates)
    validate_config(cfg)
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc


def validate_config(cfg: ScenarioConfig) -> None:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{cfg.scenario}'")
    if cfg.dt <= 0:
        raise ConfigError("integrator.dt must be positive")
    if cfg.t_final <= 0:
        raise ConfigError("integrator.t_final must be positive")
    if cfg.mode not in ("interaction", "direct"):
        raise ConfigError("integrator.mode must be 'interaction' or 'direct'")
    if cfg.state not in ("coherent", "fock", "squeezed"):
        raise ConfigError("optics.state must be coherent, fock or squeezed")
    if cfg.scenario in ("single-pulse", "opo-twin-beams"):
        if not cfg.snapshot_times:
            raise ConfigError("this scenario needs integrator.snapshot_times")
        for t in cfg.snapshot_times:
            if not 0.0 <= t <= cfg.t_final:
                raise ConfigError(f"snapshot time {t} outside [0, {cfg.t_final}]")
    if cfg.time_step <= 0 or cfg.time_step > cfg.t_final:
        raise ConfigError("observation.time_step must lie in (0, t_final]")
    if cfg.scenario == "epr" and not cfg.x1 > cfg.x2 > 0:
        raise ConfigError("EPR window needs x1 > x2 > 0")
    if cfg.scenario == "omega-sweep" and not cfg.omegas:
        raise ConfigError("sweep.omegas must not be empty")
    if cfg.x_points < 2:
        raise ConfigError("observation.x_points must be at least 2")
    try:
        cfg.params()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_items(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    """Resolved configuration as sorted (file-key, printable-value) pairs."""
    items = []
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            text = ",".join(repr(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        items.append((_FIELD_TO_KEY[f.name], text))
    return sorted(items)


# --------------------------------------------------------------------------
# output tables
# --------------------------------------------------------------------------

@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list[float | None]]

    def write(self, cfg: ScenarioConfig, out_dir: str) -> str:
        path = os.path.join(out_dir, self.name)
        conf = "; ".join(f"{k} = {v}" for k, v in config_items(cfg))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# atomlaser {__version__} scenario={cfg.scenario}\n")
            fh.write(f"# config: {conf}\n")
            fh.write("# empty cells mark quantities undefined at that instant\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join("" if v is None else f"{v:.17e}" for v in row))
                fh.write("\n")
        return path

    def column(self, name: str) -> list[float | None]:
        return [row[self.columns.index(name)] for row in self.rows]


# --------------------------------------------------------------------------
# scenario implementations
# --------------------------------------------------------------------------

def _density_points(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(cfg.x_min, cfg.x_max, cfg.x_points)


def _run_single_pulse(cfg: ScenarioConfig) -> Table:
    params = cfg.params()
    model = ReducedModel(params)
    grid = single_probe_grid(params, n=cfg.n, k_halfwidth=cfg.k_halfwidth)
    state = cfg.optical_state()
    xs = _density_points(cfg)
    kernel = fourier_kernel(grid, xs)
    sols = evolve(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
                  snapshot_times=cfg.snapshot_times)
    rows = []
    for sol in sols:
        dens = np.abs(kernel @ sol.g) ** 2 * state.mean_n
        rows.extend([sol.t, x, d] for x, d in zip(xs, dens))
    return Table("density.csv", ["t", "x", "density"], rows)


def _run_variance_vs_time(cfg: ScenarioConfig) -> Table:
    params = cfg.params()
    model = ReducedModel(params)
    grid = single_probe_grid(params, n=cfg.n, k_halfwidth=cfg.k_halfwidth)
    states = [coherent(cfg.alpha_sq), squeezed(cfg.alpha_sq, cfg.r),
              fock(cfg.photons)]
    rows = []

    def watch(sol):
        stats = [obs.number_stats(sol, s).relative for s in states]
        rows.append([sol.t, *stats])

    evolve(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
           observer=watch, observe_times=cfg.observe_times())
    return Table("nvar.csv", ["t", "vN_coherent", "vN_squeezed", "vN_fock"], rows)


def _run_flux_squeezing(cfg: ScenarioConfig) -> Table:
    params = cfg.params()
    model = ReducedModel(params)
    grid = single_probe_grid(params, n=cfg.n, k_halfwidth=cfg.k_halfwidth)
    state = cfg.optical_state()
    rows = []

    def watch(sol):
        flux = obs.flux_mean(sol, state, cfg.x0, params)
        var = obs.flux_variance_single(sol, state, cfg.x0, params).total
        rows.append([sol.t, flux, var, obs.v_of_J(sol, cfg.x0, params)])

    evolve(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
           observer=watch, observe_times=cfg.observe_times())
    return Table("flux.csv", ["t", "flux", "flux_variance", "vJ"], rows)


def _run_omega_sweep(cfg: ScenarioConfig) -> Table:
    rows = []
    for omega in cfg.omegas:
        params = replace(cfg.params(), Omega=float(omega))
        model = ReducedModel(params)
        grid = single_probe_grid(params, n=cfg.n, k_halfwidth=cfg.k_halfwidth)
        found = []

        def watch(sol):
            vj = obs.v_of_J(sol, cfg.x0, params)
            if vj is not None:
                found.append(vj)

        evolve(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
               observer=watch, observe_times=cfg.observe_times())
        rows.append([float(omega), min(found) if found else None])
    return Table("sweep.csv", ["omega", "min_vJ"], rows)


def _run_opo_density(cfg: ScenarioConfig) -> Table:
    params = cfg.params()
    model = OpoModel(params)
    grid = twin_beam_grid(params, n_band=cfg.n, k_halfwidth=cfg.k_halfwidth)
    xs = _density_points(cfg)
    sols = evolve_opo(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
                      snapshot_times=cfg.snapshot_times)
    rows = []
    for sol in sols:
        dens = obs.density_twin(sol, xs)
        rows.extend([sol.t, x, d] for x, d in zip(xs, dens))
    return Table("opo_density.csv", ["t", "x", "density"], rows)


def _run_epr(cfg: ScenarioConfig) -> Table:
    params = cfg.params()
    model = OpoModel(params)
    grid = twin_beam_grid(params, n_band=cfg.n, k_halfwidth=cfg.k_halfwidth)
    window = obs.EprWindow(x1=cfg.x1, x2=cfg.x2, k_carrier=params.k_kick,
                           omega_a=params.omega_a,
                           literal_carrier=cfg.literal_carrier)
    rows = []

    def watch(sol):
        kern = obs.build_kernels(sol, [cfg.x0, -cfg.x0])
        epr = obs.epr_inference(kern, window)
        diff = obs.flux_difference_variance(kern, cfg.x0, params)
        rows.append([sol.t, epr.VX_minus, epr.VY_minus, epr.Vinf_X_minus,
                     epr.Vinf_Y_minus, epr.product, diff.ratio])

    evolve_opo(model, grid, cfg.t_final, dt=cfg.dt, mode=cfg.mode,
               observer=watch, observe_times=cfg.observe_times())
    return Table("epr.csv", ["t", "VXm", "VYm", "Vinf_Xm", "Vinf_Ym",
                             "product", "flux_diff_ratio"], rows)


_RUNNERS = {
    "single-pulse": _run_single_pulse,
    "variance-vs-time": _run_variance_vs_time,
    "flux-squeezing": _run_flux_squeezing,
    "omega-sweep": _run_omega_sweep,
    "opo-twin-beams": _run_opo_density,
    "epr": _run_epr,
}


def run(cfg: ScenarioConfig, out_dir: str | None = None,
        write: bool = True) -> Table:
    """Execute the scenario; optionally write its CSV; return the table."""
    table = _RUNNERS[cfg.scenario](cfg)
    for row in table.rows:
        for value in row:
            if value is not None and not np.isfinite(value):
                raise IntegrationError(
                    f"non-finite value in output column set {table.columns}")
    if write:
        target = out_dir if out_dir is not None else cfg.out_dir
        os.makedirs(target, exist_ok=True)
        table.write(cfg, target)
    return table


# --------------------------------------------------------------------------
# convergence check
# --------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    tolerance: float
    changes: dict[str, float]       # "refinement/column" -> sup-relative change

    @property
    def passed(self) -> bool:
        return all(v < self.tolerance for v in self.changes.values())

    def lines(self) -> list[str]:
        out = []
        for key in sorted(self.changes):
            flag = "ok  " if self.changes[key] < self.tolerance else "FAIL"
            out.append(f"{flag} {key}: {self.changes[key]:.3e}")
        out.append(f"convergence {'PASSED' if self.passed else 'FAILED'} "
                   f"(tolerance {self.tolerance:.1e})")
        return out


def _column_change(base: Table, fine: Table, col: str) -> float:
    a = base.column(col)
    b = fine.column(col)
    if len(a) != len(b):
        raise IntegrationError(
            f"refined run changed the row count of column '{col}'")
    defined = [(x, y) for x, y in zip(a, b) if x is not None and y is not None]
    if any((x is None) != (y is None) for x, y in zip(a, b)):
        return np.inf
    if not defined:
        return 0.0
    scale = max(max(abs(x) for x, _ in defined), 1e-300)
    return max(abs(x - y) for x, y in defined) / scale


def convergence_check(cfg: ScenarioConfig, tolerance: float = 1e-3) -> ConvergenceReport:
    """Re-run with dt/2 and with doubled n; report sup-relative column changes."""
    base = run(cfg, write=False)
    finer_dt = run(replace(cfg, dt=cfg.dt / 2), write=False)
    finer_n = run(replace(cfg, n=cfg.n * 2), write=False)
    changes = {}
    for tag, fine in (("dt/2", finer_dt), ("nx2", finer_n)):
        for col in base.columns:
            changes[f"{tag}/{col}"] = _column_change(base, fine, col)
    return ConvergenceReport(tolerance=tolerance, changes=changes)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="atomlaser",
        description="Atom-laser outcoupling simulator (momentum-space mode functions)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config and write CSV output")
    p_run.add_argument("config", help="path to a key = value configuration file")
    p_check = sub.add_parser("check", help="convergence check: dt/2 and n*2 reruns")
    p_check.add_argument("config", help="path to a key = value configuration file")
    p_def = sub.add_parser("print-defaults",
                           help="print the default configuration for a scenario")
    p_def.add_argument("scenario", nargs="?", default="single-pulse",
                       choices=SCENARIOS)
    args = parser.parse_args(argv)

    try:
        if args.command == "print-defaults":
            cfg = default_config(args.scenario)
            for key, value in config_items(cfg):
                print(f"{key} = {value}")
            return 0
        cfg = load_config(args.config)
        if args.command == "run":
            table = run(cfg)
            print(f"wrote {os.path.join(cfg.out_dir, table.name)} "
                  f"({len(table.rows)} rows)")
            return 0
        report = convergence_check(cfg)
        for line in report.lines():
            print(line)
        return 0 if report.passed else 2
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, GridError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
