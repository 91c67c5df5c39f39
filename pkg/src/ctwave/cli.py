"""Scenario-driven command line front end.

Subcommands::

    ctwave run <config> [--out DIR] [--threads N]   wavefunction sweeps + report
    ctwave map <config> --time T [--out DIR]        w-plane scan, families, caustics
    ctwave compare <a.csv> <b.csv>                  L2 / density / phase metrics

Configs are flat ``key = value`` text with dotted sections, e.g.::

    potential.kind = quartic
    state.q = 0.0
    state.p = -2.0
    state.b = 1.0
    times = 2.5, 4.5
    xf.min = -6.0
    xf.max = 6.0
    formulas = CT, QP, EXACT

Any key can be overridden from the environment with the ``CTWAVE_`` prefix
(dots become underscores, upper case): ``CTWAVE_XF_N=101``.  Outputs are
deterministic: rerunning a config reproduces byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path

import numpy as np

from . import exactref, rootsearch, semiclassics
from ._format import fmt
from .errors import ConfigError, CtwaveError, GridMismatchError
from .model import CoherentState
from .potentials import POTENTIAL_KINDS, FreeParticle, Harmonic
from .rootsearch import SearchSettings
from .semiclassics import exponent_F_values, filter_families

ENV_PREFIX = "CTWAVE_"

_SEARCH_FIELDS = {f.name: f for f in dataclass_fields(SearchSettings)}

_BASE_KEYS = {
    "scenario.name": str,
    "scenario.hard_wall": bool,
    "potential.kind": str,
    "potential.A": float,
    "potential.B": float,
    "potential.mass": float,
    "potential.omega": float,
    "state.q": float,
    "state.p": float,
    "state.b": float,
    "state.omega": float,
    "state.hbar": float,
    "state.mu": float,
    "times": str,
    "formulas": str,
    "xf.min": float,
    "xf.max": float,
    "xf.n": int,
    "grid.x_min": float,
    "grid.x_max": float,
    "grid.n": int,
    "grid.dt": float,
}

KNOWN_KEYS = dict(_BASE_KEYS)
# search.* keys take the type of the corresponding SearchSettings default
for _name in _SEARCH_FIELDS:
    KNOWN_KEYS["search." + _name] = type(getattr(SearchSettings(), _name))

FORMULA_NAMES = ("CT", "QP", "XFQ", "XFP", "EXACT")


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run description."""

    name: str
    model: object
    state: CoherentState
    hard_wall: bool
    times: tuple
    xf_min: float
    xf_max: float
    xf_n: int
    formulas: tuple
    search: SearchSettings
    grid: exactref.Grid
    grid_dt: float
    resolved: tuple  # ((key, value-string), ...) for the config echo

    @property
    def xf_grid(self) -> np.ndarray:
        return np.linspace(self.xf_min, self.xf_max, self.xf_n)

    @property
    def exact_kind(self) -> str:
        if self.hard_wall:
            return "wall"
        if isinstance(self.model, FreeParticle):
            return "free"
        if isinstance(self.model, Harmonic):
            m = self.model
            if (abs(m.mass - self.state.mu) <= 1e-9 * self.state.mu and
                    abs(m.omega - self.state.omega) <= 1e-9 * self.state.omega):
                return "harmonic"
        return "grid"


@dataclass(frozen=True)
class ComparisonEntry:
    formula: str
    T: float
    l2_error: float
    max_density_dev: float
    phase_rms: float


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple
    floor_fraction: float = 1e-6

    def entry(self, formula: str, T: float) -> ComparisonEntry:
        for e in self.entries:
            if e.formula == formula and e.T == T:
                return e
        raise KeyError((formula, T))

    def to_csv(self) -> str:
        lines = ["# phase RMS restricted to densities above %s of peak"
                 % fmt(self.floor_fraction),
                 "formula,T,l2_error,max_density_dev,phase_rms"]
        for e in self.entries:
            lines.append(",".join([e.formula, fmt(e.T), fmt(e.l2_error),
                                   fmt(e.max_density_dev), fmt(e.phase_rms)]))
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` config text; '#' starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'key = value': %r"
                              % (lineno, raw))
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError("line %d: empty key or value" % lineno)
        if key in cfg:
            raise ConfigError("line %d: duplicate key %r" % (lineno, key))
        if key not in KNOWN_KEYS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        cfg[key] = value
    return cfg


def parse_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError("config file not found: %s" % path)
    return parse_config(path.read_text())


def apply_env_overrides(cfg: dict, environ=None) -> dict:
    """Override config keys from CTWAVE_* environment variables."""
    environ = os.environ if environ is None else environ
    by_env_name = {key.upper().replace(".", "_"): key for key in KNOWN_KEYS}
    out = dict(cfg)
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        key = by_env_name.get(name[len(ENV_PREFIX):])
        if key is None:
            raise ConfigError("unrecognized override variable %s" % name)
        out[key] = environ[name]
    return out


def _convert(key: str, value: str):
    target = KNOWN_KEYS[key]
    try:
        if target is bool:
            low = value.lower()
            if low not in ("true", "false"):
                raise ValueError(value)
            return low == "true"
        return target(value)
    except ValueError:
        raise ConfigError("key %r: cannot parse %r as %s"
                          % (key, value, target.__name__)) from None


def _floats_list(key: str, value: str) -> tuple:
    try:
        items = tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError("key %r: expected comma-separated numbers, got %r"
                          % (key, value)) from None
    if not items:
        raise ConfigError("key %r: empty list" % key)
    return items


def scenario_from_config(cfg: dict, name_default: str = "scenario") -> Scenario:
    """Validate a parsed config and build the Scenario object."""
    def get(key, default=None):
        if key in cfg:
            return _convert(key, cfg[key])
        return default

    kind = cfg.get("potential.kind")
    if kind is None:
        raise ConfigError("potential.kind is required")
    if kind not in POTENTIAL_KINDS:
        raise ConfigError("potential.kind %r not one of %s"
                          % (kind, sorted(POTENTIAL_KINDS)))
    if kind == "quartic":
        model = POTENTIAL_KINDS[kind](A=get("potential.A", 0.5),
                                      B=get("potential.B", 0.1))
    elif kind == "harmonic":
        model = POTENTIAL_KINDS[kind](mass=get("potential.mass", 1.0),
                                      omega=get("potential.omega", 1.0))
    else:
        model = POTENTIAL_KINDS[kind]()

    for key in ("state.q", "state.p"):
        if key not in cfg:
            raise ConfigError("%s is required" % key)
    has_b = "state.b" in cfg
    has_om = "state.omega" in cfg
    if has_b == has_om:
        raise ConfigError("give exactly one of state.b or state.omega")
    hbar = get("state.hbar", 1.0)
    mu = get("state.mu", 1.0)
    try:
        if has_b:
            state = CoherentState.from_width(get("state.q"), get("state.p"),
                                             get("state.b"), hbar=hbar, mu=mu)
        else:
            state = CoherentState(get("state.q"), get("state.p"), hbar=hbar,
                                  mu=mu, omega=get("state.omega"))
    except ValueError as exc:
        raise ConfigError("invalid state: %s" % exc) from None

    hard_wall = get("scenario.hard_wall", False)
    if hard_wall:
        if kind != "free":
            raise ConfigError("hard_wall scenarios use potential.kind = free")
        if not (state.q > 0 and state.p < 0):
            raise ConfigError("hard_wall needs q > 0 and p < 0")

    if "times" not in cfg:
        raise ConfigError("times is required")
    times = _floats_list("times", cfg["times"])
    if any(t < 0 for t in times):
        raise ConfigError("times must be non-negative")

    for key in ("xf.min", "xf.max"):
        if key not in cfg:
            raise ConfigError("%s is required" % key)
    xf_min, xf_max = get("xf.min"), get("xf.max")
    xf_n = get("xf.n", 241)
    if xf_max <= xf_min or xf_n < 2:
        raise ConfigError("xf grid must have xf.max > xf.min and xf.n >= 2")
    if hard_wall and xf_min <= 0:
        raise ConfigError("hard_wall scenarios need xf.min > 0")

    formulas = tuple(f.strip().upper()
                     for f in cfg.get("formulas", "CT,QP,XFQ,XFP,EXACT").split(",")
                     if f.strip())
    for f in formulas:
        if f not in FORMULA_NAMES:
            raise ConfigError("unknown formula %r (choose from %s)"
                              % (f, ",".join(FORMULA_NAMES)))
    if not formulas:
        raise ConfigError("formulas must not be empty")

    search_kwargs = {}
    for name in _SEARCH_FIELDS:
        key = "search." + name
        if key in cfg:
            search_kwargs[name] = _convert(key, cfg[key])
    try:
        search = SearchSettings(**search_kwargs)
    except ValueError as exc:
        raise ConfigError("invalid search settings: %s" % exc) from None

    try:
        grid = exactref.Grid(x_min=get("grid.x_min", -12.0),
                             x_max=get("grid.x_max", 12.0),
                             n=get("grid.n", 2048))
    except ValueError as exc:
        raise ConfigError("invalid grid: %s" % exc) from None
    grid_dt = get("grid.dt", 1e-3)
    if grid_dt <= 0:
        raise ConfigError("grid.dt must be positive")

    name = cfg.get("scenario.name", name_default)

    resolved = {
        "scenario.name": name,
        "scenario.hard_wall": "true" if hard_wall else "false",
        "potential.kind": kind,
        "state.q": fmt(state.q),
        "state.p": fmt(state.p),
        "state.hbar": fmt(state.hbar),
        "state.mu": fmt(state.mu),
        "state.omega": fmt(state.omega),
        "state.b": fmt(state.b),
        "times": ",".join(fmt(t) for t in times),
        "formulas": ",".join(formulas),
        "xf.min": fmt(xf_min),
        "xf.max": fmt(xf_max),
        "xf.n": str(xf_n),
        "grid.x_min": fmt(grid.x_min),
        "grid.x_max": fmt(grid.x_max),
        "grid.n": str(grid.n),
        "grid.dt": fmt(grid_dt),
    }
    if kind == "quartic":
        resolved["potential.A"] = fmt(model.A)
        resolved["potential.B"] = fmt(model.B)
    if kind == "harmonic":
        resolved["potential.mass"] = fmt(model.mass)
        resolved["potential.omega"] = fmt(model.omega)
    for fname in sorted(_SEARCH_FIELDS):
        val = getattr(search, fname)
        resolved["search." + fname] = (val if isinstance(val, str)
                                       else fmt(val) if isinstance(val, float)
                                       else str(val))

    return Scenario(name=name, model=model, state=state, hard_wall=hard_wall,
                    times=times, xf_min=xf_min, xf_max=xf_max, xf_n=xf_n,
                    formulas=formulas, search=search, grid=grid,
                    grid_dt=grid_dt, resolved=tuple(sorted(resolved.items())))


def load_scenario(config_path) -> Scenario:
    cfg = apply_env_overrides(parse_config_file(config_path))
    return scenario_from_config(cfg, name_default=Path(config_path).stem)


def _t_tag(T: float) -> str:
    return ("%g" % T).replace(".", "p").replace("-", "m")


def _exact_values(scenario: Scenario, T: float) -> np.ndarray:
    xf = scenario.xf_grid
    kind = scenario.exact_kind
    if kind == "free":
        return exactref.exact_free(scenario.state, xf, T)
    if kind == "harmonic":
        return exactref.exact_harmonic(scenario.state, xf, T)
    if kind == "wall":
        return exactref.exact_wall(scenario.state, xf, T)
    wf = exactref.propagate_grid(scenario.model, scenario.state, T,
                                 scenario.grid, scenario.grid_dt)
    return wf.interpolate(xf)


def _psi_csv(scenario: Scenario, formula: str, T: float,
             xf: np.ndarray, values: np.ndarray, flags_list) -> str:
    lines = ["# scenario=%s formula=%s T=%s" % (scenario.name, formula, fmt(T)),
             "x_f,Re psi,Im psi,density,phase_over_pi,formula,flags"]
    for x, v, fl in zip(xf, values, flags_list):
        lines.append(",".join([
            fmt(x), fmt(v.real), fmt(v.imag), fmt(abs(v) ** 2),
            fmt(np.angle(v) / math.pi), formula, ";".join(fl)]))
    return "\n".join(lines) + "\n"


def _compute_task(scenario: Scenario, formula: str, T: float):
    xf = scenario.xf_grid
    if formula == "EXACT":
        values = np.asarray(_exact_values(scenario, T), dtype=complex)
        flags_list = [()] * len(xf)
    else:
        samples = semiclassics.assemble(formula, scenario, xf, T)
        values = semiclassics.samples_array(samples)
        flags_list = [s.flags for s in samples]
    return values, flags_list


def compare_values(x_grid, a, b, floor_fraction: float = 1e-6):
    """(L2 error, max density deviation, phase RMS) between two sweeps."""
    x_grid = np.asarray(x_grid, dtype=float)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    dx = x_grid[1] - x_grid[0]
    l2 = float(np.sqrt(np.sum(np.abs(a - b) ** 2) * dx))
    da, db = np.abs(a) ** 2, np.abs(b) ** 2
    max_dev = float(np.max(np.abs(da - db)))
    mask = (da > floor_fraction * da.max()) & (db > floor_fraction * db.max())
    if mask.any():
        dphi = np.angle(a[mask] * np.conj(b[mask]))
        phase_rms = float(np.sqrt(np.mean(dphi ** 2)))
    else:
        phase_rms = 0.0
    return l2, max_dev, phase_rms


def run_scenario(config_path, out_dir=None, threads: int = 1) -> Path:
    """Run every (time, formula) sweep of a config; write CSVs and a report."""
    scenario = load_scenario(config_path)
    out = Path(out_dir) if out_dir else Path("%s_out" % scenario.name)
    out.mkdir(parents=True, exist_ok=True)

    (out / "resolved.cfg").write_text(
        "".join("%s = %s\n" % kv for kv in scenario.resolved))

    tasks = [(T, f) for T in scenario.times for f in scenario.formulas]
    results = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {t: pool.submit(_compute_task, scenario, t[1], t[0])
                       for t in tasks}
            for t, fut in futures.items():
                results[t] = fut.result()
    else:
        for T, f in tasks:
            results[(T, f)] = _compute_task(scenario, f, T)

    xf = scenario.xf_grid
    for (T, f) in sorted(results, key=lambda t: (t[0], t[1])):
        values, flags_list = results[(T, f)]
        path = out / ("psi_%s_T%s.csv" % (f, _t_tag(T)))
        path.write_text(_psi_csv(scenario, f, T, xf, values, flags_list))

    entries = []
    if "EXACT" in scenario.formulas:
        for T in scenario.times:
            exact_vals = results[(T, "EXACT")][0]
            for f in scenario.formulas:
                if f == "EXACT":
                    continue
                l2, max_dev, phase_rms = compare_values(
                    xf, results[(T, f)][0], exact_vals)
                entries.append(ComparisonEntry(formula=f, T=T, l2_error=l2,
                                               max_density_dev=max_dev,
                                               phase_rms=phase_rms))
    report = ComparisonReport(entries=tuple(entries))
    (out / "comparison_report.csv").write_text(report.to_csv())
    return out


def emit_map_data(scenario: Scenario, T: float, out_dir) -> Path:
    """Write the w-plane scan, family traces and caustic list for one time."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    state, search = scenario.state, scenario.search
    disc = rootsearch.discover_families(scenario.model, state, T,
                                        scenario.xf_grid, search)
    if disc.families and len(disc.families) >= 1:
        try:
            filter_families(disc.families, state)
        except CtwaveError:
            pass  # statuses stay "contributing"; the map data is still valid

    field = disc.field
    if field is None:
        field = rootsearch.wmap_scan(scenario.model, state, T, search)
    im_F = exponent_F_values(field.S, field.x0, state).imag

    lines = ["# w-plane scan: alpha in [%s, %s] step %s, beta in [%s, %s] step %s"
             % (fmt(field.alphas[0]), fmt(field.alphas[-1]),
                fmt(field.alphas[1] - field.alphas[0]),
                fmt(field.betas[0]), fmt(field.betas[-1]),
                fmt(field.betas[1] - field.betas[0])),
             "alpha,beta,Re X_T,Im X_T,Im F,escaped"]
    for i, a in enumerate(field.alphas):
        for j, be in enumerate(field.betas):
            lines.append(",".join([
                fmt(a), fmt(be), fmt(field.X_T[i, j].real),
                fmt(field.X_T[i, j].imag), fmt(im_F[i, j]),
                "1" if field.escaped[i, j] else "0"]))
    (out / ("wmap_T%s.csv" % _t_tag(T))).write_text("\n".join(lines) + "\n")

    lines = ["x_f,Re w,Im w,Re F,Im F,family,status"]
    for fam in disc.families:
        for m in fam.members:
            lines.append(",".join([
                fmt(m.x_f), fmt(m.w.real), fmt(m.w.imag),
                fmt(m.F.real), fmt(m.F.imag), fam.label, m.status]))
    (out / ("families_T%s.csv" % _t_tag(T))).write_text("\n".join(lines) + "\n")

    lines = ["Re w,Im w,Re X_T,Im X_T,residual"]
    for ca in disc.caustics:
        lines.append(",".join([fmt(ca.w.real), fmt(ca.w.imag),
                               fmt(ca.X_T.real), fmt(ca.X_T.imag),
                               fmt(ca.residual)]))
    (out / ("caustics_T%s.csv" % _t_tag(T))).write_text("\n".join(lines) + "\n")
    return out


def read_psi_csv(path) -> tuple:
    """Read a wavefunction CSV back as (x_f array, complex values)."""
    xs, vals = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x_f"):
                continue
            parts = line.split(",")
            xs.append(float(parts[0]))
            vals.append(complex(float(parts[1]), float(parts[2])))
    if not xs:
        raise ConfigError("no data rows in %s" % path)
    return np.array(xs), np.array(vals)


def compare(path_a, path_b) -> ComparisonEntry:
    """Compare two wavefunction CSVs on the same grid."""
    xa, va = read_psi_csv(path_a)
    xb, vb = read_psi_csv(path_b)
    if len(xa) != len(xb) or np.max(np.abs(xa - xb)) > 1e-12 * max(
            1.0, float(np.max(np.abs(xa)))):
        raise GridMismatchError("x_f grids differ between %s and %s"
                                % (path_a, path_b))
    l2, max_dev, phase_rms = compare_values(xa, va, vb)
    return ComparisonEntry(formula=Path(path_a).stem, T=math.nan, l2_error=l2,
                           max_density_dev=max_dev, phase_rms=phase_rms)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ctwave",
        description="semiclassical wavepacket propagation scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1)

    p_map = sub.add_parser("map", help="emit w-plane map data")
    p_map.add_argument("config")
    p_map.add_argument("--time", type=float, required=True)
    p_map.add_argument("--out", default=None, help="output directory")

    p_cmp = sub.add_parser("compare", help="compare two wavefunction CSVs")
    p_cmp.add_argument("file_a")
    p_cmp.add_argument("file_b")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            out = run_scenario(args.config, args.out, threads=args.threads)
            print("wrote %s" % out)
        elif args.command == "map":
            scenario = load_scenario(args.config)
            out = Path(args.out) if args.out else Path("%s_map" % scenario.name)
            emit_map_data(scenario, args.time, out)
            print("wrote %s" % out)
        else:
            entry = compare(args.file_a, args.file_b)
            print("l2_error=%s max_density_dev=%s phase_rms=%s"
                  % (fmt(entry.l2_error), fmt(entry.max_density_dev),
                     fmt(entry.phase_rms)))
    except CtwaveError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
