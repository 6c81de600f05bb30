"""Scenario files (TOML).

Every table has a fixed key set; unknown keys are configuration errors so a
typo never silently falls back to a default.  See ``docs/scenario.md`` for the
schema.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .geometry import (Euclidean, GaussianWeight, Hyperbolic, ModelSpace, Spherical,
                       TabulatedWarp, TabulatedWeight, ZeroWeight, read_two_column_csv)
from .solver import (IMEX, IMPLICIT_EULER, Exponential, Grid, LogPower, SolverConfig,
                     TimeWindow)

TOP_KEYS = {"name", "space", "flow", "domain", "equation", "initial", "grid", "solver",
            "window", "certificates", "study"}
TABLE_KEYS = {
    "space": {"dimension", "warp", "curvature", "warp_csv", "weight", "lam", "weight_csv", "r_max"},
    "flow": {"s0", "horizon"},
    "domain": {"shape", "r_a", "r_b"},
    "equation": {"family", "a", "b", "A", "B", "p", "q", "D", "bounds"},
    "initial": {"profile", "c", "c0", "c1", "t_s", "scale", "path"},
    "grid": {"nodes"},
    "solver": {"dt", "scheme", "newton_tol", "newton_max_iters", "positivity_floor"},
    "window": {"t0", "T", "snapshots", "snapshot_every"},
    "study": {"dt_factor", "levels"},
}
CERT_KINDS = {"lemma21", "lemma31", "lemma41", "thm11", "thm12", "thm13", "harnack",
              "liouville", "liyau", "cutoff", "thm14", "thm15", "main5",
              "index_comparison", "boundary_cutoff", "distance_rate"}
CERT_KEYS = {"kind", "R", "C", "pairs", "times", "eps", "tau", "t_min", "r_eval", "time_origin",
             "r1", "refine", "tol_grid", "horizon", "nodes", "dump"}
PROFILES = {"constant", "bump", "gaussian", "csv"}


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigurationError(f"[{where}] must be a table")
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) in [{where}]: {', '.join(extra)}")


def _need(table, key, where):
    if key not in table:
        raise ConfigurationError(f"missing key '{key}' in [{where}]")
    return table[key]


@dataclass(eq=False)
class Scenario:
    name: str
    raw: dict
    space: ModelSpace
    eq: object
    grid: Grid
    solver: SolverConfig
    window: TimeWindow
    initial_spec: dict
    bounds: tuple | None = None
    flow: dict | None = None
    domain: dict | None = None
    certificates: list = field(default_factory=list)
    study: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def config_hash(self):
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def initial(self, grid=None):
        return initial_profile(self.initial_spec, grid or self.grid, self.space, self.base_dir)

    def refined(self, level, dt_factor=None):
        """Copy at ``level`` dyadic refinements (dt divided by dt_factor per level)."""
        dt_factor = dt_factor or self.study.get("dt_factor", 4)
        out = copy.copy(self)
        grid = self.grid
        for _ in range(level):
            grid = grid.refined()
        out.grid = grid
        out.solver = SolverConfig(dt=self.solver.dt / dt_factor ** level, scheme=self.solver.scheme,
                                  newton_tol=self.solver.newton_tol,
                                  newton_max_iters=self.solver.newton_max_iters,
                                  positivity_floor=self.solver.positivity_floor)
        if self.window.snapshots is None:
            out.window = TimeWindow(self.window.t0, self.window.T,
                                    snapshot_every=self.window.snapshot_every * dt_factor ** level)
        return out


def _resolve(path, base_dir):
    path = Path(path)
    return path if path.is_absolute() else Path(base_dir) / path


def parse_space(t, base_dir=Path(".")):
    _check_keys(t, TABLE_KEYS["space"], "space")
    dim = _need(t, "dimension", "space")
    r_max = float(_need(t, "r_max", "space"))
    kind = t.get("warp", "euclidean")
    if kind == "euclidean":
        warp = Euclidean()
    elif kind == "hyperbolic":
        warp = Hyperbolic(float(_need(t, "curvature", "space")))
    elif kind == "spherical":
        warp = Spherical(float(_need(t, "curvature", "space")))
    elif kind == "tabulated":
        warp = TabulatedWarp(*read_two_column_csv(_resolve(_need(t, "warp_csv", "space"), base_dir)))
    else:
        raise ConfigurationError(f"unknown warp {kind!r} in [space]")
    wkind = t.get("weight", "zero")
    if wkind == "zero":
        weight = ZeroWeight()
    elif wkind == "gaussian":
        weight = GaussianWeight(float(_need(t, "lam", "space")))
    elif wkind == "tabulated":
        weight = TabulatedWeight(*read_two_column_csv(_resolve(_need(t, "weight_csv", "space"), base_dir)))
    else:
        raise ConfigurationError(f"unknown weight {wkind!r} in [space]")
    return ModelSpace(int(dim), warp, weight, r_max)


def parse_equation(t):
    _check_keys(t, TABLE_KEYS["equation"], "equation")
    family = t.get("family", "logpower")
    bounds = t.get("bounds")
    if bounds is not None:
        if len(bounds) != 2:
            raise ConfigurationError("[equation] bounds must be [low, high]")
        bounds = (float(bounds[0]), float(bounds[1]))
    if family == "logpower":
        if "D" in t:
            raise ConfigurationError("key 'D' belongs to the exponential family")
        eq = LogPower(**{k: float(t[k]) for k in ("a", "b", "A", "B", "p", "q") if k in t})
    elif family == "exponential":
        bad = sorted({"a", "b", "p", "q"} & set(t))
        if bad:
            raise ConfigurationError(f"key(s) {', '.join(bad)} belong to the log/power family")
        eq = Exponential(**{k: float(t[k]) for k in ("A", "B", "D") if k in t})
    else:
        raise ConfigurationError(f"unknown equation family {family!r}")
    return eq, bounds


def parse_solver(t):
    _check_keys(t, TABLE_KEYS["solver"], "solver")
    scheme = t.get("scheme", IMPLICIT_EULER)
    if scheme not in (IMPLICIT_EULER, IMEX):
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    return SolverConfig(dt=float(_need(t, "dt", "solver")), scheme=scheme,
                        newton_tol=float(t.get("newton_tol", 1e-12)),
                        newton_max_iters=int(t.get("newton_max_iters", 50)),
                        positivity_floor=float(t.get("positivity_floor", 1e-12)))


def parse_window(t):
    _check_keys(t, TABLE_KEYS["window"], "window")
    snaps = t.get("snapshots")
    if snaps is not None and "snapshot_every" in t:
        raise ConfigurationError("[window] takes either snapshots or snapshot_every")
    return TimeWindow(t0=float(_need(t, "t0", "window")), T=float(_need(t, "T", "window")),
                      snapshots=None if snaps is None else tuple(float(s) for s in snaps),
                      snapshot_every=int(t.get("snapshot_every", 1)))


def _check_initial(t):
    _check_keys(t, TABLE_KEYS["initial"], "initial")
    profile = _need(t, "profile", "initial")
    if profile not in PROFILES:
        raise ConfigurationError(f"unknown initial profile {profile!r}")
    required = {"constant": ("c",), "bump": ("c0", "c1"), "gaussian": ("t_s",), "csv": ("path",)}
    for key in required[profile]:
        _need(t, key, "initial")
    return dict(t)


def initial_profile(spec, grid, space, base_dir=Path(".")):
    r = grid.r
    scale = float(spec.get("scale", 1.0))
    profile = spec["profile"]
    if profile == "constant":
        u = np.full_like(r, float(spec["c"]))
    elif profile == "bump":
        u = float(spec["c0"]) + float(spec["c1"]) * np.cos(np.pi * (r - grid.r_min) / (grid.r_max - grid.r_min))
    elif profile == "gaussian":
        ts = float(spec["t_s"])
        u = (4 * np.pi * ts) ** (-space.n / 2) * np.exp(-r * r / (4 * ts))
    else:
        rs, vals = read_two_column_csv(_resolve(spec["path"], base_dir))
        u = np.interp(r, rs, vals)
    return scale * u


def _check_certificate(c, i):
    where = f"certificates[{i}]"
    _check_keys(c, CERT_KEYS, where)
    kind = _need(c, "kind", where)
    if kind not in CERT_KINDS:
        raise ConfigurationError(f"unknown certificate kind {kind!r} in [{where}]")
    needs = {"thm11": ("R",), "thm12": ("R",), "thm13": ("R",), "harnack": ("pairs",),
             "cutoff": ("R", "tau", "eps"), "index_comparison": ("R",), "boundary_cutoff": ("R",),
             "distance_rate": ("r1", "R")}
    for key in needs.get(kind, ()):
        _need(c, key, where)
    return dict(c)


def scenario_from_dict(data, base_dir=Path("."), name=None):
    _check_keys(data, TOP_KEYS, "top level")
    space = parse_space(_need(data, "space", "top level"), base_dir)
    eq, bounds = parse_equation(_need(data, "equation", "top level"))
    solver = parse_solver(_need(data, "solver", "top level"))
    window = parse_window(_need(data, "window", "top level"))
    initial = _check_initial(_need(data, "initial", "top level"))
    grid_t = _need(data, "grid", "top level")
    _check_keys(grid_t, TABLE_KEYS["grid"], "grid")
    nodes = int(_need(grid_t, "nodes", "grid"))
    flow = data.get("flow")
    if flow is not None:
        _check_keys(flow, TABLE_KEYS["flow"], "flow")
    domain = data.get("domain")
    r_min, r_max = 0.0, space.r_max
    if domain is not None:
        _check_keys(domain, TABLE_KEYS["domain"], "domain")
        shape = _need(domain, "shape", "domain")
        r_max = float(domain.get("r_b", space.r_max))
        if shape == "annulus":
            r_min = float(_need(domain, "r_a", "domain"))
    if flow is not None and domain is not None:
        raise ConfigurationError("a scenario takes either [flow] or [domain], not both")
    study = data.get("study", {})
    _check_keys(study, TABLE_KEYS["study"], "study")
    certs = [_check_certificate(c, i) for i, c in enumerate(data.get("certificates", []))]
    return Scenario(name=name or data.get("name", "scenario"), raw=data, space=space, eq=eq,
                    grid=Grid(nodes, r_max, r_min), solver=solver, window=window,
                    initial_spec=initial, bounds=bounds, flow=flow, domain=domain,
                    certificates=certs, study=dict(study), base_dir=Path(base_dir))


def load_scenario(path):
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return scenario_from_dict(data, base_dir=path.parent, name=data.get("name", path.stem))
