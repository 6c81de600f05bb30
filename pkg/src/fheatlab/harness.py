"""Scenario orchestration: solve, certify, persist, refine."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (boundary_certificate, boundary_cutoff, build_domain,
                       index_comparison_check)
from .config import Scenario, load_scenario
from .cutoff import cutoff_profile
from .errors import ConfigurationError, FHeatError, HypothesisError
from .estimates import (Certificate, derive_fields, gradient_certificate, harnack_certificate,
                        lemma_residual, li_yau_diagnostic, liouville_check, reaction_bounds,
                        refinement_pair)
from .geometry import CurvatureSummary, bakry_emery_lower_bound, comparison_quantities
from .io import write_field_csv, write_json, write_table_csv, write_trajectory_csv
from .ricci_flow import FlowSpec, distance_rate_diagnostic, flow_kappa, solve_on_flow
from .solver import EXPONENTIAL, LOGPOWER, solve

REPORT_SCHEMA = 1
LEMMAS = {"lemma21", "lemma31", "lemma41"}
GRADIENT = {"thm11", "thm12", "thm13"}
BOUNDARY = {"thm14", "thm15", "main5"}
NEEDS_DOMAIN = BOUNDARY | {"index_comparison", "boundary_cutoff"}
NEEDS_FLOW = {"lemma31", "thm13", "distance_rate"}
NO_TRAJECTORY = {"cutoff", "index_comparison", "boundary_cutoff", "distance_rate", "liouville"}

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 2, 3


# ---------------------------------------------------------------------------
# static checks
# ---------------------------------------------------------------------------

def precheck(sc: Scenario):
    """Reject certificate requests whose hypotheses fail before any compute."""
    fam = sc.eq.family
    for i, c in enumerate(sc.certificates):
        kind = c["kind"]
        where = f"certificates[{i}] ({kind})"
        if kind in NEEDS_DOMAIN and sc.domain is None:
            raise ConfigurationError(f"{where} needs a [domain] table")
        if kind in NEEDS_FLOW and sc.flow is None:
            raise ConfigurationError(f"{where} needs a [flow] table")
        if kind in ("lemma21", "lemma31", "thm11", "thm13", "harnack", "thm14", "main5") and fam != LOGPOWER:
            raise HypothesisError(f"{where} applies to the log/power family")
        if kind in ("lemma41", "thm12", "thm15") and fam != EXPONENTIAL:
            raise HypothesisError(f"{where} applies to the exponential family")
        if kind in ("thm12", "thm15") and sc.bounds is None and "C" not in c:
            raise ConfigurationError(f"{where} needs [equation] bounds or C")
        if kind == "liyau" and (not sc.eq.is_zero() or sc.space.weight.kind != "zero"):
            raise HypothesisError(f"{where} needs the unweighted heat equation")
        if kind == "lemma21" and sc.flow is not None:
            raise ConfigurationError(f"{where}: use lemma31 on a flow")


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def flow_spec(sc):
    if sc.flow is None:
        return None
    return FlowSpec(sc.space, s0=float(sc.flow.get("s0", 1.0)), horizon=float(sc.flow["horizon"]))


def domain_of(sc):
    if sc.domain is None:
        return None
    d = sc.domain
    return build_domain(sc.space, d["shape"], float(d.get("r_b", sc.space.r_max)),
                        float(d.get("r_a", 0.0)))


def run_solver(sc: Scenario):
    initial = sc.initial()
    flow = flow_spec(sc)
    if flow is not None:
        return solve_on_flow(flow, sc.eq, initial, sc.window, sc.solver, grid=sc.grid, bounds=sc.bounds)
    bc = "neumann" if sc.grid.has_pole else "neumann_annulus"
    return solve(sc.space, sc.eq, initial, sc.window, sc.solver, grid=sc.grid, bc=bc, bounds=sc.bounds)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def _nearest_node(grid, r):
    return int(np.argmin(np.abs(grid.r - r)))


def _summary(sc, kind):
    if kind == "thm13":
        K = bakry_emery_lower_bound(sc.space)
        base = comparison_quantities(sc.space)
        return CurvatureSummary(K_eff=K, alpha=base.alpha, kappa=flow_kappa(flow_spec(sc)))
    return comparison_quantities(sc.space)


def compute_certificate(spec, sc, traj, keep_fields=False):
    kind = spec["kind"]
    if kind in LEMMAS:
        derived = derive_fields(traj)
        bounds = reaction_bounds(sc.eq, traj)
        K = 0.0 if kind == "lemma31" else bakry_emery_lower_bound(sc.space)
        return lemma_residual(traj, derived, bounds, K, kind, tol_grid=spec.get("tol_grid"),
                              keep_fields=keep_fields)
    if kind in GRADIENT:
        derived = derive_fields(traj)
        R = float(spec["R"])
        bounds = reaction_bounds(sc.eq, traj, R=R)
        return gradient_certificate(traj, derived, bounds, _summary(sc, kind), kind, R,
                                    C=spec.get("C"))
    if kind == "harnack":
        pairs = [(_nearest_node(traj.grid, a), _nearest_node(traj.grid, b)) for a, b in spec["pairs"]]
        cert = harnack_certificate(traj, bakry_emery_lower_bound(sc.space), pairs, spec.get("times"))
        cert.params["pairs_r"] = [list(map(float, p)) for p in spec["pairs"]]
        return cert
    if kind == "liouville":
        nodes = int(spec.get("nodes", sc.grid.nodes))
        return liouville_check(sc.space, sc.eq, sc.solver, nodes=nodes,
                               horizon=float(spec.get("horizon", 40.0)))
    if kind == "liyau":
        return li_yau_diagnostic(traj, time_origin=spec.get("time_origin"), r_eval=spec.get("r_eval"),
                                 tol_grid=spec.get("tol_grid"))
    if kind == "cutoff":
        prof = cutoff_profile(float(spec["R"]), (sc.window.start, sc.window.t0), float(spec["tau"]),
                              float(spec["eps"]))
        return Certificate(kind="cutoff", params={"R": prof.R, "tau": prof.tau, "eps": prof.eps},
                           passed=all(prof.checks.values()) and math.isfinite(prof.C_eps),
                           c_star=prof.C, details=prof.summary())
    if kind in BOUNDARY:
        return boundary_certificate(domain_of(sc), sc.eq, traj, kind, R=spec.get("R"),
                                    C=spec.get("C"), t_min=spec.get("t_min"),
                                    tol_grid=spec.get("tol_grid"))
    if kind == "index_comparison":
        return index_comparison_check(domain_of(sc), float(spec["R"]))
    if kind == "boundary_cutoff":
        prof = boundary_cutoff(domain_of(sc), float(spec["R"]))
        return Certificate(kind="boundary_cutoff", params={"R": prof.R, "H": prof.H},
                           passed=all(prof.checks.values()), details=prof.summary())
    if kind == "distance_rate":
        d = distance_rate_diagnostic(flow_spec(sc), float(spec["r1"]), float(spec["R"]))
        return Certificate(kind="distance_rate", params={"r1": spec["r1"], "R": spec["R"]},
                           passed=d.ok, details={"rate": d.rate, "bound": d.bound})
    raise ConfigurationError(f"unknown certificate kind {kind!r}")


def _attach_refinement(cert, fine):
    if cert.kind in LEMMAS:
        return refinement_pair(cert, fine, "residual_min")
    if cert.c_star is not None and fine.c_star is not None:
        return refinement_pair(cert, fine, "c_star")
    cert.refinement = {"fine_passed": fine.passed, "fine_grid": fine.grid}
    return cert


def _error_record(spec, exc):
    status = "hypothesis_error" if isinstance(exc, HypothesisError) else (
        "configuration_error" if isinstance(exc, ConfigurationError) else "solver_error")
    return {"kind": spec["kind"], "status": status, "passed": None,
            "error": f"{type(exc).__name__}: {exc}", "request": spec}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    scenario: dict
    name: str
    config_hash: str
    solver: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)
    files: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__

    def deterministic(self):
        """Everything except wall-clock time and file paths."""
        return {"schema": REPORT_SCHEMA, "name": self.name, "version": self.version,
                "config_hash": self.config_hash, "scenario": self.scenario,
                "solver": self.solver, "certificates": self.certificates}

    def to_dict(self):
        out = self.deterministic()
        out.update(files=self.files, wall_clock=self.wall_clock)
        return out

    def exit_code(self):
        return exit_code(self.certificates)


def exit_code(certificates):
    if any(c.get("status", "ok") != "ok" and c.get("status") != "inconclusive" for c in certificates):
        return EXIT_ERROR
    if any(c.get("passed") is False for c in certificates):
        return EXIT_FAIL
    return EXIT_OK


def run_scenario(sc, out_dir=None, figures=True, kinds=None, refine=None):
    """Solve one scenario and compute its certificates.

    ``kinds`` filters the requested certificates; ``refine`` forces (True) or
    suppresses (False) the one-level-up refinement pass that otherwise follows
    each certificate's ``refine`` key.
    """
    if isinstance(sc, (str, Path)):
        sc = load_scenario(sc)
    specs = [c for c in sc.certificates if kinds is None or c["kind"] in kinds]
    precheck(sc)
    start = time.perf_counter()
    needs_solve = not specs or any(c["kind"] not in NO_TRAJECTORY for c in specs)
    traj = run_solver(sc) if needs_solve else None
    fine_traj = None
    records = []
    dumps = {}
    for spec in specs:
        try:
            cert = compute_certificate(spec, sc, traj, keep_fields=bool(spec.get("dump")))
            want_refine = spec.get("refine", False) if refine is None else refine
            if want_refine and spec["kind"] not in NO_TRAJECTORY:
                if fine_traj is None:
                    fine_traj = run_solver(sc.refined(1))
                fine = compute_certificate(spec, sc.refined(1), fine_traj)
                _attach_refinement(cert, fine)
            if cert.fields is not None:
                dumps[spec["kind"]] = cert.fields
            records.append(cert.to_dict())
        except FHeatError as exc:
            records.append(_error_record(spec, exc))
    solver_info = {}
    if traj is not None:
        solver_info = dict(traj.stats, bounds_held=traj.bounds_held, bc=traj.bc,
                           nodes=traj.grid.nodes, dt=traj.config.dt)
    report = RunReport(scenario=_jsonable(sc.raw), name=sc.name, config_hash=sc.config_hash(),
                       solver=solver_info, certificates=records,
                       wall_clock=time.perf_counter() - start)
    if out_dir is not None:
        write_outputs(report, sc, traj, dumps, Path(out_dir), figures)
    return report


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def write_outputs(report, sc, traj, dumps, out, figures=True):
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if traj is not None:
        files.append(write_trajectory_csv(out / "trajectory.csv", traj))
    for kind, fields in dumps.items():
        files.append(write_field_csv(out / f"{kind}_residual.csv", traj.grid.r, traj.times,
                                     fields["residual"]))
    if figures:
        from . import plotting
        if traj is not None:
            files.append(plotting.plot_trajectory(traj, out / "trajectory.png"))
        for kind, fields in dumps.items():
            files.append(plotting.plot_field(traj.grid.r, traj.times, fields["residual"],
                                             out / f"{kind}_residual.png", title=f"{kind} residual"))
        for spec in sc.certificates:
            if spec["kind"] == "cutoff":
                prof = cutoff_profile(float(spec["R"]), (sc.window.start, sc.window.t0),
                                      float(spec["tau"]), float(spec["eps"]))
                files.append(plotting.plot_cutoff(prof, out / f"cutoff_eps{spec['eps']}.png"))
    report.files = sorted(str(p.name) for p in files)
    write_json(out / "certificates.json", report.deterministic())
    write_json(out / "report.json", report.to_dict())
    return files


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

def closed_form(sc):
    """Exact solution for the Gaussian heat-kernel scenario, else None."""
    if not (sc.eq.is_zero() and sc.initial_spec["profile"] == "gaussian" and sc.flow is None
            and sc.space.warp.kind == "euclidean" and sc.space.weight.kind == "zero"):
        return None
    ts = float(sc.initial_spec["t_s"])
    scale = float(sc.initial_spec.get("scale", 1.0))
    n = sc.space.n
    start = sc.window.start

    def exact(r, t):
        s = ts + (t - start)
        return scale * (4 * np.pi * s) ** (-n / 2) * np.exp(-r * r / (4 * s))
    return exact


def _order(e_coarse, e_fine):
    if e_coarse <= 1e-13 and e_fine <= 1e-13:
        return "exact"
    if e_fine <= 0:
        return float("inf")
    return math.log2(e_coarse / e_fine)


def convergence_study(sc, levels=3, out_dir=None, figures=True):
    """Rerun at dyadic refinements and report observed orders.

    With a closed form the error of each level is measured against it;
    otherwise level l is compared with level l+1 on the shared coarse nodes
    (one extra solve).
    """
    if isinstance(sc, (str, Path)):
        sc = load_scenario(sc)
    if levels < 3:
        raise ConfigurationError("a convergence study needs at least 3 levels")
    precheck(sc)
    exact = closed_form(sc)
    runs = levels if exact is not None else levels + 1
    trajs, rows = [], []
    lemma_specs = [c for c in sc.certificates if c["kind"] in LEMMAS]
    for lv in range(runs):
        s = sc.refined(lv)
        tr = run_solver(s)
        trajs.append(tr)
        row = {"level": lv, "nodes": s.grid.nodes, "dr": s.grid.dr, "dt": s.solver.dt}
        for spec in lemma_specs:
            try:
                row[f"{spec['kind']}_min"] = compute_certificate(spec, s, tr).residual_min
            except FHeatError as exc:
                row[f"{spec['kind']}_min"] = f"error: {exc}"
        rows.append(row)
    errors = []
    for lv in range(levels):
        tr = trajs[lv]
        if exact is not None:
            ref = exact(tr.grid.r[None, :], tr.times[:, None])
            errors.append(float(np.max(np.abs(tr.values - ref))))
        else:
            fine = trajs[lv + 1].values[:, ::2]
            errors.append(float(np.max(np.abs(tr.values - fine))))
    rows = rows[:levels]
    for lv, row in enumerate(rows):
        row["error"] = errors[lv]
        row["order"] = None if lv == 0 else _order(errors[lv - 1], errors[lv])
        for spec in lemma_specs:
            key = f"{spec['kind']}_min"
            if lv > 0 and isinstance(row[key], float) and isinstance(rows[lv - 1][key], float):
                row[f"{spec['kind']}_ratio"] = (abs(rows[lv - 1][key]) / abs(row[key])
                                                if row[key] != 0 else float("inf"))
    result = {"name": sc.name, "reference": "closed_form" if exact else "self_convergence",
              "levels": rows, "config_hash": sc.config_hash()}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = ["level", "nodes", "dr", "dt", "error", "order"]
        write_table_csv(out / "convergence.csv", header,
                        [[r[h] if r[h] is not None else "" for h in header] for r in rows])
        write_json(out / "convergence.json", _finite(result))
        if figures:
            from .plotting import plot_convergence
            plot_convergence(rows, errors, out / "convergence.png")
    return result


def _finite(x):
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_finite(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


# ---------------------------------------------------------------------------
# batch
# ---------------------------------------------------------------------------

def scenario_paths(items):
    paths = []
    for item in items:
        p = Path(item)
        paths.extend(sorted(p.glob("*.toml")) if p.is_dir() else [p])
    return paths


def run_batch(items, out_dir, figures=False):
    """Run every scenario; one sub-directory per scenario plus a summary."""
    out = Path(out_dir)
    summary = {}
    for path in scenario_paths(items):
        try:
            sc = load_scenario(path)
            rep = run_scenario(sc, out_dir=out / sc.name, figures=figures)
            summary[sc.name] = {"exit": rep.exit_code(), "config_hash": rep.config_hash,
                                "certificates": [{"kind": c["kind"], "passed": c.get("passed"),
                                                  "status": c.get("status")}
                                                 for c in rep.certificates]}
        except FHeatError as exc:
            summary[path.stem] = {"exit": EXIT_ERROR, "error": f"{type(exc).__name__}: {exc}"}
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "batch.json", summary)
    return summary
