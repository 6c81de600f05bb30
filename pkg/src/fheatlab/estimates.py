"""Pointwise certification of differential inequalities and gradient estimates.

Every check here is a pure function of a computed :class:`~fheatlab.solver.Trajectory`.
Lemma checks evaluate ``LHS - RHS`` of the Bochner-type inequalities at every
node and snapshot; theorem checks measure the smallest constant that makes
the stated estimate hold on the computed data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, HypothesisError, SolverError
from .geometry import bakry_emery_lower_bound
from .solver import (EXPONENTIAL, LOGPOWER, FLaplacian, Grid, TimeWindow,
                     reaction, solve, solve_stationary, volume_weights)

LEMMA_KINDS = ("lemma21", "lemma31", "lemma41")
THEOREM_KINDS = ("thm11", "thm12", "thm13")


# ---------------------------------------------------------------------------
# certificate record
# ---------------------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    return x


@dataclass
class Certificate:
    kind: str
    params: dict = field(default_factory=dict)
    passed: bool | None = None
    residual_min: float | None = None
    argmin: dict | None = None
    c_star: float | None = None
    tol_grid: float | None = None
    grid: dict = field(default_factory=dict)
    refinement: dict | None = None
    details: dict = field(default_factory=dict)
    status: str = "ok"
    fields: dict | None = field(default=None, repr=False)   # optional residual dumps

    def to_dict(self):
        out = {"kind": self.kind, "status": self.status, "passed": self.passed,
               "params": self.params, "residual_min": self.residual_min,
               "argmin": self.argmin, "c_star": self.c_star, "tol_grid": self.tol_grid,
               "grid": self.grid, "refinement": self.refinement, "details": self.details}
        return _plain(out)


def _grid_meta(traj):
    return {"nodes": traj.grid.nodes, "dr": traj.grid.dr, "r_min": traj.grid.r_min,
            "r_max": traj.grid.r_max, "dt": traj.config.dt, "snapshots": int(len(traj.times))}


# ---------------------------------------------------------------------------
# derived fields
# ---------------------------------------------------------------------------

def radial_gradient(values, dr, edges="one_sided"):
    """Central differences along the last axis.

    ``edges="reflect"`` treats both ends as symmetry/Neumann nodes, where the
    reflected ghost makes the derivative exactly zero; ``"one_sided"`` uses
    second-order one-sided stencils instead.
    """
    v = np.asarray(values, dtype=float)
    g = np.empty_like(v)
    g[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * dr)
    if edges == "reflect":
        g[..., 0] = 0.0
        g[..., -1] = 0.0
    elif edges == "one_sided":
        # written in differences so constants give exactly zero
        g[..., 0] = (4 * (v[..., 1] - v[..., 0]) - (v[..., 2] - v[..., 0])) / (2 * dr)
        g[..., -1] = (4 * (v[..., -1] - v[..., -2]) - (v[..., -1] - v[..., -3])) / (2 * dr)
    else:
        raise ConfigurationError(f"unknown edge treatment {edges!r}")
    return g


def time_derivative(series, times):
    """d/dt along axis 0 on possibly non-uniform times (centred inside, one-sided at ends)."""
    series = np.asarray(series, dtype=float)
    if series.shape[0] < 2:
        return np.zeros_like(series)
    return np.gradient(series, np.asarray(times, dtype=float), axis=0,
                       edge_order=2 if series.shape[0] > 2 else 1)


@dataclass(eq=False)
class DerivedFields:
    times: np.ndarray
    u: np.ndarray
    ur: np.ndarray
    w_sqrt: np.ndarray
    grad_w_sqrt: np.ndarray
    wt_sqrt: np.ndarray
    lap_w_sqrt: np.ndarray
    h: np.ndarray | None = None
    hr: np.ndarray | None = None
    w_log: np.ndarray | None = None
    grad_w_log: np.ndarray | None = None
    wt_log: np.ndarray | None = None
    lap_w_log: np.ndarray | None = None
    metric: np.ndarray | None = None    # 1/s(t) per snapshot, shape (snapshots, 1)


def _with_initial(traj):
    """Snapshots preceded by the initial state, used only for time differencing."""
    times = np.concatenate([[traj.t_start], traj.times])
    values = np.vstack([traj.initial[None, :], traj.values])
    return times, values


def derive_fields(traj, family=None, edges="one_sided"):
    family = family or traj.eq.family
    times, U = _with_initial(traj)
    if np.any(U <= 0):
        idx = np.argwhere(U <= 0)[0]
        raise HypothesisError(f"u <= 0 at node {idx[1]}, t = {times[idx[0]]:.6g}")
    dr = traj.grid.dr
    op = FLaplacian(traj.space, traj.grid)
    if traj.scales is not None:
        s0 = traj.flow.s0 - 2 * traj.flow.einstein_constant * traj.t_start
        metric = (1.0 / np.concatenate([[s0], traj.scales]))[:, None]
    else:
        metric = np.ones((len(times), 1))

    ur = radial_gradient(U, dr, edges)
    w_sqrt = metric * ur ** 2 / (4 * U)
    out = dict(
        u=U, ur=ur, w_sqrt=w_sqrt,
        grad_w_sqrt=radial_gradient(w_sqrt, dr, edges),
        wt_sqrt=time_derivative(w_sqrt, times),
        lap_w_sqrt=metric * op.apply(w_sqrt),
    )
    if family == LOGPOWER:
        bad = np.argwhere(U > 1.0)
        if bad.size:
            k, i = bad[0]
            raise HypothesisError(
                f"w = |grad log(1 - log u)|^2 needs u <= 1; u = {U[k, i]:.6g} at node {i}, t = {times[k]:.6g}")
        h = np.log(U)
        hr = ur / U
        w_log = metric * hr ** 2 / (1 - h) ** 2
        out.update(h=h, hr=hr, w_log=w_log,
                   grad_w_log=radial_gradient(w_log, dr, edges),
                   wt_log=time_derivative(w_log, times),
                   lap_w_log=metric * op.apply(w_log))
    fields = {k: (v[1:] if isinstance(v, np.ndarray) else v) for k, v in out.items()}
    return DerivedFields(times=traj.times.copy(), metric=metric[1:], **fields)


# ---------------------------------------------------------------------------
# reaction constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReactionBounds:
    H0: float = 0.0
    H1: float = 0.0
    H2: float = 0.0
    H: float = 0.0
    umin: float = float("nan")
    umax: float = float("nan")

    def as_dict(self):
        return _plain(self.__dict__)


def h1_constant(eq, umin, umax):
    """H_1 with the u-dependent suprema taken over the range [umin, umax]."""
    H0 = max(eq.a + eq.b, 0.0)
    power = 0.0
    tail = 0.0
    for u in (umin, umax):
        power = max(power, eq.A * eq.p, eq.A * (eq.p - 1) / u, eq.A * eq.p / u, 0.0)
        tail = max(tail, (-eq.q - 1) * eq.B * u ** (-eq.q - 1), 0.0)
    return H0 + power + tail


def exponential_excess(eq, u):
    """A e^u (2u-1)/(2u) - B e^-u (2u+1)/(2u) - D/(2u), the quantity maximised in H_2."""
    u = np.asarray(u, dtype=float)
    return (eq.A * np.exp(u) * (2 * u - 1) - eq.B * np.exp(-u) * (2 * u + 1) - eq.D) / (2 * u)


def reaction_bounds(eq, traj, R=None):
    _, U = _with_initial(traj)
    umin, umax = float(U.min()), float(U.max())
    if eq.family == LOGPOWER:
        return ReactionBounds(H0=max(eq.a + eq.b, 0.0), H1=h1_constant(eq, umin, umax),
                              umin=umin, umax=umax)
    G = exponential_excess(eq, U)
    H = max(float(G.max()), 0.0)
    H2 = H
    if R is not None:
        inside = traj.grid.r <= R * (1 + 1e-12)
        H2 = max(float(G[:, inside].max()), 0.0)
    return ReactionBounds(H2=H2, H=H, umin=umin, umax=umax)


# ---------------------------------------------------------------------------
# lemmas
# ---------------------------------------------------------------------------

def default_tol_grid(traj, scale):
    return 10.0 * (traj.grid.dr + traj.config.dt) * scale


def lemma_terms(traj, derived, bounds, K_eff, lemma_id):
    """Return (lhs, rhs, term list) arrays of shape (snapshots, nodes)."""
    n = traj.space.n
    if lemma_id == "lemma21":
        if derived.w_log is None:
            raise HypothesisError("lemma21 needs the log-family fields")
        w, h = derived.w_log, derived.h
        lhs = derived.lap_w_log - derived.wt_log
        terms = [-2 * ((n - 1) * K_eff + bounds.H1) * w, 2 * (1 - h) * w ** 2,
                 2 * h / (1 - h) * derived.grad_w_log * derived.hr * derived.metric]
        extra = [derived.lap_w_log, derived.wt_log]
    elif lemma_id == "lemma31":
        if traj.scales is None:
            raise HypothesisError("lemma31 needs a trajectory computed on a Ricci flow")
        if derived.w_log is None:
            raise HypothesisError("lemma31 needs the log-family fields")
        w, h = derived.w_log, derived.h
        lhs = derived.lap_w_log - derived.wt_log
        terms = [-2 * bounds.H1 * w, 2 * (1 - h) * w ** 2,
                 2 * h / (1 - h) * derived.grad_w_log * derived.hr * derived.metric]
        extra = [derived.lap_w_log, derived.wt_log]
    elif lemma_id == "lemma41":
        w, u = derived.w_sqrt, derived.u
        grad_sqrt_u = derived.ur / (2 * np.sqrt(u))
        lhs = derived.lap_w_sqrt - derived.wt_sqrt
        terms = [-2 * (K_eff * (n - 1) + bounds.H) * w,
                 -2 / np.sqrt(u) * derived.grad_w_sqrt * grad_sqrt_u * derived.metric,
                 2 * w ** 2 / u]
        extra = [derived.lap_w_sqrt, derived.wt_sqrt]
    else:
        raise ConfigurationError(f"unknown lemma {lemma_id!r}")
    return lhs, sum(terms), terms + extra


def lemma_residual(traj, derived, bounds, K_eff, lemma_id, tol_grid=None, keep_fields=False):
    """Certificate for ``LHS - RHS >= 0`` on every node and snapshot."""
    if lemma_id == "lemma41" and traj.bounds is not None and not traj.bounds_held:
        raise HypothesisError("trajectory left the declared bounds 1 < u < C")
    lhs, rhs, parts = lemma_terms(traj, derived, bounds, K_eff, lemma_id)
    res = lhs - rhs
    k, i = np.unravel_index(int(np.argmin(res)), res.shape)
    scale = max(float(np.max(np.abs(p))) for p in parts)
    tol = default_tol_grid(traj, scale) if tol_grid is None else float(tol_grid)
    cert = Certificate(
        kind=lemma_id, params={"K_eff": K_eff, "bounds": bounds.as_dict()},
        passed=bool(res[k, i] >= -tol), residual_min=float(res[k, i]),
        argmin={"node": int(i), "r": float(traj.grid.r[i]), "snapshot": int(k),
                "t": float(derived.times[k])},
        tol_grid=tol, grid=_grid_meta(traj),
        details={"dominant_scale": scale, "residual_max": float(res.max()),
                 "violation": max(0.0, -float(res[k, i]))})
    if keep_fields:
        cert.fields = {"residual": res}
    return cert


def refinement_pair(coarse, fine, key="residual_min"):
    """Attach refinement evidence from the finer certificate to the coarse one."""
    a, b = getattr(coarse, key), getattr(fine, key)
    info = {"fine_nodes": fine.grid.get("nodes"), "fine_dt": fine.grid.get("dt"),
            "fine_" + key: b, "fine_passed": fine.passed}
    if key == "residual_min":
        info["ratio"] = abs(a) / abs(b) if b != 0 else float("inf")
    else:
        info["relative_drift"] = abs(a - b) / abs(b) if b != 0 else (0.0 if a == 0 else float("inf"))
    coarse.refinement = info
    return coarse


# ---------------------------------------------------------------------------
# gradient estimates
# ---------------------------------------------------------------------------

def _require_signs(eq, theorem_id):
    if eq.family != LOGPOWER:
        raise HypothesisError(f"{theorem_id} applies to the log/power family")
    if not (eq.A <= 0 and eq.B >= 0 and eq.p >= 1 and eq.q >= 0):
        raise HypothesisError(f"{theorem_id} needs A <= 0, B >= 0, p >= 1, q >= 0")


def gradient_certificate(traj, derived, bounds, summary, theorem_id, R, C=None):
    """Smallest c with |grad u| / u <= c * bracket (1 - log u) (or the sqrt-u form).

    ``summary`` is a CurvatureSummary; for thm13 its ``kappa`` is the flow bound.
    """
    eq = traj.eq
    if theorem_id in ("thm11", "thm13"):
        _require_signs(eq, theorem_id)
        if derived.w_log is None:
            raise HypothesisError(f"{theorem_id} needs u <= 1")
        if theorem_id == "thm13" and traj.scales is None:
            raise HypothesisError("thm13 needs a trajectory computed on a Ricci flow")
    elif theorem_id == "thm12":
        if eq.family != EXPONENTIAL:
            raise HypothesisError("thm12 applies to the exponential family")
        C = C if C is not None else (traj.bounds[1] if traj.bounds else None)
        if C is None:
            raise ConfigurationError("thm12 needs the upper bound C")
        if not (np.all(derived.u > 1) and np.all(derived.u < C)):
            raise HypothesisError(f"thm12 needs 1 < u < {C} on the trajectory")
    else:
        raise ConfigurationError(f"unknown theorem {theorem_id!r}")
    if R <= 0:
        raise ConfigurationError("R must be positive")
    r = traj.grid.r
    inside = r <= R / 2 * (1 + 1e-12)
    if not np.any(inside):
        raise ConfigurationError("R/2 lies below the first grid node")
    # thm13 is stated in flow time measured from 0; the others from t0 - T
    tau = derived.times - (0.0 if theorem_id == "thm13" else traj.t_start)
    later = tau > 0
    alpha = abs(summary.alpha)
    grad = np.abs(derived.ur) * np.sqrt(derived.metric)
    if theorem_id == "thm12":
        lhs = grad / np.sqrt(derived.u)
        bracket = math.sqrt(C) * ((1 + math.sqrt(alpha * R) + math.sqrt(C)) / R
                                  + 1 / np.sqrt(tau) + math.sqrt(summary.K_eff) + math.sqrt(bounds.H2))
        constants = {"C": C, "H2": bounds.H2}
    else:
        lhs = grad / derived.u / (1 - derived.h)
        curv = summary.kappa if theorem_id == "thm13" else summary.K_eff
        bracket = ((1 + math.sqrt(alpha * R)) / R + 1 / np.sqrt(tau)
                   + math.sqrt(curv) + math.sqrt(bounds.H0))
        constants = {"H0": bounds.H0, ("kappa" if theorem_id == "thm13" else "K"): curv}
    ratio = lhs[later][:, inside] / bracket[later][:, None]
    k, i = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    c_star = float(ratio[k, i])
    t_sel = derived.times[later]
    return Certificate(
        kind=theorem_id, params={"R": R, "alpha": summary.alpha, **constants},
        c_star=c_star, argmin={"node": int(i), "r": float(r[inside][i]), "t": float(t_sel[k])},
        grid=_grid_meta(traj),
        details={"evaluated_nodes": int(inside.sum()), "evaluated_snapshots": int(later.sum())})


# ---------------------------------------------------------------------------
# Harnack inequality
# ---------------------------------------------------------------------------

def _harnack_holds(log_u1, log_u2, beta):
    return log_u2 <= beta * log_u1 + 1.0 - beta + 1e-15 * np.abs(log_u2)


def required_harnack_constant(u1, u2, rho, tau, K, iterations=200):
    """Minimal c >= 0 with u2 <= u1^beta e^(1-beta), beta = exp(-c rho (tau^-1/2 + sqrt K)).

    Vectorised bisection; the right-hand side increases as c grows (u1 <= 1).
    """
    u1, u2, rho, tau = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, u2, rho, tau)))
    if np.any(u1 > 1) or np.any(u2 > 1):
        raise HypothesisError("the Harnack inequality is stated for u <= 1")
    l1, l2 = np.log(u1), np.log(u2)
    speed = rho * (1.0 / np.sqrt(tau) + math.sqrt(K))

    def holds(c):
        return _harnack_holds(l1, l2, np.exp(-c * speed))

    c_hi = np.ones_like(l1)
    done = holds(np.zeros_like(l1)) | (speed == 0)
    for _ in range(200):
        bad = ~holds(c_hi) & ~done
        if not bad.any():
            break
        c_hi = np.where(bad, 2 * c_hi, c_hi)
    c_lo = np.zeros_like(l1)
    for _ in range(iterations):
        mid = 0.5 * (c_lo + c_hi)
        ok = holds(mid)
        c_hi = np.where(ok, mid, c_hi)
        c_lo = np.where(ok, c_lo, mid)
        if np.all(c_hi - c_lo <= 1e-15 * np.maximum(c_hi, 1e-300)):
            break
    out = np.where(done, 0.0, c_hi)
    return float(out) if out.ndim == 0 else out


def harnack_certificate(traj, K_eff, pairs, times=None):
    eq = traj.eq
    if eq.family != LOGPOWER:
        raise HypothesisError("the Harnack inequality applies to the log/power family")
    if not (eq.a <= 0 and eq.b <= 0 and eq.A <= 0 and eq.B >= 0 and eq.p >= 1 and eq.q >= 0):
        raise HypothesisError("Harnack needs a <= 0, b <= 0, A <= 0, B >= 0, p >= 1, q >= 0")
    if np.any(traj.values > 1):
        raise HypothesisError("Harnack needs u <= 1 on the trajectory")
    sel = np.arange(len(traj.times))
    if times is not None:
        sel = np.array([int(np.argmin(np.abs(traj.times - t))) for t in times])
    r = traj.grid.r
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    ordered = np.vstack([pairs, pairs[:, ::-1]])
    U = traj.values[sel]
    tau = (traj.times[sel] - traj.t_start)[:, None]
    u1, u2 = U[:, ordered[:, 0]], U[:, ordered[:, 1]]
    rho = np.abs(r[ordered[:, 0]] - r[ordered[:, 1]])[None, :]
    c = required_harnack_constant(u1, u2, rho, tau, K_eff)
    c = np.atleast_2d(c)
    k, j = np.unravel_index(int(np.argmax(c)), c.shape)
    return Certificate(
        kind="harnack", params={"K_eff": K_eff, "pairs": pairs.tolist()},
        c_star=float(c[k, j]),
        argmin={"x1_node": int(ordered[j, 0]), "x2_node": int(ordered[j, 1]),
                "t": float(traj.times[sel][k])},
        grid=_grid_meta(traj), details={"checks": int(c.size)})


# ---------------------------------------------------------------------------
# Liouville
# ---------------------------------------------------------------------------

def _liouville_signs(eq):
    if eq.family == LOGPOWER:
        if not (eq.a == 0 and eq.b <= 0 and eq.A <= 0 and eq.B >= 0 and eq.p >= 1 and eq.q >= 0):
            raise HypothesisError("Liouville needs a = 0, b <= 0, A <= 0, B >= 0, p >= 1, q >= 0")
    elif not (eq.A <= 0 and eq.B >= 0 and eq.D >= 0):
        raise HypothesisError("Liouville for the exponential family needs A <= 0, B >= 0, D >= 0")


def nearest_root(eq, x):
    """A root of the reaction close to x (x itself when the reaction vanishes identically)."""
    if eq.is_zero():
        return float(x)
    f = lambda v: reaction(eq, v)[0]
    if f(x) == 0:
        return float(x)
    step = 1e-3 * max(1.0, abs(x))
    lo_floor = 1e-300 if eq.family == LOGPOWER else -np.inf
    for _ in range(80):
        a, b = max(x - step, lo_floor), x + step
        if f(a) * f(x) <= 0:
            return float(brentq(f, a, x, xtol=1e-15, rtol=1e-15))
        if f(b) * f(x) <= 0:
            return float(brentq(f, x, b, xtol=1e-15, rtol=1e-15))
        step *= 2
    raise SolverError(f"no root of the reaction near {x}")


def liouville_check(space, eq, config, nodes=129, guess=None, initial=None, horizon=40.0,
                    oscillation_tol=1e-6, root_tol=1e-6):
    """Stationary and long-time evidence that bounded positive solutions are constant."""
    if bakry_emery_lower_bound(space) > 0:
        raise HypothesisError("Liouville needs Ric_f >= 0 on the model")
    _liouville_signs(eq)
    grid = Grid(nodes, space.r_max)
    r = grid.r
    base = 0.5 if eq.family == LOGPOWER else 0.3
    bump = base + 0.2 * np.cos(np.pi * r / space.r_max)
    guess = bump if guess is None else np.asarray(guess, dtype=float)
    initial = bump if initial is None else np.asarray(initial, dtype=float)
    weights = volume_weights(space, grid)
    paths = {}

    try:
        u = solve_stationary(space, eq, guess, config, grid=grid)
        paths["stationary"] = _liouville_path(eq, u, weights, oscillation_tol, root_tol)
    except SolverError as exc:
        paths["stationary"] = {"status": "inconclusive", "reason": str(exc)}

    window = TimeWindow(t0=horizon, T=horizon, snapshots=(horizon,))
    traj = solve(space, eq, initial, window, config, grid=grid)
    end = traj.values[-1]
    paths["parabolic"] = _liouville_path(eq, end, weights, oscillation_tol, root_tol)
    if eq.is_zero():
        mean0 = float(np.dot(weights, initial) / weights.sum())
        paths["parabolic"]["initial_weighted_mean"] = mean0

    statuses = [p["status"] for p in paths.values()]
    passed = all(s == "pass" for s in statuses) if "inconclusive" not in statuses else None
    if "fail" in statuses:
        passed = False
    return Certificate(kind="liouville", params={"equation": eq.params(), "horizon": horizon},
                       passed=passed, grid={"nodes": nodes, "dt": config.dt},
                       status="inconclusive" if passed is None else "ok",
                       details=paths)


def _liouville_path(eq, u, weights, osc_tol, root_tol):
    osc = float(u.max() - u.min())
    mean = float(np.dot(weights, u) / weights.sum())
    root = nearest_root(eq, mean)
    ok = osc <= osc_tol and abs(mean - root) <= root_tol
    return {"status": "pass" if ok else "fail", "oscillation": osc, "constant": mean, "root": root}


# ---------------------------------------------------------------------------
# Li-Yau
# ---------------------------------------------------------------------------

def li_yau_diagnostic(traj, time_origin=None, r_eval=None, tol_grid=None):
    """max of |grad u|^2/u^2 - u_t/u - n/(2 t) over nodes and snapshots."""
    if not traj.eq.is_zero():
        raise HypothesisError("the Li-Yau diagnostic is for the pure heat equation")
    if bakry_emery_lower_bound(traj.space) > 0 or traj.space.weight.kind != "zero":
        raise HypothesisError("Li-Yau needs Ric >= 0 and no weight")
    origin = traj.t_start if time_origin is None else time_origin
    times, U = _with_initial(traj)
    if np.any(U <= 0):
        raise HypothesisError("Li-Yau needs a positive solution")
    # |grad u|^2/u^2 - u_t/u = |grad h|^2 - h_t with h = log u; differencing h
    # avoids the catastrophic relative error of u_t/u where u is tiny
    H = np.log(U)
    ht = time_derivative(H, times)[1:]
    hr = radial_gradient(H[1:], traj.grid.dr)
    t = (traj.times - origin)[:, None]
    val = hr ** 2 - ht - traj.space.n / (2 * t)
    cols = slice(None) if r_eval is None else traj.grid.r <= r_eval * (1 + 1e-12)
    val = val[:, cols]
    k, i = np.unravel_index(int(np.argmax(val)), val.shape)
    scale = float(np.max(traj.space.n / (2 * t)))
    tol = default_tol_grid(traj, scale) if tol_grid is None else float(tol_grid)
    return Certificate(kind="liyau", params={"time_origin": origin, "r_eval": r_eval},
                       passed=bool(val[k, i] <= tol), residual_min=float(val[k, i]),
                       argmin={"node": int(i), "r": float(traj.grid.r[i]), "t": float(traj.times[k])},
                       tol_grid=tol, grid=_grid_meta(traj),
                       details={"note": "residual_min holds the maximum of the Li-Yau excess"})
