"""Finite-difference solvers for the radial f-heat equations.

Two reaction families are supported::

    u_t = Delta_f u + a u log u + b u + A u^p + B u^-q      (log/power)
    u_t = Delta_f u + A e^u + B e^-u + D                    (exponential)

The radial f-Laplacian ``u_rr + [(n-1) phi'/phi - f'] u_r`` is discretised with
second-order central differences on a uniform grid; the pole uses the even
reflection ``u_{-1} = u_1`` and Neumann ends reflect about the boundary node.
The resulting operator is tridiagonal and every implicit solve goes through a
banded LU.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.sparse import bmat, csc_matrix, diags
from scipy.sparse.linalg import spsolve

from .errors import (ConfigurationError, DivergenceError, HypothesisError,
                     PositivityError, SolverError)
from .geometry import drift_coefficient, warp_eval, weight_eval

LOGPOWER = "logpower"
EXPONENTIAL = "exponential"
IMPLICIT_EULER = "implicit_euler"
IMEX = "imex"


# ---------------------------------------------------------------------------
# equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogPower:
    a: float = 0.0
    b: float = 0.0
    A: float = 0.0
    B: float = 0.0
    p: float = 1.0
    q: float = 0.0
    family = LOGPOWER

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ConfigurationError(f"exponents must be non-negative, got p={self.p}, q={self.q}")

    def is_zero(self):
        return self.a == 0 and self.b == 0 and self.A == 0 and self.B == 0

    def params(self):
        return {"family": self.family, "a": self.a, "b": self.b, "A": self.A,
                "B": self.B, "p": self.p, "q": self.q}


@dataclass(frozen=True)
class Exponential:
    A: float = 0.0
    B: float = 0.0
    D: float = 0.0
    family = EXPONENTIAL

    def is_zero(self):
        return self.A == 0 and self.B == 0 and self.D == 0

    def params(self):
        return {"family": self.family, "A": self.A, "B": self.B, "D": self.D}


def doubled_exponential(A, B, D):
    """Equation for w = 2u when u_t = Delta_f u + A e^{2u} + B e^{-2u} + D."""
    return Exponential(A=2.0 * A, B=2.0 * B, D=2.0 * D)


def reaction(eq, u):
    """Reaction term and its derivative in u; works on scalars and arrays."""
    u = np.asarray(u, dtype=float)
    if eq.is_zero():
        z = np.zeros_like(u)
        return (0.0, 0.0) if z.ndim == 0 else (z, z.copy())
    if eq.family == LOGPOWER:
        if np.any(u <= 0):
            raise PositivityError("log/power reaction needs u > 0")
        logu = np.log(u)
        value = eq.a * u * logu + eq.b * u
        deriv = eq.a * (logu + 1.0) + eq.b
        if eq.A != 0:
            value = value + eq.A * u ** eq.p
            deriv = deriv + eq.A * eq.p * u ** (eq.p - 1.0)
        if eq.B != 0:
            value = value + eq.B * u ** (-eq.q)
            deriv = deriv - eq.B * eq.q * u ** (-eq.q - 1.0)
    else:
        ep, em = np.exp(u), np.exp(-u)
        value = eq.A * ep + eq.B * em + eq.D
        deriv = eq.A * ep - eq.B * em
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def rescale_equation(eq, C):
    """Coefficients solved by the normalised unknown.

    log/power: ``v = u / C``; exponential: ``v = 2u + 2C + 1`` (which also turns
    ``e^{2u}`` into ``e^{v}``).
    """
    if not C > 0 and not (eq.family == EXPONENTIAL and C == 0):
        raise ConfigurationError(f"rescaling constant must be positive, got {C}")
    if eq.family == LOGPOWER:
        return replace(eq, b=eq.b + eq.a * math.log(C),
                       A=eq.A * C ** (eq.p - 1.0), B=eq.B * C ** (-eq.q - 1.0))
    return Exponential(A=2 * eq.A * math.exp(-2 * C - 1), B=2 * eq.B * math.exp(2 * C + 1), D=2 * eq.D)


# ---------------------------------------------------------------------------
# grid, window, configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    nodes: int
    r_max: float
    r_min: float = 0.0

    def __post_init__(self):
        if self.nodes < 33:
            raise ConfigurationError(f"grid needs at least 33 nodes, got {self.nodes}")
        if not (0 <= self.r_min < self.r_max):
            raise ConfigurationError(f"grid interval [{self.r_min}, {self.r_max}] is empty")

    @property
    def dr(self):
        return (self.r_max - self.r_min) / (self.nodes - 1)

    @property
    def r(self):
        return self.r_min + self.dr * np.arange(self.nodes)

    @property
    def has_pole(self):
        return self.r_min == 0.0

    def refined(self):
        return replace(self, nodes=2 * self.nodes - 1)


@dataclass(frozen=True)
class TimeWindow:
    """The window [t0 - T, t0]; snapshots are taken strictly after t0 - T."""

    t0: float
    T: float
    snapshots: tuple | None = None
    snapshot_every: int = 1

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"window length must be positive, got {self.T}")
        if self.snapshots is not None:
            snaps = tuple(float(s) for s in self.snapshots)
            if any(not (self.start < s <= self.t0 + 1e-12 * self.T) for s in snaps):
                raise ConfigurationError("snapshot times must lie in (t0 - T, t0]")
            object.__setattr__(self, "snapshots", tuple(sorted(snaps)))
        if self.snapshot_every < 1:
            raise ConfigurationError("snapshot_every must be >= 1")

    @property
    def start(self):
        return self.t0 - self.T


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    scheme: str = IMPLICIT_EULER
    newton_tol: float = 1e-12
    newton_max_iters: int = 50
    positivity_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"time step must be positive, got {self.dt}")
        if self.scheme not in (IMPLICIT_EULER, IMEX):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if not (self.newton_tol > 0 and self.positivity_floor > 0 and self.newton_max_iters > 0):
            raise ConfigurationError("solver tolerances must be positive")


# ---------------------------------------------------------------------------
# discrete operator
# ---------------------------------------------------------------------------

class FLaplacian:
    """Tridiagonal radial f-Laplacian on a grid, stored as three bands."""

    def __init__(self, space, grid):
        if grid.r_max > space.r_max * (1 + 1e-12):
            raise ConfigurationError("grid extends beyond the model's r_max")
        n, dr = grid.nodes, grid.dr
        inv2 = 1.0 / (dr * dr)
        lower = np.zeros(n)   # coefficient of u_{i-1} in row i
        diag = np.full(n, -2.0 * inv2)
        upper = np.zeros(n)   # coefficient of u_{i+1} in row i
        r = grid.r
        d = drift_coefficient(space, r[1:-1])
        lower[1:-1] = inv2 - 0.5 * d / dr
        upper[1:-1] = inv2 + 0.5 * d / dr
        if grid.has_pole:
            diag[0] = -2.0 * space.n * inv2
            upper[0] = 2.0 * space.n * inv2
        else:
            upper[0] = 2.0 * inv2
        lower[-1] = 2.0 * inv2
        self.space, self.grid = space, grid
        self.lower, self.diag, self.upper = lower, diag, upper

    def apply(self, u, scale=1.0):
        # difference form, so constants map to exactly zero (diag = -(lower + upper))
        u = np.asarray(u, dtype=float)
        jump = np.diff(u, axis=-1)
        out = np.zeros_like(u)
        out[..., 1:] -= self.lower[1:] * jump
        out[..., :-1] += self.upper[:-1] * jump
        if scale != 1.0:
            out *= scale
        return out

    def row_norm(self):
        return float(np.max(np.abs(self.lower) + np.abs(self.diag) + np.abs(self.upper)))

    def banded(self, shift, factor, extra_diag=None):
        """Banded storage of ``shift*I + factor*L + diag(extra_diag)`` for solve_banded."""
        ab = np.zeros((3, self.grid.nodes))
        ab[0, 1:] = factor * self.upper[:-1]
        ab[1] = shift + factor * self.diag
        ab[2, :-1] = factor * self.lower[1:]
        if extra_diag is not None:
            ab[1] += extra_diag
        return ab

    def sparse(self, extra_diag=None):
        main = self.diag if extra_diag is None else self.diag + extra_diag
        return diags([self.lower[1:], main, self.upper[:-1]], [-1, 0, 1], format="csc")


def discrete_f_laplacian(space, grid, field):
    return FLaplacian(space, grid).apply(field)


def volume_weights(space, grid):
    """Trapezoid weights of the measure phi^{n-1} e^{-f} dr on the grid."""
    r = grid.r
    phi, _, _ = warp_eval(space, r)
    f, _, _ = weight_eval(space, r)
    w = phi ** (space.n - 1) * np.exp(-f) * grid.dr
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def weighted_mass(space, grid, u):
    return float(np.dot(volume_weights(space, grid), u))


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

@dataclass
class SolverStats:
    steps: int = 0
    newton_iterations: int = 0
    max_newton_iterations: int = 0
    damped_steps: int = 0

    def as_dict(self):
        return {"steps": self.steps, "newton_iterations": self.newton_iterations,
                "max_newton_iterations": self.max_newton_iterations,
                "damped_steps": self.damped_steps}


class Stepper:
    """Advance the semi-discrete system by one time step.

    ``scale`` multiplies the diffusion operator (1/s(t) under a scaled metric).
    """

    def __init__(self, space, grid, eq, config):
        self.op = FLaplacian(space, grid)
        self.eq, self.config = eq, config
        self.stats = SolverStats()

    def _floor_check(self, v):
        if self.eq.family != LOGPOWER or self.eq.is_zero():
            return True
        return bool(np.all(v > self.config.positivity_floor))

    def step(self, u_old, scale=1.0):
        cfg, eq, op = self.config, self.eq, self.op
        dt = cfg.dt
        if cfg.scheme == IMEX:
            rhs = u_old + dt * reaction(eq, u_old)[0]
            u = solve_banded((1, 1), op.banded(1.0, -dt * scale), rhs)
            if not self._floor_check(u):
                raise PositivityError("IMEX step dropped below the positivity floor")
            self.stats.steps += 1
            return u
        tol = cfg.newton_tol * max(1.0, dt * scale * op.row_norm())
        u = u_old.copy()
        history = []
        for it in range(cfg.newton_max_iters + 1):
            R, dR = reaction(eq, u)
            G = u - dt * (op.apply(u, scale) + R) - u_old
            res = float(np.max(np.abs(G)))
            history.append(res)
            if res <= tol * max(1.0, float(np.max(np.abs(u)))):
                break
            if it == cfg.newton_max_iters:
                raise SolverError(f"Newton did not converge in {cfg.newton_max_iters} iterations "
                                  f"(residual {res:.3e})", residual=res, history=history)
            delta = solve_banded((1, 1), op.banded(1.0, -dt * scale, -dt * dR), -G)
            lam = 1.0
            while not self._floor_check(u + lam * delta):
                lam *= 0.5
                if lam < 2.0 ** -40:
                    raise PositivityError("positivity floor violated after full damping",
                                          residual=res, history=history)
            if lam < 1.0:
                self.stats.damped_steps += 1
            u_new = u + lam * delta
            if np.max(np.abs(u_new - u)) <= 4 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(u)))):
                u = u_new
                break
            u = u_new
        self.stats.steps += 1
        self.stats.newton_iterations += it
        self.stats.max_newton_iterations = max(self.stats.max_newton_iterations, it)
        return u


def step(space, eq, state, config, grid=None):
    """One time step from ``state``; the grid defaults to the pole-to-r_max grid."""
    state = np.asarray(state, dtype=float)
    grid = grid or Grid(state.size, space.r_max)
    return Stepper(space, grid, eq, config).step(state)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Trajectory:
    space: object
    eq: object
    grid: Grid
    window: TimeWindow
    times: np.ndarray
    values: np.ndarray          # shape (snapshots, nodes)
    initial: np.ndarray
    config: SolverConfig
    bc: str = "neumann"
    bounds: tuple | None = None
    bounds_held: bool = True
    stats: dict = field(default_factory=dict)
    scales: np.ndarray | None = None    # metric scale s(t) per snapshot under a flow
    flow: object = None

    @property
    def r(self):
        return self.grid.r

    @property
    def t_start(self):
        return self.window.start


def bounds_ok(eq, u, bounds):
    if bounds is None:
        return True
    lo, hi = bounds
    if eq.family == LOGPOWER:
        return bool(np.all(u > lo) and np.all(u <= hi))
    return bool(np.all(u > lo) and np.all(u < hi))


def _check_initial(eq, initial, grid, bounds):
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (grid.nodes,):
        raise ConfigurationError(f"initial data has {initial.size} values for {grid.nodes} nodes")
    if eq.family == LOGPOWER and np.any(initial <= 0):
        raise HypothesisError("log/power family needs positive initial data")
    if not bounds_ok(eq, initial, bounds):
        raise HypothesisError(f"initial data violates the declared bounds {bounds}")
    return initial


def _schedule(window, dt):
    nsteps = int(round(window.T / dt))
    if nsteps < 1 or abs(nsteps * dt - window.T) > 1e-9 * window.T:
        raise ConfigurationError(f"dt = {dt} does not divide the window length {window.T}")
    if window.snapshots is None:
        idx = list(range(window.snapshot_every, nsteps + 1, window.snapshot_every))
        if not idx or idx[-1] != nsteps:
            idx.append(nsteps)
    else:
        idx = []
        for s in window.snapshots:
            k = int(round((s - window.start) / dt))
            if abs(window.start + k * dt - s) > 1e-6 * dt:
                raise ConfigurationError(f"snapshot time {s} is not on the step grid")
            idx.append(k)
    return nsteps, sorted(set(idx))


def march(stepper, initial, window, dt, scale_at=None, on_step=None):
    """Integrate across the window; returns snapshot times, values and bound flag."""
    nsteps, snap_idx = _schedule(window, dt)
    wanted = set(snap_idx)
    times, values = [], []
    u = initial.copy()
    for k in range(1, nsteps + 1):
        t = window.start + k * dt
        scale = 1.0 if scale_at is None else scale_at(t)
        u = stepper.step(u, scale)
        if on_step is not None:
            on_step(u)
        if k in wanted:
            times.append(t)
            values.append(u.copy())
    return np.array(times), np.array(values)


def solve(space, eq, initial, window, config, grid=None, bc="neumann", bounds=None):
    """March from t0 - T to t0 and record snapshots."""
    grid = grid or Grid(len(initial), space.r_max)
    expected = "neumann" if grid.has_pole else "neumann_annulus"
    if bc != expected:
        raise ConfigurationError(f"boundary kind {bc!r} does not match the grid ({expected!r})")
    initial = _check_initial(eq, initial, grid, bounds)
    stepper = Stepper(space, grid, eq, config)
    held = [True]

    def watch(u):
        if held[0] and not bounds_ok(eq, u, bounds):
            held[0] = False

    times, values = march(stepper, initial, window, config.dt, on_step=watch)
    return Trajectory(space=space, eq=eq, grid=grid, window=window, times=times, values=values,
                      initial=initial, config=config, bc=bc, bounds=bounds, bounds_held=held[0],
                      stats=stepper.stats.as_dict())


# ---------------------------------------------------------------------------
# stationary problems
# ---------------------------------------------------------------------------

def solve_stationary(space, eq, guess, config, grid=None, bc="neumann"):
    """Damped Newton for ``Delta_f u + reaction(u) = 0``.

    When the reaction is identically zero the Jacobian has the constants as its
    kernel; the Newton system is then bordered with a zero weighted-mean
    constraint on the update so the limit is the mean of the guess.
    """
    guess = np.asarray(guess, dtype=float)
    grid = grid or Grid(guess.size, space.r_max)
    if eq.family == LOGPOWER and np.any(guess <= 0):
        raise HypothesisError("stationary log/power solve needs a positive guess")
    op = FLaplacian(space, grid)
    tol = config.newton_tol * max(1.0, op.row_norm())
    weights = volume_weights(space, grid)
    u = guess.copy()
    history = []

    def residual(v):
        return op.apply(v) + reaction(eq, v)[0]

    G = residual(u)
    for it in range(config.newton_max_iters + 1):
        res = float(np.max(np.abs(G)))
        history.append(res)
        if res <= tol * max(1.0, float(np.max(np.abs(u)))):
            return u
        if it == config.newton_max_iters:
            break
        dR = reaction(eq, u)[1]
        if np.all(dR == 0):
            n = grid.nodes
            J = op.sparse()
            border = bmat([[J, csc_matrix(np.ones((n, 1)))],
                           [csc_matrix(weights[None, :]), None]], format="csc")
            delta = spsolve(border, np.concatenate([-G, [0.0]]))[:n]
        else:
            delta = solve_banded((1, 1), op.banded(0.0, 1.0, dR), -G)
        if not np.all(np.isfinite(delta)):
            break
        lam = 1.0
        while True:
            trial = u + lam * delta
            ok = eq.family != LOGPOWER or np.all(trial > config.positivity_floor)
            if ok:
                G_trial = residual(trial)
                if np.max(np.abs(G_trial)) < (1 - 1e-4 * lam) * res or lam < 2.0 ** -12:
                    break
            lam *= 0.5
            if lam < 2.0 ** -40:
                raise PositivityError("stationary Newton left the positive cone",
                                      residual=res, history=history)
        u, G = trial, G_trial
    raise SolverError(f"stationary Newton did not converge (residual {history[-1]:.3e})",
                      residual=history[-1], history=history)


# ---------------------------------------------------------------------------
# spatially constant oracle
# ---------------------------------------------------------------------------

def constant_ode_oracle(eq, u0, t):
    """Value at time ``t`` of the spatially constant solution started from ``u0``."""
    if eq.family == LOGPOWER and u0 <= 0:
        raise HypothesisError("log/power oracle needs u0 > 0")
    if t == 0 or reaction(eq, u0)[0] == 0:
        return float(u0)
    if eq.family == LOGPOWER and eq.A == 0 and eq.B == 0:
        if eq.a != 0:
            c = eq.b / eq.a
            return float(math.exp((math.log(u0) + c) * math.exp(eq.a * t) - c))
        return float(u0 * math.exp(eq.b * t))

    def rhs(_, y):
        if eq.family == LOGPOWER and y[0] <= 0:
            return [0.0]
        return [reaction(eq, y[0])[0]]

    big = 1e12 * max(1.0, abs(u0))

    def escape(_, y):
        return big - abs(y[0])
    escape.terminal = True

    def vanish(_, y):
        return y[0]
    vanish.terminal = True

    events = [escape, vanish] if eq.family == LOGPOWER else [escape]
    sol = solve_ivp(rhs, (0.0, t), [u0], method="DOP853", rtol=1e-12, atol=1e-14, events=events)
    hit = [ev for ev in sol.t_events if ev.size]
    if hit or sol.status == -1:
        when = float(hit[0][0]) if hit else float(sol.t[-1])
        raise DivergenceError(f"constant solution leaves the admissible range near t = {when:.6g}",
                              blowup_time=when)
    return float(sol.y[0, -1])
