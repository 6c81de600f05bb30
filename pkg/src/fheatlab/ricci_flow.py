"""Backward Ricci flow on Einstein model spaces.

For ``Ric(g0) = lam g0`` the flow ``dg/dt = -2 Ric`` is solved by the scaling
``g(t) = s(t) g0`` with ``s(t) = s0 - 2 lam t``; radial Laplacians then scale as
``Delta_{g(t)} = Delta_{g0} / s(t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FlowExtinctionError, DomainError
from .geometry import ZeroWeight
from .solver import Grid, Stepper, Trajectory, _check_initial, bounds_ok, march


@dataclass(frozen=True, eq=False)
class FlowSpec:
    base: object        # ModelSpace with zero weight and constant curvature
    s0: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        if not isinstance(self.base.weight, ZeroWeight):
            raise ConfigurationError("the flow is defined on unweighted model spaces only")
        if self.base.warp.curvature is None:
            raise ConfigurationError("the flow needs an Einstein (constant curvature) base metric")
        if not self.s0 > 0 or not self.horizon > 0:
            raise ConfigurationError("flow needs s0 > 0 and a positive horizon")
        if self.s0 - 2 * self.einstein_constant * self.horizon <= 0:
            raise FlowExtinctionError(
                f"metric scale vanishes before the horizon (t = {self.s0 / (2 * self.einstein_constant):.6g})")

    @property
    def einstein_constant(self):
        """lam in Ric(g0) = lam g0."""
        return (self.base.n - 1) * self.base.warp.curvature

    def describe(self):
        return {"base": self.base.describe(), "s0": self.s0, "horizon": self.horizon,
                "einstein_constant": self.einstein_constant}


def metric_scale(flow, t):
    if t < -1e-12 or t > flow.horizon * (1 + 1e-12):
        raise DomainError(f"time {t} outside the flow interval [0, {flow.horizon}]")
    s = flow.s0 - 2.0 * flow.einstein_constant * t
    if s <= 0:
        raise FlowExtinctionError(f"metric scale vanished at t = {t}")
    return s


def flow_kappa(flow):
    """Sup over the flow of the g(t)-norm of Ric = (lam/s) g, i.e. |lam| sqrt(n) / s."""
    lam = abs(flow.einstein_constant)
    ends = (metric_scale(flow, 0.0), metric_scale(flow, flow.horizon))
    return lam * np.sqrt(flow.base.n) / min(ends)


@dataclass(frozen=True)
class DistanceRate:
    rate: float
    bound: float
    ok: bool


def distance_rate_diagnostic(flow, r1, R):
    """Compare the growth rate of d(t) = sqrt(s(t)) r1 with kappa R."""
    if r1 > R:
        raise ConfigurationError("r1 must not exceed the ball radius R")
    lam = flow.einstein_constant
    s_min = min(metric_scale(flow, 0.0), metric_scale(flow, flow.horizon))
    rate = abs(lam) * r1 / np.sqrt(s_min)
    bound = flow_kappa(flow) * R
    return DistanceRate(rate=float(rate), bound=float(bound), ok=bool(rate <= bound))


def solve_on_flow(flow, eq, initial, window, config, grid=None, bounds=None):
    """Heat-type equation coupled to the scaling flow; implicit stage uses s(t_new)."""
    if window.start < -1e-12 or window.t0 > flow.horizon * (1 + 1e-12):
        raise ConfigurationError("the time window must lie inside [0, horizon]")
    space = flow.base
    grid = grid or Grid(len(initial), space.r_max)
    initial = _check_initial(eq, initial, grid, bounds)
    stepper = Stepper(space, grid, eq, config)
    held = [True]

    def watch(u):
        if held[0] and not bounds_ok(eq, u, bounds):
            held[0] = False

    def scale_at(t):
        return 1.0 / metric_scale(flow, t)

    times, values = march(stepper, initial, window, config.dt, scale_at=scale_at, on_step=watch)
    scales = np.array([metric_scale(flow, t) for t in times])
    bc = "neumann" if grid.has_pole else "neumann_annulus"
    return Trajectory(space=space, eq=eq, grid=grid, window=window, times=times, values=values,
                      initial=initial, config=config, bc=bc, bounds=bounds, bounds_held=held[0],
                      stats=stepper.stats.as_dict(), scales=scales, flow=flow)
