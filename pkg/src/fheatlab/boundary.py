"""Radial domains with boundary: admissibility checks, boundary cut-off and
explicit-constant gradient certificates for Neumann solutions.

Distance to the boundary is always called ``r_bdry`` (``distance_to_boundary``);
``r`` keeps its meaning of distance from the pole.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, HypothesisError
from .estimates import (Certificate, _grid_meta, exponential_excess, h1_constant,
                        radial_gradient)
from .geometry import ZeroWeight, ricci_lower_bound, sectional_upper_bound, warp_eval
from .solver import EXPONENTIAL, LOGPOWER

BALL, ANNULUS = "ball", "annulus"
BOUNDARY_KINDS = ("thm14", "thm15", "main5")
SCAN = 1024


@dataclass(frozen=True, eq=False)
class BoundedDomain:
    space: object
    shape: str
    r_a: float
    r_b: float
    H: float
    K: float
    rolling_R: float

    @property
    def n(self):
        return self.space.n

    def distance_to_boundary(self, r):
        r = np.asarray(r, dtype=float)
        if self.shape == BALL:
            return self.r_b - r
        return np.minimum(r - self.r_a, self.r_b - r)

    def describe(self):
        return {"shape": self.shape, "r_a": self.r_a, "r_b": self.r_b, "H": self.H,
                "K": self.K, "rolling_R": self.rolling_R, "space": self.space.describe()}


def _log_derivative(space, r):
    phi, dphi, _ = warp_eval(space, np.atleast_1d(float(r)))
    return float(dphi[0] / phi[0])


def build_domain(space, shape, r_b, r_a=0.0):
    """Ball {r < r_b} or annulus {r_a < r < r_b} in the model."""
    if not isinstance(space.weight, ZeroWeight):
        raise HypothesisError("boundary estimates are stated for unweighted manifolds")
    if shape not in (BALL, ANNULUS):
        raise ConfigurationError(f"unknown domain shape {shape!r}")
    if shape == ANNULUS and r_a <= 0:
        raise ConfigurationError("an annulus needs r_a > 0")
    if shape == BALL:
        r_a = 0.0
    if not (0 <= r_a < r_b <= space.r_max * (1 + 1e-12)):
        raise ConfigurationError(f"need 0 <= r_a < r_b <= r_max, got r_a={r_a}, r_b={r_b}")
    # II of the outer sphere is phi'/phi, of the inner sphere -phi'/phi (outward normals)
    outer = _log_derivative(space, r_b)
    H = max(0.0, -outer)
    if shape == ANNULUS:
        H = max(H, _log_derivative(space, r_a))
        rolling = min(r_b - r_a, 1.0)
    else:
        rolling = min(2 * r_b, 1.0)
    K = ricci_lower_bound(space, r_a, r_b)
    return BoundedDomain(space=space, shape=shape, r_a=float(r_a), r_b=float(r_b), H=float(H),
                         K=float(K), rolling_R=float(rolling))


def _require_radius(domain, R):
    if not 0 < R <= domain.rolling_R or R >= 1:
        raise ConfigurationError(
            f"R = {R} must satisfy 0 < R <= rolling radius {domain.rolling_R} and R < 1")


@dataclass(frozen=True)
class SmallRCheck:
    ok: bool
    reason: str
    first: float = float("nan")    # sqrt(K) tan(R sqrt K) against H/2 + 1/2
    second: float = float("nan")   # H tan(R sqrt K)/sqrt K against 1/2

    def __bool__(self):
        return self.ok


def small_R_check(K_R, H, R):
    """Admissibility of R for the boundary cut-off given curvature K_R and II >= -H."""
    if K_R <= 0:
        # a non-positive upper bound may be replaced by 0: use the flat continuation
        first, second = 0.0, H * R
        reason = "flat" if K_R == 0 else "nonpositive curvature, flat continuation"
    else:
        x = R * math.sqrt(K_R)
        if x >= math.pi / 2:
            return SmallRCheck(False, "R sqrt(K_R) >= pi/2")
        first = math.sqrt(K_R) * math.tan(x)
        second = H * math.tan(x) / math.sqrt(K_R)
        reason = "curved"
    ok = first <= H / 2 + 0.5 and second <= 0.5
    if not ok:
        reason = "first condition fails" if first > H / 2 + 0.5 else "second condition fails"
    return SmallRCheck(bool(ok), reason, float(first), float(second))


def collar_curvature(domain, R):
    """Sectional-curvature upper bound over the collar {r_bdry <= R}."""
    spans = [(max(domain.r_b - R, domain.r_a), domain.r_b)]
    if domain.shape == ANNULUS:
        spans.append((domain.r_a, min(domain.r_a + R, domain.r_b)))
    return max(sectional_upper_bound(domain.space, lo, hi) for lo, hi in spans)


# ---------------------------------------------------------------------------
# boundary cut-off
# ---------------------------------------------------------------------------

def psi_profile(s, H):
    """psi(s) = H (s - s^2/2) on [0, 1], H/2 beyond; returns (psi, psi', psi'')."""
    s = np.asarray(s, dtype=float)
    inside = s < 1
    val = np.where(inside, H * (s - s * s / 2), H / 2)
    d1 = np.where(inside, H * (1 - s), 0.0)
    d2 = np.where(inside, -H, 0.0)
    return val, d1, d2


@dataclass(eq=False)
class BoundaryCutoff:
    R: float
    H: float
    r: np.ndarray
    phi: np.ndarray
    chi: np.ndarray
    measured: dict
    checks: dict

    def summary(self):
        return {"R": self.R, "H": self.H, "measured": self.measured, "checks": self.checks}


def boundary_cutoff(domain, R, samples=SCAN):
    _require_radius(domain, R)
    H = domain.H
    r = np.linspace(domain.r_a, domain.r_b, samples)
    s = domain.distance_to_boundary(r) / R
    psi, d1, d2 = psi_profile(s, H)
    chi = (1 + psi) ** 2
    # |grad r_bdry| = 1, so |grad chi|^2 / chi = (2 (1 + psi) psi' / R)^2 / chi
    grad_ratio = (2 * (1 + psi) * d1 / R) ** 2 / chi
    s_scan = np.linspace(0.0, 2.0, samples)
    p_s, p1_s, p2_s = psi_profile(s_scan, H)
    measured = {
        "psi_at_0": float(psi_profile(0.0, H)[0]),
        "dpsi_at_0": float(psi_profile(0.0, H)[1]),
        "dpsi_min": float(p1_s.min()), "dpsi_max": float(p1_s.max()),
        "ddpsi_min": float(p2_s.min()), "psi_max": float(p_s.max()),
        "grad_chi_ratio_max": float(grad_ratio.max()),
        "grad_chi_ratio_bound": 16 * H * H / R ** 2,
    }
    checks = {
        "psi_zero_at_boundary": measured["psi_at_0"] == 0.0,
        "dpsi_at_boundary_is_H": measured["dpsi_at_0"] == H,
        "dpsi_in_range": measured["dpsi_min"] >= 0 and measured["dpsi_max"] <= 2 * H,
        "ddpsi_lower": measured["ddpsi_min"] >= -H,
        "psi_below_H": measured["psi_max"] <= H,
        "grad_chi_ratio": measured["grad_chi_ratio_max"] <= measured["grad_chi_ratio_bound"],
    }
    return BoundaryCutoff(R=R, H=H, r=r, phi=psi, chi=chi, measured=measured,
                          checks={k: bool(v) for k, v in checks.items()})


# ---------------------------------------------------------------------------
# index comparison
# ---------------------------------------------------------------------------

def index_comparison_check(domain, R, samples=SCAN):
    """Laplacian of r_bdry on the collar against -(n-1)(3H+1)."""
    _require_radius(domain, R)
    n = domain.n
    parts = []
    lo = max(domain.r_b - R, domain.r_a, 1e-12)
    r = np.linspace(lo, domain.r_b, samples)
    phi, dphi, _ = warp_eval(domain.space, r)
    parts.append(-(n - 1) * dphi / phi)
    if domain.shape == ANNULUS:
        r_in = np.linspace(domain.r_a, min(domain.r_a + R, domain.r_b), samples)
        phi, dphi, _ = warp_eval(domain.space, r_in)
        parts.append((n - 1) * dphi / phi)
    lap = np.concatenate(parts)
    bound = -(n - 1) * (3 * domain.H + 1)
    low = float(lap.min())
    return Certificate(kind="index_comparison", params={"R": R, "H": domain.H, "n": n},
                       passed=bool(low >= bound), residual_min=low,
                       details={"bound": bound, "margin": low - bound})


# ---------------------------------------------------------------------------
# constants and certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryConstants:
    C1: float
    C2: float
    C3: float
    C: float | None = None

    def as_dict(self):
        return dict(self.__dict__)


def _u_range(traj):
    both = np.vstack([traj.initial[None, :], traj.values])
    return float(both.min()), float(both.max()), both


def boundary_constants(domain, eq, traj, theorem_id="thm14", C=None):
    H, n, K = domain.H, domain.n, domain.K
    umin, umax, U = _u_range(traj)
    if theorem_id == "thm15":
        if C is None:
            raise ConfigurationError("thm15 needs the upper bound C")
        C1 = K + max(float(exponential_excess(eq, U).max()), 0.0)
        C2 = 2 * C * math.sqrt(24) * (1 + H) * (n - 1) * H * (3 * H + 1)
        C3 = 24 * C ** 2 * (16 * H ** 2 + (1 + H) * H) ** 2 + 864 * C ** 4 * (1 + H) ** 4 * H ** 4
        return BoundaryConstants(C1=C1, C2=C2, C3=C3, C=C)
    C1 = K + h1_constant(eq, umin, umax)
    C2 = 2 * math.sqrt(24) * (1 + H) * (n - 1) * H * (3 * H + 1)
    C3 = 24 * (16 * H ** 2 + (1 + H) * H) ** 2 + 864 * (1 + H) ** 4 * H ** 4
    return BoundaryConstants(C1=C1, C2=C2, C3=C3)


def rhs_factor(theorem_id, consts, H, R, t, K=0.0):
    """Right-hand side without its (1 - log u) factor (thm14, main5) or in full (thm15)."""
    t = np.asarray(t, dtype=float)
    r4_24, r4_2 = 24 ** 0.25, 2 ** 0.25
    if theorem_id == "main5":
        return r4_24 * math.sqrt(K) + r4_2 / np.sqrt(t)
    tail = math.sqrt(consts.C2 / R) + consts.C3 ** 0.25 / R
    if theorem_id == "thm14":
        return (1 + H) * (r4_24 * math.sqrt(consts.C1) * (1 + H) + r4_2 * (1 + H) / np.sqrt(t) + tail)
    C = consts.C
    return 2 * (1 + H) * (r4_24 * math.sqrt(C * consts.C1) * (1 + H)
                          + r4_2 * (1 + H) * np.sqrt(C / t) + tail)


def neumann_residual(traj):
    """Discrete normal derivative at boundary nodes.

    ``ghost`` is the centred difference with the reflected ghost value used by
    the scheme (zero by construction); ``one_sided`` is the second-order
    one-sided difference, which is O(dr^2) for a smooth solution.
    """
    dr = traj.grid.dr
    U = traj.values
    outer = np.abs(3 * U[:, -1] - 4 * U[:, -2] + U[:, -3]) / (2 * dr)
    reflected = U[:, -2]     # ghost value u_{N+1} = u_{N-1}
    ghost = np.abs(reflected - U[:, -2]) / (2 * dr)
    if not traj.grid.has_pole:
        inner = np.abs(-3 * U[:, 0] + 4 * U[:, 1] - U[:, 2]) / (2 * dr)
        outer = np.maximum(outer, inner)
    return {"ghost": float(ghost.max()), "one_sided": float(outer.max())}


def _check_hypotheses(domain, eq, traj, theorem_id, R, C):
    if theorem_id not in BOUNDARY_KINDS:
        raise ConfigurationError(f"unknown boundary theorem {theorem_id!r}")
    if traj.bc not in ("neumann", "neumann_annulus"):
        raise HypothesisError("boundary certificates need a Neumann trajectory")
    if abs(traj.grid.r_max - domain.r_b) > 1e-9 or abs(traj.grid.r_min - domain.r_a) > 1e-9:
        raise HypothesisError("trajectory grid does not cover the domain")
    if theorem_id in ("thm14", "main5"):
        if eq.family != LOGPOWER:
            raise HypothesisError(f"{theorem_id} applies to the log/power family")
        if np.any(traj.values > 1) or np.any(traj.initial > 1):
            raise HypothesisError(f"{theorem_id} needs u <= 1")
        if eq.p < 0 or eq.q < 0:
            raise HypothesisError("p and q must be non-negative")
    if theorem_id == "main5":
        if domain.H != 0:
            raise HypothesisError("main5 needs a convex boundary (H = 0)")
        if not (eq.a + eq.b <= 0 and eq.A <= 0 and eq.B >= 0 and eq.p >= 1 and eq.q >= 0):
            raise HypothesisError("main5 needs a + b <= 0, A <= 0, B >= 0, p >= 1, q >= 0")
        return
    if theorem_id == "thm15":
        if eq.family != EXPONENTIAL:
            raise HypothesisError("thm15 applies to the exponential family")
        if C is None:
            raise ConfigurationError("thm15 needs the upper bound C")
        if not (np.all(traj.values > 1) and np.all(traj.values < C)):
            raise HypothesisError(f"thm15 needs 1 < u < {C}")
    # the R-dependent theorems need an admissible collar
    if R is None:
        raise ConfigurationError(f"{theorem_id} needs the rolling radius R")
    _require_radius(domain, R)
    small = small_R_check(collar_curvature(domain, R), domain.H, R)
    if not small:
        raise HypothesisError(f"R = {R} fails the small-R condition ({small.reason})")
    index = index_comparison_check(domain, R)
    if not index.passed:
        raise HypothesisError(
            f"Laplacian comparison fails on the collar: min {index.residual_min:.6g} < {index.details['bound']:.6g}")


def boundary_certificate(domain, eq, traj, theorem_id, R=None, C=None, t_min=None, tol_grid=None):
    """Pass/fail check of an explicit-constant gradient bound over all nodes and snapshots."""
    if theorem_id == "thm15" and C is None and traj.bounds is not None:
        C = traj.bounds[1]
    _check_hypotheses(domain, eq, traj, theorem_id, R, C)
    consts = boundary_constants(domain, eq, traj, "thm15" if theorem_id == "thm15" else "thm14", C)
    t = traj.times - traj.t_start
    keep = t > 0
    if t_min is not None:
        keep &= traj.times >= t_min - 1e-12
    if not np.any(keep):
        raise ConfigurationError("no snapshot inside the evaluation window")
    U = traj.values[keep]
    grad = np.abs(radial_gradient(U, traj.grid.dr))
    rhs = rhs_factor(theorem_id, consts, domain.H, R, t[keep], K=domain.K)[:, None]
    if theorem_id == "thm15":
        ratio = grad / np.sqrt(U) / rhs
    else:
        ratio = grad / U / (rhs * (1 - np.log(U)))
    k, i = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    worst = float(ratio[k, i])
    tol = 10.0 * (traj.grid.dr + traj.config.dt) if tol_grid is None else float(tol_grid)
    return Certificate(
        kind=theorem_id,
        params={"R": R, "C": C, "t_min": t_min, "domain": domain.describe(),
                "constants": consts.as_dict(), "equation": eq.params()},
        passed=bool(worst <= 1 + tol), c_star=worst,
        argmin={"node": int(i), "r": float(traj.grid.r[i]), "t": float(traj.times[keep][k])},
        tol_grid=tol, grid=_grid_meta(traj),
        details={"max_ratio": worst, "margin": 1 - worst, "neumann": neumann_residual(traj)})
