"""Space-time cut-off functions with measured derivative constants.

psi(r, t) = eta(r) * xi(t) where xi is the square of normalised time up to
tau and eta is a polynomial shoulder on [R/2, R].  Instead of asserting the
constants of the localisation lemma we sample the profile and report them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

SAMPLES = 1024
NEGLIGIBLE = 1e-14
EPS_ONE_POWER = 8     # shoulder exponent used for eps = 1, where the formula diverges


def shoulder_power(eps):
    if not 0 < eps <= 1:
        raise ConfigurationError(f"eps must lie in (0, 1], got {eps}")
    if eps == 1:
        return EPS_ONE_POWER
    return math.ceil(1.0 / (1.0 - eps) - 1e-12) + 1


def theta(s, m):
    """theta(s) = 1 - (1 - s^m)^2 and its first two derivatives."""
    s = np.asarray(s, dtype=float)
    sm = s ** m
    val = 1 - (1 - sm) ** 2
    d1 = 2 * m * s ** (m - 1) * (1 - sm)
    d2 = 2 * m * (m - 1) * s ** (m - 2) * (1 - sm) - 2 * m * m * s ** (2 * m - 2)
    return val, d1, d2


def eta(r, R, m):
    """Radial factor: 1 on [0, R/2], theta(2(R - r)/R) on [R/2, R], 0 beyond."""
    r = np.asarray(r, dtype=float)
    s = np.clip(2 * (R - r) / R, 0.0, 1.0)
    val, d1, d2 = theta(s, m)
    shoulder = (r > R / 2) & (r < R)
    val = np.where(r <= R / 2, 1.0, np.where(r >= R, 0.0, val))
    d1 = np.where(shoulder, -2.0 / R * d1, 0.0)
    d2 = np.where(shoulder, 4.0 / R ** 2 * d2, 0.0)
    return val, d1, d2


def xi(t, start, tau):
    """Time factor s^2 with s = (t - start)/(tau - start), frozen at 1 after tau."""
    t = np.asarray(t, dtype=float)
    span = tau - start
    s = np.clip((t - start) / span, 0.0, 1.0)
    d1 = np.where(t < tau, 2 * s / span, 0.0)
    return s ** 2, d1


@dataclass(eq=False)
class CutoffProfile:
    R: float
    window: tuple      # (t0 - T, t0)
    tau: float
    eps: float
    m: int
    r: np.ndarray
    t: np.ndarray
    psi: np.ndarray    # shape (len(t), len(r))
    C: float
    C_eps: float
    checks: dict
    junction_jump: float

    def summary(self):
        return {"R": self.R, "window": list(self.window), "tau": self.tau, "eps": self.eps,
                "m": self.m, "C": self.C, "C_eps": self.C_eps, "checks": self.checks,
                "junction_second_derivative_jump": self.junction_jump}


def cutoff_profile(R, window, tau, eps, samples=SAMPLES):
    start, t0 = window
    if not R > 0:
        raise ConfigurationError("R must be positive")
    if not start < t0:
        raise ConfigurationError("window must satisfy t0 - T < t0")
    if not start < tau <= t0:
        raise ConfigurationError(f"tau = {tau} must lie in ({start}, {t0}]")
    m = shoulder_power(eps)
    r = np.linspace(0.0, R, samples)
    t = np.linspace(start, t0, samples)
    e, er, err = eta(r, R, m)
    x, xt = xi(t, start, tau)
    psi = x[:, None] * e[None, :]
    psi_t = xt[:, None] * e[None, :]
    psi_r = x[:, None] * er[None, :]
    psi_rr = x[:, None] * err[None, :]

    live = psi >= NEGLIGIBLE
    span = tau - start
    C = float(np.max(np.abs(psi_t[live]) * span / np.sqrt(psi[live])))
    pe = psi[live] ** eps
    C_eps = float(max(np.max(R * np.abs(psi_r[live]) / pe),
                      np.max(R ** 2 * np.abs(psi_rr[live]) / pe)))

    inner = r <= R / 2
    late = t >= tau
    checks = {
        "bounded": bool(np.all((psi >= 0) & (psi <= 1))),
        "supported": bool(np.all(psi[:, r >= R] == 0)),
        "one_inside": bool(np.all(psi[np.ix_(late, inner)] == 1.0)),
        "flat_inside": bool(np.all(psi_r[:, inner] == 0.0)),
        "zero_at_start": bool(np.all(psi[0] == 0.0)),
        "nonincreasing": bool(np.all(psi_r <= 0)),
    }
    # eta is C^1 at R/2; its second derivative jumps by -8 m^2 / R^2 there
    junction_jump = float(4.0 / R ** 2 * theta(1.0, m)[2])
    return CutoffProfile(R=R, window=(start, t0), tau=tau, eps=eps, m=m, r=r, t=t, psi=psi,
                         C=C, C_eps=C_eps, checks=checks, junction_jump=junction_jump)
