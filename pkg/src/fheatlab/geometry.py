"""Rotationally symmetric smooth metric measure spaces.

A model space is the warped product ``dr^2 + phi(r)^2 g_{S^{n-1}}`` carrying the
weighted measure ``e^{-f} dv`` with a radial weight ``f``.  Everything the
estimates consume (drift of the f-Laplacian, Bakry-Emery lower bound,
comparison constant, Ricci norm) is available in closed form for the
constant-curvature warps and from splines for tabulated data.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, DomainError, PoleError

MIN_TABULATED_NODES = 16


# ---------------------------------------------------------------------------
# warps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Euclidean:
    kind = "euclidean"
    curvature = 0.0

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        return r.copy(), np.ones_like(r), np.zeros_like(r)

    def log_derivative(self, r):
        return 1.0 / np.asarray(r, dtype=float)


@dataclass(frozen=True)
class Hyperbolic:
    K: float
    kind = "hyperbolic"

    def __post_init__(self):
        if not self.K > 0:
            raise ConfigurationError(f"hyperbolic warp needs K > 0, got {self.K}")

    @property
    def curvature(self):
        return -float(self.K)

    def eval(self, r):
        s = np.sqrt(self.K)
        x = s * np.asarray(r, dtype=float)
        return np.sinh(x) / s, np.cosh(x), s * np.sinh(x)

    def log_derivative(self, r):
        s = np.sqrt(self.K)
        return s / np.tanh(s * np.asarray(r, dtype=float))


@dataclass(frozen=True)
class Spherical:
    k: float
    kind = "spherical"

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigurationError(f"spherical warp needs k > 0, got {self.k}")

    @property
    def curvature(self):
        return float(self.k)

    @property
    def conjugate_radius(self):
        return np.pi / np.sqrt(self.k)

    def eval(self, r):
        s = np.sqrt(self.k)
        x = s * np.asarray(r, dtype=float)
        return np.sin(x) / s, np.cos(x), -s * np.sin(x)

    def log_derivative(self, r):
        s = np.sqrt(self.k)
        return s / np.tan(s * np.asarray(r, dtype=float))


def _check_samples(r, values, what):
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != values.shape:
        raise ConfigurationError(f"{what}: r and values must be 1-D of equal length")
    if r.size < 4:
        raise ConfigurationError(f"{what}: need at least 4 samples for a cubic spline")
    if r[0] != 0.0:
        raise ConfigurationError(f"{what}: samples must start at r = 0")
    if np.any(np.diff(r) <= 0):
        raise ConfigurationError(f"{what}: r must be strictly increasing")
    return r, values


@dataclass(frozen=True, eq=False)
class TabulatedWarp:
    """Warp from samples; odd parity fixes phi''(0) = 0 at the pole."""

    r: np.ndarray
    values: np.ndarray
    kind = "tabulated"
    curvature = None
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r, values = _check_samples(self.r, self.values, "tabulated warp")
        if values[0] != 0.0:
            raise ConfigurationError("tabulated warp must vanish at the pole")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", values)
        spline = CubicSpline(r, values, bc_type=((2, 0.0), "not-a-knot"))
        object.__setattr__(self, "_spline", spline)
        if abs(spline(0.0, 1) - 1.0) > 1e-2:
            raise ConfigurationError(
                f"tabulated warp must satisfy phi'(0) = 1, got {float(spline(0.0, 1)):.6g}")

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        return self._spline(r), self._spline(r, 1), self._spline(r, 2)

    def log_derivative(self, r):
        phi, dphi, _ = self.eval(r)
        return dphi / phi


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroWeight:
    kind = "zero"

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        return z, z.copy(), z.copy()


@dataclass(frozen=True)
class GaussianWeight:
    """f(r) = lam r^2 / 2, the Gaussian shrinking soliton potential."""

    lam: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigurationError(f"Gaussian weight needs lam > 0, got {self.lam}")

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * self.lam * r * r, self.lam * r, np.full_like(r, float(self.lam))


@dataclass(frozen=True, eq=False)
class TabulatedWeight:
    """Weight from samples; even parity fixes f'(0) = 0 at the pole."""

    r: np.ndarray
    values: np.ndarray
    kind = "tabulated"
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r, values = _check_samples(self.r, self.values, "tabulated weight")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_spline", CubicSpline(r, values, bc_type=((1, 0.0), "not-a-knot")))

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        return self._spline(r), self._spline(r, 1), self._spline(r, 2)


def read_two_column_csv(path):
    """Read ``(r, value)`` rows; a non-numeric first row is taken as a header."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if i == 0:
                    continue
                raise ConfigurationError(f"{path}: malformed row {i + 1}: {row!r}")
            except IndexError:
                raise ConfigurationError(f"{path}: row {i + 1} needs two columns")
    if not rows:
        raise ConfigurationError(f"{path}: no samples")
    data = np.array(rows)
    return data[:, 0], data[:, 1]


# ---------------------------------------------------------------------------
# model space
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelSpace:
    dimension: int
    warp: object = field(default_factory=Euclidean)
    weight: object = field(default_factory=ZeroWeight)
    r_max: float = 1.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ConfigurationError(f"dimension must be an integer >= 2, got {self.dimension}")
        if not self.r_max > 0:
            raise ConfigurationError(f"r_max must be positive, got {self.r_max}")
        if isinstance(self.warp, Spherical) and not self.r_max < self.warp.conjugate_radius:
            raise ConfigurationError(
                f"spherical model needs r_max < pi/sqrt(k) = {self.warp.conjugate_radius:.6g}")
        for tab in (self.warp, self.weight):
            if hasattr(tab, "r") and tab.r[-1] < self.r_max * (1 - 1e-12):
                raise ConfigurationError("tabulated samples do not cover [0, r_max]")
        rs = np.linspace(0.0, self.r_max, 257)[1:]
        if np.any(self.warp.eval(rs)[0] <= 0):
            raise ConfigurationError("warp must be positive on (0, r_max]")
        if isinstance(self.weight, TabulatedWeight):
            fp0 = float(self.weight.eval(0.0)[1])
            if abs(fp0) > 1e-12:
                raise ConfigurationError(f"weight must satisfy f'(0) = 0, got {fp0:.3g}")

    @property
    def n(self):
        return int(self.dimension)

    def describe(self):
        """Plain-data echo used in reports."""
        warp = {"kind": self.warp.kind}
        if isinstance(self.warp, Hyperbolic):
            warp["K"] = self.warp.K
        elif isinstance(self.warp, Spherical):
            warp["k"] = self.warp.k
        weight = {"kind": self.weight.kind}
        if isinstance(self.weight, GaussianWeight):
            weight["lam"] = self.weight.lam
        return {"dimension": self.n, "warp": warp, "weight": weight, "r_max": self.r_max}


def _check_range(space, r, allow_pole=True):
    r = np.asarray(r, dtype=float)
    lo = 0.0 if allow_pole else np.nextafter(0.0, 1.0)
    if np.any(r < lo) or np.any(r > space.r_max * (1 + 1e-12)):
        raise DomainError(f"radius outside [0, {space.r_max}]")
    return r


def warp_eval(space, r):
    """Return ``(phi, phi', phi'')`` at radius ``r`` (scalar or array)."""
    r = _check_range(space, r)
    phi, dphi, ddphi = space.warp.eval(r)
    if np.ndim(r) == 0:
        return float(phi), float(dphi), float(ddphi)
    return phi, dphi, ddphi


def weight_eval(space, r):
    r = _check_range(space, r)
    f, df, ddf = space.weight.eval(r)
    if np.ndim(r) == 0:
        return float(f), float(df), float(ddf)
    return f, df, ddf


def drift_coefficient(space, r):
    """First-order coefficient of the radial f-Laplacian, (n-1) phi'/phi - f'."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PoleError("drift coefficient is singular at the pole; use the pole stencil")
    r = _check_range(space, r)
    out = (space.n - 1) * space.warp.log_derivative(r) - space.weight.eval(r)[1]
    return float(out) if np.ndim(out) == 0 else out


def _curvature_ratios(space, r):
    """Return (phi''/phi, (1 - phi'^2)/phi^2) without cancellation for closed forms."""
    c = space.warp.curvature
    if c is not None:
        full = np.full_like(np.asarray(r, dtype=float), c)
        return -full, full.copy()
    phi, dphi, ddphi = space.warp.eval(r)
    return ddphi / phi, (1.0 - dphi * dphi) / (phi * phi)


def ricci_eigenvalues(space, r, weighted=True):
    """Radial and tangential eigenvalues of Ric (or Ric_f) at radii ``r > 0``."""
    r = np.asarray(r, dtype=float)
    n = space.n
    second, first = _curvature_ratios(space, r)
    radial = -(n - 1) * second
    tangential = -second + (n - 2) * first
    if weighted:
        _, df, ddf = space.weight.eval(r)
        radial = radial + ddf
        tangential = tangential + df * space.warp.log_derivative(r)
    return radial, tangential


def _sample_radii(space):
    warp = space.warp
    if isinstance(warp, TabulatedWarp) or isinstance(space.weight, TabulatedWeight):
        nodes = warp.r if isinstance(warp, TabulatedWarp) else space.weight.r
        nodes = nodes[(nodes > 0) & (nodes <= space.r_max)]
        if nodes.size == 0 or nodes[-1] < space.r_max:
            nodes = np.append(nodes, space.r_max)
        return nodes
    return np.linspace(0.0, space.r_max, 2049)[1:]


def _require_resolution(space):
    for tab in (space.warp, space.weight):
        if hasattr(tab, "r") and tab.r.size < MIN_TABULATED_NODES:
            raise ConfigurationError(
                f"tabulated data has {tab.r.size} nodes; at least {MIN_TABULATED_NODES} are required")


def bakry_emery_lower_bound(space):
    """Smallest K >= 0 with Ric_f >= -(n-1) K on the model."""
    _require_resolution(space)
    radial, tangential = ricci_eigenvalues(space, _sample_radii(space))
    lowest = min(float(radial.min()), float(tangential.min()))
    return max(0.0, -lowest / (space.n - 1))


def ricci_lower_bound(space, r_lo=None, r_hi=None):
    """Smallest K >= 0 with Ric >= -K (unweighted) on r in [r_lo, r_hi]."""
    r = _sample_radii(space)
    lo = r[0] if r_lo is None else max(r_lo, r[0])
    hi = space.r_max if r_hi is None else r_hi
    r = r[(r >= lo) & (r <= hi)]
    if r.size == 0:
        r = np.array([max(lo, np.finfo(float).tiny)])
    radial, tangential = ricci_eigenvalues(space, r, weighted=False)
    return max(0.0, -min(float(radial.min()), float(tangential.min())))


@dataclass(frozen=True)
class CurvatureSummary:
    K_eff: float
    alpha: float
    kappa: float


def comparison_quantities(space):
    if space.r_max < 1:
        raise ConfigurationError("alpha needs the unit ball: r_max must be >= 1")
    _require_resolution(space)
    alpha = drift_coefficient(space, 1.0)
    radial, tangential = ricci_eigenvalues(space, _sample_radii(space), weighted=False)
    kappa = np.sqrt(space.n) * max(float(np.abs(radial).max()), float(np.abs(tangential).max()))
    return CurvatureSummary(K_eff=bakry_emery_lower_bound(space), alpha=float(alpha), kappa=float(kappa))


def sectional_upper_bound(space, r_lo, r_hi):
    """Largest sectional curvature of the model over radii in [r_lo, r_hi]."""
    r_lo = max(r_lo, 1e-12)
    r = np.linspace(r_lo, r_hi, 513)
    second, first = _curvature_ratios(space, r)
    return float(max((-second).max(), first.max()))
