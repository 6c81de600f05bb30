import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fheatlab.errors import ConfigurationError, DomainError, PoleError
from fheatlab.geometry import (Euclidean, GaussianWeight, Hyperbolic, ModelSpace, Spherical,
                               TabulatedWarp, TabulatedWeight, ZeroWeight,
                               bakry_emery_lower_bound, comparison_quantities,
                               drift_coefficient, read_two_column_csv, ricci_eigenvalues,
                               warp_eval)


def euclid(n=3, weight=None, r_max=4.0):
    return ModelSpace(n, Euclidean(), weight or ZeroWeight(), r_max)


def hyper(n=3, K=1.0, r_max=4.0):
    return ModelSpace(n, Hyperbolic(K), ZeroWeight(), r_max)


# -- warp_eval -------------------------------------------------------------

def test_warp_euclidean():
    phi, d1, d2 = warp_eval(euclid(), 2.0)
    assert (float(phi), float(d1), float(d2)) == (2.0, 1.0, 0.0)


def test_warp_hyperbolic_pole():
    phi, d1, d2 = warp_eval(hyper(), 0.0)
    assert (float(phi), float(d1), float(d2)) == (0.0, 1.0, 0.0)


def test_warp_hyperbolic_unit():
    # oracle: series for sinh / cosh summed in exact rationals
    from fractions import Fraction
    sinh1 = sum(Fraction(1, math.factorial(2 * k + 1)) for k in range(20))
    cosh1 = sum(Fraction(1, math.factorial(2 * k)) for k in range(20))
    phi, d1, d2 = warp_eval(hyper(), 1.0)
    assert float(phi) == pytest.approx(float(sinh1), abs=1e-12)
    assert float(d1) == pytest.approx(float(cosh1), abs=1e-12)
    assert float(d2) == pytest.approx(float(sinh1), abs=1e-12)
    assert float(phi) == pytest.approx(1.175201, abs=1e-6)
    assert float(d1) == pytest.approx(1.543081, abs=1e-6)


def test_warp_outside_domain():
    with pytest.raises(DomainError):
        warp_eval(euclid(r_max=1.0), 1.5)


# -- drift -----------------------------------------------------------------

def test_drift_examples():
    assert drift_coefficient(euclid(), 2.0) == pytest.approx(1.0)
    assert drift_coefficient(euclid(weight=GaussianWeight(1.0)), 2.0) == pytest.approx(-1.0)
    assert drift_coefficient(hyper(), 1.0) == pytest.approx(2 / math.tanh(1.0), rel=1e-12)
    assert drift_coefficient(hyper(), 1.0) == pytest.approx(2.626309, abs=5e-4)


def test_drift_pole_error():
    with pytest.raises(PoleError):
        drift_coefficient(euclid(), 0.0)


def test_spherical_drift_finite_at_rmax():
    sp = ModelSpace(3, Spherical(1.0), ZeroWeight(), 3.0)
    assert np.isfinite(drift_coefficient(sp, 3.0))
    with pytest.raises(ConfigurationError):
        ModelSpace(3, Spherical(1.0), ZeroWeight(), math.pi)


@given(st.integers(2, 6), st.floats(0.1, 3.0), st.floats(0.05, 2.0))
def test_drift_formula_hyperbolic(n, K, r):
    sp = ModelSpace(n, Hyperbolic(K), ZeroWeight(), 4.0)
    s = math.sqrt(K)
    assert drift_coefficient(sp, r) == pytest.approx((n - 1) * s / math.tanh(s * r), rel=1e-12)


# -- curvature bounds ------------------------------------------------------

def test_bakry_emery_examples():
    assert bakry_emery_lower_bound(euclid()) == 0.0
    assert bakry_emery_lower_bound(hyper()) == pytest.approx(1.0, abs=1e-12)
    assert bakry_emery_lower_bound(euclid(weight=GaussianWeight(1.0))) == 0.0


@given(st.integers(2, 6), st.floats(0.1, 4.0))
@settings(max_examples=25)
def test_constant_curvature_bound_is_exact(n, K):
    assert bakry_emery_lower_bound(ModelSpace(n, Hyperbolic(K), ZeroWeight(), 2.0)) == pytest.approx(K, rel=1e-12)
    assert bakry_emery_lower_bound(ModelSpace(n, Spherical(K), ZeroWeight(), 1.0)) == 0.0


def test_ricci_eigenvalues_gaussian_soliton():
    rad, tan = ricci_eigenvalues(euclid(weight=GaussianWeight(2.0)), np.linspace(0.1, 3, 7))
    assert np.allclose(rad, 2.0) and np.allclose(tan, 2.0)


def test_comparison_quantities_examples():
    assert comparison_quantities(euclid()).alpha == pytest.approx(2.0)
    assert comparison_quantities(hyper()).alpha == pytest.approx(2 / math.tanh(1.0))
    assert comparison_quantities(euclid(weight=GaussianWeight(1.0))).alpha == pytest.approx(1.0)
    s = comparison_quantities(hyper())
    assert s.K_eff == pytest.approx(1.0)
    assert s.kappa == pytest.approx(2 * math.sqrt(3))


def test_comparison_needs_unit_ball():
    with pytest.raises(ConfigurationError):
        comparison_quantities(euclid(r_max=0.5))


# -- tabulated data --------------------------------------------------------

def test_tabulated_warp_spline_order():
    errs = []
    for m in (41, 81, 161):
        r = np.linspace(0, 2.0, m)
        tab = ModelSpace(3, TabulatedWarp(r, np.sinh(r)), ZeroWeight(), 2.0)
        x = np.linspace(0.01, 2.0, 997)
        errs.append(np.max(np.abs(warp_eval(tab, x)[0] - np.sinh(x))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.5)


def test_tabulated_needs_sixteen_nodes():
    r = np.linspace(0, 1.0, 10)
    sp = ModelSpace(3, TabulatedWarp(r, r.copy()), ZeroWeight(), 1.0)
    with pytest.raises(ConfigurationError):
        bakry_emery_lower_bound(sp)


def test_tabulated_warp_must_close_at_pole():
    r = np.linspace(0, 1.0, 20)
    with pytest.raises(ConfigurationError):
        TabulatedWarp(r, r + 0.1)
    with pytest.raises(ConfigurationError):
        TabulatedWarp(r, 2 * r)


def test_tabulated_weight_matches_gaussian(tmp_path):
    r = np.linspace(0, 3.0, 121).tolist()
    path = tmp_path / "f.csv"
    path.write_text("r,f\n" + "\n".join(f"{a!r},{0.5 * a * a!r}" for a in r))
    rs, vals = read_two_column_csv(path)
    tab = ModelSpace(3, Euclidean(), TabulatedWeight(rs, vals), 3.0)
    gauss = ModelSpace(3, Euclidean(), GaussianWeight(1.0), 3.0)
    x = np.linspace(0.2, 3.0, 9)
    assert np.allclose([drift_coefficient(tab, v) for v in x],
                       [drift_coefficient(gauss, v) for v in x], atol=1e-8)


def test_csv_reader_rejects_garbage(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0,0\n0.1,zz\n")
    with pytest.raises(ConfigurationError):
        read_two_column_csv(path)


def test_model_space_validation():
    with pytest.raises(ConfigurationError):
        ModelSpace(1, Euclidean(), ZeroWeight(), 1.0)
    with pytest.raises(ConfigurationError):
        ModelSpace(3, Euclidean(), ZeroWeight(), -1.0)
    with pytest.raises(ConfigurationError):
        Hyperbolic(0.0)
    with pytest.raises(ConfigurationError):
        GaussianWeight(-1.0)
