import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fheatlab.errors import (ConfigurationError, DivergenceError, HypothesisError,
                             PositivityError, SolverError)
from fheatlab.geometry import (Euclidean, GaussianWeight, Hyperbolic, ModelSpace, ZeroWeight)
from fheatlab.solver import (IMEX, Exponential, Grid, LogPower, SolverConfig, TimeWindow,
                             constant_ode_oracle, discrete_f_laplacian, reaction,
                             rescale_equation, solve, solve_stationary, step, weighted_mass)

E3 = ModelSpace(3, Euclidean(), ZeroWeight(), 10.0)
H3 = ModelSpace(3, Hyperbolic(1.0), ZeroWeight(), 4.0)


def heat_kernel(r, t, n=3):
    return (4 * np.pi * t) ** (-n / 2) * np.exp(-r * r / (4 * t))


# -- reaction / rescale ----------------------------------------------------

def test_reaction_examples():
    assert reaction(LogPower(a=-1.0), 1.0) == (0.0, -1.0)
    assert reaction(LogPower(a=0, b=2, A=-1, B=1, p=3, q=1), 1.0) == (2.0, -2.0)
    assert reaction(Exponential(A=1, B=1, D=-2), 0.0) == (0.0, 0.0)


def test_reaction_positivity():
    with pytest.raises(PositivityError):
        reaction(LogPower(a=-1.0), 0.0)


@given(st.floats(0.05, 3.0))
def test_reaction_derivative_matches_difference(u):
    eq = LogPower(a=-1, b=0.3, A=-0.5, B=0.2, p=2.5, q=1.5)
    h = 1e-6 * u
    fd = (reaction(eq, u + h)[0] - reaction(eq, u - h)[0]) / (2 * h)
    assert reaction(eq, u)[1] == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_rescale_examples():
    eq = LogPower(a=-1, b=0.2, A=0.3, B=0.4, p=2, q=1)
    assert rescale_equation(eq, 1.0) == eq
    out = rescale_equation(LogPower(a=2, b=0, A=1, B=0, p=3, q=0), math.e)
    assert (out.a, out.b, out.A, out.B, out.p, out.q) == pytest.approx((2, 2, math.e ** 2, 0, 3, 0))
    out = rescale_equation(Exponential(A=1, B=1, D=1), 0.0)
    assert (out.A, out.B, out.D) == pytest.approx((2 / math.e, 2 * math.e, 2))


def test_rescale_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        rescale_equation(LogPower(a=-1), 0.0)


@given(st.floats(0.1, 5.0), st.floats(0.1, 2.0))
@settings(max_examples=40)
def test_rescale_logpower_pointwise(C, v):
    # R_v(v) must equal R_u(C v) / C
    eq = LogPower(a=-0.7, b=0.1, A=-0.4, B=0.25, p=2.0, q=1.0)
    assert reaction(rescale_equation(eq, C), v)[0] == pytest.approx(reaction(eq, C * v)[0] / C, rel=1e-10, abs=1e-12)


# -- discrete operator -----------------------------------------------------

def test_laplacian_constant_is_zero():
    grid = Grid(65, 4.0)
    assert np.all(discrete_f_laplacian(H3, grid, np.full(65, 2.5)) == 0.0)


def test_laplacian_r_squared():
    grid = Grid(101, 10.0)
    lap = discrete_f_laplacian(E3, grid, grid.r ** 2)
    assert np.allclose(lap[:-1], 6.0, atol=1e-10)


def test_laplacian_cosh_second_order():
    errs = []
    for nodes in (65, 129, 257):
        grid = Grid(nodes, 4.0)
        lap = discrete_f_laplacian(H3, grid, np.cosh(grid.r))
        inner = slice(1, nodes - 1)
        errs.append(np.max(np.abs(lap[inner] - 3 * np.cosh(grid.r[inner]))))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


# -- stepping --------------------------------------------------------------

def test_step_equilibria():
    cfg = SolverConfig(dt=0.01)
    u = np.full(33, 0.7)
    assert np.array_equal(step(E3, LogPower(), u, cfg), u)
    eq = Exponential(A=1, B=1, D=-math.e - 1 / math.e)
    one = np.ones(33)
    assert np.allclose(step(E3, eq, one, cfg), one, atol=1e-14)


def test_step_local_error_is_second_order():
    eq = LogPower(a=-1.0)
    u0 = 0.3
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        u1 = step(E3, eq, np.full(33, u0), SolverConfig(dt=dt))
        errs.append(abs(u1[0] - constant_ode_oracle(eq, u0, dt)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_step_newton_failure_reports_residual():
    with pytest.raises(SolverError) as info:
        step(E3, LogPower(a=-1, A=5, p=3), np.full(33, 0.9), SolverConfig(dt=1.0, newton_max_iters=1))
    assert info.value.residual is not None


# -- solve -----------------------------------------------------------------

def test_solve_gaussian_center_value():
    grid = Grid(257, 10.0)
    win = TimeWindow(t0=0.25, T=0.15, snapshots=(0.25,))
    traj = solve(E3, LogPower(), heat_kernel(grid.r, 0.1), win, SolverConfig(dt=2.5e-4), grid)
    assert traj.values[-1, 0] == pytest.approx(math.pi ** -1.5, rel=5e-3)
    assert math.pi ** -1.5 == pytest.approx(0.179587, abs=1e-6)


def test_solve_constant_logpower_matches_closed_form():
    grid = Grid(33, 2.0)
    sp = ModelSpace(3, Euclidean(), ZeroWeight(), 2.0)
    traj = solve(sp, LogPower(a=-1.0), np.full(33, math.exp(-1)), TimeWindow(t0=1.0, T=1.0),
                 SolverConfig(dt=1e-3), grid)
    exact = math.exp(-math.exp(-1))
    assert exact == pytest.approx(0.692201, abs=1e-6)
    assert np.max(np.abs(traj.values[-1] - exact)) < 1e-4
    assert np.ptp(traj.values[-1]) < 1e-14


def test_solve_equilibrium_constant_trajectory():
    eq = LogPower(a=-1.0)
    traj = solve(H3, eq, np.ones(65), TimeWindow(t0=0.5, T=0.5, snapshot_every=100),
                 SolverConfig(dt=1e-3), Grid(65, 4.0))
    assert np.all(traj.values == 1.0)


def test_solve_mass_conservation_pure_heat():
    sp = ModelSpace(3, Euclidean(), GaussianWeight(1.0), 4.0)
    grid = Grid(129, 4.0)
    u0 = 1.5 + np.cos(np.pi * grid.r / 4)
    traj = solve(sp, LogPower(), u0, TimeWindow(t0=0.2, T=0.2, snapshot_every=50),
                 SolverConfig(dt=1e-3), grid)
    m0 = weighted_mass(sp, grid, u0)
    for u in traj.values:
        assert weighted_mass(sp, grid, u) == pytest.approx(m0, rel=1e-5)  # trapezoid mass drifts at O(dr^2)


@given(st.floats(0.1, 2.0), st.floats(0.0, 0.9))
@settings(max_examples=15, deadline=None)
def test_maximum_principle(c0, frac):
    grid = Grid(65, 4.0)
    u0 = c0 * (1 + frac * np.cos(np.pi * grid.r / 4))
    traj = solve(H3, LogPower(), u0, TimeWindow(t0=0.1, T=0.1), SolverConfig(dt=1e-2), grid)
    assert traj.values.max() <= u0.max() * (1 + 1e-12)
    assert traj.values.min() >= u0.min() * (1 - 1e-12)


def test_imex_agrees_with_implicit():
    grid = Grid(65, 4.0)
    eq = LogPower(a=-1.0, A=-0.5, p=2)
    u0 = 0.5 + 0.3 * np.cos(np.pi * grid.r / 4)
    win = TimeWindow(t0=0.1, T=0.1)
    a = solve(H3, eq, u0, win, SolverConfig(dt=1e-4), grid).values[-1]
    b = solve(H3, eq, u0, win, SolverConfig(dt=1e-4, scheme=IMEX), grid).values[-1]
    assert np.max(np.abs(a - b)) < 1e-4


def test_solve_rejects_bad_initial():
    grid = Grid(33, 4.0)
    with pytest.raises(HypothesisError):
        solve(H3, LogPower(a=-1), np.zeros(33), TimeWindow(t0=1, T=1), SolverConfig(dt=0.1), grid)
    with pytest.raises(ConfigurationError):
        solve(H3, LogPower(a=-1), np.ones(32), TimeWindow(t0=1, T=1), SolverConfig(dt=0.1), grid)
    with pytest.raises(ConfigurationError):
        solve(H3, LogPower(a=-1), np.ones(33), TimeWindow(t0=1, T=1), SolverConfig(dt=0.3), grid)


def test_solve_bounds_flag():
    grid = Grid(33, 4.0)
    traj = solve(H3, LogPower(b=1.0), np.full(33, 0.9), TimeWindow(t0=1, T=1),
                 SolverConfig(dt=0.01), grid, bounds=(0.0, 1.0))
    assert not traj.bounds_held


# -- stationary ------------------------------------------------------------

def test_stationary_logpower_root():
    sp = ModelSpace(3, Euclidean(), GaussianWeight(1.0), 3.0)
    u = solve_stationary(sp, LogPower(a=0, b=-1, A=-1, B=1, p=3, q=1), np.full(65, 0.5), SolverConfig(dt=1.0))
    root = math.sqrt((math.sqrt(5) - 1) / 2)
    assert np.max(np.abs(u - root)) < 1e-10
    assert root == pytest.approx(0.786151, abs=1e-6)


def test_stationary_exponential_symmetric_root():
    u = solve_stationary(E3, Exponential(A=-1, B=1), np.full(33, 0.3), SolverConfig(dt=1.0))
    assert np.max(np.abs(u)) < 1e-10


def test_stationary_zero_reaction_mean_projection():
    grid = Grid(65, 10.0)
    guess = 1 + 0.2 * np.cos(np.pi * grid.r / 10)
    cfg = SolverConfig(dt=1.0)
    u = solve_stationary(E3, LogPower(), guess, cfg, grid)
    assert np.max(np.abs(np.diff(u))) / grid.dr <= cfg.newton_tol * 10
    assert weighted_mass(E3, grid, u) == pytest.approx(weighted_mass(E3, grid, guess), rel=1e-10)


def test_stationary_nonconvergence():
    with pytest.raises((SolverError, PositivityError)):
        solve_stationary(E3, LogPower(a=0, b=-1, A=-1, B=1, p=3, q=1), np.full(33, 0.5),
                         SolverConfig(dt=1.0, newton_max_iters=1))


# -- oracle ----------------------------------------------------------------

def test_oracle_examples():
    assert constant_ode_oracle(LogPower(a=-1.0), math.exp(-1), 1.0) == pytest.approx(0.692201, abs=1e-6)
    assert constant_ode_oracle(LogPower(b=1.0), 1.0, 1.0) == pytest.approx(math.e, rel=1e-14)
    assert constant_ode_oracle(LogPower(a=-1.0), 1.0, 7.0) == 1.0


def test_oracle_numeric_branch_matches_closed_form():
    eq = LogPower(a=-1.0, b=0.3, A=1e-300, p=1.0)
    closed = constant_ode_oracle(LogPower(a=-1.0, b=0.3), 0.4, 1.3)
    assert constant_ode_oracle(eq, 0.4, 1.3) == pytest.approx(closed, rel=1e-9)


def test_oracle_blowup():
    with pytest.raises(DivergenceError):
        constant_ode_oracle(LogPower(A=1.0, p=2.0), 1.0, 2.0)
