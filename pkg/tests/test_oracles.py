import numpy as np
import pytest

from gluenn.oracles import (
    IntegrationError,
    StiffnessError,
    bessel_half,
    extract_scattering,
    hankel1_32,
    integrate_ode,
    match_c0_chemical,
    match_c1_inflation,
    match_c1_tunneling,
    oracle_chemical,
    oracle_inflation,
    oracle_tunneling,
    oscillatory_amplitudes,
    oscillatory_coefficients,
    inflation_amplitude,
    ScatteringError,
)
from gluenn.problems import (
    ChemicalParams,
    InflationParams,
    TunnelingParams,
    equilibrium_yield,
    freeze_out_residual,
    mode_brace,
    schrodinger_residual,
)


def test_exponential_growth():
    sol = integrate_ode(lambda t, y: y, [1.0], (0.0, 1.0), 1e-10, 1e-12)
    assert sol(1.0)[0] == pytest.approx(np.e, abs=1e-8)


def test_harmonic_energy_drift():
    sol = integrate_ode(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], (0.0, 20 * np.pi), 1e-10, 1e-12)
    energy = np.sum(sol.y**2, axis=1)
    assert np.max(np.abs(energy - 1.0)) < 1e-6


def test_stiff_problem_needs_stiff_mode():
    rhs = lambda t, y: -1e4 * (y - np.cos(t))
    with pytest.raises(StiffnessError, match="stiff"):
        integrate_ode(rhs, [1.0], (0.0, 10.0), 1e-8, 1e-10, max_steps=20000)
    sol = integrate_ode(rhs, [1.0], (0.0, 10.0), 1e-10, 1e-12, method="stiff", jac=lambda t, y: np.array([[-1e4]]))
    t = np.linspace(1.0, 10.0, 50)
    quasi_static = np.cos(t) + 1e-4 * np.sin(t)
    assert np.max(np.abs(sol(t)[:, 0] - quasi_static)) < 1e-6


def test_dense_output_hits_nodes_and_is_accurate():
    sol = integrate_ode(lambda t, y: np.array([y[1], -y[0]]), [0.0, 1.0], (0.0, 6.0), 1e-9, 1e-12)
    assert np.array_equal(sol(sol.t[3]), sol.y[3])
    mid = 0.5 * (sol.t[:-1] + sol.t[1:])
    assert np.max(np.abs(sol(mid)[:, 0] - np.sin(mid))) < 1e-7
    with pytest.raises(ValueError):
        sol(7.0)


def test_backward_integration_is_stored_ascending():
    sol = integrate_ode(lambda t, y: -y, [1.0], (2.0, 0.0), 1e-10, 1e-12)
    assert sol.t[0] == 0.0 and np.all(np.diff(sol.t) > 0)
    assert sol(0.0)[0] == pytest.approx(np.exp(2.0), rel=1e-9)


def test_bad_tolerances():
    with pytest.raises(ValueError):
        integrate_ode(lambda t, y: y, [1.0], (0, 1), 0.0, 1e-12)


def test_chemical_oracle():
    sol = oracle_chemical()
    x = np.linspace(1.0, 1.9, 40)
    assert np.max(np.abs(sol(x)[:, 0] / equilibrium_yield(x) - 1)) < 1e-2
    late = sol.t > 1.5  # Y_eq itself peaks at x = 1.5
    assert np.all(np.diff(sol.y[late, 0]) <= 0)
    grid = np.geomspace(1.0, 31.0, 300)
    r = freeze_out_residual(sol(grid)[:, 0], sol.derivative(grid)[:, 0], grid, ChemicalParams())
    assert np.max(np.abs(r / sol(grid)[:, 0])) < 1e-4


def test_chemical_final_yield_tolerance_stable():
    a = oracle_chemical(rel_tol=1e-8)(31.0)[0]
    b = oracle_chemical(rel_tol=1e-10)(31.0)[0]
    assert abs(a / b - 1) < 1e-3


def test_closed_form_bessel_functions():
    special = pytest.importorskip("scipy.special")
    z = np.array([0.05, 0.7, 3.0, 40.0])
    h, dh = hankel1_32(z)
    assert np.allclose(h, special.hankel1(1.5, z), rtol=1e-12)
    assert np.allclose(dh, special.h1vp(1.5, z), rtol=1e-10)
    jm, jp, djm, djp = bessel_half(z)
    assert np.allclose(jm, special.jv(-0.5, z), rtol=1e-12)
    assert np.allclose(djp, special.jvp(0.5, z), rtol=1e-10)


def test_inflation_oracle():
    p = InflationParams()
    sol = oracle_inflation(p)
    assert inflation_amplitude(sol, 0.1)[0] == pytest.approx(1.0, abs=1e-15)
    a = np.geomspace(0.1, 500, 400)
    s, ds = sol(a), sol.derivative(a)
    for re, d, dd in ((0, 2, 2), (1, 3, 3)):
        r = ds[:, dd] + 2 / a * s[:, d] + mode_brace(a, p) * s[:, re]
        scale = np.max(np.abs(ds[:, dd])) + np.max(np.abs(s[:, re]))
        assert np.max(np.abs(r)) < 1e-4 * scale


def test_inflation_late_envelope_follows_bessel_pair():
    p = InflationParams()
    sol = oracle_inflation(p)
    a = np.linspace(200, 500, 60)
    jm, jp, _, _ = bessel_half(p.k / (p.m * a))
    X = sol(a)[:, 0] + 1j * sol(a)[:, 1]
    M = np.stack([jm, jp], axis=1).astype(complex)
    coef, *_ = np.linalg.lstsq(M, X, rcond=None)
    # the Bessel pair is the late-time asymptotic form, good to a few percent here
    assert np.max(np.abs(M @ coef - X)) < 0.03 * np.max(np.abs(X))


def test_tunneling_oracle_reproduces_reference_values():
    sol, scat = oracle_tunneling()
    assert scat.R2 == pytest.approx(0.9876, abs=1e-3)
    assert scat.T2 == pytest.approx(0.0124, abs=1e-3)
    assert scat.R2 + scat.T2 == pytest.approx(1.0, abs=1e-6)


def test_tunneling_oracle_residual():
    p = TunnelingParams()
    sol, _ = oracle_tunneling(p)
    x = np.linspace(-13.14, 13.14, 500)
    s, ds = sol(x), sol.derivative(x)
    r = schrodinger_residual(s[:, 0], ds[:, 2], x, p)
    assert np.max(np.abs(r)) < 1e-6 * np.max(np.abs(s[:, 0]))


def test_opaque_barrier():
    _, scat = oracle_tunneling(TunnelingParams(V0=50.0))
    assert scat.T2 < 1e-10


@pytest.mark.parametrize("V0, k", [(4.5, 2.0), (3.0, 1.5), (6.0, 1.0)])
def test_flux_conservation(V0, k):
    _, scat = oracle_tunneling(TunnelingParams(V0=V0, k=k))
    assert scat.R2 + scat.T2 == pytest.approx(1.0, abs=1e-6)


def test_halving_tolerance_leaves_observables():
    _, a = oracle_tunneling(rel_tol=1e-10, abs_tol=1e-12)
    _, b = oracle_tunneling(rel_tol=5e-11, abs_tol=5e-13)
    assert abs(a.T2 / b.T2 - 1) < 1e-5 and abs(a.R2 / b.R2 - 1) < 1e-5


def test_c0_chemical_matching():
    res = match_c0_chemical(7.8)
    # 0.145 * 7.8**1.5 * exp(-7.8)
    assert res.central["final_yield"] == pytest.approx(1.29423e-3, rel=1e-4)
    lo, hi = res.band["final_yield"]
    assert lo == pytest.approx(3.57e-4, rel=2e-3)
    assert hi == pytest.approx(4.41e-3, rel=2e-3)
    assert hi / lo > 10
    sweep = [row["final_yield"] for row in res.sweep]
    assert np.all(np.diff(sweep) < 0)
    assert len(res.sweep) == 21


def test_c1_inflation_matching():
    p = InflationParams()
    res = match_c1_inflation(p=p)
    assert res.matching_points == [20.0]
    assert res.coefficients["wronskian"] != 0
    eps = 1e-7
    curve = res.curve
    left = (curve(20.0 - eps) - curve(20.0 - 2 * eps)) / eps
    right = (curve(20.0 + 2 * eps) - curve(20.0 + eps)) / eps
    assert curve(20.0 - 1e-12) == pytest.approx(curve(20.0 + 1e-12), rel=1e-12)
    assert left == pytest.approx(right, rel=1e-4)


def test_c1_tunneling_matching_central_and_band():
    res = match_c1_tunneling()
    assert res.central["R2"] == pytest.approx(0.9909, abs=2e-3)
    assert res.central["T2"] == pytest.approx(0.0095, abs=2e-3)
    assert res.central["T2"] < 0.0124
    assert len(res.sweep) == 21
    assert res.sweep[0]["x_left"] == pytest.approx(-6.0) and res.sweep[-1]["x_left"] == pytest.approx(-4.0)


def test_piecewise_exponential_matching_is_c1():
    res = match_c1_tunneling(mode="exponential")
    assert max(res.coefficients["c1_jumps"]) < 1e-10
    assert res.central["R2"] + res.central["T2"] == pytest.approx(1.0, abs=1e-10)


def test_amplitude_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        A, B = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        a2, b2 = oscillatory_amplitudes(*oscillatory_coefficients(A, B))
        assert abs(a2 - A) < 1e-12 and abs(b2 - B) < 1e-12


def test_extract_scattering_pure_incident():
    s = extract_scattering((1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (0.0, 1.0))
    assert (s.R2, s.T2) == (0.0, 1.0)


def test_extract_scattering_rejects_incoming_right_wave():
    with pytest.raises(ScatteringError, match="incoming"):
        extract_scattering((1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (0.0, 0.0))
