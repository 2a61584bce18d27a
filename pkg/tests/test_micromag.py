import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from spinsnn import micromag as mm
from spinsnn.constants import CONSTANTS
from spinsnn.errors import (
    AmbiguousStateError,
    CalibrationError,
    NonConvergenceError,
    NumericalDivergenceError,
    StabilityError,
)

P = mm.MaterialParams()
MU0 = CONSTANTS.mu0


def macrospin_oracle(theta0, phi0, H, alpha, t):
    """Closed-form damped precession of one spin in a static field along +z."""
    g = CONSTANTS.gamma / (1.0 + alpha**2)
    theta = 2.0 * np.arctan(np.tan(theta0 / 2.0) * np.exp(-alpha * g * H * t))
    phi = phi0 + g * H * t
    return np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)


def single_cell(direction):
    geo = mm.StripGeometry(length=4e-9, width=1e-9, cell=(4e-9, 1e-9, 0.6e-9))
    return mm.MagnetizationGrid.uniform(geo, direction)


@pytest.fixture(scope="module")
def relaxed_centre():
    return mm.relaxed_wall(P)


# -- parameters and grids ---------------------------------------------------

def test_table_defaults():
    assert (P.Ms, P.A_ex, P.Ku, P.D, P.alpha, P.theta_SH) == (700e3, 1e-11, 4.8e5, -1.2e-3, 0.3, 0.07)
    assert P.t_FM == 0.6e-9 and P.t_HM == 3e-9
    assert P.wall_width == pytest.approx(7.6e-9, rel=0.01)


@pytest.mark.parametrize("bad", [dict(Ms=0), dict(A_ex=-1), dict(alpha=0), dict(alpha=1.5), dict(theta_SH=1.2),
                                 dict(t_HM=0)])
def test_param_validation(bad):
    with pytest.raises(ValueError):
        P.replace(**bad)


def test_digest_tracks_values():
    assert P.digest() == mm.MaterialParams().digest()
    assert P.digest() != P.replace(alpha=0.31).digest()


def test_table_grid_shape():
    g = mm.MagnetizationGrid.uniform()
    assert (g.nx, g.ny, g.nz) == (30, 20, 1)
    assert g.length == pytest.approx(120e-9)


def test_gamma_value():
    assert CONSTANTS.gamma == pytest.approx(2.2102e5, rel=1e-4)


# -- fields -------------------------------------------------------------------

def test_uniform_state_has_no_interior_dmi():
    H = mm.effective_field(mm.MagnetizationGrid.uniform(), P, terms=("dmi",))
    assert np.all(H[1:-1, 1:-1] == 0.0)


def test_uniform_state_anisotropy_field():
    H = mm.effective_field(mm.MagnetizationGrid.uniform(), P, terms=("anisotropy",))
    expected = 2 * (P.Ku - 0.5 * MU0 * P.Ms**2) / (MU0 * P.Ms)
    np.testing.assert_allclose(H[..., 2], expected, rtol=1e-14)
    assert np.all(H[..., :2] == 0.0)


def _analytic_wall(x0, delta):
    x = sp.symbols("x")
    mz = sp.tanh((x - x0) / delta)
    return sp.lambdify(x, sp.diff(mz, x), "numpy")


@pytest.mark.parametrize("hx", [1e-9, 0.5e-9])
def test_dmi_field_matches_symbolic_derivative(hx):
    geo = mm.StripGeometry(length=120e-9, width=4e-9, cell=(hx, 1e-9, 0.6e-9))
    x0, delta = 60e-9, P.wall_width
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(geo), x0, p=P)
    H = mm.effective_field(g, P, terms=("dmi",))
    dmz = _analytic_wall(x0, delta)(g.x_centers)
    expected = 2 * P.D / (MU0 * P.Ms) * dmz
    interior = slice(5, -5)
    err = np.max(np.abs(H[interior, 2, 0, 0] - expected[interior])) / np.max(np.abs(expected))
    # central differences: leading error (h/delta)^2 / 3 of the peak slope
    assert err < (hx / delta) ** 2


def test_exchange_field_matches_analytic_laplacian():
    geo = mm.StripGeometry(length=200e-9, width=2e-9, cell=(0.5e-9, 1e-9, 0.6e-9))
    g = mm.MagnetizationGrid.uniform(geo)
    k = 2 * np.pi / 100e-9
    th = k * g.x_centers
    g.m[..., 0] = np.sin(th)[:, None, None]
    g.m[..., 2] = np.cos(th)[:, None, None]
    H = mm.effective_field(g, P.replace(D=0.0), terms=("exchange",))
    expected = -2 * P.A_ex / (MU0 * P.Ms) * k**2 * np.cos(th)
    sl = slice(2, -2)
    np.testing.assert_allclose(H[sl, 0, 0, 2], expected[sl], rtol=(k * 0.5e-9) ** 2, atol=1e-6 * abs(expected).max())


def test_nonfinite_field_reports_cell():
    g = mm.MagnetizationGrid.uniform()
    g.m[3, 4, 0] = np.nan
    with pytest.raises(NumericalDivergenceError) as info:
        mm.effective_field(g, P)
    assert info.value.cell == (3, 4, 0)


# -- DMI boundary --------------------------------------------------------------

def test_zero_dmi_ghost_copies_edge():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 50e-9, p=P)
    Pg = mm.dmi_boundary(g, P.replace(D=0.0))
    np.testing.assert_array_equal(Pg[0, 1:-1, 1:-1], g.m[0])
    np.testing.assert_array_equal(Pg[-1, 1:-1, 1:-1], g.m[-1])
    np.testing.assert_array_equal(Pg[1:-1, 0, 1:-1], g.m[:, 0])
    np.testing.assert_array_equal(Pg[1:-1, 1:-1, 1:-1], g.m)


def test_dmi_ghost_derivative_on_plus_x_edge():
    g = mm.MagnetizationGrid.uniform()
    Pg = mm.dmi_boundary(g, P)
    hx = g.cell[0]
    deriv = (Pg[-1, 1:-1, 1:-1] - g.m[-1]) / hx
    # D/2A for the table values is -6e7 per metre, along x
    np.testing.assert_allclose(deriv[..., 0], -6e7, rtol=1e-12)
    np.testing.assert_allclose(deriv[..., 1:], 0.0, atol=1e-6)
    deriv_pos = (mm.dmi_boundary(g, P.replace(D=1.2e-3))[-1, 1:-1, 1:-1] - g.m[-1]) / hx
    np.testing.assert_allclose(deriv_pos[..., 0], 6e7, rtol=1e-12)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_dmi_ghost_formula_all_faces(a, b, c):
    v = np.array([a, b, c])
    if np.linalg.norm(v) < 1e-3:
        v = np.array([0.0, 0.0, 1.0])
    v = v / np.linalg.norm(v)
    geo = mm.StripGeometry(length=12e-9, width=3e-9, cell=(4e-9, 1e-9, 0.6e-9))
    g = mm.MagnetizationGrid.uniform(geo, v)
    Pg = mm.dmi_boundary(g, P)
    k = P.D / (2 * P.A_ex)
    z = np.array([0.0, 0.0, 1.0])
    faces = {(1, 0, 0): Pg[-1, 1:-1, 1:-1], (-1, 0, 0): Pg[0, 1:-1, 1:-1],
             (0, 1, 0): Pg[1:-1, -1, 1:-1], (0, -1, 0): Pg[1:-1, 0, 1:-1]}
    for n, ghost in faces.items():
        n = np.array(n, dtype=float)
        h = geo.cell[0] if n[0] else geo.cell[1]
        expected = k * np.cross(v, np.cross(n, z))
        np.testing.assert_allclose((ghost - v) / h, np.broadcast_to(expected, ghost.shape), atol=1e-3)


# -- time stepping ---------------------------------------------------------------

def test_macrospin_matches_analytic_precession():
    theta0, H, dt = np.radians(10.0), 1e5, 10e-15
    p = P.replace(D=0.0)
    g = single_cell([np.sin(theta0), 0.0, np.cos(theta0)])
    out, t, samples = mm.integrate(g, p, 0.0, 1e-9, dt=dt, h_ext=[0, 0, H], terms=(), sample_every=1000)
    m = samples[:, 0, 0, 0]
    ref = macrospin_oracle(theta0, 0.0, H, p.alpha, t)
    rel = np.linalg.norm(m - ref, axis=-1) / np.linalg.norm(ref, axis=-1)
    assert len(t) == 101 and t[-1] == pytest.approx(1e-9)
    assert rel.max() <= 1e-4


def test_uniform_easy_axis_is_fixed_point_without_dmi():
    g = mm.MagnetizationGrid.uniform()
    out = mm.llg_step(g, P.replace(D=0.0))
    np.testing.assert_array_equal(out.m, g.m)
    down = mm.MagnetizationGrid.uniform(direction=(0, 0, -1))
    np.testing.assert_array_equal(mm.llg_step(down, P.replace(D=0.0)).m, down.m)


def test_uniform_state_interior_unchanged_with_dmi():
    # the DMI edge condition cants the boundary; one RK4 step reaches at most 4 cells in
    g = mm.MagnetizationGrid.uniform()
    out = mm.llg_step(g, P)
    np.testing.assert_array_equal(out.m[4:-4, 4:-4], g.m[4:-4, 4:-4])
    assert np.abs(out.m[0] - g.m[0]).max() > 0


def test_step_rejects_unstable_dt():
    g = mm.MagnetizationGrid.uniform()
    bound = mm.stability_bound(g.cell, P, shape=(g.nx, g.ny, g.nz))
    assert 25e-15 < bound
    with pytest.raises(StabilityError) as info:
        mm.llg_step(g, P, dt=1.01 * bound)
    assert info.value.bound == pytest.approx(bound)


def test_input_grid_not_mutated():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, p=P)
    before = g.m.copy()
    mm.llg_step(g, P, J=1e11)
    np.testing.assert_array_equal(g.m, before)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3e12, 3e12))
def test_norm_preserved_after_step(seed, J):
    rng = np.random.default_rng(seed)
    g = mm.MagnetizationGrid.uniform()
    v = rng.normal(size=g.m.shape)
    g.m = v / np.linalg.norm(v, axis=-1, keepdims=True)
    bound = mm.stability_bound(g.cell, P, J=J, shape=(g.nx, g.ny, g.nz))
    out = mm.llg_step(g, P, J=J, dt=min(25e-15, bound))
    assert out.norm_error() <= 1e-6


def test_compiled_step_matches_reference():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 45e-9, p=P)
    c = mm._to_c(g.m)
    for J in (0.0, 2e12):
        a = mm._rk4_reference(c, g.cell, P, J, 25e-15, None, mm.ALL_TERMS, P.alpha)
        b = mm._rk4(c, g.cell, P, J, 25e-15, None, mm.ALL_TERMS, P.alpha)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


def test_per_cell_field_uses_reference_path():
    g = single_cell([0.0, 0.0, 1.0])
    h = np.zeros(g.m.shape)
    h[..., 0] = 1e4
    out = mm.llg_step(g, P.replace(D=0.0), h_ext=h, terms=())
    assert out.m[0, 0, 0, 1] < 0  # -m x H with m = z, H = x points along -y
    same = mm.llg_step(g, P.replace(D=0.0), h_ext=[1e4, 0, 0], terms=())
    np.testing.assert_allclose(out.m, same.m, rtol=0, atol=1e-15)


def test_bit_identical_reruns():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, p=P)
    a, _, _ = mm.integrate(g, P, 5e11, 20e-12)
    b, _, _ = mm.integrate(g, P, 5e11, 20e-12)
    assert a.m.tobytes() == b.m.tobytes()


# -- walls ---------------------------------------------------------------------------

def test_seed_symmetric_wall_has_zero_mean():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, p=P)
    assert abs(g.m[..., 2].mean()) <= 0.02
    assert g.m[0, 0, 0, 2] < 0 < g.m[-1, 0, 0, 2]


def test_seed_quarter_wall_mean():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 30e-9, p=P)
    assert g.m[..., 2].mean() == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("pos", [0.0, -1e-9, 120e-9, 200e-9])
def test_seed_out_of_strip(pos):
    with pytest.raises(ValueError):
        mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), pos)


def test_seed_chirality_sign():
    left = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, "left", p=P)
    right = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, "right", p=P)
    assert left.m[15, 0, 0, 0] < 0 < right.m[15, 0, 0, 0]


def test_relax_uniform_is_immediate():
    g, steps = mm.relax(mm.MagnetizationGrid.uniform(), P.replace(D=0.0), return_steps=True)
    assert steps <= 1
    np.testing.assert_array_equal(g.m, mm.MagnetizationGrid.uniform().m)


def test_relax_reports_nonconvergence():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 60e-9, "right", p=P)
    with pytest.raises(NonConvergenceError) as info:
        mm.relax(g, P, max_steps=100, check_every=50)
    assert info.value.torque > mm.RELAX_TORQUE_TOL * P.Ms


def test_relaxed_wall_stays_centred_and_neel(relaxed_centre):
    g = relaxed_centre
    assert abs(mm.wall_position(g) - 60e-9) <= 2 * g.cell[0]
    assert mm.max_torque(g, P) < mm.RELAX_TORQUE_TOL * P.Ms
    state = mm.fit_wall(g)
    assert state.chirality == "left"
    assert state.width == pytest.approx(7.6e-9, rel=0.30)
    core = g.m[int(state.position // g.cell[0])].mean(axis=(0, 1))
    assert abs(core[0]) > 5 * abs(core[1])


# -- wall position -------------------------------------------------------------------

def test_wall_position_uniform_states():
    L = 120e-9
    assert mm.wall_position(mm.MagnetizationGrid.uniform(direction=(0, 0, 1))) == pytest.approx(L)
    assert mm.wall_position(mm.MagnetizationGrid.uniform(direction=(0, 0, -1))) == pytest.approx(0.0, abs=1e-18)


@pytest.mark.parametrize("x0", [30e-9, 45e-9, 60e-9, 90e-9])
def test_wall_position_agrees_with_zero_crossing(x0):
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), x0, p=P)
    assert mm.wall_position(g) == pytest.approx(x0, abs=4e-9)
    assert mm.zero_crossing(g) == pytest.approx(x0, abs=4e-9)


def test_wall_position_mirrored_orientation():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 30e-9, p=P)
    g.m[..., 2] *= -1
    assert mm.wall_position(g) == pytest.approx(30e-9, abs=4e-9)


def test_relaxed_wall_position_cross_check(relaxed_centre):
    assert mm.wall_position(relaxed_centre) == pytest.approx(mm.zero_crossing(relaxed_centre), abs=4e-9)


def test_multi_domain_is_ambiguous():
    g = mm.seed_neel_wall(mm.MagnetizationGrid.uniform(), 30e-9, p=P)
    g.m[20:, ..., 2] = -1.0
    with pytest.raises(AmbiguousStateError):
        mm.wall_position(g)


# -- motion and calibration ----------------------------------------------------------

def test_direction_follows_current(relaxed_centre):
    fwd = mm.run_wall_motion(relaxed_centre, P, 4e11, duration=0.15e-9)
    back = mm.run_wall_motion(relaxed_centre, P, -4e11, duration=0.15e-9)
    assert fwd.velocity > 0 > back.velocity
    assert fwd.velocity == pytest.approx(-back.velocity, rel=0.05)
    assert not fwd.truncated and not fwd.nucleated


def test_fixed_frame_run_truncates_at_edge():
    start = mm.relaxed_wall(P, position=60e-9)
    run = mm.run_wall_motion(start, P, 1.5e12, duration=0.5e-9, moving_frame=False)
    assert run.truncated
    assert run.times[-1] < 0.5e-9


def test_zero_current_curve_point():
    (run,) = mm.velocity_curve(P, [0.0])
    assert run.velocity == 0.0


def _synthetic_curve(mu=5e-10, vs=400.0):
    J = np.array([0.5e11, 1e11, 2e11, 3e11, 2e12, 3e12, 4e12, 5e12])
    v = np.minimum(mu * J, vs)
    return list(zip(J, v))


def test_calibration_on_synthetic_curve():
    rec = mm.calibrate_mobility(P, _synthetic_curve())
    assert rec.mu_dw == pytest.approx(5e-10, rel=1e-12)
    assert rec.v_sat == pytest.approx(400.0, rel=1e-12)
    assert rec.cross_section == pytest.approx(20e-9 * 3e-9)
    assert rec.J_at(25e-6) == pytest.approx(25e-6 / 60e-18)
    assert rec.velocity(-1.0) == -400.0
    assert rec.velocity(6e-6) == pytest.approx(5e-10 * 1e11)


def test_calibration_needs_three_linear_points():
    with pytest.raises(CalibrationError):
        mm.calibrate_mobility(P, [(1e11, 50.0), (1e12, 400.0), (2e12, 410.0)])


def test_calibration_skips_nucleated_runs():
    pts = _synthetic_curve()
    bad = mm.WallRun(J=6e12, velocity=900.0, truncated=True, times=np.zeros(2), positions=np.zeros(2),
                     nucleated=True)
    assert mm.calibrate_mobility(P, pts + [bad]) == mm.calibrate_mobility(P, pts)


def test_calibration_record_round_trip(tmp_path):
    rec = mm.calibrate_mobility(P, _synthetic_curve())
    path = tmp_path / "cal.txt"
    rec.save(path)
    assert mm.CalibrationRecord.load(path) == rec
    path.write_text(path.read_text() + "bogus = 1\n")
    with pytest.raises(CalibrationError):
        mm.CalibrationRecord.load(path)
