import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import mirror_for_sql
from optocool.budget import NoiseCurve, total_motion_psd
from optocool.feedback import TrapSpec
from optocool.optimize import (
    CoolingSystem,
    SearchSpace,
    _wrap_half_pi,
    balance_amplitude,
    band_grid,
    evaluate_point,
    optimal_amplitude,
    optimal_angle,
    optimize_point,
    search,
    sweep_phi_r,
    sweep_trap,
)
from optocool.plants import LossBudget, SqueezerConfig
from optocool.presets import preset_params
from optocool.qnoise import MotionMetrics, motion_metrics
from optocool.twophoton import ScalarResponse, db_to_squeeze


@pytest.fixture(scope="module")
def aplus():
    return CoolingSystem("rse", preset_params("aplus"))


@pytest.fixture(scope="module")
def trap37():
    return TrapSpec.from_hz(37.0, 1.2)


def test_band_grid_centre(trap37):
    g = band_grid(trap37, 200)
    assert len(g) == 201 and g.omega[100] == trap37.Omega_eff


@given(st.floats(-20, 20))
def test_wrap_half_pi(phi):
    w = _wrap_half_pi(phi)
    assert -math.pi / 2 < w <= math.pi / 2
    assert math.sin(w - phi) == pytest.approx(0.0, abs=1e-9)


def test_angle_for_mirror_table_point():
    system = CoolingSystem("mirror", mirror_for_sql(65.0))
    trap = TrapSpec.from_hz(37.0, 1.2)
    m = motion_metrics(system.loop(trap, band_grid(trap)))
    assert math.degrees(optimal_angle(m, trap)) == pytest.approx(-70.9, abs=0.05)


def test_angle_for_aplus(aplus, trap37):
    m = motion_metrics(aplus.loop(trap37, band_grid(trap37)))
    assert math.degrees(optimal_angle(m, trap37)) == pytest.approx(-70.0, abs=3.0)


def test_angle_without_rotation(trap37):
    g = band_grid(trap37)
    z = ScalarResponse(np.zeros(len(g)), g)
    m = MotionMetrics(theta=z, Xi=z, Xi_prime=z, etaGamma=z, lossGamma=z)
    assert optimal_angle(m, trap37) == 0.0


def test_angle_requires_grid_coverage(aplus, trap37):
    m = motion_metrics(aplus.loop(trap37, band_grid(trap37)))
    with pytest.raises(ValueError):
        optimal_angle(m, TrapSpec.from_hz(200.0, 1.2))


def test_antisqueezing_null(aplus, trap37):
    g = band_grid(trap37)
    loop = aplus.loop(trap37, g)
    m = motion_metrics(loop)
    phi = optimal_angle(m, trap37)
    b = total_motion_psd(loop, SqueezerConfig(6.0, phi))
    k = len(g) // 2
    assert b["quantum_antisqueezing"].values[k] <= 1e-6 * b["quantum_injected_squeezing"].values[k]


def test_balance_without_dephasing():
    r, flag = balance_amplitude(0.0, db_to_squeeze(20.0))
    assert flag and r == pytest.approx(db_to_squeeze(20.0))


def test_balance_inverts_synthetic_dephasing():
    r_star = 0.5
    Xi_p = math.exp(-4 * r_star) / (1 + math.exp(-4 * r_star))
    r, flag = balance_amplitude(Xi_p)
    assert not flag and r == pytest.approx(0.5, abs=1e-6)


@given(st.floats(1e-6, 0.49))
def test_balance_equation_holds(Xi_p):
    r, flag = balance_amplitude(Xi_p, 10.0)
    if not flag:
        assert (1 - Xi_p) * math.exp(-2 * r) == pytest.approx(Xi_p * math.exp(2 * r), rel=1e-9)


def test_balance_at_half():
    assert balance_amplitude(0.5) == (0.0, True)


def test_amplitude_for_aplus(aplus, trap37):
    m = motion_metrics(aplus.loop(trap37, band_grid(trap37)))
    phi = optimal_angle(m, trap37)
    r_db, flag = optimal_amplitude(m, SqueezerConfig(phi=phi), trap37)
    assert not flag and r_db == pytest.approx(6.0, abs=1.5)


def test_phase_noise_lowers_amplitude(trap37):
    quiet = optimize_point(CoolingSystem("rse", preset_params("aplus")), trap37)
    noisy = optimize_point(CoolingSystem("rse", preset_params("aplus"), phi_rms=0.03), trap37)
    assert noisy.r_db < quiet.r_db and noisy.n_bar > quiet.n_bar


def test_evaluate_matches_optimize(aplus, trap37):
    ev = optimize_point(aplus, trap37)
    assert evaluate_point(aplus, trap37, ev.phi, ev.r_db).n_bar == pytest.approx(ev.n_bar, rel=1e-12)


def test_search_single_point(aplus, trap37):
    space = SearchSpace(trap37.Omega_eff, trap37.Omega_eff, 1, 1.2, 1.2, 1)
    opt = search(aplus, space)
    ev = optimize_point(aplus, trap37)
    assert opt.trap == trap37 and opt.n_bar == ev.n_bar and opt.phi == ev.phi and opt.evaluated == 1


def test_search_is_minimum_and_tracks_rotation(aplus):
    space = SearchSpace(2 * math.pi * 20, 2 * math.pi * 60, 9, 0.8, 3.0, 6)
    opt = search(aplus, space)
    rows = sweep_trap(aplus, space.omegas(), space.qs())
    assert len(rows) == 54
    assert all(opt.n_bar <= n for _, _, n in rows)
    m = motion_metrics(aplus.loop(opt.trap, band_grid(opt.trap)))
    theta = float(np.interp(opt.trap.Omega_eff, m.grid.omega, m.theta.values))
    assert math.degrees(abs(opt.phi + theta)) <= 5.0


def test_search_counts_failures(aplus):
    # Q = 0.5 has no thermometry band
    space = SearchSpace(2 * math.pi * 30, 2 * math.pi * 40, 2, 0.5, 1.0, 2)
    opt = search(aplus, space)
    assert opt.failed == 2 and opt.evaluated == 2


@pytest.mark.parametrize(
    "kwargs",
    [dict(Omega_min=0.0), dict(Q_min=2.0, Q_max=1.0), dict(n_Q=0), dict(n_Omega=1), dict(r_max_db=0.0)],
)
def test_search_space_rejects(kwargs):
    with pytest.raises(ValueError):
        SearchSpace(**kwargs)


def test_sweep_phi_r_layout(aplus, trap37):
    phis = np.radians([-80.0, -70.0, -60.0])
    rows = sweep_phi_r(aplus, trap37, phis, [0.0, 6.0])
    assert [(round(math.degrees(p)), r) for p, r, _ in rows] == [
        (-80, 0.0), (-80, 6.0), (-70, 0.0), (-70, 6.0), (-60, 0.0), (-60, 6.0)]
    assert all(n >= 0 for *_, n in rows)
    # vacuum does not depend on the angle
    assert rows[0][2] == pytest.approx(rows[2][2], rel=1e-12)


def test_classical_noise_raises_occupation(trap37):
    curve = NoiseCurve("force", np.array([1.0, 1e3]), np.array([1e-17, 1e-17]), "f")
    base = optimize_point(CoolingSystem("rse", preset_params("aplus")), trap37)
    noisy = optimize_point(CoolingSystem("rse", preset_params("aplus"), forces=(curve,)), trap37)
    assert noisy.n_bar > base.n_bar


def test_losses_raise_occupation(trap37):
    base = optimize_point(CoolingSystem("rse", preset_params("aplus")), trap37)
    lossy = optimize_point(CoolingSystem("rse", preset_params("aplus"), LossBudget(eps_ro=0.3)), trap37)
    assert lossy.n_bar > base.n_bar


def test_cooling_system_checks():
    with pytest.raises(TypeError):
        CoolingSystem("mirror", preset_params("aplus"))
    with pytest.raises(ValueError):
        CoolingSystem("membrane", preset_params("aplus"))


def test_oscillator_mass_defaults(trap37):
    assert CoolingSystem("rse", preset_params("aplus")).oscillator(trap37).mu == 10.0
    assert CoolingSystem("mirror", mirror_for_sql(65.0)).oscillator(trap37).mu == 10.0
    assert CoolingSystem("rse", preset_params("aplus"), mu=3.0).oscillator(trap37).mu == 3.0
