import math

import numpy as np
import pytest

from detectlab.core import (
    AbsorbingBoundary,
    Dirichlet,
    GaussianPacketSpec,
    ImaginaryPotential,
    PhysicalConstants,
    Robin,
)
from detectlab.eigen import SearchWindow, hard_mode, soft_mode, wall_factor
from detectlab.limits import (
    ConvergenceReport,
    EvolutionNumerics,
    fit_loglog_slope,
    make_hard_sequence,
    report_to_dict,
    sweep_allcock,
    sweep_ck,
    sweep_ck_dirichlet,
    sweep_fII,
    sweep_finite_interval_roots,
    sweep_rhoT,
    write_convergence_csv,
)


def test_make_hard_sequence_values():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 3)
    assert seq.kappa == 1.0
    vs = [v for v, _ in seq.entries]
    assert vs == [10.0, 100.0, 1000.0]
    # v L = hbar^2 kappa / (2 m) held exactly along the sequence
    for v, L in seq.entries:
        assert v * L == pytest.approx(0.5, rel=1e-15)
    c = PhysicalConstants(hbar=2.0, mass=0.5)
    seq2 = make_hard_sequence(1.0, 10.0, 10.0, 2, c)
    assert seq2.entries[0][1] == pytest.approx(4.0 * 1.0 / 10.0)


def test_make_hard_sequence_validation():
    with pytest.raises(ValueError):
        make_hard_sequence(0.0, 10.0, 10.0, 3)
    with pytest.raises(ValueError):
        make_hard_sequence(1.0, 10.0, 1.0, 3)
    with pytest.raises(ValueError):
        make_hard_sequence(1.0, 10.0, 10.0, 1)
    with pytest.raises(ValueError):
        make_hard_sequence(1.0, -10.0, 10.0, 3)


def _oracle_ck_error(k, kappa, v, L):
    # Closed forms rebuilt from scratch: reflecting wall, natural units.
    lam = np.sqrt(complex(k * k, 2.0 * v))
    if lam.real < 0:
        lam = -lam
    F = np.exp(2j * lam * L)
    c_soft = ((k - lam) + (k + lam) * F) / ((k + lam) + (k - lam) * F)
    c_hard = (k - kappa) / (k + kappa)
    return abs(c_soft - c_hard)


def test_sweep_ck_slope_minus_one():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 6)
    rep = sweep_ck(2.0, seq)
    assert rep.parameter_name == "v"
    assert list(rep.parameters) == [v for v, _ in seq.entries]
    for err, (v, L) in zip(rep.errors, seq.entries):
        assert err == pytest.approx(_oracle_ck_error(2.0, 1.0, v, L), rel=1e-12)
    assert rep.verdict == "converging"
    assert np.all(np.diff(rep.errors) < 0)
    assert rep.slope == pytest.approx(-1.0, abs=0.05)
    assert rep.aux["kappa_eff_dist"][-1] < 1e-4


def test_sweep_ck_slope_stable_across_parameters():
    seq = make_hard_sequence(1.3, 37.0, 6.1, 7)
    rep = sweep_ck(0.7, seq)
    assert rep.slope == pytest.approx(-1.0, abs=0.05)
    assert rep.verdict == "converging"


def test_sweep_ck_perfect_absorption_point():
    # k = kappa with nu = 0 gives c_hard = 0, so the error is |c_soft|
    seq = make_hard_sequence(1.5, 20.0, 8.0, 5)
    rep = sweep_ck(1.5, seq)
    for err, (v, L) in zip(rep.errors, seq.entries):
        assert err == pytest.approx(abs(soft_mode(1.5, v, L).c), rel=1e-12)
    assert rep.errors[-1] < 1e-3


def test_sweep_ck_kappa_eff_identity():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 4)
    rep = sweep_ck(2.0, seq)
    for i, (v, L) in enumerate(seq.entries):
        mode = soft_mode(2.0, v, L)
        F = wall_factor(mode.lam, L, mode.model.right_wall)
        ke = mode.lam * (1 - F) / (1 + F)
        assert rep.aux["kappa_eff_re"][i] == pytest.approx(ke.real, rel=1e-12)
        assert rep.aux["kappa_eff_im"][i] == pytest.approx(ke.imag, abs=1e-12)
        # c rewrites as the hard formula with the effective parameter
        assert mode.c == pytest.approx((2.0 - ke) / (2.0 + ke), rel=1e-10)


def test_sweep_ck_rejects_dirichlet_wall():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 3)
    with pytest.raises(ValueError, match="sweep_ck_dirichlet"):
        sweep_ck(2.0, seq, wall=Dirichlet())


def test_sweep_ck_robin_wall_targets_shifted_condition():
    # A Robin wall survives the limit as a bias nu = alpha in the
    # boundary condition, so errors against the nu = 0 target stall
    # while the shifted hard mode is approached.
    k, alpha = 2.0, 5.0
    seq = make_hard_sequence(1.0, 10.0, 10.0, 7)
    rep = sweep_ck(k, seq, wall=Robin(alpha))
    assert rep.verdict == "non-converging"
    assert rep.errors[-1] > 1e-2
    shifted = hard_mode(k, 1.0, nu=alpha)
    big = soft_mode(k, 1e8, 0.5 / 1e8, Robin(alpha))
    assert abs(big.c - shifted.c) < 1e-3


def test_sweep_ck_dirichlet_saturates():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 6)
    rep = sweep_ck_dirichlet(2.0, seq)
    assert rep.verdict == "non-converging"
    # the reflection amplitude heads to -1: no absorption survives
    assert rep.aux["dist_to_minus_one"][-1] < 0.05
    assert rep.errors[-1] > 0.5
    assert abs(rep.errors[-1] - 2 * 2.0 / (2.0 + 1.0)) < 0.05


def test_sweep_fII_interior_weight_vanishes():
    seq = make_hard_sequence(1.0, 10.0, 10.0, 6)
    rep = sweep_fII(2.0, seq)
    assert np.all(np.diff(rep.errors) < 0)
    assert rep.errors[-1] < 1e-3
    assert rep.aux["a_dist"][-1] < 1e-2
    assert rep.aux["b_dist"][-1] < 1e-2
    for i in range(len(rep.errors)):
        bound = (math.sqrt(rep.aux["a_part"][i]) + math.sqrt(rep.aux["b_part"][i])) ** 2
        assert rep.errors[i] <= bound + 1e-9


def test_sweep_allcock_totally_reflecting_limit():
    rep = sweep_allcock(2.0, (1.0, 1e2, 1e4, 1e6))
    assert np.all(np.diff(rep.errors) < 0)
    assert np.all(np.diff(rep.aux["absorbed"]) < 0)
    assert rep.errors[-1] < 5e-3
    assert rep.aux["absorbed"][-1] < 5e-3
    # oracle at v = 1e6: c = (k - lam) / (k + lam) directly
    lam = np.sqrt(complex(4.0, 2e6))
    c = (2.0 - lam) / (2.0 + lam)
    assert rep.errors[-1] == pytest.approx(abs(c + 1.0), rel=1e-12)
    # the incoming-region profile is pinned near the standing wave 2i sin(kx)
    assert rep.aux["fI_dist"][-1] == pytest.approx(rep.errors[-1], rel=1e-6)


def test_fit_loglog_slope_recovers_power():
    p = np.array([1.0, 10.0, 100.0, 1000.0, 10000.0])
    s, r = fit_loglog_slope(p, 3.0 * p**-0.5)
    assert s == pytest.approx(-0.5, abs=1e-12)
    assert r < 1e-12
    assert fit_loglog_slope(p[:3], p[:3]) == (None, None)
    assert fit_loglog_slope(p, np.array([1.0, 0.1, 0.0, 0.1, 1.0])) == (None, None)


def test_interval_root_sweep_is_informational():
    window = SearchWindow(0.2, 3.6, -0.9, 0.05, n_re=25, n_im=11)
    seq = make_hard_sequence(1.0, 100.0, 10.0, 2)
    rep = sweep_finite_interval_roots(math.pi, seq, window)
    assert rep.verdict is None
    assert rep.parameter_name == "v"
    assert len(rep.errors) == 2
    assert rep.errors[1] < rep.errors[0] < 0.2
    assert all(n >= 3 for n in rep.aux["n_roots"])
    r = ConvergenceReport("x", "v", np.array([1.0]), np.array([1.0]))
    assert r.slope is None and r.verdict is None


def test_sweep_rhoT_decreasing(tmp_path):
    seq = make_hard_sequence(1.0, 5.0, 4.0, 2)
    numerics = EvolutionNumerics(x_min=-6.0, dx=0.00625, t_end=2.5)
    packet = GaussianPacketSpec(-3.0, 0.3, 2.0)
    rep = sweep_rhoT(packet, seq, numerics)
    assert rep.parameter_name == "v"
    assert len(rep.errors) == 2
    assert rep.errors[1] < rep.errors[0]
    assert rep.aux["sup_over_peak"][1] < rep.aux["sup_over_peak"][0]
    assert rep.aux["abr_peak"][0] > 0
    # deterministic: a second run reproduces the numbers exactly
    rep2 = sweep_rhoT(packet, seq, numerics)
    assert list(rep.errors) == list(rep2.errors)
    path = tmp_path / "sweep.csv"
    write_convergence_csv(rep, path)
    header = path.read_text().splitlines()[0]
    assert header.startswith("parameter,error")
    d = report_to_dict(rep)
    assert d["parameter_name"] == "v" and len(d["errors"]) == 2


def test_sweep_rhoT_refuses_coarse_grid():
    seq = make_hard_sequence(1.0, 5.0, 4.0, 2)  # L_min = 0.025
    numerics = EvolutionNumerics(x_min=-6.0, dx=0.05, t_end=1.0)
    with pytest.raises(ValueError, match="dx"):
        sweep_rhoT(GaussianPacketSpec(-3.0, 0.3, 2.0), seq, numerics)


def test_evolution_numerics_validation():
    with pytest.raises(ValueError):
        EvolutionNumerics(x_min=-6.0, dx=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        EvolutionNumerics(x_min=-6.0, dx=0.01, t_end=-1.0)
    with pytest.raises(ValueError):
        EvolutionNumerics(x_min=-6.0, dx=0.01, t_end=1.0, dt_hard=0.0)
