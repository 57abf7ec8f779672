import math

import numpy as np
import pytest

from detectlab.core import (
    AbsorbingBoundary,
    GaussianPacketSpec,
    Grid,
    ImaginaryPotential,
    NATURAL_UNITS,
    Neumann,
    PhysicalConstants,
    Robin,
    WaveState,
    grid_for_domain,
    inner_product,
    make_gaussian_packet,
    norm_squared,
    trapezoid_weights,
)


def test_constants_defaults_and_validation():
    assert NATURAL_UNITS.hbar == 1.0 and NATURAL_UNITS.mass == 1.0
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(mass=-1.0)


def test_detector_spec_validation():
    assert ImaginaryPotential(1.0, math.inf).L == math.inf
    with pytest.raises(ValueError):
        ImaginaryPotential(-1.0, 1.0)
    with pytest.raises(ValueError):
        ImaginaryPotential(1.0, 0.0)
    with pytest.raises(ValueError):
        AbsorbingBoundary(0.0)
    assert AbsorbingBoundary(2.0).nu == 0.0
    with pytest.raises(ValueError):
        Robin(math.nan)


def test_grid_nodes_and_lookup():
    grid = Grid(-2.0, 1.0, 7)
    assert grid.dx == pytest.approx(0.5)
    assert np.array_equal(grid.x, np.linspace(-2.0, 1.0, 7))
    assert not grid.x.flags.writeable
    assert grid.index_at(0.0) == 4
    assert grid.index_at(1.0) == 6
    with pytest.raises(ValueError):
        grid.index_at(0.3)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 2)


def test_grid_for_domain_snaps_left_edge_only():
    grid = grid_for_domain(-1.03, 0.25, 0.5)
    assert grid.x_max == 0.5
    assert grid.x_min <= -1.03
    ratio = (grid.x_max - grid.x_min) / 0.25
    assert abs(ratio - round(ratio)) < 1e-12
    # 0.3 does not divide the distance from 0 to the right edge
    with pytest.raises(ValueError):
        grid_for_domain(-2.0, 0.3, 0.5, require_node_at=0.0)
    grid = grid_for_domain(-2.0, 0.125, 0.5, require_node_at=0.0)
    assert grid.index_at(0.0) == grid.n - 5


def test_wave_state_is_defensive():
    grid = Grid(-1.0, 1.0, 5)
    src = np.ones(5, dtype=complex)
    state = WaveState(grid, src)
    src[0] = 99.0
    assert state.amplitudes[0] == 1.0
    assert not state.amplitudes.flags.writeable
    with pytest.raises(ValueError):
        WaveState(grid, np.ones(4))


def test_trapezoid_weights_and_norm():
    grid = Grid(0.0, 1.0, 101)
    w = trapezoid_weights(grid)
    assert w[0] == w[-1] == grid.dx / 2
    assert np.all(w[1:-1] == grid.dx)
    state = WaveState(grid, np.ones(101, dtype=complex))
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-14)


def test_inner_product_properties():
    rng = np.random.default_rng(3)
    grid = Grid(-3.0, 2.0, 64)
    a = WaveState(grid, rng.normal(size=64) + 1j * rng.normal(size=64))
    b = WaveState(grid, rng.normal(size=64) + 1j * rng.normal(size=64))
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    assert inner_product(a, a).real == pytest.approx(norm_squared(a))
    assert abs(inner_product(a, a).imag) < 1e-14
    other = WaveState(Grid(-3.0, 2.0, 65), np.zeros(65))
    with pytest.raises(ValueError):
        inner_product(a, other)


def test_gaussian_packet_normalized_and_guarded():
    grid = grid_for_domain(-20.0, 0.01, 0.0)
    state = make_gaussian_packet(grid, GaussianPacketSpec(-10.0, 1.0, 2.0))
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-12)
    assert state.time == 0.0
    # |psi|^2 peaks at x0
    peak = grid.x[np.argmax(np.abs(state.amplitudes))]
    assert peak == pytest.approx(-10.0, abs=grid.dx)
    with pytest.raises(ValueError):
        make_gaussian_packet(grid, GaussianPacketSpec(-0.5, 1.0, 0.0))
    with pytest.raises(ValueError):
        make_gaussian_packet(grid, GaussianPacketSpec(-19.5, 1.0, 0.0))
    with pytest.raises(ValueError):
        GaussianPacketSpec(0.0, -1.0, 0.0)


def test_gaussian_packet_matches_analytic_norm():
    # Trapezoid rule on a smooth compactly supported integrand is
    # spectrally accurate; the sampled norm must sit at rounding level.
    grid = grid_for_domain(-30.0, 0.05, 0.0)
    spec = GaussianPacketSpec(-15.0, 1.3, 0.7)
    state = make_gaussian_packet(grid, spec)
    x = grid.x
    analytic = (2 * math.pi * spec.sigma**2) ** (-0.25) * np.exp(
        -((x - spec.x0) ** 2) / (4 * spec.sigma**2) + 1j * spec.k0 * x
    )
    ratio = np.abs(state.amplitudes[grid.index_at(-15.0)]) / abs(
        analytic[grid.index_at(-15.0)]
    )
    assert ratio == pytest.approx(1.0, abs=1e-10)
