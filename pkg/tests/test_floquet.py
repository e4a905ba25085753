"""Bloch fibers, quadrature ground truth, band edges, exact jumps and the
moment cross-check."""

from fractions import Fraction

import numpy as np
import pytest

from magspec.floquet import (
    BandEdgeError,
    OracleUnavailableError,
    band_edges,
    bloch_fiber,
    exact_ids_from_jumps,
    fiber_grid_eigs,
    grid_ids,
    ids_oracle,
    jump_oracle,
    magnetic_cell,
    merged_intervals,
    moment_crosscheck,
)
from magspec.lattice import (
    isolated_cells,
    line_graph,
    square_lattice,
    triangle_cells,
)
from magspec.operators import (
    harper_dml,
    hofstadter_weights,
    uniform_weights,
    zero_operator,
)


def square_cell(alpha, operator="dml"):
    g = square_lattice()
    w = hofstadter_weights(g, alpha)
    H, D = harper_dml(g, w)
    op = D if operator == "dml" else H
    return magnetic_cell(g, op, alpha)


class TestMagneticCell:
    def test_flux_free_cell_is_scalar(self):
        cell = square_cell(Fraction(0))
        assert cell.q == 1 and cell.dim == 1

    def test_half_flux_cell(self):
        cell = square_cell(Fraction(1, 2))
        assert cell.q == 2 and cell.dim == 2

    def test_irrational_flux_rejected(self):
        g = square_lattice()
        w = hofstadter_weights(g, 0.5 * (np.sqrt(5) - 1))
        _, D = harper_dml(g, w)
        with pytest.raises(OracleUnavailableError):
            magnetic_cell(g, D, w.flux)

    def test_missing_flux_rejected(self):
        g = line_graph()
        _, D = harper_dml(g, uniform_weights(g))
        with pytest.raises(OracleUnavailableError):
            magnetic_cell(g, D, None)


class TestBlochFiber:
    def test_flux_free_symbol(self):
        # scalar symbol 4 - 2 cos k1 - 2 cos k2 of the lattice Laplacian
        cell = square_cell(Fraction(0))
        for k in ([0.3, 1.1], [2.0, 0.0], [np.pi, np.pi / 2]):
            H = bloch_fiber(cell, k)
            expected = 4.0 - 2.0 * np.cos(k[0]) - 2.0 * np.cos(k[1])
            assert H.shape == (1, 1)
            assert H[0, 0] == pytest.approx(expected, abs=1e-14)

    def test_half_flux_closed_form(self):
        # 2x2 fiber eigenvalues 4 -+ 2 sqrt(cos^2(k1/2) + cos^2 k2); the
        # first momentum is conjugate to the doubled cell, which rescales
        # k1 but leaves band sets and integrals unchanged
        cell = square_cell(Fraction(1, 2))
        rng = np.random.default_rng(0)
        for _ in range(25):
            k = rng.uniform(0, 2 * np.pi, size=2)
            evals = np.linalg.eigvalsh(bloch_fiber(cell, k))
            root = 2.0 * np.sqrt(np.cos(k[0] / 2) ** 2 + np.cos(k[1]) ** 2)
            assert evals == pytest.approx([4.0 - root, 4.0 + root], abs=1e-12)

    def test_fiber_hermitian_residual(self):
        cell = square_cell(Fraction(1, 3))
        rng = np.random.default_rng(1)
        for _ in range(20):
            H = bloch_fiber(cell, rng.uniform(0, 2 * np.pi, size=2))
            assert np.abs(H - H.conj().T).max() <= 1e-14

    def test_fiber_continuity(self):
        cell = square_cell(Fraction(1, 3))
        k = np.array([0.7, 1.9])
        e1 = np.linalg.eigvalsh(bloch_fiber(cell, k))
        e2 = np.linalg.eigvalsh(bloch_fiber(cell, k + 1e-7))
        assert np.abs(e1 - e2).max() < 1e-5


class TestIdsOracle:
    def test_flux_free_half_filling(self):
        cell = square_cell(Fraction(0))
        est = ids_oracle(cell, 4.0, N=128)
        assert est.value == pytest.approx(0.5, abs=5e-3)
        assert abs(est.coarse - est.fine) < est.error_bound

    def test_half_flux_half_filling_at_band_touching(self):
        # lambda = 4 is a band edge (the two bands touch), so the default
        # refuses it; with the override the symmetric value 1/2 is exact
        cell = square_cell(Fraction(1, 2))
        with pytest.raises(BandEdgeError):
            ids_oracle(cell, 4.0, N=64)
        est = ids_oracle(cell, 4.0, N=64, allow_band_edge=True)
        assert est.value == pytest.approx(0.5, abs=1e-12)

    def test_below_spectrum(self):
        cell = square_cell(Fraction(1, 3))
        assert ids_oracle(cell, -0.5, N=32).value == 0.0

    def test_above_spectrum_saturates_at_orbit_count(self):
        cell = square_cell(Fraction(1, 3))
        assert ids_oracle(cell, 9.0, N=32).value == 1.0

    def test_self_consistency_bound(self):
        cell = square_cell(Fraction(1, 3))
        for lam in (1.5, 2.6, 3.8, 4.9, 6.4):
            est = ids_oracle(cell, lam, N=64)
            assert abs(est.coarse - est.fine) < est.error_bound

    def test_monotone_in_lambda(self):
        cell = square_cell(Fraction(1, 3))
        values = [grid_ids(cell, lam, 64) for lam in np.linspace(-1, 9, 60)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_small_grid_rejected(self):
        cell = square_cell(Fraction(0))
        with pytest.raises(ValueError):
            ids_oracle(cell, 4.0, N=4)


class TestBandEdges:
    def test_flux_free_single_band(self):
        cell = square_cell(Fraction(0))
        bands = band_edges(cell, 64)
        assert len(bands) == 1
        assert bands[0].lo == pytest.approx(0.0, abs=1e-8)
        assert bands[0].hi == pytest.approx(8.0, abs=1e-8)

    def test_half_flux_edges(self):
        cell = square_cell(Fraction(1, 2))
        bands = band_edges(cell, 64)
        lo, hi = 4.0 - 2.0 * np.sqrt(2.0), 4.0 + 2.0 * np.sqrt(2.0)
        assert bands[0].lo == pytest.approx(lo, abs=1e-4)
        assert bands[-1].hi == pytest.approx(hi, abs=1e-4)
        merged = merged_intervals(bands)
        assert merged[0][0] >= lo - 1e-4 and merged[-1][1] <= hi + 1e-4

    def test_line_uniform_band(self):
        g = line_graph()
        _, D = harper_dml(g, uniform_weights(g))
        cell = magnetic_cell(g, D, Fraction(0))
        bands = band_edges(cell, 64)
        assert len(bands) == 1
        assert bands[0].lo == pytest.approx(0.0, abs=1e-8)
        assert bands[0].hi == pytest.approx(4.0, abs=1e-8)

    def test_third_flux_has_gaps(self):
        cell = square_cell(Fraction(1, 3))
        merged = merged_intervals(band_edges(cell, 64))
        assert len(merged) == 3


class TestJumpOracle:
    def test_triangle_exact_jumps(self):
        g = triangle_cells()
        _, D = harper_dml(g, uniform_weights(g))
        jumps = jump_oracle(g, D)
        lams = [lam for lam, _ in jumps]
        mults = [d for _, d in jumps]
        assert lams == pytest.approx([0.0, 3.0], abs=1e-12)
        assert mults == [Fraction(1), Fraction(2)]

    def test_isolated_vertices_zero_operator(self):
        g = isolated_cells(1, 1)
        jumps = jump_oracle(g, zero_operator(g))
        assert jumps == [(0.0, Fraction(1))]

    def test_dispersive_model_rejected(self):
        g = square_lattice()
        w = hofstadter_weights(g, Fraction(1, 2))
        _, D = harper_dml(g, w)
        cell = magnetic_cell(g, D, Fraction(1, 2))
        with pytest.raises(OracleUnavailableError):
            jump_oracle(g, D, cell)

    def test_flat_band_route_on_connected_graph(self):
        # the zero operator on the connected line is not block-diagonal
        # (the graph has inter-cell edges) but its fibers are constant, so
        # the flat-band branch applies and finds the single atom at 0
        g = line_graph()
        Z = zero_operator(g)
        cell = magnetic_cell(g, Z, Fraction(0))
        assert jump_oracle(g, Z, cell) == [(0.0, Fraction(1))]

    def test_dispersive_model_without_cell_rejected(self):
        g = square_lattice()
        _, D = harper_dml(g, uniform_weights(g))
        with pytest.raises(OracleUnavailableError):
            jump_oracle(g, D)

    def test_exact_ids_from_jumps(self):
        jumps = [(0.0, Fraction(1)), (3.0, Fraction(2))]
        assert exact_ids_from_jumps(jumps, -0.1) == 0.0
        assert exact_ids_from_jumps(jumps, 0.0) == 1.0
        assert exact_ids_from_jumps(jumps, 2.9) == 1.0
        assert exact_ids_from_jumps(jumps, 3.0) == 3.0


class TestMomentCrosscheck:
    def test_power_zero_is_orbit_count(self):
        g = triangle_cells()
        _, D = harper_dml(g, uniform_weights(g))
        cell = magnetic_cell(g, D, Fraction(0))
        assert moment_crosscheck(D, cell, 0, N=16) == 0.0

    def test_line_first_moment(self):
        g = line_graph()
        _, D = harper_dml(g, uniform_weights(g))
        cell = magnetic_cell(g, D, Fraction(0))
        assert moment_crosscheck(D, cell, 1, N=32) <= 1e-12

    def test_half_flux_fourth_moment_two_channels(self):
        # walk enumeration vs fiber quadrature, two independent routes to
        # tr(H^4) = 20 at half flux
        g = square_lattice()
        w = hofstadter_weights(g, Fraction(1, 2))
        H, _ = harper_dml(g, w)
        cell = magnetic_cell(g, H, Fraction(1, 2))
        flat = fiber_grid_eigs(cell, 128)
        fiber_moment = float((flat**4).sum() / (cell.q * 128**2))
        assert fiber_moment == pytest.approx(20.0, abs=1e-8)
        assert moment_crosscheck(H, cell, 4, N=128) <= 1e-8

    @pytest.mark.parametrize("alpha", [Fraction(0), Fraction(1, 2), Fraction(1, 3)])
    def test_dml_moments_tight(self, alpha):
        cell = square_cell(alpha)
        op = cell.op
        assert moment_crosscheck(op, cell, 8, N=128) < 1e-6
