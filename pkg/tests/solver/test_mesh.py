# tests/solver/test_mesh.py
import numpy as np
import pytest

from src.solver.mesh import (
    EVEN,
    NG,
    ODD_X,
    ODD_Y,
    BoundaryKind,
    Grid2D,
    central_diff,
    discrete_divergence,
    discrete_gradient,
    dump_field_csv,
    field_from_interior,
    inner,
    laplacian_symbol,
    read_field_csv,
    wide_laplacian,
)


class TestGrid:
    def test_spacing_and_area(self):
        g = Grid2D(10, 20, -1.0, 1.0, 0.0, 1.0)
        assert g.dx == pytest.approx(0.2)
        assert g.dy == pytest.approx(0.05)
        assert g.cell_area == pytest.approx(0.01)
        assert g.shape == (10, 20)

    def test_cell_centers_first_index_is_x1(self):
        x1, x2 = Grid2D(4, 5).cell_centers()
        assert x1.shape == (4, 5)
        assert x1[1, 0] == pytest.approx(0.375)
        assert x2[0, 1] == pytest.approx(0.3)

    @pytest.mark.parametrize("nx, ny", [(3, 10), (10, 2)])
    def test_too_small(self, nx, ny):
        with pytest.raises(ValueError):
            Grid2D(nx, ny)

    def test_bc_from_string(self):
        assert Grid2D(8, 8, bc="wall").bc is BoundaryKind.WALL


class TestGhostCells:
    def test_periodic_wrap(self, periodic_grid, scalar_field):
        f = scalar_field(periodic_grid(6))
        v = f.values
        assert np.array_equal(v[:NG, NG:-NG], v[-2 * NG:-NG, NG:-NG])
        assert np.array_equal(v[-NG:, NG:-NG], v[NG:2 * NG, NG:-NG])
        assert np.array_equal(v[NG:-NG, :NG], v[NG:-NG, -2 * NG:-NG])

    def test_wall_mirror_respects_parity(self, rng):
        g = Grid2D(6, 6, bc=BoundaryKind.WALL)
        interior = rng.normal(size=g.shape)
        even = field_from_interior(g, interior, EVEN).values
        odd = field_from_interior(g, interior, ODD_X).values
        assert np.array_equal(even[NG - 1, NG:-NG], even[NG, NG:-NG])
        assert np.array_equal(odd[NG - 1, NG:-NG], -odd[NG, NG:-NG])
        assert np.array_equal(odd[NG - 2, NG:-NG], -odd[NG + 1, NG:-NG])
        # ODD_X is even across y-walls
        assert np.array_equal(odd[NG:-NG, -NG], odd[NG:-NG, -NG - 1])

    def test_wrong_shape(self, periodic_grid):
        with pytest.raises(ValueError):
            field_from_interior(periodic_grid(6), np.zeros((5, 6)))


class TestDifferences:
    def test_central_diff_exact_for_linear_profile(self):
        g = Grid2D(8, 8)
        x1, x2 = g.cell_centers()
        d = central_diff(field_from_interior(g, 3.0 * x1 - 2.0 * x2), 1).interior
        np.testing.assert_allclose(d[1:-1, :], 3.0, rtol=1e-12)
        d = central_diff(field_from_interior(g, 3.0 * x1 - 2.0 * x2), 2).interior
        np.testing.assert_allclose(d[:, 1:-1], -2.0, rtol=1e-12)

    def test_derivative_flips_parity(self, scalar_field, periodic_grid):
        f = scalar_field(periodic_grid(6))
        assert central_diff(f, 1).parity == ODD_X
        assert central_diff(f, 2).parity == ODD_Y

    def test_bad_direction(self, scalar_field, periodic_grid):
        with pytest.raises(ValueError):
            central_diff(scalar_field(periodic_grid(6)), 3)

    def test_gradient_is_negative_adjoint_of_divergence(self, periodic_grid, scalar_field):
        g = periodic_grid(12)
        p = scalar_field(g)
        u1, u2 = scalar_field(g, ODD_X), scalar_field(g, ODD_Y)
        g1, g2 = discrete_gradient(p)
        lhs = inner(discrete_divergence(u1, u2).interior, p.interior, g)
        rhs = -(inner(u1.interior, g1.interior, g) + inner(u2.interior, g2.interior, g))
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_wide_laplacian_matches_symbol(self, periodic_grid, scalar_field):
        g = periodic_grid(10, 14)
        f = scalar_field(g)
        spectral = np.real(np.fft.ifft2(-laplacian_symbol(g) * np.fft.fft2(f.interior)))
        np.testing.assert_allclose(wide_laplacian(f).interior, spectral, atol=1e-9)

    def test_checkerboard_is_invisible(self):
        g = Grid2D(8, 8)
        i, j = np.indices(g.shape)
        f = field_from_interior(g, (-1.0) ** (i + j))
        np.testing.assert_allclose(wide_laplacian(f).interior, 0.0, atol=1e-12)
        assert np.count_nonzero(laplacian_symbol(g) < 1e-12) == 4


class TestDumps:
    def test_csv_round_trip(self, tmp_path, periodic_grid, scalar_field):
        g = periodic_grid(6, 7)
        values = scalar_field(g).interior
        path = dump_field_csv(values, g, "rho", tmp_path / "rho.csv")
        name, back = read_field_csv(path, g)
        assert name == "rho"
        assert np.array_equal(back, values)
        assert path.read_text().splitlines()[0] == "x1,x2,rho"

    def test_missing_file(self, tmp_path, periodic_grid):
        with pytest.raises(FileNotFoundError):
            read_field_csv(tmp_path / "none.csv", periodic_grid(6))
