# tests/solver/test_diagnostics.py
import math

import numpy as np
import pandas as pd
import pytest

from src.solver.diagnostics import (
    background_from_state,
    convergence_table,
    energies,
    eoc,
    error_norms,
    format_convergence_table,
    front_radius,
    kinetic_energy,
    leray_project,
    mach_field,
    radial_profile,
    read_convergence_csv,
    record,
    vorticity,
    vorticity_cross_section,
    well_prepared_deviation,
    write_convergence_csv,
)
from src.solver.cases import init_incompressible, init_vortex
from src.solver.errors import UnsupportedBoundaryError
from src.solver.mesh import (
    ODD_X,
    ODD_Y,
    BoundaryKind,
    Grid2D,
    discrete_divergence,
    discrete_gradient,
    field_from_interior,
)
from src.solver.physics import EulerParams
from src.solver.state import LinearBackground, WaveState, state_from_primitive

def _exact_from(state):
    u1, u2 = state.velocity()
    return lambda t, x1, x2: {"rho": state.rho.interior, "u1": u1, "u2": u2}

class TestErrorNorms:
    def test_identical_fields(self, periodic_grid, well_prepared_state):
        s = well_prepared_state(periodic_grid(8))
        norms = error_norms(s, _exact_from(s))
        assert norms == {"rho": (0.0, 0.0), "u1": (0.0, 0.0), "u2": (0.0, 0.0)}

    def test_constant_offset_on_unit_square(self, periodic_grid, rest_state):
        s = rest_state(periodic_grid(10))
        zeros = np.zeros(s.grid.shape)
        norms = error_norms(s, lambda t, x1, x2: {"rho": zeros + 1.0, "u1": zeros - 0.25, "u2": zeros}, ["u1"])
        assert norms["u1"][0] == pytest.approx(0.25)
        assert norms["u1"][1] == pytest.approx(0.25)

    def test_matches_double_loop(self, periodic_grid, rng):
        g = periodic_grid(6)
        a = 1.0 + rng.random(g.shape)
        s = state_from_primitive(g, a, np.zeros(g.shape), np.zeros(g.shape))
        shifted = np.roll(a, 1, axis=0)
        l1, l2 = error_norms(s, lambda t, x1, x2: {"rho": shifted}, ["rho"])["rho"]
        s1 = s2 = 0.0
        for i in range(g.nx):
            for j in range(g.ny):
                e = a[i, j] - shifted[i, j]
                s1 += abs(e) * g.dx * g.dy
                s2 += e * e * g.dx * g.dy
        assert l1 == pytest.approx(s1, rel=1e-12)
        assert l2 == pytest.approx(math.sqrt(s2), rel=1e-12)

class TestEoc:
    def test_exact_second_order(self):
        assert eoc([(10, 4e-3), (20, 1e-3)]) == [pytest.approx(2.0, abs=1e-12)]

    def test_published_column(self):
        rows = [(10, 4.9120e-3), (20, 1.3454e-3), (40, 3.1818e-4), (80, 8.0467e-5)]
        assert eoc(rows) == [pytest.approx(v, abs=5e-4) for v in (1.8682, 2.0800, 1.9834)]

    def test_equal_errors(self):
        assert eoc([(10, 1e-3), (20, 1e-3)]) == [0.0]

    def test_zero_error_is_undefined(self):
        assert eoc([(10, 1e-3), (20, 0.0), (40, 1e-4)]) == [None, None]

    def test_single_row(self):
        assert eoc([(10, 1e-3)]) == []

    def test_resolution_must_increase(self):
        with pytest.raises(ValueError):
            eoc([(20, 1e-3), (10, 1e-4)])

class TestLeray:
    def test_constant_field_is_kept(self, periodic_grid):
        g = periodic_grid(8)
        u1 = field_from_interior(g, np.full(g.shape, 0.7), ODD_X)
        u2 = field_from_interior(g, np.full(g.shape, -0.2), ODD_Y)
        v1, v2 = leray_project(u1, u2)
        np.testing.assert_allclose(v1.interior, 0.7, atol=1e-14)
        np.testing.assert_allclose(v2.interior, -0.2, atol=1e-14)

    def test_gradient_is_annihilated(self, periodic_grid, scalar_field):
        g = periodic_grid(12)
        g1, g2 = discrete_gradient(scalar_field(g))
        v1, v2 = leray_project(g1, g2)
        np.testing.assert_allclose(v1.interior, 0.0, atol=1e-9)
        np.testing.assert_allclose(v2.interior, 0.0, atol=1e-9)

    def test_random_field_projects_and_is_idempotent(self, periodic_grid, scalar_field):
        g = periodic_grid(16)
        v1, v2 = leray_project(scalar_field(g, ODD_X), scalar_field(g, ODD_Y))
        assert np.max(np.abs(discrete_divergence(v1, v2).interior)) <= 1e-9
        w1, w2 = leray_project(v1, v2)
        np.testing.assert_allclose(w1.interior, v1.interior, atol=1e-9)
        np.testing.assert_allclose(w2.interior, v2.interior, atol=1e-9)

    @pytest.mark.parametrize("n", [16, 40])
    def test_discretely_solenoidal_case_field_is_kept(self, n):
        s = init_incompressible(Grid2D(n, n))
        u1, u2 = s.velocity()
        v1, v2 = leray_project(field_from_interior(s.grid, u1, ODD_X), field_from_interior(s.grid, u2, ODD_Y))
        assert np.max(np.abs(discrete_divergence(v1, v2).interior)) <= 1e-10
        np.testing.assert_allclose(v1.interior, u1, atol=1e-12)
        np.testing.assert_allclose(v2.interior, u2, atol=1e-12)
        w1, w2 = leray_project(v1, v2)
        np.testing.assert_allclose(w1.interior, v1.interior, atol=1e-12)
        np.testing.assert_allclose(w2.interior, v2.interior, atol=1e-12)

    def test_discretely_divergence_free_field_is_kept(self, periodic_grid, scalar_field):
        g = periodic_grid(12)
        v1, v2 = leray_project(scalar_field(g, ODD_X), scalar_field(g, ODD_Y))
        w1, w2 = leray_project(v1, v2)
        np.testing.assert_allclose(w1.interior, v1.interior, atol=1e-13)
        np.testing.assert_allclose(w2.interior, v2.interior, atol=1e-13)

    def test_record_of_case_initial_data(self):
        params = EulerParams(1e-6)
        for s in (init_incompressible(Grid2D(40, 40)), init_vortex(Grid2D(10, 10), 1e-6)):
            rec = record(s, params, 0.0, kinetic_energy(s))
            assert math.isfinite(rec.acoustic_energy)
            assert rec.incompressible_energy + rec.acoustic_energy == pytest.approx(rec.total_scaled_energy, rel=1e-9)

    def test_wall_grid_unsupported(self, scalar_field):
        g = Grid2D(8, 8, bc=BoundaryKind.WALL)
        with pytest.raises(UnsupportedBoundaryError):
            leray_project(scalar_field(g, ODD_X), scalar_field(g, ODD_Y))

class TestEnergies:
    BG = LinearBackground(1.0, (0.0, 0.0), 1.0, 0.1)

    def test_kinetic_energy_of_uniform_flow(self, periodic_grid):
        g = periodic_grid(8)
        s = state_from_primitive(g, np.ones(g.shape), np.ones(g.shape), np.zeros(g.shape))
        assert kinetic_energy(s) == pytest.approx(0.5)
        assert energies(s, background_from_state(s, EulerParams(0.1))).kinetic == pytest.approx(0.5)

    def test_split_is_orthogonal(self, periodic_grid, rng):
        g = periodic_grid(16)
        w = WaveState.from_interior(g, rng.normal(size=g.shape), rng.normal(size=g.shape), rng.normal(size=g.shape))
        e = energies(w, self.BG)
        assert e.incompressible + e.acoustic == pytest.approx(e.total, rel=1e-10)
        assert e.incompressible > 0.0 and e.acoustic > 0.0

    def test_gradient_perturbation_is_acoustic(self, periodic_grid, scalar_field, rng):
        g = periodic_grid(12)
        g1, g2 = discrete_gradient(scalar_field(g))
        rho = rng.normal(size=g.shape)
        w = WaveState.from_interior(g, rho - rho.mean(), g1.interior, g2.interior)
        e = energies(w, self.BG)
        assert e.incompressible == pytest.approx(0.0, abs=1e-12 * e.total)

    def test_density_weight(self):
        assert self.BG.density_weight == pytest.approx(100.0)

class TestFieldMetrics:
    def test_vorticity_of_linear_shear(self):
        g = Grid2D(10, 10)
        x1, _ = g.cell_centers()
        w = vorticity(field_from_interior(g, np.zeros(g.shape), ODD_X), field_from_interior(g, x1, ODD_Y))
        np.testing.assert_allclose(w.interior[1:-1, :], 1.0, rtol=1e-12)

    def test_mach_field(self, periodic_grid):
        g = periodic_grid(6)
        s = state_from_primitive(g, np.ones(g.shape), np.full(g.shape, 0.6), np.zeros(g.shape))
        m = mach_field(s, EulerParams(0.1, gamma=2.0))
        np.testing.assert_allclose(m.interior, 0.06 / math.sqrt(2.0))

    def test_well_prepared_state(self, periodic_grid, well_prepared_state):
        rho_dev, div = well_prepared_deviation(well_prepared_state(periodic_grid(16)))
        assert rho_dev == 0.0
        assert div <= 1e-11

    def test_record(self, periodic_grid, well_prepared_state):
        s = well_prepared_state(periodic_grid(8), amplitude=0.1)
        params = EulerParams(0.1)
        rec = record(s, params, 0.01, kinetic_energy(s), newton_iterations=3, max_residual=1e-11)
        assert rec.relative_kinetic_energy == pytest.approx(1.0)
        assert rec.incompressible_energy + rec.acoustic_energy == pytest.approx(rec.total_scaled_energy, rel=1e-10)
        assert rec.newton_iterations == 3
        assert rec.as_row()["dt"] == 0.01

    def test_radial_profile_of_constant(self):
        g = Grid2D(20, 20, -1.0, 1.0, -1.0, 1.0)
        s = state_from_primitive(g, np.full(g.shape, 1.5), np.zeros(g.shape), np.zeros(g.shape))
        r, rho = radial_profile(s, bins=10)
        assert len(r) == 10
        finite = rho[~np.isnan(rho)]
        np.testing.assert_allclose(finite, 1.5)

    def test_front_radius_skips_central_peak(self):
        g = Grid2D(40, 40, -1.0, 1.0, -1.0, 1.0)
        x1, x2 = g.cell_centers()
        r = np.hypot(x1, x2)
        rho = 1.0 + 3.0 * np.exp(-100.0 * r * r) + 0.5 * (r <= 0.6)
        s = state_from_primitive(g, rho, np.zeros(g.shape), np.zeros(g.shape))
        assert front_radius(s, bins=20) == pytest.approx(0.6, abs=0.08)
        with pytest.raises(ValueError):
            front_radius(s, bins=20, inner=2.0)

    def test_cross_section_picks_nearest_row(self):
        g = Grid2D(10, 10, -1.0, 1.0, -1.0, 1.0)
        x1, _ = g.cell_centers()
        s = state_from_primitive(g, np.ones(g.shape), np.zeros(g.shape), x1.copy())
        xs, w = vorticity_cross_section(s, 0.0)
        assert len(xs) == 10
        np.testing.assert_allclose(w[1:-1], 1.0, rtol=1e-12)

class TestConvergenceTable:
    ERRORS = {
        "u1": [(10, 4e-3, 5e-3), (20, 1e-3, 1.25e-3), (40, 2.5e-4, 3.125e-4)],
        "u2": [(10, 2e-3, 3e-3), (20, 1e-3, 1.5e-3), (40, 5e-4, 7.5e-4)],
    }

    def test_columns_and_orders(self):
        df = convergence_table(self.ERRORS)
        assert list(df.columns[:5]) == ["N", "L1_u1", "L1_u1_order", "L2_u1", "L2_u1_order"]
        assert math.isnan(df["L1_u1_order"].iloc[0])
        assert df["L1_u1_order"].iloc[1] == pytest.approx(2.0)
        assert df["L2_u2_order"].iloc[2] == pytest.approx(1.0)

    def test_single_resolution(self):
        df = convergence_table({"u1": [(10, 1e-3, 2e-3)]})
        assert len(df) == 1
        assert df["L1_u1_order"].isna().all()

    def test_mismatched_resolutions(self):
        with pytest.raises(ValueError):
            convergence_table({"u1": [(10, 1.0, 1.0)], "u2": [(20, 1.0, 1.0)]})

    def test_text_layout(self):
        text = format_convergence_table(convergence_table(self.ERRORS))
        lines = text.splitlines()
        assert "L1 error in u1" in lines[0] and "EOC" in lines[0]
        assert len(lines) == 2 + 3
        assert "2.0000" in lines[3]

    def test_csv_round_trip(self, tmp_path):
        df = convergence_table(self.ERRORS)
        back = read_convergence_csv(write_convergence_csv(df, tmp_path / "t" / "convergence.csv"))
        pd.testing.assert_frame_equal(back, df)

    def test_missing_csv(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_convergence_csv(tmp_path / "missing.csv")
