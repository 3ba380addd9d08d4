# tests/solver/test_cases.py
import math

import numpy as np
import pytest

from src.solver.cases import (
    VORTEX_RHO,
    CaseKind,
    CaseSpec,
    build_grid,
    case_params,
    default_case,
    exact_incompressible,
    exact_vortex,
    init_explosion,
    initial_state,
    reference_solution,
    vortex_eta,
    with_resolution,
)
from src.solver.mesh import Grid2D
from src.solver.spatial import Limiter


class TestVortex:
    def test_far_field_is_uniform_flow(self):
        f = exact_vortex(0.0, np.array([0.05]), np.array([0.05]), 1e-2)
        assert f["rho"][0] == pytest.approx(1.9)
        assert f["u1"][0] == pytest.approx(0.6)
        assert f["u2"][0] == pytest.approx(0.0)

    def test_center(self):
        f = exact_vortex(0.0, np.array([0.5]), np.array([0.5]), 1e-2)
        assert f["u1"][0] == pytest.approx(0.6)
        assert f["u2"][0] == pytest.approx(0.0)
        assert f["rho"][0] < VORTEX_RHO

    def test_eta(self):
        assert vortex_eta(1e-2) == pytest.approx(0.1748015, abs=1e-7)

    def test_density_perturbation_scales_with_epsilon_squared(self):
        x = np.array([0.5])
        d1 = VORTEX_RHO - exact_vortex(0.0, x, x, 1e-2)["rho"][0]
        d2 = VORTEX_RHO - exact_vortex(0.0, x, x, 1e-3)["rho"][0]
        assert d1 / d2 == pytest.approx(100.0, rel=1e-9)

    def test_translation_is_periodic(self):
        x1, x2 = Grid2D(20, 20).cell_centers()
        a = exact_vortex(0.0, x1, x2, 0.1)
        b = exact_vortex(5.0 / 3.0, x1, x2, 0.1)
        for var in ("rho", "u1", "u2"):
            np.testing.assert_allclose(b[var], a[var], atol=1e-12)

    def test_swirl_is_tangential(self):
        x1, x2 = Grid2D(20, 20).cell_centers()
        f = exact_vortex(0.0, x1, x2, 0.1)
        radial = (f["u1"] - 0.6) * (x1 - 0.5) + f["u2"] * (x2 - 0.5)
        np.testing.assert_allclose(radial, 0.0, atol=1e-14)


class TestIncompressible:
    def test_point_value(self):
        f = exact_incompressible(0.0, np.array([0.25]), np.array([0.0]))
        assert f["u1"][0] == pytest.approx(1.0)
        assert f["u2"][0] == pytest.approx(3.0)
        assert f["p2"][0] == pytest.approx(0.0, abs=1e-14)
        assert f["rho"][0] == 1.0

    def test_travels_with_unit_speed(self):
        x1, x2 = Grid2D(12, 12).cell_centers()
        a = exact_incompressible(0.0, x1, x2)
        b = exact_incompressible(1.0, x1, x2)
        np.testing.assert_allclose(b["u1"], a["u1"], atol=1e-12)
        np.testing.assert_allclose(b["u2"], a["u2"], atol=1e-12)

    def test_initial_state_has_unit_density(self):
        s = initial_state(default_case("incompressible", n=12))
        np.testing.assert_array_equal(s.rho.interior, 1.0)


class TestExplosion:
    def test_density_jump(self):
        g = Grid2D(20, 20, -1.0, 1.0, -1.0, 1.0)
        s = init_explosion(g, 1.0)
        x1, x2 = g.cell_centers()
        inside = x1 * x1 + x2 * x2 <= 0.25
        np.testing.assert_array_equal(s.rho.interior[inside], 2.0)
        np.testing.assert_array_equal(s.rho.interior[~inside], 1.0)

    def test_radial_inflow_vanishing_outside_unit_circle(self):
        g = Grid2D(20, 20, -1.0, 1.0, -1.0, 1.0)
        s = init_explosion(g, 0.5)
        x1, x2 = g.cell_centers()
        u1, u2 = s.velocity()
        assert np.all(u1 * x1 + u2 * x2 <= 0.0)
        outside = np.hypot(x1, x2) >= 1.0
        assert np.all(u1[outside] == 0.0) and np.all(u2[outside] == 0.0)

    def test_center_cell_has_no_velocity(self):
        g = Grid2D(11, 11, -1.0, 1.0, -1.0, 1.0)
        s = init_explosion(g, 1.0)
        u1, u2 = s.velocity()
        assert np.all(np.isfinite(u1)) and np.all(np.isfinite(u2))
        assert u1[5, 5] == 0.0 and u2[5, 5] == 0.0

    def test_has_no_reference(self):
        assert reference_solution(default_case("explosion")) is None


class TestCaseSpec:
    def test_defaults(self):
        spec = default_case("explosion")
        assert spec.kind is CaseKind.EXPLOSION
        assert (spec.epsilon, spec.n, spec.t_end) == (1.0, 100, 0.24)
        assert spec.tableau == "JIN(2,2,2)"
        assert spec.limiter is Limiter.CWENO
        assert spec.gamma == 1.0
        assert default_case(CaseKind.VORTEX).tableau == "ARS(2,2,2)"

    def test_overrides_and_string_enums(self):
        spec = default_case("vortex", n=20, limiter="none")
        assert spec.n == 20 and spec.limiter is Limiter.NONE

    @pytest.mark.parametrize("kwargs", [dict(epsilon=0.0), dict(n=9), dict(t_end=-1.0)])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            default_case("vortex", **kwargs)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            CaseSpec("shock", 0.1, 20, 1.0)

    def test_domains(self):
        assert build_grid(default_case("explosion", n=10)).x0 == -1.0
        g = build_grid(default_case("vortex", n=10))
        assert (g.x0, g.dx) == (0.0, pytest.approx(0.1))

    def test_params(self):
        params = case_params(default_case("vortex", epsilon=0.3), dt_max=0.5)
        assert (params.epsilon, params.gamma, params.dt_max) == (0.3, 1.4, 0.5)
        assert math.isinf(case_params(default_case("vortex")).dt_max)

    def test_with_resolution(self):
        spec = with_resolution(default_case("vortex"), 80, 1e-2)
        assert (spec.n, spec.epsilon) == (80, 1e-2)
        assert with_resolution(spec, 20).epsilon == 1e-2

    def test_reference_matches_exact_vortex(self):
        spec = default_case("vortex", epsilon=0.1, n=12)
        s = initial_state(spec)
        x1, x2 = build_grid(spec).cell_centers()
        exact = reference_solution(spec)(0.0, x1, x2)
        np.testing.assert_allclose(s.rho.interior, exact["rho"])
        np.testing.assert_allclose(s.velocity()[0], exact["u1"], rtol=1e-14)
