# tests/solver/test_spatial.py
import numpy as np
import pytest

from src.solver.errors import PositivityError
from src.solver.mesh import EVEN, Grid2D, discrete_divergence, discrete_gradient, field_from_interior
from src.solver.physics import ConservedCell, EulerParams, flux_nonstiff, split_pressure
from src.solver.spatial import (
    Limiter,
    explicit_flux_divergence,
    linear_advection_divergence,
    reconstruct,
    rusanov_flux,
    slope_cweno,
    stiff_flux_divergence,
)
from src.solver.state import State, state_from_primitive


class TestSlopes:
    def test_cweno_equal_slopes(self):
        assert slope_cweno(0.3, 0.3) == pytest.approx(0.3)

    def test_cweno_prefers_smaller_slope(self):
        s = slope_cweno(10.0, 0.1)
        assert 0.1 <= s < 0.2

    def test_cweno_is_symmetric(self):
        assert slope_cweno(2.0, -0.5) == pytest.approx(slope_cweno(-0.5, 2.0))


class TestReconstruction:
    @pytest.mark.parametrize("limiter", list(Limiter))
    def test_constant_state(self, limiter, periodic_grid):
        g = periodic_grid(8)
        s = state_from_primitive(g, np.full(g.shape, 1.3), np.full(g.shape, 0.2), np.full(g.shape, -0.1))
        faces = reconstruct(s, limiter)
        np.testing.assert_allclose(faces.x_left.rho, 1.3)
        np.testing.assert_allclose(faces.y_right.q2, 1.3 * -0.1)
        assert faces.x_left.rho.shape == (9, 8)
        assert faces.y_left.rho.shape == (8, 9)

    def test_no_limiter_is_first_order(self, periodic_grid, rng):
        g = periodic_grid(6)
        rho = 1.0 + 0.1 * rng.random(g.shape)
        s = state_from_primitive(g, rho, np.zeros(g.shape), np.zeros(g.shape))
        faces = reconstruct(s, Limiter.NONE)
        # interface i sits between cells i - 1 and i
        np.testing.assert_array_equal(faces.x_left.rho[1:], rho)
        np.testing.assert_array_equal(faces.x_right.rho[:-1], rho)
        np.testing.assert_array_equal(faces.x_left.rho[0], rho[-1])

    def test_central_exact_for_linear_profile(self):
        g = Grid2D(10, 4)
        x1, _ = g.cell_centers()
        s = state_from_primitive(g, 1.0 + x1, np.zeros(g.shape), np.zeros(g.shape))
        faces = reconstruct(s, Limiter.CENTRAL)
        edges = g.x0 + np.arange(g.nx + 1) * g.dx
        np.testing.assert_allclose(faces.x_left.rho[2:-2, 0], 1.0 + edges[2:-2], rtol=1e-12)
        np.testing.assert_allclose(faces.x_right.rho[2:-2, 0], 1.0 + edges[2:-2], rtol=1e-12)

    def test_negative_face_density(self):
        g = Grid2D(8, 4)
        rho = np.ones(g.shape)
        rho[2, :] = 10.0
        s = state_from_primitive(g, rho, np.zeros(g.shape), np.zeros(g.shape))
        with pytest.raises(PositivityError, match="x interface"):
            reconstruct(s, Limiter.CENTRAL)
        reconstruct(s, Limiter.NONE)


class TestFluxes:
    def test_rusanov_is_consistent(self):
        W = ConservedCell(np.array([1.5]), np.array([0.3]), np.array([-0.2]))
        np.testing.assert_allclose(rusanov_flux(W, W, 1), flux_nonstiff(W, 1))

    def test_rusanov_diffuses_density_jump(self):
        WL = ConservedCell(np.array([1.0]), np.array([0.5]), np.array([0.0]))
        WR = ConservedCell(np.array([2.0]), np.array([0.5]), np.array([0.0]))
        # alpha = max(|2 * 0.5|, |2 * 0.25|) = 1
        assert rusanov_flux(WL, WR, 1)[0, 0] == pytest.approx(-0.5)

    def test_uniform_flow_has_no_divergence(self, periodic_grid):
        g = periodic_grid(8)
        s = state_from_primitive(g, np.full(g.shape, 1.9), np.full(g.shape, 0.6), np.zeros(g.shape))
        np.testing.assert_allclose(explicit_flux_divergence(s), 0.0, atol=1e-13)

    def test_explicit_divergence_conserves(self, periodic_grid, rng):
        g = periodic_grid(10)
        s = state_from_primitive(g, 1.0 + 0.1 * rng.random(g.shape), rng.normal(size=g.shape), rng.normal(size=g.shape))
        for limiter in Limiter:
            div = explicit_flux_divergence(s, limiter)
            np.testing.assert_allclose(div.sum(axis=(1, 2)), 0.0, atol=1e-10)

    def test_stiff_divergence_matches_mesh_operators(self, periodic_grid, rng):
        g = periodic_grid(8)
        params = EulerParams(epsilon=0.2, gamma=1.4)
        s = state_from_primitive(g, 1.0 + 0.1 * rng.random(g.shape), rng.normal(size=g.shape), rng.normal(size=g.shape))
        p = split_pressure(s.rho, params.gamma)
        out = stiff_flux_divergence(s, params, p.perturbation)
        g1, g2 = discrete_gradient(p.perturbation)
        np.testing.assert_allclose(out[0], discrete_divergence(s.q1, s.q2).interior, atol=1e-12)
        np.testing.assert_allclose(out[1], g1.interior / 0.04, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(out[2], g2.interior / 0.04, rtol=1e-10, atol=1e-10)


class TestLinearAdvection:
    def test_upwind_difference(self, periodic_grid, rng):
        g = periodic_grid(8)
        f = field_from_interior(g, rng.normal(size=g.shape), EVEN)
        out = linear_advection_divergence((f,), (1.0, -2.0), Limiter.NONE)[0]
        v = f.interior
        expected = (v - np.roll(v, 1, axis=0)) / g.dx - 2.0 * (np.roll(v, -1, axis=1) - v) / g.dy
        np.testing.assert_allclose(out, expected, atol=1e-10)

    def test_zero_velocity(self, periodic_grid, rng):
        g = periodic_grid(6)
        f = field_from_interior(g, rng.normal(size=g.shape), EVEN)
        np.testing.assert_allclose(linear_advection_divergence((f, f), (0.0, 0.0), Limiter.CENTRAL), 0.0)
