"""Tests for the manufactured problems, loads, and stress reconstruction."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracvisco.errors import QuadratureFailure
from fracvisco.fem import (Material, a_form_matrix, assemble_mass,
                           b_form_matrix, build_dof_map, cg_solve, mass_load,
                           ritz_project)
from fracvisco.mesh import build_mesh
from fracvisco.mlf import kernel_antiderivative, kernel_beta
from fracvisco.problems import (LoadPrecomputation, StressReconstructor,
                                assemble_load, conv_factor, conv_factor_grid,
                                exact_error, get_problem, precompute_loads)
from fracvisco.soe import build_soe


def fd_gradient(field, x, y, h=1e-6):
    g = np.empty(np.shape(x) + (2, 2))
    g[..., :, 0] = (field(x + h, y) - field(x - h, y)) / (2 * h)
    g[..., :, 1] = (field(x, y + h) - field(x, y - h)) / (2 * h)
    return g


class TestFields:
    @pytest.mark.parametrize("name", ["ex61", "ex62"])
    def test_vanishes_on_boundary(self, name):
        prob = get_problem(name)
        s = np.linspace(0.0, 1.0, 33)
        zero = np.zeros_like(s)
        for x, y in ((s, zero), (s, zero + 1.0), (zero, s), (zero + 1.0, s)):
            assert np.abs(prob.spatial_value(x, y)).max() < 1e-14

    @pytest.mark.parametrize("name", ["ex61", "ex62"])
    def test_gradient_matches_finite_differences(self, name):
        prob = get_problem(name)
        rng = np.random.default_rng(3)
        x, y = rng.uniform(0.05, 0.95, 20), rng.uniform(0.05, 0.95, 20)
        got = prob.spatial_gradient(x, y)
        ref = fd_gradient(prob.spatial_value, x, y)
        assert np.abs(got - ref).max() < 1e-8

    def test_exact_at_scales_by_exponential(self):
        prob = get_problem("ex61")
        x, y = np.array([0.3]), np.array([0.6])
        v0 = prob.spatial_value(x, y)
        v1 = prob.exact_at(1.0)(x, y)
        assert np.allclose(v1, math.exp(-1.0) * v0)

    def test_get_problem_validation(self):
        with pytest.raises(ValueError):
            get_problem("nope")
        assert get_problem("EX62").name == "ex62"


class TestConvFactor:
    def test_trivials(self):
        assert conv_factor(0.5, 0.5, 0.0) == 0.0
        with pytest.raises(ValueError):
            conv_factor(0.5, 0.5, -1.0)

    def test_alpha_one_closed_form(self):
        # kernel degenerates to exp(-t/tau); convolution with e^{-s} is
        # (e^{-t/tau} - e^{-t}) / (1 - 1/tau)
        tau, t = 0.5, 0.8
        expected = (math.exp(-t / tau) - math.exp(-t)) / (1.0 - 1.0 / tau)
        assert conv_factor(1.0, tau, t) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("alpha,t", [(0.3, 0.4), (0.5, 1.0), (0.8, 0.1)])
    def test_matches_time_domain_quadrature(self, alpha, t):
        tau = 0.5
        ref, err = quad(lambda u: kernel_beta(alpha, tau, u) * math.exp(u - t),
                        0.0, t, epsabs=1e-11, limit=400)
        assert err < 1e-8
        assert conv_factor(alpha, tau, t) == pytest.approx(ref, abs=1e-8)

    def test_monotone_then_positive(self):
        # the forcing e^{-s} decays, so I(t) rises early and stays positive
        vals = conv_factor_grid(0.5, 0.5, np.linspace(0.0, 2.0, 21))
        assert np.all(np.diff(vals[:11]) > 0)
        assert np.all(vals[1:] > 0)

    def test_grid_matches_scalar(self):
        times = np.array([0.0, 0.25, 1.0])
        grid = conv_factor_grid(0.4, 0.5, times)
        for t, v in zip(times, grid):
            assert v == conv_factor(0.4, 0.5, float(t))


class TestLoads:
    def test_initial_time_combination(self):
        mesh = build_mesh("quad", 4)
        dofs = build_dof_map(mesh)
        prob = get_problem("ex61")
        pre = precompute_loads(mesh, dofs, prob)
        load = assemble_load(pre, 0.0, 0.5, 0.5)
        assert np.allclose(load, -pre.p_mass + pre.p_a, atol=1e-14)

    def test_exact_span_coefficients(self):
        mesh = build_mesh("tri", 4)
        dofs = build_dof_map(mesh)
        mat = Material(alpha=0.3)
        prob = get_problem("ex62", mat)
        pre = precompute_loads(mesh, dofs, prob)
        t = 0.6
        it = conv_factor(mat.alpha, mat.tau_sigma, t)
        load = assemble_load(pre, t, mat.alpha, mat.tau_sigma)
        basis = np.column_stack([pre.p_mass, pre.p_a, pre.p_b])
        coef, res, *_ = np.linalg.lstsq(basis, load, rcond=None)
        g = math.exp(-t)
        assert np.allclose(coef, [-g, g, -it], atol=1e-10)

    def test_conv_value_override(self):
        pre = LoadPrecomputation(p_mass=np.array([1.0]),
                                 p_a=np.array([2.0]),
                                 p_b=np.array([4.0]))
        got = assemble_load(pre, 0.0, 0.5, 0.5, conv_value=0.25)
        assert got[0] == pytest.approx(-1.0 + 2.0 - 1.0)

    def test_memory_load_vanishes_for_degenerate_material(self):
        mat = Material(tau_sigma=1.0, tau_eps=1.0, mu_d=1.0, lambda_d=1.0)
        mesh = build_mesh("quad", 4)
        dofs = build_dof_map(mesh)
        pre = precompute_loads(mesh, dofs, get_problem("ex61", mat))
        assert np.abs(pre.p_b).max() < 1e-13

    def test_matches_strong_form_load(self):
        # integrating the pointwise momentum balance against the basis must
        # reproduce the weak-form load built from the analytic gradient
        mat = Material()
        prob = get_problem("ex61", mat)
        t = 0.7
        g, gp = math.exp(-t), -math.exp(-t)
        it = conv_factor(mat.alpha, mat.tau_sigma, t)
        mu_b = mat.mu_c - mat.ratio_alpha * mat.mu_d
        la_b = mat.lambda_c - mat.ratio_alpha * mat.lambda_d

        def strong(x, y):
            s = np.sin(np.pi * x) * np.sin(np.pi * y)
            cc = np.cos(np.pi * x) * np.cos(np.pi * y)
            div_c = -4.0 * np.pi ** 2 * s + 2.0 * np.pi ** 2 * cc
            div_b = (mu_b * (-3.0 * np.pi ** 2 * s + np.pi ** 2 * cc)
                     + la_b * (-np.pi ** 2 * s + np.pi ** 2 * cc))
            f = gp * s - g * div_c + it * div_b
            return np.stack([f, f], axis=-1)

        mesh = build_mesh("quad", 8)
        dofs = build_dof_map(mesh)
        pre = precompute_loads(mesh, dofs, prob)
        load = assemble_load(pre, t, mat.alpha, mat.tau_sigma, conv_value=it)
        strong_vec = mass_load(mesh, dofs, strong)
        rel = np.linalg.norm(load - strong_vec) / np.linalg.norm(load)
        assert rel < 1e-6

    def test_weak_residual_second_order(self):
        # the elliptic projection of the exact field satisfies the weak
        # equation up to a dual-norm residual that shrinks like h^2
        mat = Material()
        prob = get_problem("ex61", mat)
        t = 0.5
        gp = -math.exp(-t)
        it = conv_factor(mat.alpha, mat.tau_sigma, t)
        duals = []
        for n in (8, 16, 32):
            mesh = build_mesh("quad", n)
            dofs = build_dof_map(mesh)
            a = a_form_matrix(mesh, dofs, mat)
            m = assemble_mass(mesh, dofs)
            b = b_form_matrix(mesh, dofs, mat)
            rh = ritz_project(mesh, dofs, a, mat, prob.spatial_gradient)
            pre = precompute_loads(mesh, dofs, prob)
            r = gp * (m @ rh - pre.p_mass) - it * (b @ rh - pre.p_b)
            duals.append(math.sqrt(r @ cg_solve(m, r, rel_tol=1e-12)))
        assert duals[0] / duals[1] > 3.2
        assert duals[1] / duals[2] > 3.2

    def test_exact_error_zero_coefficients(self):
        mesh = build_mesh("quad", 16)
        dofs = build_dof_map(mesh)
        prob = get_problem("ex61")
        err = exact_error(mesh, dofs, np.zeros(dofs.n_dofs), prob, 1.0)
        assert err == pytest.approx(math.exp(-1.0) / math.sqrt(2.0), rel=1e-6)


class TestStressReconstructor:
    def _soe(self, alpha=0.5):
        return build_soe(alpha, 1e-8, 10.0, 1e-4, 4.0)

    def test_requires_strain(self):
        soe = self._soe()
        rec = StressReconstructor(Material(), soe.nodes, soe.weights,
                                  dt=0.1, n_points=2)
        with pytest.raises(ValueError):
            rec.stress()

    def test_degenerate_memory_gives_pure_elastic_stress(self):
        mat = Material(tau_sigma=1.0, tau_eps=1.0, mu_d=1.0, lambda_d=1.0)
        soe = self._soe()
        rng = np.random.default_rng(5)
        rec = StressReconstructor(mat, soe.nodes, soe.weights,
                                  dt=0.05, n_points=4)
        for _ in range(6):
            strain = rng.standard_normal((4, 3))
            rec.update(strain)
        expected = StressReconstructor._apply_isotropic(
            mat.mu_c, mat.lambda_c, strain)
        assert np.allclose(rec.stress(), expected, atol=1e-12)

    def test_constant_strain_convolution_weight(self):
        # with constant unit strain the accumulated memory equals the kernel
        # antiderivative up to one-step and compression error
        mat = Material()
        soe = self._soe(mat.alpha)
        dt = 0.01
        n_steps = 50
        rec = StressReconstructor(mat, soe.nodes, soe.weights,
                                  dt=dt, n_points=1)
        strain = np.array([[1.0, 0.0, 0.0]])
        for _ in range(n_steps):
            rec.update(strain)
        conv = rec.hist.sum(axis=0)[0, 0]
        ref = kernel_antiderivative(mat.alpha, mat.tau_sigma,
                                    (n_steps - 1) * dt)
        assert conv == pytest.approx(ref, rel=0.05)

    def test_initial_history_term_decays_with_kernel(self):
        mat = Material()
        soe = self._soe(mat.alpha)
        base = np.array([[2.0, -1.0, 0.5]])
        rec = StressReconstructor(mat, soe.nodes, soe.weights, dt=0.1,
                                  n_points=1, sigma0_minus_c_eps_u0=base)
        rec.update(np.zeros((1, 3)))
        sigma = rec.stress()
        expected = kernel_beta(mat.alpha, mat.tau_sigma, 0.1) * base
        assert np.allclose(sigma, expected, atol=1e-10)
