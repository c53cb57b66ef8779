"""Moduli derivatives, contour quadrature, Xi, the covariant derivative,
and the named identity residuals."""
import math

import numpy as np
import pytest

from genus2.calculus import (
    FDConfig,
    QuadratureConfig,
    apply_Dx,
    contour_integral,
    contour_radius,
    fd_jacobian,
    moduli_derivative,
    omega_slot2_on_cycle,
    serre_derivative,
    standard_points,
    verify_identity,
    xi_matrix,
)
from genus2.elliptic import DomainViolation
from genus2.heisenberg import VACUUM, z2_partition
from genus2.sewing import SurfacePoint, sewing_context, validate_moduli
from genus2.zhu import two_diff_basis

TWO_PI_I = 2j * math.pi


@pytest.fixture(scope="module")
def p_mid():
    return validate_moduli(1j, 1.2j, 0.2)


class TestModuliDerivative:
    def test_coordinate_derivative(self, p_mid):
        val = moduli_derivative(lambda q: q.tau1, "tau1", p_mid)
        assert abs(val - 1.0 / TWO_PI_I) < 1e-12

    def test_eps_direction_leading_order(self, p_mid):
        f = lambda q: sewing_context(q, 16).omega_period[0, 1]
        val = moduli_derivative(f, "eps", p_mid)
        assert abs(val - (-p_mid.eps / TWO_PI_I)) < abs(p_mid.eps) ** 3

    def test_richardson_self_consistency(self, p_mid):
        f = lambda q: sewing_context(q, 16).logdet
        a = moduli_derivative(f, "tau1", p_mid, FDConfig(step=1e-4, richardson_levels=1))
        b = moduli_derivative(f, "tau1", p_mid, FDConfig(step=1e-4, richardson_levels=2))
        assert abs(a - b) < 1e-8

    def test_step_bound(self):
        with pytest.raises(DomainViolation):
            FDConfig(step=1e-2)

    def test_unknown_direction(self, p_mid):
        with pytest.raises(DomainViolation):
            moduli_derivative(lambda q: 0j, "tau3", p_mid)


class TestContours:
    def test_constant_alpha_period(self, p_mid):
        val = contour_integral(lambda z: np.ones_like(z), "alpha", 1, p_mid)
        assert abs(val - TWO_PI_I) < 1e-12

    def test_alpha_nu_normalisation(self, p_mid):
        ctx = sewing_context(p_mid, 16)
        for i in (1, 2):
            for j in (1, 2):
                val = contour_integral(lambda z, j=j: ctx.nu_many(j, i, z),
                                       "alpha", i, p_mid) / TWO_PI_I
                assert abs(val - (1.0 if i == j else 0.0)) < 1e-10

    def test_beta_periods_give_period_matrix(self, p_mid):
        # Cross-validates the resolvent formula for Omega against the
        # quadrature of nu over beta cycles: genuinely independent paths.
        ctx = sewing_context(p_mid, 16)
        om = ctx.omega_period
        for i in (1, 2):
            for j in (1, 2):
                val = contour_integral(lambda z, j=j: ctx.nu_many(j, i, z),
                                       "beta", i, p_mid) / TWO_PI_I
                assert abs(val - om[i - 1, j - 1]) < 1e-10

    def test_node_doubling_self_convergence(self, p_mid):
        ctx = sewing_context(p_mid, 16)
        base = QuadratureConfig()
        fine = QuadratureConfig(alpha_nodes=256, beta_panels=48, beta_order=16,
                                circle_nodes=256)
        for cyc in ("alpha", "beta", "circle"):
            a = contour_integral(lambda z: ctx.nu_many(1, 1, z), cyc, 1, p_mid, base)
            b = contour_integral(lambda z: ctx.nu_many(1, 1, z), cyc, 1, p_mid, fine)
            assert abs(a - b) < 1e-10

    def test_omega_period_vanishes(self, p_mid):
        ctx = sewing_context(p_mid, 16)
        x = SurfacePoint(1, 0.9 + 0.5j)
        for i in (1, 2):
            val = omega_slot2_on_cycle(ctx, x, "alpha", i)
            assert abs(val) < 1e-9

    def test_contour_radius_monotone_domain(self):
        deep = validate_moduli(1j, 1j, 0.6 * math.pi ** 2)
        rho = contour_radius(deep, 1)
        assert deep.inner_radius < rho < deep.r_annulus


class TestXi:
    def test_eps_zero_structure(self):
        p = validate_moduli(1j, 1.2j, 0)
        xi = xi_matrix(p, 16)
        assert abs(xi[0, 0] - 1.0) < 1e-12
        assert abs(xi[1, 1] - 1.0) < 1e-12
        assert abs(xi[2, 2]) < 1e-12  # neck column degenerates at eps = 0

    def test_circle_torus_independence(self, p_mid):
        a = xi_matrix(p_mid, 16, circle_torus=1)
        b = xi_matrix(p_mid, 16, circle_torus=2)
        assert np.max(np.abs(a[:, 2] - b[:, 2])) < 1e-12

    def test_fd_jacobian_matches(self, p_mid):
        xi = xi_matrix(p_mid, 16)
        jac = fd_jacobian(p_mid, 16)
        assert np.max(np.abs(jac - xi)) < 1e-10

    def test_xi_phi_psi_pointwise(self, p_mid):
        xi = xi_matrix(p_mid, 16)
        ctx = sewing_context(p_mid, 16)
        for x in standard_points(p_mid):
            phi = np.array(two_diff_basis(x, p_mid, 16))
            psi = np.array([ctx.nu(1, x) ** 2, ctx.nu(2, x) ** 2,
                            ctx.nu(1, x) * ctx.nu(2, x)])
            assert np.max(np.abs(xi @ phi - psi)) < 1e-12

    def test_det_nonzero_inside(self, p_mid):
        assert abs(np.linalg.det(xi_matrix(p_mid, 16))) > 1e-8


class TestCovariantDerivative:
    def test_constant_killed(self, p_mid):
        x = standard_points(p_mid)[0]
        assert abs(apply_Dx(lambda q: 1.0 + 0j, x, p_mid)) < 1e-12

    def test_partition_function_equation(self, p_mid):
        zfun = lambda q: z2_partition(VACUUM, q, 16)
        ctx = sewing_context(p_mid, 16)
        z0 = zfun(p_mid)
        for x in standard_points(p_mid):
            lhs = apply_Dx(zfun, x, p_mid)
            assert abs(lhs - ctx.s_proj(x) * z0 / 12.0) < 1e-9 * abs(z0)

    def test_period_matrix_equation(self, p_mid):
        ctx = sewing_context(p_mid, 16)
        x = standard_points(p_mid)[1]
        f = lambda q: sewing_context(q, 16).omega_period[0, 1]
        lhs = TWO_PI_I * apply_Dx(f, x, p_mid)
        assert abs(lhs - ctx.nu(1, x) * ctx.nu(2, x)) < 1e-9

    def test_serre_derivative_weight_zero(self, p_mid):
        x = standard_points(p_mid)[0]
        assert abs(serre_derivative(lambda q: 1.0 + 0j, 0.0, x, p_mid)) < 1e-12

    def test_serre_combination_annihilates_inverse_z(self, p_mid):
        # (nabla + s/6) applied to 1/Z_M^2-type weight-one data vanishes
        g1 = lambda q: 1.0 / z2_partition(VACUUM, q, 16) ** 2
        x = standard_points(p_mid)[0]
        val = serre_derivative(g1, 1.0, x, p_mid)
        assert abs(val) < 1e-8 * abs(g1(p_mid))

    def test_serre_linearity(self, p_mid):
        x = standard_points(p_mid)[0]
        f = lambda q: sewing_context(q, 16).logdet
        g = lambda q: q.eps
        a = serre_derivative(lambda q: f(q) + 2.5 * g(q), 1.0, x, p_mid)
        b = serre_derivative(f, 1.0, x, p_mid) + 2.5 * serre_derivative(g, 1.0, x, p_mid)
        assert abs(a - b) < 1e-10


class TestIdentities:
    @pytest.mark.parametrize("name", ["heis_de", "dx_omega", "nu_de", "omega_de",
                                      "s_de", "virasoro_1pt", "ward_2pt", "jacobian"])
    def test_identity_at_midpoint(self, p_mid, name):
        rep = verify_identity(name, p_mid, M=16)
        assert rep.passed, (name, rep.max_residual)

    def test_nu_de_degenerates_at_eps_zero(self):
        p = validate_moduli(1j, 1.2j, 0)
        rep = verify_identity("nu_de", p, M=16)
        assert rep.max_residual < 1e-8

    def test_unknown_identity_rejected(self, p_mid):
        with pytest.raises(DomainViolation):
            verify_identity("nonsense", p_mid)

    def test_report_serialisation(self, p_mid):
        rep = verify_identity("heis_de", p_mid, M=16)
        d = rep.to_dict()
        assert d["name"] == "heis_de"
        assert d["passed"] is True
        assert len(d["samples"]) == d["n_samples"]
