"""Closed-form free-boson quantities: partition function, n-point
functions over partial matchings, Virasoro 1-point function."""
import cmath
import math

import pytest

from genus2.elliptic import DomainViolation, dedekind_eta, eisenstein
from genus2.heisenberg import (
    ModulePair,
    VACUUM,
    h_npoint,
    nu_lambda,
    virasoro_one_point,
    z2_partition,
)
from genus2.sewing import SurfacePoint, sewing_context, validate_moduli


@pytest.fixture(scope="module")
def p_mid():
    return validate_moduli(1j, 1.2j, 0.2)


@pytest.fixture(scope="module")
def pts():
    return [SurfacePoint(1, 0.9 + 0.5j), SurfacePoint(1, -0.4 + 0.8j),
            SurfacePoint(2, 0.7 - 0.6j), SurfacePoint(2, -0.8 - 0.3j)]


class TestPartitionFunction:
    def test_eps_zero_vacuum(self):
        p = validate_moduli(1j, 1j, 0)
        target = 1.0 / dedekind_eta(1j) ** 2
        assert abs(z2_partition(VACUUM, p) - target) < 1e-14

    def test_module_label_factor(self, p_mid):
        om = sewing_context(p_mid, 16).omega_period
        lam = ModulePair(1.0, 0j)
        ratio = z2_partition(lam, p_mid) / z2_partition(VACUUM, p_mid)
        assert abs(ratio - cmath.exp(1j * math.pi * om[0, 0])) < 1e-12

    def test_eps_squared_coefficient(self):
        # Z * eta1 eta2 = 1 + (eps^2/2) E2(tau1) E2(tau2) + O(eps^4)
        e = 0.05
        p = validate_moduli(1j, 1.2j, e)
        val = z2_partition(VACUUM, p, 16) * dedekind_eta(1j) * dedekind_eta(1.2j)
        lead = 1.0 + 0.5 * e ** 2 * eisenstein(2, 1j) * eisenstein(2, 1.2j)
        assert abs(val - lead) < e ** 4

    def test_swap_invariance_with_labels(self, p_mid):
        lam = ModulePair(0.7 + 0.1j, -0.3)
        z1 = z2_partition(lam, p_mid)
        z2 = z2_partition(lam.swapped(), p_mid.swapped())
        assert abs(z1 - z2) < 1e-12 * abs(z1)

    def test_branch_invariance(self, p_mid):
        lam = ModulePair(0.5, 1.0)
        d = z2_partition(lam, p_mid) - z2_partition(lam, p_mid.flipped_branch())
        assert abs(d) == 0

    def test_holomorphy_cauchy_riemann(self, p_mid):
        # central differences along the real and imaginary axes of each
        # modulus agree for a holomorphic function
        h = 1e-5
        lam = ModulePair(0.4, -0.2)

        def f(t1, t2, e):
            return z2_partition(lam, validate_moduli(t1, t2, e), 16)

        for direction in ("tau1", "tau2", "eps"):
            def g(dz):
                shifts = {"tau1": (dz, 0, 0), "tau2": (0, dz, 0), "eps": (0, 0, dz)}[direction]
                return f(p_mid.tau1 + shifts[0], p_mid.tau2 + shifts[1],
                         p_mid.eps + shifts[2])

            d_re = (g(h) - g(-h)) / (2 * h)
            d_im = (g(1j * h) - g(-1j * h)) / (2j * h)
            assert abs(d_re - d_im) < 1e-7 * max(1.0, abs(d_re))


class TestNuLambda:
    def test_vacuum_vanishes(self, p_mid, pts):
        assert nu_lambda(VACUUM, pts[0], p_mid) == 0

    def test_eps_zero_unit(self):
        p = validate_moduli(1j, 1.2j, 0)
        x = SurfacePoint(1, 0.9 + 0.2j)
        assert nu_lambda(ModulePair(1.0, 0j), x, p) == 1.0

    def test_linearity(self, p_mid, pts):
        x = pts[2]
        a = nu_lambda(ModulePair(1.0, 0j), x, p_mid)
        b = nu_lambda(ModulePair(0j, 1.0), x, p_mid)
        c = nu_lambda(ModulePair(0.3 - 0.2j, 1.5), x, p_mid)
        assert abs(c - ((0.3 - 0.2j) * a + 1.5 * b)) < 1e-15


class TestNPoint:
    def test_one_point(self, p_mid, pts):
        lam = ModulePair(0.8, -0.4)
        val = h_npoint(lam, [pts[0]], p_mid)
        target = nu_lambda(lam, pts[0], p_mid) * z2_partition(lam, p_mid)
        assert abs(val - target) < 1e-14

    def test_two_point_vacuum(self, p_mid, pts):
        ctx = sewing_context(p_mid, 16)
        val = h_npoint(VACUUM, [pts[0], pts[2]], p_mid)
        target = ctx.omega(pts[0], pts[2]) * z2_partition(VACUUM, p_mid)
        assert abs(val - target) < 1e-14

    def test_odd_vacuum_vanishes(self, p_mid, pts):
        assert h_npoint(VACUUM, pts[:3], p_mid) == 0

    def test_permutation_symmetry(self, p_mid, pts):
        lam = ModulePair(0.5, 0.2j)
        a = h_npoint(lam, [pts[0], pts[2], pts[3]], p_mid)
        b = h_npoint(lam, [pts[3], pts[0], pts[2]], p_mid)
        assert abs(a - b) < 1e-14 * max(1.0, abs(a))

    def test_four_point_matching_structure(self, p_mid, pts):
        ctx = sewing_context(p_mid, 16)
        z0 = z2_partition(VACUUM, p_mid)
        val = h_npoint(VACUUM, pts, p_mid)
        w = lambda a, b: ctx.omega(pts[a], pts[b])
        target = (w(0, 1) * w(2, 3) + w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2)) * z0
        assert abs(val - target) < 1e-13 * abs(target)

    def test_coincident_rejected(self, p_mid, pts):
        with pytest.raises(DomainViolation):
            h_npoint(VACUUM, [pts[0], pts[0]], p_mid)

    def test_cap_enforced(self, p_mid, pts):
        with pytest.raises(DomainViolation):
            h_npoint(VACUUM, [SurfacePoint(1, 0.5 + 0.1j * k) for k in range(9)], p_mid)


class TestVirasoroOnePoint:
    def test_eps_zero_vacuum(self):
        p = validate_moduli(1j, 1.2j, 0)
        x = SurfacePoint(1, 0.9 + 0.2j)
        target = 0.5 * eisenstein(2, 1j) / (dedekind_eta(1j) * dedekind_eta(1.2j))
        assert abs(virasoro_one_point(VACUUM, x, p) - target) < 1e-14

    def test_eps_zero_charged(self):
        p = validate_moduli(1j, 1.2j, 0)
        x = SurfacePoint(1, 0.9 + 0.2j)
        lam = ModulePair(1.0, 0j)
        z = z2_partition(lam, p)
        target = (0.5 + 0.5 * eisenstein(2, 1j)) * z
        assert abs(virasoro_one_point(lam, x, p) - target) < 1e-13

    def test_coincidence_limit(self, p_mid, pts):
        # half the two-point coincidence limit reproduces it
        lam = ModulePair(0.6, -0.2)
        x = pts[0]
        d = 1e-4
        val = 0j
        for sgn in (1, -1):
            y = SurfacePoint(1, x.z + sgn * d)
            delta = x.z - y.z
            two = h_npoint(lam, [x, y], p_mid)
            val += 0.25 * (two - z2_partition(lam, p_mid) / delta ** 2)
        assert abs(val - virasoro_one_point(lam, x, p_mid)) < 1e-6
