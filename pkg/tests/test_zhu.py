"""Weight-N coefficient machinery: shifts, Lambda, Q, F, generalised
Weierstrass functions, the 2-differential basis, and the closed form."""
import cmath
import math

import numpy as np
import pytest

from genus2.elliptic import DomainViolation, weierstrass_p
from genus2.sewing import SurfacePoint, sewing_context, validate_moduli
from genus2.zhu import (
    ZhuWeight,
    build_Lambda,
    gen_weierstrass,
    p21_closed_form,
    p_column,
    q_row,
    r_row,
    shift_matrices,
    two_diff_basis,
    zhu_context,
)


@pytest.fixture(scope="module")
def p_mid():
    return validate_moduli(1j, 1.2j, 0.25)


@pytest.fixture(scope="module")
def pts():
    return {
        "x1": SurfacePoint(1, 0.9 + 0.5j),
        "x1b": SurfacePoint(1, -0.4 + 0.8j),
        "x2": SurfacePoint(2, 0.7 - 0.6j),
        "x2b": SurfacePoint(2, -0.8 - 0.3j),
    }


class TestShiftMatrices:
    def test_weight_one(self):
        s = shift_matrices(1, 8)
        assert np.max(np.abs(s["gamma"])) == 0
        assert np.max(np.abs(s["pi"])) == 0
        assert np.array_equal(s["delta"], np.eye(8))

    def test_weight_two(self):
        s = shift_matrices(2, 8)
        e11 = np.zeros((8, 8))
        e11[0, 0] = 1
        assert np.array_equal(s["gamma"], e11)
        assert np.array_equal(s["pi"], e11)
        assert s["delta"][2, 0] == 1 and s["delta"][3, 1] == 1
        assert np.sum(s["delta"]) == 6  # shift by K = 2 keeps M - K columns

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_lemma_identities(self, N):
        M = 10
        s = shift_matrices(N, M)
        g, d, pi = s["gamma"], s["delta"], s["pi"]
        K = 2 * (N - 1)
        assert np.max(np.abs(g @ d)) == 0
        assert np.max(np.abs(d.T @ g)) == 0
        assert np.array_equal(g, pi @ g)
        assert np.array_equal(g, g @ pi)
        block = (d.T @ d - np.eye(M))[: M - K, : M - K]
        assert np.max(np.abs(block)) == 0

    def test_order_too_small_rejected(self):
        with pytest.raises(DomainViolation):
            shift_matrices(3, 4)
        with pytest.raises(DomainViolation):
            ZhuWeight(0)


class TestLambdaAndRows:
    def test_lambda_is_similarity_of_A(self, p_mid):
        M = 12
        ctx = sewing_context(p_mid, M)
        S = np.diag([math.sqrt(m) for m in range(1, M + 1)])
        Sinv = np.diag([1 / math.sqrt(m) for m in range(1, M + 1)])
        for a in (1, 2):
            lam = build_Lambda(a, p_mid, M)
            assert np.max(np.abs(lam - S @ ctx.A[a] @ Sinv)) < 1e-16

    def test_r_row_vs_annular_form(self, p_mid, pts):
        x = pts["x1"]
        row = r_row(x, p_mid, 12)
        ctx = sewing_context(p_mid, 12)
        a = ctx.a_row(x)
        for m in range(1, 13):
            assert abs(row[m - 1] * math.sqrt(m) - a[m - 1]) < 1e-14

    def test_r_row_sign_flip(self, p_mid, pts):
        row = r_row(pts["x1"], p_mid, 8)
        rowf = r_row(pts["x1"], p_mid.flipped_branch(), 8)
        for m in range(1, 9):
            assert rowf[m - 1] == ((-1) ** m) * row[m - 1]

    def test_r_row_vanishes_at_eps_zero(self, pts):
        p0 = validate_moduli(1j, 1.2j, 0)
        assert np.max(np.abs(r_row(pts["x1"], p0, 8))) == 0

    def test_p_column_low_entries(self, p_mid, pts):
        y = pts["x2"]
        sig = p_mid.sqrt_eps
        col0 = p_column(0, y, p_mid, 8)
        # m = 1, j = 0: eps^{1/2} P_1(y) with the odd Eisenstein term absent
        assert abs(col0[0] - sig * weierstrass_p(1, y.z, 1.2j)) < 1e-14
        col1 = p_column(1, y, p_mid, 8)
        assert abs(col1[0] - sig * weierstrass_p(2, y.z, 1.2j)) < 1e-14

    def test_p_column_derivative_relation(self, p_mid, pts):
        # P_{1+j} = ((-1)^j / j!) d^j_y P_1 after removing the j = 0 constant
        y = pts["x2"]
        h = 1e-6
        cp = p_column(0, SurfacePoint(2, y.z + h), p_mid, 8)
        cm = p_column(0, SurfacePoint(2, y.z - h), p_mid, 8)
        fd = -(cp - cm) / (2 * h)
        col1 = p_column(1, y, p_mid, 8)
        assert np.max(np.abs(fd - col1)) < 1e-7

    def test_q_row_weight_one_reduction(self, p_mid, pts):
        # N = 1: Q(x) = a(x) (1 - A_abar A_a)^{-1} S^{-1}
        M = 12
        x = pts["x1"]
        q = q_row(1, x, p_mid, M)
        ctx = sewing_context(p_mid, M)
        Sinv = np.diag([1 / math.sqrt(m) for m in range(1, M + 1)])
        ref = ctx.a_row(x) @ ctx.inv[2] @ Sinv
        assert np.max(np.abs(q - ref)) < 1e-14

    def test_q_row_eps_zero_is_shifted_r(self, pts):
        p0 = validate_moduli(1j, 1.2j, 0)
        assert np.max(np.abs(q_row(2, pts["x1"], p0, 10))) == 0

    def test_q_row_self_convergence(self, p_mid, pts):
        q16 = q_row(2, pts["x1"], p_mid, 16)
        q32 = q_row(2, pts["x1"], p_mid, 32)
        # leading entries stabilise; the trailing block is truncation-owned
        assert np.max(np.abs(q16[:8] - q32[:8])) < 1e-12


class TestCoefficientFunctions:
    def test_weight_one_f_equals_nu(self, p_mid, pts):
        ctx = sewing_context(p_mid, 16)
        zc = zhu_context(p_mid, 1, 16)
        for x in pts.values():
            z = np.array([x.z])
            for i in (1, 2):
                assert abs(zc.f_many(i, x.torus, z)[0] - ctx.nu(i, x)) < 1e-13
            assert np.max(np.abs(zc.f_pi_many(x.torus, z))) == 0

    def test_eps_zero_values(self, pts):
        p0 = validate_moduli(1j, 1.2j, 0)
        zc = zhu_context(p0, 2, 16)
        z = np.array([pts["x1"].z])
        assert zc.f_many(1, 1, z)[0] == 1.0
        assert zc.f_many(2, 1, z)[0] == 0.0

    def test_fpi_support(self, p_mid, pts):
        # N F^Pi(x; m) = 0 for m >= K
        for N in (2, 3):
            zc = zhu_context(p_mid, N, 16)
            row = zc.f_pi_many(1, np.array([pts["x1"].z]))[0]
            K = 2 * (N - 1)
            assert np.max(np.abs(row[K - 1:])) == 0
            assert np.max(np.abs(row[: K - 1])) > 0

    def test_weight_one_p2_equals_omega(self, p_mid, pts):
        ctx = sewing_context(p_mid, 16)
        zc = zhu_context(p_mid, 1, 16)
        vals = list(pts.values())
        for i, a in enumerate(vals):
            for b in vals[i + 1:]:
                assert abs(zc.gen_weierstrass(0, 1, a, b) - ctx.omega(a, b)) < 1e-10

    def test_p1_derivative_is_p2(self, p_mid, pts):
        h = 1e-6
        for N in (1, 2):
            zc = zhu_context(p_mid, N, 16)
            x, y = pts["x1"], pts["x2"]
            fd = (zc.gen_weierstrass(0, 0, x, SurfacePoint(2, y.z + h))
                  - zc.gen_weierstrass(0, 0, x, SurfacePoint(2, y.z - h))) / (2 * h)
            assert abs(fd - zc.gen_weierstrass(0, 1, x, y)) < 1e-7

    def test_x_derivative_normalisation(self, p_mid, pts):
        # P_{i,1+j} = (-1)^i / i! d^i_x of P_{0,1+j} times (i+j)!/(i! j!) bookkeeping
        zc = zhu_context(p_mid, 2, 16)
        x, y = pts["x1"], pts["x2b"]
        h = 1e-6
        fd = (zc.gen_weierstrass(0, 1, SurfacePoint(1, x.z + h), y)
              - zc.gen_weierstrass(0, 1, SurfacePoint(1, x.z - h), y)) / (2 * h)
        # P_{1,2} = (-1)/2! d_x d_y P_1 => d_x P_{0,2} = -2 P_{1,2}
        assert abs(fd + 2.0 * zc.gen_weierstrass(1, 1, x, y)) < 1e-6

    def test_pole_structure(self, p_mid, pts):
        zc = zhu_context(p_mid, 2, 16)
        x = pts["x1"]
        for d in (1e-3, 1e-4):
            y = SurfacePoint(1, x.z + d)
            val = (x.z - y.z) * zc.gen_weierstrass(0, 0, x, y)
            assert abs(val - 1.0) < 40 * d

    def test_regular_diagonal_difference(self, p_mid, pts):
        # N P_{1+j}(x, y) - P_{1+j}(x - y) stays bounded as y -> x
        zc = zhu_context(p_mid, 2, 16)
        x = pts["x1"]
        vals = []
        for d in (1e-2, 1e-3):
            y = SurfacePoint(1, x.z + d)
            vals.append(zc.gen_weierstrass(0, 1, x, y)
                        - weierstrass_p(2, x.z - y.z, 1j))
        assert abs(vals[0] - vals[1]) < 1e-2

    def test_coincident_rejected(self, p_mid, pts):
        zc = zhu_context(p_mid, 2, 16)
        with pytest.raises(DomainViolation):
            zc.gen_weierstrass(0, 0, pts["x1"], pts["x1"])


class TestTwoDifferentialBasis:
    def test_eps_zero_third_element(self, pts):
        p0 = validate_moduli(1j, 1.2j, 0)
        x = pts["x1"]
        phi = two_diff_basis(x, p0, 16)
        assert phi[0] == 1.0
        assert phi[1] == 0.0
        assert abs(phi[2] - weierstrass_p(2, x.z, 1j)) < 1e-14

    def test_branch_invariance(self, p_mid, pts):
        x = pts["x2"]
        a = two_diff_basis(x, p_mid, 16)
        b = two_diff_basis(x, p_mid.flipped_branch(), 16)
        assert max(abs(u - v) for u, v in zip(a, b)) < 1e-14


class TestClosedForm:
    def test_series_equals_closed(self, p_mid, pts):
        zc = zhu_context(p_mid, 2, 16)
        vals = list(pts.values())
        for i, a in enumerate(vals):
            for b in vals[i + 1:]:
                s = zhu_context(p_mid, 2, 24).gen_weierstrass(0, 0, a, b)
                c = p21_closed_form(a, b, p_mid, 24)
                assert abs(s - c) < 1e-9, (a, b)

    def test_residue_by_contour(self, p_mid, pts):
        # simple pole at y = x with unit residue, extracted by quadrature
        zc = zhu_context(p_mid, 2, 16)
        x = pts["x1"]
        r, n = 1e-2, 64
        acc = 0j
        for s in range(n):
            w = cmath.exp(2j * math.pi * s / n)
            y = SurfacePoint(1, x.z + r * w)
            # residue in y of P(x, y): integrate over y around x
            acc += zc.gen_weierstrass(0, 0, x, y) * (2j * math.pi * r * w / n)
        # d_y orientation: P ~ 1/(x - y) = -1/(y - x), so the y-residue is -1
        assert abs(acc / (2j * math.pi) + 1.0) < 1e-4

    def test_wronskian_rejection_at_eps_zero(self, pts):
        p0 = validate_moduli(1j, 1.2j, 0)
        with pytest.raises(DomainViolation):
            p21_closed_form(pts["x1"], pts["x1b"], p0, 16)
