"""Symplectic action on periods and forms."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genus2.elliptic import DomainViolation
from genus2.modular import (
    Sp4Element,
    check_equivariance,
    check_nabla_invariance,
    dOmega_tilde,
    sp4_identity,
    sp4_inversion,
    sp4_swap,
    sp4_translation,
    transform_forms,
    transform_period,
)
from genus2.sewing import SurfacePoint, period_matrix, sewing_context, validate_moduli

GENS = [sp4_translation(1, 1), sp4_translation(2, 2), sp4_translation(1, 2),
        sp4_inversion(), sp4_swap()]


@pytest.fixture(scope="module")
def om():
    return period_matrix(validate_moduli(1j, 1.2j, 0.3), 16)


class TestSp4Element:
    def test_generators_are_symplectic(self):
        for g in GENS:
            g._check()

    def test_non_symplectic_rejected(self):
        # C must satisfy A^T C = C^T A; an asymmetric C with A = 1 fails
        with pytest.raises(DomainViolation):
            Sp4Element.from_blocks([[1, 0], [0, 1]], [[0, 0], [0, 0]],
                                   [[0, 1], [0, 0]], [[1, 0], [0, 1]])

    def test_non_integer_rejected(self):
        with pytest.raises(DomainViolation):
            Sp4Element.from_blocks([[1.5, 0], [0, 1]], [[0, 0], [0, 0]],
                                   [[0, 0], [0, 0]], [[1, 0], [0, 1]])

    def test_group_closure(self):
        g = sp4_inversion() @ sp4_translation(1, 2) @ sp4_swap()
        g._check()


class TestTransformPeriod:
    def test_translation(self, om):
        out = transform_period(sp4_translation(1, 1), om)
        assert np.max(np.abs(out - om - np.array([[1, 0], [0, 0]]))) < 1e-14

    def test_inversion(self, om):
        out = transform_period(sp4_inversion(), om)
        assert np.max(np.abs(out + np.linalg.inv(om))) < 1e-13

    def test_identity(self, om):
        assert np.max(np.abs(transform_period(sp4_identity(), om) - om)) == 0

    @given(st.lists(st.integers(min_value=0, max_value=4), min_size=1, max_size=5))
    @settings(max_examples=25, deadline=None)
    def test_imaginary_part_stays_positive(self, word):
        om0 = period_matrix(validate_moduli(1j, 1.2j, 0.3), 16)
        g = sp4_identity()
        for k in word:
            g = g @ GENS[k]
        out = transform_period(g, om0)
        eig = np.linalg.eigvalsh(out.imag)
        assert np.all(eig > 0)
        assert np.max(np.abs(out - out.T)) < 1e-12


class TestTransformForms:
    def test_identity_fixes_everything(self, om):
        nu_x = np.array([0.9 + 0.1j, -0.2 + 0.4j])
        out = transform_forms(sp4_identity(), om, nu_x, nu_x, omega_xy=1.2j, s_x=0.5)
        assert np.max(np.abs(out["nu_x"] - nu_x)) == 0
        assert out["omega_xy"] == 1.2j
        assert out["s_x"] == 0.5

    def test_translation_fixes_omega_and_s(self, om):
        nu_x = np.array([0.9 + 0.1j, -0.2 + 0.4j])
        nu_y = np.array([0.1 - 0.3j, 1.1 + 0.2j])
        out = transform_forms(sp4_translation(1, 2), om, nu_x, nu_y,
                              omega_xy=0.3 + 0.1j, s_x=-0.4j)
        assert out["omega_xy"] == 0.3 + 0.1j
        assert out["s_x"] == -0.4j

    def test_transformed_omega_symmetric(self, om):
        # the correction is symmetric under x <-> y by construction
        nu_x = np.array([0.9 + 0.1j, -0.2 + 0.4j])
        nu_y = np.array([0.1 - 0.3j, 1.1 + 0.2j])
        g = sp4_inversion()
        a = transform_forms(g, om, nu_x, nu_y, omega_xy=0.3 + 0.1j)["omega_xy"]
        b = transform_forms(g, om, nu_y, nu_x, omega_xy=0.3 + 0.1j)["omega_xy"]
        assert abs(a - b) < 1e-15


class TestNablaInvariance:
    def test_translation_pattern(self, om):
        out = dOmega_tilde(sp4_translation(1, 1), om)
        assert np.max(np.abs(out[(1, 1)] - np.array([[1, 0], [0, 0]]))) < 1e-14

    def test_symmetry_in_ab(self, om):
        out = dOmega_tilde(sp4_inversion(), om)
        for blk in out.values():
            assert np.max(np.abs(blk - blk.T)) < 1e-14

    def test_fd_oracle(self):
        om = np.array([[1j, 0.1 + 0.05j], [0.1 + 0.05j, 1.3j]])
        nu_x = np.array([0.7 + 0.1j, 0.3 - 0.2j])
        rep = check_nabla_invariance(sp4_inversion(), om, nu_x=nu_x)
        assert rep.passed
        assert rep.max_residual < 1e-7


class TestSewingEquivariance:
    def test_translations_and_swap(self):
        p = validate_moduli(1j, 1.2j, 0.3)
        rep = check_equivariance(p, 16)
        assert rep.passed
        assert rep.max_residual < 1e-9

    def test_transformed_nu_matches_sewing_swap(self):
        # swapping the tori relabels the 1-forms: nu tilde = nu P, and on
        # the swapped surface the same geometric point lives on torus 2
        p = validate_moduli(1j, 1.2j, 0.3)
        ctx = sewing_context(p, 16)
        om = ctx.omega_period
        x = SurfacePoint(1, 0.9 + 0.4j)
        nu_vec = np.array([ctx.nu(1, x), ctx.nu(2, x)])
        out = transform_forms(sp4_swap(), om, nu_vec)["nu_x"]
        ctx_sw = sewing_context(p.swapped(), 16)
        x_sw = SurfacePoint(2, x.z)
        target = np.array([ctx_sw.nu(1, x_sw), ctx_sw.nu(2, x_sw)])
        assert np.max(np.abs(out - target)) < 1e-12
