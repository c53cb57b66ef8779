"""Sp(4, Z) action on the period matrix and on the geometric forms, with
numeric verification of the transformation laws.

Block convention: g = [[A, B], [C, D]] acts by Omega -> (A Omega + B)(C Omega + D)^{-1},
nu -> nu M^{-1} with M = C Omega + D, and omega / s pick up corrections
through d(log det M)/d(Omega_ij), computed exactly via the trace identity
d log det M = Tr(M^{-1} C dOmega).

Only the generators preserving the sewing domain (tau_a translations and
the swap) get equivariance tests against the sewing side; general
elements are tested for internal consistency only, since their action
need not stay on the image of the sewing map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import DomainViolation
from .sewing import ModuliPoint, period_matrix, validate_moduli
from .calculus import ResidualReport


@dataclass(frozen=True)
class Sp4Element:
    """Integer blocks A, B, C, D with the symplectic relations checked exactly."""

    A: tuple
    B: tuple
    C: tuple
    D: tuple

    @staticmethod
    def from_blocks(A, B, C, D) -> "Sp4Element":
        blocks = []
        for blk in (A, B, C, D):
            arr = np.asarray(blk, dtype=object)
            if arr.shape != (2, 2) or not all(isinstance(v, (int, np.integer)) for v in arr.flat):
                raise DomainViolation("Sp4 blocks must be 2x2 integer matrices")
            blocks.append(tuple(tuple(int(v) for v in row) for row in arr))
        el = Sp4Element(*blocks)
        el._check()
        return el

    def _check(self):
        A, B, C, D = (np.array(blk, dtype=object) for blk in (self.A, self.B, self.C, self.D))
        eye = np.eye(2, dtype=object)
        if not (A.T @ C == C.T @ A).all():
            raise DomainViolation("A^T C != C^T A")
        if not (B.T @ D == D.T @ B).all():
            raise DomainViolation("B^T D != D^T B")
        if not (A.T @ D - C.T @ B == eye).all():
            raise DomainViolation("A^T D - C^T B != 1")

    def blocks(self):
        return (np.array(self.A, dtype=float), np.array(self.B, dtype=float),
                np.array(self.C, dtype=float), np.array(self.D, dtype=float))

    def __matmul__(self, g: "Sp4Element") -> "Sp4Element":
        m1 = np.block([[np.array(self.A, dtype=object), np.array(self.B, dtype=object)],
                       [np.array(self.C, dtype=object), np.array(self.D, dtype=object)]])
        m2 = np.block([[np.array(g.A, dtype=object), np.array(g.B, dtype=object)],
                       [np.array(g.C, dtype=object), np.array(g.D, dtype=object)]])
        m = m1 @ m2
        return Sp4Element.from_blocks(m[:2, :2], m[:2, 2:], m[2:, :2], m[2:, 2:])


def sp4_identity() -> Sp4Element:
    return Sp4Element.from_blocks([[1, 0], [0, 1]], [[0, 0], [0, 0]],
                                  [[0, 0], [0, 0]], [[1, 0], [0, 1]])


def sp4_translation(i: int, j: int) -> Sp4Element:
    """Omega -> Omega + S_ij for the symmetrised elementary matrix."""
    b = [[0, 0], [0, 0]]
    b[i - 1][j - 1] = 1
    b[j - 1][i - 1] = 1 if i != j else b[i - 1][j - 1]
    return Sp4Element.from_blocks([[1, 0], [0, 1]], b, [[0, 0], [0, 0]], [[1, 0], [0, 1]])


def sp4_inversion() -> Sp4Element:
    """Omega -> -Omega^{-1}."""
    return Sp4Element.from_blocks([[0, 0], [0, 0]], [[1, 0], [0, 1]],
                                  [[-1, 0], [0, -1]], [[0, 0], [0, 0]])


def sp4_swap() -> Sp4Element:
    """Exchange of the two handles: Omega -> P Omega P."""
    pm = [[0, 1], [1, 0]]
    return Sp4Element.from_blocks(pm, [[0, 0], [0, 0]], [[0, 0], [0, 0]], pm)


def transform_period(g: Sp4Element, om: np.ndarray) -> np.ndarray:
    A, B, C, D = g.blocks()
    m = C @ om + D
    if abs(np.linalg.det(m)) < 1e-14:
        raise DomainViolation("C Omega + D is singular")
    out = (A @ om + B) @ np.linalg.inv(m)
    out = 0.5 * (out + out.T)
    return out


def _dlogdet(g: Sp4Element, om: np.ndarray) -> dict:
    """d(log det M)/d(Omega_ij) for i <= j via Tr(M^{-1} C S_ij)."""
    _, _, C, D = g.blocks()
    m = C @ om + D
    minv = np.linalg.inv(m)
    out = {}
    for (i, j) in ((1, 1), (2, 2), (1, 2)):
        s = np.zeros((2, 2))
        s[i - 1, j - 1] = 1.0
        s[j - 1, i - 1] = 1.0 if i != j else s[i - 1, j - 1]
        out[(i, j)] = complex(np.trace(minv @ C @ s))
    return out


def transform_forms(g: Sp4Element, om: np.ndarray, nu_x: np.ndarray,
                    nu_y: np.ndarray | None = None, omega_xy: complex | None = None,
                    s_x: complex | None = None) -> dict:
    """Transformed values at fixed surface points: nu as a row vector,
    omega(x, y), and the projective connection s(x)."""
    A, B, C, D = g.blocks()
    m = C @ om + D
    minv = np.linalg.inv(m)
    out = {"nu_x": np.asarray(nu_x, dtype=complex) @ minv}
    dld = _dlogdet(g, om)
    if nu_y is not None:
        out["nu_y"] = np.asarray(nu_y, dtype=complex) @ minv
    if omega_xy is not None:
        if nu_y is None:
            raise DomainViolation("omega transformation needs nu values at both points")
        corr = 0j
        for (i, j), d in dld.items():
            corr += 0.5 * (nu_x[i - 1] * nu_y[j - 1] + nu_x[j - 1] * nu_y[i - 1]) * d
        out["omega_xy"] = omega_xy - corr
    if s_x is not None:
        corr = 0j
        for (i, j), d in dld.items():
            corr += nu_x[i - 1] * nu_x[j - 1] * d
        out["s_x"] = s_x - 6.0 * corr
    return out


def dOmega_tilde(g: Sp4Element, om: np.ndarray) -> dict:
    """The closed-form derivative d(Omega~_ab)/d(Omega_ij):
    N_ia N_ib for i = j and N_ia N_jb + N_ib N_ja otherwise, N = M^{-1}."""
    _, _, C, D = g.blocks()
    n = np.linalg.inv(C @ om + D)
    out = {}
    for (i, j) in ((1, 1), (2, 2), (1, 2)):
        blk = np.zeros((2, 2), dtype=complex)
        for a in range(2):
            for b in range(2):
                if i == j:
                    blk[a, b] = n[i - 1, a] * n[i - 1, b]
                else:
                    blk[a, b] = n[i - 1, a] * n[j - 1, b] + n[i - 1, b] * n[j - 1, a]
        out[(i, j)] = blk
    return out


def check_nabla_invariance(g: Sp4Element, om, step: float = 1e-5,
                           tol: float = 1e-7, nu_x: np.ndarray | None = None,
                           M: int = 16) -> ResidualReport:
    """FD-verify d(Omega~)/d(Omega) against the closed form, then the
    invariance statement nabla_x Omega~_ab = nu~_a nu~_b.

    `om` is the 2x2 period matrix, or a ModuliPoint from which both the
    period matrix and 1-form values at a sample point are taken."""
    if isinstance(om, ModuliPoint):
        from .calculus import standard_points
        from .sewing import sewing_context

        ctx = sewing_context(om, M)
        x = standard_points(om, 1)[0]
        if nu_x is None:
            nu_x = np.array([ctx.nu(1, x), ctx.nu(2, x)])
        om = ctx.omega_period
    rep = ResidualReport("nabla_invariance", tol)
    closed = dOmega_tilde(g, om)
    for (i, j), blk in closed.items():
        s = np.zeros((2, 2))
        s[i - 1, j - 1] = 1.0
        s[j - 1, i - 1] = 1.0
        fd = (transform_period(g, om + step * s) - transform_period(g, om - step * s)) / (2 * step)
        rep.add({"ij": [i, j], "check": "fd_jacobian"},
                float(np.max(np.abs(fd - blk))) / max(1.0, float(np.max(np.abs(blk)))))
    if nu_x is not None:
        nu_t = transform_forms(g, om, nu_x)["nu_x"]
        for a in (1, 2):
            for b in (a, 2):
                val = 0j
                for (i, j), blk in closed.items():
                    weight = nu_x[i - 1] * nu_x[j - 1]
                    val += weight * blk[a - 1, b - 1]
                rep.add({"ab": [a, b], "check": "nabla_omega_tilde"},
                        abs(val - nu_t[a - 1] * nu_t[b - 1]) / max(1.0, abs(val)))
    return rep


def check_equivariance(p: ModuliPoint, M: int = 16, tol: float = 1e-9) -> ResidualReport:
    """Sewing-side equivariance for the domain-preserving generators:
    tau_a -> tau_a + 1 matches Omega -> Omega + E_aa, and the swap of the
    tori matches conjugation by the handle swap."""
    rep = ResidualReport("equivariance", tol)
    om = period_matrix(p, M)
    for a in (1, 2):
        shifted = validate_moduli(p.tau1 + (1 if a == 1 else 0),
                                  p.tau2 + (1 if a == 2 else 0), p.eps)
        om_s = period_matrix(shifted, M)
        target = transform_period(sp4_translation(a, a), om)
        rep.add({"generator": f"tau{a}+1"}, float(np.max(np.abs(om_s - target))))
    om_sw = period_matrix(p.swapped(), M)
    target = transform_period(sp4_swap(), om)
    rep.add({"generator": "swap"}, float(np.max(np.abs(om_sw - target))))
    return rep
