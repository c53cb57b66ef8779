"""Two-tori sewing of a genus-two surface.

A genus-two surface is built from tori S_1, S_2 (moduli tau_1, tau_2) by
excising the disc |z_a| <= |eps|/r_abar from each and identifying the
annuli via z_1 z_2 = eps.  Everything geometric is expressed through the
moment matrices

    A_a(k, l) = (-1)^{k+1} eps^{(k+l)/2} / sqrt(k*l)
                * (k+l-1)! / ((k-1)!(l-1)!) * E_{k+l}(tau_a),

truncated at a finite order M (1-based indices (k, l) map to 0-based
array indices).  Half powers of eps always enter through the stored
square root sigma, so a single branch choice propagates everywhere;
observables are branch independent and tested as such.

Form-valued functions return local-coordinate coefficients: the dx (or
dx dy, dx^2) factors are implicit.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .elliptic import (
    DEFAULT_SERIES,
    DomainViolation,
    SeriesConfig,
    eisenstein,
    min_lattice_distance,
    weierstrass_p,
    weierstrass_p_many,
)

TWO_PI_I = 2j * math.pi

DEFAULT_ORDER = 16
MAX_ORDER = 96
ANNULUS_MARGIN = 0.05


class NonConvergence(ArithmeticError):
    """Truncated Neumann series outside its convergence regime."""


@dataclass(frozen=True)
class ModuliPoint:
    """A point (tau1, tau2, eps) of the sewing domain with a fixed branch
    sigma = sqrt_eps of the square root of eps."""

    tau1: complex
    tau2: complex
    eps: complex
    sqrt_eps: complex

    def tau(self, a: int) -> complex:
        return self.tau1 if a == 1 else self.tau2

    @cached_property
    def dists(self) -> tuple:
        return (min_lattice_distance(self.tau1), min_lattice_distance(self.tau2))

    @cached_property
    def domain_bound(self) -> float:
        d1, d2 = self.dists
        return 0.25 * d1 * d2

    @cached_property
    def r_annulus(self) -> float:
        """Common outer annulus radius r_1 = r_2 (symmetric choice)."""
        d1, d2 = self.dists
        return 0.5 * math.sqrt(d1 * d2) * (1.0 - ANNULUS_MARGIN)

    @cached_property
    def inner_radius(self) -> float:
        return abs(self.eps) / self.r_annulus

    def flipped_branch(self) -> "ModuliPoint":
        return ModuliPoint(self.tau1, self.tau2, self.eps, -self.sqrt_eps)

    def swapped(self) -> "ModuliPoint":
        return ModuliPoint(self.tau2, self.tau1, self.eps, self.sqrt_eps)


def validate_moduli(tau1, tau2, eps, sqrt_eps=None) -> ModuliPoint:
    """Build a ModuliPoint, enforcing |eps| < (1/4) D(q1) D(q2) strictly."""
    t1, t2, e = complex(tau1), complex(tau2), complex(eps)
    if not (t1.imag > 0 and t2.imag > 0):
        raise DomainViolation("tau1 and tau2 must lie in the upper half plane")
    bound = 0.25 * min_lattice_distance(t1) * min_lattice_distance(t2)
    if not abs(e) < bound:
        raise DomainViolation(
            f"|eps| = {abs(e):.6g} violates the sewing bound |eps| < {bound:.6g}"
        )
    if sqrt_eps is None:
        sqrt_eps = cmath.sqrt(e)
    else:
        sqrt_eps = complex(sqrt_eps)
        if abs(sqrt_eps * sqrt_eps - e) > 1e-14 * max(1.0, abs(e)):
            raise DomainViolation("sqrt_eps**2 != eps")
    return ModuliPoint(t1, t2, e, sqrt_eps)


@dataclass(frozen=True)
class SurfacePoint:
    """A point on torus 1 or 2 in its local coordinate."""

    torus: int
    z: complex

    def __post_init__(self):
        if self.torus not in (1, 2):
            raise DomainViolation("torus index must be 1 or 2")


def other(a: int) -> int:
    return 2 if a == 1 else 1


def check_point(p: ModuliPoint, x: SurfacePoint, slack: float = 1e-9):
    """Annulus membership |eps|/r <= |z| <= r for user-facing points."""
    r = p.r_annulus
    az = abs(x.z)
    if az < p.inner_radius * (1.0 - slack) - slack:
        raise DomainViolation(
            f"|z| = {az:.6g} inside the excised disc (inner radius {p.inner_radius:.6g})"
        )
    if az > r * (1.0 + slack):
        raise DomainViolation(f"|z| = {az:.6g} outside the annulus (outer radius {r:.6g})")


# ---------------------------------------------------------------------------
# A-matrices and the sewing context
# ---------------------------------------------------------------------------

def build_A(a: int, p: ModuliPoint, M: int, cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    """Truncated M x M moment matrix A_a.

    Entries with k + l odd vanish (odd Eisenstein series), so every
    surviving entry carries an integer power of eps via sigma^{k+l}.
    """
    tau = p.tau(a)
    sig = p.sqrt_eps
    A = np.zeros((M, M), dtype=complex)
    if p.eps == 0:
        return A
    ev = {n: eisenstein(n, tau, cfg) for n in range(2, 2 * M + 1, 2)}
    sig_pows = [sig ** n for n in range(2 * M + 1)]
    for k in range(1, M + 1):
        for l in range(k, M + 1):
            if (k + l) % 2 == 1:
                continue
            # (k+l-1)! / ((k-1)!(l-1)!) = comb(k+l-1, k-1) * l, exact integer
            fac = float(math.comb(k + l - 1, k - 1) * l)
            val = ((-1) ** (k + 1)) * sig_pows[k + l] / math.sqrt(k * l) * fac * ev[k + l]
            A[k - 1, l - 1] = val
            A[l - 1, k - 1] = val
    return A


def logdet_series(T: np.ndarray, nmax: int = 200, tol: float = 1e-14) -> complex:
    """-sum_{n>=1} Tr(T^n)/n, the formal-series route to log det(1 - T)."""
    acc = 0j
    P = np.eye(T.shape[0], dtype=complex)
    for n in range(1, nmax + 1):
        P = P @ T
        term = np.trace(P) / n
        acc -= term
        if abs(term) < tol * max(1.0, abs(acc)):
            return acc
    raise NonConvergence("trace power series for log det did not converge")


def neumann_series_inverse(T: np.ndarray, nmax: int = 200, tol: float = 1e-14) -> np.ndarray:
    """sum_{n>=0} T^n, the formal-series route to (1 - T)^{-1}."""
    acc = np.eye(T.shape[0], dtype=complex)
    P = np.eye(T.shape[0], dtype=complex)
    for _ in range(nmax):
        P = P @ T
        acc += P
        if np.max(np.abs(P)) < tol * max(1.0, float(np.max(np.abs(acc)))):
            return acc
    raise NonConvergence("Neumann series did not converge")


class SewingContext:
    """Cached per-(moduli, order) data: A-matrices, resolvents, log det,
    the period matrix, and the column vectors entering nu and omega."""

    def __init__(self, p: ModuliPoint, M: int, cfg: SeriesConfig = DEFAULT_SERIES):
        if M < 1:
            raise DomainViolation("truncation order must be >= 1")
        self.p = p
        self.M = M
        self.cfg = cfg
        self.A = {1: build_A(1, p, M, cfg), 2: build_A(2, p, M, cfg)}
        T12 = self.A[1] @ self.A[2]
        lam = np.linalg.eigvals(T12)
        rho = float(np.max(np.abs(lam))) if M else 0.0
        if rho >= 1.0:
            raise NonConvergence(
                f"spectral radius proxy {rho:.4f} >= 1 at truncation M={M}"
            )
        self.spectral_radius = rho
        # principal log of each (1 - lambda) with |lambda| < 1: continuous
        # continuation from eps = 0, matching the trace power series
        self.logdet = complex(np.sum(np.log1p(-lam)))
        eye = np.eye(M, dtype=complex)
        self.inv = {
            1: np.linalg.solve(eye - T12, eye),                      # (1 - A1 A2)^{-1}
            2: np.linalg.solve(eye - self.A[2] @ self.A[1], eye),    # (1 - A2 A1)^{-1}
        }

    # -- period matrix ------------------------------------------------------

    @cached_property
    def omega_period(self) -> np.ndarray:
        p = self.p
        om = np.zeros((2, 2), dtype=complex)
        e = p.eps
        om[0, 0] = p.tau1 + e * (self.A[2] @ self.inv[1])[0, 0] / TWO_PI_I
        om[1, 1] = p.tau2 + e * (self.A[1] @ self.inv[2])[0, 0] / TWO_PI_I
        om[0, 1] = -e * self.inv[1][0, 0] / TWO_PI_I
        om[1, 0] = om[0, 1]
        return om

    # -- rows and columns ---------------------------------------------------

    def a_row_many(self, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """Rows a(x; k), k = 1..M, for an array of coordinates on one torus;
        deriv > 0 applies d^deriv/dz^deriv term by term."""
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        tau = self.p.tau(torus)
        sig = self.p.sqrt_eps
        out = np.zeros((zs.size, self.M), dtype=complex)
        if sig == 0:
            return out
        for k in range(1, self.M + 1):
            # d^i/dz^i P_{k+1} = (-1)^i ((k+i)!/k!) P_{k+1+i}
            fac = math.sqrt(k) * sig ** k
            if deriv:
                fac *= ((-1) ** deriv) * math.prod(range(k + 1, k + deriv + 1))
            out[:, k - 1] = fac * weierstrass_p_many(k + 1 + deriv, zs, tau, self.cfg)
        return out

    def a_row(self, x: SurfacePoint, deriv: int = 0) -> np.ndarray:
        return self.a_row_many(x.torus, np.array([x.z]), deriv)[0]

    @cached_property
    def _nu_cols(self) -> dict:
        """Column w with nu_i(x on torus t) = delta_{it} + sigma * a(x) @ w."""
        cols = {}
        for i in (1, 2):
            ab = other(i)
            inv_i = self.inv[i] if i == 1 else self.inv[2]
            # (1 - A_i A_abar)^{-1}: i=1 -> inv[1], i=2 -> inv[2]
            cols[(i, i)] = (self.A[ab] @ inv_i)[:, 0]
            cols[(i, ab)] = -inv_i[:, 0]
        return cols

    def nu_many(self, i: int, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        rows = self.a_row_many(torus, z, deriv)
        base = 1.0 if (torus == i and deriv == 0) else 0.0
        return base + self.p.sqrt_eps * rows @ self._nu_cols[(i, torus)]

    def nu(self, i: int, x: SurfacePoint, deriv: int = 0) -> complex:
        return complex(self.nu_many(i, x.torus, np.array([x.z]), deriv)[0])

    @cached_property
    def _omega_mid(self) -> dict:
        """Kernel matrices: same torus a -> A_abar (1 - A_a A_abar)^{-1};
        cross (x on a, y on abar) -> -(1 - A_abar A_a)^{-1}."""
        return {
            (1, 1): self.A[2] @ self.inv[1],
            (2, 2): self.A[1] @ self.inv[2],
            (1, 2): -self.inv[2],
            (2, 1): -self.inv[1],
        }

    def omega(self, x: SurfacePoint, y: SurfacePoint, dx_deriv: int = 0, dy_deriv: int = 0) -> complex:
        """dx dy coefficient of the normalised bidifferential omega(x, y)."""
        if x.torus == y.torus and x.z == y.z:
            raise DomainViolation("omega needs x != y on a coincident torus")
        rx = self.a_row_many(x.torus, np.array([x.z]), dx_deriv)[0]
        ry = self.a_row_many(y.torus, np.array([y.z]), dy_deriv)[0]
        val = rx @ self._omega_mid[(x.torus, y.torus)] @ ry
        if x.torus == y.torus:
            # d^i/dx^i d^j/dy^j P_2(x - y) = (-1)^i (i+j+1)! P_{2+i+j}(x - y)
            k = 2 + dx_deriv + dy_deriv
            fac = ((-1) ** dx_deriv) * math.factorial(k - 1)
            val += fac * weierstrass_p(k, x.z - y.z, self.p.tau(x.torus), self.cfg)
        return complex(val)

    def s_proj(self, x: SurfacePoint, deriv: int = 0) -> complex:
        """dx^2 coefficient of the projective connection s(x) = 6 * lim of
        (omega(x, y) - 1/(x-y)^2), evaluated analytically."""
        tau = self.p.tau(x.torus)
        mid = self._omega_mid[(x.torus, x.torus)]
        if deriv == 0:
            row = self.a_row(x)
            return complex(6.0 * eisenstein(2, tau, self.cfg) + 6.0 * row @ mid @ row)
        if deriv == 1:
            row = self.a_row(x)
            row1 = self.a_row(x, deriv=1)
            return complex(12.0 * row1 @ mid @ row)
        raise DomainViolation("s derivative implemented for orders 0 and 1 only")


@lru_cache(maxsize=96)
def sewing_context(p: ModuliPoint, M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES) -> SewingContext:
    return SewingContext(p, M, cfg)


def resolve_order(p: ModuliPoint, M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES,
                  tol: float = 1e-11) -> int:
    """Double M until log det and the period matrix stabilise below tol."""
    if p.eps == 0:
        return M
    while M < MAX_ORDER:
        c1 = sewing_context(p, M, cfg)
        c2 = sewing_context(p, 2 * M, cfg)
        d = abs(c1.logdet - c2.logdet) + float(np.max(np.abs(c1.omega_period - c2.omega_period)))
        if d < tol * max(1.0, abs(c1.logdet)):
            return M
        M *= 2
    return MAX_ORDER


def required_order(p: ModuliPoint, M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES,
                   edge: float = 0.94, tail: float = 3e-10) -> int:
    """Truncation order for full-accuracy work at this moduli point.

    Combines the log det / period stabilisation rule with the cross-tori
    pairing requirement (|eps| / (edge * r)^2)^M <= tail for sample points
    at the annulus edge.
    """
    M = resolve_order(p, M, cfg)
    if p.eps == 0:
        return M
    ratio = abs(p.eps) / (edge * p.r_annulus) ** 2
    if ratio > 1e-3:
        need = int(math.ceil(math.log(tail) / math.log(ratio)))
        M = max(M, min(MAX_ORDER, 8 * ((need + 7) // 8)))
    return M


# ---------------------------------------------------------------------------
# Spec-level operations (annulus-checked wrappers)
# ---------------------------------------------------------------------------

def neumann(p: ModuliPoint, M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES) -> dict:
    ctx = sewing_context(p, M, cfg)
    return {"inv": ctx.inv[1], "logdet": ctx.logdet}


def period_matrix(p: ModuliPoint, M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    return sewing_context(p, M, cfg).omega_period


def annular_form(x: SurfacePoint, k: int, p: ModuliPoint, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """a(x; k) = sqrt(k) eps^{k/2} P_{k+1}(x, tau_a), the dx coefficient."""
    check_point(p, x)
    if k < 1:
        raise DomainViolation("a(x; k) needs k >= 1")
    if p.sqrt_eps == 0:
        return 0j
    return complex(
        math.sqrt(k) * p.sqrt_eps ** k * weierstrass_p(k + 1, x.z, p.tau(x.torus), cfg)
    )


def one_form_nu(i: int, x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
                cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    check_point(p, x)
    return sewing_context(p, M, cfg).nu(i, x)


def bidifferential_omega(x: SurfacePoint, y: SurfacePoint, p: ModuliPoint,
                         M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    check_point(p, x)
    check_point(p, y)
    return sewing_context(p, M, cfg).omega(x, y)


def projective_connection(x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
                          cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    check_point(p, x)
    return sewing_context(p, M, cfg).s_proj(x)
