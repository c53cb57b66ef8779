"""Weight-N genus-two Zhu-recursion coefficient machinery.

For a quasiprimary vector of weight N set K = 2(N - 1).  The machinery
lives in the Lambda-picture,

    Lambda_a(m, n) = eps^{(m+n)/2} (-1)^{n+1} C(m+n-1, n) E_{m+n}(tau_a),

which is the diagonal conjugate S A_a S^{-1} of the sewing moment matrix
(S = diag(sqrt(m))).  With the K-shift matrices Gamma, Delta, Pi and
Lambda~_a = Lambda_a Delta, the coefficient functions are

    Q(x)     = R(x) Delta (1 - Lambda~_abar Lambda~_a)^{-1},  x on torus a,
    F_a(x), F^Pi(x), and the generalised Weierstrass functions P_{i,1+j},

everything returned as local-coordinate coefficients (dx^N implicit).
Truncation caveat: Delta^T Delta = 1 only holds on the leading M - K
rows; all operations here confine themselves to that stable block.

E_m with odd m is taken to be 0 throughout (consistent with the odd
Eisenstein series vanishing); N >= 3 is computed by the same formulas
but carries no accuracy guarantee (experimental probing only).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .elliptic import DEFAULT_SERIES, DomainViolation, SeriesConfig, eisenstein, weierstrass_p_many
from .sewing import (
    DEFAULT_ORDER,
    ModuliPoint,
    NonConvergence,
    SurfacePoint,
    check_point,
    other,
    sewing_context,
)


@dataclass(frozen=True)
class ZhuWeight:
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise DomainViolation("reduction weight N must be >= 1")

    @property
    def K(self) -> int:
        return 2 * (self.N - 1)


def shift_matrices(N: int, M: int) -> dict:
    """Truncated Gamma, Delta, Pi for weight N at order M (requires M > K)."""
    K = 2 * (N - 1)
    if M <= K:
        raise DomainViolation(f"order M={M} must exceed K={K}")
    gam = np.zeros((M, M))
    delta = np.zeros((M, M))
    for m in range(1, M + 1):
        n = K - m
        if 1 <= n <= M:
            gam[m - 1, n - 1] = 1.0
        n = m - K
        if 1 <= n <= M:
            delta[m - 1, n - 1] = 1.0
    return {"gamma": gam, "delta": delta, "pi": gam @ gam}


def build_Lambda(a: int, p: ModuliPoint, M: int, cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    tau = p.tau(a)
    sig = p.sqrt_eps
    L = np.zeros((M, M), dtype=complex)
    if p.eps == 0:
        return L
    ev = {k: eisenstein(k, tau, cfg) for k in range(2, 2 * M + 1, 2)}
    sig_pows = [sig ** n for n in range(2 * M + 1)]
    for m in range(1, M + 1):
        for n in range(1, M + 1):
            if (m + n) % 2 == 1:
                continue
            L[m - 1, n - 1] = (
                sig_pows[m + n] * ((-1) ** (n + 1)) * math.comb(m + n - 1, n) * ev[m + n]
            )
    return L


class ZhuContext:
    """Lambda matrices, shifts, and resolvents for one (moduli, N, M)."""

    def __init__(self, p: ModuliPoint, N: int, M: int = DEFAULT_ORDER,
                 cfg: SeriesConfig = DEFAULT_SERIES):
        self.p = p
        self.N = N
        self.K = 2 * (N - 1)
        self.M = M
        self.cfg = cfg
        shifts = shift_matrices(N, M)
        self.gamma = shifts["gamma"]
        self.delta = shifts["delta"]
        self.pi = shifts["pi"]
        self.Lam = {1: build_Lambda(1, p, M, cfg), 2: build_Lambda(2, p, M, cfg)}
        self.Lamt = {a: self.Lam[a] @ self.delta for a in (1, 2)}
        eye = np.eye(M, dtype=complex)
        self.inv = {}
        for a in (1, 2):
            T = self.Lamt[other(a)] @ self.Lamt[a]
            rho = float(np.max(np.abs(np.linalg.eigvals(T)))) if p.eps != 0 else 0.0
            if rho >= 1.0:
                raise NonConvergence(
                    f"(1 - Lamt_{other(a)} Lamt_{a}) resolvent: spectral radius {rho:.3f} >= 1"
                )
            # (1 - Lamt_abar Lamt_a)^{-1}, used for x on torus a
            self.inv[a] = np.linalg.solve(eye - T, eye)
        self.sewing = sewing_context(p, M, cfg)

    # -- vectors -------------------------------------------------------------

    def r_row_many(self, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """(-1)^i/i! d^i/dx^i of R(x; m) = eps^{m/2} P_{m+1}(x), m = 1..M.

        The normalised derivative equals eps^{m/2} C(m+i, i) P_{m+1+i}(x).
        """
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        sig = self.p.sqrt_eps
        tau = self.p.tau(torus)
        out = np.zeros((zs.size, self.M), dtype=complex)
        if sig == 0:
            return out
        for m in range(1, self.M + 1):
            fac = (sig ** m) * math.comb(m + deriv, deriv)
            out[:, m - 1] = fac * weierstrass_p_many(m + 1 + deriv, zs, tau, self.cfg)
        return out

    def p_col(self, j: int, y: SurfacePoint) -> np.ndarray:
        """P_{1+j}(y; m) = eps^{m/2} C(m+j-1, j) (P_{m+j}(y) - delta_{j0} E_m)."""
        sig = self.p.sqrt_eps
        tau = self.p.tau(y.torus)
        out = np.zeros(self.M, dtype=complex)
        if sig == 0:
            return out
        zs = np.array([y.z])
        for m in range(1, self.M + 1):
            val = weierstrass_p_many(m + j, zs, tau, self.cfg)[0] if m + j >= 1 else 0j
            if j == 0 and m % 2 == 0 and m >= 2:
                val -= eisenstein(m, tau, self.cfg)
            out[m - 1] = (sig ** m) * math.comb(m + j - 1, j) * val
        return out

    def q_row_many(self, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """(-1)^i/i! d^i Q(x) rows for x on the given torus (array of z)."""
        rows = self.r_row_many(torus, z, deriv)
        return rows @ self.delta @ self.inv[torus]

    def q_row(self, x: SurfacePoint, deriv: int = 0) -> np.ndarray:
        return self.q_row_many(x.torus, np.array([x.z]), deriv)[0]

    # -- coefficient functions ------------------------------------------------

    def f_many(self, i: int, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """(-1)^d/d! d^d/dx^d of F_i(x) for x on `torus` (dx^N implicit)."""
        q = self.q_row_many(torus, z, deriv)
        sig = self.p.sqrt_eps
        if torus == i:
            base = 1.0 if deriv == 0 else 0.0
            return base + sig * (q @ self.Lamt[other(i)][:, 0])
        return ((-1) ** self.N) * sig * q[:, 0]

    def f_pi_many(self, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """Rows of F^Pi(x) (at most K-1 nonzero entries)."""
        r = self.r_row_many(torus, z, deriv)
        q = self.q_row_many(torus, z, deriv)
        a, ab = torus, other(torus)
        mid = self.Lamt[ab] @ self.Lam[a] + self.Lam[ab] @ self.gamma
        return (r + q @ mid) @ self.pi

    def f_pi1_over_sigma_many(self, torus: int, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """F^Pi(x; 1)/sigma with the eps = 0 limit taken analytically."""
        if self.K < 2:
            return np.zeros(np.atleast_1d(z).size, dtype=complex)
        sig = self.p.sqrt_eps
        if sig != 0:
            return self.f_pi_many(torus, z, deriv)[:, 0] / sig
        # R(x; 1)/sigma = C(1+d, d) P_{2+d}(x); Q-corrections vanish with eps
        zs = np.atleast_1d(np.asarray(z, dtype=complex))
        fac = math.comb(1 + deriv, deriv)
        return fac * weierstrass_p_many(2 + deriv, zs, self.p.tau(torus), self.cfg)

    def f_coefficients(self, x: SurfacePoint) -> dict:
        z = np.array([x.z])
        return {
            "F1": complex(self.f_many(1, x.torus, z)[0]),
            "F2": complex(self.f_many(2, x.torus, z)[0]),
            "FPi": (self.r_row_many(x.torus, z)[0]
                    + self.q_row_many(x.torus, z)[0]
                    @ (self.Lamt[other(x.torus)] @ self.Lam[x.torus]
                       + self.Lam[other(x.torus)] @ self.gamma)) @ self.pi,
        }

    # -- generalised Weierstrass functions -------------------------------------

    def gen_weierstrass(self, i: int, j: int, x: SurfacePoint, y: SurfacePoint) -> complex:
        """P_{i,1+j}(x, y) = (-1)^i/(i+j)! d^i/dx^i d^j/dy^j P_1(x, y)."""
        if i < 0 or j < 0:
            raise DomainViolation("derivative orders must be >= 0")
        if x.torus == y.torus and x.z == y.z:
            raise DomainViolation("generalised Weierstrass functions need x != y")
        a = x.torus
        tau_a = self.p.tau(a)
        sig = self.p.sqrt_eps
        pi_N = 0.0 if self.N == 1 else 1.0
        dq = self.q_row(x, deriv=i)
        xz = np.array([x.z])
        if y.torus == a:
            if j == 0:
                val = (
                    weierstrass_p_many(1 + i, np.array([x.z - y.z]), tau_a, self.cfg)[0]
                    - weierstrass_p_many(1 + i, xz, tau_a, self.cfg)[0]
                    - dq @ (self.Lamt[other(a)] @ self.p_col(0, y))
                )
                if pi_N:
                    val -= (dq @ self.Lam[other(a)])[self.K - 1]
                return complex(val)
            val = weierstrass_p_many(1 + i + j, np.array([x.z - y.z]), tau_a, self.cfg)[0]
            val += ((-1) ** (1 + j)) / math.comb(i + j, i) * (
                dq @ (self.Lamt[other(a)] @ self.p_col(j, y))
            )
            return complex(val)
        # opposite tori
        if j == 0:
            val = dq @ self.p_col(0, y)
            if pi_N:
                val += (sig ** self.K) * math.comb(self.K + i, i) * \
                    weierstrass_p_many(self.K + 1 + i, xz, tau_a, self.cfg)[0]
                val += (dq @ self.Lamt[other(a)] @ self.Lam[a])[self.K - 1]
            return complex(((-1) ** (self.N + 1)) * val)
        val = ((-1) ** (self.N + 1 + j)) / math.comb(i + j, i) * (dq @ self.p_col(j, y))
        return complex(val)


@lru_cache(maxsize=96)
def zhu_context(p: ModuliPoint, N: int, M: int = DEFAULT_ORDER,
                cfg: SeriesConfig = DEFAULT_SERIES) -> ZhuContext:
    return ZhuContext(p, N, M, cfg)


# ---------------------------------------------------------------------------
# Spec-level operations
# ---------------------------------------------------------------------------

def r_row(x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
          cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    check_point(p, x)
    return zhu_context(p, 1, M, cfg).r_row_many(x.torus, np.array([x.z]))[0]


def p_column(j: int, y: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
             cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    check_point(p, y)
    return zhu_context(p, 1, M, cfg).p_col(j, y)


def q_row(N: int, x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
          cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    check_point(p, x)
    return zhu_context(p, N, M, cfg).q_row(x)


def f_coefficients(N: int, x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
                   cfg: SeriesConfig = DEFAULT_SERIES) -> dict:
    check_point(p, x)
    return zhu_context(p, N, M, cfg).f_coefficients(x)


def gen_weierstrass(N: int, i: int, j: int, x: SurfacePoint, y: SurfacePoint,
                    p: ModuliPoint, M: int = DEFAULT_ORDER,
                    cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    check_point(p, x)
    check_point(p, y)
    return zhu_context(p, N, M, cfg).gen_weierstrass(i, j, x, y)


def two_diff_basis(x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
                   cfg: SeriesConfig = DEFAULT_SERIES) -> tuple:
    """(Phi_1, Phi_2, Phi_3)(x), the normalised 2-differential basis built
    from the N = 2 coefficient functions; dx^2 implicit."""
    check_point(p, x)
    ctx = zhu_context(p, 2, M, cfg)
    z = np.array([x.z])
    return (
        complex(ctx.f_many(1, x.torus, z)[0]),
        complex(ctx.f_many(2, x.torus, z)[0]),
        complex(ctx.f_pi1_over_sigma_many(x.torus, z)[0]),
    )


@lru_cache(maxsize=4096)
def _nu_moduli_gradients(torus: int, z: complex, p: ModuliPoint, M: int,
                         cfg: SeriesConfig, fd) -> tuple:
    """(q1 dq1, q2 dq2, eps deps) of nu_i at a fixed local coordinate;
    x-independent, so shared across evaluation points of the closed form."""
    from . import calculus

    y = SurfacePoint(torus, z)
    out = []
    for i in (1, 2):
        f = lambda q, i=i: sewing_context(q, M, cfg).nu(i, y)
        out.append((
            calculus.moduli_derivative(f, "tau1", p, fd),
            calculus.moduli_derivative(f, "tau2", p, fd),
            calculus.moduli_derivative(f, "eps", p, fd) if p.eps != 0 else 0j,
        ))
    return tuple(out)


def p21_closed_form(x: SurfacePoint, y: SurfacePoint, p: ModuliPoint,
                    M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES,
                    fd=None) -> complex:
    """Closed determinant-ratio form of the N = 2 generalised Weierstrass
    function: a (2,-1)-bidifferential built from omega, nu and the moduli
    derivatives of nu.  Rejected at (near-)zeros of the Wronskian of nu."""
    from . import calculus  # local import: calculus builds on this module

    check_point(p, x)
    check_point(p, y)
    if fd is None:
        fd = calculus.FDConfig()
    ctx = sewing_context(p, M, cfg)
    n1y, n2y = ctx.nu(1, y), ctx.nu(2, y)
    n1x, n2x = ctx.nu(1, x), ctx.nu(2, x)
    d1y, d2y = ctx.nu(1, y, deriv=1), ctx.nu(2, y, deriv=1)
    wron = n1y * d2y - n2y * d1y
    scale = max(abs(n1y * d2y), abs(n2y * d1y), 1e-30)
    if abs(wron) < 1e-8 * scale or wron == 0:
        raise DomainViolation(
            "Wronskian of the holomorphic 1-forms vanishes at y; the closed form is 0/0 there"
        )
    w_xy = ctx.omega(x, y)
    coeffs = calculus.dx_coefficients(x, p, M, cfg)
    grads = _nu_moduli_gradients(y.torus, y.z, p, M, cfg, fd)
    grad1 = sum(c * d for c, d in zip(coeffs, grads[0]))
    grad2 = sum(c * d for c, d in zip(coeffs, grads[1]))
    num = w_xy * (n1x * n2y - n2x * n1y) + (n1y * grad2 - n2y * grad1)
    return complex(-num / wron)
