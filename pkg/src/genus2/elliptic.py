"""Scalar special functions on a torus.

Eisenstein series E_k, the Dedekind eta function, the Weierstrass-type
functions P_k defined by the Laurent series

    P_1(z, tau) = 1/z - sum_{k>=2} E_k(tau) z^{k-1},
    P_k = ((-1)^{k-1}/(k-1)!) d^{k-1}/dz^{k-1} P_1,

and lattice geometry for Lambda = 2*pi*i*(Z tau + Z).  Conventions:
q = exp(2*pi*i*tau) with tau in the upper half plane; odd Eisenstein
series are identically zero; all q-expansions are truncated at
SeriesConfig.q_terms powers with an estimated tail below tail_tol.

P_k is evaluated strictly inside the Laurent convergence disc
|z| < 0.95 * D(q) where D(q) is the minimal lattice distance; the 0.95
safety factor is a library choice (the sewing formulas never need points
closer to the boundary).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi
TWO_PI_I = 2j * math.pi

# Safety factor applied to the P_k convergence disc.
DISC_SAFETY = 0.95

# Hard cap on the number of Laurent terms retained in a P_k evaluation.
_P_SERIES_CAP = 800


class DomainViolation(ValueError):
    """Argument outside the validity domain of an operation."""


class ConvergenceError(ArithmeticError):
    """A truncated series cannot meet the requested tail tolerance."""


@dataclass(frozen=True)
class TorusModulus:
    """A point tau of the upper half plane with derived nome q."""

    tau: complex

    def __post_init__(self):
        if not (self.tau.imag > 0):
            raise DomainViolation(f"tau must lie in the upper half plane, got {self.tau}")

    @property
    def q(self) -> complex:
        return cmath.exp(TWO_PI_I * self.tau)


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation parameters shared by every q-expansion."""

    q_terms: int = 128
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.q_terms < 1:
            raise DomainViolation("q_terms must be >= 1")
        if not self.tail_tol > 0:
            raise DomainViolation("tail_tol must be > 0")


DEFAULT_SERIES = SeriesConfig()


def _as_tau(tau) -> complex:
    t = tau.tau if isinstance(tau, TorusModulus) else complex(tau)
    if not (t.imag > 0):
        raise DomainViolation(f"tau must lie in the upper half plane, got {t}")
    return t


# ---------------------------------------------------------------------------
# Bernoulli numbers
# ---------------------------------------------------------------------------

# Exact values through B_30 (even index; odd ones vanish beyond B_1).
_BERNOULLI_EXACT = {
    0: Fraction(1),
    2: Fraction(1, 6),
    4: Fraction(-1, 30),
    6: Fraction(1, 42),
    8: Fraction(-1, 30),
    10: Fraction(5, 66),
    12: Fraction(-691, 2730),
    14: Fraction(7, 6),
    16: Fraction(-3617, 510),
    18: Fraction(43867, 798),
    20: Fraction(-174611, 330),
    22: Fraction(854513, 138),
    24: Fraction(-236364091, 2730),
    26: Fraction(8553103, 6),
    28: Fraction(-23749461029, 870),
    30: Fraction(8615841276005, 14322),
}

_AT_TABLE_MAX = 256


@lru_cache(maxsize=None)
def _bernoulli_table(n_max: int) -> tuple:
    """B_0..B_n by the Akiyama-Tanigawa recurrence, cross-checked against
    the hard-coded prefix."""
    row = []
    out = []
    for m in range(n_max + 1):
        row.append(Fraction(1, m + 1))
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        out.append(row[0])
    for k, val in _BERNOULLI_EXACT.items():
        if k <= n_max and out[k] != val:
            raise AssertionError(f"Bernoulli recurrence disagrees with table at B_{k}")
    return tuple(out)


@lru_cache(maxsize=None)
def bernoulli_over_factorial(k: int) -> float:
    """B_k / k! as a float; zeta-product form beyond the exact table."""
    if k % 2 == 1:
        return 0.5 if k == 1 else 0.0
    if k <= _AT_TABLE_MAX:
        return float(_bernoulli_table(_AT_TABLE_MAX)[k] / math.factorial(k))
    # |B_k|/k! = 2 zeta(k)/(2 pi)^k, sign (-1)^{k/2+1}; zeta(k) ~ 1 here.
    zeta = 1.0 + 2.0 ** (-k) + 3.0 ** (-k)
    try:
        mag = 2.0 * zeta * math.exp(-k * math.log(TWO_PI))
    except OverflowError:
        mag = 0.0
    return mag if (k // 2) % 2 == 1 else -mag


# ---------------------------------------------------------------------------
# Eisenstein series
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _divisors(n: int) -> tuple:
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d * d != n:
                out.append(n // d)
        d += 1
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def _sigma(k: int, n: int) -> int:
    return sum(d ** k for d in _divisors(n))


def _tail_check(k: int, q_abs: float, q_terms: int, tail_tol: float):
    if q_abs >= 1.0:
        raise DomainViolation("|q| must be < 1")
    n0 = q_terms + 1
    if q_abs == 0.0:
        return
    # geometric bound with monotone sigma overestimate n0^k
    ratio = q_abs * math.exp(k / n0)
    log_first = math.log(2.0) + k * math.log(n0) + n0 * math.log(q_abs) - math.lgamma(k)
    if ratio >= 1.0 or log_first - math.log1p(-ratio) > math.log(tail_tol):
        raise ConvergenceError(
            f"E_{k} tail estimate exceeds tail_tol={tail_tol} at |q|={q_abs:.3g}, "
            f"q_terms={q_terms}"
        )


@lru_cache(maxsize=None)
def _eisenstein_cached(k: int, tau: complex, q_terms: int) -> complex:
    q = cmath.exp(TWO_PI_I * tau)
    const = -bernoulli_over_factorial(k)
    acc = 0.0 + 0.0j
    qn = 1.0 + 0.0j
    if k <= 64:
        fact = float(math.factorial(k - 1))
        for n in range(1, q_terms + 1):
            qn *= q
            acc += (2.0 * _sigma(k - 1, n) / fact) * qn
    else:
        lg = math.lgamma(k)
        for n in range(1, q_terms + 1):
            qn *= q
            coeff = 0.0
            for d in _divisors(n):
                e = (k - 1) * math.log(d) - lg
                if e > -745.0:
                    coeff += math.exp(e)
            acc += 2.0 * coeff * qn
    return const + acc


def eisenstein(k: int, tau, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """E_k(tau); exactly 0 for odd k."""
    if k < 2:
        raise DomainViolation(f"Eisenstein series needs k >= 2, got {k}")
    if k % 2 == 1:
        return 0j
    t = _as_tau(tau)
    _tail_check(k, abs(cmath.exp(TWO_PI_I * t)), cfg.q_terms, cfg.tail_tol)
    return _eisenstein_cached(k, t, cfg.q_terms)


def dedekind_eta(tau, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """eta(tau) = q^{1/24} prod_{n>=1} (1 - q^n), truncated.

    The prefactor is exp(pi*i*tau/12), i.e. the branch determined by tau
    itself, which makes eta(tau + 1) = exp(i*pi/12) * eta(tau) hold.
    """
    t = _as_tau(tau)
    q = cmath.exp(TWO_PI_I * t)
    if abs(q) >= 1.0:
        raise DomainViolation("|q| must be < 1")
    prod = 1.0 + 0.0j
    qn = 1.0 + 0.0j
    for _ in range(cfg.q_terms):
        qn *= q
        prod *= (1.0 - qn)
    return cmath.exp(TWO_PI_I * t / 24.0) * prod


# ---------------------------------------------------------------------------
# Lattice geometry
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def min_lattice_distance(tau) -> float:
    """D(q) = min_{0 != lam in 2*pi*i*(Z tau + Z)} |lam|.

    Brute force over a window that provably contains the minimiser: any
    |m| > 1/Im(tau) gives |m*tau + n| >= m*Im(tau) > 1, which cannot beat
    the (m, n) = (0, 1) candidate.
    """
    t = _as_tau(tau)
    m_max = int(math.ceil(1.0 / t.imag)) + 1
    best = 1.0  # candidate (m, n) = (0, 1)
    for m in range(-m_max, m_max + 1):
        center = -m * t.real
        for n in range(math.floor(center) - 1, math.ceil(center) + 2):
            if m == 0 and n == 0:
                continue
            best = min(best, abs(m * t + n))
    return TWO_PI * best


def lattice_reduce(z: complex, tau) -> complex:
    """Representative of z modulo 2*pi*i*(Z tau + Z) with minimal modulus."""
    t = _as_tau(tau)
    zeta = z / TWO_PI_I
    a0 = zeta.imag / t.imag
    b0 = zeta.real - a0 * t.real
    best = z
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            m = round(a0) + da
            n = round(b0) + db
            cand = z - TWO_PI_I * (m * t + n)
            if abs(cand) < abs(best):
                best = cand
    return best


# ---------------------------------------------------------------------------
# Weierstrass-type P_k
# ---------------------------------------------------------------------------

def _p_series_tail(k: int, flat: np.ndarray, t: complex, cfg: SeriesConfig) -> np.ndarray:
    """(-1)^k sum_{j>=k, even} C(j-1, k-1) E_j(tau) z^{j-k}, the regular
    part of the P_k Laurent series."""
    amax = float(np.max(np.abs(flat)))
    dist = min_lattice_distance(t)
    ratio = amax / dist
    j_lo = k if k % 2 == 0 else k + 1
    acc = np.zeros_like(flat)
    w = flat ** (j_lo - k)
    z2 = flat * flat
    # Stopping is relative to the magnitude of P_k itself (the pole part
    # amax^-k can be far below 1, so an absolute floor would chop real
    # contributions).  E_j can vanish exactly at special tau (e.g.
    # E_{4m+2}(i) = 0), so the rule looks at a window of terms, never a
    # single one.
    pole_scale = amax ** float(-k)
    recent: list[float] = []
    converged = False
    for j in range(j_lo, _P_SERIES_CAP + 1, 2):
        coeff = float(math.comb(j - 1, k - 1)) * _eisenstein_cached(j, t, cfg.q_terms)
        term = coeff * w
        acc += term
        w = w * z2
        recent.append(float(np.max(np.abs(term))))
        if len(recent) > 4:
            recent.pop(0)
        scale = max(pole_scale, float(np.max(np.abs(acc))))
        if len(recent) == 4 and j > j_lo + 8 and max(recent) < cfg.tail_tol * scale:
            converged = True
            break
    if not converged and ratio > 0.35:
        scale = max(pole_scale, float(np.max(np.abs(acc))))
        if max(recent) > cfg.tail_tol * scale:
            raise ConvergenceError(
                f"P_{k} series not converged within {_P_SERIES_CAP} terms at ratio {ratio:.3f}"
            )
    return ((-1) ** k) * acc


def _p_checked(k: int, z, tau) -> tuple:
    if k < 1:
        raise DomainViolation("P_k needs k >= 1")
    t = _as_tau(tau)
    zs = np.asarray(z, dtype=complex)
    flat = np.atleast_1d(zs)
    if flat.size:
        amax = float(np.max(np.abs(flat)))
        amin = float(np.min(np.abs(flat)))
        dist = min_lattice_distance(t)
        if amin == 0.0:
            raise DomainViolation("P_k has a pole at lattice points")
        if amax >= DISC_SAFETY * dist:
            raise DomainViolation(
                f"|z| = {amax:.6g} outside the enforced convergence disc "
                f"{DISC_SAFETY}*D = {DISC_SAFETY * dist:.6g}"
            )
    return t, zs, flat


def weierstrass_p_many(k: int, z, tau, cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    """P_k at an array of points via the Laurent series

        P_k(z) = z^{-k} + (-1)^k sum_{j>=k, j even} C(j-1, k-1) E_j(tau) z^{j-k}.
    """
    t, zs, flat = _p_checked(k, z, tau)
    if flat.size == 0:
        return zs
    out = flat ** (-k) + _p_series_tail(k, flat, t, cfg)
    return out.reshape(zs.shape) if zs.shape else out[0]


def weierstrass_p(k: int, z: complex, tau, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """P_k(z, tau) for a single point z inside the convergence disc."""
    return complex(weierstrass_p_many(k, np.array([z]), tau, cfg)[0])


def weierstrass_p_regular(k: int, z: complex, tau, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """P_k(z, tau) - z^{-k} without materialising the pole (the direct
    difference near z = 0 would lose the regular part to rounding)."""
    t, _, flat = _p_checked(k, np.array([z]), tau)
    return complex(_p_series_tail(k, flat, t, cfg)[0])
