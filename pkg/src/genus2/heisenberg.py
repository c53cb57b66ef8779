"""Closed-form genus-two quantities for the rank-1 free boson and its
irreducible modules, labelled by a pair lambda = (lambda1, lambda2).

Everything reduces to the sewing data: the partition function is

    Z_lambda = exp(i pi lambda.Omega.lambda) / (eta(tau1) eta(tau2))
               * det(1 - A1 A2)^{-1/2},

with the determinant branch fixed by exp(-logdet/2) continued from
eps = 0, and n-point functions of the generating field are sums over
partial matchings (omega for a matched pair, nu_lambda for a singleton).
Central charge c = 1 is implicit throughout.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .elliptic import DEFAULT_SERIES, DomainViolation, SeriesConfig, dedekind_eta
from .sewing import (
    DEFAULT_ORDER,
    ModuliPoint,
    SurfacePoint,
    check_point,
    sewing_context,
)

MAX_INSERTIONS = 8


@dataclass(frozen=True)
class ModulePair:
    lam1: complex = 0j
    lam2: complex = 0j

    def swapped(self) -> "ModulePair":
        return ModulePair(self.lam2, self.lam1)


VACUUM = ModulePair(0j, 0j)


def z2_partition(lam: ModulePair, p: ModuliPoint, M: int = DEFAULT_ORDER,
                 cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    ctx = sewing_context(p, M, cfg)
    om = ctx.omega_period
    quad = (
        lam.lam1 * lam.lam1 * om[0, 0]
        + 2.0 * lam.lam1 * lam.lam2 * om[0, 1]
        + lam.lam2 * lam.lam2 * om[1, 1]
    )
    eta12 = dedekind_eta(p.tau1, cfg) * dedekind_eta(p.tau2, cfg)
    return cmath.exp(1j * math.pi * quad) / eta12 * cmath.exp(-0.5 * ctx.logdet)


def nu_lambda(lam: ModulePair, x: SurfacePoint, p: ModuliPoint, M: int = DEFAULT_ORDER,
              cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    check_point(p, x)
    ctx = sewing_context(p, M, cfg)
    return lam.lam1 * ctx.nu(1, x) + lam.lam2 * ctx.nu(2, x)


def _matchings(pts: tuple, nu_vals: dict, omega_vals: dict) -> complex:
    """Sum over partial matchings: matched pair -> omega, singleton -> nu."""
    if not pts:
        return 1.0 + 0j
    head, rest = pts[0], pts[1:]
    total = nu_vals[head] * _matchings(rest, nu_vals, omega_vals)
    for k, q in enumerate(rest):
        total += omega_vals[(head, q)] * _matchings(rest[:k] + rest[k + 1:], nu_vals, omega_vals)
    return total


def h_npoint(lam: ModulePair, pts, p: ModuliPoint, M: int = DEFAULT_ORDER,
             cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """n-point function of the generating field at the given insertion
    points (product of local coefficients; dx factors implicit)."""
    pts = tuple(pts)
    if len(pts) > MAX_INSERTIONS:
        raise DomainViolation(f"insertion count capped at {MAX_INSERTIONS}")
    seen = set()
    for x in pts:
        check_point(p, x)
        if (x.torus, x.z) in seen:
            raise DomainViolation("insertion points must be pairwise distinct")
        seen.add((x.torus, x.z))
    ctx = sewing_context(p, M, cfg)
    nu_vals = {x: lam.lam1 * ctx.nu(1, x) + lam.lam2 * ctx.nu(2, x) for x in pts}
    omega_vals = {}
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            w = ctx.omega(a, b)
            omega_vals[(a, b)] = w
            omega_vals[(b, a)] = w
    return _matchings(pts, nu_vals, omega_vals) * z2_partition(lam, p, M, cfg)


def virasoro_one_point(lam: ModulePair, x: SurfacePoint, p: ModuliPoint,
                       M: int = DEFAULT_ORDER, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """(1/2 nu_lambda(x)^2 + s(x)/12) Z_lambda, the analytic side of the
    Virasoro 1-point function (dx^2 implicit)."""
    check_point(p, x)
    ctx = sewing_context(p, M, cfg)
    nl = lam.lam1 * ctx.nu(1, x) + lam.lam2 * ctx.nu(2, x)
    return (0.5 * nl * nl + ctx.s_proj(x) / 12.0) * z2_partition(lam, p, M, cfg)
