"""Brute-force rank-1 free boson engine in the square-bracket formalism.

States are finite combinations of monomials h[-k_1]...h[-k_n]|0>, indexed
by integer partitions.  The engine provides the mode algebra, the
Virasoro action L[n] = (1/2) sum h[a] h[n-a] (c = 1 emerges from normal
ordering), the Li-Z Gram blocks with adjoint h~[n] = -eps^n h[-n], and
genus-one trace functions evaluated two independent ways:

  * matchings: the 1-point function of a monomial is a sum over pairings
    with weights C(k, l) = (-1)^{k+1} (k+l-1)!/((k-1)!(l-1)!) E_{k+l};
  * recursion: mode-by-mode reduction with Eisenstein coefficients, plus
    the full coordinate recursion for insertions of h, of its translate
    L[-1]h, and of the Virasoro vector.

Genus-two quantities are truncated dual-basis sums of products of
genus-one traces; the level cap bounds the sewing-parameter order
retained (level-n terms scale exactly as eps^n).  Everything here is the
slow, independent ground truth for the closed forms and the recursion
coefficients; the vacuum module only (module labels are exercised
through the closed forms).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .calculus import FDConfig
from .elliptic import (
    DEFAULT_SERIES,
    DomainViolation,
    SeriesConfig,
    dedekind_eta,
    eisenstein,
    weierstrass_p,
)
from .sewing import ModuliPoint, SurfacePoint, other

TWO_PI_I = 2j * math.pi

LEVEL_CAP_MAX = 8


# ---------------------------------------------------------------------------
# Partitions and states
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def partitions(n: int) -> tuple:
    """All partitions of n as descending tuples."""
    if n == 0:
        return ((),)
    out = []

    def rec(remaining, maxpart, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for k in range(min(remaining, maxpart), 0, -1):
            rec(remaining - k, k, prefix + [k])

    rec(n, n, [])
    return tuple(out)


def weight(p: tuple) -> int:
    return sum(p)


def state(p, coeff=1.0) -> dict:
    return {tuple(sorted(p, reverse=True)): complex(coeff)}


VACUUM_STATE = {(): 1.0 + 0j}
H_STATE = {(1,): 1.0 + 0j}
OMEGA_STATE = {(1, 1): 0.5 + 0j}  # square-bracket Virasoro vector, c = 1


def _add(d: dict, p: tuple, c: complex):
    if c == 0:
        return
    v = d.get(p, 0j) + c
    if v == 0:
        d.pop(p, None)
    else:
        d[p] = v


def apply_mode(m: int, st: dict) -> dict:
    """h[m] acting on a state: m < 0 creates part -m, m > 0 contracts
    against matching parts with factor m, m = 0 annihilates (vacuum)."""
    out: dict = {}
    if m == 0:
        return out
    for p, c in st.items():
        if m < 0:
            _add(out, tuple(sorted(p + (-m,), reverse=True)), c)
        else:
            cnt = p.count(m)
            if cnt:
                q = list(p)
                q.remove(m)
                _add(out, tuple(q), c * m * cnt)
    return out


def apply_virasoro(n: int, st: dict) -> dict:
    """L[n] = (1/2) sum_{a+b=n} h[b] h[a]; the central term appears
    automatically through the mode algebra."""
    out: dict = {}
    for p, c in st.items():
        if n == 0:
            _add(out, p, c * weight(p))
            continue
        top = (max(p) if p else 0) + abs(n) + 2
        for a in range(-top, top + 1):
            b = n - a
            if a == 0 or b == 0:
                continue
            tmp = apply_mode(a, {p: 0.5 * c})
            for q, cq in apply_mode(b, tmp).items():
                _add(out, q, cq)
    return out


# ---------------------------------------------------------------------------
# Li-Z Gram blocks
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pair_mono(pu: tuple, pv: tuple) -> complex:
    """<u, v> with the eps-dependence stripped: the full pairing is
    eps^{-level} times this rational number (h~[n] = -eps^n h[-n])."""
    if not pu:
        return 1.0 + 0j if not pv else 0j
    k, rest = pu[0], pu[1:]
    cnt = pv.count(k)
    if not cnt:
        return 0j
    q = list(pv)
    q.remove(k)
    return -k * cnt * _pair_mono(rest, tuple(q))


def gram_block(level: int, eps: complex) -> dict:
    """Gram matrix and dual combinations on the level's partition basis."""
    if eps == 0 and level > 0:
        raise DomainViolation("the Li-Z pairing degenerates at eps = 0 beyond level 0")
    basis = partitions(level)
    n = len(basis)
    g = np.zeros((n, n), dtype=complex)
    scale = eps ** (-level) if level else 1.0
    for i, pu in enumerate(basis):
        for j in range(i, n):
            g[i, j] = _pair_mono(pu, basis[j]) * scale
            g[j, i] = g[i, j]
    ginv = np.linalg.inv(g)
    return {"level": level, "basis": basis, "matrix": g, "dual": ginv}


# ---------------------------------------------------------------------------
# Genus-one trace functions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _c_weight(k: int, l: int, tau: complex, q_terms: int) -> complex:
    fac = math.comb(k + l - 1, k - 1) * l
    return ((-1) ** (k + 1)) * fac * _ei(k + l, tau, q_terms)


def _ei(k: int, tau: complex, q_terms: int) -> complex:
    return eisenstein(k, tau, SeriesConfig(q_terms=q_terms))


@lru_cache(maxsize=None)
def _matchings_mono(p: tuple, tau: complex, q_terms: int) -> complex:
    """Sum over perfect matchings of prod C(k_i, k_j); 0 for odd length."""
    if not p:
        return 1.0 + 0j
    if len(p) % 2:
        return 0j
    k, rest = p[0], p[1:]
    total = 0j
    for i, l in enumerate(rest):
        sub = rest[:i] + rest[i + 1:]
        total += _c_weight(k, l, tau, q_terms) * _matchings_mono(sub, tau, q_terms)
    return total


def genus1_one_point(st: dict, tau: complex, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """1-point function of a state via matchings, including the 1/eta factor."""
    total = sum(c * _matchings_mono(p, tau, cfg.q_terms) for p, c in st.items())
    return total / dedekind_eta(tau, cfg)


@lru_cache(maxsize=None)
def _zhu_mono(p: tuple, tau: complex, q_terms: int) -> complex:
    """1-point function of a monomial (eta factor excluded) by recursive
    mode reduction: peel h[-k] and contract with Eisenstein weights."""
    if not p:
        return 1.0 + 0j
    if len(p) % 2:
        return 0j
    k, rest = p[0], p[1:]
    total = 0j
    for j in sorted(set(rest)):
        cnt = rest.count(j)
        q = list(rest)
        q.remove(j)
        coeff = ((-1) ** (j + 1)) * math.comb(k + j - 1, j) * _ei(k + j, tau, q_terms)
        total += coeff * j * cnt * _zhu_mono(tuple(q), tau, q_terms)
    return total


def genus1_one_point_zhu(st: dict, tau: complex, cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """Same trace as genus1_one_point via the independent recursion path."""
    total = sum(c * _zhu_mono(p, tau, cfg.q_terms) for p, c in st.items())
    return total / dedekind_eta(tau, cfg)


# insertion kinds: "h" (weight-1 generator), "dh" (its translate L[-1]h,
# reduced by differentiating the h rules in its coordinate), "omt" (the
# Virasoro vector; its zero-mode term is the q d/dq of the reduced trace)
_KIND_RANK = {"h": 0, "dh": 1, "omt": 2}


def _canon(ins: tuple) -> tuple:
    return tuple(sorted(ins, key=lambda kz: (_KIND_RANK[kz[0]], kz[1].real, kz[1].imag)))


class Genus1Evaluator:
    """Recursive genus-one n-point evaluator over one torus modulus."""

    def __init__(self, tau: complex, cfg: SeriesConfig = DEFAULT_SERIES,
                 fd: FDConfig | None = None):
        self.tau = complex(tau)
        self.cfg = cfg
        self.fd = fd or FDConfig(step=1e-4, richardson_levels=1)
        self._memo: dict = {}

    def _p(self, k: int, z: complex, tau=None) -> complex:
        return weierstrass_p(k, z, self.tau if tau is None else tau, self.cfg)

    def value(self, ins, st: dict) -> complex:
        ins = _canon(tuple(ins))
        return sum(c * self._mono(ins, p, self.tau) for p, c in st.items())

    def _value_at(self, ins, st: dict, tau: complex) -> complex:
        return sum(c * self._mono(ins, p, tau) for p, c in st.items())

    def _mono(self, ins: tuple, p: tuple, tau: complex) -> complex:
        key = (ins, p, tau)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if not ins:
            val = _matchings_mono(p, tau, self.cfg.q_terms) / dedekind_eta(tau, self.cfg)
        else:
            kind = ins[0][0]
            if kind == "h":
                val = self._reduce_h(ins, p, tau, deriv=False)
            elif kind == "dh":
                val = self._reduce_h(ins, p, tau, deriv=True)
            else:
                val = self._reduce_omt(ins, p, tau)
        self._memo[key] = val
        return val

    def _reduce_h(self, ins: tuple, p: tuple, tau: complex, deriv: bool) -> complex:
        """Reduce on the first insertion, an h (or, with deriv, the
        z-derivative rules for L[-1]h)."""
        (kind, z1), rest = ins[0], ins[1:]
        total = 0j
        for idx, (k2, z2) in enumerate(rest):
            others = rest[:idx] + rest[idx + 1:]
            dz = z1 - z2
            if k2 == "h":
                c = -2.0 * self._p(3, dz, tau) if deriv else self._p(2, dz, tau)
                total += c * self._mono(_canon(others), p, tau)
            elif k2 == "dh":
                c = -6.0 * self._p(4, dz, tau) if deriv else 2.0 * self._p(3, dz, tau)
                total += c * self._mono(_canon(others), p, tau)
            else:  # h[j] omt = delta_{j1} h
                c = -2.0 * self._p(3, dz, tau) if deriv else self._p(2, dz, tau)
                total += c * self._mono(_canon(others + (("h", z2),)), p, tau)
        for d in sorted(set(p)):
            cnt = p.count(d)
            q = list(p)
            q.remove(d)
            c = -(1 + d) * self._p(2 + d, z1, tau) if deriv else self._p(1 + d, z1, tau)
            total += c * d * cnt * self._mono(_canon(rest), tuple(q), tau)
        return total

    def _reduce_omt(self, ins: tuple, p: tuple, tau: complex) -> complex:
        # the canonical order puts h and dh first, so reaching an omt
        # reduction means omt insertions are all that remain
        (_, z1), rest = ins[0], ins[1:]
        if rest:
            raise NotImplementedError("multiple Virasoro insertions not supported")
        # zero-mode term: q d/dq of the remaining trace
        f = lambda tt: self._value_at(rest, {p: 1.0}, tt)
        total = _qdq(f, tau, self.fd)
        # state terms: omt[m] u = L[m-1] u
        for m in range(0, weight(p) + 2):
            st2 = apply_virasoro(m - 1, {p: 1.0})
            if not st2:
                continue
            pm = self._p(1 + m, z1, tau)
            total += pm * sum(c * self._mono(_canon(rest), q, tau) for q, c in st2.items())
        return total


def genus1_npoint(insertions, st: dict, tau: complex, cfg: SeriesConfig = DEFAULT_SERIES,
                  fd: FDConfig | None = None) -> complex:
    """n-point trace with the state st at the origin and insertions given
    as (kind, coordinate) pairs, kind in {"h", "dh", "omt"}."""
    return Genus1Evaluator(tau, cfg, fd).value(tuple(insertions), st)


def _qdq(f, tau: complex, fd: FDConfig) -> complex:
    n = fd.richardson_levels + 1
    est = [(f(tau + fd.step / 2 ** i) - f(tau - fd.step / 2 ** i)) / (2 * fd.step / 2 ** i)
           for i in range(n)]
    for lvl in range(1, n):
        fac = 4.0 ** lvl
        est = [(fac * est[i + 1] - est[i]) / (fac - 1.0) for i in range(len(est) - 1)]
    return est[0] / TWO_PI_I


# ---------------------------------------------------------------------------
# Genus-two truncated sums
# ---------------------------------------------------------------------------

def _split_insertions(pts) -> tuple:
    ins1, ins2 = [], []
    for kind, x in pts:
        if x.torus == 1:
            ins1.append((kind, x.z))
        else:
            ins2.append((kind, x.z))
    return tuple(ins1), tuple(ins2)


class FockOracle:
    """Shared evaluators and Gram data for one moduli point."""

    def __init__(self, p: ModuliPoint, level_cap: int, cfg: SeriesConfig = DEFAULT_SERIES,
                 fd: FDConfig | None = None):
        if level_cap > LEVEL_CAP_MAX:
            raise DomainViolation(f"level cap limited to {LEVEL_CAP_MAX}")
        self.p = p
        self.cap = level_cap
        self.cfg = cfg
        self.ev = {1: Genus1Evaluator(p.tau1, cfg, fd), 2: Genus1Evaluator(p.tau2, cfg, fd)}
        self.grams = {n: gram_block(n, p.eps) for n in range(0, level_cap + 1)} \
            if p.eps != 0 else {0: gram_block(0, 0)}

    def _level_vectors(self, n: int, ins1, ins2) -> tuple:
        basis = self.grams[n]["basis"]
        v1 = np.array([self.ev[1].value(ins1, {b: 1.0}) for b in basis])
        v2 = np.array([self.ev[2].value(ins2, {b: 1.0}) for b in basis])
        return v1, v2, self.grams[n]["dual"]

    def level_term(self, n: int, pts) -> complex:
        ins1, ins2 = _split_insertions(pts)
        v1, v2, dual = self._level_vectors(n, ins1, ins2)
        return complex(v1 @ dual @ v2)

    def brute(self, pts) -> complex:
        """Z2 with the given (kind, SurfacePoint) insertions, all levels <= cap."""
        return complex(sum(self.level_term(n, pts) for n in self.grams))

    def o_term(self, a: int, pts) -> complex:
        """O_a for the Virasoro vector: q_a d/dq_a applied to the torus-a
        genus-one factors state by state."""
        ins1, ins2 = _split_insertions(pts)
        fd = self.ev[a].fd
        total = 0j
        for n, gram in self.grams.items():
            basis = gram["basis"]
            if a == 1:
                v1 = np.array([_qdq(lambda t, b=b: self.ev[1]._value_at(ins1, {b: 1.0}, t),
                                    self.p.tau1, fd) for b in basis])
                v2 = np.array([self.ev[2].value(ins2, {b: 1.0}) for b in basis])
            else:
                v1 = np.array([self.ev[1].value(ins1, {b: 1.0}) for b in basis])
                v2 = np.array([_qdq(lambda t, b=b: self.ev[2]._value_at(ins2, {b: 1.0}, t),
                                    self.p.tau2, fd) for b in basis])
            total += v1 @ gram["dual"] @ v2
        return complex(total)

    def xpi_term(self, pts) -> complex:
        """eps^{1/2} X^Pi(1) for the Virasoro vector: the level-weighted sum
        (both torus placements give the same value)."""
        return complex(sum(n * self.level_term(n, pts) for n in self.grams))


def genus2_brute(pts, level_cap: int, p: ModuliPoint,
                 cfg: SeriesConfig = DEFAULT_SERIES) -> complex:
    """Truncated dual-basis sum for insertions pts = [(kind, SurfacePoint)]."""
    return FockOracle(p, level_cap, cfg).brute(tuple(pts))


def verify_genus2_zhu(v_kind: str, x: SurfacePoint, others, level_cap: int,
                      p: ModuliPoint, M: int = 16, cfg: SeriesConfig = DEFAULT_SERIES,
                      oracle: FockOracle | None = None) -> dict:
    """One end-to-end check of the recursion: reduce the vector v_kind
    ("h", weight 1, or "omt", weight 2) inserted at x against brute force.

    LHS: the truncated dual-basis sum with v and the other h's inserted.
    RHS: coefficient functions (F's, the Pi-row, the generalised
    Weierstrass functions) from the truncated-matrix machinery, paired
    with the brute-force zero-mode and level-weighted terms.
    """
    from .zhu import zhu_context  # deferred: zhu does not depend on fock

    if v_kind not in ("h", "omt"):
        raise DomainViolation("recursion verified for v in {h, omt}")
    pts = tuple(others)
    if any(k != "h" for k, _ in pts):
        raise DomainViolation("other insertions must be h's")
    oracle = oracle or FockOracle(p, level_cap, cfg)
    lhs = oracle.brute(((v_kind, x),) + pts)

    N = 1 if v_kind == "h" else 2
    zc = zhu_context(p, N, M, cfg)
    zvec = np.array([x.z])
    if x.torus != 1:
        raise DomainViolation("insert v on torus 1; swap the configuration otherwise")
    f1 = complex(zc.f_many(1, x.torus, zvec)[0])
    f2 = complex(zc.f_many(2, x.torus, zvec)[0])

    if v_kind == "h":
        # O_a = lambda_a Z = 0 on the vacuum module; h[j]h = delta_{j1} 1
        rhs = 0j
        for idx, (_, y) in enumerate(pts):
            rest = pts[:idx] + pts[idx + 1:]
            rhs += zc.gen_weierstrass(0, 1, x, y) * oracle.brute(rest)
    else:
        rhs = f1 * oracle.o_term(1, pts) + f2 * oracle.o_term(2, pts)
        phi3 = complex(zc.f_pi1_over_sigma_many(x.torus, zvec)[0])
        rhs += phi3 * oracle.xpi_term(pts)
        # omt[0]h = L[-1]h ("dh"), omt[1]h = h; higher modes kill h
        for idx, (_, y) in enumerate(pts):
            rest = pts[:idx] + pts[idx + 1:]
            rhs += zc.gen_weierstrass(0, 0, x, y) * oracle.brute(rest + (("dh", y),))
            rhs += zc.gen_weierstrass(0, 1, x, y) * oracle.brute(rest + (("h", y),))
    scale = max(abs(lhs), abs(oracle.brute(())), 1e-30)
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs) / scale}
