"""Spin-chain representations: dressed K-matrices, transfer matrices, the
alternating operator families, commuting charges and the fusion-hierarchy
checks on chains.

A chain is a ChainConfig: spins (as twoj, site 1..N), nonzero inhomogeneity
parameters, boundary parameters and q.  The quantum space is ordered with
site N leftmost; every auxiliary space is appended as the rightmost factor.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .intertwiners import build_fusion_maps
from .kmatrix import (BoundaryParams, c2q, f_j, gamma_minus_poly, gamma_plus_poly,
                      k_dual, k_dual_normalized, k_fundamental, k_fused,
                      k_norm_den, k_normalized, projector_minus)
from .laurent import LaurentPoly, PolyMatrix, RationalMatrix, c_poly, cq, u_cap_poly
from .repspace import SiteLayout, embed_two_axes, embed_two_axes_poly, spin_rep
from .rmatrix import beta_half_j, lax, norm_den_full, r_fundamental, r_fused, r_normalized

DEFAULT_DIM_CAP = 4096


class DimensionGuard(ValueError):
    """Quantum-space dimension exceeds the configured cap."""


class FactorizationFailure(ArithmeticError):
    """The Sklyanin factorization of the quantum determinant failed."""


class DiagonalBoundaryUnsupported(ValueError):
    """The alternating-operator recursion needs k_plus * k_minus != 0."""


class SamplePole(ArithmeticError):
    """Could not find sample points away from denominator zeros."""


def _dim_cap() -> int:
    return int(os.environ.get("QTT_DIM_CAP", DEFAULT_DIM_CAP))


@dataclass(frozen=True)
class ChainConfig:
    spins: tuple            # twoj per site, site 1 first
    inhoms: tuple           # one nonzero complex per site
    boundary: BoundaryParams
    q: complex

    def __post_init__(self):
        if len(self.spins) != len(self.inhoms):
            raise ValueError("spins and inhoms must have equal length")
        if any(v == 0 for v in self.inhoms):
            raise ValueError("inhomogeneities must be nonzero")
        if self.quantum_dim > _dim_cap():
            raise DimensionGuard(
                f"quantum dimension {self.quantum_dim} exceeds cap {_dim_cap()}")

    @property
    def n_sites(self) -> int:
        return len(self.spins)

    @property
    def quantum_dim(self) -> int:
        d = 1
        for tj in self.spins:
            d *= tj + 1
        return d

    @property
    def layout(self) -> SiteLayout:
        return SiteLayout.from_spins(self.spins)

    def key(self):
        return (self.spins, self.inhoms, self.boundary.key(), self.q)


def homogeneous_chain(twoj: int, n: int, boundary: BoundaryParams, q: complex) -> ChainConfig:
    return ChainConfig((twoj,) * n, (1.0,) * n, boundary, q)


# -- truncation data ---------------------------------------------------------


def w0_scalar(twoj: int, q: complex) -> complex:
    return q ** (twoj + 1) + q ** (-(twoj + 1))


@dataclass(frozen=True)
class TruncationData:
    """Linear-relation data of the length-N quotient on this chain."""

    d: tuple                # d_0 .. d_N
    eps_plus_n: complex
    eps_minus_n: complex
    h0: LaurentPoly
    p_polys: tuple          # P_0 .. P_{-(N-1)}
    w0: tuple               # w0 per site


def _alphas(cfg: ChainConfig) -> list[complex]:
    q = cfg.q
    b = cfg.boundary
    out = []
    for n, (tj, v) in enumerate(zip(cfg.spins, cfg.inhoms), start=1):
        a = (v**2 + v**-2) * w0_scalar(tj, q) / (q + 1.0 / q)
        if n == 1:
            a += (b.eps_plus * b.eps_minus * (q - 1.0 / q) ** 2
                  / (b.k_plus * b.k_minus * (q + 1.0 / q)))
        out.append(a)
    return out


def _elementary_symmetric(vals, k: int) -> complex:
    e = np.zeros(k + 1, dtype=complex)
    e[0] = 1.0
    for v in vals:
        e[1:k + 1] = e[1:k + 1] + v * e[0:k]
    return complex(e[k])


def d_coeffs(cfg: ChainConfig, n_level: int | None = None) -> list[complex]:
    """d_0 .. d_N of the level-N linear relations."""
    q = cfg.q
    nn = cfg.n_sites if n_level is None else n_level
    alph = _alphas(cfg)[:nn]
    return [(-1) ** (nn + 1 - k) * (q + 1.0 / q) ** k * _elementary_symmetric(alph, nn - k)
            for k in range(nn + 1)]


def eps_level(cfg: ChainConfig, n_level: int | None = None) -> tuple:
    q = cfg.q
    nn = cfg.n_sites if n_level is None else n_level
    ep, em = cfg.boundary.eps_plus, cfg.boundary.eps_minus
    for tj, v in zip(cfg.spins[:nn], cfg.inhoms[:nn]):
        w0 = w0_scalar(tj, q)
        vv = v**2 + v**-2
        ep, em = w0 * em - vv * ep, w0 * ep - vv * em
    return ep, em


def truncation_data(cfg: ChainConfig) -> TruncationData:
    q = cfg.q
    nn = cfg.n_sites
    d = d_coeffs(cfg)
    ucap = u_cap_poly(q)
    h0 = LaurentPoly.zero()
    upow = LaurentPoly.const(1.0)
    for k in range(nn + 1):
        h0 = h0 + d[k] * upow
        upow = upow * ucap
    h0 = h0 * (-1.0 / (q + 1.0 / q))
    ps = []
    for k in range(nn):
        p = LaurentPoly.zero()
        upow = LaurentPoly.const(1.0)
        for n in range(k, nn):
            p = p + d[n + 1] * upow
            upow = upow * ucap
        ps.append(p * (-1.0 / (q + 1.0 / q)))
    ep, em = eps_level(cfg)
    return TruncationData(tuple(d), ep, em, h0, tuple(ps),
                          tuple(w0_scalar(tj, q) for tj in cfg.spins))


# -- the alternating operator families ----------------------------------------


@dataclass
class AlternatingOps:
    """psi-images of the alternating generators, indices 0..k_max.

    w_minus[k] is the image of the (-k) generator, w_plus[k] of (k+1),
    g[k] and gt[k] of the two (k+1)-indexed central-pair families.
    """

    cfg: ChainConfig
    k_max: int
    w_minus: list
    w_plus: list
    g: list
    gt: list


class _LevelTable:
    __slots__ = ("wm", "wp", "g", "gt", "dim")

    def __init__(self, dim):
        self.dim = dim
        self.wm, self.wp, self.g, self.gt = [], [], [], []


def _seed_level0(cfg: ChainConfig, k_max: int) -> _LevelTable:
    """The scalar one-dimensional representation underlying the chain.

    Its central sequence is geometric with ratio alpha_1/(q+q^-1) (the
    first-site weight), which is exactly what makes the coaction recursion
    reproduce the quotient's linear relations at every level and index.
    The W values then follow from the general one-dimensional solution of
    the exchange relations.
    """
    q = cfg.q
    b = cfg.boundary
    rho = b.rho(q)
    g0 = rho / (q - 1.0 / q)
    g1 = b.eps_plus * b.eps_minus * (q - 1.0 / q)
    t = _alphas(cfg)[0] / (q + 1.0 / q)

    def gseq(k):
        return g0 if k == 0 else g1 * t ** (k - 1)

    def w_tail(k, first, second):
        # sum_m ((m mod 2) first + ((m+1) mod 2) second) g_{k-m} / g0
        return sum(((m % 2) * first + ((m + 1) % 2) * second) * gseq(k - m)
                   for m in range(k + 1)) / g0

    tab = _LevelTable(1)
    one = np.eye(1, dtype=complex)
    for k in range(k_max + 1):
        tab.wm.append(w_tail(k, b.eps_minus, b.eps_plus) * one)
        tab.wp.append(w_tail(k, b.eps_plus, b.eps_minus) * one)
        tab.g.append(gseq(k + 1) * one)
        tab.gt.append(gseq(k + 1) * one)
    return tab


def _build_tables(cfg: ChainConfig, k_max: int) -> list:
    """Level tables 0..N, each with all four families up to k_max."""
    q = cfg.q
    b = cfg.boundary
    if b.k_plus == 0 or b.k_minus == 0:
        raise DiagonalBoundaryUnsupported("recursion divides by k_plus*k_minus")
    rho = b.rho(q)
    qq = q + 1.0 / q
    g0 = rho / (q - 1.0 / q)
    tables = [_seed_level0(cfg, k_max + 1)]

    for lev in range(1, cfg.n_sites + 1):
        tj = cfg.spins[lev - 1]
        v = cfg.inhoms[lev - 1]
        rep = spin_rep(tj, cfg.q)
        low = tables[lev - 1]
        dim = rep.dim * low.dim
        tab = _LevelTable(dim)
        eye_low = np.eye(low.dim, dtype=complex)
        q3 = rep.q_s3_pow(1.0)
        q3i = rep.q_s3_pow(-1.0)
        qh = rep.q_s3_half
        qhi = rep.q_s3_pow(-0.5)
        sq = q**0.5
        w0 = w0_scalar(tj, q)
        vv = v**2 + v**-2
        a_up = (w0 * np.eye(rep.dim) - qq * q3) / qq
        a_dn = (w0 * np.eye(rep.dim) - qq * q3i) / qq

        def wm_at(t, k):
            return t.wm[k] if k >= 0 else np.zeros((t.dim, t.dim), dtype=complex)

        def wp_at(t, k):
            # image of the (k)-indexed plus generator: index k-1 in the list
            return t.wp[k - 1] if k >= 1 else np.zeros((t.dim, t.dim), dtype=complex)

        def g_at(t, k):
            return t.g[k - 1] if k >= 1 else g0 * np.eye(t.dim, dtype=complex)

        def gt_at(t, k):
            return t.gt[k - 1] if k >= 1 else g0 * np.eye(t.dim, dtype=complex)

        for k in range(k_max + 1):
            wm_same = wm_at(tab, k - 1)
            wp_same = wp_at(tab, k)      # plus at index k, i.e. list entry k-1
            g_same = g_at(tab, k)
            gt_same = gt_at(tab, k)
            kk = 1.0 / (b.k_plus * b.k_minus * qq * qq)

            wm = (np.kron(a_up, wp_at(low, k))
                  - (vv / qq) * np.kron(np.eye(rep.dim), wm_at(low, k - 1))
                  + (vv * w0 / qq**2) * wm_same
                  + (q - 1.0 / q) * kk * (
                      np.kron(b.k_plus * v * sq * (rep.splus @ qh), g_at(low, k))
                      + np.kron(b.k_minus / (v * sq) * (rep.sminus @ qh), gt_at(low, k)))
                  + np.kron(q3, wm_at(low, k)))
            tab.wm.append(wm)

            wp = (np.kron(a_dn, wm_at(low, k - 1))
                  - (vv / qq) * np.kron(np.eye(rep.dim), wp_at(low, k))
                  + (vv * w0 / qq**2) * wp_same
                  + (q - 1.0 / q) * kk * (
                      np.kron(b.k_plus / (v * sq) * (rep.splus @ qhi), g_at(low, k))
                      + np.kron(b.k_minus * v * sq * (rep.sminus @ qhi), gt_at(low, k)))
                  + np.kron(q3i, wp_at(low, k + 1)))
            tab.wp.append(wp)

            dmin = wm_at(low, k) - wp_at(low, k)
            dplus = wp_at(low, k + 1) - wm_at(low, k - 1)
            gg = (np.kron((b.k_minus / b.k_plus) * ((q - 1.0 / q) ** 2 / qq)
                          * (rep.sminus @ rep.sminus), gt_at(low, k))
                  - (1.0 / qq) * np.kron(v**2 * q3 + v**-2 * q3i, g_at(low, k))
                  + np.kron(np.eye(rep.dim), low.g[k])
                  + (q**2 - q**-2) * (
                      np.kron(b.k_minus * v / sq * (rep.sminus @ qh), dmin)
                      + np.kron(b.k_minus * sq / v * (rep.sminus @ qhi), dplus))
                  + (vv * w0 / qq**2) * g_same)
            tab.g.append(gg)

            ggt = (np.kron((b.k_plus / b.k_minus) * ((q - 1.0 / q) ** 2 / qq)
                           * (rep.splus @ rep.splus), g_at(low, k))
                   - (1.0 / qq) * np.kron(v**2 * q3i + v**-2 * q3, gt_at(low, k))
                   + np.kron(np.eye(rep.dim), low.gt[k])
                   + (q**2 - q**-2) * (
                       np.kron(b.k_plus * sq / v * (rep.splus @ qh), dmin)
                       + np.kron(b.k_plus * v / sq * (rep.splus @ qhi), dplus))
                   + (vv * w0 / qq**2) * gt_same)
            tab.gt.append(ggt)
        tables.append(tab)
    return tables


def alternating_ops(cfg: ChainConfig, k_max: int | None = None) -> AlternatingOps:
    """Images of the alternating generators on the full chain."""
    k_max = cfg.n_sites + 3 if k_max is None else k_max
    tables = _build_tables(cfg, k_max)
    top = tables[-1]
    return AlternatingOps(cfg, k_max, top.wm, top.wp, top.g, top.gt)


# -- dressed K-matrices and transfer matrices ---------------------------------


def _embed_site_aux(op: PolyMatrix, cfg: ChainConfig, site: int, aux_dim: int) -> PolyMatrix:
    """Embed an operator on (site n) (x) aux into quantum (x) aux."""
    dims = cfg.layout.dims + [aux_dim]
    ax = cfg.layout.axis_of_site(site)
    return embed_two_axes_poly(op, dims, ax, len(dims) - 1)


def dressed_k(twoja: int, cfg: ChainConfig) -> PolyMatrix:
    """L_[N](u v_N) ... L_[1](u v_1) K(u) L_[1](u/v_1) ... L_[N](u/v_N)."""
    da = twoja + 1
    kmat = PolyMatrix.identity(cfg.quantum_dim).kron(k_fused(twoja, cfg.boundary, cfg.q))
    left = None
    right = None
    for site, (tj, v) in enumerate(zip(cfg.spins, cfg.inhoms), start=1):
        lx = lax(tj, twoja, cfg.q).poly
        lf = _embed_site_aux(lx.scale_arg(v), cfg, site, da)
        rf = _embed_site_aux(lx.scale_arg(1.0 / v), cfg, site, da)
        left = lf if left is None else lf @ left
        right = rf if right is None else right @ rf
    out = kmat if left is None else left @ kmat @ right
    return out


def _transfer_factors(twoja: int, cfg: ChainConfig, normalized: bool):
    """Embedded factor list of the double-row trace, plus the denominator."""
    q = cfg.q
    da = twoja + 1
    eye_q = PolyMatrix.identity(cfg.quantum_dim)
    den = LaurentPoly.const(1.0)
    if normalized:
        kmid = eye_q.kron(k_normalized(twoja, cfg.boundary, q))
        kplus = eye_q.kron(k_dual_normalized(twoja, cfg.boundary, q))
    else:
        kmid = eye_q.kron(k_fused(twoja, cfg.boundary, q))
        kd = k_dual(twoja, cfg.boundary, q)
        kplus = eye_q.kron(kd.num)
        den = den * kd.den
    fwd = []
    bwd = []
    for site, (tj, v) in enumerate(zip(cfg.spins, cfg.inhoms), start=1):
        if normalized:
            rn = r_normalized(tj, twoja, q)
            base, dfac = rn.M, rn.den
        else:
            base, dfac = r_fused(tj, twoja, q), LaurentPoly.const(1.0)
        fwd.append(_embed_site_aux(base.scale_arg(v), cfg, site, da))
        bwd.append(_embed_site_aux(base.scale_arg(1.0 / v), cfg, site, da))
        den = den * dfac.scale_arg(v) * dfac.scale_arg(1.0 / v)
    # trace order: K+ . R_N ... R_1 . K . R_1 ... R_N
    return [kplus] + fwd[::-1] + [kmid] + bwd, den


def transfer(twoja: int, cfg: ChainConfig) -> RationalMatrix:
    """Exact double-row transfer matrix on the quantum space."""
    if twoja == 0:
        return RationalMatrix(PolyMatrix.identity(cfg.quantum_dim))
    factors, den = _transfer_factors(twoja, cfg, normalized=False)
    prod = factors[0]
    for f in factors[1:]:
        prod = prod @ f
    return RationalMatrix(prod.partial_trace_last(twoja + 1), den)


def transfer_normalized(twoja: int, cfg: ChainConfig) -> RationalMatrix:
    """Transfer matrix from normalized constituents; regular at u = 1."""
    if twoja == 0:
        return RationalMatrix(PolyMatrix.identity(cfg.quantum_dim))
    factors, den = _transfer_factors(twoja, cfg, normalized=True)
    prod = factors[0]
    for f in factors[1:]:
        prod = prod @ f
    return RationalMatrix(prod.partial_trace_last(twoja + 1), den)


def transfer_eval(twoja: int, cfg: ChainConfig, u0: complex,
                  _cache: dict | None = None) -> np.ndarray:
    """Numeric transfer matrix at a sample point (unnormalized convention)."""
    if twoja == 0:
        return np.eye(cfg.quantum_dim, dtype=complex)
    q = cfg.q
    da = twoja + 1
    dims = cfg.layout.dims + [da]
    kd = k_dual(twoja, cfg.boundary, q)
    mat = np.kron(np.eye(cfg.quantum_dim), kd.num.eval(u0) / kd.den.eval(u0))
    for site in range(cfg.n_sites, 0, -1):
        tj, v = cfg.spins[site - 1], cfg.inhoms[site - 1]
        r = r_fused(tj, twoja, q).eval(u0 * v)
        mat = mat @ embed_two_axes(r, dims, cfg.layout.axis_of_site(site), len(dims) - 1)
    mat = mat @ np.kron(np.eye(cfg.quantum_dim), k_fused(twoja, cfg.boundary, q).eval(u0))
    for site in range(1, cfg.n_sites + 1):
        tj, v = cfg.spins[site - 1], cfg.inhoms[site - 1]
        r = r_fused(tj, twoja, q).eval(u0 / v)
        mat = mat @ embed_two_axes(r, dims, cfg.layout.axis_of_site(site), len(dims) - 1)
    dq = cfg.quantum_dim
    return np.einsum("iaja->ij", mat.reshape(dq, da, dq, da))


# -- quantum determinant on the chain -----------------------------------------


def qdet_site_factor(cfg: ChainConfig) -> LaurentPoly:
    """The product of c-factors multiplying the boundary quantum determinant."""
    q = cfg.q
    out = LaurentPoly.const(1.0)
    for tj, v in zip(cfg.spins, cfg.inhoms):
        hi = q ** ((tj + 3) / 2.0)
        lo = q ** ((1 - tj) / 2.0)
        out = out * c_poly(hi * v) * c_poly(hi / v) * c_poly(lo * v) * c_poly(lo / v)
    return out


def quantum_det_image(cfg: ChainConfig, check_tol: float = 1e-9) -> LaurentPoly:
    """Sklyanin trace of the dressed fundamental K; checked factorization."""
    q = cfg.q
    dq = cfg.quantum_dim
    dk = dressed_k(1, cfg)
    k1 = dk.kron(PolyMatrix.identity(2))
    k2 = embed_two_axes_poly(dk.shift_q(1.0, q), [dq, 2, 2], 0, 2)
    pm = PolyMatrix.identity(dq).kron(PolyMatrix.from_numeric(projector_minus(q)))
    rmid = PolyMatrix.identity(dq).kron(r_fundamental(q).scale_arg(q).subst_power(2))
    traced = (pm @ k1 @ rmid @ k2).partial_trace_last(2).partial_trace_last(2)
    expected = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
    target = PolyMatrix.identity(dq) * expected
    res = traced.residual(target)
    if res > check_tol:
        raise FactorizationFailure(f"Sklyanin factorization residual {res:.3e}")
    return expected


def gamma_rep_num_den(cfg: ChainConfig):
    """The chain image of the boundary quantum determinant, as num/den polys."""
    q = cfg.q
    td = truncation_data(cfg)
    num = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
    den = (c2q(q, 0) * c2q(q, 2) * td.h0 * td.h0.shift_q(1.0, q))
    return num, den


# -- commuting charges --------------------------------------------------------


@dataclass
class ChargeFamily:
    """The commuting operators extracted from the fundamental trace."""

    cfg: ChainConfig
    ops: list               # psi-images of the odd-indexed charges, k = 0..N-1
    i0: complex
    poly: PolyMatrix        # operator-valued Laurent polynomial I(u)
    trunc: TruncationData


def charge_scalar_i0(params: BoundaryParams, q: complex) -> complex:
    rho = params.rho(q)
    return rho / ((q - 1.0 / q) * (q**2 - q**-2)) * (
        params.kbar_plus / params.k_plus + params.kbar_minus / params.k_minus)


def psi_i(cfg: ChainConfig, ops: AlternatingOps | None = None) -> ChargeFamily:
    """The N commuting charges and their generating Laurent polynomial."""
    b = cfg.boundary
    q = cfg.q
    if b.k_plus == 0 or b.k_minus == 0:
        raise DiagonalBoundaryUnsupported("charges need k_plus*k_minus != 0")
    ops = ops or alternating_ops(cfg)
    s = 1.0 / (q**2 - q**-2)
    charges = []
    for k in range(cfg.n_sites):
        charges.append(b.epsbar_plus * ops.w_minus[k]
                       + b.epsbar_minus * ops.w_plus[k]
                       + s * (b.kbar_minus / b.k_minus) * ops.g[k]
                       + s * (b.kbar_plus / b.k_plus) * ops.gt[k])
    td = truncation_data(cfg)
    dq = cfg.quantum_dim
    poly = PolyMatrix.zeros(dq, dq)
    for k, op in enumerate(charges):
        poly = poly + PolyMatrix(dq, dq, {0: op}) * td.p_polys[k]
    return ChargeFamily(cfg, charges, charge_scalar_i0(b, q), poly, td)


def fundamental_trace_identity(cfg: ChainConfig) -> float:
    """Residual of the charge expansion of the normalized fundamental trace."""
    q = cfg.q
    fam = psi_i(cfg)
    td = fam.trunc
    b = cfg.boundary
    dq = cfg.quantum_dim
    eye = PolyMatrix.identity(dq)
    bracket = (fam.poly + eye * (td.h0 * fam.i0)) * (c2q(q, 0) * c2q(q, 2))
    shift_pair = LaurentPoly({4: q, -4: 1.0 / q})
    qq = LaurentPoly.const(q + 1.0 / q)
    scal = (b.epsbar_plus * (shift_pair * td.eps_plus_n + qq * td.eps_minus_n)
            + b.epsbar_minus * (shift_pair * td.eps_minus_n + qq * td.eps_plus_n))
    rhs_num = bracket + eye * scal
    den = LaurentPoly.const(1.0)
    for tj, v in zip(cfg.spins, cfg.inhoms):
        scale = q ** ((tj + 1) / 2.0)
        den = den * c_poly(scale * v) * c_poly(scale / v)
    lhs = transfer_normalized(1, cfg)
    rhs = RationalMatrix(rhs_num, den)
    return lhs.residual(rhs)


# -- identity suites -----------------------------------------------------------


def _relnorm(diff: np.ndarray, *terms) -> float:
    scale = max(max(np.linalg.norm(t) for t in terms), 1.0)
    return float(np.linalg.norm(diff) / scale)


def aq_relations_check(cfg: ChainConfig, k_top: int = 2) -> dict:
    """The defining exchange relations of the boundary algebra, on the chain."""
    q = cfg.q
    rho = cfg.boundary.rho(q)
    ops = alternating_ops(cfg, k_max=k_top + 2)
    wm, wp, g, gt = ops.w_minus, ops.w_plus, ops.g, ops.gt
    qq = q + 1.0 / q

    def comm(a, b):
        return a @ b - b @ a

    def qcomm(a, b):
        return q * (a @ b) - (1.0 / q) * (b @ a)

    worst = {}
    for k in range(k_top + 1):
        lhs1 = comm(wm[0], wp[k])
        lhs1b = comm(wm[k], wp[0])
        rhs1 = (gt[k] - g[k]) / qq
        worst[f"qo1[{k}]"] = max(_relnorm(lhs1 - rhs1, lhs1, rhs1, np.eye(1)),
                                 _relnorm(lhs1b - rhs1, lhs1b, rhs1, np.eye(1)))
        lhs2 = qcomm(wm[0], g[k])
        lhs2b = qcomm(gt[k], wm[0])
        rhs2 = rho * (wm[k + 1] - wp[k])
        worst[f"qo2[{k}]"] = max(_relnorm(lhs2 - rhs2, lhs2, rhs2),
                                 _relnorm(lhs2b - rhs2, lhs2b, rhs2))
        lhs3 = qcomm(g[k], wp[0])
        lhs3b = qcomm(wp[0], gt[k])
        rhs3 = rho * (wp[k + 1] - wm[k])
        worst[f"qo3[{k}]"] = max(_relnorm(lhs3 - rhs3, lhs3, rhs3),
                                 _relnorm(lhs3b - rhs3, lhs3b, rhs3))
    for k in range(k_top + 1):
        for el in range(k_top + 1):
            pairs = {
                "qo4a": comm(wm[k], wm[el]),
                "qo4b": comm(wp[k], wp[el]),
                "qo5": comm(wm[k], wp[el]) + comm(wp[k], wm[el]),
                "qo6": comm(wm[k], g[el]) + comm(g[k], wm[el]),
                "qo7": comm(wm[k], gt[el]) + comm(gt[k], wm[el]),
                "qo8": comm(wp[k], g[el]) + comm(g[k], wp[el]),
                "qo9": comm(wp[k], gt[el]) + comm(gt[k], wp[el]),
                "qo10a": comm(g[k], g[el]),
                "qo10b": comm(gt[k], gt[el]),
                "qo11": comm(gt[k], g[el]) + comm(g[k], gt[el]),
            }
            scale = max(np.linalg.norm(wm[k]) * np.linalg.norm(wp[el]),
                        np.linalg.norm(g[k]) * np.linalg.norm(gt[el]), 1.0)
            for name, m in pairs.items():
                key = f"{name}[{k},{el}]"
                worst[key] = float(np.linalg.norm(m) / scale)
    worst["residual"] = max(worst.values())
    return worst


def truncation_check(cfg: ChainConfig, ells=(0, 1, 2)) -> dict:
    """The level-N linear relations among the alternating operators."""
    q = cfg.q
    nn = cfg.n_sites
    ops = alternating_ops(cfg, k_max=nn + max(ells) + 1)
    d = d_coeffs(cfg)
    ep, em = eps_level(cfg)
    eye = np.eye(cfg.quantum_dim, dtype=complex)
    out = {}
    for ell in ells:
        par_p, par_m = (ep, em) if ell % 2 == 0 else (em, ep)
        acc_wm = par_p * eye
        acc_wp = par_m * eye
        acc_g = np.zeros_like(eye)
        acc_gt = np.zeros_like(eye)
        scale = 1.0
        for k in range(nn + 1):
            acc_wm = acc_wm + d[k] * ops.w_minus[k + ell]
            acc_wp = acc_wp + d[k] * ops.w_plus[k + ell]
            acc_g = acc_g + d[k] * ops.g[k + ell]
            acc_gt = acc_gt + d[k] * ops.gt[k + ell]
            scale = max(scale, abs(d[k]) * np.linalg.norm(ops.w_minus[k + ell]))
        out[f"wminus[l={ell}]"] = float(np.linalg.norm(acc_wm) / scale)
        out[f"wplus[l={ell}]"] = float(np.linalg.norm(acc_wp) / scale)
        out[f"g[l={ell}]"] = float(np.linalg.norm(acc_g) / scale)
        out[f"gt[l={ell}]"] = float(np.linalg.norm(acc_gt) / scale)
    out["residual"] = max(out.values())
    return out


def _sample_annulus(rng, n):
    return rng.uniform(0.9, 1.15, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def tt_check(twoja: int, cfg: ChainConfig, n_samples: int = 33,
             rng=None, guard: float = 1e-6) -> dict:
    """Fusion-hierarchy residual of the double-row transfer matrices.

    Checked at sampled points; the sample count exceeds what a false identity
    could hide at these degrees, and points close to denominator zeros are
    re-drawn.
    """
    if twoja < 2:
        raise ValueError("the hierarchy check needs twoja >= 2")
    q = cfg.q
    b = cfg.boundary
    gamma_m = gamma_minus_poly(b, q)
    gamma_p = gamma_plus_poly(b, q)
    betas = {tj: beta_half_j(tj, q) for tj in set(cfg.spins)}
    j = twoja / 2.0
    rng = rng or np.random.default_rng(23)
    worst = 0.0
    tries = 0
    done = 0
    while done < n_samples:
        tries += 1
        if tries > 20 * n_samples:
            raise SamplePole("could not find enough regular sample points")
        (u,) = _sample_annulus(rng, 1)
        coeff_den = ((u**2 * q**twoja - 1.0 / (u**2 * q**twoja))
                     * (u**2 * q ** (twoja - 2) - 1.0 / (u**2 * q ** (twoja - 2))))
        if abs(coeff_den) < guard:
            continue
        ta = transfer_eval(twoja, cfg, u)
        tb = transfer_eval(twoja - 1, cfg, u * q**-0.5)
        th = transfer_eval(1, cfg, u * q ** (j - 0.5))
        tc = transfer_eval(twoja - 2, cfg, u / q)
        coeff = gamma_m.eval(u * q ** (j - 1.5)) * gamma_p.eval(u * q ** (j - 1.5)) / coeff_den
        for tj, v in zip(cfg.spins, cfg.inhoms):
            coeff *= betas[tj].eval(u * q ** (j - 0.5) * v) * betas[tj].eval(u * q ** (j - 0.5) / v)
        lhs = ta
        rhs = tb @ th + coeff * tc
        worst = max(worst, _relnorm(lhs - rhs, lhs, rhs, tb @ th, coeff * tc))
        done += 1
    return {"case": f"tt(j={twoja}/2, N={cfg.n_sites})", "residual": worst}


def _eval_sigma(twoja: int, cfg: ChainConfig, u: complex) -> complex:
    """Extraction factor relating the transfer matrix to the quotient image."""
    q = cfg.q
    out = 1.0 + 0j
    for tj, v in zip(cfg.spins, cfg.inhoms):
        for k in range(tj - 1):
            for ell in range(twoja):
                s = q ** ((twoja + tj) / 2.0 - k - ell - 1)
                out *= (u * v * s - 1.0 / (u * v * s)) * (u * s / v - v / (u * s))
    return out


def _tau_eval(twoja: int, cfg: ChainConfig, u: complex) -> np.ndarray:
    return transfer_eval(twoja, cfg, u) / _eval_sigma(twoja, cfg, u)


def _g_scalar(twoja: int, cfg: ChainConfig, u: complex, gamma_n, gamma_p) -> complex:
    """The scalar entering the T-system, built from the chain determinant."""
    q = cfg.q
    j = twoja / 2.0
    out = (-1.0) ** twoja
    for ell in range(twoja):
        arg = u * q ** (j - 1 - ell)
        num = gamma_n.eval(arg) * gamma_p.eval(arg)
        d1 = u**2 * q ** (twoja + 1 - 2 * ell)
        d2 = u**2 * q ** (twoja - 1 - 2 * ell)
        out *= num / ((d1 - 1.0 / d1) * (d2 - 1.0 / d2))
    return out


def tsys_ysys_check(twoja: int, cfg: ChainConfig, n_samples: int = 3,
                    rng=None, guard: float = 1e-6) -> dict:
    """T-system and Y-system residuals on the chain at sampled points."""
    q = cfg.q
    rng = rng or np.random.default_rng(29)
    gamma_n = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
    gamma_p = gamma_plus_poly(cfg.boundary, q)
    worst_t = 0.0
    worst_y = 0.0
    done = 0
    tries = 0
    while done < n_samples:
        tries += 1
        if tries > 50 * n_samples:
            raise SamplePole("could not find regular sample points")
        (u,) = _sample_annulus(rng, 1)
        try:
            g_here = _g_scalar(twoja, cfg, u, gamma_n, gamma_p)
            if abs(g_here) < guard:
                continue
            lhs = _tau_eval(twoja, cfg, u * q**-0.5) @ _tau_eval(twoja, cfg, u * q**0.5)
            rhs = (_tau_eval(twoja + 1, cfg, u) @ _tau_eval(twoja - 1, cfg, u)
                   + g_here * np.eye(cfg.quantum_dim))
            worst_t = max(worst_t, _relnorm(lhs - rhs, lhs, rhs))

            def y_at(tj, v):
                if tj == 0:
                    return np.zeros((cfg.quantum_dim, cfg.quantum_dim), dtype=complex)
                gv = _g_scalar(tj, cfg, v, gamma_n, gamma_p)
                return (_tau_eval(tj + 1, cfg, v) @ _tau_eval(tj - 1, cfg, v)) / gv

            eye = np.eye(cfg.quantum_dim)
            yl = y_at(twoja, u * q**-0.5) @ y_at(twoja, u * q**0.5)
            yr = (y_at(twoja + 1, u) + eye) @ (y_at(twoja - 1, u) + eye)
            worst_y = max(worst_y, _relnorm(yl - yr, yl, yr))
        except ZeroDivisionError:
            continue
        done += 1
    return {"case": f"tsys(j={twoja}/2, N={cfg.n_sites})",
            "t_residual": worst_t, "y_residual": worst_y,
            "residual": max(worst_t, worst_y)}


def dressed_reflection_check(twoja: int, cfg: ChainConfig, n_samples: int = 3,
                             rng=None) -> dict:
    """Reflection equation for the dressed K on a pair of auxiliary legs."""
    q = cfg.q
    rng = rng or np.random.default_rng(31)
    da = twoja + 1
    dq = cfg.quantum_dim
    dk = dressed_k(twoja, cfg)
    r = r_fused(twoja, twoja, q)
    dims = [dq, da, da]
    worst = 0.0
    for _ in range(n_samples):
        u, v = _sample_annulus(rng, 2)
        k1 = np.kron(dk.eval(u), np.eye(da))
        k2 = embed_two_axes(dk.eval(v), dims, 0, 2)
        rr = np.kron(np.eye(dq), r.eval(u / v))
        rs = np.kron(np.eye(dq), r.eval(u * v))
        lhs = rr @ k1 @ rs @ k2
        rhs = k2 @ rs @ k1 @ rr
        worst = max(worst, _relnorm(lhs - rhs, lhs, rhs))
    return {"case": f"dressed-re(j={twoja}/2, N={cfg.n_sites})", "residual": worst}


def dressed_reduction_check(twoja: int, cfg: ChainConfig) -> dict:
    """Chain-level analog of the boundary fusion-reduction identity."""
    if twoja < 2:
        raise ValueError("needs twoja >= 2")
    q = cfg.q
    dq = cfg.quantum_dim
    j = twoja / 2.0
    maps = build_fusion_maps(twoja, q)
    k_j = dressed_k(twoja, cfg).shift_q(-0.5, q)
    k_h = dressed_k(1, cfg).shift_q(-j - 1.0, q)
    dims = [dq, 2, twoja + 1]
    k2 = embed_two_axes_poly(k_j, dims, 0, 2)
    k1 = embed_two_axes_poly(k_h, dims, 0, 1)
    rmid = PolyMatrix.identity(dq).kron(
        r_fused(1, twoja, q).scale_arg(q ** (-(twoja + 3) / 2.0)).subst_power(2))
    fbar = PolyMatrix.identity(dq).kron(PolyMatrix.from_numeric(maps.Fbar))
    ebar = PolyMatrix.identity(dq).kron(PolyMatrix.from_numeric(maps.Ebar))
    lhs = fbar @ k2 @ rmid @ k1 @ ebar
    coeff = LaurentPoly.const(1.0)
    for k in range(twoja - 1):
        coeff = coeff * c2q(q, -twoja + 2 + k) * c2q(q, -twoja + k)
    gam = qdet_site_factor(cfg) * gamma_minus_poly(cfg.boundary, q)
    rhs = dressed_k(twoja - 1, cfg) * (coeff * gam.shift_q(-j - 1.0, q))
    return {"case": f"dressed-reduction(j={twoja}/2, N={cfg.n_sites})",
            "residual": lhs.residual(rhs)}
