"""Conserved quantities of the open chains.

Local charges are logarithmic derivatives of the normalized double-row
transfer matrix at u = 1, computed exactly through the polynomial quotient
rule.  The module also carries the printed spin-1/2 and spin-1 Hamiltonians,
the expansion of the first two charges through the commuting family, the
power-series extraction of the central parameters delta_k, and the
reconstruction of the alternating operators as polynomials in the two
fundamental ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kmatrix import BoundaryParams, c2q
from .laurent import LaurentPoly, PolyMatrix, RationalMatrix, c_poly
from .repspace import SiteLayout, embed_site, pauli, qnum
from .spinchain import (ChainConfig, alternating_ops, eps_level, homogeneous_chain,
                        psi_i, qdet_site_factor, transfer_normalized, truncation_data)
from .kmatrix import gamma_minus_poly


class SingularAtOne(ArithmeticError):
    """The normalized transfer matrix is not invertible at u = 1."""


class DegenerateBoundary(ZeroDivisionError):
    """A boundary-term divisor of the printed Hamiltonian vanishes."""


class SeriesDivergence(ArithmeticError):
    """The series extraction hit a vanishing leading denominator term."""


@dataclass
class Hamiltonian:
    order: int
    twoj: int
    n_sites: int
    matrix: np.ndarray
    tmat: RationalMatrix        # the exact normalized transfer matrix


def hamiltonian(order: int, twoj: int, n_sites: int, params: BoundaryParams,
                q: complex) -> Hamiltonian:
    """H^(n) for the homogeneous chain (all spins = auxiliary spin, v = 1)."""
    if order not in (1, 2):
        raise ValueError("only the first two charges are implemented")
    cfg = homogeneous_chain(twoj, n_sites, params, q)
    t = transfer_normalized(twoj, cfg)
    t1, t1p, t1pp = t.derivatives_at(1.0, 2)
    cond = np.linalg.cond(t1)
    if not np.isfinite(cond) or cond > 1e10:
        raise SingularAtOne(f"normalized transfer matrix at u=1 has cond {cond:.2e}")
    tinv = np.linalg.inv(t1)
    h1 = tinv @ t1p
    if order == 1:
        return Hamiltonian(1, twoj, n_sites, h1, t)
    h2 = tinv @ t1pp - h1 @ h1
    return Hamiltonian(2, twoj, n_sites, h2, t)


# -- printed Hamiltonians ------------------------------------------------------


def hxxz_half_explicit(params: BoundaryParams, n_sites: int, q: complex) -> np.ndarray:
    """The spin-1/2 open chain Hamiltonian with generic boundary fields."""
    ep, em = params.eps_plus, params.eps_minus
    bp, bm = params.epsbar_plus, params.epsbar_minus
    if ep + em == 0 or bp + bm == 0:
        raise DegenerateBoundary("eps_+ + eps_- and epsbar_+ + epsbar_- must be nonzero")
    s = pauli()
    layout = SiteLayout.from_spins([1] * n_sites)
    dim = layout.total_dim
    h = np.zeros((dim, dim), dtype=complex)
    for k in range(1, n_sites):
        for a, coeff in (("x", 1.0), ("y", 1.0), ("z", (q + 1.0 / q) / 2.0)):
            h += coeff * (embed_site(s[a], k + 1, layout) @ embed_site(s[a], k, layout))
    h += (2.0 / (ep + em)) * ((q - 1.0 / q) / 4.0 * (ep - em) * embed_site(s["z"], 1, layout)
                              + params.k_plus * embed_site(s["+"], 1, layout)
                              + params.k_minus * embed_site(s["-"], 1, layout))
    h += (2.0 / (bp + bm)) * ((q - 1.0 / q) / 4.0 * (bp - bm) * embed_site(s["z"], n_sites, layout)
                              + params.kbar_plus * embed_site(s["+"], n_sites, layout)
                              + params.kbar_minus * embed_site(s["-"], n_sites, layout))
    return h


def spin1_matrices() -> dict:
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    sp = np.zeros((3, 3), dtype=complex)
    sp[0, 1] = sp[1, 2] = np.sqrt(2.0)
    sm = sp.T.copy()
    return {"z": sz, "+": sp, "-": sm,
            "x": (sp + sm) / 2.0, "y": (sp - sm) / (2.0j)}


def _spin1_boundary(eps_p, eps_m, k_p, k_m, q) -> np.ndarray:
    """The single-site boundary block of the printed spin-1 Hamiltonian."""
    s = spin1_matrices()
    den = k_p * k_m - eps_p * eps_m * (q + 1.0 / q) - (eps_p**2 + eps_m**2)
    if den == 0:
        raise DegenerateBoundary("spin-1 boundary denominator vanishes")
    cq = q - 1.0 / q
    c2 = q**2 - q**-2

    def xcomm(a, b, x):
        return x * (a @ b) - (1.0 / x) * (b @ a)

    sz2 = s["z"] @ s["z"]
    sq = q**0.5
    inner = ((eps_p * eps_m * (1.0 / q - q) + k_p * k_m * (q + 1.0 / q) / (1.0 / q - q)) * sz2
             + (eps_m**2 - eps_p**2) * s["z"]
             + (k_p**2 * (s["+"] @ s["+"]) + k_m**2 * (s["-"] @ s["-"])) / cq
             + np.sqrt(2.0 * (q + 1.0 / q)) / cq * (
                 eps_p * (k_p * xcomm(s["+"], s["z"], sq) + k_m * xcomm(s["z"], s["-"], sq))
                 + eps_m * (k_p * xcomm(s["+"], s["z"], 1.0 / sq)
                            + k_m * xcomm(s["z"], s["-"], 1.0 / sq))))
    return (c2 / 2.0) * inner / den


def hxxz_spin1_explicit(params: BoundaryParams, n_sites: int, q: complex) -> np.ndarray:
    """The printed spin-1 open chain Hamiltonian with generic boundary terms."""
    s = spin1_matrices()
    layout = SiteLayout.from_spins([2] * n_sites)
    dim = layout.total_dim
    h = np.zeros((dim, dim), dtype=complex)
    cq = q - 1.0 / q
    for n in range(1, n_sites):
        dot = sum(embed_site(s[a], n + 1, layout) @ embed_site(s[a], n, layout)
                  for a in ("x", "y", "z"))
        zz = embed_site(s["z"], n + 1, layout) @ embed_site(s["z"], n, layout)
        pm = (embed_site(s["+"], n + 1, layout) @ embed_site(s["-"], n, layout)
              + embed_site(s["-"], n + 1, layout) @ embed_site(s["+"], n, layout))
        zsq_n = embed_site(s["z"] @ s["z"], n, layout)
        zsq_n1 = embed_site(s["z"] @ s["z"], n + 1, layout)
        h += dot - dot @ dot
        h -= ((q**0.5 - q**-0.5) ** 2 / 2.0) * (zz @ pm + pm @ zz)
        h += (cq**2 / 2.0) * (zz - zsq_n1 @ zsq_n + zsq_n + zsq_n1)
    h += embed_site(_spin1_boundary(params.eps_plus, params.eps_minus,
                                    params.k_plus, params.k_minus, q), 1, layout)
    h += embed_site(_spin1_boundary(params.epsbar_plus, params.epsbar_minus,
                                    params.kbar_plus, params.kbar_minus, q),
                    n_sites, layout)
    return h


def hxxz_explicit(twoj: int, params: BoundaryParams, n_sites: int, q: complex) -> np.ndarray:
    if twoj == 1:
        return hxxz_half_explicit(params, n_sites, q)
    if twoj == 2:
        return hxxz_spin1_explicit(params, n_sites, q)
    raise ValueError("explicit Hamiltonians exist for spin 1/2 and spin 1 only")


def _identity_coefficient(m: np.ndarray) -> complex:
    return np.trace(m) / m.shape[0]


def proportional_to_identity_residual(m: np.ndarray) -> float:
    off = m - _identity_coefficient(m) * np.eye(m.shape[0])
    return float(np.linalg.norm(off) / max(np.linalg.norm(m), 1.0))


def affine_fit_residual(h: np.ndarray, basis: np.ndarray):
    """Best alpha, beta in h ~ alpha * basis + beta * 1, and the residual."""
    eye = np.eye(h.shape[0], dtype=complex)
    g = np.array([[np.vdot(basis, basis), np.vdot(basis, eye)],
                  [np.vdot(eye, basis), np.vdot(eye, eye)]])
    b = np.array([np.vdot(basis, h), np.vdot(eye, h)])
    alpha, beta = np.linalg.solve(g, b)
    res = np.linalg.norm(h - alpha * basis - beta * eye) / max(np.linalg.norm(h), 1.0)
    return alpha, beta, float(res)


# -- charges via the commuting family -----------------------------------------


def h_via_charges_check(n_sites: int, params: BoundaryParams, q: complex) -> dict:
    """Expansion of the first two spin-1/2 charges through the commuting family.

    Verifies, in order: the u=1 value of the normalized trace, its first
    derivative written through the charge polynomial, the second-derivative
    form, and the closed second-charge expression.  The first-charge display
    holds modulo an explicitly computed scalar, which is also reported.
    """
    cfg = homogeneous_chain(1, n_sites, params, q)
    b = params
    cq = q - 1.0 / q
    qq = q + 1.0 / q
    dq = cfg.quantum_dim
    eye = np.eye(dq, dtype=complex)

    t = transfer_normalized(1, cfg)
    t1, t1p, t1pp = t.derivatives_at(1.0, 2)

    fam = psi_i(cfg)
    td = fam.trunc
    i_at_one = fam.poly.eval(1.0)
    h0_one = td.h0.eval(1.0)

    scal_t1 = qq * (b.eps_plus + b.eps_minus) * (b.epsbar_plus + b.epsbar_minus)
    res_t1 = float(np.linalg.norm(t1 - scal_t1 * eye) / max(abs(scal_t1), 1.0))

    c2 = q**2 - q**-2
    pref = 4.0 * c2 * cq ** (-2 * n_sites)
    scal = (2.0 * cq ** (-2 * n_sites + 1)
            * (b.epsbar_plus * td.eps_plus_n + b.epsbar_minus * td.eps_minus_n)
            - 2.0 * n_sites * qq**2 / cq
            * (b.epsbar_plus + b.epsbar_minus) * (b.eps_plus + b.eps_minus))
    rhs_p = pref * (i_at_one + h0_one * fam.i0 * eye) + scal * eye
    res_tp = float(np.linalg.norm(t1p - rhs_p) / max(np.linalg.norm(t1p), 1.0))

    # d2/du2 of the trace through d/du(c(u^2 q^2) c(uq)^(-2N) I(u)).  The
    # printed form drops purely scalar pieces, which we reinstate explicitly:
    # the second derivative of the scalar tail of the trace expansion.
    from .laurent import RationalScalar

    num = fam.poly * c2q(q, 2)
    den = c_poly(q) ** (2 * n_sites)
    deriv = RationalMatrix(num, den).derivatives_at(1.0, 1)[1]
    shift_pair = LaurentPoly({4: q, -4: 1.0 / q})
    s_poly = (b.epsbar_plus * (shift_pair * td.eps_plus_n
                               + LaurentPoly.const(qq) * td.eps_minus_n)
              + b.epsbar_minus * (shift_pair * td.eps_minus_n
                                  + LaurentPoly.const(qq) * td.eps_plus_n))
    a_s = RationalScalar(s_poly, den)
    b_scal = RationalScalar(c2q(q, 2) * td.h0, den)
    corr2 = (-4.0 * c2 * cq ** (-2 * n_sites) * h0_one * fam.i0
             + 8.0 * fam.i0 * b_scal.derivatives_at(1.0, 1)[1]
             + a_s.derivatives_at(1.0, 2)[2])
    rhs_pp = -pref * i_at_one + 8.0 * deriv + corr2 * eye
    res_tpp = float(np.linalg.norm(t1pp - rhs_pp) / max(np.linalg.norm(t1pp), 1.0))

    # First charge modulo its scalar part.
    h1 = np.linalg.inv(t1) @ t1p
    coeff = 4.0 * cq ** (-2 * n_sites + 1) / (
        (b.eps_plus + b.eps_minus) * (b.epsbar_plus + b.epsbar_minus))
    scalar_offset = (pref * h0_one * fam.i0 + scal) / scal_t1
    res_h1 = float(np.linalg.norm(h1 - coeff * i_at_one - scalar_offset * eye)
                   / max(np.linalg.norm(h1), 1.0))

    # Closed expression of the second charge (printed operator part plus the
    # explicit scalar corrections above).
    h2 = np.linalg.inv(t1) @ t1pp - h1 @ h1
    d1 = qq * (b.eps_plus + b.eps_minus) * (b.epsbar_plus + b.epsbar_minus)
    h2_closed = (rhs_pp / d1) - (rhs_p / d1) @ (rhs_p / d1)
    res_h2 = float(np.linalg.norm(h2 - h2_closed) / max(np.linalg.norm(h2), 1.0))

    worst = max(res_t1, res_tp, res_tpp, res_h1, res_h2)
    return {"case": f"h-via-charges(N={n_sites})",
            "t_at_one": res_t1, "t_prime": res_tp, "t_second": res_tpp,
            "h1": res_h1, "h2": res_h2, "scalar_offset": scalar_offset,
            "residual": worst}


# -- the central parameter series ----------------------------------------------


@dataclass
class DeltaSeries:
    deltas: list            # delta_1 .. delta_K
    c: list                 # the expansion weights c_1 .. c_K
    head_residual: float    # size of the constant term, must vanish


def _x_series(p: LaurentPoly) -> tuple[int, np.ndarray]:
    """Laurent polynomial in u^2 as (lowest power of x=u^-2, coefficients)."""
    if any(n % 4 for n in p.coeffs):
        raise ValueError("series extraction needs a polynomial in u^2")
    xs = {-n // 4: v for n, v in p.coeffs.items()}
    lo = min(xs)
    hi = max(xs)
    arr = np.zeros(hi - lo + 1, dtype=complex)
    for k, v in xs.items():
        arr[k - lo] = v
    return lo, arr


def delta_series(cfg: ChainConfig, kmax: int) -> DeltaSeries:
    """delta_k from the series identity for the chain quantum determinant."""
    q = cfg.q
    b = cfg.boundary
    if b.k_plus == 0 or b.k_minus == 0:
        raise ValueError("series identity needs k_plus*k_minus != 0")
    cq = q - 1.0 / q
    td = truncation_data(cfg)
    num = cq * (qdet_site_factor(cfg) * gamma_minus_poly(b, q))
    den = c2q(q, 0) * (c2q(q, 2) ** 2) * td.h0 * td.h0.shift_q(1.0, q)
    nlo, narr = _x_series(num)
    dlo, darr = _x_series(den)
    if abs(darr[0]) < 1e-12 * np.abs(darr).max():
        raise SeriesDivergence("leading denominator coefficient vanishes")
    shift = nlo - dlo
    n_terms = kmax + 1 - shift
    series = np.zeros(max(n_terms, 0), dtype=complex)
    acc = np.zeros(max(n_terms, 0), dtype=complex)
    acc[:min(len(narr), len(acc))] = narr[:min(len(narr), len(acc))]
    for k in range(len(series)):
        series[k] = acc[k] / darr[0]
        top = min(len(acc) - k, len(darr))
        acc[k:k + top] -= series[k] * darr[:top]
    full = np.zeros(kmax + 1, dtype=complex)
    for k in range(len(series)):
        p = shift + k
        if 0 <= p <= kmax:
            full[p] = series[k]
    if shift < 0 and any(abs(series[k]) > 1e-9 * max(np.abs(series).max(), 1.0)
                         for k in range(-shift)):
        raise SeriesDivergence("series has non-vanishing growing part")
    rho = b.rho(q)
    full[0] += rho / cq
    cs = [-(q + 1.0 / q) ** k * (q**k + q ** (-k)) / q ** (2 * k) for k in range(1, kmax + 1)]
    deltas = [full[k] / cs[k - 1] for k in range(1, kmax + 1)]
    head = float(abs(full[0]) / max(np.abs(full).max(), 1.0))
    return DeltaSeries(deltas, cs, head)


def delta2_closed_form(cfg: ChainConfig) -> complex:
    """The printed second central parameter for one- and two-site chains."""
    q = cfg.q
    b = cfg.boundary
    cq = q - 1.0 / q
    qq = q + 1.0 / q
    rho = b.rho(q)

    def cnum(x):
        return x - 1.0 / x

    tj1, v1 = cfg.spins[0], cfg.inhoms[0]
    w01 = q ** (tj1 + 1) + q ** (-tj1 - 1)
    d2 = (cq / (q**2 + q**-2)) * (
        b.eps_plus * b.eps_minus / qq**2 * (q**2 + q**-2) * w01 * (v1**2 + v1**-2)
        - b.k_plus * b.k_minus / (cq**2 * qq**2)
        * cnum(q**tj1) * cnum(q ** (tj1 + 2)) * cnum(q * v1**2) * cnum(v1**2 / q)
        - b.eps_plus**2 * b.eps_minus**2 * cq**2 / rho
        - b.eps_plus**2 - b.eps_minus**2)
    if cfg.n_sites == 1:
        return d2
    if cfg.n_sites == 2:
        tj2, v2 = cfg.spins[1], cfg.inhoms[1]
        return d2 - (b.k_plus * b.k_minus * cnum(q**tj2) * cnum(q ** (tj2 + 2))
                     * cnum(q * v2**2) * cnum(v2**2 / q)
                     / (cnum(q**2) * qq * (q**2 + q**-2)))
    raise ValueError("closed forms are printed for one and two sites")


# -- polynomial reconstruction of the alternating operators --------------------


def qonsager_reconstruct(cfg: ChainConfig, deltas=None) -> dict:
    """Rebuild the low alternating operators as polynomials in the basic two."""
    q = cfg.q
    rho = cfg.boundary.rho(q)
    cq = q - 1.0 / q
    if deltas is None:
        deltas = delta_series(cfg, max(2, cfg.n_sites)).deltas
    d1, d2 = deltas[0], deltas[1] if len(deltas) > 1 else 0.0
    ops = alternating_ops(cfg, k_max=3)
    w0, w1 = ops.w_minus[0], ops.w_plus[0]
    eye = np.eye(cfg.quantum_dim, dtype=complex)

    def rel(x, y):
        return float(np.linalg.norm(x - y) / max(np.linalg.norm(x), np.linalg.norm(y), 1.0))

    g1 = q * w1 @ w0 - (1.0 / q) * w0 @ w1 + d1 * eye
    gt1 = q * w0 @ w1 - (1.0 / q) * w1 @ w0 + d1 * eye
    wm1 = ((q**2 + q**-2) * w0 @ w1 @ w0 - w0 @ w0 @ w1 - w1 @ w0 @ w0) / rho \
        + w1 + (d1 * cq / rho) * w0
    wp2 = ((q**2 + q**-2) * w1 @ w0 @ w1 - w1 @ w1 @ w0 - w0 @ w1 @ w1) / rho \
        + w0 + (d1 * cq / rho) * w1
    g2 = (1.0 / (rho * (q**2 + q**-2))) * (
        (q**-3 + q**-1) * w0 @ w0 @ w1 @ w1
        - (q**3 + q) * w1 @ w1 @ w0 @ w0
        + (q**-3 - q**3) * (w0 @ w1 @ w1 @ w0 + w1 @ w0 @ w0 @ w1)
        - (q**-5 + q**-3 + 2 / q) * w0 @ w1 @ w0 @ w1
        + (q**5 + q**3 + 2 * q) * w1 @ w0 @ w1 @ w0
        + rho * cq * (w0 @ w0 + w1 @ w1)) \
        + (d1 * cq / rho) * (q * w1 @ w0 - (1.0 / q) * w0 @ w1) \
        + (d2 - d1**2 * cq / (rho * (q**2 + q**-2))) * eye

    # The next minus-indexed operator, by iterating the ladder recursion on
    # the degree-4 polynomial above: a degree-5 polynomial in the basic pair.
    wm2 = (q * w0 @ g2 - (1.0 / q) * g2 @ w0) / rho + wp2

    out = {
        "G1": rel(g1, ops.g[0]),
        "Gt1": rel(gt1, ops.gt[0]),
        "W-1": rel(wm1, ops.w_minus[1]),
        "W2": rel(wp2, ops.w_plus[1]),
        "G2": rel(g2, ops.g[1]),
        "W-2": rel(wm2, ops.w_minus[2]),
    }
    out["residual"] = max(out.values())
    out["case"] = f"qonsager(N={cfg.n_sites})"
    return out


# -- commutation sanity ---------------------------------------------------------


def charge_commutation_check(n_sites: int, params: BoundaryParams, q: complex,
                             twoj: int = 1, n_points: int = 3, rng=None) -> dict:
    """[H1, H2] and commutation of both with the transfer matrix and charges."""
    rng = rng or np.random.default_rng(41)
    h1 = hamiltonian(1, twoj, n_sites, params, q)
    h2 = hamiltonian(2, twoj, n_sites, params, q)
    t = h1.tmat

    def relcomm(a, b):
        c = a @ b - b @ a
        return float(np.linalg.norm(c) / max(np.linalg.norm(a) * np.linalg.norm(b), 1.0))

    worst = relcomm(h1.matrix, h2.matrix)
    out = {"case": f"charge-commutation(2j={twoj}, N={n_sites})",
           "h1_h2": worst}
    for i in range(n_points):
        u0 = rng.uniform(0.9, 1.15) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        tv = t.eval(u0)
        out[f"h1_t[{i}]"] = relcomm(h1.matrix, tv)
        out[f"h2_t[{i}]"] = relcomm(h2.matrix, tv)
        worst = max(worst, out[f"h1_t[{i}]"], out[f"h2_t[{i}]"])
    if twoj == 1:
        cfg = homogeneous_chain(1, n_sites, params, q)
        fam = psi_i(cfg)
        for k, op in enumerate(fam.ops):
            r = max(relcomm(op, h1.matrix), relcomm(op, h2.matrix))
            out[f"charge[{k}]"] = r
            worst = max(worst, r)
    out["residual"] = worst
    return out


def fd_logderivative_check(n_sites: int, params: BoundaryParams, q: complex,
                           twoj: int = 1, step: float = 1e-5) -> float:
    """Finite-difference oracle for the first charge."""
    h1 = hamiltonian(1, twoj, n_sites, params, q)
    t = h1.tmat
    fd = np.linalg.inv(t.eval(1.0)) @ (t.eval(1.0 + step) - t.eval(1.0 - step)) / (2 * step)
    return float(np.linalg.norm(fd - h1.matrix) / max(np.linalg.norm(h1.matrix), 1.0))
