"""Boundary symmetries of the open chains.

Covers the exchange relations between the fundamental alternating operators
and the commuting charges, the induced symmetries of Hamiltonians and
transfer matrices at vanishing dual couplings, the rational (q = 1) chain
with its explicit spectrum, and the boundary Temperley-Lieb (blob) densities.
"""

from __future__ import annotations

from dataclasses import replace
from math import comb

import numpy as np

from .kmatrix import BoundaryParams
from .repspace import SiteLayout, embed_site, pauli
from .spinchain import (ChainConfig, alternating_ops, homogeneous_chain, psi_i,
                        transfer_normalized)


class ConstraintViolation(ValueError):
    """The parameter constraints of the requested symmetry case fail."""


class NoIdempotentScaling(ArithmeticError):
    """No affine rescaling of the boundary term squares to itself."""


def _relcomm(a: np.ndarray, b: np.ndarray) -> float:
    c = a @ b - b @ a
    return float(np.linalg.norm(c) / max(np.linalg.norm(a) * np.linalg.norm(b), 1.0))


def _rel(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.linalg.norm(x - y) / max(np.linalg.norm(x), np.linalg.norm(y), 1.0))


# -- exchange relations ---------------------------------------------------------


def constrained_params(params: BoundaryParams, case: str, q: complex) -> BoundaryParams:
    """Adjust the dual-side parameters so the requested exchange case applies."""
    if case == "w0":
        if params.k_minus == 0:
            raise ConstraintViolation("w0 case needs k_minus != 0")
        return replace(params, epsbar_minus=0.0,
                       kbar_plus=params.k_plus * params.kbar_minus / (params.k_minus * q**2))
    if case == "w1":
        if params.k_minus == 0:
            raise ConstraintViolation("w1 case needs k_minus != 0")
        return replace(params, epsbar_plus=0.0,
                       kbar_plus=params.k_plus * params.kbar_minus * q**2 / params.k_minus)
    if case == "mixed":
        return replace(params, kbar_plus=0.0, kbar_minus=0.0)
    raise ConstraintViolation(f"unknown case {case!r}")


def _charges(cfg: ChainConfig, params: BoundaryParams):
    """psi-images of the charges for the dual parameters in `params`."""
    fam = psi_i(replace_boundary(cfg, params))
    return fam.ops


def replace_boundary(cfg: ChainConfig, params: BoundaryParams) -> ChainConfig:
    return ChainConfig(cfg.spins, cfg.inhoms, params, cfg.q)


def exchange_check(cfg: ChainConfig, case: str, perturb: float = 0.0) -> dict:
    """Two-sided exchange of the basic operators with the commuting charges.

    For `w0`: W0 I_k = I'_k W0 with the dual couplings rotated by q^(+-2);
    for `w1` the mirror statement; for `mixed` both couplings vanish and the
    exchange collapses to commutation with the matching combination.
    """
    q = cfg.q
    base = constrained_params(cfg.boundary, case, q)
    if perturb:
        base = replace(base, kbar_plus=base.kbar_plus + perturb)
    ops = alternating_ops(replace_boundary(cfg, base), k_max=cfg.n_sites)
    w0, w1 = ops.w_minus[0], ops.w_plus[0]
    charges = _charges(cfg, base)
    out = {"case": f"exchange-{case}(N={cfg.n_sites})"}
    if case == "w0":
        primed = replace(base, kbar_plus=base.kbar_plus * q**2,
                         kbar_minus=base.kbar_minus / q**2)
        charges_p = _charges(cfg, primed)
        for k, (ik, ikp) in enumerate(zip(charges, charges_p)):
            out[f"k={k}"] = _rel(w0 @ ik, ikp @ w0)
    elif case == "w1":
        primed = replace(base, kbar_plus=base.kbar_plus / q**2,
                         kbar_minus=base.kbar_minus * q**2)
        charges_p = _charges(cfg, primed)
        for k, (ik, ikp) in enumerate(zip(charges, charges_p)):
            out[f"k={k}"] = _rel(w1 @ ik, ikp @ w1)
    else:
        combo = base.epsbar_plus * w0 + base.epsbar_minus * w1
        for k, ik in enumerate(charges):
            out[f"k={k}"] = _relcomm(combo, ik)
    out["residual"] = max(v for k, v in out.items() if k != "case")
    return out


# -- the parametrized spin-1/2 Hamiltonian ---------------------------------------


def hamparam_half(h_plus, h_minus, h_z, hbar_plus, hbar_minus, hbar_z,
                  n_sites: int, q: complex) -> np.ndarray:
    """Bulk exchange terms plus boundary fields in the ratio parametrization."""
    s = pauli()
    layout = SiteLayout.from_spins([1] * n_sites)
    h = np.zeros((layout.total_dim,) * 2, dtype=complex)
    for k in range(1, n_sites):
        h += embed_site(s["x"], k, layout) @ embed_site(s["x"], k + 1, layout)
        h += embed_site(s["y"], k, layout) @ embed_site(s["y"], k + 1, layout)
        h += (q + 1.0 / q) / 2.0 * embed_site(s["z"], k, layout) @ embed_site(s["z"], k + 1, layout)
    h += ((q - 1.0 / q) / 2.0 * h_z * embed_site(s["z"], 1, layout)
          + h_plus * embed_site(s["+"], 1, layout)
          + h_minus * embed_site(s["-"], 1, layout))
    h += ((q - 1.0 / q) / 2.0 * hbar_z * embed_site(s["z"], n_sites, layout)
          + hbar_plus * embed_site(s["+"], n_sites, layout)
          + hbar_minus * embed_site(s["-"], n_sites, layout))
    return h


def _w0_from_ratios(h_plus, h_minus, h_z, n_sites: int, q: complex) -> np.ndarray:
    """The basic alternating operator in the ratio parametrization.

    Any overall scale of (eps, k) drops out of the exchange statements, so
    eps_+ + eps_- is normalized to 2.
    """
    params = BoundaryParams(1.0 + h_z, 1.0 - h_z, h_plus / 2.0 * 2.0, h_minus / 2.0 * 2.0)
    cfg = homogeneous_chain(1, n_sites, params, q)
    return alternating_ops(cfg, k_max=0).w_minus[0]


def hamiltonian_exchange_check(h_plus, h_minus, h_z, hbar_minus, n_sites: int,
                               q: complex) -> dict:
    """H(.., hbar q^(+-2), 1) W0 = W0 H(.., hbar, 1) under the coupling lock."""
    hbar_plus = h_plus * hbar_minus / (q**2 * h_minus)
    w0 = _w0_from_ratios(h_plus, h_minus, h_z, n_sites, q)
    lhs = hamparam_half(h_plus, h_minus, h_z, hbar_plus * q**2, hbar_minus / q**2, 1.0,
                        n_sites, q) @ w0
    rhs = w0 @ hamparam_half(h_plus, h_minus, h_z, hbar_plus, hbar_minus, 1.0, n_sites, q)
    return {"case": f"hamiltonian-exchange(N={n_sites})", "residual": _rel(lhs, rhs)}


def hamiltonian_symmetry_check(twoj: int, n_sites: int, params: BoundaryParams,
                               q: complex, perturb: float = 0.0) -> dict:
    """Commutation of the first charge with the basic operators at kbar = 0."""
    from .conserved import hamiltonian

    base = replace(params, kbar_plus=perturb, kbar_minus=0.0)
    out = {"case": f"hamiltonian-symmetry(2j={twoj}, N={n_sites})"}
    cfg_ops = homogeneous_chain(twoj, n_sites, base, q)
    ops = alternating_ops(cfg_ops, k_max=0)
    w0, w1 = ops.w_minus[0], ops.w_plus[0]

    minus = hamiltonian(1, twoj, n_sites, replace(base, epsbar_minus=0.0), q).matrix
    out["minus_w0"] = _relcomm(minus, w0)
    plus = hamiltonian(1, twoj, n_sites, replace(base, epsbar_plus=0.0), q).matrix
    out["plus_w1"] = _relcomm(plus, w1)
    star = hamiltonian(1, twoj, n_sites, base, q).matrix
    combo = base.epsbar_plus * w0 + base.epsbar_minus * w1
    out["star_combo"] = _relcomm(star, combo)
    out["residual"] = max(out["minus_w0"], out["plus_w1"], out["star_combo"])
    return out


def transfer_symmetry_check(cfg: ChainConfig, twoja_list=(1, 2, 3), n_points: int = 3,
                            rng=None, perturb: float = 0.0) -> dict:
    """[t-tilde(u0), epsbar_+ W0 + epsbar_- W1] = 0 whenever kbar vanish."""
    rng = rng or np.random.default_rng(43)
    base = replace(cfg.boundary, kbar_plus=perturb, kbar_minus=0.0)
    chain = replace_boundary(cfg, base)
    ops = alternating_ops(chain, k_max=0)
    combo = base.epsbar_plus * ops.w_minus[0] + base.epsbar_minus * ops.w_plus[0]
    out = {"case": f"transfer-symmetry(N={cfg.n_sites})"}
    worst = 0.0
    for twoja in twoja_list:
        t = transfer_normalized(twoja, chain)
        for i in range(n_points):
            u0 = rng.uniform(0.9, 1.15) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            r = _relcomm(t.eval(u0), combo)
            out[f"j={twoja}/2[{i}]"] = r
            worst = max(worst, r)
    out["residual"] = worst
    return out


# -- the rational point ----------------------------------------------------------


def xxx_check(n_sites: int, h_plus, h_minus, hbar_plus, hbar_minus, mu0=0.3 + 0.1j,
              enforce: bool = True) -> dict:
    """Spectrum and symmetry of the rational chain with off-diagonal boundaries.

    Builds the q = 1 Hamiltonian and the boundary operator
    W0 = sum_n (h+ s+_n + h- s-_n) + mu0, checks their commutation under
    hbar_+ h_- = hbar_- h_+, the binomial spectrum of W0 and the recursively
    constructed eigenvectors.
    """
    if enforce and abs(hbar_plus * h_minus - hbar_minus * h_plus) > 1e-12:
        raise ConstraintViolation("needs hbar_+ h_- = hbar_- h_+")
    s = pauli()
    layout = SiteLayout.from_spins([1] * n_sites)
    dim = layout.total_dim
    h = np.zeros((dim, dim), dtype=complex)
    for k in range(1, n_sites):
        for a in ("x", "y", "z"):
            h += embed_site(s[a], k, layout) @ embed_site(s[a], k + 1, layout)
    h += h_plus * embed_site(s["+"], 1, layout) + h_minus * embed_site(s["-"], 1, layout)
    h += (hbar_plus * embed_site(s["+"], n_sites, layout)
          + hbar_minus * embed_site(s["-"], n_sites, layout))
    w0 = mu0 * np.eye(dim, dtype=complex)
    for k in range(1, n_sites + 1):
        w0 += h_plus * embed_site(s["+"], k, layout) + h_minus * embed_site(s["-"], k, layout)

    out = {"case": f"xxx(N={n_sites})", "commutator": _relcomm(h, w0)}

    lam = np.sqrt(h_plus * h_minus)
    expected = []
    for n in range(n_sites + 1):
        expected += [(n_sites - 2 * n) * lam + mu0] * comb(n_sites, n)
    got = np.sort_complex(np.linalg.eigvals(w0))
    expected = np.sort_complex(np.array(expected))
    out["spectrum"] = float(np.max(np.abs(got - expected)) / max(np.abs(expected).max(), 1.0))

    # Recursive eigenvectors; eta^(1/2) |up> + |down> seeds the ladder.
    eta_h = np.sqrt(h_plus / h_minus)
    up = np.array([1.0, 0.0], dtype=complex)
    dn = np.array([0.0, 1.0], dtype=complex)
    plusv = eta_h * up + dn
    minusv = -eta_h * up + dn
    levels = {(1, 0): [plusv], (1, 1): [minusv]}
    for nn in range(1, n_sites):
        nxt = {}
        for n in range(nn + 2):
            vecs = []
            for v in levels.get((nn, n), []):
                vecs.append(np.kron(v, plusv))
            for v in levels.get((nn, n - 1), []):
                vecs.append(np.kron(v, minusv))
            nxt[(nn + 1, n)] = vecs
        levels.update(nxt)
    worst_vec = 0.0
    for n in range(n_sites + 1):
        lam_n = (n_sites - 2 * n) * lam + mu0
        for v in levels[(n_sites, n)]:
            r = np.linalg.norm(w0 @ v - lam_n * v) / np.linalg.norm(v)
            worst_vec = max(worst_vec, float(r))
    out["eigenvectors"] = worst_vec
    out["residual"] = max(out["commutator"], out["spectrum"], out["eigenvectors"])
    return out


# -- blob algebra ------------------------------------------------------------------


def tl_density(i: int, layout: SiteLayout, q: complex) -> np.ndarray:
    """Temperley-Lieb density on sites (i, i+1), normalized so e^2 = (q+1/q) e.

    The z-difference term is oriented so the density commutes with the basic
    alternating operator built from the left boundary.
    """
    s = pauli()
    dim = layout.total_dim
    return (-(embed_site(s["+"], i, layout) @ embed_site(s["-"], i + 1, layout)
              + embed_site(s["-"], i, layout) @ embed_site(s["+"], i + 1, layout)
              + (q + 1.0 / q) / 4.0
              * embed_site(s["z"], i, layout) @ embed_site(s["z"], i + 1, layout))
            + (q - 1.0 / q) / 4.0 * (embed_site(s["z"], i, layout)
                                     - embed_site(s["z"], i + 1, layout))
            + (q + 1.0 / q) / 4.0 * np.eye(dim, dtype=complex))


def blob_check(n_sites: int, params: BoundaryParams, q: complex) -> dict:
    """Blob-algebra structure of the boundary term of the W0-symmetric chain."""
    from .conserved import hamiltonian

    base = replace(params, kbar_plus=0.0, kbar_minus=0.0, epsbar_minus=0.0)
    layout = SiteLayout.from_spins([1] * n_sites)
    dim = layout.total_dim
    es = [tl_density(i, layout, q) for i in range(1, n_sites)]
    cfg = homogeneous_chain(1, n_sites, base, q)
    w0 = alternating_ops(cfg, k_max=0).w_minus[0]

    out = {"case": f"blob(N={n_sites})"}
    # Two-site brute force for the loop weight.
    e2 = tl_density(1, SiteLayout.from_spins([1, 1]), q)
    delta = complex(np.vdot(e2, e2 @ e2) / np.vdot(e2, e2))
    out["delta_dev"] = float(abs(delta - (q + 1.0 / q)) / abs(q + 1.0 / q))
    out["e_sq"] = max(float(np.linalg.norm(e @ e - delta * e) / np.linalg.norm(e))
                      for e in es)
    tl = 0.0
    for i in range(len(es) - 1):
        tl = max(tl, _rel(es[i] @ es[i + 1] @ es[i], es[i]))
        tl = max(tl, _rel(es[i + 1] @ es[i] @ es[i + 1], es[i + 1]))
    out["tl"] = tl
    out["w0_e"] = max(_relcomm(w0, e) for e in es)

    hm = hamiltonian(1, 1, n_sites, base, q).matrix
    hm = (q - 1.0 / q) / 2.0 * hm   # match the explicit normalization
    m = hm + 2.0 * sum(es)
    # b = (m + nu)/mu with b^2 = b: needs m^2 in span{m, 1}.
    eye = np.eye(dim, dtype=complex)
    basis = np.stack([m.reshape(-1), eye.reshape(-1)], axis=1)
    coef, res, *_ = np.linalg.lstsq(basis, (m @ m).reshape(-1), rcond=None)
    span_res = float(np.linalg.norm(basis @ coef - (m @ m).reshape(-1))
                     / max(np.linalg.norm(m @ m), 1.0))
    if span_res > 1e-8:
        raise NoIdempotentScaling(f"boundary term square leaves span (res {span_res:.2e})")
    alpha, beta = coef
    disc = np.sqrt(alpha**2 + 4 * beta)
    nu = (-alpha + disc) / 2.0
    mu = alpha + 2 * nu
    if abs(mu) < 1e-10:
        nu = (-alpha - disc) / 2.0
        mu = alpha + 2 * nu
    if abs(mu) < 1e-10:
        raise NoIdempotentScaling("degenerate boundary parameters")
    b = (m + nu * eye) / mu
    out["b_idempotent"] = _rel(b @ b, b)
    out["w0_b"] = _relcomm(w0, b)
    out["b_mu"] = complex(mu)
    e1 = es[0]
    ybe = e1 @ b @ e1
    y = complex(np.vdot(e1, ybe) / np.vdot(e1, e1))
    out["e1be1"] = _rel(ybe, y * e1)
    out["y"] = y
    if len(es) > 1:
        out["b_commutes_far"] = max(_relcomm(b, e) for e in es[1:])
    out["residual"] = max(v for k, v in out.items()
                          if isinstance(v, float) and k != "residual")
    return out
