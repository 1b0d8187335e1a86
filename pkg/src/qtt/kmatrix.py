"""Boundary K-matrices, their duals, normalizations and quantum determinants.

Conventions: the left/ket boundary carries (eps_plus, eps_minus, k_plus,
k_minus); the dual side carries the barred parameters.  The dual K-matrix is
obtained from the fused one by u -> 1/(uq), a transpose and the parameter
swap eps -> epsbar (crossed), k -> -kbar (crossed), divided by the scalar
normalization f_j.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace

import numpy as np

from .intertwiners import build_fusion_maps
from .laurent import LaurentPoly, PolyMatrix, RationalMatrix, cq
from .rmatrix import FusionMismatch, r_fundamental, r_fused, r_half_j
from .repspace import permutation


@dataclass(frozen=True)
class BoundaryParams:
    eps_plus: complex
    eps_minus: complex
    k_plus: complex
    k_minus: complex
    epsbar_plus: complex = 0.0
    epsbar_minus: complex = 0.0
    kbar_plus: complex = 0.0
    kbar_minus: complex = 0.0

    def rho(self, q: complex) -> complex:
        return self.k_plus * self.k_minus * (q + 1.0 / q) ** 2

    def dual_swapped(self) -> "BoundaryParams":
        """eps -> epsbar crossed, k -> -kbar crossed: the K+ building block."""
        return replace(
            self,
            eps_plus=self.epsbar_minus, eps_minus=self.epsbar_plus,
            k_plus=-self.kbar_minus, k_minus=-self.kbar_plus,
        )

    def k_swapped(self) -> "BoundaryParams":
        return replace(self, k_plus=self.k_minus, k_minus=self.k_plus)

    def key(self):
        return (self.eps_plus, self.eps_minus, self.k_plus, self.k_minus,
                self.epsbar_plus, self.epsbar_minus, self.kbar_plus, self.kbar_minus)


_CACHE: dict = {}
_LOCK = threading.Lock()


def _cached(key, builder):
    with _LOCK:
        if key in _CACHE:
            return _CACHE[key]
    val = builder()
    with _LOCK:
        _CACHE.setdefault(key, val)
    return val


def c2q(q: complex, s: float) -> LaurentPoly:
    """c(u^2 q^s) as a Laurent polynomial in u."""
    return LaurentPoly({4: q**s, -4: -(q ** (-s))})


def c2q_inv(q: complex, s: float) -> LaurentPoly:
    """c(u^(-2) q^s)."""
    return LaurentPoly({-4: q**s, 4: -(q ** (-s))})


def k_fundamental(params: BoundaryParams, q: complex) -> PolyMatrix:
    """The 2x2 boundary matrix with general off-diagonal couplings."""
    ep, em = params.eps_plus, params.eps_minus
    kp, km = params.k_plus, params.k_minus
    s = 1.0 / (q - 1.0 / q)
    return PolyMatrix(2, 2, {
        2: np.array([[ep, 0], [0, em]], dtype=complex),
        -2: np.array([[em, 0], [0, ep]], dtype=complex),
        4: np.array([[0, kp * s], [km * s, 0]], dtype=complex),
        -4: np.array([[0, -kp * s], [-km * s, 0]], dtype=complex),
    })


def k_fused(twoj: int, params: BoundaryParams, q: complex) -> PolyMatrix:
    """Fused spin-j K-matrix via the half-spin fusion recursion."""
    if twoj == 0:
        return PolyMatrix.identity(1)
    if twoj == 1:
        return k_fundamental(params, q)

    def build():
        maps = build_fusion_maps(twoj, q)
        low = twoj - 1
        k1 = k_fundamental(params, q).shift_q((1 - twoj) / 2.0, q).kron(
            PolyMatrix.identity(low + 1))
        k2 = PolyMatrix.identity(2).kron(
            k_fused(low, params, q).shift_q(0.5, q))
        # R^(1/2, j-1/2)(u^2 q^(1-j))
        rmid = r_half_j(low, q).scale_arg(q ** (1 - twoj / 2.0)).subst_power(2)
        f = PolyMatrix.from_numeric(maps.F)
        e = PolyMatrix.from_numeric(maps.E)
        return f @ k1 @ rmid @ k2 @ e

    return _cached(("kf", twoj, params.key(), q), build)


def f_j(twoj: int, q: complex) -> LaurentPoly:
    """Scalar normalization of the dual K-matrix."""
    out = LaurentPoly.const(1.0)
    for k in range(1, twoj):
        for ell in range(1, k + 1):
            out = out * c2q(q, k + ell + 2 - twoj) * c2q_inv(q, twoj - k - ell)
    return out


@dataclass(frozen=True)
class DualKMatrix:
    twoj: int
    num: PolyMatrix
    den: LaurentPoly   # f_j

    def as_rational(self) -> RationalMatrix:
        return RationalMatrix(self.num, self.den)

    def eval(self, u0: complex) -> np.ndarray:
        return self.num.eval(u0) / self.den.eval(u0)


def k_dual(twoj: int, params: BoundaryParams, q: complex,
           validate: bool = True) -> DualKMatrix:
    """Dual K-matrix from the crossed-parameter transformation of K."""
    def build():
        num = k_fused(twoj, params.dual_swapped(), q).subst_inv_shift(-1.0, q).transpose()
        if validate and twoj >= 2:
            # Against the dual fusion recursion (numerator identity).
            maps = build_fusion_maps(twoj, q)
            low = twoj - 1
            n_low = k_dual(low, params, q, validate=False).num
            n_half = k_dual(1, params, q, validate=False).num
            k2 = PolyMatrix.identity(2).kron(n_low.shift_q(-0.5, q))
            k1 = n_half.shift_q((twoj - 1) / 2.0, q).kron(PolyMatrix.identity(low + 1))
            rmid = r_half_j(low, q).scale_arg(q ** (-(twoj + 2) / 2.0)).subst_power(-2)
            et = PolyMatrix.from_numeric(maps.E.T)
            ft = PolyMatrix.from_numeric(maps.F.T)
            rec = et @ k2 @ rmid @ k1 @ ft
            if num.residual(rec) > 1e-9:
                raise FusionMismatch(
                    f"dual K (2j={twoj}): closed form vs recursion "
                    f"residual {num.residual(rec):.3e}")
        return DualKMatrix(twoj, num, f_j(twoj, q))

    return _cached(("kd", twoj, params.key(), q), build)


def k_norm_den(twoj: int, q: complex) -> LaurentPoly:
    out = LaurentPoly.const(1.0)
    for ell in range(twoj - 1):
        out = out * c2q(q, 1 - ell)
    return out


def k_normalized(twoj: int, params: BoundaryParams, q: complex) -> PolyMatrix:
    """K-tilde: the fused K divided exactly by its c(u^2 q^(1-l)) factors."""
    def build():
        return k_fused(twoj, params, q).exact_div(k_norm_den(twoj, q), tol=1e-10)

    return _cached(("kn", twoj, params.key(), q), build)


def k_dual_normalized(twoj: int, params: BoundaryParams, q: complex) -> PolyMatrix:
    """K-tilde-plus: same transformation applied to the normalized K."""
    def build():
        return k_normalized(twoj, params.dual_swapped(), q).subst_inv_shift(-1.0, q).transpose()

    return _cached(("knd", twoj, params.key(), q), build)


# -- quantum determinants ----------------------------------------------------


@dataclass(frozen=True)
class GammaScalars:
    gamma_minus: LaurentPoly
    gamma_plus: LaurentPoly


def gamma_minus_poly(params: BoundaryParams, q: complex) -> LaurentPoly:
    ep, em = params.eps_plus, params.eps_minus
    kk = params.k_plus * params.k_minus
    inner = (LaurentPoly.const(ep**2 + em**2)
             + LaurentPoly({4: ep * em * q**2, -4: ep * em * q**-2})
             - (kk / (q - 1.0 / q) ** 2) * (c2q(q, 2) * c2q(q, 2)))
    return c2q(q, 0) * inner


def gamma_plus_poly(params: BoundaryParams, q: complex) -> LaurentPoly:
    swapped = params.dual_swapped()
    # The quadratic combinations are symmetric, so the crossed swap reduces
    # to using the barred parameters with k+k- -> kbar+ kbar-.
    return gamma_minus_poly(swapped, q).subst_inv_shift(-2.0, q)


def gamma_scalars(params: BoundaryParams, q: complex, validate: bool = True) -> GammaScalars:
    gm = gamma_minus_poly(params, q)
    gp = gamma_plus_poly(params, q)
    if validate:
        tm = sklyanin_trace_minus(params, q)
        tp = sklyanin_trace_plus(params, q)
        if not gm.approx_eq(tm, tol=1e-10) or not gp.approx_eq(tp, tol=1e-10):
            raise ArithmeticError("quantum determinant closed form vs trace mismatch")
    return GammaScalars(gm, gp)


def projector_minus(q: complex) -> np.ndarray:
    p = r_fundamental(q).eval(1.0) / (q - 1.0 / q)
    return (np.eye(4) - p) / 2.0


def sklyanin_trace_minus(params: BoundaryParams, q: complex,
                         kmat: PolyMatrix | None = None) -> LaurentPoly:
    """tr_12(P- K1(u) R(q u^2) K2(u q)); scalar for the fundamental K."""
    k = kmat if kmat is not None else k_fundamental(params, q)
    pm = PolyMatrix.from_numeric(projector_minus(q))
    k1 = k.kron(PolyMatrix.identity(2))
    k2 = PolyMatrix.identity(2).kron(k.shift_q(1.0, q))
    rmid = r_fundamental(q).scale_arg(q).subst_power(2)
    return (pm @ k1 @ rmid @ k2).trace()


def sklyanin_trace_plus(params: BoundaryParams, q: complex) -> LaurentPoly:
    """tr_12(P- K1+(u q) R(u^-2 q^-3) K2+(u)) with the half-spin dual K."""
    kp = k_dual(1, params, q).num
    pm = PolyMatrix.from_numeric(projector_minus(q))
    k1 = kp.shift_q(1.0, q).kron(PolyMatrix.identity(2))
    k2 = PolyMatrix.identity(2).kron(kp)
    rmid = r_fundamental(q).scale_arg(q ** (-3)).subst_power(-2)
    return (pm @ k1 @ rmid @ k2).trace()


# -- identity checks ---------------------------------------------------------


def _rel(diff, *terms) -> float:
    scale = max(max(np.linalg.norm(t) for t in terms), 1.0)
    return float(np.linalg.norm(diff) / scale)


def reflection_check(twoj1: int, twoj2: int, params: BoundaryParams, q: complex,
                     n_samples: int = 4, rng=None) -> dict:
    """Reflection-equation residual at sampled (u, v)."""
    rng = rng or np.random.default_rng(11)
    r = r_fused(twoj1, twoj2, q)
    ka = k_fused(twoj1, params, q)
    kb = k_fused(twoj2, params, q)
    d1, d2 = twoj1 + 1, twoj2 + 1
    worst = 0.0
    for _ in range(n_samples):
        u, v = rng.uniform(0.85, 1.2, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        rr = r.eval(u / v)
        rs = r.eval(u * v)
        k1 = np.kron(ka.eval(u), np.eye(d2))
        k2 = np.kron(np.eye(d1), kb.eval(v))
        lhs = rr @ k1 @ rs @ k2
        rhs = k2 @ rs @ k1 @ rr
        worst = max(worst, _rel(lhs - rhs, lhs, rhs))
    return {"case": f"re({twoj1}/2,{twoj2}/2)", "residual": worst}


def dual_reflection_check(twoj1: int, twoj2: int, params: BoundaryParams, q: complex,
                          n_samples: int = 4, rng=None) -> dict:
    """Dual reflection equation, checked on the polynomial numerators."""
    rng = rng or np.random.default_rng(13)
    r = r_fused(twoj1, twoj2, q)
    na = k_dual(twoj1, params, q).num
    nb = k_dual(twoj2, params, q).num
    d1, d2 = twoj1 + 1, twoj2 + 1
    worst = 0.0
    for _ in range(n_samples):
        u, v = rng.uniform(0.85, 1.2, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        rr = r.eval(v / u)
        rs = r.eval(1.0 / (u * v * q * q))
        k1 = np.kron(na.eval(u), np.eye(d2))
        k2 = np.kron(np.eye(d1), nb.eval(v))
        lhs = rr @ k1 @ rs @ k2
        rhs = k2 @ rs @ k1 @ rr
        worst = max(worst, _rel(lhs - rhs, lhs, rhs))
    return {"case": f"dual-re({twoj1}/2,{twoj2}/2)", "residual": worst}


def intertwining_check(twoj: int, params: BoundaryParams, q: complex,
                       kmat: PolyMatrix | None = None) -> dict:
    """The pair of boundary intertwining relations, as polynomial identities."""
    from .repspace import spin_rep

    rep = spin_rep(twoj, q)
    k = kmat if kmat is not None else k_fused(twoj, params, q)
    kp, km = params.k_plus, params.k_minus
    ep, em = params.eps_plus, params.eps_minus
    sq = q**0.5
    qh = rep.q_s3_half
    q3 = qh @ qh
    a_plus = kp * sq * rep.splus @ qh
    a_minus = km / sq * rep.sminus @ qh
    b_plus = kp / sq * rep.splus @ np.linalg.inv(qh)
    b_minus = km * sq * rep.sminus @ np.linalg.inv(qh)

    def op(coeff_u, coeff_uinv, const):
        return PolyMatrix(rep.dim, rep.dim,
                          {2: coeff_u, -2: coeff_uinv, 0: const})

    o1_right = op(a_plus, a_minus, ep * q3)
    o1_left = op(a_minus, a_plus, ep * q3)
    o2_right = op(b_minus, b_plus, em * np.linalg.inv(q3))
    o2_left = op(b_plus, b_minus, em * np.linalg.inv(q3))
    r1 = (k @ o1_right).residual(o1_left @ k)
    r2 = (k @ o2_right).residual(o2_left @ k)
    return {"case": f"intertwining(j={twoj}/2)", "residual": max(r1, r2),
            "int1": r1, "int2": r2}


def symmetry_transpose_check(twoj: int, params: BoundaryParams, q: complex) -> float:
    k = k_fused(twoj, params, q)
    kt = k_fused(twoj, params.k_swapped(), q).transpose()
    return k.residual(kt)


def reduction_check(twoj: int, params: BoundaryParams, q: complex) -> dict:
    """Boundary fusion-reduction identity and its dual, as polynomials.

    Both collapse a product of a spin-j and a half-spin K around an R-matrix
    onto the spin-(j-1/2) K times the quantum determinant.
    """
    if twoj < 2:
        raise ValueError("reduction needs twoj >= 2")
    maps = build_fusion_maps(twoj, q)
    dlow = twoj  # dimension 2j of the reduced spin space
    j = twoj / 2.0

    # Direct identity with Gamma_minus.
    k_j = k_fused(twoj, params, q).shift_q(-0.5, q)
    k_h = k_fundamental(params, q).shift_q(-j - 1.0, q)
    rmid = r_half_j(twoj, q).scale_arg(q ** (-(twoj + 3) / 2.0)).subst_power(2)
    lhs = (PolyMatrix.from_numeric(maps.Fbar)
           @ PolyMatrix.identity(2).kron(k_j)
           @ rmid
           @ k_h.kron(PolyMatrix.identity(twoj + 1))
           @ PolyMatrix.from_numeric(maps.Ebar))
    coeff = LaurentPoly.const(1.0)
    for k in range(twoj - 1):
        coeff = coeff * c2q(q, -twoj + 2 + k) * c2q(q, -twoj + k)
    gm = gamma_minus_poly(params, q).shift_q(-j - 1.0, q)
    rhs = k_fused(twoj - 1, params, q) * (coeff * gm)
    res_minus = lhs.residual(rhs)

    # Dual identity with Gamma_plus, on numerators.
    n_j = k_dual(twoj, params, q).num.shift_q(-0.5, q)
    n_h = k_dual(1, params, q).num.shift_q(j, q)
    rdual = r_half_j(twoj, q).scale_arg(q ** (-(twoj + 3) / 2.0)).subst_power(-2)
    lhs_p = (PolyMatrix.from_numeric(maps.Ebar.T)
             @ n_h.kron(PolyMatrix.identity(twoj + 1))
             @ rdual
             @ PolyMatrix.identity(2).kron(n_j)
             @ PolyMatrix.from_numeric(maps.Fbar.T))
    coeff_p = LaurentPoly.const(1.0)
    for k in range(twoj - 1):
        coeff_p = coeff_p * c2q(q, twoj - k) * c2q(q, twoj - 2 - k)
    gp = gamma_plus_poly(params, q).shift_q(j - 1.0, q)
    rhs_p = k_dual(twoj - 1, params, q).num.shift_q(-1.0, q) * (coeff_p * gp)
    res_plus = lhs_p.residual(rhs_p)

    return {"case": f"reduction(j={twoj}/2)", "residual": max(res_minus, res_plus),
            "minus": res_minus, "plus": res_plus}
