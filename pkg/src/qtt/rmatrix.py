"""R-matrices of the XXZ hierarchy as exact Laurent-polynomial matrices.

The (1/2, j) family comes from the closed product form; general (j1, j2)
matrices are produced by the fusion recursion through the intertwiners.  All
entries are Laurent polynomials in u and the matrices act on
C^(2j1+1) (x) C^(2j2+1) with the first factor leftmost.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .intertwiners import build_fusion_maps
from .laurent import LaurentPoly, PolyMatrix, RationalMatrix, c_poly, cq
from .repspace import embed_two_axes_poly, permutation, spin_rep


class FusionMismatch(ArithmeticError):
    """Closed form and fusion recursion disagree; indicates a branch bug."""


_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def _cached(key, builder):
    with _CACHE_LOCK:
        if key in _CACHE:
            return _CACHE[key]
    val = builder()
    with _CACHE_LOCK:
        _CACHE.setdefault(key, val)
    return val


def r_fundamental(q: complex) -> PolyMatrix:
    """The 4x4 six-vertex R-matrix."""
    up = np.zeros((4, 4), dtype=complex)
    dn = np.zeros((4, 4), dtype=complex)
    mid = np.zeros((4, 4), dtype=complex)
    up[0, 0] = up[3, 3] = q
    up[1, 1] = up[2, 2] = 1.0
    dn[0, 0] = dn[3, 3] = -1.0 / q
    dn[1, 1] = dn[2, 2] = -1.0
    mid[1, 2] = mid[2, 1] = q - 1.0 / q
    return PolyMatrix(4, 4, {2: up, -2: dn, 0: mid})


def r_half_j(twoj: int, q: complex) -> PolyMatrix:
    """Closed form of R^(1/2, j)(u) on C^2 (x) C^(2j+1)."""
    if twoj == 0:
        return PolyMatrix.identity(2)

    def build():
        rep = spin_rep(twoj, q)
        d = 2 * (twoj + 1)
        # Diagonal exponents (1 +/- s3)/2 with s3 the integer S3 eigenvalue.
        s3 = [twoj - 2 * n for n in range(twoj + 1)]
        diag_up = np.zeros((d, d), dtype=complex)
        diag_dn = np.zeros((d, d), dtype=complex)
        for a, sign in ((0, 1), (1, -1)):
            for n, s in enumerate(s3):
                e = (1 + sign * s) / 2.0
                diag_up[a * (twoj + 1) + n, a * (twoj + 1) + n] = q**e
                diag_dn[a * (twoj + 1) + n, a * (twoj + 1) + n] = -q ** (-e)
        sp = np.zeros((2, 2), dtype=complex)
        sm = np.zeros((2, 2), dtype=complex)
        sp[0, 1] = 1.0
        sm[1, 0] = 1.0
        mid = (q - 1.0 / q) * (np.kron(sp, rep.sminus) + np.kron(sm, rep.splus))
        core = PolyMatrix(d, d, {2: diag_up, -2: diag_dn, 0: mid})
        pref = LaurentPoly.const(1.0)
        for k in range(twoj - 1):
            pref = pref * cq(q, (twoj - 1) / 2.0 - k)   # c(u q^(j - 1/2 - k))
        return core * pref

    return _cached(("rhj", twoj, q), build)


def _r_half_j_fused(twoj: int, q: complex) -> PolyMatrix:
    """R^(1/2, j) built by the fusion recursion; used as a validator."""
    maps = build_fusion_maps(twoj, q)
    dims = [2, 2, twoj]
    e23 = PolyMatrix.from_numeric(np.kron(np.eye(2), maps.E))
    f23 = PolyMatrix.from_numeric(np.kron(np.eye(2), maps.F))
    r13 = embed_two_axes_poly(
        r_half_j(twoj - 1, q).shift_q(-0.5, q), dims, 0, 2)
    r12 = r_fundamental(q).shift_q((twoj - 1) / 2.0, q).kron(
        PolyMatrix.identity(twoj))
    return f23 @ r13 @ r12 @ e23


def r_fused(twoj1: int, twoj2: int, q: complex) -> PolyMatrix:
    """Fused R-matrix R^(j1, j2)(u) on C^(2j1+1) (x) C^(2j2+1)."""
    if twoj1 == 0:
        return PolyMatrix.identity(twoj2 + 1)
    if twoj2 == 0:
        return PolyMatrix.identity(twoj1 + 1)

    def build():
        if twoj1 == 1:
            closed = r_half_j(twoj2, q)
            if twoj2 > 1:
                rec = _r_half_j_fused(twoj2, q)
                if closed.residual(rec) > 1e-9:
                    raise FusionMismatch(
                        f"(1/2, {twoj2}/2): closed form vs recursion residual "
                        f"{closed.residual(rec):.3e}")
            return closed
        maps = build_fusion_maps(twoj1, q)
        d3 = twoj2 + 1
        dims = [2, twoj1, d3]
        e12 = PolyMatrix.from_numeric(np.kron(maps.E, np.eye(d3)))
        f12 = PolyMatrix.from_numeric(np.kron(maps.F, np.eye(d3)))
        r13 = embed_two_axes_poly(
            r_half_j(twoj2, q).shift_q((1 - twoj1) / 2.0, q), dims, 0, 2)
        r23 = PolyMatrix.identity(2).kron(
            r_fused(twoj1 - 1, twoj2, q).shift_q(0.5, q))
        return f12 @ r13 @ r23 @ e12

    return _cached(("rf", twoj1, twoj2, q), build)


# -- scalar factors ----------------------------------------------------------


def beta_half_j(twoj: int, q: complex) -> LaurentPoly:
    """Unitarity factor of R^(1/2, j): product of -c(uq^(j+1/2-k)) c(uq^(-j-1/2+k))."""
    out = LaurentPoly.const(1.0)
    for k in range(twoj):
        s = (twoj + 1) / 2.0 - k
        out = out * cq(q, s) * cq(q, -s) * (-1.0)
    return out


def beta_fused(twoj1: int, twoj2: int, q: complex) -> LaurentPoly:
    """Unitarity factor of R^(j1, j2), one -c*c pair per (k, l)."""
    out = LaurentPoly.const(1.0)
    for k in range(twoj1):
        for ell in range(twoj2):
            s = (twoj1 + twoj2) / 2.0 - k - ell
            out = out * cq(q, s) * cq(q, -s) * (-1.0)
    return out


def xi_half_j(twoj: int, q: complex) -> LaurentPoly:
    """Crossing factor of R^(1/2, j)."""
    out = LaurentPoly.const(1.0)
    for k in range(twoj):
        out = out * cq(q, (twoj - 1) / 2.0 - k) * cq(q, (5 - twoj) / 2.0 + k) * (-1.0)
    return out


def norm_den_full(twoj1: int, twoj2: int, q: complex) -> LaurentPoly:
    """prod_{k,l} c(u q^(j1+j2-k-l)): the full normalization of R-tilde."""
    out = LaurentPoly.const(1.0)
    for k in range(twoj1):
        for ell in range(twoj2):
            out = out * cq(q, (twoj1 + twoj2) / 2.0 - k - ell)
    return out


@dataclass(frozen=True)
class NormalizedRMatrix:
    """R-tilde = M / den with den regular and nonzero at u = 1."""

    twoj1: int
    twoj2: int
    M: PolyMatrix
    den: LaurentPoly

    def as_rational(self) -> RationalMatrix:
        return RationalMatrix(self.M, self.den)

    def eval(self, u0: complex) -> np.ndarray:
        return self.M.eval(u0) / self.den.eval(u0)


def r_normalized(twoj1: int, twoj2: int, q: complex) -> NormalizedRMatrix:
    """Normalized R-matrix with the residual single-row denominator.

    The double product of c-factors is split: the part with l >= 1 divides
    the fused matrix exactly (checked), the l = 0 row stays as denominator.
    """
    def build():
        r = r_fused(twoj1, twoj2, q)
        extra = LaurentPoly.const(1.0)
        for k in range(twoj1):
            for ell in range(1, twoj2):
                extra = extra * cq(q, (twoj1 + twoj2) / 2.0 - k - ell)
        m = r.exact_div(extra, tol=1e-10)
        den = LaurentPoly.const(1.0)
        for k in range(twoj1):
            den = den * cq(q, (twoj1 + twoj2) / 2.0 - k)
        return NormalizedRMatrix(twoj1, twoj2, m, den)

    return _cached(("rnorm", twoj1, twoj2, q), build)


@dataclass(frozen=True)
class LaxMatrix:
    """Evaluated Lax operator on quantum (x) auxiliary, with its extraction factor."""

    twojn: int
    twoj: int
    poly: PolyMatrix
    extraction_den: LaurentPoly


def lax(twojn: int, twoj: int, q: complex) -> LaxMatrix:
    """L^(jn, j)(u) = R^(jn, j)(u) divided by its double product of c-factors."""
    def build():
        r = r_fused(twojn, twoj, q)
        den = LaurentPoly.const(1.0)
        for k in range(twojn - 1):
            for ell in range(twoj):
                den = den * cq(q, (twoj + twojn) / 2.0 - k - ell - 1)
        return LaxMatrix(twojn, twoj, r.exact_div(den, tol=1e-10), den)

    return _cached(("lax", twojn, twoj, q), build)


def lax_direct_half(twojn: int, q: complex) -> PolyMatrix:
    """L^(jn, 1/2) straight from the 2x2 operator-valued form."""
    rep = spin_rep(twojn, q)
    d = rep.dim
    e11 = np.zeros((2, 2), dtype=complex)
    e22 = np.zeros((2, 2), dtype=complex)
    e12 = np.zeros((2, 2), dtype=complex)
    e21 = np.zeros((2, 2), dtype=complex)
    e11[0, 0] = e22[1, 1] = e12[0, 1] = e21[1, 0] = 1.0
    qh = rep.q_s3_half
    qinv = np.linalg.inv(qh)
    sq = q**0.5
    up = sq * (np.kron(qh, e11) + np.kron(qinv, e22))
    dn = -(1.0 / sq) * (np.kron(qinv, e11) + np.kron(qh, e22))
    mid = (q - 1.0 / q) * (np.kron(rep.sminus, e12) + np.kron(rep.splus, e21))
    return PolyMatrix(2 * d, 2 * d, {2: up, -2: dn, 0: mid})


# -- identity checks ---------------------------------------------------------


def _sample_points(rng: np.random.Generator, n: int) -> np.ndarray:
    """Generic nonzero sample points on an annulus around |u| = 1."""
    radii = rng.uniform(0.85, 1.2, size=n)
    phases = rng.uniform(0.0, 2 * np.pi, size=n)
    return radii * np.exp(1j * phases)


def _rel(diff: np.ndarray, *terms: np.ndarray) -> float:
    scale = max(max(np.linalg.norm(t) for t in terms), 1.0)
    return float(np.linalg.norm(diff) / scale)


def ybe_check(twoj1: int, twoj2: int, twoj3: int, q: complex,
              n_samples: int = 5, rng: np.random.Generator | None = None) -> dict:
    """Yang-Baxter residuals at sampled (u1, u2) pairs."""
    rng = rng or np.random.default_rng(7)
    r12p = r_fused(twoj1, twoj2, q)
    r13p = r_fused(twoj1, twoj3, q)
    r23p = r_fused(twoj2, twoj3, q)
    dims = [twoj1 + 1, twoj2 + 1, twoj3 + 1]
    worst = 0.0
    for u1, u2 in zip(_sample_points(rng, n_samples), _sample_points(rng, n_samples)):
        a = np.kron(r12p.eval(u1 / u2), np.eye(dims[2]))
        b = _embed_numeric(r13p.eval(u1), dims, 0, 2)
        c = np.kron(np.eye(dims[0]), r23p.eval(u2))
        lhs = a @ b @ c
        rhs = c @ b @ a
        worst = max(worst, _rel(lhs - rhs, lhs, rhs))
    return {"case": f"ybe({twoj1}/2,{twoj2}/2,{twoj3}/2)", "residual": worst}


def _embed_numeric(mat: np.ndarray, dims, ax1: int, ax2: int) -> np.ndarray:
    from .repspace import embed_two_axes

    return embed_two_axes(mat, dims, ax1, ax2)


def unitarity_check(twoj1: int, twoj2: int, q: complex) -> float:
    """Polynomial residual of R(u) R(1/u) = beta * 1."""
    r = r_fused(twoj1, twoj2, q)
    rinv = r.subst_inv_shift(0.0, q)
    prod = r @ rinv
    target = PolyMatrix.identity((twoj1 + 1) * (twoj2 + 1)) * beta_fused(twoj1, twoj2, q)
    return prod.residual(target)


def symmetry_check(twoj1: int, twoj2: int, q: complex) -> float:
    r = r_fused(twoj1, twoj2, q)
    return r.residual(r.transpose())


def crossing_check(twoj: int, q: complex) -> dict:
    """[R^(1/2,j)(u)]^t1 [R^(1/2,j)(1/(u q^2))]^t1 = xi(u) * 1 as polynomials."""
    r = r_half_j(twoj, q)
    rt1 = r.partial_transpose_first(2)
    shifted = r.subst_inv_shift(-2.0, q).partial_transpose_first(2)
    prod = rt1 @ shifted
    target = PolyMatrix.identity(2 * (twoj + 1)) * xi_half_j(twoj, q)
    return {"case": f"crossing(j={twoj}/2)", "residual": prod.residual(target)}


def permutation_at_one_check(twoj: int, q: complex) -> float:
    """R-tilde^(j,j)(1) must be the swap operator."""
    rn = r_normalized(twoj, twoj, q)
    return float(np.linalg.norm(rn.eval(1.0) - permutation(twoj))
                 / max(np.linalg.norm(permutation(twoj)), 1.0))


def r_provider(twoj2: int, point: complex, q: complex | None = None) -> np.ndarray:
    """Numeric R^(1/2, j2) at a spectral point, for the intertwiner checks."""
    if q is None:
        raise ValueError("q required")
    return r_half_j(twoj2, q).eval(point)
