"""Spin-j representation matrices and tensor-product bookkeeping.

Spins are passed around as twoj = 2j (a nonnegative int), so dimensions are
twoj+1 and no fractions float through index arithmetic.  The quantum space of
an N-site chain is ordered C^(2 j_N + 1) x ... x C^(2 j_1 + 1): site N is the
leftmost (slowest) tensor factor.  Auxiliary spaces are always appended on the
right.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .laurent import DimensionMismatch, PolyMatrix


def qnum(n: int, q: complex) -> complex:
    """[n]_q = (q^n - q^-n)/(q - q^-1)."""
    return (q**n - q**-n) / (q - 1.0 / q)


@lru_cache(maxsize=None)
def _b_coeff(twoj: int, twojp: int, q: complex) -> complex:
    # B_{j,j'} = sqrt([j+j']_q [j-j'+1]_q), principal branch of the product.
    jpj = (twoj + twojp) // 2
    jmj = (twoj - twojp) // 2 + 1
    return cmath.sqrt(qnum(jpj, q) * qnum(jmj, q))


@dataclass(frozen=True)
class SpinRep:
    """Ladder and Cartan matrices of the (2j+1)-dimensional representation."""

    twoj: int
    splus: np.ndarray
    sminus: np.ndarray
    s3: np.ndarray          # integer diagonal, entries 2(j+1-n)
    q_s3_half: np.ndarray   # diag(q^(S3/2))

    @property
    def dim(self) -> int:
        return self.twoj + 1

    def q_s3_pow(self, p: float) -> np.ndarray:
        """diag(q^(p*S3)) for half-integer multiples p."""
        return np.diag(np.diag(self.q_s3_half) ** (2.0 * p))


@lru_cache(maxsize=None)
def spin_rep(twoj: int, q: complex) -> SpinRep:
    """Matrices S+, S-, S3 with (S+)_{m,m+1} = B_{j, j+1-m}."""
    if twoj < 0:
        raise ValueError("twoj must be nonnegative")
    dim = twoj + 1
    sp = np.zeros((dim, dim), dtype=complex)
    sm = np.zeros((dim, dim), dtype=complex)
    for m in range(1, dim):  # row m, column m+1 in 1-based labels
        b = _b_coeff(twoj, twoj - 2 * m + 2, q)  # j' = j + 1 - m
        sp[m - 1, m] = b
        sm[m, m - 1] = b
    s3 = np.diag([twoj - 2 * n for n in range(dim)]).astype(complex)
    qh = np.diag([q ** ((twoj - 2 * n) / 2.0) for n in range(dim)])
    return SpinRep(twoj, sp, sm, s3, qh)


def pauli() -> dict[str, np.ndarray]:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    return {"x": sx, "y": sy, "z": sz, "+": sp, "-": sm}


class SiteLayout:
    """Ordered site dimensions of the chain quantum space.

    dims[0] belongs to site N (leftmost factor) and dims[-1] to site 1.
    """

    def __init__(self, site_dims_n_to_1):
        self.dims = list(site_dims_n_to_1)
        if any(d < 1 for d in self.dims):
            raise ValueError("site dimensions must be positive")

    @classmethod
    def from_spins(cls, twojs_1_to_n) -> "SiteLayout":
        return cls([tj + 1 for tj in reversed(list(twojs_1_to_n))])

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        out = 1
        for d in self.dims:
            out *= d
        return out

    def axis_of_site(self, site: int) -> int:
        """Tensor-axis position of physical site number `site` (1-based)."""
        if not 1 <= site <= self.n_sites:
            raise DimensionMismatch(f"site {site} outside 1..{self.n_sites}")
        return self.n_sites - site


def embed_site(op: np.ndarray, site: int, layout: SiteLayout) -> np.ndarray:
    """Kronecker-embed a single-site operator, identities elsewhere."""
    axis = layout.axis_of_site(site)
    d = layout.dims[axis]
    if op.shape != (d, d):
        raise DimensionMismatch(f"operator {op.shape} at site of dimension {d}")
    left = int(np.prod(layout.dims[:axis], dtype=np.int64)) if axis else 1
    right = int(np.prod(layout.dims[axis + 1:], dtype=np.int64)) if axis < len(layout.dims) - 1 else 1
    return np.kron(np.kron(np.eye(left, dtype=complex), op), np.eye(right, dtype=complex))


def embed_two_axes(op: np.ndarray, dims, axis1: int, axis2: int) -> np.ndarray:
    """Embed an operator acting on tensor axes (axis1, axis2) of prod(dims).

    `op` is a (d1*d2) x (d1*d2) matrix whose row/col index is the pair
    (axis1, axis2) in that order.
    """
    dims = list(dims)
    if axis1 == axis2:
        raise DimensionMismatch("axes must differ")
    d1, d2 = dims[axis1], dims[axis2]
    if op.shape != (d1 * d2, d1 * d2):
        raise DimensionMismatch(f"operator {op.shape}, expected {(d1 * d2, d1 * d2)}")
    n = len(dims)
    t = op.reshape(d1, d2, d1, d2)
    full = t
    rest = [i for i in range(n) if i not in (axis1, axis2)]
    for i in rest:
        full = np.tensordot(full, np.eye(dims[i], dtype=complex), axes=0)
    # axes of `full`: (a1, a2, a1', a2', r1, r1', r2, r2', ...)
    order_rows = [None] * n
    order_cols = [None] * n
    order_rows[axis1], order_rows[axis2] = 0, 1
    order_cols[axis1], order_cols[axis2] = 2, 3
    for k, i in enumerate(rest):
        order_rows[i] = 4 + 2 * k
        order_cols[i] = 5 + 2 * k
    full = full.transpose(order_rows + order_cols)
    total = int(np.prod(dims, dtype=np.int64))
    return full.reshape(total, total)


def embed_two_axes_poly(op: PolyMatrix, dims, axis1: int, axis2: int) -> PolyMatrix:
    """Exponent-sliced version of embed_two_axes for PolyMatrix operands."""
    total = int(np.prod(list(dims), dtype=np.int64))
    out = {n: embed_two_axes(m, dims, axis1, axis2) for n, m in op.slices.items()}
    return PolyMatrix(total, total, out, normalize=False)


def permutation(twoj: int) -> np.ndarray:
    """The swap P(v (x) w) = w (x) v on two spin-j factors; P^2 = 1."""
    d = twoj + 1
    p = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            p[b * d + a, a * d + b] = 1.0
    return p


def partial_trace_aux(mat: PolyMatrix, aux_dim: int) -> PolyMatrix:
    """Trace over the auxiliary (rightmost) factor of quantum (x) aux."""
    return mat.partial_trace_last(aux_dim)


def partial_trace_two_aux(mat: PolyMatrix, d1: int, d2: int) -> PolyMatrix:
    """Trace over the two rightmost factors."""
    return mat.partial_trace_last(d2).partial_trace_last(d1)
