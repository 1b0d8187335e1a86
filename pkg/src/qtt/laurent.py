"""Exact Laurent-polynomial arithmetic in the spectral parameter.

Everything downstream (R-matrices, K-matrices, transfer matrices) is a matrix
of Laurent polynomials in one variable u with complex coefficients at a fixed
numeric deformation parameter q.  Exponents are stored in half-steps: the
integer key n stands for u^(n/2).  All constructions in this package only ever
populate even keys, but argument substitutions u -> u*q^(1/2) etc. stay inside
the ring this way and no separate square-root symbol is needed.

Matrices of such polynomials are stored as a mapping half-exponent -> complex
ndarray, so products reduce to exponent convolutions of numpy matmuls.
"""

from __future__ import annotations

import cmath
import json
from typing import Iterable, Mapping

import numpy as np

# Coefficients smaller than this (relative to the largest one) are dropped
# when a polynomial is normalized.  This is machine-noise trimming only;
# comparison tolerances are separate and much coarser.
TRIM_REL = 1e-13

# Default comparison tolerances: coefficient-wise for scalars, Frobenius for
# matrices, both relative to the magnitude of the operands.
COEFF_TOL = 1e-9
MATRIX_TOL = 1e-8


class NotDivisible(ArithmeticError):
    """Raised when a checked polynomial division leaves a large remainder."""


class DimensionMismatch(ValueError):
    """Raised when matrix shapes are incompatible."""


def half_power(base: complex, n: int) -> complex:
    """base^(n/2) using the principal square root for odd n."""
    if n % 2 == 0:
        return base ** (n // 2)
    return base ** (n // 2) * cmath.sqrt(base)


class LaurentPoly:
    """A Laurent polynomial sum_n coeffs[n] * u^(n/2), finitely supported."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, complex] | None = None, normalize: bool = True):
        c = {int(n): complex(v) for n, v in (coeffs or {}).items()}
        if normalize and c:
            top = max(abs(v) for v in c.values())
            cut = TRIM_REL * top
            c = {n: v for n, v in c.items() if abs(v) > cut}
        self.coeffs = c

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "LaurentPoly":
        return LaurentPoly({})

    @staticmethod
    def const(v: complex) -> "LaurentPoly":
        return LaurentPoly({0: v} if v != 0 else {})

    @staticmethod
    def u_pow(n: int, coeff: complex = 1.0) -> "LaurentPoly":
        """coeff * u^(n/2), n in half-steps."""
        return LaurentPoly({n: coeff})

    # -- basic queries -----------------------------------------------------

    def is_zero(self, tol: float = 0.0) -> bool:
        if not self.coeffs:
            return True
        return max(abs(v) for v in self.coeffs.values()) <= tol

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    def degree(self) -> int:
        """Highest half-step exponent (0 for the zero polynomial)."""
        return max(self.coeffs, default=0)

    def valuation(self) -> int:
        return min(self.coeffs, default=0)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self.coeffs)
        for n, v in other.coeffs.items():
            out[n] = out.get(n, 0.0) + v
        return LaurentPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({n: -v for n, v in self.coeffs.items()}, normalize=False)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return (-self) + _coerce(other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return LaurentPoly.zero()
            return LaurentPoly({n: v * other for n, v in self.coeffs.items()}, normalize=False)
        other = _coerce(other)
        out: dict[int, complex] = {}
        for n1, v1 in self.coeffs.items():
            for n2, v2 in other.coeffs.items():
                k = n1 + n2
                out[k] = out.get(k, 0.0) + v1 * v2
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if len(self.coeffs) == 1:
                ((n, v),) = self.coeffs.items()
                return LaurentPoly({n * k: v**k})
            raise ValueError("cannot invert a multi-term Laurent polynomial")
        out = LaurentPoly.const(1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- substitutions -----------------------------------------------------

    def scale_arg(self, a: complex) -> "LaurentPoly":
        """u -> a*u: coefficient of u^(n/2) picks up a^(n/2)."""
        return LaurentPoly({n: v * half_power(a, n) for n, v in self.coeffs.items()}, normalize=False)

    def shift_q(self, s: float, q: complex) -> "LaurentPoly":
        """u -> u*q^s for half-integer s."""
        return self.scale_arg(q**s)

    def subst_inv_shift(self, s: float, q: complex) -> "LaurentPoly":
        """u -> u^(-1)*q^s: exponent negation plus coefficient scaling."""
        a = q**s
        return LaurentPoly({-n: v * half_power(a, n) for n, v in self.coeffs.items()}, normalize=False)

    def subst_power(self, m: int) -> "LaurentPoly":
        """u -> u^m for integer m (m may be negative)."""
        return LaurentPoly({m * n: v for n, v in self.coeffs.items()}, normalize=False)

    # -- calculus / evaluation --------------------------------------------

    def eval(self, u0: complex) -> complex:
        """Evaluate at u0 != 0 (consistent principal branch of u0^(1/2))."""
        if u0 == 0:
            raise ZeroDivisionError("Laurent polynomials cannot be evaluated at u=0")
        w = cmath.sqrt(u0)
        return sum(v * w**n for n, v in self.coeffs.items())

    def derivative_u(self) -> "LaurentPoly":
        """d/du; u^(n/2) maps to (n/2) u^(n/2-1)."""
        return LaurentPoly({n - 2: v * (n / 2.0) for n, v in self.coeffs.items() if n != 0})

    def conj_params(self) -> "LaurentPoly":
        return LaurentPoly({n: v.conjugate() for n, v in self.coeffs.items()}, normalize=False)

    # -- division ----------------------------------------------------------

    def exact_div(self, b: "LaurentPoly", tol: float = COEFF_TOL) -> "LaurentPoly":
        """Checked division: returns p with p*b ~ self, else NotDivisible."""
        q, r = _divmod_dense(self, b)
        scale = max(self.max_abs(), 1e-300)
        if r.max_abs() > tol * scale:
            raise NotDivisible(
                f"remainder norm {r.max_abs():.3e} exceeds {tol:.1e} x {scale:.3e}"
            )
        return q

    # -- comparison / io ----------------------------------------------------

    def approx_eq(self, other, tol: float = COEFF_TOL) -> bool:
        other = _coerce(other)
        diff = self - other
        scale = max(self.max_abs(), other.max_abs(), 1.0)
        return diff.max_abs() <= tol * scale

    def to_json(self) -> dict:
        ns = sorted(self.coeffs)
        return {
            "half_exponents": ns,
            "re": [self.coeffs[n].real for n in ns],
            "im": [self.coeffs[n].imag for n in ns],
        }

    @staticmethod
    def from_json(d: dict) -> "LaurentPoly":
        return LaurentPoly(
            {n: complex(re, im) for n, re, im in zip(d["half_exponents"], d["re"], d["im"])}
        )

    def __repr__(self):
        if not self.coeffs:
            return "LaurentPoly(0)"
        terms = []
        for n in sorted(self.coeffs):
            v = self.coeffs[n]
            e = n / 2
            terms.append(f"({v:.6g})u^{e:g}" if n else f"({v:.6g})")
        return "LaurentPoly(" + " + ".join(terms) + ")"

    def __eq__(self, other):
        if not isinstance(other, (LaurentPoly, int, float, complex)):
            return NotImplemented
        return self.approx_eq(_coerce(other), tol=1e-12)

    def __hash__(self):
        raise TypeError("LaurentPoly is not hashable")


def _coerce(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, (int, float, complex)):
        return LaurentPoly.const(x)
    raise TypeError(f"cannot coerce {type(x)} to LaurentPoly")


def _divmod_dense(a: LaurentPoly, b: LaurentPoly):
    """Long division over the half-step exponent lattice."""
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if a.is_zero():
        return LaurentPoly.zero(), LaurentPoly.zero()
    rem = dict(a.coeffs)
    bn = b.degree()
    blead = b.coeffs[bn]
    quo: dict[int, complex] = {}
    # Peel off leading terms of the remainder until its degree drops below
    # what b can still cancel.
    for _ in range(len(a.coeffs) + a.degree() - a.valuation() + 2):
        if not rem:
            break
        an = max(rem)
        k = an - bn
        if k < a.valuation() - b.valuation():
            break
        c = rem[an] / blead
        quo[k] = quo.get(k, 0.0) + c
        for n, v in b.coeffs.items():
            m = n + k
            rem[m] = rem.get(m, 0.0) - c * v
            if abs(rem[m]) <= 1e-300:
                del rem[m]
        if an in rem and abs(rem[an]) <= TRIM_REL * max(abs(x) for x in a.coeffs.values()):
            del rem[an]
    return LaurentPoly(quo), LaurentPoly(rem)


# -- convenience builders ----------------------------------------------------


def c_poly(scale: complex = 1.0) -> LaurentPoly:
    """c(u*scale) = scale*u - scale^(-1)*u^(-1)."""
    return LaurentPoly({2: scale, -2: -1.0 / scale})


def cq(q: complex, s: float) -> LaurentPoly:
    """c(u q^s) as a Laurent polynomial in u."""
    return c_poly(q**s)


def c_num(x: complex) -> complex:
    """The scalar c(x) = x - 1/x."""
    return x - 1.0 / x


def u_cap_poly(q: complex) -> LaurentPoly:
    """U = (q u^2 + q^(-1) u^(-2)) / (q + q^(-1))."""
    d = q + 1.0 / q
    return LaurentPoly({4: q / d, -4: 1.0 / (q * d)})


class RationalScalar:
    """A quotient num/den of Laurent polynomials; equality is semantic."""

    __slots__ = ("num", "den")

    def __init__(self, num: LaurentPoly, den: LaurentPoly | None = None):
        den = den if den is not None else LaurentPoly.const(1.0)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den

    def __mul__(self, other):
        if isinstance(other, RationalScalar):
            return RationalScalar(self.num * other.num, self.den * other.den)
        return RationalScalar(self.num * other, self.den)

    __rmul__ = __mul__

    def __add__(self, other):
        other = other if isinstance(other, RationalScalar) else RationalScalar(_coerce(other))
        return RationalScalar(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        other = other if isinstance(other, RationalScalar) else RationalScalar(_coerce(other))
        return RationalScalar(self.num * other.den - other.num * self.den, self.den * other.den)

    def inv(self) -> "RationalScalar":
        if self.num.is_zero():
            raise ZeroDivisionError("inverting zero")
        return RationalScalar(self.den, self.num)

    def eval(self, u0: complex) -> complex:
        return self.num.eval(u0) / self.den.eval(u0)

    def scale_arg(self, a: complex) -> "RationalScalar":
        return RationalScalar(self.num.scale_arg(a), self.den.scale_arg(a))

    def shift_q(self, s: float, q: complex) -> "RationalScalar":
        return RationalScalar(self.num.shift_q(s, q), self.den.shift_q(s, q))

    def derivative_u(self) -> "RationalScalar":
        return RationalScalar(
            self.num.derivative_u() * self.den - self.num * self.den.derivative_u(),
            self.den * self.den,
        )

    def derivatives_at(self, u0: complex, order: int) -> list:
        """Values of R, R', .., R^(order) at u0 without growing denominators.

        Uses num = R den differentiated repeatedly, so only num and den
        themselves are ever expanded; this avoids the cancellation that
        den^(2 order) would suffer near its zeros-free evaluation points.
        """
        return _derivatives_at(self.num, self.den, u0, order)

    def approx_eq(self, other, tol: float = COEFF_TOL) -> bool:
        other = other if isinstance(other, RationalScalar) else RationalScalar(_coerce(other))
        a = self.num * other.den
        b = other.num * self.den
        scale = max(a.max_abs(), b.max_abs(), 1.0)
        return (a - b).max_abs() <= tol * scale

    def __repr__(self):
        return f"RationalScalar({self.num!r} / {self.den!r})"


class PolyMatrix:
    """A matrix of Laurent polynomials, stored exponent-sliced.

    slices[n] is the complex (rows x cols) coefficient matrix of u^(n/2).
    """

    __slots__ = ("rows", "cols", "slices")

    def __init__(self, rows: int, cols: int, slices: Mapping[int, np.ndarray] | None = None,
                 normalize: bool = True):
        self.rows = rows
        self.cols = cols
        sl = {}
        for n, m in (slices or {}).items():
            m = np.asarray(m, dtype=complex)
            if m.shape != (rows, cols):
                raise DimensionMismatch(f"slice shape {m.shape} != ({rows},{cols})")
            sl[int(n)] = m
        if normalize and sl:
            top = max(np.abs(m).max() for m in sl.values())
            cut = TRIM_REL * top
            for m in sl.values():
                m[np.abs(m) <= cut] = 0.0
            sl = {n: m for n, m in sl.items() if np.abs(m).max() > 0.0}
        self.slices = sl

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zeros(rows: int, cols: int) -> "PolyMatrix":
        return PolyMatrix(rows, cols, {})

    @staticmethod
    def identity(n: int) -> "PolyMatrix":
        return PolyMatrix(n, n, {0: np.eye(n, dtype=complex)})

    @staticmethod
    def from_numeric(m: np.ndarray) -> "PolyMatrix":
        m = np.asarray(m, dtype=complex)
        return PolyMatrix(m.shape[0], m.shape[1], {0: m})

    @staticmethod
    def from_entries(entries) -> "PolyMatrix":
        """Build from a nested list of LaurentPoly / scalars."""
        rows = len(entries)
        cols = len(entries[0])
        slices: dict[int, np.ndarray] = {}
        for i, row in enumerate(entries):
            if len(row) != cols:
                raise DimensionMismatch("ragged rows")
            for j, p in enumerate(row):
                p = _coerce(p)
                for n, v in p.coeffs.items():
                    slices.setdefault(n, np.zeros((rows, cols), dtype=complex))[i, j] = v
        return PolyMatrix(rows, cols, slices)

    def entry(self, i: int, j: int) -> LaurentPoly:
        return LaurentPoly({n: m[i, j] for n, m in self.slices.items() if m[i, j] != 0})

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check_same_shape(other)
        out = {n: m.copy() for n, m in self.slices.items()}
        for n, m in other.slices.items():
            if n in out:
                out[n] = out[n] + m
            else:
                out[n] = m.copy()
        return PolyMatrix(self.rows, self.cols, out)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols, {n: -m for n, m in self.slices.items()},
                          normalize=False)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"({self.rows},{self.cols}) @ ({other.rows},{other.cols})")
        out: dict[int, np.ndarray] = {}
        for n1, m1 in self.slices.items():
            for n2, m2 in other.slices.items():
                k = n1 + n2
                prod = m1 @ m2
                if k in out:
                    out[k] += prod
                else:
                    out[k] = prod
        return PolyMatrix(self.rows, other.cols, out)

    def __mul__(self, other) -> "PolyMatrix":
        """Scalar (complex or LaurentPoly) multiplication."""
        if isinstance(other, (int, float, complex)):
            return PolyMatrix(self.rows, self.cols,
                              {n: m * other for n, m in self.slices.items()})
        if isinstance(other, LaurentPoly):
            out: dict[int, np.ndarray] = {}
            for n1, m in self.slices.items():
                for n2, v in other.coeffs.items():
                    k = n1 + n2
                    if k in out:
                        out[k] = out[k] + m * v
                    else:
                        out[k] = m * v
            return PolyMatrix(self.rows, self.cols, out)
        return NotImplemented

    __rmul__ = __mul__

    def kron(self, other: "PolyMatrix") -> "PolyMatrix":
        out: dict[int, np.ndarray] = {}
        for n1, m1 in self.slices.items():
            for n2, m2 in other.slices.items():
                k = n1 + n2
                prod = np.kron(m1, m2)
                if k in out:
                    out[k] += prod
                else:
                    out[k] = prod
        return PolyMatrix(self.rows * other.rows, self.cols * other.cols, out)

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.cols, self.rows,
                          {n: m.T.copy() for n, m in self.slices.items()}, normalize=False)

    def partial_transpose_first(self, d1: int) -> "PolyMatrix":
        """Transpose on the first tensor factor of a (d1*d2) square matrix."""
        d2, r = divmod(self.rows, d1)
        if r or self.rows != self.cols:
            raise DimensionMismatch("partial transpose needs a square d1*d2 matrix")
        out = {}
        for n, m in self.slices.items():
            t = m.reshape(d1, d2, d1, d2).transpose(2, 1, 0, 3).reshape(self.rows, self.cols)
            out[n] = t.copy()
        return PolyMatrix(self.rows, self.cols, out, normalize=False)

    def trace(self) -> LaurentPoly:
        return LaurentPoly({n: np.trace(m) for n, m in self.slices.items()})

    def partial_trace_last(self, d_last: int) -> "PolyMatrix":
        """Trace over the rightmost tensor factor."""
        d1, r = divmod(self.rows, d_last)
        if r or self.rows != self.cols:
            raise DimensionMismatch("partial trace needs a square d1*d_last matrix")
        out = {}
        for n, m in self.slices.items():
            out[n] = np.einsum("iaja->ij", m.reshape(d1, d_last, d1, d_last))
        return PolyMatrix(d1, d1, out)

    def partial_trace_first(self, d_first: int) -> "PolyMatrix":
        d2, r = divmod(self.rows, d_first)
        if r or self.rows != self.cols:
            raise DimensionMismatch("partial trace needs a square d_first*d2 matrix")
        out = {}
        for n, m in self.slices.items():
            out[n] = np.einsum("aiaj->ij", m.reshape(d_first, d2, d_first, d2))
        return PolyMatrix(d2, d2, out)

    # -- substitutions, evaluation ------------------------------------------

    def scale_arg(self, a: complex) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols,
                          {n: m * half_power(a, n) for n, m in self.slices.items()},
                          normalize=False)

    def shift_q(self, s: float, q: complex) -> "PolyMatrix":
        return self.scale_arg(q**s)

    def subst_inv_shift(self, s: float, q: complex) -> "PolyMatrix":
        a = q**s
        return PolyMatrix(self.rows, self.cols,
                          {-n: m * half_power(a, n) for n, m in self.slices.items()},
                          normalize=False)

    def subst_power(self, mpow: int) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols,
                          {mpow * n: m for n, m in self.slices.items()}, normalize=False)

    def eval(self, u0: complex) -> np.ndarray:
        w = cmath.sqrt(u0)
        out = np.zeros((self.rows, self.cols), dtype=complex)
        for n, m in self.slices.items():
            out += m * w**n
        return out

    def derivative_u(self) -> "PolyMatrix":
        return PolyMatrix(self.rows, self.cols,
                          {n - 2: m * (n / 2.0) for n, m in self.slices.items() if n != 0})

    # -- division, comparison ------------------------------------------------

    def exact_div(self, b: LaurentPoly, tol: float = COEFF_TOL) -> "PolyMatrix":
        """Checked division by a scalar Laurent polynomial."""
        if b.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if not self.slices:
            return PolyMatrix.zeros(self.rows, self.cols)
        if len(b.coeffs) == 1:
            ((n, v),) = b.coeffs.items()
            return PolyMatrix(self.rows, self.cols,
                              {k - n: m / v for k, m in self.slices.items()})
        bn = b.degree()
        blead = b.coeffs[bn]
        rem = {n: m.copy() for n, m in self.slices.items()}
        top = self.max_abs()
        quo: dict[int, np.ndarray] = {}
        hi = max(rem)
        lo_target = min(rem) - b.valuation() + bn
        while rem:
            an = max(rem)
            k = an - bn
            if k < min(self.slices) - b.valuation():
                break
            cmat = rem[an] / blead
            if k in quo:
                quo[k] += cmat
            else:
                quo[k] = cmat
            for n, v in b.coeffs.items():
                m = n + k
                if m in rem:
                    rem[m] = rem[m] - cmat * v
                else:
                    rem[m] = -cmat * v
                if np.abs(rem[m]).max() <= TRIM_REL * top:
                    del rem[m]
            if an in rem and np.abs(rem[an]).max() <= TRIM_REL * top:
                del rem[an]
        rnorm = max((np.abs(m).max() for m in rem.values()), default=0.0)
        if rnorm > tol * max(top, 1e-300):
            raise NotDivisible(f"matrix division remainder {rnorm:.3e} (scale {top:.3e})")
        return PolyMatrix(self.rows, self.cols, quo)

    def max_abs(self) -> float:
        return max((np.abs(m).max() for m in self.slices.values()), default=0.0)

    def frobenius(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(m) ** 2) for m in self.slices.values())))

    def approx_eq(self, other: "PolyMatrix", tol: float = MATRIX_TOL) -> bool:
        return self.residual(other) <= tol

    def residual(self, other: "PolyMatrix") -> float:
        """Frobenius distance relative to the larger operand."""
        self._check_same_shape(other)
        diff = self - other
        scale = max(self.frobenius(), other.frobenius(), 1.0)
        return diff.frobenius() / scale

    def at_one(self) -> np.ndarray:
        return self.eval(1.0)

    def to_json(self) -> dict:
        ns = sorted(self.slices)
        return {
            "rows": self.rows,
            "cols": self.cols,
            "half_exponents": ns,
            "re": [self.slices[n].real.reshape(-1).tolist() for n in ns],
            "im": [self.slices[n].imag.reshape(-1).tolist() for n in ns],
        }

    @staticmethod
    def from_json(d: dict) -> "PolyMatrix":
        rows, cols = d["rows"], d["cols"]
        slices = {}
        for n, re, im in zip(d["half_exponents"], d["re"], d["im"]):
            slices[n] = (np.array(re) + 1j * np.array(im)).reshape(rows, cols)
        return PolyMatrix(rows, cols, slices)

    def _check_same_shape(self, other: "PolyMatrix"):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch(
                f"({self.rows},{self.cols}) vs ({other.rows},{other.cols})")

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, {len(self.slices)} exponent slices)"


class RationalMatrix:
    """A PolyMatrix divided by a scalar Laurent polynomial denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: PolyMatrix, den: LaurentPoly | None = None):
        den = den if den is not None else LaurentPoly.const(1.0)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den

    @property
    def rows(self):
        return self.num.rows

    @property
    def cols(self):
        return self.num.cols

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        other = _as_rational(other)
        return RationalMatrix(self.num @ other.num, self.den * other.den)

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        other = _as_rational(other)
        return RationalMatrix(self.num * other.den + other.num * self.den,
                              self.den * other.den)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        other = _as_rational(other)
        return RationalMatrix(self.num * other.den - other.num * self.den,
                              self.den * other.den)

    def __mul__(self, scalar) -> "RationalMatrix":
        if isinstance(scalar, RationalScalar):
            return RationalMatrix(self.num * scalar.num, self.den * scalar.den)
        return RationalMatrix(self.num * scalar, self.den)

    __rmul__ = __mul__

    def scale_arg(self, a: complex) -> "RationalMatrix":
        return RationalMatrix(self.num.scale_arg(a), self.den.scale_arg(a))

    def shift_q(self, s: float, q: complex) -> "RationalMatrix":
        return RationalMatrix(self.num.shift_q(s, q), self.den.shift_q(s, q))

    def eval(self, u0: complex) -> np.ndarray:
        return self.num.eval(u0) / self.den.eval(u0)

    def derivative_u(self) -> "RationalMatrix":
        num = self.num.derivative_u() * self.den - self.num * self.den.derivative_u()
        return RationalMatrix(num, self.den * self.den)

    def derivatives_at(self, u0: complex, order: int) -> list:
        """[R(u0), R'(u0), ...] via the product-rule recurrence on num = R den."""
        return _derivatives_at(self.num, self.den, u0, order)

    def trace(self) -> RationalScalar:
        return RationalScalar(self.num.trace(), self.den)

    def partial_trace_last(self, d: int) -> "RationalMatrix":
        return RationalMatrix(self.num.partial_trace_last(d), self.den)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.num.transpose(), self.den)

    def residual(self, other: "RationalMatrix") -> float:
        """Cross-multiplied Frobenius residual, relative."""
        other = _as_rational(other)
        a = self.num * other.den
        b = other.num * self.den
        scale = max(a.frobenius(), b.frobenius(), 1.0)
        return (a - b).frobenius() / scale

    def approx_eq(self, other, tol: float = MATRIX_TOL) -> bool:
        return self.residual(other) <= tol

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols})"


def _as_rational(x) -> RationalMatrix:
    if isinstance(x, RationalMatrix):
        return x
    if isinstance(x, PolyMatrix):
        return RationalMatrix(x)
    raise TypeError(f"cannot treat {type(x)} as RationalMatrix")


def _binom(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def _derivatives_at(num, den: LaurentPoly, u0: complex, order: int):
    """Shared implementation of the derivative recurrence for num/den.

    d^m num = sum_k C(m,k) R^(k) den^(m-k), solved for R^(m).
    """
    num_d = [num]
    den_d = [den]
    for _ in range(order):
        num_d.append(num_d[-1].derivative_u())
        den_d.append(den_d[-1].derivative_u())
    nvals = [p.eval(u0) for p in num_d]
    dvals = [p.eval(u0) for p in den_d]
    if abs(dvals[0]) == 0:
        raise ZeroDivisionError("denominator vanishes at the evaluation point")
    out = []
    for m in range(order + 1):
        acc = nvals[m]
        for k in range(m):
            acc = acc - _binom(m, k) * out[k] * dvals[m - k]
        out.append(acc / dvals[0])
    return out


def dump_json(obj, path):
    payload = obj.to_json() if hasattr(obj, "to_json") else obj
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
