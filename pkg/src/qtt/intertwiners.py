"""Fusion intertwiners between a spin-1/2 factor and a neighbouring spin.

For a given twoj = 2j this module builds the inclusion E (C^(2j+1) into
C^2 (x) C^(2j)), its pseudo-inverse F with F E = 1, the diagonal H appearing
in the decomposition of the half-spin R-matrix at its degeneration point, and
the barred triple (Ebar, Fbar, Hbar) mapping C^(2j) into C^2 (x) C^(2j+1).

Basis order of a tensor factor C^2 (x) C^d is the usual Kronecker order with
spin-up first; within each spin space the magnetic index decreases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .repspace import _b_coeff, qnum


@dataclass(frozen=True)
class FusionMaps:
    """E/F/H for a target spin j plus the barred maps labelled j - 1/2."""

    twoj: int
    E: np.ndarray      # (4j) x (2j+1)
    F: np.ndarray      # (2j+1) x (4j)
    H: np.ndarray      # (2j+1) x (2j+1) diagonal
    Ebar: np.ndarray   # (4j+2) x (2j)
    Fbar: np.ndarray   # (2j) x (4j+2)
    Hbar: np.ndarray   # (2j) x (2j) diagonal

    @property
    def h1(self) -> complex:
        return self.H[0, 0]

    @property
    def fbar12_hbar1(self) -> complex:
        return self.Fbar[0, 1] * self.Hbar[0, 0]


def _c(x: complex) -> complex:
    return x - 1.0 / x


@lru_cache(maxsize=None)
def build_fusion_maps(twoj: int, q: complex) -> FusionMaps:
    if twoj < 1:
        raise ValueError("fusion maps need twoj >= 1")
    dim = twoj + 1

    # E: diagonal ladder plus the shifted column picked out by [m]_q.
    E = np.zeros((2 * twoj, dim), dtype=complex)
    E[0, 0] = 1.0
    for n in range(1, twoj):
        prod = 1.0 + 0j
        for p in range(n):
            # B_{j-1/2, j-p-1/2} / B_{j, j-p}
            prod *= _b_coeff(twoj - 1, twoj - 2 * p - 1, q) / _b_coeff(twoj, twoj - 2 * p, q)
        E[n, n] = prod
    for m in range(1, twoj + 1):
        diag = E[m - 1, m - 1]
        E[twoj + m - 1, m] = qnum(m, q) * diag / _b_coeff(twoj, twoj + 2 - 2 * m, q)

    F = np.zeros((dim, 2 * twoj), dtype=complex)
    F[0, 0] = 1.0
    F[twoj, 2 * twoj - 1] = 1.0 / E[2 * twoj - 1, twoj]
    for n in range(2, twoj + 1):
        low = E[n + twoj - 2, n - 1]        # E_{n+2j-1, n}
        dia = E[n - 1, n - 1]
        F[n - 1, n + twoj - 2] = low / (dia**2 + low**2)
        F[n - 1, n - 1] = (1.0 - F[n - 1, n + twoj - 2] * low) / dia

    H = np.zeros((dim, dim), dtype=complex)
    edge = np.prod([_c(q**k) for k in range(2, twoj + 1)]) if twoj >= 2 else 1.0
    H[0, 0] = H[twoj, twoj] = edge
    bulk = np.prod([_c(q**k) for k in range(1, twoj)]) if twoj >= 2 else 1.0
    for n in range(2, twoj + 1):
        b = _b_coeff(twoj - 1, 2 * n - twoj - 1, q)  # B_{j-1/2, -j-1/2+n}
        H[n - 1, n - 1] = b / (E[n - 1, n - 1] * F[n - 1, n + twoj - 2]) * bulk

    # Barred maps, labelled j - 1/2: C^(2j) -> C^2 (x) C^(2j+1).
    Eb = np.zeros((2 * twoj + 2, twoj), dtype=complex)
    Eb[1, 0] = 1.0
    for n in range(1, twoj):
        prod = 1.0 + 0j
        for p in range(n):
            # B_{j, j-p-1} / B_{j-1/2, j-1/2-p}
            prod *= _b_coeff(twoj, twoj - 2 * p - 2, q) / _b_coeff(twoj - 1, twoj - 2 * p - 1, q)
        Eb[n + 1, n] = prod
    for m in range(twoj):
        Eb[twoj + m + 1, m] = qnum(m - twoj, q) / _b_coeff(twoj, twoj - 2 * m, q) * Eb[m + 1, m]

    Fb = np.zeros((twoj, 2 * twoj + 2), dtype=complex)
    for n in range(1, twoj + 1):
        up = Eb[n, n - 1]                     # Ebar_{n+1, n}
        low = Eb[n + twoj, n - 1]             # Ebar_{n+2j+1, n}
        Fb[n - 1, n + twoj] = low / (up**2 + low**2)
        Fb[n - 1, n] = (1.0 - Fb[n - 1, n + twoj] * low) / up

    Hb = np.zeros((twoj, twoj), dtype=complex)
    pref = np.prod([_c(q ** (-k - 1)) for k in range(twoj - 1)]) if twoj >= 2 else 1.0
    for n in range(1, twoj + 1):
        b = _b_coeff(twoj, 2 * n - twoj, q)   # B_{j, -j+n}
        Hb[n - 1, n - 1] = pref * (q - 1.0 / q) * b / (Eb[n + twoj, n - 1] * Fb[n - 1, n])

    return FusionMaps(twoj, E, F, H, Eb, Fb, Hb)


def _res(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1.0)
    return float(np.linalg.norm(a - b) / scale)


def check_fusion_relations(twoj: int, q: complex, r_provider, tol: float = 1e-10) -> dict:
    """Verify the algebra satisfied by the maps at spin j.

    r_provider(twoj2, point) must return the numeric (1/2, j2) R-matrix at
    the given spectral point.  The report maps relation names to residuals.
    """
    m = build_fusion_maps(twoj, q)
    j = twoj / 2.0
    r_low = r_provider(twoj - 1, q**j)                 # R^(1/2, j-1/2)(q^j)
    r_high = r_provider(twoj, q ** (-j - 0.5))         # R^(1/2, j)(q^(-j-1/2))
    rep = {}
    rep["FE=1"] = _res(m.F @ m.E, np.eye(twoj + 1))
    rep["FbarEbar=1"] = _res(m.Fbar @ m.Ebar, np.eye(twoj))
    rep["decompR"] = _res(m.E @ m.H @ m.F, r_low)
    rep["decompRbar"] = _res(m.Ebar @ m.Hbar @ m.Fbar, r_high)
    rep["EH=RE"] = _res(m.E @ m.H, r_low @ m.E)
    rep["HF=FR"] = _res(m.H @ m.F, m.F @ r_low)
    rep["R=EFR"] = _res(r_low, m.E @ m.F @ r_low)
    rep["EbarHbar=REbar"] = _res(m.Ebar @ m.Hbar, r_high @ m.Ebar)
    rep["HbarFbar=FbarR"] = _res(m.Hbar @ m.Fbar, m.Fbar @ r_high)
    rep["R=EbarFbarR"] = _res(r_high, m.Ebar @ m.Fbar @ r_high)
    rep["H1*E=Ft*H"] = _res(m.h1 * m.E, m.F.T @ m.H)
    rep["Ft*F*R=H1*E*F"] = _res(m.F.T @ m.F @ r_low, m.h1 * (m.E @ m.F))
    rep["H1*E*Et=R"] = _res(m.h1 * (m.E @ m.E.T), r_low)
    rep["Fb12Hb1*Ebar=Fbt*Hbar"] = _res(m.fbar12_hbar1 * m.Ebar, m.Fbar.T @ m.Hbar)
    rep["Fb12Hb1*Eb*Ebt=Rbar"] = _res(m.fbar12_hbar1 * (m.Ebar @ m.Ebar.T), r_high)
    rep["Fbt*Fb*Rbar=Fb12Hb1*Eb*Fb"] = _res(
        m.Fbar.T @ m.Fbar @ r_high, m.fbar12_hbar1 * (m.Ebar @ m.Fbar))
    # Completeness on C^2 (x) C^(2j+1): needs the unbarred maps one spin up.
    up = build_fusion_maps(twoj + 1, q)
    rep["EbarFbar+EF=1"] = _res(
        m.Ebar @ m.Fbar + up.E @ up.F, np.eye(2 * twoj + 2))
    if twoj >= 2:
        # Closed form of the scalar prefactor; the barred label here is
        # j - 1/2 >= 1/2 (for label 0 only the full relations above apply).
        scalar = (q - 1.0 / q) ** 2 * np.prod([_c(q ** (-k)) for k in range(2, twoj)])
        rep["Fb12*Hb1 scalar"] = abs(m.fbar12_hbar1 - scalar) / max(abs(scalar), 1.0)
    rep["pass"] = all(v < tol for k, v in rep.items() if k != "pass")
    return rep
