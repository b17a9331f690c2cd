"""Atom-mode overlap tables ``v[m, i-1, j-1]`` (on-site) and ``u[m, i-1, j-1]`` (bond).

The bond entry ``u[m, i-1, j-1]`` belongs to the pair of sites ``(i, j)`` and
``(i+1, j)``; the last column ``i = N`` is always zero (open boundary).
Atoms are pinned in y, so a mode only contributes the plane-wave phase at the
row position, and the x-integral uses the x-component of its wave vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lattice import LatticeParams, WannierData
from .modes import PumpMode, modes_by_direction


@dataclass(frozen=True)
class OverlapTables:
    v: np.ndarray
    u: np.ndarray
    source: str

    @property
    def n_modes(self) -> int:
        return self.v.shape[0]

    @property
    def n(self) -> int:
        return self.v.shape[1]


def _site_phases(modes, n, x_offset=0.0) -> np.ndarray:
    x = np.arange(n) + x_offset
    y = np.arange(n)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return np.stack([m.field_at(xx, yy) for m in modes])


def _bond_mask(n):
    mask = np.ones((n, n))
    mask[n - 1, :] = 0.0
    return mask


def deep_lattice_overlaps(modes, n: int) -> OverlapTables:
    """Point-like atoms: ``v`` is the mode function at the site and ``u`` vanishes."""
    v = _site_phases(modes, n)
    return OverlapTables(v, np.zeros_like(v), "deep_lattice")


def overlaps(wannier: WannierData, modes, n: int) -> OverlapTables:
    """Numerical overlaps from the sampled Wannier function."""
    kx = np.array([m.kx for m in modes])
    fv = np.atleast_1d(wannier.form_factor_v(kx))
    fu = np.atleast_1d(wannier.form_factor_u(kx))
    v = _site_phases(modes, n) * fv[:, None, None]
    u = _site_phases(modes, n, 0.5) * fu[:, None, None] * _bond_mask(n)
    return OverlapTables(v, u, f"wannier(V={wannier.v_x:g})")


def gaussian_smoothing(k_x, v: float):
    """``exp(-(k_x / 2)^2 sqrt(E_R / V))`` with ``k_x`` in units of ``k_L``."""
    return np.exp(-((np.asarray(k_x) / 2.0) ** 2) / math.sqrt(v))


def bond_suppression(v: float) -> float:
    """Overlap of two neighbouring harmonic-oscillator ground states, ``exp(-(pi^2/4) sqrt(V/E_R))``."""
    return math.exp(-(math.pi**2 / 4.0) * math.sqrt(v))


def harmonic_overlaps(lattice: LatticeParams | float, modes, n: int) -> OverlapTables:
    """Closed-form overlaps for Gaussian wells of width ``(E_R/V)^(1/4)/k_L``."""
    v_depth = lattice.v_x if isinstance(lattice, LatticeParams) else float(lattice)
    g = gaussian_smoothing([m.kx for m in modes], v_depth)
    v = _site_phases(modes, n) * g[:, None, None]
    u = (_site_phases(modes, n, 0.5) * (g * bond_suppression(v_depth))[:, None, None]
         * _bond_mask(n))
    return OverlapTables(v, u, f"harmonic(V={v_depth:g})")


def smoothing_correction(modes, lattice: LatticeParams | float) -> list[PumpMode]:
    """Strengths ``f_m`` boosted by the inverse squared Gaussian smoothing factor.

    Within each direction the boosted strengths are rescaled so that the
    smoothed on-site interaction ``sum_m f~_m g_m^2`` keeps its uncorrected
    target ``sum_m f_m``. The factors depend only on the depth and on ``k_m``.
    """
    v_depth = lattice.v_x if isinstance(lattice, LatticeParams) else float(lattice)
    g = gaussian_smoothing([m.kx for m in modes], v_depth)
    boosted = np.array([m.f for m in modes]) / g**2
    out = list(modes)
    for idx in modes_by_direction(modes).values():
        if not idx:
            continue
        target = sum(modes[i].f for i in idx)
        achieved = sum(boosted[i] * g[i] ** 2 for i in idx)
        scale = target / achieved if achieved else 1.0
        for i in idx:
            out[i] = replace(modes[i], f=float(boosted[i] * scale))
    return out


def effective_interaction(modes, tables: OverlapTables) -> np.ndarray:
    """Density-density part ``sum_m f_m Re(v_m(a)* v_m(b))`` as a 4-index table.

    With deep-lattice tables this is the cosine interaction matrix; with
    finite-depth tables it shows how smoothing distorts it.
    """
    f = np.array([m.f for m in modes])
    v = tables.v
    return np.einsum("m,mij,mkl->ijkl", f, v.conj(), v).real
