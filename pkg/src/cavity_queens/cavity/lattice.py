"""Band structure and lowest-band Wannier function of a 1D cosine lattice.

Internally the coordinate is ``x~ = k_L x`` and energies are in recoil units
``E_R``, so the single-particle Hamiltonian reads ``-d^2/dx~^2 + V cos^2(x~)``.
The lattice period is ``pi`` in these units and wells sit at ``x~ = pi/2 + l pi``.
Quasimomenta ``q`` and reciprocal vectors are in units of ``k_L``; Bloch
plane waves are ``exp(i (q + 2G) x~)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

MIN_CUTOFF = 15
SITE_CENTRE = math.pi / 2


class ConvergenceError(RuntimeError):
    pass


class WannierPhaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatticeParams:
    """Lattice depths in units of ``E_R``; ``v_y=None`` means frozen motion along y."""

    v_x: float
    v_y: float | None = None
    k_lattice: float = math.pi
    recoil_energy_hz: float | None = None

    def __post_init__(self):
        if not self.v_x > 0:
            raise ValueError(f"v_x must be positive, got {self.v_x}")
        if self.v_y is not None and self.v_y < 10 * self.v_x:
            warnings.warn(
                f"v_y={self.v_y} is not much deeper than v_x={self.v_x}; "
                "tunneling along y is not frozen out",
                RuntimeWarning,
                stacklevel=2,
            )


@dataclass
class BandStructure:
    v: float
    quasimomenta: np.ndarray  # (nq,), in [-1, 1)
    reciprocal: np.ndarray  # (nG,), integers G
    energies: np.ndarray  # (nq, n_bands)
    coefficients: np.ndarray  # (nq, nG, n_bands)

    @property
    def tunneling(self) -> float:
        """Nearest-neighbour tunneling ``J = (max - min) / 4`` of the lowest band."""
        band = self.energies[:, 0]
        return float((band.max() - band.min()) / 4.0)

    @property
    def band_gap(self) -> float:
        if self.energies.shape[1] < 2:
            raise ValueError("need at least two bands for a gap")
        return float(self.energies[:, 1].min() - self.energies[:, 0].max())


def _bands(v, nq, cutoff, n_bands):
    gs = np.arange(-cutoff, cutoff + 1)
    qs = -1.0 + 2.0 * np.arange(nq) / nq
    off = np.full(gs.size - 1, v / 4.0)
    energies = np.empty((nq, n_bands))
    coeffs = np.empty((nq, gs.size, n_bands))
    for a, q in enumerate(qs):
        diag = (q + 2 * gs) ** 2 + v / 2.0
        w, vec = la.eigh_tridiagonal(diag, off, select="i", select_range=(0, n_bands - 1))
        energies[a] = w
        coeffs[a] = vec
    return qs, gs, energies, coeffs


def band_structure_1d(lattice: LatticeParams | float, n_bands: int = 2,
                      n_quasimomenta: int = 64, *, cutoff: int = 20,
                      check_convergence: bool = True) -> BandStructure:
    """Plane-wave diagonalisation of ``-d^2 + V cos^2`` for each quasimomentum.

    ``cutoff`` is the largest ``|G|`` kept. With ``check_convergence`` the
    tunneling amplitude is recomputed with ``cutoff + 5`` and a change above
    ``1e-6 E_R`` raises :class:`ConvergenceError`.
    """
    v = lattice.v_x if isinstance(lattice, LatticeParams) else float(lattice)
    if v < 0:
        raise ValueError("lattice depth must be non-negative")
    if cutoff < MIN_CUTOFF:
        raise ValueError(f"plane-wave cutoff must be at least {MIN_CUTOFF}, got {cutoff}")
    if n_quasimomenta < 2 or n_quasimomenta % 2:
        raise ValueError("n_quasimomenta must be an even number >= 2")
    qs, gs, energies, coeffs = _bands(v, n_quasimomenta, cutoff, n_bands)
    bands = BandStructure(v, qs, gs, energies, coeffs)
    if check_convergence:
        _, _, e2, _ = _bands(v, n_quasimomenta, cutoff + 5, 1)
        j2 = (e2[:, 0].max() - e2[:, 0].min()) / 4.0
        if abs(j2 - bands.tunneling) > 1e-6:
            raise ConvergenceError(
                f"J changed by {abs(j2 - bands.tunneling):.3g} E_R when raising the "
                f"cutoff from {cutoff} to {cutoff + 5}"
            )
    return bands


@dataclass
class WannierData:
    """Real lowest-band Wannier function sampled around its own site.

    ``s`` is the offset from the site centre in units of ``1/k_L`` (one lattice
    spacing is ``pi``); the grid holds an integer number of points per site,
    so shifts by half a site are exact index shifts.
    """

    v_x: float
    s: np.ndarray
    w: np.ndarray
    d2w: np.ndarray
    tunneling: float
    points_per_site: int
    half_width_sites: int
    meta: dict = field(default_factory=dict)

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])

    def norm(self) -> float:
        return float(np.sum(self.w**2) * self.ds)

    def rms_width(self) -> float:
        """``sqrt(2 <s^2>)``, which equals the oscillator length for a Gaussian ground state."""
        return float(np.sqrt(2.0 * np.sum(self.s**2 * self.w**2) * self.ds))

    def _shift(self, arr, sites_half):
        """``arr(s + sites_half * pi/2)`` with zero padding."""
        step = sites_half * self.points_per_site // 2
        out = np.zeros_like(arr)
        if step > 0:
            out[:-step] = arr[step:]
        elif step < 0:
            out[-step:] = arr[:step]
        else:
            out[:] = arr
        return out

    def form_factor_v(self, k) -> np.ndarray:
        """``int w(s)^2 exp(i k s) ds``; real because ``w`` is even."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        dens = self.w**2
        vals = np.cos(np.outer(k, self.s)) @ dens * self.ds
        return vals if vals.size > 1 else vals[0]

    def form_factor_u(self, k) -> np.ndarray:
        """``int w(s + pi/2) w(s - pi/2) exp(i k s) ds`` about the bond midpoint."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        prod = self._shift(self.w, 1) * self._shift(self.w, -1)
        vals = np.cos(np.outer(k, self.s)) @ prod * self.ds
        return vals if vals.size > 1 else vals[0]

    def hopping_integral(self) -> float:
        """``<w_0| -d^2 + V cos^2 |w_1>``; should equal ``-J``."""
        w1 = self._shift(self.w, 2)
        d2w1 = self._shift(self.d2w, 2)
        pot = self.v_x * np.cos(self.s + SITE_CENTRE) ** 2
        return float(np.sum(self.w * (-d2w1 + pot * w1)) * self.ds)


def _wannier_on_grid(bands: BandStructure, s: np.ndarray):
    x = SITE_CENTRE + s
    nq = bands.quasimomenta.size
    w = np.zeros(s.size, dtype=np.complex128)
    d2w = np.zeros(s.size, dtype=np.complex128)
    for q, c in zip(bands.quasimomenta, bands.coefficients[:, :, 0]):
        kk = q + 2.0 * bands.reciprocal
        centre = np.dot(np.exp(1j * kk * SITE_CENTRE), c)
        if abs(centre) < 1e-8 * np.abs(c).sum():
            raise WannierPhaseError(f"Bloch function at q={q:.4f} vanishes at the site centre")
        phase = np.conj(centre) / abs(centre)
        waves = np.exp(1j * np.outer(x, kk))
        w += phase * (waves @ c)
        d2w += phase * (waves @ (-(kk**2) * c))
    return w / nq, d2w / nq


def wannier_1d(bands: BandStructure, *, half_width_sites: int = 5, points_per_site: int = 64,
               check_resolution: bool = True, tol: float = 1e-8) -> WannierData:
    """Lowest-band Wannier function from the Bloch sum with real-positive centre phase.

    The support is truncated to ``half_width_sites`` lattice sites on each
    side. With ``check_resolution`` the on-site and bond form factors are
    recomputed on a grid widened by one site and the difference must stay
    below ``tol``.
    """
    if points_per_site % 2:
        raise ValueError("points_per_site must be even")

    def build(width):
        npts = 2 * width * points_per_site + 1
        s = np.linspace(-width * math.pi, width * math.pi, npts)
        w, d2w = _wannier_on_grid(bands, s)
        imag = np.abs(w.imag).max() / np.abs(w).max()
        w, d2w = w.real, d2w.real
        scale = 1.0 / math.sqrt(np.sum(w**2) * (s[1] - s[0]))
        return WannierData(bands.v, s, w * scale, d2w * scale, bands.tunneling,
                           points_per_site, width, {"imag_residual": float(imag)})

    data = build(half_width_sites)
    if check_resolution:
        wide = build(half_width_sites + 1)
        probe = np.array([0.0, 1.0, 1.5, 2.0, 2.0 * math.sqrt(2.0)])
        dv = np.max(np.abs(data.form_factor_v(probe) - wide.form_factor_v(probe)))
        du = np.max(np.abs(data.form_factor_u(probe) - wide.form_factor_u(probe)))
        data.meta["resolution_change"] = float(max(dv, du))
        if max(dv, du) > tol:
            raise ConvergenceError(
                f"form factors moved by {max(dv, du):.3g} when widening the Wannier grid"
            )
    return data


def harmonic_length(v: float) -> float:
    """Oscillator length ``a0 = (E_R / V)^(1/4)`` in units of ``1/k_L``."""
    return float(v) ** -0.25
