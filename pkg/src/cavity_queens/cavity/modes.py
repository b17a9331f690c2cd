"""Pump modes, frequency combs and the cavity-mediated interaction function.

Positions are measured in lattice spacings ``a`` and wave numbers in units of
the lattice wave number ``k_L = pi / a``, so a plane wave contributes the
phase ``exp(i pi k.r)``. Site ``(i, j)`` sits at ``(i - 1, j - 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

DIRECTIONS = ("x", "plus", "minus")


class InsufficientModes(UserWarning):
    pass


class ModeSetError(ValueError):
    """Malformed or inconsistent mode set; ``field`` points at the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class PumpMode:
    """One pump beam and the cavity mode it scatters into.

    ``detuning`` and ``kappa`` are the effective cavity detuning and the field
    decay rate, both in units of J/hbar. ``kappa = 0`` is the lossless limit.
    """

    direction: str
    k0: float
    f: float
    detuning: float = 100.0
    kappa: float = 0.0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ModeSetError(f"unknown direction {self.direction!r}", "direction")
        if self.f < 0:
            raise ModeSetError("relative strength must be non-negative", "f")
        if self.detuning <= 0:
            raise ModeSetError("effective detuning must be positive (repulsive interaction)",
                               "detuning")
        if self.kappa < 0:
            raise ModeSetError("decay rate must be non-negative", "kappa")

    @property
    def wavevector(self) -> tuple[float, float]:
        ky = {"x": 0.0, "plus": self.k0, "minus": -self.k0}[self.direction]
        return (self.k0, ky)

    @property
    def k_abs(self) -> float:
        return self.k0 if self.direction == "x" else math.sqrt(2.0) * self.k0

    @property
    def kx(self) -> float:
        return self.k0

    @property
    def detuning_over_kappa(self) -> float:
        return math.inf if self.kappa == 0 else self.detuning / self.kappa

    def field_at(self, x, y):
        """Running-wave mode function ``exp(i k.r)`` at positions in units of ``a``."""
        kx, ky = self.wavevector
        return np.exp(1j * np.pi * (kx * np.asarray(x) + ky * np.asarray(y)))

    def eta(self, u_q: float) -> float:
        """Pump amplitude that yields ``f * u_q`` for this detuning and loss."""
        return math.sqrt(self.f * u_q * (self.detuning**2 + self.kappa**2) / self.detuning)


def comb_wavenumbers(m_per_direction: int) -> np.ndarray:
    m = np.arange(m_per_direction)
    return 1.0 + (2 * m + 1) / (2.0 * m_per_direction)


def spurious_displacements(n: int, m_per_direction: int) -> dict[str, list[tuple[int, int]]]:
    """Board displacement vectors where a comb with ``M`` modes recurs.

    The comb interaction recurs at a projected distance of ``2M`` sites, so
    any in-board displacement whose projection reaches ``2M`` picks up a
    spurious non-zero interaction.
    """
    out: dict[str, list[tuple[int, int]]] = {d: [] for d in DIRECTIONS}
    period = 2 * m_per_direction
    for di in range(-(n - 1), n):
        for dj in range(-(n - 1), n):
            if abs(di) >= period:
                out["x"].append((di, dj))
            if abs(di + dj) >= period:
                out["plus"].append((di, dj))
            if abs(di - dj) >= period:
                out["minus"].append((di, dj))
    return out


def standard_comb(n: int, m_per_direction: int | None = None, *, detuning: float = 100.0,
                  kappa: float = 0.0) -> list[PumpMode]:
    """Uniform comb ``k_m = 1 + (2m+1)/(2M)`` (units k_L) along x and both diagonals."""
    m_dir = n if m_per_direction is None else int(m_per_direction)
    if m_dir < 1:
        raise ValueError("need at least one mode per direction")
    if m_dir < n or 2 * m_dir < 2 * n - 1:
        bad = spurious_displacements(n, m_dir)
        listing = "; ".join(f"{d}: {v}" for d, v in bad.items() if v) or "none"
        warnings.warn(
            f"M={m_dir} modes per direction for N={n}: need M >= N and 2M >= 2N-1. "
            f"Displacements with spurious interaction: {listing}",
            InsufficientModes,
            stacklevel=2,
        )
    ks = comb_wavenumbers(m_dir)
    f = 1.0 / m_dir
    return [PumpMode(d, float(k), f, detuning, kappa) for d in DIRECTIONS for k in ks]


def with_loss(modes, detuning_over_kappa: float) -> list[PumpMode]:
    """Same modes with ``kappa = detuning / ratio`` (``inf`` gives the lossless set)."""
    if math.isinf(detuning_over_kappa):
        return [replace(m, kappa=0.0) for m in modes]
    return [replace(m, kappa=m.detuning / detuning_over_kappa) for m in modes]


def modes_by_direction(modes) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {d: [] for d in DIRECTIONS}
    for idx, m in enumerate(modes):
        out[m.direction].append(idx)
    return out


def validate_mode_set(modes, *, atol: float = 1e-9) -> None:
    if not modes:
        raise ModeSetError("mode set is empty", "mode")
    for d, idx in modes_by_direction(modes).items():
        if not idx:
            continue
        total = sum(modes[i].f for i in idx)
        if abs(total - 1.0) > atol:
            raise ModeSetError(f"strengths along '{d}' sum to {total:.12g}, expected 1",
                               f"mode[{idx[0]}..{idx[-1]}].f")


def interaction_function(modes, r) -> float:
    """``sum_m f_m cos(k_m . r)`` with ``r`` a displacement in lattice units.

    ``r`` may be a pair ``(rx, ry)`` or an array of shape ``(..., 2)``.
    """
    r = np.asarray(r, dtype=float)
    total = np.zeros(r.shape[:-1])
    for m in modes:
        kx, ky = m.wavevector
        total = total + m.f * np.cos(np.pi * (kx * r[..., 0] + ky * r[..., 1]))
    return float(total) if total.ndim == 0 else total


def interaction_closed_form(r: float, m_per_direction: int, l_max: int = 50) -> float:
    """Rectangle-envelope comb along its propagation axis, as a sum of shifted peaks.

    ``sum_l (-1)^l sinc(k_L (r - l R) / 2) cos(k_c (r - l R))`` with peak
    spacing ``R = 2M`` sites and centre wave number ``k_c = 3 k_L / 2``;
    truncated at ``|l| <= l_max``.
    """
    k_l = np.pi
    period = 2.0 * m_per_direction
    ls = np.arange(-l_max, l_max + 1)
    shifted = r - ls * period
    # numpy sinc is sin(pi x)/(pi x)
    peaks = np.sinc(k_l * shifted / 2.0 / np.pi) * np.cos(1.5 * k_l * shifted)
    return float(np.sum(np.where(ls % 2 == 0, 1.0, -1.0) * peaks))


def interaction_matrix_deep_lattice(modes, n: int) -> np.ndarray:
    """``A~[i-1, j-1, k-1, l-1] = A~(x_ij - x_kl)`` summed over every mode."""
    idx = np.arange(n)
    i, j, k, l = np.meshgrid(idx, idx, idx, idx, indexing="ij")
    disp = np.stack([i - k, j - l], axis=-1).astype(float)
    return interaction_function(modes, disp)


def interaction_map(modes, centre=(1.0, 1.0), extent: float = 5.0, points: int = 101):
    """``A~(r - centre)`` on a square grid, for plotting the penalty of one atom."""
    axis = np.linspace(-0.5, extent - 0.5, points)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    disp = np.stack([xx - centre[0], yy - centre[1]], axis=-1)
    return axis, interaction_function(modes, disp)


def read_mode_set(path) -> list[PumpMode]:
    from .._toml import load_toml

    data = load_toml(path)
    detuning = float(data.get("detuning", 100.0))
    raw = data.get("mode")
    if not raw:
        raise ModeSetError("no [[mode]] entries", "mode")
    modes = []
    for idx, entry in enumerate(raw):
        where = f"mode[{idx}]"
        try:
            ratio = float(entry.get("detuning_over_kappa", math.inf))
            kappa = 0.0 if math.isinf(ratio) else detuning / ratio
            modes.append(PumpMode(entry["direction"], float(entry["k0"]), float(entry["f"]),
                                  float(entry.get("detuning", detuning)), kappa))
        except KeyError as exc:
            raise ModeSetError(f"missing key {exc.args[0]!r}", where) from None
        except ModeSetError as exc:
            raise ModeSetError(str(exc), f"{where}.{exc.field}") from None
    validate_mode_set(modes)
    return modes


def write_mode_set(path, modes) -> None:
    detuning = modes[0].detuning
    lines = [f"detuning = {detuning!r}", ""]
    for m in modes:
        ratio = m.detuning_over_kappa
        lines += [
            "[[mode]]",
            f'direction = "{m.direction}"',
            f"k0 = {m.k0!r}",
            f"f = {m.f!r}",
            f"detuning_over_kappa = {'inf' if math.isinf(ratio) else repr(ratio)}",
        ]
        if m.detuning != detuning:
            lines.append(f"detuning = {m.detuning!r}")
        lines.append("")
    Path(path).write_text("\n".join(lines))
