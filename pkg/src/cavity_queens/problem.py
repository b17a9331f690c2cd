"""N-queens instances, their classical energy tables and a brute-force oracle.

Sites are addressed as ``(i, j)`` with ``i`` the column and ``j`` the row,
both 1-based. Sum diagonals are indexed by ``i + j - 1`` and difference
diagonals by ``i - j + N``; both indices run over ``1 .. 2N - 1``.
Arrays returned from this module use 0-based storage, so ``A[i-1, j-1, k-1, l-1]``
holds the entry for sites ``(i, j)`` and ``(k, l)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from numbers import Real

import numpy as np

from . import _kernels

MAX_ORACLE_N = 8
_ORACLE_CHUNK = 1 << 20


class BoardTooLarge(ValueError):
    """Raised when exhaustive enumeration is requested for N above the guard."""


class InvalidInstance(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    """One queen per row: ``columns[j-1]`` is the column of the queen in row ``j``."""

    columns: tuple[int, ...]

    def __post_init__(self):
        cols = tuple(int(c) for c in self.columns)
        n = len(cols)
        if n == 0:
            raise ValueError("configuration needs at least one row")
        if any(c < 1 or c > n for c in cols):
            raise ValueError(f"columns must lie in 1..{n}, got {cols}")
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return len(self.columns)

    def sites(self) -> list[tuple[int, int]]:
        return [(c, j + 1) for j, c in enumerate(self.columns)]

    def occupation(self) -> np.ndarray:
        """0/1 table ``occ[i-1, j-1]``."""
        occ = np.zeros((self.n, self.n), dtype=np.int64)
        for j, c in enumerate(self.columns):
            occ[c - 1, j] = 1
        return occ

    def __iter__(self):
        return iter(self.columns)

    def __lt__(self, other: Configuration) -> bool:
        return self.columns < other.columns


def _as_config(c) -> Configuration:
    return c if isinstance(c, Configuration) else Configuration(tuple(c))


@dataclass(frozen=True)
class Instance:
    """An excluded-diagonals / completion N-queens instance.

    Energy scales ``u_q``, ``u_d`` and ``u_t`` are final sweep values in units of
    the tunneling amplitude J. They may be floats, ints or ``Fraction``.
    """

    n: int
    excluded_plus: frozenset[int] = field(default_factory=frozenset)
    excluded_minus: frozenset[int] = field(default_factory=frozenset)
    pinned: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    u_q: Real = 1.0
    u_d: Real = 0.0
    u_t: Real = 0.0

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise InvalidInstance(f"board size must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        plus = frozenset(int(d) for d in self.excluded_plus)
        minus = frozenset(int(d) for d in self.excluded_minus)
        pins = frozenset((int(i), int(j)) for i, j in self.pinned)
        for name, diags in (("excluded_plus", plus), ("excluded_minus", minus)):
            bad = sorted(d for d in diags if not 1 <= d <= 2 * n - 1)
            if bad:
                raise InvalidInstance(f"{name}: indices {bad} outside 1..{2 * n - 1}")
        for i, j in sorted(pins):
            if not (1 <= i <= n and 1 <= j <= n):
                raise InvalidInstance(f"pinned site {(i, j)} is off the board")
            if i + j - 1 in plus or i - j + n in minus:
                raise InvalidInstance(f"pinned site {(i, j)} lies on an excluded diagonal")
        for name in ("u_q", "u_d", "u_t"):
            if getattr(self, name) < 0:
                raise InvalidInstance(f"{name} must be non-negative")
        object.__setattr__(self, "excluded_plus", plus)
        object.__setattr__(self, "excluded_minus", minus)
        object.__setattr__(self, "pinned", pins)

    def with_energies(self, *, u_q=None, u_d=None, u_t=None) -> Instance:
        return Instance(
            self.n,
            self.excluded_plus,
            self.excluded_minus,
            self.pinned,
            self.u_q if u_q is None else u_q,
            self.u_d if u_d is None else u_d,
            self.u_t if u_t is None else u_t,
        )


def paper_instance(*, pinned: bool = True) -> Instance:
    """The N=5 example with D+ = {2,3,6,9}, D- = {1,2,8,9} and pin (3,5)."""
    return Instance(
        n=5,
        excluded_plus=frozenset({2, 3, 6, 9}),
        excluded_minus=frozenset({1, 2, 8, 9}),
        pinned=frozenset({(3, 5)}) if pinned else frozenset(),
        u_q=1.0,
        u_d=5.0,
        u_t=2.0,
    )


def interaction_matrix(n: int) -> np.ndarray:
    """Queens interaction table with entries 3 (same site), 1 (attacking) or 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    i, j, k, l = np.meshgrid(*(np.arange(1, n + 1),) * 4, indexing="ij")
    attack = (i == k) | (i + j == k + l) | (i - j == k - l)
    a = attack.astype(np.int64)
    a[(i == k) & (j == l)] = 3
    return a


def diagonal_penalty(inst: Instance) -> np.ndarray:
    n = inst.n
    i, j = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
    on_plus = np.isin(i + j - 1, list(inst.excluded_plus))
    on_minus = np.isin(i - j + n, list(inst.excluded_minus))
    return on_plus.astype(np.int64) + on_minus.astype(np.int64)


def pin_bonus(inst: Instance) -> np.ndarray:
    t = np.zeros((inst.n, inst.n), dtype=np.int64)
    for i, j in inst.pinned:
        t[i - 1, j - 1] = 1
    return t


def count_attacking_pairs(c) -> int:
    cols = _as_config(c).columns
    count = 0
    for (ja, ca), (jb, cb) in combinations(enumerate(cols, start=1), 2):
        if ca == cb or ca + ja == cb + jb or ca - ja == cb - jb:
            count += 1
    return count


def energy_features(inst: Instance, c) -> tuple[int, int, int]:
    """Integer features ``(attacking pairs, diagonal penalty, pins hit)`` of ``c``."""
    c = _as_config(c)
    if c.n != inst.n:
        raise ValueError(f"configuration has {c.n} rows, instance has {inst.n}")
    d = diagonal_penalty(inst)
    t = pin_bonus(inst)
    dsum = sum(int(d[i - 1, j - 1]) for i, j in c.sites())
    tsum = sum(int(t[i - 1, j - 1]) for i, j in c.sites())
    return count_attacking_pairs(c), dsum, tsum


def energy_from_features(inst: Instance, pairs, dsum, tsum):
    """Classical energy in units of J; works elementwise on arrays too."""
    return inst.u_q * (3 * inst.n + 2 * pairs) + inst.u_d * dsum - inst.u_t * tsum


def classical_energy(inst: Instance, c):
    """Problem energy of a classical configuration, on-site constant ``3 U_Q N`` included."""
    return energy_from_features(inst, *energy_features(inst, c))


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def brute_force_solve(inst: Instance, *, use_numba: bool | None = None) -> list[Configuration]:
    """All global minima of the classical energy, sorted lexicographically.

    Enumerates the full N^N configuration space. Energies are compared
    exactly: the energy is linear in three integer features, so the minimum
    is located with rational arithmetic over the distinct feature triples.
    """
    n = inst.n
    if n > MAX_ORACLE_N:
        raise BoardTooLarge(f"N={n} exceeds the enumeration guard N <= {MAX_ORACLE_N}")
    dim = n**n
    dtab = diagonal_penalty(inst)
    ttab = pin_bonus(inst)
    uq, ud, ut = (_exact(inst.u_q), _exact(inst.u_d), _exact(inst.u_t))

    best = None
    winners: list[np.ndarray] = []
    for start in range(0, dim, _ORACLE_CHUNK):
        stop = min(dim, start + _ORACLE_CHUNK)
        pairs, dsum, tsum = _kernels.config_features(n, start, stop, dtab, ttab,
                                                     use_numba=use_numba)
        triples = np.unique(np.stack([pairs, dsum, tsum], axis=1), axis=0)
        energies = [uq * (3 * n + 2 * int(p)) + ud * int(d) - ut * int(t)
                    for p, d, t in triples]
        emin = min(energies)
        if best is not None and emin > best:
            continue
        if best is None or emin < best:
            best = emin
            winners = []
        mask = np.zeros(stop - start, dtype=bool)
        for (p, d, t), e in zip(triples, energies):
            if e == best:
                mask |= (pairs == p) & (dsum == d) & (tsum == t)
        winners.append(np.flatnonzero(mask) + start)

    codes = np.concatenate(winners)
    sols = [Configuration(tuple(int(x) + 1 for x in decode_index(n, code))) for code in codes]
    return sorted(sols, key=lambda c: c.columns)


def decode_index(n: int, code: int) -> list[int]:
    """0-based column digits of a basis index, row 1 least significant."""
    digits = []
    for _ in range(n):
        digits.append(int(code % n))
        code //= n
    return digits
