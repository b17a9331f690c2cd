"""Randomised invariants checked with hypothesis."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_queens.cavity import (
    CavitySystem,
    interaction_function,
    smoothing_correction,
    standard_comb,
)
from cavity_queens.cavity.overlaps import gaussian_smoothing
from cavity_queens.hilbert import RestrictedBasis, line_counts
from cavity_queens.problem import Instance, classical_energy, count_attacking_pairs
from cavity_queens.readout import (
    Decision,
    classical_check,
    decide_solution,
    photon_flux,
    quadratures,
    reconstruct_line_occupations,
)

FAST = settings(max_examples=60, deadline=None)


def configs(n):
    return st.tuples(*[st.integers(1, n)] * n)


@st.composite
def instances(draw, n=4):
    plus = draw(st.sets(st.integers(1, 2 * n - 1), max_size=3))
    minus = draw(st.sets(st.integers(1, 2 * n - 1), max_size=3))
    free = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)
            if i + j - 1 not in plus and i - j + n not in minus]
    pins = draw(st.sets(st.sampled_from(free), max_size=2)) if free else set()
    u_q, u_d, u_t = (draw(st.floats(0, 5, allow_nan=False)) for _ in range(3))
    return Instance(n, frozenset(plus), frozenset(minus), frozenset(pins), u_q, u_d, u_t)


@pytest.fixture(scope="module")
def readout5():
    return CavitySystem.build(Instance(5), standard_comb(5, 9), depth=None)


@FAST
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), configs(n))))
def test_encode_decode(args):
    n, cols = args
    b = RestrictedBasis(n)
    assert b.decode(b.encode(cols)).columns == cols


@FAST
@given(instances(), configs(4))
def test_energy_decomposition(inst, cols):
    n = inst.n
    d = sum((i + j - 1 in inst.excluded_plus) + (i - j + n in inst.excluded_minus)
            for j, i in enumerate(cols, start=1))
    t = sum((i, j) in inst.pinned for j, i in enumerate(cols, start=1))
    want = inst.u_q * (3 * n + 2 * count_attacking_pairs(cols)) + inst.u_d * d - inst.u_t * t
    assert float(classical_energy(inst, cols)) == pytest.approx(want, abs=1e-9)


@FAST
@given(configs(5))
def test_attacking_pairs_from_line_counts(cols):
    lc = line_counts(cols)
    from_lines = sum(int(k) * (int(k) - 1) // 2
                     for k in np.concatenate([lc.columns, lc.plus, lc.minus]))
    assert from_lines == count_attacking_pairs(cols)


@FAST
@given(st.integers(2, 8), st.integers(-40, 40))
def test_comb_identity_on_lattice(m, j):
    modes = [p for p in standard_comb(m, m) if p.direction == "x"]
    value = interaction_function(modes, (float(j), 0.0))
    period = 2 * m
    want = (-1.0) ** (j // period) if j % period == 0 else 0.0
    assert value == pytest.approx(want, abs=1e-12)


@FAST
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_interaction_even_and_bounded(rx, ry):
    modes = standard_comb(5, 5)
    a = interaction_function(modes, (rx, ry))
    assert a == pytest.approx(interaction_function(modes, (-rx, -ry)), abs=1e-12)
    assert abs(a) <= 3.0 + 1e-12


@FAST
@given(st.floats(2.0, 500.0), st.integers(2, 9))
def test_smoothing_keeps_on_site_target(depth, m):
    modes = standard_comb(m, m)
    fixed = smoothing_correction(modes, depth)
    g = gaussian_smoothing([p.kx for p in modes], depth)
    for d in ("x", "plus", "minus"):
        idx = [k for k, p in enumerate(modes) if p.direction == d]
        assert sum(fixed[k].f * g[k] ** 2 for k in idx) == pytest.approx(1.0)
        assert all(fixed[k].f > 0 for k in idx)


@settings(max_examples=40, deadline=None)
@given(configs(5))
def test_flux_law(deep_system, cols):
    psi = deep_system.basis.basis_vector(cols)
    flux = photon_flux(psi, deep_system.modes, deep_system.thetas, 1.0).total
    assert flux == pytest.approx(15 + 2 * count_attacking_pairs(cols), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(configs(5))
def test_decision_matches_classical(readout5, cols):
    psi = readout5.basis.basis_vector(cols)
    rec = quadratures(psi, readout5.modes, readout5.thetas, 1.0)
    occ = reconstruct_line_occupations(rec, readout5.modes, readout5.tables)
    assert (decide_solution(occ) is Decision.SOLUTION) == classical_check(cols)
