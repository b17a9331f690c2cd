from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from cavity_queens import _kernels
from cavity_queens.hilbert import RestrictedBasis
from cavity_queens.model import build_h_kin
from cavity_queens.problem import count_attacking_pairs


@pytest.mark.parametrize("use_numba", [True, False])
def test_config_features_against_reference(use_numba, rng):
    n = 4
    b = RestrictedBasis(n)
    dtab = rng.integers(0, 3, size=(n, n))
    ttab = rng.integers(0, 2, size=(n, n))
    pairs, dsum, tsum = _kernels.config_features(n, 0, b.dim, dtab, ttab, use_numba=use_numba)
    for idx in rng.choice(b.dim, size=40, replace=False):
        cols = b.decode(int(idx)).columns
        assert pairs[idx] == count_attacking_pairs(cols)
        assert dsum[idx] == sum(dtab[c - 1, j] for j, c in enumerate(cols))
        assert tsum[idx] == sum(ttab[c - 1, j] for j, c in enumerate(cols))


def test_config_features_window(rng):
    dtab = rng.integers(0, 3, size=(5, 5))
    ttab = np.zeros((5, 5), dtype=int)
    full = _kernels.config_features(5, 0, 3125, dtab, ttab)
    part = _kernels.config_features(5, 1000, 1200, dtab, ttab)
    for a, b in zip(full, part):
        assert np.array_equal(a[1000:1200], b)


def test_matvec_paths_agree(rng):
    a = build_h_kin(RestrictedBasis(4)).matrix.astype(np.complex128).tocsr()
    d = rng.normal(size=a.shape[0])
    x = rng.normal(size=a.shape[0]) + 1j * rng.normal(size=a.shape[0])
    want = a @ x + 0.37 * d * x
    for use in (True, False):
        assert np.allclose(_kernels.csr_diag_matvec(a, d, 0.37, x, use_numba=use), want)


def test_matvec_complex_entries(rng):
    a = sp.random(30, 30, density=0.2, random_state=1, format="csr") * (1 + 2j)
    d = np.zeros(30)
    x = rng.normal(size=30) + 0j
    got = _kernels.csr_diag_matvec(a.tocsr(), d, 1.0, x, use_numba=True)
    assert np.allclose(got, a @ x)


@pytest.mark.parametrize("flag, expected", [("1", "False"), ("0", "True"), ("", "True")])
def test_env_switch(flag, expected):
    env = dict(os.environ, CAVITY_QUEENS_NO_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from cavity_queens import _kernels; print(_kernels.USE_NUMBA)"],
        capture_output=True, text=True, env=env, timeout=120)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == expected


def test_numpy_path_end_to_end():
    env = dict(os.environ, CAVITY_QUEENS_NO_NUMBA="1")
    code = ("from cavity_queens.problem import brute_force_solve, paper_instance;"
            "print([c.columns for c in brute_force_solve(paper_instance())])")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                         timeout=120)
    assert out.stdout.strip() == "[(1, 4, 2, 5, 3)]"
