"""Compare the numba kernels with their numpy fallbacks.

Usage::

    python benchmarks/bench_kernels.py [--n 6] [--repeat 5]

Each kernel is called once per path before timing so numba compilation is
excluded. Results are checked for agreement before any timing is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cavity_queens import _kernels
from cavity_queens.hilbert import RestrictedBasis
from cavity_queens.model import build_h_kin


def bench(label, fn, repeat):
    fn()
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8} {best * 1e3:10.3f} ms")
    return best


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=6, help="board size (dimension n^n)")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _kernels._HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    n = args.n
    rng = np.random.default_rng(0)
    dim = n**n
    dtab = rng.integers(0, 3, size=(n, n))
    ttab = rng.integers(0, 2, size=(n, n))
    print(f"config_features, n = {n}, {dim} configurations")
    ref = _kernels.config_features(n, 0, dim, dtab, ttab, use_numba=False)
    got = _kernels.config_features(n, 0, dim, dtab, ttab, use_numba=True)
    assert all(np.array_equal(a, b) for a, b in zip(ref, got))
    t_np = bench("numpy", lambda: _kernels.config_features(n, 0, dim, dtab, ttab,
                                                            use_numba=False), args.repeat)
    t_nb = bench("numba", lambda: _kernels.config_features(n, 0, dim, dtab, ttab,
                                                            use_numba=True), args.repeat)
    print(f"  speedup  {t_np / t_nb:10.1f}x")

    h = build_h_kin(RestrictedBasis(n)).matrix.tocsr().astype(np.complex128)
    diag = rng.normal(size=dim)
    x = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    print(f"csr_diag_matvec, dimension {dim}, {h.nnz} nonzeros")
    ref = _kernels.csr_diag_matvec(h, diag, 0.3, x, use_numba=False)
    got = _kernels.csr_diag_matvec(h, diag, 0.3, x, use_numba=True)
    assert np.allclose(ref, got, rtol=1e-12, atol=1e-12)
    t_np = bench("numpy", lambda: _kernels.csr_diag_matvec(h, diag, 0.3, x, use_numba=False),
                 args.repeat)
    t_nb = bench("numba", lambda: _kernels.csr_diag_matvec(h, diag, 0.3, x, use_numba=True),
                 args.repeat)
    print(f"  speedup  {t_np / t_nb:10.1f}x")


if __name__ == "__main__":
    main()
