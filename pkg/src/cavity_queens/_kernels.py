"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The compiled
versions are used unless numba is missing or the environment variable
``CAVITY_QUEENS_NO_NUMBA`` is set to a non-empty value other than ``0``.
``benchmarks/bench_kernels.py`` times both paths against each other.

General sparse products go straight to scipy: a compiled CSR loop with
complex entries measured slower than scipy's own matvec at these sizes, so
only the diagonal-plus-sparse update used by the ideal sweep lives here.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False


def _numba_disabled_by_env() -> bool:
    flag = os.environ.get("CAVITY_QUEENS_NO_NUMBA", "")
    return flag not in ("", "0")


USE_NUMBA = _HAVE_NUMBA and not _numba_disabled_by_env()


# ---------------------------------------------------------------------------
# configuration features: attacking pairs, diagonal penalty sum, pin count
# ---------------------------------------------------------------------------


def _config_features_np(n, start, stop, dtab, ttab):
    codes = np.arange(start, stop, dtype=np.int64)
    powers = n ** np.arange(n, dtype=np.int64)
    cols = (codes[:, None] // powers[None, :]) % n
    rows = np.arange(n)
    pairs = np.zeros(stop - start, dtype=np.int32)
    for a in range(n):
        for b in range(a + 1, n):
            ca = cols[:, a]
            cb = cols[:, b]
            hit = (ca == cb) | (ca + a == cb + b) | (ca - a == cb - b)
            pairs += hit
    dsum = dtab[cols, rows[None, :]].sum(axis=1).astype(np.int32)
    tsum = ttab[cols, rows[None, :]].sum(axis=1).astype(np.int32)
    return pairs, dsum, tsum


def _config_features_nb_impl(n, start, stop, dtab, ttab):
    m = stop - start
    pairs = np.empty(m, dtype=np.int32)
    dsum = np.empty(m, dtype=np.int32)
    tsum = np.empty(m, dtype=np.int32)
    cols = np.empty(n, dtype=np.int64)
    for s in range(m):
        code = start + s
        for j in range(n):
            cols[j] = code % n
            code //= n
        count = 0
        for a in range(n):
            ca = cols[a]
            for b in range(a + 1, n):
                cb = cols[b]
                if ca == cb or ca + a == cb + b or ca - a == cb - b:
                    count += 1
        d = 0
        t = 0
        for j in range(n):
            d += dtab[cols[j], j]
            t += ttab[cols[j], j]
        pairs[s] = count
        dsum[s] = d
        tsum[s] = t
    return pairs, dsum, tsum


# ---------------------------------------------------------------------------
# CSR matvec plus diagonal: out = A @ x + c * (d * x)
# ---------------------------------------------------------------------------


def _csr_diag_matvec_np(a_ptr, a_idx, a_val, diag, coeff, x):
    import scipy.sparse as sp

    dim = x.shape[0]
    a = sp.csr_matrix((a_val, a_idx, a_ptr), shape=(dim, dim))
    return a @ x + coeff * (diag * x)


def _csr_diag_matvec_nb_impl(a_ptr, a_idx, a_val, diag, coeff, x):
    dim = x.shape[0]
    out = np.empty(dim, dtype=np.complex128)
    for r in range(dim):
        acc = 0.0j
        for p in range(a_ptr[r], a_ptr[r + 1]):
            acc += a_val[p] * x[a_idx[p]]
        out[r] = acc + coeff * diag[r] * x[r]
    return out


if _HAVE_NUMBA:
    _config_features_nb = numba.njit(cache=True)(_config_features_nb_impl)
    _csr_diag_matvec_nb = numba.njit(cache=True)(_csr_diag_matvec_nb_impl)
else:  # pragma: no cover
    _config_features_nb = _config_features_np
    _csr_diag_matvec_nb = _csr_diag_matvec_np


def config_features(n, start, stop, dtab, ttab, *, use_numba=None):
    """Attacking-pair count, diagonal penalty and pin count per basis index.

    Basis indices in ``[start, stop)`` are decoded base ``n`` with row 1 as
    the least significant digit. ``dtab``/``ttab`` are 0-based ``[column, row]``
    integer tables.
    """
    use = USE_NUMBA if use_numba is None else use_numba
    dtab = np.ascontiguousarray(dtab, dtype=np.int64)
    ttab = np.ascontiguousarray(ttab, dtype=np.int64)
    if use:
        return _config_features_nb(int(n), int(start), int(stop), dtab, ttab)
    return _config_features_np(int(n), int(start), int(stop), dtab, ttab)


def csr_diag_matvec(a, diag, coeff, x, *, use_numba=None):
    """``a @ x + coeff * diag * x`` for a complex CSR matrix ``a``."""
    use = USE_NUMBA if use_numba is None else use_numba
    fn = _csr_diag_matvec_nb if use else _csr_diag_matvec_np
    return fn(a.indptr, a.indices, a.data, diag, complex(coeff), x)

