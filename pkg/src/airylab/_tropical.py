"""Max-plus row insertion, the hot loop behind every passage profile.

Grid rows are fed one at a time as words in the column letters. For each
tableau row ``r`` we keep the cumulative counts ``x[r, i]`` (how much of
letters ``<= i`` sits in row ``r``). One insertion step maps the old counts
``x`` and the incoming word ``a`` to new counts ``x'`` and a bumped word
``b`` that feeds row ``r + 1``.

Row insertion::

    x'[i] = max(x'[i-1], x[i]) + a[i]
    b[i]  = min(x'[i-1], x[i]) - x[i-1]

Dual insertion (strictly ordered paths, one cell per column)::

    x'[i] = max(x'[i-1] + a[i], x[i])
    b[i]  = min(x'[i-1] + a[i], x[i]) - x[i-1]

with ``x'[-1] = x[-1] = 0``. Partial sums over ``r`` of ``x[r, m-1]`` are
the k-path passage values.
"""
import numpy as np

from ._accel import BACKEND, HAVE_NUMBA, njit


@njit
def _insert_batch_loop(W, kmax, dual):
    R, n, M = W.shape
    X = np.zeros((R, kmax, M))
    a = np.empty(M)
    b = np.empty(M)
    for rep in range(R):
        for j in range(n):
            for i in range(M):
                a[i] = W[rep, j, i]
            for r in range(kmax):
                live = False
                for i in range(M):
                    if a[i] != 0.0:
                        live = True
                        break
                if not live:
                    break
                prev_new = 0.0
                prev_old = 0.0
                for i in range(M):
                    xo = X[rep, r, i]
                    if dual:
                        cand = prev_new + a[i]
                        if cand >= xo:
                            xn = cand
                            b[i] = xo - prev_old
                        else:
                            xn = xo
                            b[i] = cand - prev_old
                    else:
                        if prev_new >= xo:
                            xn = prev_new + a[i]
                            b[i] = xo - prev_old
                        else:
                            xn = xo + a[i]
                            b[i] = prev_new - prev_old
                    X[rep, r, i] = xn
                    prev_new = xn
                    prev_old = xo
                for i in range(M):
                    a[i] = b[i]
    return X


def _insert_batch_numpy(W, kmax, dual):
    R, n, M = W.shape
    X = np.zeros((R, kmax, M))
    zero = np.zeros((R, 1))
    for j in range(n):
        a = np.array(W[:, j, :], dtype=float)
        for r in range(kmax):
            if not a.any():
                break
            x = X[:, r, :]
            A = np.cumsum(a, axis=1)
            if dual:
                xn = A + np.maximum(0.0, np.maximum.accumulate(x - A, axis=1))
                lead = np.concatenate([zero, xn[:, :-1]], axis=1) + a
            else:
                xn = A + np.maximum(0.0, np.maximum.accumulate(x - (A - a), axis=1))
                lead = np.concatenate([zero, xn[:, :-1]], axis=1)
            b = np.minimum(lead, x) - np.concatenate([zero, x[:, :-1]], axis=1)
            X[:, r, :] = xn
            a = b
    return X


def insert_rows_batch(W, kmax, dual=False, backend=None):
    """Cumulative row counts after inserting every grid row.

    ``W`` has shape ``(R, n, M)`` (replica, grid row, column); the result
    has shape ``(R, kmax, M)``.
    """
    W = np.ascontiguousarray(W, dtype=np.float64)
    if W.ndim != 3:
        raise ValueError("expected a (replicas, rows, cols) array")
    kmax = int(kmax)
    backend = backend or BACKEND
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return _insert_batch_loop(W, kmax, bool(dual))
    if backend == "numpy":
        return _insert_batch_numpy(W, kmax, bool(dual))
    if backend == "python":
        # the loop body without compilation; only useful for tiny inputs
        f = getattr(_insert_batch_loop, "py_func", _insert_batch_loop)
        return f(W, kmax, bool(dual))
    raise ValueError("unknown backend %r" % backend)


def insert_rows(W, kmax, dual=False, backend=None):
    """Single-grid version of :func:`insert_rows_batch`; ``W`` is ``(n, M)``."""
    W = np.asarray(W, dtype=np.float64)
    return insert_rows_batch(W[None], kmax, dual, backend)[0]


def partial_sums(X):
    """Turn ``(kmax, M)`` row counts into ``L[k, m]`` for k = 0..kmax, m = 0..M."""
    kmax, M = X.shape
    L = np.zeros((kmax + 1, M + 1))
    L[1:, 1:] = np.cumsum(X, axis=0)
    return L
