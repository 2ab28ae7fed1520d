"""
Hot loops for truncated jet arithmetic.

The truncated product of two coefficient arrays is the one kernel every
geometric quantity funnels through. Two implementations are kept:

* ``mul_numba``  -- an ``@njit`` loop over the precomputed monomial pair table;
* ``mul_numpy``  -- gather + ``np.add.reduceat`` over the same table.

The same split is used for the shifted symmetric power iteration that
maximizes a cubic form on the unit sphere (``sshopm_numba`` / ``sshopm_numpy``).

The active pair is ``truncated_mul`` / ``sshopm``. Setting ``CENTROAFFINE_DISABLE_NUMBA=1``
(or running without numba installed) selects the numpy path. Both paths
produce identical results up to summation order.
"""

import os

import numpy as np

DISABLE_ENV = "CENTROAFFINE_DISABLE_NUMBA"


def _numba_disabled():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in ("1", "true", "yes", "on")


try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def mul_numpy(a, b, ia, ib, ic, starts):
    """Truncated product of row-stacked jets ``a`` and ``b`` (shape (rows, m)).

    ``ia``, ``ib`` index the factor monomials of every admissible pair, sorted
    by the product monomial ``ic``; ``starts`` are the segment offsets of each
    product monomial within that sorted table.
    """
    prod = a[:, ia] * b[:, ib]
    return np.add.reduceat(prod, starts, axis=1)


if HAVE_NUMBA:

    @njit(cache=True)
    def mul_numba(a, b, ia, ib, ic, starts):
        rows = a.shape[0]
        m = starts.shape[0]
        npairs = ia.shape[0]
        out = np.zeros((rows, m))
        for r in range(rows):
            for p in range(npairs):
                out[r, ic[p]] += a[r, ia[p]] * b[r, ib[p]]
        return out

else:  # pragma: no cover
    mul_numba = None


def sshopm_numpy(cubic, starts, alpha, tol, maxiter):
    """Shifted symmetric power iteration ``x <- normalize(C(x, x) + alpha x)``.

    ``cubic[m, i, j]`` is a totally symmetric 3-tensor, ``starts`` one start
    per row. Returns final iterates, cubic-form values, iteration counts and a
    converged mask (step norm <= ``tol``).
    """
    X = starts / np.linalg.norm(starts, axis=1, keepdims=True)
    nstart = X.shape[0]
    iters = np.zeros(nstart, dtype=np.int64)
    conv = np.zeros(nstart, dtype=np.bool_)
    for it in range(maxiter):
        act = ~conv
        if not act.any():
            break
        x = X[act]
        y = np.einsum("mij,si,sj->sm", cubic, x, x) + alpha * x
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        step = np.linalg.norm(y - x, axis=1)
        X[act] = y
        iters[act] = it + 1
        done = np.flatnonzero(act)[step <= tol]
        conv[done] = True
    f = np.einsum("mij,sm,si,sj->s", cubic, X, X, X)
    return X, f, iters, conv


if HAVE_NUMBA:

    @njit(cache=True)
    def sshopm_numba(cubic, starts, alpha, tol, maxiter):
        nstart, n = starts.shape
        X = np.empty((nstart, n))
        f = np.zeros(nstart)
        iters = np.zeros(nstart, dtype=np.int64)
        conv = np.zeros(nstart, dtype=np.bool_)
        y = np.empty(n)
        for s in range(nstart):
            x = starts[s].copy()
            x /= np.sqrt(np.sum(x * x))
            for it in range(maxiter):
                for m in range(n):
                    acc = alpha * x[m]
                    for i in range(n):
                        for j in range(n):
                            acc += cubic[m, i, j] * x[i] * x[j]
                    y[m] = acc
                y /= np.sqrt(np.sum(y * y))
                step = np.sqrt(np.sum((y - x) ** 2))
                x[:] = y
                iters[s] = it + 1
                if step <= tol:
                    conv[s] = True
                    break
            val = 0.0
            for m in range(n):
                for i in range(n):
                    for j in range(n):
                        val += cubic[m, i, j] * x[m] * x[i] * x[j]
            f[s] = val
            X[s] = x
        return X, f, iters, conv

else:  # pragma: no cover
    sshopm_numba = None


if HAVE_NUMBA and not _numba_disabled():
    BACKEND = "numba"
    truncated_mul = mul_numba
    sshopm = sshopm_numba
else:
    BACKEND = "numpy"
    truncated_mul = mul_numpy
    sshopm = sshopm_numpy
