"""Hot distance and clustering kernels.

Every kernel exists twice: a numba ``@njit`` version and a plain numpy
version.  The numba path is used when numba imports cleanly and the
environment variable ``TAMEGEO_NO_NUMBA`` is unset (or ``0``).  Both paths
return identical results up to floating point summation order, which the
test-suite checks.

``TAMEGEO_THREADS`` caps the number of numba worker threads.
"""

import os

import numpy as np

_DISABLED = os.environ.get("TAMEGEO_NO_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by TAMEGEO_NO_NUMBA")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old for numba; skip probing it
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# numpy path: bound on the size of one broadcast block (queries x points)
_BLOCK = 1 << 22


def _min_dist_numpy(Q, P):
    # |q|^2 + |p|^2 - 2 q.p through BLAS picks the nearest index; the
    # distance to that index is then recomputed from the difference
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    P = np.ascontiguousarray(P, dtype=np.float64)
    out = np.full(Q.shape[0], np.inf)
    if P.shape[0] == 0 or Q.shape[0] == 0:
        return out
    shift = P.mean(axis=0)
    Qc, Pc = Q - shift, P - shift
    pn = np.einsum("ij,ij->i", Pc, Pc)
    qstep = max(1, _BLOCK // P.shape[0])
    for i in range(0, Q.shape[0], qstep):
        q = Qc[i:i + qstep]
        d2 = pn[None, :] - 2.0 * (q @ Pc.T)
        j = d2.argmin(axis=1)
        diff = Q[i:i + qstep] - P[j]
        out[i:i + qstep] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return out


def _greedy_cluster_numpy(X, tol):
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    reps = []
    tol2 = tol * tol
    for i in range(n):
        if reps:
            R = X[reps]
            d2 = ((R - X[i]) ** 2).sum(axis=1)
            hit = np.flatnonzero(d2 <= tol2)
            if hit.size:
                labels[i] = hit[0]
                continue
        labels[i] = len(reps)
        reps.append(i)
    return labels, np.asarray(reps, dtype=np.int64)


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _min_dist_sorted_nb(Q, P, axis):
        # P sorted along `axis`; sweep outwards from the insertion point and
        # stop once the axis gap alone exceeds the best distance found
        nq = Q.shape[0]
        n = P.shape[0]
        d = Q.shape[1]
        key = P[:, axis].copy()
        out = np.empty(nq)
        for i in prange(nq):
            q0 = Q[i, axis]
            pos = np.searchsorted(key, q0)
            best = np.inf
            j = pos
            while j < n:
                g = key[j] - q0
                if g * g >= best:
                    break
                s = 0.0
                for k in range(d):
                    t = Q[i, k] - P[j, k]
                    s += t * t
                if s < best:
                    best = s
                j += 1
            j = pos - 1
            while j >= 0:
                g = q0 - key[j]
                if g * g >= best:
                    break
                s = 0.0
                for k in range(d):
                    t = Q[i, k] - P[j, k]
                    s += t * t
                if s < best:
                    best = s
                j -= 1
            out[i] = np.sqrt(best)
        return out

    @njit(cache=True)
    def _greedy_cluster_nb(X, tol):
        n = X.shape[0]
        d = X.shape[1]
        labels = np.empty(n, dtype=np.int64)
        reps = np.empty(n, dtype=np.int64)
        nrep = 0
        tol2 = tol * tol
        for i in range(n):
            found = -1
            for r in range(nrep):
                s = 0.0
                for k in range(d):
                    t = X[i, k] - X[reps[r], k]
                    s += t * t
                if s <= tol2:
                    found = r
                    break
            if found < 0:
                reps[nrep] = i
                labels[i] = nrep
                nrep += 1
            else:
                labels[i] = found
        return labels, reps[:nrep].copy()

    def _min_dist_numba(Q, P):
        Q = np.ascontiguousarray(Q, dtype=np.float64)
        P = np.ascontiguousarray(P, dtype=np.float64)
        if P.shape[0] == 0:
            return np.full(Q.shape[0], np.inf)
        axis = int(np.argmax(P.max(axis=0) - P.min(axis=0)))
        Ps = np.ascontiguousarray(P[np.argsort(P[:, axis], kind="stable")])
        return _min_dist_sorted_nb(Q, Ps, axis)

    def _greedy_cluster_numba(X, tol):
        return _greedy_cluster_nb(np.ascontiguousarray(X, dtype=np.float64), float(tol))

    _threads = os.environ.get("TAMEGEO_THREADS")
    if _threads:
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

    min_dist = _min_dist_numba
    greedy_cluster = _greedy_cluster_numba
else:
    min_dist = _min_dist_numpy
    greedy_cluster = _greedy_cluster_numpy


min_dist.__doc__ = """Distance from every row of ``Q`` to the row set ``P`` (``inf`` if ``P`` is empty)."""


def directed_hausdorff(A, B):
    """``max_{a in A} d(a, B)``; 0 for empty ``A``."""
    if len(A) == 0:
        return 0.0
    return float(min_dist(A, B).max())


def warmup():
    """Trigger JIT compilation on tiny inputs.

    Point clouds hand out read-only arrays, which numba compiles
    separately, so both variants are exercised.
    """
    x = np.zeros((2, 2))
    ro = np.zeros((2, 2))
    ro.setflags(write=False)
    for q in (x, ro):
        min_dist(q, x)
        greedy_cluster(q, 0.1)
