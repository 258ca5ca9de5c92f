# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled skeleton-search kernels.

Both entry points consume a dense correlation matrix ``R`` (unit diagonal)
and reproduce, test for test, the enumeration of ``_pcfallback``.
"""

from cython.parallel cimport prange, parallel
from libc.math cimport sqrt, fabs, log
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double CLAMP = 1.0 - 1e-12


cdef inline bint _independent(double r, double sqrt_dof, double zcrit,
                              double r_lo, double r_hi) noexcept nogil:
    cdef double a = fabs(r)
    if a < r_lo:
        return True
    if a > r_hi:
        return False
    if a > CLAMP:
        a = CLAMP
    return 0.5 * log((1.0 + a) / (1.0 - a)) * sqrt_dof <= zcrit


def level0(const double[:, ::1] R, const int[::1] tiers, bint allow_concurrent,
           double sqrt_dof, double zcrit, double r_lo, double r_hi):
    """Marginal tests over every admissible pair.

    Returns ``(n_tests, edges, strength)`` for the pairs that survive.
    """
    cdef Py_ssize_t P = R.shape[0]
    cdef Py_ssize_t i, j
    cdef long long n_tests = 0, n_keep = 0, pos = 0
    cdef double r
    for i in range(P):
        for j in range(i + 1, P):
            if tiers[i] == tiers[j] and not allow_concurrent:
                continue
            n_tests += 1
            if not _independent(R[i, j], sqrt_dof, zcrit, r_lo, r_hi):
                n_keep += 1
    edges = np.empty((n_keep, 2), dtype=np.int32)
    strength = np.empty(n_keep, dtype=np.float64)
    cdef int[:, ::1] ev = edges
    cdef double[::1] sv = strength
    for i in range(P):
        for j in range(i + 1, P):
            if tiers[i] == tiers[j] and not allow_concurrent:
                continue
            r = R[i, j]
            if not _independent(r, sqrt_dof, zcrit, r_lo, r_hi):
                ev[pos, 0] = <int>i
                ev[pos, 1] = <int>j
                sv[pos] = fabs(r)
                pos += 1
    return n_tests, edges, strength


cdef inline int _pcorr_rows(const double[:, ::1] R, int x, int y, const int* S,
                            int l, int start, double tol, double* L, double* a,
                            double* b, double* r_out) noexcept nogil:
    """Partial correlation of x, y given S[0:l] via Cholesky of R[S, S].

    Rows ``< start`` of ``L``, ``a`` and ``b`` are reused from the previous
    call, which shared the prefix ``S[0:start]``. Returns 1 when the
    conditioning block or either residual variance is numerically singular.
    """
    cdef int i, j, k
    cdef double s, sa, sb, vx, vy, c
    for i in range(start, l):
        for j in range(i + 1):
            s = R[S[i], S[j]]
            for k in range(j):
                s -= L[i * l + k] * L[j * l + k]
            if i == j:
                if s <= tol:
                    return 1
                L[i * l + i] = sqrt(s)
            else:
                L[i * l + j] = s / L[j * l + j]
        sa = R[S[i], x]
        sb = R[S[i], y]
        for k in range(i):
            sa -= L[i * l + k] * a[k]
            sb -= L[i * l + k] * b[k]
        a[i] = sa / L[i * l + i]
        b[i] = sb / L[i * l + i]
    vx = 1.0
    vy = 1.0
    c = R[x, y]
    for i in range(l):
        vx -= a[i] * a[i]
        vy -= b[i] * b[i]
        c -= a[i] * b[i]
    if vx <= tol or vy <= tol:
        return 1
    s = c / sqrt(vx * vy)
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    r_out[0] = s
    return 0


cdef inline int _next_combo(int* idx, int l, int m) noexcept nogil:
    """Advance ``idx`` to the next lexicographic l-subset of range(m).

    Returns the first changed position, or -1 when exhausted.
    """
    cdef int i = l - 1, k
    while i >= 0 and idx[i] == m - l + i:
        i -= 1
    if i < 0:
        return -1
    idx[i] += 1
    for k in range(i + 1, l):
        idx[k] = idx[k - 1] + 1
    return i


cdef long long _test_side(const double[:, ::1] R, int x, int y, const int* cand,
                          int m, const unsigned char* skip_flag, int l,
                          double sqrt_dof, double zcrit, double r_lo, double r_hi,
                          double tol, int* idx, int* S, double* L, double* a,
                          double* b, double* minr, int* sep, int* found,
                          long long* singular, bint singular_separates) noexcept nogil:
    cdef long long n = 0
    cdef int i, p, valid = 0
    cdef bint all_skip, stale
    cdef double r = 0.0
    if m < l:
        return 0
    for i in range(l):
        idx[i] = i
    while True:
        all_skip = skip_flag != NULL
        if all_skip:
            for i in range(l):
                if not skip_flag[idx[i]]:
                    all_skip = False
                    break
        if not all_skip:
            for i in range(valid, l):
                S[i] = cand[idx[i]]
            n += 1
            if _pcorr_rows(R, x, y, S, l, valid, tol, L, a, b, &r):
                singular[0] += 1
                stale = True
                if singular_separates:
                    found[0] = 1
            else:
                stale = False
                if fabs(r) < minr[0]:
                    minr[0] = fabs(r)
                if _independent(r, sqrt_dof, zcrit, r_lo, r_hi):
                    found[0] = 1
            if found[0]:
                for i in range(l):
                    sep[i] = S[i]
                return n
            # a failed pivot leaves the rows after it unset
            valid = 0 if stale else l
        p = _next_combo(idx, l, m)
        if p < 0:
            return n
        if p < valid:
            valid = p


def level_k(const double[:, ::1] R, const unsigned char[:, ::1] adj,
            const int[::1] nbr_ptr, const int[::1] nbr_idx,
            const int[:, ::1] edges, int l,
            double sqrt_dof, double zcrit, double r_lo, double r_hi, double tol,
            double[::1] minr, unsigned char[::1] removed, int[:, ::1] sepsets,
            int n_threads, bint singular_separates=True):
    """Order-``l`` tests (``l >= 1``) over a frozen adjacency snapshot.

    For edge (x, y) all l-subsets of adj(x) minus y are tried in lexicographic
    order, then the l-subsets of adj(y) minus x not already covered by the
    x side. The first independence verdict removes the edge. ``minr``,
    ``removed`` and ``sepsets`` are updated in place. Returns
    ``(n_tests, n_singular)``.
    """
    cdef Py_ssize_t E = edges.shape[0]
    cdef Py_ssize_t P = R.shape[0]
    cdef Py_ssize_t e
    cdef int x, y, m, i, q, found
    cdef long long total = 0, singular = 0
    cdef long long n_e, sing_e
    cdef int* cand
    cdef unsigned char* flag
    cdef int* idx
    cdef int* S
    cdef double* L
    cdef double* a
    cdef double* b
    cdef double mr

    with nogil, parallel(num_threads=n_threads):
        cand = <int*>malloc(P * sizeof(int))
        flag = <unsigned char*>malloc(P * sizeof(unsigned char))
        idx = <int*>malloc((l + 1) * sizeof(int))
        S = <int*>malloc((l + 1) * sizeof(int))
        L = <double*>malloc((l * l + 1) * sizeof(double))
        a = <double*>malloc((l + 1) * sizeof(double))
        b = <double*>malloc((l + 1) * sizeof(double))
        for e in prange(E, schedule="dynamic", chunksize=64):
            x = edges[e, 0]
            y = edges[e, 1]
            found = 0
            sing_e = 0
            mr = minr[e]
            m = 0
            for i in range(nbr_ptr[x], nbr_ptr[x + 1]):
                q = nbr_idx[i]
                if q != y:
                    cand[m] = q
                    m = m + 1
            n_e = _test_side(R, x, y, cand, m, NULL, l, sqrt_dof, zcrit,
                             r_lo, r_hi, tol, idx, S, L, a, b, &mr,
                             &sepsets[e, 0], &found, &sing_e, singular_separates)
            if not found:
                m = 0
                for i in range(nbr_ptr[y], nbr_ptr[y + 1]):
                    q = nbr_idx[i]
                    if q != x:
                        cand[m] = q
                        flag[m] = adj[x, q]
                        m = m + 1
                n_e = n_e + _test_side(R, y, x, cand, m, flag, l, sqrt_dof,
                                       zcrit, r_lo, r_hi, tol, idx, S, L, a, b,
                                       &mr, &sepsets[e, 0], &found, &sing_e,
                                       singular_separates)
            minr[e] = mr
            removed[e] = found
            total += n_e
            singular += sing_e
        free(cand)
        free(flag)
        free(idx)
        free(S)
        free(L)
        free(a)
        free(b)
    return total, singular
