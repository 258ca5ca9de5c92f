"""NumPy implementation of the skeleton-search kernels.

Drop-in replacement for ``_pckernel`` with the same signatures. Partial
correlations follow the compiled kernel's floating-point operation order
(hand-rolled Cholesky, sequential accumulation), so verdicts, test counts
and strengths agree bit for bit.
"""

from __future__ import annotations

from itertools import combinations, islice

import numpy as np

R_CLAMP = 1.0 - 1e-12
_CHUNK = 4096


def _independent(r: np.ndarray, sqrt_dof: float, zcrit: float, r_lo: float, r_hi: float) -> np.ndarray:
    a = np.abs(r)
    out = a < r_lo
    mid = (a >= r_lo) & (a <= r_hi)
    if mid.any():
        am = np.minimum(a[mid], R_CLAMP)
        out[mid] = 0.5 * np.log((1.0 + am) / (1.0 - am)) * sqrt_dof <= zcrit
    return out


def level0(R, tiers, allow_concurrent, sqrt_dof, zcrit, r_lo, r_hi):
    R = np.asarray(R)
    tiers = np.asarray(tiers)
    iu, ju = np.triu_indices(R.shape[0], k=1)
    if not allow_concurrent:
        keep = tiers[iu] != tiers[ju]
        iu, ju = iu[keep], ju[keep]
    r = R[iu, ju]
    dep = ~_independent(r, sqrt_dof, zcrit, r_lo, r_hi)
    edges = np.stack([iu[dep], ju[dep]], axis=1).astype(np.int32)
    return int(iu.size), np.ascontiguousarray(edges), np.abs(r[dep])


def _batch_pcorr(R, x, y, C, tol):
    """Partial correlations for each row of ``C`` (conditioning sets); NaN marks singular."""
    B, l = C.shape
    L = np.zeros((B, l, l))
    a = np.zeros((B, l))
    b = np.zeros((B, l))
    singular = np.zeros(B, dtype=bool)
    for i in range(l):
        for j in range(i + 1):
            s = R[C[:, i], C[:, j]].copy()
            for k in range(j):
                s -= L[:, i, k] * L[:, j, k]
            if i == j:
                singular |= s <= tol
                L[:, i, i] = np.sqrt(np.where(s > tol, s, 1.0))
            else:
                L[:, i, j] = s / L[:, j, j]
        sa = R[C[:, i], x].copy()
        sb = R[C[:, i], y].copy()
        for k in range(i):
            sa -= L[:, i, k] * a[:, k]
            sb -= L[:, i, k] * b[:, k]
        a[:, i] = sa / L[:, i, i]
        b[:, i] = sb / L[:, i, i]
    vx = np.ones(B)
    vy = np.ones(B)
    c = np.full(B, R[x, y])
    for i in range(l):
        vx -= a[:, i] * a[:, i]
        vy -= b[:, i] * b[:, i]
        c -= a[:, i] * b[:, i]
    singular |= (vx <= tol) | (vy <= tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.clip(c / np.sqrt(vx * vy), -1.0, 1.0)
    r[singular] = np.nan
    return r


def _test_side(R, x, y, cand, skip, l, thr, tol, singular_separates):
    """Returns ``(n_tests, min_abs_r, sepset or None, n_singular)``."""
    n = 0
    n_sing = 0
    minr = np.inf
    if len(cand) < l:
        return 0, minr, None, 0
    combos = combinations(range(len(cand)), l)
    while True:
        chunk = list(islice(combos, _CHUNK))
        if not chunk:
            return n, minr, None, n_sing
        idx = np.array(chunk, dtype=np.intp)
        if skip is not None:
            idx = idx[~np.all(skip[idx], axis=1)]
            if idx.size == 0:
                continue
        C = cand[idx]
        r = _batch_pcorr(R, x, y, C, tol)
        sing = np.isnan(r)
        dec = sing.copy() if singular_separates else np.zeros_like(sing)
        ok = ~sing
        dec[ok] = _independent(r[ok], *thr)
        hits = np.flatnonzero(dec)
        stop = hits[0] if hits.size else len(r) - 1
        seen = np.abs(r[: stop + 1])
        seen = seen[~np.isnan(seen)]
        if seen.size:
            minr = min(minr, float(seen.min()))
        n += stop + 1
        n_sing += int(sing[: stop + 1].sum())
        if hits.size:
            return n, minr, C[stop], n_sing


def level_k(R, adj, nbr_ptr, nbr_idx, edges, l, sqrt_dof, zcrit, r_lo, r_hi, tol,
            minr, removed, sepsets, n_threads=1, singular_separates=True):
    R = np.asarray(R)
    adj = np.asarray(adj)
    nbr_ptr = np.asarray(nbr_ptr)
    nbr_idx = np.asarray(nbr_idx)
    thr = (sqrt_dof, zcrit, r_lo, r_hi)
    total = 0
    singular = 0
    for e in range(edges.shape[0]):
        x, y = int(edges[e, 0]), int(edges[e, 1])
        nx_ = nbr_idx[nbr_ptr[x] : nbr_ptr[x + 1]]
        cand = nx_[nx_ != y]
        n, mr, sep, sg = _test_side(R, x, y, cand, None, l, thr, tol, singular_separates)
        if sep is None:
            ny_ = nbr_idx[nbr_ptr[y] : nbr_ptr[y + 1]]
            cand = ny_[ny_ != x]
            n2, mr2, sep, sg2 = _test_side(
                R, y, x, cand, adj[x, cand].astype(bool), l, thr, tol, singular_separates
            )
            n += n2
            mr = min(mr, mr2)
            sg += sg2
        total += n
        singular += sg
        minr[e] = min(minr[e], mr)
        if sep is not None:
            removed[e] = 1
            sepsets[e, :] = sep
        else:
            removed[e] = 0
    return total, singular
