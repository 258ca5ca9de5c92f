"""Gaussian conditional-independence machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

R_CLAMP = 1.0 - 1e-12
# pivots / residual variances at or below this count as singular
SINGULAR_TOL = 1e-10


class CollinearError(np.linalg.LinAlgError):
    """The conditioning set (or an endpoint given it) is numerically collinear."""


@dataclass(frozen=True)
class CITestResult:
    r: float
    z: float
    independent: bool
    order: int


def z_critical(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(norm.ppf(1 - alpha / 2))


def fisher_z(r: float, n: int, order: int) -> float:
    dof = n - order - 3
    if dof < 1:
        raise ValueError(f"need n - order - 3 >= 1, got n={n}, order={order}")
    if abs(r) > 1:
        raise ValueError(f"|r| must not exceed 1, got {r}")
    a = min(abs(r), R_CLAMP)
    return math.copysign(0.5 * math.log((1 + a) / (1 - a)) * math.sqrt(dof), r)


def fisher_z_test(r: float, n: int, order: int, alpha: float = 0.05) -> CITestResult:
    z = fisher_z(r, n, order)
    return CITestResult(r, z, abs(z) <= z_critical(alpha), order)


def r_thresholds(n: int, order: int, alpha: float) -> tuple[float, float, float, float]:
    """Bracket ``[r_lo, r_hi]`` around the |r| decision boundary.

    Outside the bracket the verdict follows from |r| alone; inside it the
    exact Fisher-Z comparison runs. Returns ``(sqrt_dof, zcrit, r_lo, r_hi)``.
    """
    dof = n - order - 3
    if dof < 1:
        raise ValueError(f"need n - order - 3 >= 1, got n={n}, order={order}")
    sqrt_dof = math.sqrt(dof)
    zcrit = z_critical(alpha)
    r_star = math.tanh(zcrit / sqrt_dof)
    return sqrt_dof, zcrit, r_star * (1 - 1e-9), min(r_star * (1 + 1e-9), R_CLAMP)


def correlation_matrix(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pearson correlations with constant columns decoupled.

    Returns ``(R, constant)``. Constant columns get a unit diagonal and zero
    off-diagonal entries, so every test touching them reports r = 0.
    """
    data = np.asarray(data, dtype=np.float64)
    centered = data - data.mean(axis=0)
    constant = np.ptp(data, axis=0) == 0
    scale = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    scale[constant] = 1.0
    centered /= scale
    centered[:, constant] = 0.0
    R = centered.T @ centered
    np.fill_diagonal(R, 1.0)
    np.clip(R, -1.0, 1.0, out=R)
    return R, constant


def partial_correlation_from_corr(R: np.ndarray, i: int, j: int, cond: Sequence[int]) -> float:
    """Partial correlation via the precision matrix of the (|cond|+2) submatrix."""
    if i == j or i in cond or j in cond:
        raise ValueError("i, j must be distinct and outside the conditioning set")
    # fixed operand order makes r(i, j) == r(j, i) bit for bit
    i, j = min(i, j), max(i, j)
    if not cond:
        return float(np.clip(R[i, j], -1.0, 1.0))
    idx = [i, j, *cond]
    sub = R[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub[2:, 2:])
    except np.linalg.LinAlgError as exc:
        raise CollinearError("collinear conditioning set") from exc
    if np.min(np.diag(chol)) ** 2 <= SINGULAR_TOL:
        raise CollinearError("collinear conditioning set")
    # residual variances of i and j given cond (Schur complements)
    ab = np.linalg.solve(chol, sub[2:, :2])
    if np.any(1.0 - np.einsum("ij,ij->j", ab, ab) <= SINGULAR_TOL):
        raise CollinearError("endpoint determined by the conditioning set")
    try:
        prec = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise CollinearError("collinear conditioning set") from exc
    denom = prec[0, 0] * prec[1, 1]
    if not np.isfinite(denom) or denom <= 0:
        raise CollinearError("collinear conditioning set")
    r = -prec[0, 1] / math.sqrt(denom)
    return float(np.clip(r, -1.0, 1.0))


def partial_correlation(data: np.ndarray, i: int, j: int, cond: Iterable[int] = ()) -> float:
    """Partial correlation of columns ``i`` and ``j`` of ``data`` given ``cond``."""
    cond = list(cond)
    if i == j or i in cond or j in cond or len(set(cond)) != len(cond):
        raise ValueError("i, j must be distinct and outside a duplicate-free conditioning set")
    n = data.shape[0]
    if n <= len(cond) + 3:
        raise ValueError(f"need more than {len(cond) + 3} rows, got {n}")
    cols = [min(i, j), max(i, j), *cond]
    R, _ = correlation_matrix(data[:, cols])
    return partial_correlation_from_corr(R, 0, 1, list(range(2, len(cols))))


def residual_partial_correlation(data: np.ndarray, i: int, j: int, cond: Iterable[int] = ()) -> float:
    """Independent route: correlate least-squares residuals of i and j on cond."""
    cond = list(cond)
    x = data[:, i] - data[:, i].mean()
    y = data[:, j] - data[:, j].mean()
    if cond:
        Z = data[:, cond] - data[:, cond].mean(axis=0)
        x = x - Z @ np.linalg.lstsq(Z, x, rcond=None)[0]
        y = y - Z @ np.linalg.lstsq(Z, y, rcond=None)[0]
    return float(np.dot(x, y) / math.sqrt(np.dot(x, x) * np.dot(y, y)))


def edge_strength(abs_rs: Iterable[float]) -> float:
    """Weakest |partial correlation| among all tests an edge survived."""
    vals = [abs(v) for v in abs_rs]
    if not vals:
        raise ValueError("edge was never tested")
    return min(vals)
