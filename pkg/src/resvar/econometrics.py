"""Numerical core: multivariate least squares, Cholesky factor, structural
shocks and the augmented Dickey-Fuller test.

All functions are pure and operate on plain numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantSeries,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SeriesTooShort,
    TooFewObservations,
)

# smallest admissible singular value of a design matrix, relative to the largest
RANK_TOL = 1e-10
SYMMETRY_TOL = 1e-10
# 5% asymptotic critical value, constant-only Dickey-Fuller regression
ADF_CRITICAL_5PCT = -2.86


@dataclass(frozen=True)
class LeastSquaresFit:
    """Result of an equation-by-equation least-squares fit.

    Attributes
    ----------
    coefficients : (K, M) array, one row per endogenous equation
    residuals : (T, K) array
    sigma : (K, K) residual covariance
    n_obs, n_regressors : T and M
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    sigma: np.ndarray
    n_obs: int
    n_regressors: int


@dataclass(frozen=True)
class TriangularFactor:
    """Lower-triangular instantaneous-effect matrix with unit shock variances."""

    b: np.ndarray

    @property
    def k(self) -> int:
        return self.b.shape[0]

    def covariance(self) -> np.ndarray:
        return self.b @ self.b.T


def _as_matrix(a, name) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    return a


def ols_multivariate(y, x, dof_adjust: bool = True) -> LeastSquaresFit:
    """Least squares of every column of ``y`` on the columns of ``x``.

    Solved through a reduced QR factorisation of ``x``; the normal equations
    are never formed. ``sigma`` uses the ``T - M`` denominator when
    ``dof_adjust`` is set and ``T`` otherwise.
    """
    y = _as_matrix(y, "y")
    x = _as_matrix(x, "x")
    t_obs, m = x.shape
    if y.shape[0] != t_obs:
        raise DimensionMismatch(f"y has {y.shape[0]} rows but x has {t_obs}")
    if t_obs <= m:
        raise TooFewObservations(f"need more observations than regressors (T={t_obs}, M={m})")

    q, r = np.linalg.qr(x, mode="reduced")
    # singular values of x equal those of r
    sv = np.linalg.svd(r, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        diag = np.abs(np.diag(r))
        bad = np.flatnonzero(diag <= RANK_TOL * diag.max())
        column = int(bad[0]) if bad.size else int(np.argmin(diag))
        raise RankDeficient(column)

    beta = _back_substitute(r, q.T @ y)
    residuals = y - x @ beta
    denom = t_obs - m if dof_adjust else t_obs
    sigma = residuals.T @ residuals / denom
    sigma = 0.5 * (sigma + sigma.T)
    return LeastSquaresFit(
        coefficients=beta.T.copy(),
        residuals=residuals,
        sigma=sigma,
        n_obs=t_obs,
        n_regressors=m,
    )


def _back_substitute(r: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    m = r.shape[0]
    out = np.zeros_like(rhs)
    for i in range(m - 1, -1, -1):
        out[i] = (rhs[i] - r[i, i + 1:] @ out[i + 1:]) / r[i, i]
    return out


def cholesky_lower(sigma) -> TriangularFactor:
    """Lower Cholesky factor ``b`` with positive diagonal, ``b @ b.T == sigma``.

    Raises NotSymmetric if ``sigma`` deviates from symmetry by more than
    1e-10 relative to its largest entry, and NotPositiveDefinite (carrying
    the failing pivot index) when a pivot is not strictly positive.
    """
    a = _as_matrix(sigma, "sigma")
    k = a.shape[0]
    if a.shape != (k, k):
        raise DimensionMismatch(f"sigma must be square, got {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * max(scale, 1.0):
        raise NotSymmetric("covariance matrix is not symmetric")
    a = 0.5 * (a + a.T)

    b = np.zeros_like(a)
    for j in range(k):
        pivot = a[j, j] - b[j, :j] @ b[j, :j]
        if not pivot > 0.0:
            raise NotPositiveDefinite(j)
        b[j, j] = np.sqrt(pivot)
        b[j + 1:, j] = (a[j + 1:, j] - b[j + 1:, :j] @ b[j, :j]) / b[j, j]
    return TriangularFactor(b=b)


def structural_shocks(fit: LeastSquaresFit, factor: TriangularFactor) -> np.ndarray:
    """Recover structural shocks row-wise by solving ``b u_t = e_t``."""
    return forward_substitute(factor.b, fit.residuals)


def forward_substitute(b: np.ndarray, eps: np.ndarray) -> np.ndarray:
    eps = _as_matrix(eps, "residuals")
    k = b.shape[0]
    if b.shape != (k, k) or eps.shape[1] != k:
        raise DimensionMismatch(
            f"factor is {b.shape} but residuals have {eps.shape[1]} columns"
        )
    u = np.empty_like(eps)
    for j in range(k):
        u[:, j] = (eps[:, j] - u[:, :j] @ b[j, :j]) / b[j, j]
    return u


def adf_test(series, max_lag: int = 7) -> dict:
    """Augmented Dickey-Fuller test with an intercept and ``max_lag`` lagged
    differences.

    Returns ``{"statistic": t-ratio on y_{t-1}, "reject_at_5pct": bool}``;
    rejection uses the asymptotic 5% value -2.86.
    """
    y = np.asarray(series, dtype=float).ravel()
    if y.size < 50:
        raise SeriesTooShort(f"ADF needs at least 50 observations, got {y.size}")
    if np.ptp(y) == 0.0:
        raise ConstantSeries("ADF is undefined for a constant series")

    dy = np.diff(y)
    n = dy.size - max_lag
    cols = [np.ones(n), y[max_lag:-1]]
    for i in range(1, max_lag + 1):
        cols.append(dy[max_lag - i:-i])
    x = np.column_stack(cols)
    target = dy[max_lag:]

    fit = ols_multivariate(target, x, dof_adjust=True)
    q, r = np.linalg.qr(x, mode="reduced")
    r_inv = _back_substitute(r, np.eye(r.shape[0]))
    se = np.sqrt(fit.sigma[0, 0] * (r_inv[1] @ r_inv[1]))
    stat = float(fit.coefficients[0, 1] / se)
    return {"statistic": stat, "reject_at_5pct": bool(stat < ADF_CRITICAL_5PCT)}
