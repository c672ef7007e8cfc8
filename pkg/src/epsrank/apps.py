"""
Application pipelines: low-rank video denoising and ridge regression with a
data-driven (HKB) shrinkage parameter.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .datagen import FrameStack, casorati, uncasorati
from .errors import InvalidArgumentError, UndefinedMetricError
from .gri import apply, gri_right
from .grsvd import grsvd, reconstruct
from .matcore import check_finite, hermitian_transpose
from .metrics import (
    energy_ratio,
    eps_rank_from_spectrum,
    epi_stack,
    psnr,
    reconstruction_error,
    singular_values,
)

PILOTS = ("grsvd", "dense", "ols")


@dataclass
class DenoiseReport:
    mse: float
    psnr_db: float
    epi: float
    k: int
    er: float
    wall_seconds: float


def denoise_stack(S, eps, block=None, stream=None, method="gram"):
    """Truncate the Casorati matrix of ``S`` at precision ``eps``.

    Returns the denoised stack (clipped to [0, 255]) and a report whose
    metrics compare it with the input stack. ``wall_seconds`` covers the
    factorization and reconstruction only.
    """
    A = casorati(S)
    t0 = time.perf_counter()
    F = grsvd(A, eps, block, stream, method=method)
    Ahat = reconstruct(F)
    wall = time.perf_counter() - t0
    out = FrameStack(np.clip(uncasorati(Ahat, S.height, S.width).data, 0.0, 255.0))
    mse = reconstruction_error(A, casorati(out))
    try:
        edge = epi_stack(S.data, out.data)
    except UndefinedMetricError:
        edge = float("nan")
    report = DenoiseReport(
        mse=mse,
        psnr_db=psnr(mse) if mse > 0 else float("inf"),
        epi=edge,
        k=F.k,
        er=energy_ratio(singular_values(A), F.k),
        wall_seconds=wall,
    )
    return out, report


def add_intercept(X):
    X = np.asarray(X)
    return np.hstack([X, np.ones((X.shape[0], 1), dtype=X.dtype)])


def ridge_fit(X, y, lam, eps, block=None, stream=None, intercept=False):
    """Ridge coefficients ``(X^H X + lam I)^{-1} X^H y`` through the factored inverse.

    With ``intercept`` an all-ones column is appended and its coefficient
    is the last entry of the result.
    """
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    X = check_finite(add_intercept(X) if intercept else X, "X")
    y = np.asarray(y).reshape(-1)
    if y.size != X.shape[0]:
        raise InvalidArgumentError(f"y has {y.size} entries, X has {X.shape[0]} rows")
    P = gri_right(X, lam, eps, block, stream)
    return apply(P, hermitian_transpose(X) @ y)


def dense_ridge_fit(X, y, lam, intercept=False):
    """Reference ridge solution by a dense Cholesky solve."""
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    X = check_finite(add_intercept(X) if intercept else X, "X")
    y = np.asarray(y).reshape(-1)
    G = hermitian_transpose(X) @ X + lam * np.eye(X.shape[1])
    return la.cho_solve(la.cho_factor(G, lower=True), hermitian_transpose(X) @ y)


def prediction_mse(X, y, beta, intercept=False):
    X = add_intercept(X) if intercept else np.asarray(X)
    r = np.asarray(y).reshape(-1) - X @ beta
    return float(np.real(np.vdot(r, r)) / r.size)


def _pilot(X, y, eps, block, stream, pilot):
    if pilot == "grsvd":
        F = grsvd(X, eps, block, stream)
        U, s, Vh = F.U, F.sigma, F.Vh
    elif pilot == "dense":
        U, s, Vh = la.svd(X, full_matrices=False)
        k = eps_rank_from_spectrum(s, eps)
        U, s, Vh = U[:, :k], s[:k], Vh[:k]
    elif pilot == "ols":
        alpha, _, rank, _ = la.lstsq(X, y)
        return alpha, rank
    else:
        raise InvalidArgumentError(f"pilot must be one of {PILOTS}, got {pilot!r}")
    alpha = hermitian_transpose(Vh) @ ((hermitian_transpose(U) @ y) / s)
    return alpha, s.size


def hkb_lambda(X, y, eps, block=None, stream=None, pilot="grsvd", intercept=False):
    """HKB ridge parameter ``n s2 / sum(alpha^2)``.

    ``alpha`` is a pilot least-squares estimate and ``s2 = ||y - X alpha||^2
    / (m - k)`` its residual variance, with ``k`` the pilot's rank. The
    default pilot is the eps-rank truncated pseudoinverse from ``grsvd``;
    ``pilot="dense"`` truncates an exact SVD at the oracle eps-rank and
    ``pilot="ols"`` uses a plain least-squares solve.
    """
    X = check_finite(add_intercept(X) if intercept else X, "X")
    y = np.asarray(y).reshape(-1)
    m, n = X.shape
    alpha, k = _pilot(X, y, eps, block, stream, pilot)
    if m <= k:
        raise InvalidArgumentError(f"need more observations ({m}) than the pilot rank ({k})")
    res = y - X @ alpha
    s2 = float(np.real(np.vdot(res, res))) / (m - k)
    denom = float(np.real(np.vdot(alpha, alpha)))
    if denom == 0:
        raise UndefinedMetricError("pilot coefficients are all zero; HKB is undefined")
    return n * s2 / denom
