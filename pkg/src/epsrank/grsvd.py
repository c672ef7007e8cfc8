"""
Truncated SVD at a requested precision.

The range finder supplies ``Q`` with ``k`` columns; then ``B = Q^H A`` and
the small Gram matrix ``C = B B^H = U L U^H`` give

    U_hat = Q U,   sigma = sqrt(L),   Vh_hat = L^{-1/2} U^H B.

Only ``k x k`` and ``k x n`` work is needed after sampling.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import InvalidArgumentError
from .matcore import (
    UNIT_ROUNDOFF,
    check_finite,
    hermitian_eig,
    hermitian_transpose,
    matmul,
)
from .matio import read_matrix, write_matrix
from .rangefinder import block_rangefinder, resolve_block


@dataclass
class SvdApprox:
    U: np.ndarray
    sigma: np.ndarray
    Vh: np.ndarray
    eps: float
    basis: object = None

    @property
    def k(self):
        return self.sigma.size

    @property
    def shape(self):
        return (self.U.shape[0], self.Vh.shape[1])

    def reconstruct(self):
        return reconstruct(self)


def reconstruct(F):
    """``U diag(sigma) Vh``; an empty factorization gives the zero matrix."""
    if F.k == 0:
        dtype = np.result_type(F.U, F.Vh)
        return np.zeros(F.shape, dtype=dtype)
    return (F.U * F.sigma) @ F.Vh


def svd_from_basis(A, Q, eps, method="gram"):
    """Project ``A`` onto ``range(Q)`` and factor the projection.

    ``method="gram"`` eigendecomposes ``B B^H``; ``method="svd"`` takes a
    direct SVD of ``B`` instead, which avoids squaring the condition number.
    """
    m, n = A.shape
    k = Q.shape[1]
    dtype = np.result_type(A, Q)
    if k == 0:
        return SvdApprox(np.zeros((m, 0), dtype), np.zeros(0), np.zeros((0, n), dtype), eps)
    B = matmul(hermitian_transpose(Q), A)
    if method == "gram":
        W, lam = hermitian_eig(matmul(B, hermitian_transpose(B)))
        lam = np.maximum(lam, 0.0)
        keep = lam > k * UNIT_ROUNDOFF * lam[0]
        W, lam = W[:, keep], lam[keep]
        sigma = np.sqrt(lam)
        Vh = matmul(hermitian_transpose(W), B) / sigma[:, None]
    elif method == "svd":
        W, sigma, Vh = la.svd(B, full_matrices=False, check_finite=False)
        keep = sigma ** 2 > k * UNIT_ROUNDOFF * sigma[0] ** 2
        W, sigma, Vh = W[:, keep], sigma[keep], Vh[keep]
    else:
        raise InvalidArgumentError(f"method must be 'gram' or 'svd', got {method!r}")
    return SvdApprox(matmul(Q, W), sigma, Vh, eps)


def grsvd(A, eps, block=None, stream=None, method="gram", basis=None, reorth=False):
    """Approximate SVD whose rank is chosen by the precision target ``eps``.

    Parameters
    ----------
    A : (m, n) array
    eps : float in [0, 1)
        Relative energy allowed to be lost; the result satisfies
        ``||A - A_hat||_F <= sqrt(eps) ||A||_F`` with high probability.
    block : int, optional
        Range-finder block size, default ``min(32, n - 1)``.
    stream : RngStream, Generator or int
    method : {"gram", "svd"}
    basis : RangeBasis, optional
        Reuse an existing sketch instead of running the range finder.
    reorth : bool
        Passed to the range finder.

    Returns
    -------
    SvdApprox
        With the range basis attached as ``basis``.
    """
    A = check_finite(A)
    if basis is None:
        basis = block_rangefinder(A, eps, resolve_block(A.shape[1], block), stream, reorth=reorth)
    elif basis.Q.shape[0] != A.shape[0]:
        raise InvalidArgumentError("precomputed basis does not match A")
    F = svd_from_basis(A, basis.Q, eps, method)
    F.basis = basis
    return F


def save_svd(prefix, F):
    """Write ``<prefix>_U.nlrm``, ``_sigma.nlrm``, ``_Vh.nlrm`` and ``_manifest.json``."""
    prefix = os.fspath(prefix)
    write_matrix(prefix + "_U.nlrm", F.U)
    write_matrix(prefix + "_sigma.nlrm", np.asarray(F.sigma, dtype=float)[:, None])
    write_matrix(prefix + "_Vh.nlrm", F.Vh)
    manifest = {"k": int(F.k), "eps": float(F.eps), "m": int(F.shape[0]), "n": int(F.shape[1])}
    with open(prefix + "_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def load_svd(prefix):
    prefix = os.fspath(prefix)
    with open(prefix + "_manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    sigma = read_matrix(prefix + "_sigma.nlrm").real.reshape(-1)
    return SvdApprox(read_matrix(prefix + "_U.nlrm"), sigma,
                     read_matrix(prefix + "_Vh.nlrm"), manifest["eps"])
