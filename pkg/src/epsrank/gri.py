"""
Approximate inverses of the regularized Gram matrices ``lam I + A A^H`` and
``lam I + A^H A``.

With ``A ~ Q B`` (``B = Q^H A``, ``k`` rows) the Sherman-Morrison-Woodbury
identity reduces both inverses to a ``k x k`` Cholesky factorization:

    left:   (lam I_m + A A^H)^-1 ~ I/lam + Q ((L L^H)^-1 - I/lam) Q^H,
            L L^H = lam I_k + B B^H
    right:  (lam I_n + A^H A)^-1 ~ I/lam - B^H (L L^H)^-1 B / lam^2,
            L L^H = I_k + B B^H / lam

The operator is kept in this factored form; ``apply`` uses two triangular
solves per call and ``materialize`` builds the dense matrix for checks.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DecompositionError, InternalConsistencyError, InvalidArgumentError
from .matcore import (
    check_finite,
    cholesky,
    hermitian_transpose,
    matmul,
    triangular_solve,
)
from .matio import read_matrix, write_matrix
from .rangefinder import block_rangefinder, resolve_block

SIDES = ("left", "right")


@dataclass(frozen=True)
class RegularizedInverse:
    side: str
    lam: float
    Q: np.ndarray
    B: np.ndarray
    L: np.ndarray
    eps: float = 0.0

    @property
    def k(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.Q.shape[0]

    @property
    def n(self):
        return self.B.shape[1]

    @property
    def size(self):
        """Order of the inverted matrix."""
        return self.m if self.side == "left" else self.n


def _gram_solve(L, Z):
    # (L L^H)^{-1} Z
    return triangular_solve(L, triangular_solve(L, Z), transposed=True)


def _build(A, lam, eps, block, stream, basis, side):
    A = check_finite(A)
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    if basis is None:
        basis = block_rangefinder(A, eps, resolve_block(A.shape[1], block), stream)
    elif basis.Q.shape[0] != A.shape[0]:
        raise InvalidArgumentError("precomputed basis does not match A")
    Q = basis.Q
    B = matmul(hermitian_transpose(Q), A)
    G = matmul(B, hermitian_transpose(B))
    k = G.shape[0]
    S = lam * np.eye(k) + G if side == "left" else np.eye(k) + G / lam
    S = (S + hermitian_transpose(S)) / 2
    try:
        L = cholesky(S)
    except DecompositionError as exc:
        raise InternalConsistencyError(
            f"regularized k x k Gram matrix is not positive definite: {exc}") from exc
    return RegularizedInverse(side, float(lam), Q, B, L, basis.eps)


def gri_left(A, lam, eps, block=None, stream=None, basis=None):
    """Factored approximation of ``(lam I_m + A A^H)^{-1}``."""
    return _build(A, lam, eps, block, stream, basis, "left")


def gri_right(A, lam, eps, block=None, stream=None, basis=None):
    """Factored approximation of ``(lam I_n + A^H A)^{-1}``."""
    return _build(A, lam, eps, block, stream, basis, "right")


def apply(P, X):
    """``P X`` without forming the dense inverse (X may be a vector)."""
    X = np.asarray(X)
    vector = X.ndim == 1
    if vector:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != P.size:
        raise InvalidArgumentError(f"operand with {X.shape[0]} rows, operator has order {P.size}")
    lam = P.lam
    if P.k == 0:
        Y = X / lam
    elif P.side == "left":
        Z = matmul(hermitian_transpose(P.Q), X)
        Y = X / lam + matmul(P.Q, _gram_solve(P.L, Z) - Z / lam)
    else:
        Z = matmul(P.B, X)
        Y = X / lam - matmul(hermitian_transpose(P.B), _gram_solve(P.L, Z)) / lam ** 2
    return Y[:, 0] if vector else Y


def materialize(P):
    """Dense matrix of the approximate inverse."""
    N = P.size
    dtype = np.result_type(P.Q, P.B, float)
    out = np.eye(N, dtype=dtype) / P.lam
    if P.k == 0:
        return out
    Linv = triangular_solve(P.L, np.eye(P.k, dtype=P.L.dtype))
    core = hermitian_transpose(Linv) @ Linv
    if P.side == "left":
        M = core - np.eye(P.k) / P.lam
        out += P.Q @ M @ hermitian_transpose(P.Q)
    else:
        out -= hermitian_transpose(P.B) @ core @ P.B / P.lam ** 2
    return out


def dense_inverse(A, lam, side="left"):
    """Reference ``(lam I + A A^H)^{-1}`` or ``(lam I + A^H A)^{-1}`` by dense Cholesky."""
    A = check_finite(A)
    if side not in SIDES:
        raise InvalidArgumentError(f"side must be 'left' or 'right', got {side!r}")
    G = A @ hermitian_transpose(A) if side == "left" else hermitian_transpose(A) @ A
    S = lam * np.eye(G.shape[0]) + G
    c = la.cho_factor(S, lower=True, check_finite=False)
    return la.cho_solve(c, np.eye(G.shape[0], dtype=S.dtype), check_finite=False)


def save_inverse(prefix, P):
    """Write a JSON manifest plus ``Q`` (left side only), ``B`` and ``L`` payloads."""
    prefix = os.fspath(prefix)
    manifest = {"side": P.side, "lambda": P.lam, "eps": P.eps, "m": P.m, "n": P.n, "k": P.k}
    if P.side == "left":
        write_matrix(prefix + "_Q.nlrm", P.Q)
    write_matrix(prefix + "_B.nlrm", P.B)
    write_matrix(prefix + "_L.nlrm", P.L)
    with open(prefix + "_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def load_inverse(prefix):
    prefix = os.fspath(prefix)
    with open(prefix + "_manifest.json", encoding="utf-8") as fh:
        man = json.load(fh)
    B = read_matrix(prefix + "_B.nlrm")
    L = read_matrix(prefix + "_L.nlrm")
    if man["side"] == "left":
        Q = read_matrix(prefix + "_Q.nlrm")
    else:
        Q = np.zeros((man["m"], man["k"]), dtype=B.dtype)
    return RegularizedInverse(man["side"], man["lambda"], Q, B, L, man["eps"])
