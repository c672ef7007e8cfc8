"""
Dense kernels shared by every algorithm in the package.

Matrices are plain 2-D numpy arrays of dtype float64 or complex128. The
functions here wrap LAPACK through numpy/scipy and pin down the conventions
the randomized algorithms depend on: real nonnegative QR diagonals,
descending Hermitian eigenvalues, lower-triangular Cholesky factors, and a
seeded Gaussian sampler that is deterministic per ``(seed, stream_id)``.

``matmul`` additionally feeds a multiply-volume counter (see
``count_flops``) used by the benchmark harness as a hardware-independent
cost proxy.
"""

import contextlib
import contextvars
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DecompositionError, InvalidArgumentError, SingularTriangularError

UNIT_ROUNDOFF = np.finfo(np.float64).eps / 2


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream index identifying one reproducible random sequence.

    The underlying generator is Philox (counter based) keyed through a
    ``SeedSequence`` whose spawn key is ``stream_id``; normal variates come
    from numpy's ziggurat transform. Equal ``(seed, stream_id)`` pairs give
    identical draws.
    """

    seed: int
    stream_id: int = 0

    def generator(self):
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(stream):
    """Accept an RngStream, a Generator, an int seed or None."""
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    if stream is None or isinstance(stream, (int, np.integer)):
        return RngStream(0 if stream is None else int(stream)).generator()
    raise InvalidArgumentError(f"cannot build a random generator from {type(stream).__name__}")


def draw_gaussian(rng, rows, cols):
    # filled column by column so that drawing an n x f block consumes the
    # generator exactly like f successive n-vectors would
    return rng.standard_normal((cols, rows)).T


def gaussian_matrix(rows, cols, stream):
    """Real ``rows x cols`` matrix of i.i.d. N(0, 1) entries.

    The matrix is real even when it will multiply a complex operand.
    """
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"gaussian_matrix needs positive dimensions, got {rows}x{cols}")
    return draw_gaussian(as_generator(stream), rows, cols)


# -- cost accounting ---------------------------------------------------------

_flop_counter = contextvars.ContextVar("epsrank_flop_counter", default=None)


class FlopCounter:
    """Accumulates multiply volumes ``m * n * k`` of every ``matmul`` call."""

    def __init__(self):
        self.volume = 0
        self.calls = 0

    def add(self, volume):
        self.volume += int(volume)
        self.calls += 1


@contextlib.contextmanager
def count_flops():
    counter = FlopCounter()
    token = _flop_counter.set(counter)
    try:
        yield counter
    finally:
        _flop_counter.reset(token)


def _as_matrix(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.iscomplexobj(A):
        A = A.astype(np.float64, copy=False)
    else:
        A = A.astype(np.complex128, copy=False)
    return A


def check_finite(A, name="A"):
    A = _as_matrix(A, name)
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return A


# -- kernels -----------------------------------------------------------------

def matmul(A, B):
    """Dense product ``A @ B``; a real operand is promoted if the other is complex."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise InvalidArgumentError("matmul expects 2-D operands")
    if A.shape[1] != B.shape[0]:
        raise InvalidArgumentError(f"matmul dimension mismatch: {A.shape} @ {B.shape}")
    counter = _flop_counter.get()
    if counter is not None:
        counter.add(A.shape[0] * A.shape[1] * B.shape[1])
    return A @ B


def hermitian_transpose(A):
    A = np.asarray(A)
    return A.conj().T if np.iscomplexobj(A) else A.T


def economy_qr(A):
    """Thin QR with ``R`` carrying a real nonnegative diagonal.

    Returns ``Q`` (rows x cols, orthonormal columns) and upper-triangular
    ``R`` (cols x cols). Requires ``rows >= cols``.
    """
    A = _as_matrix(A)
    m, n = A.shape
    if m < n:
        raise InvalidArgumentError(f"economy_qr needs rows >= cols, got {m}x{n}")
    if n == 0:
        return np.zeros((m, 0), dtype=A.dtype), np.zeros((0, 0), dtype=A.dtype)
    Q, R = la.qr(A, mode="economic", check_finite=False)
    d = np.diagonal(R)
    mag = np.abs(d)
    phase = np.ones_like(d)
    nz = mag > 0
    phase[nz] = d[nz] / mag[nz]
    # A = (Q D)(D^H R) with D = diag(phase), |phase| = 1
    Q = Q * phase
    R = phase.conj()[:, None] * R
    R[np.diag_indices(n)] = mag
    return Q, R


def hermitian_eig(C):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input is symmetrized as ``(C + C^H) / 2`` first so that round-off
    asymmetry (e.g. from forming ``B B^H``) is absorbed. Ties keep LAPACK's
    order (stable sort).
    """
    C = _as_matrix(C, "C")
    if C.shape[0] != C.shape[1]:
        raise InvalidArgumentError(f"hermitian_eig needs a square matrix, got {C.shape}")
    if C.shape[0] == 0:
        return np.zeros((0, 0), dtype=C.dtype), np.zeros(0)
    C = (C + hermitian_transpose(C)) / 2
    w, U = la.eigh(C, check_finite=False)
    order = np.argsort(-w, kind="stable")
    return U[:, order], w[order]


def cholesky(S):
    """Lower-triangular ``L`` with ``L L^H = S`` and positive real diagonal."""
    S = _as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise InvalidArgumentError(f"cholesky needs a square matrix, got {S.shape}")
    if S.shape[0] == 0:
        return np.zeros((0, 0), dtype=S.dtype)
    try:
        return la.cholesky(S, lower=True, check_finite=False)
    except la.LinAlgError as exc:
        raise DecompositionError(f"Cholesky factorization failed: {exc}") from exc


def triangular_solve(L, B, side="left", transposed=False):
    """Solve with a lower-triangular factor.

    ``side="left"``: returns X with ``op(L) X = B``;
    ``side="right"``: returns X with ``X op(L) = B``,
    where ``op(L)`` is ``L^H`` when ``transposed`` else ``L``.
    """
    L = _as_matrix(L, "L")
    B = np.asarray(B)
    vector = B.ndim == 1
    if vector:
        B = B[:, None]
    if L.shape[0] != L.shape[1]:
        raise InvalidArgumentError(f"triangular factor must be square, got {L.shape}")
    if np.any(np.diagonal(L) == 0):
        raise SingularTriangularError("triangular factor has a zero diagonal entry")
    if side == "left":
        if B.shape[0] != L.shape[0]:
            raise InvalidArgumentError(f"triangular_solve mismatch: {L.shape} vs {B.shape}")
        X = la.solve_triangular(L, B, lower=True, trans="C" if transposed else "N",
                                check_finite=False)
    elif side == "right":
        if B.shape[1] != L.shape[0]:
            raise InvalidArgumentError(f"triangular_solve mismatch: {B.shape} vs {L.shape}")
        # X op(L) = B  <=>  op(L)^H X^H = B^H
        Xh = la.solve_triangular(L, hermitian_transpose(B), lower=True,
                                 trans="N" if transposed else "C", check_finite=False)
        X = hermitian_transpose(Xh)
    else:
        raise InvalidArgumentError(f"side must be 'left' or 'right', got {side!r}")
    return X[:, 0] if vector else X


def frobenius_norm(A):
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A.reshape(-1)))
