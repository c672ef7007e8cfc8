"""
Precision-driven Gaussian range finders.

Both finders grow an orthonormal basis ``Q`` for the range of ``A`` from
Gaussian samples and stop as soon as a freshly projected sample is small
relative to ``||A||_F``:

    ||(I - Q Q^H) A w||  <=  ||A||_F * sqrt(eps / 2)

Because ``E ||(I - QQ^H) A w||^2 = ||(I - QQ^H) A||_F^2`` for a standard
Gaussian ``w``, a small sample is (with high probability) evidence that the
relative residual ``||A - QQ^H A||_F / ||A||_F`` is already below
``sqrt(eps)``, i.e. that ``Q.shape[1]`` has reached the eps-rank of ``A``.

``renormalize_columnwise`` draws one vector at a time and reads the sample
norm directly. ``block_rangefinder`` draws ``block`` vectors at once, takes a
QR factorization of the projected block and scans the diagonal of its
triangular factor, which carries the same information column by column
without ever forming ``Q^H A``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .matcore import (
    UNIT_ROUNDOFF,
    as_generator,
    check_finite,
    draw_gaussian,
    economy_qr,
    frobenius_norm,
    hermitian_transpose,
    matmul,
)
from .metrics import numerical_rank

DEFAULT_BLOCK = 32
EXACT_RANK_FACTOR = 64


@dataclass
class RangeBasis:
    """Orthonormal range basis together with the evidence that produced it.

    ``diag_trace`` holds, per sampled block, the magnitudes that were
    compared against ``threshold`` (for the stopping block only the entries
    up to and including the one that fired). ``terminated_early`` is true
    when the stopping rule fired and false when the column budget ran out.
    """

    Q: np.ndarray
    eps: float
    a_fro: float
    threshold: float
    diag_trace: list = field(default_factory=list)
    terminated_early: bool = False
    samples: int = 0

    @property
    def k(self):
        return self.Q.shape[1]


def stopping_threshold(a_fro, eps):
    """Sample-norm threshold ``||A||_F sqrt(eps/2)``.

    At ``eps == 0`` the threshold would be exactly zero, which round-off
    never reaches; ``64 u ||A||_F`` stands in so exact-rank detection still
    works in floating point.
    """
    if eps == 0:
        return EXACT_RANK_FACTOR * UNIT_ROUNDOFF * a_fro
    return a_fro * np.sqrt(eps / 2)


def _check_eps(eps):
    if not 0 <= eps < 1:
        raise InvalidArgumentError(f"eps must lie in [0, 1), got {eps}")


def _project_out(Q, Y, passes):
    if Q.shape[1] == 0:
        return Y
    Qh = hermitian_transpose(Q)
    for _ in range(passes):
        Y = Y - matmul(Q, matmul(Qh, Y))
    return Y


def resolve_block(n, block=None):
    """Default block size for an ``n``-column input (``min(32, n - 1)``)."""
    if block is None:
        block = min(DEFAULT_BLOCK, max(n - 1, 1))
    return block


def renormalize_columnwise(A, eps, max_cols=None, stream=None, reorth=False):
    """One-vector-at-a-time Gaussian re-normalization.

    Parameters
    ----------
    A : (m, n) array
    eps : float in [0, 1)
        Target energy loss; ``eps = 0`` asks for the exact numerical rank.
    max_cols : int, optional
        Column budget, defaults to ``min(m, n)``.
    stream : RngStream, Generator or int
    reorth : bool
        Project each sample twice (off by default).

    Returns
    -------
    RangeBasis
    """
    A = check_finite(A)
    _check_eps(eps)
    m, n = A.shape
    p = min(m, n)
    if max_cols is None:
        max_cols = p
    if not 1 <= max_cols <= p:
        raise InvalidArgumentError(f"max_cols must lie in [1, {p}], got {max_cols}")
    rng = as_generator(stream)
    a_fro = frobenius_norm(A)
    thr = stopping_threshold(a_fro, eps)
    cols = []
    trace = []
    early = False
    Q = np.zeros((m, 0), dtype=A.dtype)
    for _ in range(max_cols):
        w = draw_gaussian(rng, n, 1)
        v = _project_out(Q, matmul(A, w), 2 if reorth else 1)[:, 0]
        b = np.linalg.norm(v)
        trace.append(np.array([b]))
        if b <= thr:
            early = True
            break
        cols.append(v / b)
        Q = np.column_stack(cols)
    return RangeBasis(Q=Q, eps=eps, a_fro=a_fro, threshold=thr, diag_trace=trace,
                      terminated_early=early, samples=len(trace))


def block_rangefinder(A, eps, block=DEFAULT_BLOCK, stream=None, reorth=False):
    """Blocked precision-driven range finder.

    Samples ``A`` with Gaussian blocks of ``block`` columns (the last block
    takes the remainder of ``n``), projects each sample block against the
    basis found so far, QR-factors it, and scans the triangular diagonal.
    At the first entry ``|T[l, l]| <= ||A||_F sqrt(eps/2)`` the columns
    before it are kept and the search stops. The basis never exceeds
    ``min(m, n)`` columns.

    No reorthogonalization is done unless ``reorth`` is set, in which case
    each block is projected twice.
    """
    A = check_finite(A)
    _check_eps(eps)
    m, n = A.shape
    if not (1 <= block < n or block == n == 1):
        raise InvalidArgumentError(f"block must satisfy 1 <= block < n = {n}, got {block}")
    rng = as_generator(stream)
    a_fro = frobenius_norm(A)
    thr = stopping_threshold(a_fro, eps)
    cap = min(m, n)

    s, rest = divmod(n, block)
    sizes = [block] * s + ([rest] if rest else [])

    Q = np.zeros((m, 0), dtype=A.dtype)
    trace = []
    early = False
    samples = 0
    for f in sizes:
        Omega = draw_gaussian(rng, n, f)
        samples += f
        Y = _project_out(Q, matmul(A, Omega), 2 if reorth else 1)
        if Y.shape[1] > m:
            # more samples than rows: the surplus columns are dependent anyway
            Y = Y[:, :m]
        P, T = economy_qr(Y)
        diag = np.abs(np.diagonal(T)).real
        hits = np.flatnonzero(diag <= thr)
        take = int(hits[0]) if hits.size else diag.size
        room = cap - Q.shape[1]
        if take > room:
            trace.append(diag[:room])
            Q = np.hstack([Q, P[:, :room]])
            break
        if hits.size:
            trace.append(diag[:take + 1])
            Q = np.hstack([Q, P[:, :take]])
            early = True
            break
        trace.append(diag)
        Q = np.hstack([Q, P])
        if Q.shape[1] == cap:
            break
    return RangeBasis(Q=Q, eps=eps, a_fro=a_fro, threshold=thr, diag_trace=trace,
                      terminated_early=early, samples=samples)


def residual_energy(A, Q):
    """``||(I - QQ^H) A||_F^2`` evaluated as ``||A||_F^2 - ||Q^H A||_F^2``."""
    A = np.asarray(A)
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != A.shape[0]:
        raise InvalidArgumentError(f"basis shape {Q.shape} does not match A {A.shape}")
    k = Q.shape[1]
    a2 = frobenius_norm(A) ** 2
    if k == 0:
        return a2
    defect = np.linalg.norm(hermitian_transpose(Q) @ Q - np.eye(k))
    if defect > 1e-8 * np.sqrt(k):
        raise InvalidArgumentError(f"Q is not orthonormal (defect {defect:.3e})")
    b2 = frobenius_norm(hermitian_transpose(Q) @ A) ** 2
    return max(a2 - b2, 0.0)


def is_renormalization_matrix(A, Omega, rank_tol=1e-10):
    """Whether ``rank(A Omega) == rank(A)`` numerically."""
    A = np.asarray(A)
    Omega = np.asarray(Omega)
    if Omega.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"Omega has {Omega.shape[0]} rows, A has {A.shape[1]} columns")
    return numerical_rank(A, rank_tol) == numerical_rank(A @ Omega, rank_tol)


def write_diag_trace(path, basis):
    """Dump ``basis.diag_trace`` as CSV rows ``block_index,position,magnitude``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["block_index", "position", "magnitude"])
        for j, diag in enumerate(basis.diag_trace):
            for pos, mag in enumerate(diag):
                w.writerow([j, pos, format(float(mag), ".17g")])
