"""
Comparison methods.

* ``rsvd_fixed_rank``: randomized SVD with a rank fixed in advance.
* ``arrf``: the adaptive randomized range finder of Halko, Martinsson and
  Tropp (2011, Alg. 4.2), which watches a sliding window of residual probes.
* ``randqb_ei``: the blocked QB factorization with a Frobenius error
  indicator of Yu, Gu and Li (2018), which tracks ``||A||_F^2 - ||B||_F^2``.

All three draw their Gaussian test vectors from the same streams as the
adaptive range finder, so runs with equal seeds are paired.
"""

from collections import deque

import numpy as np

from .errors import InvalidArgumentError
from .grsvd import svd_from_basis
from .matcore import (
    as_generator,
    check_finite,
    draw_gaussian,
    economy_qr,
    frobenius_norm,
    hermitian_transpose,
    matmul,
)
from .rangefinder import RangeBasis, resolve_block

# Halko et al.: ||(I - QQ^H) A|| <= 10 sqrt(2/pi) max_i ||(I - QQ^H) A w_i||
# with probability at least 1 - min(m, n) 10^-probes
WINDOW_CONSTANT = 10 * np.sqrt(2 / np.pi)


def rsvd_fixed_rank(A, ell, stream=None, oversampling=0, method="gram"):
    """Randomized SVD of rank ``ell`` from ``ell + oversampling`` Gaussian samples."""
    A = check_finite(A)
    m, n = A.shape
    p = min(m, n)
    if not 1 <= ell <= p:
        raise InvalidArgumentError(f"ell must lie in [1, {p}], got {ell}")
    if oversampling < 0:
        raise InvalidArgumentError("oversampling must be nonnegative")
    cols = min(ell + oversampling, p)
    Omega = draw_gaussian(as_generator(stream), n, cols)
    Q, _ = economy_qr(matmul(A, Omega))
    F = svd_from_basis(A, Q, 0.0, method)
    if F.k > ell:
        F.U, F.sigma, F.Vh = F.U[:, :ell], F.sigma[:ell], F.Vh[:ell]
    return F


def arrf(A, tol, probes=10, stream=None, max_cols=None):
    """Adaptive range finder stopping when ``probes`` consecutive residual
    samples all have norm below ``tol / (10 sqrt(2/pi))``.
    """
    A = check_finite(A)
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if probes < 1:
        raise InvalidArgumentError(f"probes must be at least 1, got {probes}")
    m, n = A.shape
    cap = min(m, n) if max_cols is None else max_cols
    rng = as_generator(stream)
    limit = tol / WINDOW_CONSTANT

    window = deque(matmul(A, draw_gaussian(rng, n, 1))[:, 0] for _ in range(probes))
    cols = []
    Q = np.zeros((m, 0), dtype=A.dtype)
    trace = []
    samples = probes
    while len(cols) < cap and max(np.linalg.norm(y) for y in window) > limit:
        y = window.popleft()
        if cols:
            y = y - matmul(Q, matmul(hermitian_transpose(Q), y[:, None]))[:, 0]
        nrm = np.linalg.norm(y)
        trace.append(np.array([nrm]))
        if nrm > 0:
            q = y / nrm
            cols.append(q)
            Q = np.column_stack(cols)
            window = deque(w - q * np.vdot(q, w) for w in window)
        fresh = matmul(A, draw_gaussian(rng, n, 1))
        samples += 1
        if cols:
            fresh = fresh - matmul(Q, matmul(hermitian_transpose(Q), fresh))
        window.append(fresh[:, 0])
    early = max(np.linalg.norm(y) for y in window) <= limit
    return RangeBasis(Q=Q, eps=float("nan"), a_fro=frobenius_norm(A), threshold=limit,
                      diag_trace=trace, terminated_early=early, samples=samples)


def randqb_ei(A, eps, block=None, stream=None):
    """Blocked QB with error indicator.

    Returns ``(Q, B, k)`` with ``B = Q^H A`` and, unless the column budget
    ``min(m, n)`` ran out, ``||A||_F^2 - ||B||_F^2 <= eps ||A||_F^2``.
    """
    A = check_finite(A)
    if not 0 <= eps < 1:
        raise InvalidArgumentError(f"eps must lie in [0, 1), got {eps}")
    m, n = A.shape
    block = resolve_block(n, block)
    if block < 1:
        raise InvalidArgumentError(f"block must be positive, got {block}")
    cap = min(m, n)
    rng = as_generator(stream)
    E = frobenius_norm(A) ** 2
    target = eps * E
    Q = np.zeros((m, 0), dtype=A.dtype)
    B = np.zeros((0, n), dtype=A.dtype)
    while E > target and Q.shape[1] < cap:
        f = min(block, cap - Q.shape[1])
        Omega = draw_gaussian(rng, n, f)
        Y = matmul(A, Omega)
        if Q.shape[1]:
            Y = Y - matmul(Q, matmul(B, Omega))
        Qi, _ = economy_qr(Y)
        if Q.shape[1]:
            Qi, _ = economy_qr(Qi - matmul(Q, matmul(hermitian_transpose(Q), Qi)))
        Bi = matmul(hermitian_transpose(Qi), A)
        rows = np.sum(np.abs(Bi) ** 2, axis=1)
        remaining = E - np.cumsum(rows)
        hit = np.flatnonzero(remaining <= target)
        take = int(hit[0]) + 1 if hit.size else f
        Q = np.hstack([Q, Qi[:, :take]])
        B = np.vstack([B, Bi[:take]])
        E = remaining[take - 1]
    return Q, B, Q.shape[1]
