"""
Rank oracle and evaluation metrics.

Everything here is a reference computation: it may use a full dense SVD and
is meant for checking the randomized algorithms, not for speed.
"""

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as la

from .errors import InvalidArgumentError, UndefinedMetricError

PEAK = 255.0
LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


@dataclass
class ErrorReport:
    e_mse: float
    e_sigma: float
    e_u: float
    e_v: float
    energy_ratio: float
    k: int

    def as_dict(self):
        return asdict(self)


def singular_values(A):
    A = np.asarray(A)
    if A.size == 0:
        return np.zeros(0)
    return la.svdvals(A, check_finite=False)


def numerical_rank(A, rank_tol=1e-10):
    """Count of singular values above ``rank_tol * sigma_max`` (0 for A = 0)."""
    sv = singular_values(A)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def eps_rank_from_spectrum(sv, eps):
    """Smallest ``s`` whose leading ``s`` squared values keep ``>= 1 - eps`` of the energy."""
    if not 0 <= eps < 1:
        raise InvalidArgumentError(f"eps must lie in [0, 1), got {eps}")
    sv = np.sort(np.abs(np.asarray(sv, dtype=float)))[::-1]
    energy = sv ** 2
    total = energy.sum()
    if total == 0:
        raise InvalidArgumentError("eps-rank is undefined for a zero matrix")
    # tails[s] = energy left out when keeping the leading s values; summing
    # from the small end keeps the tail accurate even far below total * u
    tails = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]])
    return int(np.flatnonzero(tails <= eps * total)[0])


def eps_rank_oracle(A, eps):
    return eps_rank_from_spectrum(singular_values(A), eps)


def reconstruction_error(A, Ahat):
    """Relative Frobenius error ``||A - Ahat||_F / ||A||_F``."""
    A = np.asarray(A)
    Ahat = np.asarray(Ahat)
    if A.shape != Ahat.shape:
        raise InvalidArgumentError(f"shape mismatch: {A.shape} vs {Ahat.shape}")
    nrm = np.linalg.norm(A)
    if nrm == 0:
        raise InvalidArgumentError("relative error is undefined for A = 0")
    return float(np.linalg.norm(A - Ahat) / nrm)


def _sv_pair(sv_exact, sv_approx, r):
    s = np.asarray(sv_exact, dtype=float)
    t = np.asarray(sv_approx, dtype=float)
    if r < 1 or s.size < r or t.size < r:
        raise InvalidArgumentError(f"need at least r = {r} values, got {s.size} and {t.size}")
    s, t = s[:r], t[:r]
    if np.any(s == 0):
        raise InvalidArgumentError("exact singular value is zero inside the compared range")
    return s, t


def singular_value_error(sv_exact, sv_approx, r):
    """``max_{i <= r} |s_i^2 - t_i^2| / s_i^2``."""
    s, t = _sv_pair(sv_exact, sv_approx, r)
    return float(np.max(np.abs(s ** 2 - t ** 2) / s ** 2))


def singular_value_error_unsquared(sv_exact, sv_approx, r):
    """``max_{i <= r} |s_i - t_i| / s_i``, the unsquared companion of the above."""
    s, t = _sv_pair(sv_exact, sv_approx, r)
    return float(np.max(np.abs(s - t) / s))


def orthogonality_defect(U):
    """``||U^H U - I||_F / sqrt(cols)``; 0 for an empty basis."""
    U = np.asarray(U)
    k = U.shape[1]
    if k == 0:
        return 0.0
    G = U.conj().T @ U
    return float(np.linalg.norm(G - np.eye(k)) / np.sqrt(k))


def energy_ratio(sv, k):
    sv = np.asarray(sv, dtype=float)
    if not 0 <= k <= sv.size:
        raise InvalidArgumentError(f"k = {k} outside [0, {sv.size}]")
    e = sv ** 2
    total = e.sum()
    if total == 0:
        raise InvalidArgumentError("energy ratio is undefined for an all-zero spectrum")
    return float(e[:k].sum() / total)


def psnr(e_mse):
    """``10 log10(255^2 / e_mse)``.

    ``e_mse`` is the relative Frobenius reconstruction error, not a per-pixel
    mean squared error, so this is not the textbook PSNR.
    """
    if not e_mse > 0:
        raise InvalidArgumentError(f"PSNR needs a positive error, got {e_mse}")
    return float(10 * np.log10(PEAK ** 2 / e_mse))


def laplacian_filter(img):
    """4-neighbour Laplacian on interior pixels; output is (h-2) x (w-2)."""
    img = np.asarray(img, dtype=float)
    return (img[:-2, 1:-1] + img[2:, 1:-1] + img[1:-1, :-2] + img[1:-1, 2:]
            - 4 * img[1:-1, 1:-1])


def epi(A, Ahat):
    """Edge preservation index between an image and its reconstruction."""
    A = np.asarray(A, dtype=float)
    Ahat = np.asarray(Ahat, dtype=float)
    if A.shape != Ahat.shape:
        raise InvalidArgumentError(f"shape mismatch: {A.shape} vs {Ahat.shape}")
    if A.ndim != 2 or min(A.shape) < 3:
        raise InvalidArgumentError(f"EPI needs 2-D images of at least 3x3, got {A.shape}")
    if np.array_equal(A, Ahat):
        if np.ptp(laplacian_filter(A)) == 0:
            raise UndefinedMetricError("filtered image has zero variance")
        return 1.0
    da = laplacian_filter(A)
    db = laplacian_filter(Ahat)
    da -= da.mean()
    db -= db.mean()
    na = np.sqrt(np.sum(da * da))
    nb = np.sqrt(np.sum(db * db))
    if na == 0 or nb == 0:
        raise UndefinedMetricError("filtered image has zero variance")
    return float(np.sum(da * db) / (na * nb))


def epi_stack(frames, frames_hat):
    """Mean per-frame EPI over two (frames, height, width) arrays."""
    frames = np.asarray(frames)
    frames_hat = np.asarray(frames_hat)
    if frames.shape != frames_hat.shape or frames.ndim != 3:
        raise InvalidArgumentError(f"need matching 3-D stacks, got {frames.shape} and {frames_hat.shape}")
    return float(np.mean([epi(a, b) for a, b in zip(frames, frames_hat)]))


def svd_report(A, approx, sv_exact=None, r=None):
    """ErrorReport of an approximate SVD against a dense reference.

    ``r`` (the comparison depth for E_Sigma) defaults to the factorization's
    own rank; missing approximate singular values count as zero.
    """
    if sv_exact is None:
        sv_exact = singular_values(A)
    k = approx.k
    r = k if r is None else r
    e_sigma = 0.0
    if r > 0:
        padded = np.zeros(max(r, k))
        padded[:k] = approx.sigma
        e_sigma = singular_value_error(sv_exact, padded, r)
    return ErrorReport(
        e_mse=reconstruction_error(A, approx.reconstruct()),
        e_sigma=e_sigma,
        e_u=orthogonality_defect(approx.U),
        e_v=orthogonality_defect(np.asarray(approx.Vh).conj().T),
        energy_ratio=energy_ratio(sv_exact, min(k, len(sv_exact))),
        k=k,
    )
