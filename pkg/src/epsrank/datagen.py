"""
Synthetic test instances.

* ``near_low_rank``: ``U diag(s) V^T`` with ``r`` uniform(0,1) leading values
  and ``n - r`` uniform values scaled by ``tail``.
* ``multicollinear_regression``: a regression design with ``r_eps`` standard
  normal singular directions and a ``tail``-scaled remainder.
* ``synthetic_stack``: an image sequence made of a few separable space x time
  modes plus Gaussian noise, standing in for a real video.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .matcore import as_generator, draw_gaussian, economy_qr
from .matio import read_matrix, write_matrix


@dataclass
class FrameStack:
    """Image sequence stored as a ``(frames, height, width)`` array."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3:
            raise InvalidArgumentError(f"frame stack must be 3-D, got shape {self.data.shape}")

    @property
    def frames(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]


@dataclass
class RegressionInstance:
    X: np.ndarray
    beta_true: np.ndarray
    y: np.ndarray
    noise_sigma: float
    singular_values: np.ndarray = None


def _orthonormal(rng, rows, cols):
    Q, _ = economy_qr(draw_gaussian(rng, rows, cols))
    return Q


def near_low_rank(m, n, r, tail, stream=None, return_spectrum=False):
    """Nearly rank-``r`` ``m x n`` matrix with a planted spectrum.

    ``r == n`` gives a dense full-rank spectrum with no tail. With
    ``return_spectrum`` the planted singular values (descending) are
    returned as a second value.
    """
    if not (1 <= r <= n <= m):
        raise InvalidArgumentError(f"need 1 <= r <= n <= m, got m={m}, n={n}, r={r}")
    if not 0 <= tail < 1:
        raise InvalidArgumentError(f"tail must lie in [0, 1), got {tail}")
    rng = as_generator(stream)
    s = np.concatenate([rng.uniform(size=r), rng.uniform(size=n - r) * tail])
    s = np.sort(s)[::-1]
    U = _orthonormal(rng, m, n)
    V = _orthonormal(rng, n, n)
    A = (U * s) @ V.T
    return (A, s) if return_spectrum else A


def multicollinear_regression(m, n, r_eps, noise_sigma=0.05, tail=1e-8, stream=None):
    """Severely collinear design ``X = U diag(S) V^T`` and response ``y = X beta + noise``."""
    if not (1 <= r_eps <= n <= m):
        raise InvalidArgumentError(f"need 1 <= r_eps <= n <= m, got m={m}, n={n}, r_eps={r_eps}")
    if noise_sigma < 0 or tail < 0:
        raise InvalidArgumentError("noise_sigma and tail must be nonnegative")
    rng = as_generator(stream)
    S = np.concatenate([rng.standard_normal(r_eps), rng.standard_normal(n - r_eps) * tail])
    U = _orthonormal(rng, m, n)
    V = _orthonormal(rng, n, n)
    X = (U * S) @ V.T
    beta = rng.uniform(-1.0, 1.0, size=n)
    y = X @ beta + noise_sigma * rng.standard_normal(m)
    sv = np.sort(np.abs(S))[::-1]
    return RegressionInstance(X=X, beta_true=beta, y=y, noise_sigma=noise_sigma, singular_values=sv)


def synthetic_stack(height, width, frames, motion_rank, noise_level, stream=None):
    """Low-rank image sequence plus Gaussian noise, clipped to [0, 255].

    Mode 0 is a static binary speckle pattern; the remaining modes are
    Gaussian blobs whose brightness oscillates in time at distinct
    frequencies. All modes are nonnegative and the sum is only rescaled
    (never shifted), so the noiseless Casorati matrix has rank exactly
    ``motion_rank``.
    """
    if not (1 <= motion_rank <= frames):
        raise InvalidArgumentError(f"need 1 <= motion_rank <= frames, got {motion_rank}, {frames}")
    if min(height, width) < 1:
        raise InvalidArgumentError("height and width must be positive")
    if noise_level < 0:
        raise InvalidArgumentError("noise_level must be nonnegative")
    rng = as_generator(stream)
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    t = np.arange(frames, dtype=float)

    spatial = [(rng.uniform(size=(height, width)) < 0.5).astype(float)]
    temporal = [np.ones(frames)]
    freqs = rng.permutation(np.arange(1, max(frames // 2, motion_rank) + 1))
    for j in range(1, motion_rank):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        rad = rng.uniform(0.1, 0.3) * max(height, width)
        amp = rng.uniform(0.5, 1.0)
        spatial.append(amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rad ** 2)))
        phase = rng.uniform(0, 2 * np.pi)
        temporal.append(1 + 0.9 * np.cos(2 * np.pi * freqs[j - 1] * t / frames + phase))

    signal = np.einsum("kt,khw->thw", np.array(temporal), np.array(spatial))
    signal *= 255.0 / signal.max()
    if noise_level > 0:
        signal = signal + noise_level * rng.standard_normal(signal.shape)
    return FrameStack(np.clip(signal, 0.0, 255.0))


def casorati(S):
    """``(height*width) x frames`` matrix; column t is frame t flattened column-major."""
    # frame t in F order is data[t].T flattened in C order
    return S.data.transpose(0, 2, 1).reshape(S.frames, -1).T.copy()


def uncasorati(A, height, width):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != height * width:
        raise InvalidArgumentError(f"matrix of shape {A.shape} does not hold {height}x{width} frames")
    return FrameStack(np.stack([A[:, t].reshape((height, width), order="F")
                                for t in range(A.shape[1])]))


def save_stack(path, S):
    """Casorati matrix as ``.nlrm`` plus a ``<path>.json`` sidecar with the frame dims."""
    path = os.fspath(path)
    write_matrix(path, casorati(S))
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump({"height": S.height, "width": S.width, "frames": S.frames}, fh)


def load_stack(path):
    path = os.fspath(path)
    try:
        with open(path + ".json", encoding="utf-8") as fh:
            dims = json.load(fh)
        height, width = int(dims["height"]), int(dims["width"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad stack sidecar {path}.json: {exc}", offset=0) from None
    A = read_matrix(path)
    if A.shape[0] != height * width:
        raise FormatError(f"stack has {A.shape[0]} rows, sidecar says {height}x{width}", offset=8)
    return uncasorati(A.real, height, width)
