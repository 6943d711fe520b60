"""Two-pass conditional moment accumulation over a replayable chunk stream."""

from typing import NamedTuple

import numpy as np


class SampleMoments(NamedTuple):
    count: int
    mean: np.ndarray
    cov: np.ndarray
    cov_stderr: np.ndarray


def sample_moments(chunk_factory):
    """Mean, covariance and elementwise covariance stderr of selected rows.

    ``chunk_factory()`` must return a fresh iterator over 2-D arrays of the
    already-selected rows; it is called twice and must replay identical data.
    The stderr of entry ``(i, j)`` is ``sd((x_i - m_i)(x_j - m_j)) / sqrt(N)``.
    """
    count = 0
    total = None
    for rows in chunk_factory():
        count += rows.shape[0]
        s = rows.sum(axis=0)
        total = s if total is None else total + s
    if count == 0:
        return SampleMoments(0, None, None, None)
    mean = total / count
    cross = 0.0
    cross_sq = 0.0
    for rows in chunk_factory():
        d = rows - mean
        d2 = d * d
        cross = cross + d.T @ d
        # (d_i d_j)^2 = d_i^2 d_j^2
        cross_sq = cross_sq + d2.T @ d2
    second = cross / count
    var_prod = np.maximum(cross_sq / count - second * second, 0.0)
    cov = cross / max(count - 1, 1)
    return SampleMoments(count, mean, cov, np.sqrt(var_prod / count))
