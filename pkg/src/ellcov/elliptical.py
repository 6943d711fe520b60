"""Elliptical models, the benchmark ``Y = a X`` and seeded sampling."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataFormatError,
    DimensionMismatchError,
    NonSymmetricError,
    NotPositiveDefiniteError,
    ProbabilityOutOfRangeError,
    ZeroWeightVectorError,
)
from .families import GeneratorFamily, Gaussian

PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-10
CHUNK_ROWS = 1 << 20


def _frozen(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class EllipticalModel:
    """``X ~ E_n(mu, sigma, psi)`` with ``sigma`` the covariance of ``X``.

    Construction validates the inputs and caches the lower Cholesky factor
    ``chol`` (``chol @ chol.T == sigma``). Arrays are stored read-only.
    """

    mu: np.ndarray
    sigma: np.ndarray
    family: GeneratorFamily = field(default_factory=Gaussian)
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.ndim != 1 or sigma.ndim != 2 or sigma.shape != (mu.size, mu.size):
            raise DimensionMismatchError(
                f"mu has shape {mu.shape} but sigma has shape {sigma.shape}"
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise NotPositiveDefiniteError("mu and sigma must be finite")
        scale = max(np.max(np.abs(sigma)), np.finfo(float).tiny)
        if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_RTOL * scale:
            raise NonSymmetricError("sigma is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("sigma is not positive definite") from None
        pivots = np.diag(chol) ** 2
        if np.min(pivots) < PIVOT_RTOL * np.max(np.diag(sigma)):
            raise NotPositiveDefiniteError(
                f"sigma is numerically singular (smallest pivot {np.min(pivots):.3g})"
            )
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "sigma", _frozen(sigma))
        object.__setattr__(self, "chol", _frozen(chol))

    @property
    def n(self):
        return self.mu.size

    def to_dict(self):
        return {
            "schema": 1,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "family": self.family.to_dict(),
        }

    @classmethod
    def from_dict(cls, spec):
        from .families import family_from_dict

        if spec.get("schema", 1) != 1:
            raise DataFormatError(f"unsupported model schema {spec.get('schema')!r}; expected 1")
        return cls(spec["mu"], spec["sigma"], family_from_dict(spec.get("family", {})))


def validate_model(mu, sigma, family=None):
    """Validate ``(mu, sigma, family)`` and return an :class:`EllipticalModel`."""
    return EllipticalModel(mu, sigma, Gaussian() if family is None else family)


def _weights(model, a):
    a = np.asarray(a, dtype=float).ravel()
    if a.size != model.n:
        raise DimensionMismatchError(f"weight vector has length {a.size}, model has n={model.n}")
    if not np.any(a):
        raise ZeroWeightVectorError("weight vector a must not be zero")
    return a


@dataclass(frozen=True, eq=False)
class Benchmark:
    """Univariate law of ``Y = a X``: ``E_1(a mu, a sigma a^T, psi)``."""

    a: np.ndarray
    mean: float
    var: float
    family: GeneratorFamily

    @property
    def sd(self):
        return math.sqrt(self.var)

    def cdf(self, y):
        out = self.family.cdf((np.asarray(y, dtype=float) - self.mean) / self.sd)
        return out if np.ndim(out) else float(out)

    def quantile(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(~((p_arr > 0.0) & (p_arr < 1.0))):
            raise ProbabilityOutOfRangeError(f"probability must lie in (0, 1), got {p}")
        out = self.mean + self.sd * np.asarray(self.family.ppf(p_arr))
        return out if out.ndim else float(out)


def benchmark(model, a):
    a = _weights(model, a)
    var = float(a @ model.sigma @ a)
    return Benchmark(_frozen(a), float(a @ model.mu), var, model.family)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    data: np.ndarray
    seed: int

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def standard_chunks(family, n, count, seed, chunk_rows=CHUNK_ROWS):
    """Yield standardized draws of ``E_n(0, Id_n, psi)`` in chunks.

    The stream is a pure function of ``(family, n, count, seed, chunk_rows)``,
    so iterating twice yields identical chunks.
    """
    rng = np.random.default_rng(seed)
    left = int(count)
    while left > 0:
        size = min(left, chunk_rows)
        yield family.standard_draws(rng, n, size)
        left -= size


def model_chunks(model, count, seed, chunk_rows=CHUNK_ROWS):
    for z in standard_chunks(model.family, model.n, count, seed, chunk_rows):
        yield model.mu + z @ model.chol.T


def sample(model, count, seed):
    """Draw ``count`` rows of ``X = mu + R A U`` reproducibly from ``seed``."""
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    data = np.concatenate(list(model_chunks(model, count, seed)), axis=0)
    return SampleMatrix(data, int(seed))
