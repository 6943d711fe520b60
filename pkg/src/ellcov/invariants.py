"""Truncated moments, tail density and the K / K' invariants.

All quantities are computed on the standardized univariate margin of the
generator family by adaptive quadrature. The Monte Carlo estimators in this
module simulate the defining conditional variances directly and serve as
independent cross-checks.
"""

import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from . import _quadrature
from ._montecarlo import sample_moments
from .elliptical import benchmark, model_chunks, standard_chunks
from .errors import DataFormatError, EmptySubsetError, TooFewConditionedSamplesError

MIN_CONDITIONED = 100
MIN_DRAWS = 10_000
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class ProbabilitySubset:
    """Finite union of disjoint half-open intervals ``[lo, hi)`` inside ``[0, 1]``."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not ivs:
            raise EmptySubsetError("subset has no intervals")
        prev_hi = -math.inf
        for lo, hi in ivs:
            if not (0.0 <= lo < hi <= 1.0):
                raise EmptySubsetError(f"bad interval ({lo}, {hi}); need 0 <= lo < hi <= 1")
            if lo < prev_hi:
                raise EmptySubsetError("intervals must be sorted and pairwise disjoint")
            prev_hi = hi
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def interval(cls, lo, hi):
        return cls(((lo, hi),))

    @classmethod
    def full(cls):
        return cls(((0.0, 1.0),))

    @classmethod
    def parse(cls, text):
        """Parse ``"lo:hi[,lo:hi...]"``."""
        pieces = []
        for part in str(text).split(","):
            m = re.fullmatch(r"\s*([^:\s]+)\s*:\s*([^:\s]+)\s*", part)
            if m is None:
                raise DataFormatError(f"cannot parse interval {part!r}; expected lo:hi")
            try:
                pieces.append((float(m.group(1)), float(m.group(2))))
            except ValueError:
                raise DataFormatError(f"non-numeric interval bound in {part!r}") from None
        return cls(tuple(pieces))

    @property
    def measure(self):
        return sum(hi - lo for lo, hi in self.intervals)

    def reflect(self):
        """The subset ``{1 - x : x in A}``."""
        return ProbabilitySubset(tuple((1.0 - hi, 1.0 - lo) for lo, hi in reversed(self.intervals)))

    def contains(self, u):
        u = np.asarray(u, dtype=float)
        mask = np.zeros(u.shape, dtype=bool)
        for lo, hi in self.intervals:
            mask |= (u >= lo) & (u < hi)
        return mask

    def value_intervals(self, family, loc=0.0, scale=1.0):
        """Map to value space ``loc + scale * F^-1`` (``0 -> -inf``, ``1 -> inf``)."""
        return [
            (loc + scale * float(family.ppf(lo)), loc + scale * float(family.ppf(hi)))
            for lo, hi in self.intervals
        ]

    def contains_values(self, x, bounds):
        """Mask of ``x`` inside value-space ``bounds`` from :meth:`value_intervals`.

        Equivalent to ``contains(F(x))`` for a continuous increasing ``F`` and
        avoids evaluating the CDF on every draw.
        """
        x = np.asarray(x, dtype=float)
        mask = np.zeros(x.shape, dtype=bool)
        for lo, hi in bounds:
            mask |= (x >= lo) & (x < hi)
        return mask

    def __str__(self):
        return ",".join(f"{lo:g}:{hi:g}" for lo, hi in self.intervals)


class TruncatedMoments(NamedTuple):
    prob: float
    mean: float
    variance: float


class _StdMoments(NamedTuple):
    prob: float
    mean: float
    var: float
    err: float
    bounds: list


def _standardized_moments(family, subset):
    bounds = subset.value_intervals(family)
    prob = subset.measure
    pdf = family.pdf_scalar
    first, err = 0.0, 0.0
    for lo, hi in bounds:
        v, e = _quadrature.quad(lambda x: x * pdf(x), lo, hi)
        first += v
        err += e
    mean = first / prob
    centered = 0.0
    for lo, hi in bounds:
        # centered second pass avoids cancellation in the far tails
        v, e = _quadrature.quad(lambda x: (x - mean) ** 2 * pdf(x), lo, hi, split_at_zero=False)
        centered += v
        err += e
    return _StdMoments(prob, mean, centered / prob, err / prob, bounds)


def standardized_moments(family, subset):
    """``(P, E, Var)`` of the standardized margin ``V_1`` on ``F_1(V_1) in A``."""
    m = _standardized_moments(family, subset)
    return TruncatedMoments(m.prob, m.mean, m.var)


def truncated_moments(spec, subset):
    """Probability, conditional mean and variance of ``Y`` on ``{F_Y(Y) in A}``.

    ``prob`` is the Lebesgue measure of ``A`` exactly, since ``F_Y(Y)`` is
    uniform. The moments come from quadrature over the value-space intervals.
    """
    m = _standardized_moments(spec.family, subset)
    return TruncatedMoments(m.prob, spec.mean + spec.sd * m.mean, spec.var * m.var)


def tail_density(family, w):
    """``h(w) = c1 * int_{w^2/2}^inf g1(u) du``; even in ``w``."""
    w = float(w)
    if math.isinf(w):
        return 0.0
    lower = 0.5 * w * w
    gen = family._density
    if lower <= 1.0:
        return _quadrature.quad(lambda u: gen(1, u), lower, math.inf, split_at_zero=False)[0]
    # u = lower * s keeps the infinite-range map well scaled for large w
    return lower * _quadrature.quad(lambda s: gen(1, lower * s), 1.0, math.inf, split_at_zero=False)[0]


def _boundary(family, x):
    # w * h(w) vanishes at +-inf whenever the variance is finite
    return 0.0 if math.isinf(x) else x * tail_density(family, x)


def tail_probability(family, lo, hi, method="parts"):
    """``P[W in [lo, hi]]`` for ``W`` with density ``h`` (value-space bounds).

    ``method="parts"`` integrates by parts, using ``h'(w) = -w f_1(w)``::

        int_lo^hi h = [w h(w)]_lo^hi + int_lo^hi w^2 f_1(w) dw

    which needs ``h`` only at the two endpoints. ``method="direct"`` nests the
    quadrature for ``h`` inside an outer quadrature and is much slower.
    """
    if method == "direct":
        return _quadrature.quad(lambda w: tail_density(family, w), lo, hi, epsrel=1e-10)[0]
    if method != "parts":
        raise ValueError(f"unknown method {method!r}")
    pdf = family.pdf_scalar
    inner = _quadrature.quad(lambda x: x * x * pdf(x), lo, hi)[0]
    return _boundary(family, hi) - _boundary(family, lo) + inner


@dataclass(frozen=True)
class InvariantValue:
    k: float
    k_prime: float
    var_v1: float
    method: str
    err_estimate: float
    var_v1_err: float = float("nan")
    mean_v1: float = float("nan")
    count: int = 0

    def to_dict(self):
        return {
            "k": self.k,
            "k_prime": self.k_prime,
            "var_v1": self.var_v1,
            "method": self.method,
            "err_estimate": self.err_estimate,
            "var_v1_err": None if math.isnan(self.var_v1_err) else self.var_v1_err,
            "mean_v1": None if math.isnan(self.mean_v1) else self.mean_v1,
            "count": self.count,
        }


def k_invariant(family, subset):
    """K- and K'-invariants of ``subset`` by quadrature.

    ``k = P[W in B] / P[V_1 in B]`` with ``B`` the value-space image of the
    subset. ``P[W in B]`` is assembled interval by interval from the
    integration-by-parts form, reusing the truncated second moment of ``V_1``.
    """
    m = _standardized_moments(family, subset)
    boundary = sum(_boundary(family, hi) - _boundary(family, lo) for lo, hi in m.bounds)
    # sum_i int x^2 f over the intervals = P (Var + mean^2)
    k = boundary / m.prob + m.var + m.mean * m.mean
    err = m.err + 4.0 * EPS * (abs(k) + abs(boundary) / m.prob)
    return InvariantValue(
        k=k, k_prime=k / m.var, var_v1=m.var, method="quadrature", err_estimate=err, mean_v1=m.mean
    )


def k_invariant_mc(family, subset, draws, seed):
    """Simulate ``Var[V_2 | F_1(V_1) in A]`` for ``V ~ E_2(0, Id_2, psi)``."""
    draws = int(draws)
    if draws < MIN_DRAWS:
        raise ValueError(f"need at least {MIN_DRAWS} draws, got {draws}")

    bounds = subset.value_intervals(family)

    def selected():
        for v in standard_chunks(family, 2, draws, seed):
            yield v[subset.contains_values(v[:, 0], bounds)]

    mom = sample_moments(selected)
    if mom.count < MIN_CONDITIONED:
        raise TooFewConditionedSamplesError(f"only {mom.count} draws fell in the subset")
    k = float(mom.cov[1, 1])
    var1 = float(mom.cov[0, 0])
    return InvariantValue(
        k=k,
        k_prime=k / var1,
        var_v1=var1,
        method="monte-carlo",
        err_estimate=float(mom.cov_stderr[1, 1]),
        var_v1_err=float(mom.cov_stderr[0, 0]),
        mean_v1=float(mom.mean[0]),
        count=mom.count,
    )


class Estimate(NamedTuple):
    value: float
    stderr: float
    count: int


def k_via_radial(model, a, subset, draws, seed):
    """Monte Carlo estimate of ``k`` from the radial identity.

    ``k = (E_B[R^2] - E_B[(Y - a mu)^2] / Var[Y]) / (n - 1)`` with
    ``R^2 = (X - mu)^T Sigma^-1 (X - mu)``.
    """
    if model.n < 2:
        raise ValueError("the radial identity needs n >= 2")
    spec = benchmark(model, a)
    bounds = subset.value_intervals(model.family, 0.0, spec.sd)

    def selected():
        for x in model_chunks(model, int(draws), seed):
            d = x - model.mu
            y = d @ spec.a
            keep = subset.contains_values(y, bounds)
            d, y = d[keep], y[keep]
            z = solve_triangular(model.chol, d.T, lower=True)
            r2 = np.einsum("ij,ij->j", z, z)
            yield ((r2 - y * y / spec.var) / (model.n - 1))[:, None]

    mom = sample_moments(selected)
    if mom.count < MIN_CONDITIONED:
        raise TooFewConditionedSamplesError(f"only {mom.count} draws fell in the subset")
    return Estimate(float(mom.mean[0]), float(math.sqrt(mom.cov[0, 0] / mom.count)), mom.count)
