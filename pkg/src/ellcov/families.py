"""Density-generator families for standardized elliptical laws.

Every family is parametrized so that ``E_k(0, Id_k, psi)`` has identity
covariance (equivalently ``E[R^2] = k``). For the Student-t this means the
classical scale matrix is ``(nu - 2) / nu`` times the covariance.

A family knows three things:

* its normalized density generators ``c_k * g_k(u)`` for ``k`` in {1, 2};
* the CDF / quantile of its standardized univariate margin;
* how to draw standardized spherical vectors ``R * U`` in any dimension it
  supports.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from . import _quadrature
from .errors import (
    BadDegreesOfFreedomError,
    InvalidGeneratorError,
    NegativeArgumentError,
    UnsupportedFamilyError,
)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class GeneratorFamily:
    """Base class. Subclasses override the scalar hooks below."""

    name = "abstract"
    symmetric = True

    def density(self, k, u):
        """Normalized generator value ``c_k * g_k(u)`` for ``u >= 0``."""
        if k not in (1, 2):
            raise ValueError(f"generator dimension must be 1 or 2, got {k}")
        u = float(u)
        if u < 0.0 or math.isnan(u):
            raise NegativeArgumentError(f"generator argument must be >= 0, got {u}")
        return self._density(k, u)

    def _density(self, k, u):
        raise NotImplementedError

    def pdf_scalar(self, x):
        """Density of the standardized univariate margin at a float."""
        return self._density(1, 0.5 * x * x)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(self.pdf_scalar, otypes=[float])(x)

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, p):
        """Quantile of the standardized margin; ``0 -> -inf`` and ``1 -> inf``."""
        raise NotImplementedError

    def standard_draws(self, rng, n, size):
        """Draw ``size`` rows of ``R * U`` with identity covariance."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


def _sphere(rng, n, size):
    z = rng.standard_normal((size, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class Gaussian(GeneratorFamily):
    name = "gaussian"

    def _density(self, k, u):
        return math.exp(-u) / (_SQRT_2PI if k == 1 else 2.0 * math.pi)

    def pdf_scalar(self, x):
        return math.exp(-0.5 * x * x) / _SQRT_2PI

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / _SQRT_2PI

    def cdf(self, x):
        return special.ndtr(x)

    def ppf(self, p):
        return special.ndtri(p)

    def standard_draws(self, rng, n, size):
        # canonical representation: R ~ chi(n) independent of U
        radius = np.sqrt(rng.chisquare(n, size))
        return radius[:, None] * _sphere(rng, n, size)

    def to_dict(self):
        return {"name": "gaussian"}

    def __str__(self):
        return "gaussian"


@dataclass(frozen=True)
class StudentT(GeneratorFamily):
    """Student-t generator standardized to unit variance. Requires ``nu > 2``."""

    nu: float
    name = "t"
    _c1: float = field(init=False, repr=False, compare=False)
    _c2: float = field(init=False, repr=False, compare=False)
    _scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nu = float(self.nu)
        if not nu > 2.0 or math.isinf(nu):
            raise BadDegreesOfFreedomError(f"Student-t needs finite nu > 2, got {self.nu}")
        object.__setattr__(self, "nu", nu)
        c1 = math.exp(special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2))
        object.__setattr__(self, "_c1", c1 / math.sqrt(math.pi * (nu - 2)))
        object.__setattr__(self, "_c2", nu / (2.0 * math.pi * (nu - 2)))
        object.__setattr__(self, "_scale", math.sqrt((nu - 2) / nu))

    def _density(self, k, u):
        nu = self.nu
        power = (nu + k) / 2
        return (self._c1 if k == 1 else self._c2) * math.exp(-power * math.log1p(2.0 * u / (nu - 2)))

    def pdf_scalar(self, x):
        nu = self.nu
        return self._c1 * math.exp(-(nu + 1) / 2 * math.log1p(x * x / (nu - 2)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        nu = self.nu
        return self._c1 * np.exp(-(nu + 1) / 2 * np.log1p(x * x / (nu - 2)))

    def cdf(self, x):
        return special.stdtr(self.nu, np.asarray(x, dtype=float) / self._scale)

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(invalid="ignore"):
            out = self._scale * special.stdtrit(self.nu, p)
        out = np.where(p <= 0.0, -np.inf, np.where(p >= 1.0, np.inf, out))
        return out if out.ndim else float(out)

    def standard_draws(self, rng, n, size):
        z = rng.standard_normal((size, n))
        w = (self.nu - 2.0) / rng.chisquare(self.nu, size)
        return np.sqrt(w)[:, None] * z

    def to_dict(self):
        return {"name": "t", "nu": self.nu}

    def __str__(self):
        return f"t(nu={self.nu:g})"


@dataclass(frozen=True, eq=False)
class CustomGenerator(GeneratorFamily):
    """User-supplied generators ``g1``, ``g2`` with constants ``c1``, ``c2``.

    Both generators are required: no marginalization from ``g2`` to ``g1`` is
    attempted. The constructor checks that both densities integrate to one and
    that the univariate margin has unit variance. Sampling is only available
    for dimensions 1 and 2, the ones the generators describe.
    """

    g1: Callable[[float], float]
    g2: Callable[[float], float]
    c1: float
    c2: float
    tol: float = 1e-6
    name = "custom"

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise InvalidGeneratorError("normalizing constants must be positive")
        mass1 = 2.0 * _quadrature.quad(lambda x: self.c1 * self.g1(0.5 * x * x), 0.0, math.inf)[0]
        # polar coordinates: 2*pi * int r c2 g2(r^2/2) dr = 2*pi * c2 * int g2(u) du
        mass2 = 2.0 * math.pi * self.c2 * _quadrature.quad(self.g2, 0.0, math.inf)[0]
        second = 2.0 * _quadrature.quad(lambda x: x * x * self.c1 * self.g1(0.5 * x * x), 0.0, math.inf)[0]
        for label, value in (("univariate mass", mass1), ("bivariate mass", mass2), ("second moment", second)):
            if abs(value - 1.0) > self.tol:
                raise InvalidGeneratorError(f"{label} is {value:.10g}, expected 1")
        object.__setattr__(self, "_radial", {})

    def _density(self, k, u):
        return (self.c1 * self.g1(u)) if k == 1 else (self.c2 * self.g2(u))

    def _cdf_scalar(self, x):
        if x == -math.inf:
            return 0.0
        if x == math.inf:
            return 1.0
        tail = _quadrature.quad(self.pdf_scalar, -math.inf, -abs(x))[0]
        return tail if x <= 0 else 1.0 - tail

    def cdf(self, x):
        return np.vectorize(self._cdf_scalar, otypes=[float])(np.asarray(x, dtype=float))

    def _ppf_scalar(self, p):
        if p <= 0.0:
            return -math.inf
        if p >= 1.0:
            return math.inf
        if p == 0.5:
            return 0.0
        hi = 1.0
        while self._cdf_scalar(hi) < max(p, 1 - p):
            hi *= 2.0
        return optimize.brentq(lambda x: self._cdf_scalar(x) - p, -hi, hi, xtol=1e-14, rtol=1e-14)

    def ppf(self, p):
        out = np.vectorize(self._ppf_scalar, otypes=[float])(np.asarray(p, dtype=float))
        return out if out.ndim else float(out)

    def _radial_table(self, n):
        # inverse-CDF table for R with density proportional to r^(n-1) g_n(r^2/2)
        table = self._radial.get(n)
        if table is None:
            dens = (lambda r: self.c1 * self.g1(0.5 * r * r)) if n == 1 else (
                lambda r: r * self.c2 * self.g2(0.5 * r * r))
            grid = np.concatenate([[0.0], np.geomspace(1e-6, 1e6, 4000)])
            pieces = [_quadrature.quad(dens, a, b, epsrel=1e-10)[0] for a, b in zip(grid[:-1], grid[1:])]
            cdf = np.concatenate([[0.0], np.cumsum(pieces)])
            table = (cdf / cdf[-1], grid)
            self._radial[n] = table
        return table

    def standard_draws(self, rng, n, size):
        if n not in (1, 2):
            raise UnsupportedFamilyError(
                "custom generators can only be sampled in dimension 1 or 2 (g_n unknown for n > 2)"
            )
        cdf, grid = self._radial_table(n)
        radius = np.interp(rng.random(size), cdf, grid)
        return radius[:, None] * _sphere(rng, n, size)

    def to_dict(self):
        raise UnsupportedFamilyError("custom generators cannot be serialized")

    def __str__(self):
        return "custom"


def family_from_spec(name, nu=None):
    """Build a family from a CLI/JSON description (``nu = inf`` means Gaussian)."""
    key = str(name).lower()
    if key in ("gaussian", "normal", "n"):
        return Gaussian()
    if key in ("t", "student", "student-t", "studentt"):
        if nu is None:
            raise BadDegreesOfFreedomError("Student-t family needs nu")
        if math.isinf(float(nu)):
            return Gaussian()
        return StudentT(float(nu))
    raise UnsupportedFamilyError(f"unknown family {name!r}")


def family_from_dict(spec):
    return family_from_spec(spec.get("name", "gaussian"), spec.get("nu"))
