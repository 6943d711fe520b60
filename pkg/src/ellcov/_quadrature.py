"""Thin wrapper around QUADPACK adaptive Gauss-Kronrod integration."""

import math
import warnings

from scipy import integrate

from .errors import DivergentIntegralError

EPSREL = 1e-12
EPSABS = 1e-15
LIMIT = 400
# finite bounds past this are reached through the infinite-range transform
FAR = 1e6


def quad(fun, lo, hi, *, epsrel=EPSREL, epsabs=EPSABS, split_at_zero=True):
    """Integrate a scalar function over ``[lo, hi]`` (bounds may be infinite).

    Returns ``(value, abserr)``. Intervals straddling zero are split there so
    that each piece of an odd integrand keeps a fixed sign.
    """
    if not lo < hi:
        return 0.0, 0.0
    if split_at_zero and lo < 0.0 < hi:
        v1, e1 = quad(fun, lo, 0.0, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        v2, e2 = quad(fun, 0.0, hi, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        return v1 + v2, e1 + e2
    if math.isfinite(lo) and lo < -FAR:
        # far tail piece is tiny; a finite span of that width starves the rule
        v1, e1 = quad(fun, -math.inf, hi, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        v2, e2 = quad(fun, -math.inf, lo, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        return v1 - v2, e1 + e2
    if math.isfinite(hi) and hi > FAR:
        v1, e1 = quad(fun, lo, math.inf, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        v2, e2 = quad(fun, hi, math.inf, epsrel=epsrel, epsabs=epsabs, split_at_zero=False)
        return v1 - v2, e1 + e2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(fun, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=LIMIT)
    if not math.isfinite(value) or err > max(1e-8 * abs(value), 1e-11):
        raise DivergentIntegralError(
            f"quadrature over [{lo}, {hi}] did not converge (value={value!r}, err={err!r})"
        )
    return value, err
