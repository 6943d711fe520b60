"""Conditional covariance and correlation matrices on ``{F_Y(Y) in A}``.

For ``X ~ E_n(mu, Sigma, psi)`` and ``Y = a X`` the conditional covariance is
available in closed form::

    Var_B[X] = k(B) Sigma + (Var_B[Y] - k(B) Var[Y]) beta beta^T

with ``beta = Sigma a^T / (a Sigma a^T)`` and ``k(B)`` the K-invariant of the
probability-space set ``A``. The Monte Carlo routine estimates the same
objects from simulated draws.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._montecarlo import sample_moments
from .elliptical import _weights, benchmark, model_chunks
from .errors import DegenerateConditionalVarianceError, TooFewConditionedSamplesError
from .invariants import MIN_CONDITIONED, MIN_DRAWS, k_invariant


@dataclass(frozen=True, eq=False)
class ConditionalReport:
    subset: object
    prob: float
    mean_y_b: float
    var_y_b: float
    k_b: float
    beta: np.ndarray
    cond_cov: np.ndarray
    cond_cross_cov: np.ndarray
    cond_cor: np.ndarray
    method: str = "analytic"
    psd_warning: bool = False
    cov_stderr: np.ndarray = None
    cross_cov_stderr: np.ndarray = None
    var_y_b_stderr: float = None
    k_b_stderr: float = None
    count: int = 0

    def to_dict(self):
        def conv(v):
            return v.tolist() if isinstance(v, np.ndarray) else v

        out = {name: conv(getattr(self, name)) for name in self.__dataclass_fields__}
        out["subset"] = str(self.subset)
        return out


def regression_beta(model, a):
    """Regression coefficients of ``X`` on ``Y = a X``; satisfies ``a . beta = 1``."""
    a = _weights(model, a)
    sa = model.sigma @ a
    return sa / float(a @ sa)


def correlation(cov):
    d = np.sqrt(np.diag(cov))
    cor = cov / np.outer(d, d)
    np.fill_diagonal(cor, 1.0)
    return cor


def assemble_covariance(sigma, beta, var_y, var_y_b, k):
    """``k Sigma + (Var_B[Y] - k Var[Y]) beta beta^T``."""
    return k * np.asarray(sigma) + (var_y_b - k * var_y) * np.outer(beta, beta)


def _psd_flag(cov):
    lam = np.linalg.eigvalsh(cov)
    if lam[0] < 0.0:
        warnings.warn(
            f"conditional covariance has a negative eigenvalue {lam[0]:.3g}; reported as computed",
            RuntimeWarning,
            stacklevel=3,
        )
        return True
    return False


def conditional_covariance(model, a, subset):
    """Closed-form conditional moments of ``X`` given ``F_Y(Y) in subset``."""
    spec = benchmark(model, a)
    beta = regression_beta(model, spec.a)
    inv = k_invariant(model.family, subset)
    var_y_b = spec.var * inv.var_v1
    if not var_y_b > 0.0:
        raise DegenerateConditionalVarianceError(f"Var_B[Y] = {var_y_b} is not positive")
    cov = assemble_covariance(model.sigma, beta, spec.var, var_y_b, inv.k)
    return ConditionalReport(
        subset=subset,
        prob=subset.measure,
        mean_y_b=spec.mean + spec.sd * inv.mean_v1,
        var_y_b=var_y_b,
        k_b=inv.k,
        beta=beta,
        cond_cov=cov,
        cond_cross_cov=var_y_b * beta,
        cond_cor=correlation(cov),
        psd_warning=_psd_flag(cov),
    )


def conditional_covariance_mc(model, a, subset, draws, seed):
    """Empirical conditional moments from ``draws`` simulated rows.

    ``k_b`` is estimated on the same draws through the radial identity
    ``k = (E_B[R^2] - E_B[(Y - a mu)^2] / Var[Y]) / (n - 1)`` (``n >= 2``).
    """
    draws = int(draws)
    if draws < MIN_DRAWS:
        raise ValueError(f"need at least {MIN_DRAWS} draws, got {draws}")
    spec = benchmark(model, a)
    n = model.n
    bounds = subset.value_intervals(model.family, spec.mean, spec.sd)

    def selected():
        for x in model_chunks(model, draws, seed):
            y = x @ spec.a
            keep = subset.contains_values(y, bounds)
            x, y = x[keep], y[keep]
            cols = [x, y[:, None]]
            if n >= 2:
                z = solve_triangular(model.chol, (x - model.mu).T, lower=True)
                r2 = np.einsum("ij,ij->j", z, z)
                yc = y - spec.mean
                cols.append(((r2 - yc * yc / spec.var) / (n - 1))[:, None])
            yield np.hstack(cols)

    mom = sample_moments(selected)
    if mom.count < MIN_CONDITIONED:
        raise TooFewConditionedSamplesError(f"only {mom.count} draws fell in the subset")
    cov = mom.cov[:n, :n]
    if n >= 2:
        k_b = float(mom.mean[n + 1])
        k_err = float(np.sqrt(mom.cov[n + 1, n + 1] / mom.count))
    else:
        k_b, k_err = float("nan"), float("nan")
    return ConditionalReport(
        subset=subset,
        prob=mom.count / draws,
        mean_y_b=float(mom.mean[n]),
        var_y_b=float(mom.cov[n, n]),
        k_b=k_b,
        beta=regression_beta(model, spec.a),
        cond_cov=cov,
        cond_cross_cov=mom.cov[:n, n],
        cond_cor=correlation(cov),
        method="monte-carlo",
        cov_stderr=mom.cov_stderr[:n, :n],
        cross_cov_stderr=mom.cov_stderr[:n, n],
        var_y_b_stderr=float(mom.cov_stderr[n, n]),
        k_b_stderr=k_err,
        count=mom.count,
    )


def scaled_relation_check(model, a, subset, report=None):
    """Max abs discrepancy in ``Var_B[X] / Var_B[Y] = k' Sigma / Var[Y] + (1 - k') beta beta^T``.

    ``k'`` is taken from the standalone invariant computation, the left side
    from the assembled report.
    """
    if report is None:
        report = conditional_covariance(model, a, subset)
    spec = benchmark(model, a)
    kp = k_invariant(model.family, subset).k_prime
    beta = report.beta
    lhs = report.cond_cov / report.var_y_b
    rhs = kp * model.sigma / spec.var + (1.0 - kp) * np.outer(beta, beta)
    return float(np.max(np.abs(lhs - rhs)))
