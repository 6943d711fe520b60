"""Quantile partitions of (0, 1) with equal per-cell invariants.

Two objectives are supported:

``variance``
    equal conditional variance of a standard normal on every cell. By the
    Gaussian reduction of the conditional covariance formula, the resulting
    levels make every conditional covariance matrix ``Var_B[X]`` coincide, for
    any Gaussian ``X`` and any benchmark.
``kprime``
    equal K'-invariant on every cell for a given generator family, which makes
    the conditional correlation matrices coincide.

Solver: an outer bisection on the common cell value ``v`` wraps an inner
left-to-right sweep. Given ``v`` the sweep places each boundary with Brent's
method so that its cell attains ``v``; the sign of (last cell - v) drives the
bisection. Both objectives are expressed through a "size" that grows with
the cell (variance, or ``1 / K'``), which makes the sweep residual
decreasing in ``v``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .conditional import conditional_covariance
from .errors import KOutOfRangeError, NoConvergenceError, NonMonotoneObjectiveError
from .families import Gaussian, GeneratorFamily, family_from_spec
from .invariants import ProbabilitySubset, k_invariant, standardized_moments

OUTER_TOL = 1e-13
INNER_XTOL = 1e-12
MAX_OUTER = 200
MAX_INNER = 200
FIRST_CELL_FLOOR = 1e-15
MIN_WIDTH = 1e-13

TABLE2_NUS = (3, 5, 7, 10, 12, 15, 25, 50, 100, math.inf)


@dataclass(frozen=True, eq=False)
class PartitionResult:
    levels: tuple
    cell_values: tuple
    iterations: int
    residual: float
    family: GeneratorFamily
    mode: str

    @property
    def cells(self):
        return len(self.levels) + 1

    @property
    def probabilities(self):
        edges = (0.0, *self.levels, 1.0)
        return tuple(b - a for a, b in zip(edges[:-1], edges[1:]))

    def to_dict(self):
        return {
            "mode": self.mode,
            "family": self.family.to_dict(),
            "cells": self.cells,
            "levels": list(self.levels),
            "cell_values": list(self.cell_values),
            "probabilities": list(self.probabilities),
            "iterations": self.iterations,
            "residual": self.residual,
        }


class _Objective:
    """Cell size (increasing in the right endpoint) and reported value."""

    def __init__(self, family, mode):
        if mode not in ("variance", "kprime"):
            raise ValueError(f"unknown mode {mode!r}")
        self.family = family
        self.mode = mode

    def value(self, lo, hi):
        subset = ProbabilitySubset.interval(lo, hi)
        if self.mode == "variance":
            return standardized_moments(self.family, subset).variance
        return k_invariant(self.family, subset).k_prime

    def size(self, lo, hi):
        if hi - lo <= 0.0:
            return 0.0
        subset = ProbabilitySubset.interval(lo, hi)
        if self.mode == "variance":
            return standardized_moments(self.family, subset).variance
        inv = k_invariant(self.family, subset)
        if not inv.var_v1 > 0.0:
            return 0.0
        return inv.var_v1 / inv.k


def _sweep(obj, cells, target):
    """Place ``cells - 1`` boundaries for a common size ``target``.

    Returns ``(residual, levels)``; ``residual`` is ``+inf`` when even the
    smallest admissible cell is too big and ``-inf`` when the remaining mass
    cannot reach ``target``.
    """
    levels = []
    lo = 0.0
    for i in range(cells - 1):
        floor = lo + (FIRST_CELL_FLOOR if i == 0 else max(MIN_WIDTH, 1e-9 * (1.0 - lo)))
        if floor >= 1.0:
            return -math.inf, levels
        f_lo = obj.size(lo, floor) - target
        if f_lo > 0.0:
            return math.inf, levels
        f_hi = obj.size(lo, 1.0) - target
        if f_hi < 0.0:
            return -math.inf, levels
        hi = optimize.brentq(
            lambda r: obj.size(lo, r) - target, floor, 1.0, xtol=INNER_XTOL, maxiter=MAX_INNER
        )
        levels.append(hi)
        lo = hi
    return obj.size(lo, 1.0) - target, levels


def _check_monotone(obj, levels):
    edges = (0.0, *levels)
    for lo in edges:
        grid = lo + (1.0 - lo) * np.array([1e-6, 1e-4, 0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.85, 1.0])
        sizes = [obj.size(lo, r) for r in grid]
        if any(b < a - 1e-10 * max(abs(a), 1.0) for a, b in zip(sizes[:-1], sizes[1:])):
            raise NonMonotoneObjectiveError(
                f"{obj.mode} cell size is not monotone in the right endpoint for cells starting at {lo:.6g}"
            )


def cell_values(family, levels, mode):
    """Per-cell objective values for the partition given by ``levels``."""
    obj = _Objective(family, mode)
    edges = (0.0, *levels, 1.0)
    return tuple(obj.value(a, b) for a, b in zip(edges[:-1], edges[1:]))


def partition_residual(family, levels, mode):
    """Max pairwise discrepancy between cell values."""
    vals = cell_values(family, levels, mode)
    return max(vals) - min(vals)


def solve_partition(family, cells, mode):
    """Equal-value consecutive-interval partition of (0, 1) into ``cells`` cells."""
    obj = _Objective(family, mode)
    if cells == 1:
        return PartitionResult((), (obj.value(0.0, 1.0),), 0, 0.0, family, mode)
    t_lo, t_hi = 0.0, obj.size(0.0, 1.0)
    best = None
    for iteration in range(1, MAX_OUTER + 1):
        mid = 0.5 * (t_lo + t_hi)
        resid, levels = _sweep(obj, cells, mid)
        if len(levels) == cells - 1 and math.isfinite(resid):
            best = levels
        if resid > 0.0:
            t_lo = mid
        elif resid < 0.0:
            t_hi = mid
        else:
            break
        if t_hi - t_lo < OUTER_TOL:
            break
    else:
        raise NoConvergenceError(f"outer bisection exceeded {MAX_OUTER} iterations")
    if best is None:
        raise NoConvergenceError("no feasible partition found")
    _check_monotone(obj, best)
    values = cell_values(family, best, mode)
    return PartitionResult(
        levels=tuple(best),
        cell_values=values,
        iterations=iteration,
        residual=max(values) - min(values),
        family=family,
        mode=mode,
    )


def equal_variance_partition(k):
    """Levels ``alpha_1 < ... < alpha_k`` with equal Gaussian cell variances.

    The levels do not depend on the mean, covariance, dimension or weights, so
    they are solved once for the standard normal.
    """
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= 12):
        raise KOutOfRangeError(f"k must be an integer in [1, 12], got {k!r}")
    return solve_partition(Gaussian(), int(k) + 1, "variance")


def equal_kprime_partition(family, cells):
    """Consecutive cells of (0, 1) with identical K'-invariant."""
    if not (isinstance(cells, (int, np.integer)) and 2 <= cells <= 8):
        raise KOutOfRangeError(f"cells must be an integer in [2, 8], got {cells!r}")
    return solve_partition(family, int(cells), "kprime")


@dataclass(frozen=True, eq=False)
class PartitionCheck:
    levels: tuple
    reports: list
    cov_discrepancy: float
    cor_discrepancy: float
    mc_reports: list = None
    mc_cov_discrepancy: float = None
    mc_cor_discrepancy: float = None

    def to_dict(self):
        return {
            "levels": list(self.levels),
            "cov_discrepancy": self.cov_discrepancy,
            "cor_discrepancy": self.cor_discrepancy,
            "cell_covariances": [r.cond_cov.tolist() for r in self.reports],
            "cell_correlations": [r.cond_cor.tolist() for r in self.reports],
            "mc_cov_discrepancy": self.mc_cov_discrepancy,
            "mc_cor_discrepancy": self.mc_cor_discrepancy,
        }


def _max_pairwise_frobenius(mats):
    out = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            out = max(out, float(np.linalg.norm(mats[i] - mats[j])))
    return out


def cell_subsets(levels):
    edges = (0.0, *levels, 1.0)
    return [ProbabilitySubset.interval(a, b) for a, b in zip(edges[:-1], edges[1:])]


def verify_partition(model, a, result, draws=0, seed=42):
    """Conditional matrices on every cell and their max pairwise Frobenius gap.

    ``result`` may be a :class:`PartitionResult` or a plain sequence of
    levels. With ``draws > 0`` the Monte Carlo matrices are added too.
    """
    from .conditional import conditional_covariance_mc

    levels = tuple(result.levels if isinstance(result, PartitionResult) else result)
    subsets = cell_subsets(levels)
    reports = [conditional_covariance(model, a, s) for s in subsets]
    check = dict(
        levels=levels,
        reports=reports,
        cov_discrepancy=_max_pairwise_frobenius([r.cond_cov for r in reports]),
        cor_discrepancy=_max_pairwise_frobenius([r.cond_cor for r in reports]),
    )
    if draws:
        mc = [conditional_covariance_mc(model, a, s, draws, seed + i) for i, s in enumerate(subsets)]
        check.update(
            mc_reports=mc,
            mc_cov_discrepancy=_max_pairwise_frobenius([r.cond_cov for r in mc]),
            mc_cor_discrepancy=_max_pairwise_frobenius([r.cond_cor for r in mc]),
        )
    return PartitionCheck(**check)


def table1(kmax=6):
    return [equal_variance_partition(k) for k in range(1, kmax + 1)]


def table2(cells=(3, 4), nus=TABLE2_NUS):
    rows = []
    for c in cells:
        for nu in nus:
            rows.append((nu, equal_kprime_partition(family_from_spec("t", nu), c)))
    return rows


def _ratio(result):
    parts = []
    for p in result.probabilities:
        pct = 100.0 * p
        parts.append(f"{pct:.1f}")
    return "/".join(parts)


def format_table1(results):
    width = max(len(r.levels) for r in results)
    head = ["k"] + [f"alpha_{i}" for i in range(1, width + 1)] + ["partition ratio"]
    lines = ["  ".join(f"{h:>8}" for h in head[:-1]) + "  " + head[-1]]
    for r in results:
        cols = [f"{len(r.levels):>8d}"]
        cols += [f"{v:8.3f}" for v in r.levels]
        cols += [f"{'-':>8}"] * (width - len(r.levels))
        lines.append("  ".join(cols) + "  " + _ratio(r))
    return "\n".join(lines)


def format_table2(rows):
    width = max(len(r.levels) for _, r in rows)
    head = ["k", "v"] + [f"alpha_{i}" for i in range(1, width + 1)]
    lines = ["  ".join(f"{h:>8}" for h in head) + "  partition ratio"]
    for nu, r in rows:
        cols = [f"{len(r.levels):>8d}", f"{'inf' if math.isinf(nu) else f'{nu:g}':>8}"]
        cols += [f"{v:8.3f}" for v in r.levels]
        cols += [f"{'-':>8}"] * (width - len(r.levels))
        lines.append("  ".join(cols) + "  " + _ratio(r))
    return "\n".join(lines)
