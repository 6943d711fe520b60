"""Empirical normality diagnostic based on equal-variance quantile cells.

For Gaussian data, conditional covariance matrices of ``X`` on the cells of
the equal-variance partition of ``Y = a X`` coincide. The diagnostic
estimates them from data and reports their largest relative Frobenius
discrepancy. A parametric bootstrap under a fitted Gaussian gives reference
quantiles for the statistic. This is a diagnostic, not a calibrated test.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import CellTooSmallError, DataFormatError, ShapeMismatchError, ZeroWeightVectorError
from .partition import equal_variance_partition

BOOTSTRAP_LEVELS = (0.90, 0.95, 0.99)
MIN_ROWS_PER_CELL = 50


@dataclass(frozen=True, eq=False)
class DataMatrix:
    data: np.ndarray
    column_names: tuple = None

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]


def _parse_row(row, lineno):
    try:
        return [float(v) for v in row]
    except ValueError:
        raise DataFormatError(f"non-numeric value in {row!r}", line=lineno) from None


def read_csv(source):
    """Read a comma-separated numeric table; the header row is optional.

    ``source`` is a path or an open text stream. Blank lines are skipped.
    Malformed rows raise :class:`DataFormatError` carrying the line number.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    names = None
    rows = []
    width = None
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            try:
                values = [float(v) for v in row]
            except ValueError:
                if names is not None:
                    raise DataFormatError(f"non-numeric value in {row!r}", line=lineno) from None
                names = tuple(c.strip() for c in row)
                width = len(names)
                continue
            width = len(values)
            rows.append(values)
            continue
        if len(row) != width:
            raise DataFormatError(f"expected {width} fields, found {len(row)}", line=lineno)
        rows.append(_parse_row(row, lineno))
    if not rows:
        raise DataFormatError("no data rows")
    data = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        raise DataFormatError("missing or non-finite values are not supported")
    return DataMatrix(data, names)


def write_csv(data, stream, column_names=None):
    writer = csv.writer(stream, lineterminator="\n")
    n = data.shape[1]
    writer.writerow(column_names or [f"x{i + 1}" for i in range(n)])
    for row in data:
        writer.writerow([repr(float(v)) for v in row])


def _as_array(data):
    return data.data if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)


def _weights(a, n):
    a = np.ones(n) if a is None else np.asarray(a, dtype=float).ravel()
    if a.size != n:
        raise ShapeMismatchError(f"weight vector has length {a.size}, data has {n} columns")
    if not np.any(a):
        raise ZeroWeightVectorError("weight vector a must not be zero")
    return a


def assign_cells(y, levels):
    """Cell index per row: cell ``i`` is ``[q_i, q_{i+1})`` with type-7 sample quantiles."""
    q = np.quantile(y, levels, method="linear")
    return np.searchsorted(q, y, side="right")


def _cell_covariances(x, y, levels):
    cells = assign_cells(y, levels)
    n = x.shape[1]
    mats, counts = [], []
    for i in range(len(levels) + 1):
        block = x[cells == i]
        if block.shape[0] < n + 2:
            raise CellTooSmallError(f"cell {i} holds {block.shape[0]} rows; need at least {n + 2}")
        mats.append(np.atleast_2d(np.cov(block, rowvar=False)))
        counts.append(int(block.shape[0]))
    return mats, counts


def empirical_conditional_covariances(data, a, levels):
    """Unbiased per-cell sample covariances of ``X`` on quantile cells of ``a X``.

    Returns ``(matrices, counts)``.
    """
    x = _as_array(data)
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or np.any(np.diff(levels) <= 0) or np.any((levels <= 0) | (levels >= 1)):
        raise ValueError("levels must be strictly increasing inside (0, 1)")
    a = _weights(a, x.shape[1])
    return _cell_covariances(x, x @ a, levels)


def _to_correlation(m):
    d = np.sqrt(np.diag(m))
    return m / np.outer(d, d)


def equality_statistic(matrices):
    """Max over pairs of ``||M_i - M_j||_F / ||(M_i + M_j) / 2||_F``."""
    mats = [np.atleast_2d(np.asarray(m, dtype=float)) for m in matrices]
    if len(mats) < 2:
        raise ShapeMismatchError("need at least two matrices")
    if any(m.shape != mats[0].shape for m in mats):
        raise ShapeMismatchError("matrices differ in shape")
    stat = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            num = np.linalg.norm(mats[i] - mats[j])
            den = np.linalg.norm(0.5 * (mats[i] + mats[j]))
            stat = max(stat, float(num / den) if den > 0 else (0.0 if num == 0 else np.inf))
    return stat


def _statistic(x, a, levels, compare):
    mats, counts = _cell_covariances(x, x @ a, levels)
    if compare == "correlation":
        mats = [_to_correlation(m) for m in mats]
    return equality_statistic(mats), mats, counts


def bootstrap_reference(data, a, levels, resamples, seed, compare="covariance", quantiles=BOOTSTRAP_LEVELS):
    """Quantiles of the statistic over Gaussian datasets fitted to ``data``.

    Each resample draws from its own substream spawned from ``seed``, so the
    result does not depend on evaluation order. Returns ``[(level, value)]``.
    """
    if resamples < 200:
        raise ValueError(f"need at least 200 resamples, got {resamples}")
    x = _as_array(data)
    a = _weights(a, x.shape[1])
    levels = np.asarray(levels, dtype=float)
    mean = x.mean(axis=0)
    chol = np.linalg.cholesky(np.atleast_2d(np.cov(x, rowvar=False)))
    m, n = x.shape
    stats = np.empty(resamples)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(resamples)):
        rng = np.random.default_rng(child)
        sim = mean + rng.standard_normal((m, n)) @ chol.T
        stats[i] = _statistic(sim, a, levels, compare)[0]
    return [(float(q), float(v)) for q, v in zip(quantiles, np.quantile(stats, quantiles))]


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    partition: object
    cell_covariances: list
    cell_counts: list
    statistic: float
    bootstrap_quantiles: list = None
    draws: int = 0
    compare: str = "covariance"
    weights: np.ndarray = field(default=None)

    def exceeds(self, level):
        """Whether the statistic lies above the bootstrap quantile at ``level``."""
        for q, v in self.bootstrap_quantiles or ():
            if abs(q - level) < 1e-12:
                return self.statistic > v
        raise KeyError(f"no bootstrap quantile at level {level}")

    def to_dict(self):
        return {
            "levels": list(self.partition.levels),
            "compare": self.compare,
            "weights": None if self.weights is None else self.weights.tolist(),
            "cell_counts": list(self.cell_counts),
            "cell_covariances": [m.tolist() for m in self.cell_covariances],
            "statistic": self.statistic,
            "bootstrap_quantiles": None
            if self.bootstrap_quantiles is None
            else [{"level": q, "value": v} for q, v in self.bootstrap_quantiles],
            "draws": self.draws,
        }


class ConditionalCovarianceDiagnostic(BaseEstimator):
    """Estimator wrapper around the equal-variance cell diagnostic.

    Parameters
    ----------
    k : int
        Number of quantile levels (``k + 1`` cells).
    a : array-like, optional
        Benchmark weights; defaults to the equally weighted sum.
    compare : {"covariance", "correlation"}
        Which conditional matrices enter the statistic.
    bootstrap : int
        Number of Gaussian resamples for reference quantiles (0 disables).
    random_state : int, optional
        Seed for the bootstrap.

    Attributes
    ----------
    partition_ : PartitionResult
    cell_covariances_ : list of ndarray
    cell_counts_ : list of int
    statistic_ : float
    bootstrap_quantiles_ : list of (float, float) or None
    """

    def __init__(self, k=2, a=None, compare="covariance", bootstrap=0, random_state=None):
        self.k = k
        self.a = a
        self.compare = compare
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.compare not in ("covariance", "correlation"):
            raise ValueError(f"compare must be 'covariance' or 'correlation', got {self.compare!r}")
        partition = equal_variance_partition(self.k)
        X = check_array(
            X, dtype=np.float64, ensure_min_samples=MIN_ROWS_PER_CELL * partition.cells, ensure_min_features=1
        )
        self.n_features_in_ = X.shape[1]
        a = _weights(self.a, X.shape[1])
        levels = np.asarray(partition.levels)
        stat, mats, counts = _statistic(X, a, levels, self.compare)
        self.partition_ = partition
        self.weights_ = a
        self.cell_covariances_ = mats
        self.cell_counts_ = counts
        self.statistic_ = stat
        self.bootstrap_quantiles_ = None
        if self.bootstrap:
            seed = 0 if self.random_state is None else self.random_state
            self.bootstrap_quantiles_ = bootstrap_reference(X, a, levels, self.bootstrap, seed, self.compare)
        self.n_samples_ = X.shape[0]
        return self

    def report(self):
        check_is_fitted(self, "statistic_")
        return DiagnosticReport(
            partition=self.partition_,
            cell_covariances=self.cell_covariances_,
            cell_counts=self.cell_counts_,
            statistic=self.statistic_,
            bootstrap_quantiles=self.bootstrap_quantiles_,
            draws=self.n_samples_,
            compare=self.compare,
            weights=self.weights_,
        )


def check_normality(data, a=None, k=2, bootstrap=0, seed=0, compare="covariance"):
    """Functional shortcut: fit the diagnostic and return its report."""
    est = ConditionalCovarianceDiagnostic(k=k, a=a, compare=compare, bootstrap=bootstrap, random_state=seed)
    return est.fit(_as_array(data)).report()
