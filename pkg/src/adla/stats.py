"""Welch's t and the two-sample Anderson-Darling statistic.

Single-column functions (:func:`welch_t`, :func:`ad_statistic`) work on two
equal-length vectors. The ``*_columns`` variants run the same computation for
every time sample of two ``n_traces x n_samples`` matrices through the
selected kernel backend.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from adla import _backend

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class WelchResult:
    t: float
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    degenerate: bool = False


@dataclass(frozen=True)
class AdResult:
    a2: float
    n: int


class ColumnStats(NamedTuple):
    """Per-time-sample results for a whole trace matrix pair."""

    t: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    var_x: np.ndarray
    var_y: np.ndarray
    degenerate: np.ndarray


def _pair(x, y, min_n):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"columns must have equal length, got {x.size} and {y.size}")
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} values per column, got {x.size}")
    return x, y


def welch_t(x, y) -> WelchResult:
    """Welch's t for two equal-size samples.

    Uses unbiased variances and a shifted two-pass variance. When both
    variances vanish the column is flagged degenerate and ``t`` is 0 for equal
    means or a signed infinity otherwise.
    """
    x, y = _pair(x, y, 2)
    t, mx, my, vx, vy, deg = _backend.kernels.welch_columns(x[None, :], y[None, :], 1)
    return WelchResult(float(t[0]), float(mx[0]), float(my[0]),
                       float(vx[0]), float(vy[0]), bool(deg[0]))


def ad_statistic(x, y) -> AdResult:
    """Two-sample Anderson-Darling A^2 for equal sample sizes.

    ``M_i`` counts x-values ``<=`` the i-th pooled order statistic, by value,
    so tied x-values are all counted.
    """
    x, y = _pair(x, y, 1)
    a2 = _backend.kernels.ad_columns(x[None, :], y[None, :], 1)
    return AdResult(float(a2[0]), x.size)


def _columns(a, b, min_n):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"need two matrices of equal shape, got {a.shape} and {b.shape}")
    if a.shape[0] < min_n:
        raise ValueError(f"need at least {min_n} traces, got {a.shape[0]}")
    # kernels want one time sample per contiguous row
    xs = np.ascontiguousarray(a.T, dtype=np.float64)
    ys = np.ascontiguousarray(b.T, dtype=np.float64)
    return xs, ys


def welch_columns(a, b, threads=None) -> ColumnStats:
    """Welch's t at every time sample of two ``(n, S)`` trace matrices."""
    xs, ys = _columns(a, b, 2)
    out = _backend.kernels.welch_columns(xs, ys, _backend.resolve_threads(threads))
    return ColumnStats(*out)


def ad_columns(a, b, threads=None) -> np.ndarray:
    """A^2 at every time sample of two ``(n, S)`` trace matrices."""
    xs, ys = _columns(a, b, 1)
    return _backend.kernels.ad_columns(xs, ys, _backend.resolve_threads(threads))


def normal_cdf(z: float) -> float:
    """Standard normal CDF via ``erfc``."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    return _STD_NORMAL.inv_cdf(p)


class QQPoints(NamedTuple):
    theoretical: np.ndarray
    empirical: np.ndarray


class QQFit(NamedTuple):
    slope: float
    intercept: float
    departure: float  # 1 - r^2 of the straight-line fit


def qq_points(values) -> QQPoints:
    """Normal Q-Q pairs using plotting positions ``(k - 0.5) / n``."""
    values = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = values.size
    if n < 2:
        raise ValueError("need at least two values for a Q-Q plot")
    theoretical = np.array([normal_quantile((k - 0.5) / n) for k in range(1, n + 1)])
    return QQPoints(theoretical, values)


def qq_fit(points: QQPoints) -> QQFit:
    """Least-squares line through the Q-Q points and its lack of fit.

    ``departure`` is ``1 - r^2``; zero for a perfect line, and defined as 0
    for a constant sample (a flat line fits exactly).
    """
    x, y = points
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    sxy = float(xc @ yc)
    syy = float(yc @ yc)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    departure = 0.0 if syy == 0.0 else max(0.0, 1.0 - sxy * sxy / (sxx * syy))
    return QQFit(slope, intercept, departure)
