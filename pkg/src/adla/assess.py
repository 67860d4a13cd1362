"""Per-time-sample leakage assessment of a trace pair.

Both tests run on every column; statistics are normalized by their
thresholds so that values above 1 mean rejection. No multiple-comparison
correction is applied across time samples: with ``S`` samples the
family-wise false-alarm rate is roughly ``S * alpha``.

Columns where both conditions have zero variance are flagged degenerate.
They are listed in the report but never count as detections and never
enter the max/argmax aggregates: their t is 0 or infinite and their A^2
is dominated by ties.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from adla.stats import ad_columns, welch_columns
from adla.threshold import ThresholdSpec
from adla.trace_io import TracePair

CSV_HEADER = ("sample_index", "t_abs", "a2", "t_norm", "a2_norm",
              "tvla_detect", "adla_detect", "degenerate")


@dataclass(frozen=True)
class SampleStatistics:
    sample_index: int
    t_abs: float
    a2: float
    t_norm: float
    a2_norm: float
    tvla_detect: bool
    adla_detect: bool
    degenerate: bool


class CurvePoint(NamedTuple):
    n: int
    max_t_norm: float
    max_a2_norm: float


def _peak(values, eligible):
    if not eligible.any():
        return None, None
    masked = np.where(eligible, values, -np.inf)
    i = int(np.argmax(masked))
    return float(values[i]), i


class AssessmentReport:
    """Campaign summary plus per-sample arrays.

    ``per_sample`` is built on demand from the arrays; it is ``None`` for a
    report read back from JSON written without per-sample data.
    """

    def __init__(self, thresholds: ThresholdSpec, n_traces_used: int,
                 t_abs, a2, degenerate):
        self.thresholds = thresholds
        self.n_traces_used = int(n_traces_used)
        self.t_abs = None if t_abs is None else np.asarray(t_abs, dtype=np.float64)
        self.a2 = None if a2 is None else np.asarray(a2, dtype=np.float64)
        self.degenerate = None if degenerate is None else np.asarray(degenerate, dtype=bool)
        self._summary = None
        if self.t_abs is not None:
            self._summary = self._summarize()

    def _summarize(self):
        t_norm = self.t_norm
        a2_norm = self.a2_norm
        ok = ~self.degenerate
        max_t, arg_t = _peak(t_norm, ok)
        max_a, arg_a = _peak(a2_norm, ok)
        return {
            "n_samples": int(self.t_abs.size),
            "max_t_norm": max_t,
            "argmax_t_norm": arg_t,
            "max_a2_norm": max_a,
            "argmax_a2_norm": arg_a,
            "tvla_leaks": np.flatnonzero(self.tvla_detect).tolist(),
            "adla_leaks": np.flatnonzero(self.adla_detect).tolist(),
            "degenerate_samples": np.flatnonzero(self.degenerate).tolist(),
        }

    # per-sample arrays
    @property
    def t_norm(self):
        return self.t_abs / self.thresholds.tau_t

    @property
    def a2_norm(self):
        return self.a2 / self.thresholds.tau_a

    @property
    def tvla_detect(self):
        return (self.t_norm > 1.0) & ~self.degenerate

    @property
    def adla_detect(self):
        return (self.a2_norm > 1.0) & ~self.degenerate

    @property
    def per_sample(self):
        if self.t_abs is None:
            return None
        rows = zip(self.t_abs, self.a2, self.t_norm, self.a2_norm,
                   self.tvla_detect, self.adla_detect, self.degenerate)
        return [SampleStatistics(i, float(t), float(a), float(tn), float(an), bool(td), bool(ad), bool(dg))
                for i, (t, a, tn, an, td, ad, dg) in enumerate(rows)]

    # aggregates
    n_samples = property(lambda self: self._summary["n_samples"])
    max_t_norm = property(lambda self: self._summary["max_t_norm"])
    argmax_t_norm = property(lambda self: self._summary["argmax_t_norm"])
    max_a2_norm = property(lambda self: self._summary["max_a2_norm"])
    argmax_a2_norm = property(lambda self: self._summary["argmax_a2_norm"])
    tvla_leaks = property(lambda self: self._summary["tvla_leaks"])
    adla_leaks = property(lambda self: self._summary["adla_leaks"])
    degenerate_samples = property(lambda self: self._summary["degenerate_samples"])

    @property
    def detected(self) -> bool:
        return bool(self.tvla_leaks or self.adla_leaks)

    def to_dict(self, max_per_sample=None):
        d = {"thresholds": self.thresholds.to_dict(), "n_traces_used": self.n_traces_used}
        d.update(self._summary)
        n = d["n_samples"]
        if self.t_abs is not None and (max_per_sample is None or n <= max_per_sample):
            d["per_sample"] = [
                {
                    "sample_index": s.sample_index,
                    "t_abs": _enc(s.t_abs),
                    "a2": _enc(s.a2),
                    "t_norm": _enc(s.t_norm),
                    "a2_norm": _enc(s.a2_norm),
                    "tvla_detect": s.tvla_detect,
                    "adla_detect": s.adla_detect,
                    "degenerate": s.degenerate,
                }
                for s in self.per_sample
            ]
        else:
            d["per_sample"] = None
        return d

    def to_json(self, max_per_sample=None) -> str:
        return json.dumps(self.to_dict(max_per_sample), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        thresholds = ThresholdSpec.from_dict(d["thresholds"])
        rows = d.get("per_sample")
        if rows is None:
            report = cls(thresholds, d["n_traces_used"], None, None, None)
            report._summary = {k: d[k] for k in (
                "n_samples", "max_t_norm", "argmax_t_norm", "max_a2_norm", "argmax_a2_norm",
                "tvla_leaks", "adla_leaks", "degenerate_samples")}
            return report
        t_abs = [float(r["t_abs"]) for r in rows]
        a2 = [float(r["a2"]) for r in rows]
        deg = [r["degenerate"] for r in rows]
        return cls(thresholds, d["n_traces_used"], t_abs, a2, deg)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, AssessmentReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def __repr__(self):
        s = self._summary
        return (f"AssessmentReport(n={self.n_traces_used}, samples={s['n_samples']}, "
                f"max_t_norm={s['max_t_norm']}, max_a2_norm={s['max_a2_norm']}, "
                f"tvla_leaks={len(s['tvla_leaks'])}, adla_leaks={len(s['adla_leaks'])})")


def _enc(v):
    # strict JSON has no infinities; degenerate columns can produce them
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _raw(a, b, threads):
    w = welch_columns(a, b, threads)
    a2 = ad_columns(a, b, threads)
    return np.abs(w.t), a2, w.degenerate


def assess_pair(pair: TracePair, thresholds: ThresholdSpec, threads=None) -> AssessmentReport:
    """Run Welch's t and A^2 at every time sample of ``pair``."""
    if pair.n_traces < 2:
        raise ValueError("assessment needs at least two traces per set")
    t_abs, a2, deg = _raw(pair.set_a.samples, pair.set_b.samples, threads)
    return AssessmentReport(thresholds, pair.n_traces, t_abs, a2, deg)


def _check_grid(grid, n_traces):
    grid = [int(n) for n in grid]
    if not grid:
        raise ValueError("grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < 2:
        raise ValueError("grid values must be >= 2")
    if grid[-1] > n_traces:
        raise ValueError(f"grid value {grid[-1]} exceeds the {n_traces} available traces")
    return grid


def detection_curve(pair: TracePair, thresholds: ThresholdSpec, grid, threads=None) -> list[CurvePoint]:
    """Max normalized statistics on the first ``n`` traces, for each ``n`` in ``grid``."""
    grid = _check_grid(grid, pair.n_traces)
    a, b = pair.set_a.samples, pair.set_b.samples
    curve = []
    for n in grid:
        report = AssessmentReport(thresholds, n, *_raw(a[:n], b[:n], threads))
        curve.append(CurvePoint(n, report.max_t_norm, report.max_a2_norm))
    return curve


def traces_to_detection(curve) -> tuple[int | None, int | None]:
    """Smallest grid ``n`` at which TVLA and ADLA exceed their thresholds."""
    tvla = next((p.n for p in curve if p.max_t_norm is not None and p.max_t_norm > 1.0), None)
    adla = next((p.n for p in curve if p.max_a2_norm is not None and p.max_a2_norm > 1.0), None)
    return tvla, adla


def default_grid(n_traces, points=20):
    """Evenly spaced trace counts ending at ``n_traces``."""
    if n_traces < 2:
        raise ValueError("need at least two traces")
    grid = np.unique(np.linspace(0, n_traces, points + 1)[1:].round().astype(int))
    return [int(n) for n in grid if n >= 2]


def write_stats_csv(report: AssessmentReport, sink) -> None:
    """One row per time sample; flags are written as 0/1."""
    if report.t_abs is None:
        raise ValueError("report carries no per-sample data")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in report.per_sample:
        writer.writerow([s.sample_index, repr(s.t_abs), repr(s.a2), repr(s.t_norm), repr(s.a2_norm),
                         int(s.tvla_detect), int(s.adla_detect), int(s.degenerate)])


def write_curve_csv(curve, sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("n", "max_t_norm", "max_a2_norm"))
    for p in curve:
        writer.writerow([p.n, "" if p.max_t_norm is None else repr(p.max_t_norm),
                         "" if p.max_a2_norm is None else repr(p.max_a2_norm)])
