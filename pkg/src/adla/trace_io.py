"""Trace-set data model and persistence.

Binary container (little-endian, 16-byte header)::

    0   4  magic "ADLA"
    4   1  version (1)
    5   1  dtype (0 = float32, 1 = float64)
    6   2  reserved, zero
    8   4  n_traces (uint32)
    12  4  n_samples (uint32)
    16  .. row-major payload

The label is kept in a sidecar text file ``<file>.label``.
"""
from __future__ import annotations

import csv
import io
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ADLA"
VERSION = 1
HEADER = struct.Struct("<4sBBHII")

DTYPES = {"real32": np.dtype("<f4"), "real64": np.dtype("<f8")}
_CODES = {"real32": 0, "real64": 1}
_NAMES = {v: k for k, v in _CODES.items()}


class TraceError(Exception):
    """Base class for trace loading and saving problems."""


class TraceFormatError(TraceError):
    pass


class TraceCorruptionError(TraceError):
    pass


class TraceDataError(TraceError):
    def __init__(self, trace, sample, value):
        super().__init__(f"non-finite value {value!r} at trace {trace}, sample {sample}")
        self.trace = trace
        self.sample = sample


class TraceIOError(TraceError):
    def __init__(self, message, bytes_written):
        super().__init__(f"{message} (after {bytes_written} bytes)")
        self.bytes_written = bytes_written


def _check_finite(samples):
    bad = ~np.isfinite(samples)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise TraceDataError(int(row), int(col), float(samples[row, col]))


@dataclass(frozen=True, eq=False)
class TraceSet:
    """An ``n_traces x n_samples`` matrix of leakage measurements.

    The array is stored read-only; ``dtype`` is derived from it.
    """

    samples: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if arr.ndim != 2:
            raise ValueError(f"samples must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need at least one trace and one sample, got shape {arr.shape}")
        _check_finite(arr)
        arr = np.array(arr, dtype=arr.dtype.newbyteorder("="), order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_traces(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def dtype(self) -> str:
        return "real32" if self.samples.dtype == np.float32 else "real64"

    def head(self, n):
        """The first ``n`` traces as a new set."""
        return TraceSet(self.samples[:n], self.label)

    def __eq__(self, other):
        if not isinstance(other, TraceSet):
            return NotImplemented
        return (
            self.label == other.label
            and self.samples.dtype == other.samples.dtype
            and self.samples.shape == other.samples.shape
            and self.samples.tobytes() == other.samples.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class TracePair:
    """Two trace sets captured under two fixed input conditions."""

    set_a: TraceSet
    set_b: TraceSet

    def __post_init__(self):
        if self.set_a.n_traces != self.set_b.n_traces:
            raise ValueError(
                f"trace counts differ: {self.set_a.n_traces} vs {self.set_b.n_traces}"
            )
        if self.set_a.n_samples != self.set_b.n_samples:
            raise ValueError(
                f"sample counts differ: {self.set_a.n_samples} vs {self.set_b.n_samples}"
            )

    @property
    def n_traces(self):
        return self.set_a.n_traces

    @property
    def n_samples(self):
        return self.set_a.n_samples

    def head(self, n):
        return TracePair(self.set_a.head(n), self.set_b.head(n))


def write_trace_set(trace_set: TraceSet, sink) -> int:
    """Write ``trace_set`` to a binary sink; returns the number of bytes written."""
    header = HEADER.pack(MAGIC, VERSION, _CODES[trace_set.dtype], 0,
                         trace_set.n_traces, trace_set.n_samples)
    payload = trace_set.samples.astype(DTYPES[trace_set.dtype], copy=False).tobytes()
    written = 0
    for chunk in (header, payload):
        try:
            n = sink.write(chunk)
        except OSError as exc:
            raise TraceIOError(f"write failed: {exc}", written) from exc
        n = len(chunk) if n is None else n
        written += n
        if n != len(chunk):
            raise TraceIOError("short write", written)
    return written


def read_trace_set(source) -> TraceSet:
    """Read an ADLA1 container from a binary source (label is left empty)."""
    raw = source.read(HEADER.size)
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise TraceFormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < HEADER.size:
        raise TraceCorruptionError(f"truncated header ({len(raw)} of {HEADER.size} bytes)")
    _, version, code, reserved, n_traces, n_samples = HEADER.unpack(raw)
    if version != VERSION:
        raise TraceFormatError(f"unsupported version {version}")
    if code not in _NAMES:
        raise TraceFormatError(f"unknown dtype code {code}")
    if reserved != 0:
        raise TraceFormatError(f"reserved header bytes are {reserved:#06x}, expected zero")
    if n_traces < 1 or n_samples < 1:
        raise TraceCorruptionError(f"empty dimensions {n_traces}x{n_samples}")

    dtype = DTYPES[_NAMES[code]]
    expected = n_traces * n_samples * dtype.itemsize
    payload = source.read(expected + 1)
    if len(payload) != expected:
        raise TraceCorruptionError(
            f"header declares {n_traces}x{n_samples} {_NAMES[code]} "
            f"({expected} bytes) but payload has {len(payload)}"
            + ("+" if len(payload) > expected else "")
        )
    samples = np.frombuffer(payload, dtype=dtype).reshape(n_traces, n_samples)
    return TraceSet(samples.astype(dtype.newbyteorder("=")))


def label_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".label")


def save_trace_set(trace_set: TraceSet, path) -> int:
    """Write ``path`` plus its ``.label`` sidecar (removed when the label is empty)."""
    with open(path, "wb") as fh:
        n = write_trace_set(trace_set, fh)
    side = label_path(path)
    if trace_set.label:
        side.write_text(trace_set.label, encoding="utf-8")
    elif side.exists():
        side.unlink()
    return n


def load_trace_set(path) -> TraceSet:
    """Load ``path``; ``.csv`` files go through :func:`read_csv`."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            ts = read_csv(fh)
    else:
        with open(path, "rb") as fh:
            ts = read_trace_set(fh)
    side = label_path(path)
    if side.exists():
        ts = TraceSet(ts.samples, side.read_text(encoding="utf-8"))
    return ts


def read_csv(source) -> TraceSet:
    """Parse one trace per line of comma-separated reals (always float64)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    rows = []
    width = None
    pending_blank = 0
    for line_no, row in enumerate(csv.reader(source), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            pending_blank += 1
            continue
        if pending_blank:
            raise TraceFormatError(f"line {line_no - 1}: blank line inside data")
        values = []
        for col_no, token in enumerate(row, start=1):
            try:
                values.append(float(token))
            except ValueError:
                raise TraceFormatError(
                    f"line {line_no}, column {col_no}: cannot parse {token!r}"
                ) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise TraceFormatError(
                f"line {line_no}: expected {width} values, found {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise TraceFormatError("no traces in input")
    return TraceSet(np.array(rows, dtype=np.float64))


def write_csv(trace_set: TraceSet, sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    for row in trace_set.samples.astype(np.float64):
        writer.writerow([repr(float(v)) for v in row])


def is_csv(path) -> bool:
    return os.fspath(path).lower().endswith(".csv")
