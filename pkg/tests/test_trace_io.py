import io
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from adla.trace_io import (TraceCorruptionError, TraceDataError, TraceFormatError, TraceIOError,
                           TracePair, TraceSet, label_path, load_trace_set, read_csv,
                           read_trace_set, save_trace_set, write_csv, write_trace_set)

DATA = Path(__file__).parent / "data"


def _bytes(ts):
    buf = io.BytesIO()
    n = write_trace_set(ts, buf)
    assert n == len(buf.getvalue())
    return buf.getvalue()


def test_smallest_set_is_20_bytes():
    raw = _bytes(TraceSet(np.zeros((1, 1), dtype=np.float32)))
    assert len(raw) == 20
    assert read_trace_set(io.BytesIO(raw)).samples.tolist() == [[0.0]]


def test_2x3_real64_is_64_bytes():
    assert len(_bytes(TraceSet(np.ones((2, 3))))) == 64


def test_header_layout():
    raw = _bytes(TraceSet(np.zeros((5, 7), dtype=np.float32)))
    magic, version, dtype, reserved, n, s = struct.unpack("<4sBBHII", raw[:16])
    assert (magic, version, dtype, reserved, n, s) == (b"ADLA", 1, 0, 0, 5, 7)


def test_golden_real32_fixture():
    golden = (DATA / "golden_1x3_real32.adla").read_bytes()
    ts = read_trace_set(io.BytesIO(golden))
    assert ts.dtype == "real32"
    assert ts.samples.tolist() == [[1.0, -2.0, 0.5]]
    assert _bytes(ts) == golden


def test_bad_magic():
    raw = bytearray(_bytes(TraceSet(np.zeros((1, 1)))))
    raw[:4] = b"NOPE"
    with pytest.raises(TraceFormatError):
        read_trace_set(io.BytesIO(bytes(raw)))


@pytest.mark.parametrize("offset,value", [(4, 2), (5, 9), (6, 1)])
def test_bad_header_fields(offset, value):
    raw = bytearray(_bytes(TraceSet(np.zeros((1, 1)))))
    raw[offset] = value
    with pytest.raises(TraceFormatError):
        read_trace_set(io.BytesIO(bytes(raw)))


def test_truncated_payload():
    header = struct.pack("<4sBBHII", b"ADLA", 1, 1, 0, 2, 3)
    with pytest.raises(TraceCorruptionError, match="2x3"):
        read_trace_set(io.BytesIO(header + np.zeros(5).tobytes()))


def test_trailing_bytes_rejected():
    raw = _bytes(TraceSet(np.zeros((2, 3)))) + b"\0"
    with pytest.raises(TraceCorruptionError):
        read_trace_set(io.BytesIO(raw))


def test_truncated_header():
    with pytest.raises(TraceCorruptionError):
        read_trace_set(io.BytesIO(b"ADLA\x01\x01"))


def test_nan_payload_names_position():
    values = np.zeros((3, 4))
    header = struct.pack("<4sBBHII", b"ADLA", 1, 1, 0, 3, 4)
    values_bytes = bytearray(values.tobytes())
    values_bytes[(1 * 4 + 2) * 8:(1 * 4 + 3) * 8] = struct.pack("<d", float("nan"))
    with pytest.raises(TraceDataError) as err:
        read_trace_set(io.BytesIO(header + bytes(values_bytes)))
    assert (err.value.trace, err.value.sample) == (1, 2)


def test_trace_set_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        TraceSet(np.zeros(3))
    with pytest.raises(ValueError):
        TraceSet(np.zeros((0, 3)))
    with pytest.raises(TraceDataError):
        TraceSet(np.array([[1.0, np.inf]]))


def test_trace_set_is_immutable_copy():
    src = np.zeros((2, 2))
    ts = TraceSet(src)
    src[0, 0] = 5.0
    assert ts.samples[0, 0] == 0.0
    with pytest.raises(ValueError):
        ts.samples[0, 0] = 1.0


def test_big_endian_input_is_normalized():
    ts = TraceSet(np.arange(6, dtype=">f8").reshape(2, 3))
    assert ts.samples.dtype == np.float64
    assert read_trace_set(io.BytesIO(_bytes(ts))) == ts


def test_pair_invariants():
    a = TraceSet(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        TracePair(a, TraceSet(np.zeros((2, 4))))
    with pytest.raises(ValueError):
        TracePair(a, TraceSet(np.zeros((3, 5))))
    pair = TracePair(a, TraceSet(np.ones((3, 4))))
    assert pair.head(2).set_b.samples.shape == (2, 4)


class _FailingSink:
    def __init__(self, fail_after):
        self.fail_after = fail_after
        self.calls = 0

    def write(self, chunk):
        self.calls += 1
        if self.calls > self.fail_after:
            raise OSError("disk full")
        return len(chunk)


class _ShortSink:
    def write(self, chunk):
        return len(chunk) - 1


def test_sink_failure_reports_bytes_written():
    with pytest.raises(TraceIOError) as err:
        write_trace_set(TraceSet(np.zeros((2, 2))), _FailingSink(1))
    assert err.value.bytes_written == 16


def test_short_write():
    with pytest.raises(TraceIOError) as err:
        write_trace_set(TraceSet(np.zeros((2, 2))), _ShortSink())
    assert err.value.bytes_written == 15


def test_label_sidecar(tmp_path):
    path = tmp_path / "a.adla"
    save_trace_set(TraceSet(np.zeros((1, 2)), "x = 0.1"), path)
    assert label_path(path).read_text() == "x = 0.1"
    assert load_trace_set(path).label == "x = 0.1"
    save_trace_set(TraceSet(np.zeros((1, 2))), path)
    assert not label_path(path).exists()
    assert load_trace_set(path).label == ""


def test_csv_basic():
    ts = read_csv("1.0,2.0\n3.0,4.0")
    assert ts.samples.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert ts.dtype == "real64"


def test_csv_ragged_rows_name_the_line():
    with pytest.raises(TraceFormatError, match="line 2"):
        read_csv("1.0,2.0\n3.0")


def test_csv_bad_token_names_line_and_column():
    with pytest.raises(TraceFormatError, match="line 2, column 2"):
        read_csv("1,2\n3,x\n")


@pytest.mark.parametrize("text", ["", "\n\n"])
def test_csv_empty(text):
    with pytest.raises(TraceFormatError):
        read_csv(text)


def test_csv_blank_line_inside_data():
    with pytest.raises(TraceFormatError):
        read_csv("1,2\n\n3,4\n")


def test_csv_trailing_newline_ok_and_nan_rejected():
    assert read_csv("1,2\n3,4\n").n_traces == 2
    with pytest.raises(TraceDataError):
        read_csv("1,nan\n")


def test_csv_round_trip_via_file(tmp_path):
    ts = TraceSet(np.random.default_rng(0).standard_normal((4, 3)))
    path = tmp_path / "t.csv"
    with open(path, "w", newline="") as fh:
        write_csv(ts, fh)
    assert load_trace_set(path) == ts


finite64 = st.floats(allow_nan=False, allow_infinity=False, width=64)
finite32 = st.floats(allow_nan=False, allow_infinity=False, width=32)


@settings(max_examples=60, deadline=None)
@given(
    st.one_of(
        hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=12), elements=finite64),
        hnp.arrays(np.float32, hnp.array_shapes(min_dims=2, max_dims=2, max_side=12), elements=finite32),
    )
)
def test_round_trip_property(values):
    ts = TraceSet(values)
    back = read_trace_set(io.BytesIO(_bytes(ts)))
    assert back == ts
    assert back.samples.tobytes() == ts.samples.tobytes()
    assert back.dtype == ts.dtype


def test_rows_keep_order():
    ts = TraceSet(np.arange(12.0).reshape(4, 3))
    back = read_trace_set(io.BytesIO(_bytes(ts)))
    assert back.samples[:, 0].tolist() == [0.0, 3.0, 6.0, 9.0]
