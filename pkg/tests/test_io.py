import csv
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctrf import io as tio
from ctrf.metrics import QualityReport


def test_hten_header_layout(tmp_path):
    t = np.arange(6, dtype=float).reshape(2, 3)
    path = tmp_path / "t.hten"
    tio.write_hten(path, t)
    raw = path.read_bytes()
    assert raw[:4] == b"HTEN"
    assert struct.unpack_from("<BB", raw, 4) == (1, 2)
    assert struct.unpack_from("<2I", raw, 6) == (2, 3)
    assert raw[14] == 1
    assert struct.unpack_from("<6d", raw, 15) == tuple(range(6))
    assert len(raw) == 15 + 48


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.lists(st.integers(1, 4), min_size=1, max_size=4).map(tuple), elements=finite))
def test_hten_roundtrip_bit_exact(t):
    back = np.frombuffer(tio.hten_bytes(t), dtype="<f8", offset=6 + 4 * t.ndim + 1).reshape(t.shape)
    assert back.tobytes() == t.tobytes()


def test_hten_roundtrip_special_values(tmp_path):
    t = np.array([[0.0, -0.0, np.inf], [np.nan, 1e-308, 5e-324]])
    path = tmp_path / "s.hten"
    tio.write_hten(path, t)
    assert tio.read_hten(path).tobytes() == t.tobytes()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda raw: b"XTEN" + raw[4:],
        lambda raw: raw[:4] + bytes([2]) + raw[5:],
        lambda raw: raw[:-8],
        lambda raw: raw[:14] + bytes([2]) + raw[15:],
        lambda raw: raw[:7],
    ],
)
def test_hten_rejects_bad_files(tmp_path, mutate):
    path = tmp_path / "t.hten"
    tio.write_hten(path, np.ones((2, 2)))
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(tio.FormatError):
        tio.read_hten(path)


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "sub" / "x.hten"
    tio.write_hten(path, np.zeros(3))
    tio.write_hten(path, np.ones(3))
    assert sorted(p.name for p in path.parent.iterdir()) == ["x.hten"]
    np.testing.assert_array_equal(tio.read_hten(path), np.ones(3))


@pytest.mark.parametrize("name", ["a.csv", "a.npy", "a.hten", "a.bin"])
def test_tensor_dispatch_roundtrip(tmp_path, name, rng):
    t = rng.standard_normal((3, 2, 4))
    tio.write_tensor(tmp_path / name, t)
    assert tio.read_tensor(tmp_path / name).tobytes() == t.tobytes()


def test_csv_needs_sidecar(tmp_path):
    (tmp_path / "a.csv").write_text("1\n2\n")
    with pytest.raises(tio.FormatError):
        tio.read_csv_tensor(tmp_path / "a.csv")
    (tmp_path / "a.csv.shape").write_text("3\n")
    with pytest.raises(tio.FormatError):
        tio.read_csv_tensor(tmp_path / "a.csv")


def test_manifest_roundtrip(tmp_path):
    m = {"seed": 3, "snr_db": 30.0, "files": {"y": "y.hten"}}
    tio.write_manifest(tmp_path / "m.json", m)
    assert tio.read_manifest(tmp_path / "m.json") == m


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_trace_columns(tmp_path):
    nctrf = [
        dict(iteration=1, objective=2.0, hsi_term=1.0, msi_term=0.5, nuclear_term=0.5, mu=1e-4, g0_g3_residual=0.1, wall_seconds=0.01)
    ]
    tio.write_trace(tmp_path / "n.csv", nctrf, "nctrf")
    rows = _rows(tmp_path / "n.csv")
    assert tuple(rows[0]) == tio.TRACE_COLUMNS
    assert rows[1][0] == "1" and float(rows[1][5]) == 1e-4

    ctrf = [dict(iteration=1, objective=1.5, hsi_term=1.0, msi_term=0.5, nuclear_term=None, mu=None, g0_g3_residual=None, wall_seconds=0.01, rmse=3.0)]
    tio.write_trace(tmp_path / "c.csv", ctrf, "ctrf")
    rows = _rows(tmp_path / "c.csv")
    assert "mu" not in rows[0] and rows[0][-1] == "rmse"
    assert rows[1][rows[0].index("nuclear_term")] == ""


def test_append_report_csv(tmp_path):
    path = tmp_path / "r.csv"
    r = QualityReport(40.0, 2.0, 1.0, 3.0, 0.9)
    tio.append_report_csv(path, r, label="a")
    tio.append_report_csv(path, r, label="b")
    rows = _rows(path)
    assert rows[0] == ["label", "psnr", "rmse", "ergas", "sam", "ssim"]
    assert [row[0] for row in rows[1:]] == ["a", "b"]
