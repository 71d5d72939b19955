import csv
import json
import struct

import numpy as np
import pytest

from rswmaxwell import io
from rswmaxwell.grid import Grid, random_bandlimited
from rswmaxwell.medium import sample


@pytest.fixture
def g():
    return Grid((3, 4, 5), (1.0, 2.0, 0.5))


def test_state_round_trip(tmp_path, g, rng):
    s = random_bandlimited(g, 8, 1.0, rng)
    p = tmp_path / "s.bin"
    io.write_state(p, s, g, "psi", 0.25)
    back, g2, meta = io.read_state(p)
    assert np.array_equal(back, s)
    assert g2 == g and meta == {"representation": "psi", "t": 0.25, "unit_mode": "natural"}


def test_medium_round_trip(tmp_path, g, rng):
    eps = 1 + np.abs(rng.normal(size=g.shape))
    mu = 1 + np.abs(rng.normal(size=g.shape))
    p = tmp_path / "m.bin"
    io.write_medium(p, eps, mu, g)
    spec, g2 = io.read_medium(p)
    f = sample(spec, g2, check=False)
    assert np.array_equal(f.eps, eps) and np.array_equal(f.mu, mu)


def test_layout_is_x_fastest_little_endian(tmp_path):
    g = Grid((2, 3, 1))
    eps = np.arange(6.0).reshape(2, 3, 1) + 1
    p = tmp_path / "m.bin"
    io.write_medium(p, eps, np.ones(g.shape), g)
    data = p.read_bytes()
    assert data[:8] == b"RSWMAX01"
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + hlen])
    assert header["shape"] == [2, 3, 1] and header["arrays"][0]["dtype"] == "<f8"
    first = struct.unpack("<6d", data[12 + hlen:12 + hlen + 48])
    # index i + nx*j: (0,0) (1,0) (0,1) (1,1) (0,2) (1,2)
    assert first == (1.0, 4.0, 2.0, 5.0, 3.0, 6.0)


def test_complex_interleaving(tmp_path):
    g = Grid((1, 1, 2))
    s = np.array([[[[1 + 2j, 3 - 4j]]]])
    p = tmp_path / "s.bin"
    io.write_state(p, s, g, "em")
    data = p.read_bytes()
    (hlen,) = struct.unpack("<I", data[8:12])
    assert struct.unpack("<4d", data[12 + hlen:]) == (1.0, 2.0, 3.0, -4.0)


def test_corrupt_files_rejected(tmp_path, g, rng):
    p = tmp_path / "s.bin"
    io.write_state(p, random_bandlimited(g, 2, 1.0, rng), g, "F")
    data = p.read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(io.FormatError, match="magic"):
        io.read_state(tmp_path / "bad.bin")
    (tmp_path / "short.bin").write_bytes(data[:-8])
    with pytest.raises(io.FormatError, match="truncated"):
        io.read_state(tmp_path / "short.bin")
    (tmp_path / "long.bin").write_bytes(data + b"\0")
    with pytest.raises(io.FormatError, match="trailing"):
        io.read_state(tmp_path / "long.bin")
    with pytest.raises(io.FormatError, match="not a medium"):
        io.read_medium(p)
    with pytest.raises(io.FormatError):
        io.write_state(p, np.zeros((8,) + g.shape), g, "xyz")


def test_slice_csv(tmp_path):
    g = Grid((2, 3, 2))
    s = np.arange(2 * 12).reshape((2,) + g.shape) * (1 + 1j)
    p = tmp_path / "slice.csv"
    io.write_slice_csv(p, s, g, y_index=1)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["x", "z", "component", "re", "im"]
    assert len(rows) == 1 + 2 * 2 * 2
    assert rows[1][:3] == ["0.0", "0.0", "0"] and float(rows[1][3]) == s[0, 0, 1, 0].real


def test_jsonl_round_trip(tmp_path):
    recs = [{"t": 0.0, "energy": 1.0}, {"t": 0.5, "energy": 0.999}]
    io.write_jsonl(tmp_path / "r.jsonl", recs)
    assert io.read_jsonl(tmp_path / "r.jsonl") == recs
