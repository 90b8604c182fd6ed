"""Embedding table IO and the random control generator."""

import struct

import numpy as np
import pytest

from charprobe.embeddings import EmbeddingTable, load_embeddings, make_control, save_embeddings
from charprobe.errors import BadMagic, NonFiniteValue, TruncatedFile, ZeroSize


def _write_raw(path, magic=b"EMB1", vocab=3, dim=2, payload=None):
    if payload is None:
        payload = np.arange(vocab * dim, dtype="<f4").tobytes()
    path.write_bytes(magic + struct.pack("<II", vocab, dim) + payload)


def test_round_trip_bit_exact(tmp_path):
    rows = np.random.default_rng(3).standard_normal((17, 5)).astype(np.float32)
    table = EmbeddingTable(rows, source_name="unit")
    path = tmp_path / "emb.bin"
    save_embeddings(table, path)
    back = load_embeddings(path)
    assert back.vocab_size == 17 and back.dim == 5
    assert back.rows.dtype == np.float32
    assert np.array_equal(back.rows, rows)
    # a second save of the loaded table must reproduce the file byte for byte
    path2 = tmp_path / "emb2.bin"
    save_embeddings(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_bad_magic_names_offset(tmp_path):
    path = tmp_path / "bad.bin"
    _write_raw(path, magic=b"XMB1")
    with pytest.raises(BadMagic) as err:
        load_embeddings(path)
    assert "offset 0" in str(err.value)


def test_truncated_payload_reports_sizes(tmp_path):
    path = tmp_path / "short.bin"
    payload = np.arange(6, dtype="<f4").tobytes()[:-5]
    _write_raw(path, vocab=3, dim=2, payload=payload)
    with pytest.raises(TruncatedFile) as err:
        load_embeddings(path)
    msg = str(err.value)
    assert "36" in msg and "31" in msg  # expected vs actual byte counts


def test_truncated_header(tmp_path):
    path = tmp_path / "stub.bin"
    path.write_bytes(b"EMB1\x03")
    with pytest.raises(TruncatedFile):
        load_embeddings(path)


def test_non_finite_names_byte_offset(tmp_path):
    vals = np.arange(6, dtype="<f4")
    vals[4] = np.nan
    path = tmp_path / "nan.bin"
    _write_raw(path, vocab=3, dim=2, payload=vals.tobytes())
    with pytest.raises(NonFiniteValue) as err:
        load_embeddings(path)
    # header is 12 bytes, the 5th float starts at 12 + 4*4 = 28
    assert "28" in str(err.value)


def test_table_rejects_non_finite_rows():
    rows = np.ones((2, 2), dtype=np.float32)
    rows[1, 1] = np.inf
    with pytest.raises(NonFiniteValue):
        EmbeddingTable(rows)


def test_make_control_zero_size():
    with pytest.raises(ZeroSize):
        make_control(0, 16, seed=1)
    with pytest.raises(ZeroSize):
        make_control(10, 0, seed=1)


def test_make_control_deterministic():
    a = make_control(40, 8, seed=123)
    b = make_control(40, 8, seed=123)
    c = make_control(40, 8, seed=124)
    assert np.array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, c.rows)
    assert a.is_control


def test_make_control_variance_matches_one_over_dim():
    dim = 64
    table = make_control(2000, dim, seed=5)
    assert abs(float(table.rows.mean()) - 0.0) < 1e-3
    assert abs(float(table.rows.var()) - 1.0 / dim) < 1e-3


def test_make_control_row_norms_concentrate():
    # N(0, 1/dim) rows have expected squared norm 1; at dim 4096 the spread
    # is tight, so virtually every row norm lands within 20% of 1.
    table = make_control(500, 4096, seed=11)
    norms = np.linalg.norm(table.rows.astype(np.float64), axis=1)
    frac = np.mean((norms > 0.8) & (norms < 1.2))
    assert frac >= 0.99


@pytest.mark.slow
def test_make_control_paper_scale_mean():
    # full-size control table: 50257 x 4096, seed 0
    table = make_control(50257, 4096, seed=0)
    mean = float(table.rows.mean(dtype=np.float64))
    assert abs(mean) < 1e-3
