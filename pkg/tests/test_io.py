from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ccaboot import InvalidInputError
from ccaboot.io import commit_files, read_matrix_csv, write_matrix_csv
from ccaboot.rng import derive_seed, substream


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_round_trip_is_exact(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    write_matrix_csv(path, M)
    np.testing.assert_array_equal(read_matrix_csv(path), M)


def test_header_and_errors(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n1,2\n3,4\n")
    np.testing.assert_array_equal(read_matrix_csv(p, header=True), [[1, 2], [3, 4]])
    with pytest.raises(InvalidInputError):
        read_matrix_csv(p)
    p.write_text("1,2\n3\n")
    with pytest.raises(InvalidInputError, match="ragged"):
        read_matrix_csv(p)


def test_commit_files_all_or_nothing(tmp_path, monkeypatch):
    calls = {"n": 0}
    real = os.replace

    def flaky(src, dst):
        calls["n"] += 1
        if calls["n"] == 1:
            raise OSError("disk full")
        return real(src, dst)

    monkeypatch.setattr(os, "replace", flaky)
    with pytest.raises(OSError):
        commit_files(tmp_path, {"a.txt": "1", "b.txt": "2"})
    assert list(tmp_path.iterdir()) == []
    # failure on the second rename rolls back the first
    calls["n"] = -1
    with pytest.raises(OSError):
        commit_files(tmp_path, {"a.txt": "1", "b.txt": "2"})
    assert list(tmp_path.iterdir()) == []
    monkeypatch.setattr(os, "replace", real)
    commit_files(tmp_path, {"a.txt": "1", "b.txt": "2"})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.txt", "b.txt"]


def test_substreams_are_keyed():
    a = substream(1, 2, 3).random(4)
    np.testing.assert_array_equal(a, substream(1, 2, 3).random(4))
    assert not np.array_equal(a, substream(1, 3, 2).random(4))
    assert derive_seed(1, 0) == derive_seed(1, 0) != derive_seed(1, 1)
    assert 0 <= derive_seed(2**64 - 1, 5) < 2**64
