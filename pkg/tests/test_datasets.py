import json

import numpy as np
import pytest

from radixspline import DatasetFormatError, DatasetSpec, generate, read_keys, write_keys
from radixspline.datasets import load_dataset, metadata_path, write_metadata


class TestGenerate:
    def test_uniform_dense(self):
        np.testing.assert_array_equal(generate(DatasetSpec("uniform_dense", 100)), np.arange(100))

    @pytest.mark.parametrize("kind", ["uniform_dense", "uniform_sparse", "lognormal", "segmented"])
    def test_sorted_distinct_and_deterministic(self, kind):
        spec = DatasetSpec(kind, 20_000, seed=7)
        keys = generate(spec)
        assert keys.dtype == np.uint64 and keys.size == 20_000
        assert np.all(keys[1:] > keys[:-1])
        np.testing.assert_array_equal(keys, generate(spec))

    def test_seed_changes_keys(self):
        a = generate(DatasetSpec("lognormal", 1000, seed=1))
        b = generate(DatasetSpec("lognormal", 1000, seed=2))
        assert not np.array_equal(a, b)

    def test_sparse_universe(self):
        keys = generate(DatasetSpec("uniform_sparse", 1000, seed=3, universe_bits=16))
        assert keys.max() < 2**16

    def test_universe_too_small(self):
        with pytest.raises(ValueError):
            DatasetSpec("uniform_sparse", 300, universe_bits=8)

    def test_lognormal_stays_in_range(self):
        keys = generate(DatasetSpec("lognormal", 100_000, seed=5))
        assert int(keys[-1]) <= 2**64 - 1
        assert int(keys[-1]) >= 2**63

    def test_segmented_is_piecewise_linear(self):
        keys = generate(DatasetSpec("segmented", 10_000, seed=2, segments=4)).astype(np.int64)
        assert keys[0] == 0
        assert np.unique(np.diff(keys)).size <= 4

    def test_duplicates_via_max_run(self):
        spec = DatasetSpec("uniform_sparse", 10_000, seed=4, max_run=5)
        keys = generate(spec)
        assert spec.allows_duplicates
        assert keys.size == 10_000
        assert np.all(keys[1:] >= keys[:-1])
        _, counts = np.unique(keys, return_counts=True)
        assert counts.max() <= 5 and counts.max() > 1

    @pytest.mark.parametrize("kwargs", [dict(kind="zipf", n=10), dict(kind="lognormal", n=0),
                                        dict(kind="lognormal", n=10, sigma=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            DatasetSpec(**kwargs)


class TestParse:
    def test_full(self):
        spec = DatasetSpec.parse("lognormal:n=1e6,seed=3,sigma=1.5,max_run=2")
        assert spec == DatasetSpec("lognormal", 1_000_000, seed=3, sigma=1.5, max_run=2)
        assert spec.label() == "lognormal_1000000_s3"

    def test_unknown_parameter(self):
        with pytest.raises(ValueError):
            DatasetSpec.parse("lognormal:n=10,colour=red")


class TestKeyFiles:
    def test_layout(self, tmp_path):
        path = tmp_path / "k.bin"
        write_keys(path, [1, 2, 3])
        raw = path.read_bytes()
        assert len(raw) == 32
        assert raw[:8] == (3).to_bytes(8, "little")
        assert raw[8:16] == (1).to_bytes(8, "little")

    def test_round_trip(self, tmp_path):
        keys = generate(DatasetSpec("uniform_sparse", 5000, seed=9))
        path = tmp_path / "k.bin"
        write_keys(path, keys)
        np.testing.assert_array_equal(read_keys(path), keys)

    def test_refuses_unsorted_write(self, tmp_path):
        with pytest.raises(DatasetFormatError):
            write_keys(tmp_path / "k.bin", [3, 2, 1])

    def test_unsorted_file(self, tmp_path):
        path = tmp_path / "k.bin"
        path.write_bytes(np.array([2, 5, 1], dtype="<u8").tobytes())
        with pytest.raises(DatasetFormatError, match="not sorted"):
            read_keys(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "k.bin"
        write_keys(path, [1, 2, 3])
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(DatasetFormatError, match="truncated"):
            read_keys(path)
        path.write_bytes(b"\1\0")
        with pytest.raises(DatasetFormatError, match="truncated"):
            read_keys(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "k.bin"
        write_keys(path, [1, 2, 3])
        path.write_bytes(path.read_bytes() + b"\0" * 8)
        with pytest.raises(DatasetFormatError, match="count mismatch"):
            read_keys(path)

    def test_metadata_sidecar(self, tmp_path):
        spec = DatasetSpec("segmented", 100, seed=1)
        path = tmp_path / "k.bin"
        out = write_metadata(path, spec)
        assert out == metadata_path(path)
        meta = json.loads(out.read_text())
        assert meta["kind"] == "segmented" and meta["n"] == 100 and meta["seed"] == 1


class TestLoadDataset:
    def test_sources(self, tmp_path):
        spec = DatasetSpec("uniform_dense", 10)
        path = tmp_path / "dense.bin"
        write_keys(path, generate(spec))
        for source in (spec, "uniform_dense:n=10", str(path)):
            _, keys = load_dataset(source)
            np.testing.assert_array_equal(keys, np.arange(10))

    def test_missing(self):
        with pytest.raises(FileNotFoundError):
            load_dataset("/nonexistent/file.bin")
