import struct
from collections import Counter

import numpy as np
import pytest

from boltzmann.services.data import (
    BinaryDataset,
    bars_stripes_dataset,
    bars_stripes_distribution,
    bars_stripes_entropy,
    binarize,
    is_bars_stripes,
    load_bmat,
    load_csv,
    load_dataset,
    load_idx,
    minibatches,
    save_bmat,
    save_csv,
    save_idx,
)
from boltzmann.services.exceptions import ConfigError, ContractViolation, DataFormatError
from boltzmann.services.sampling import RngStream


def _write_idx(path, images: np.ndarray, magic: int = 0x00000803):
    count, rows, cols = images.shape
    path.write_bytes(struct.pack('>IIII', magic, count, rows, cols) + images.astype(np.uint8).tobytes())
    return path


class TestBinaryDataset:

    def test_rejects_non_binary(self):
        with pytest.raises(ContractViolation):
            BinaryDataset([[0, 0.5]])

    def test_rejects_bad_weights(self):
        with pytest.raises(ContractViolation):
            BinaryDataset([[0, 1], [1, 1]], weights=[1, 0])

    def test_expanded_and_mean(self):
        data = BinaryDataset([[0, 1], [1, 1]], weights=[3, 1])
        assert data.expanded().shape == (4, 2)
        np.testing.assert_allclose(data.mean(), [0.25, 1.0])


class TestBarsStripes:

    def test_three_by_three(self):
        distribution = bars_stripes_distribution(3)
        probs = sorted(p for _, p in distribution)
        assert len(distribution) == 14
        assert probs.count(1 / 8) == 2 and probs.count(1 / 16) == 12

    def test_two_by_two(self):
        assert len(bars_stripes_distribution(2)) == 6

    @pytest.mark.parametrize('D', [1, 2, 3, 4, 5])
    def test_normalised(self, D):
        assert abs(sum(p for _, p in bars_stripes_distribution(D)) - 1.0) < 1e-12

    def test_membership(self):
        for pattern, _ in bars_stripes_distribution(3):
            assert is_bars_stripes(pattern, 3)
        assert not is_bars_stripes([1, 0, 0, 0, 0, 0, 0, 0, 0], 3)

    def test_distinct(self):
        assert len(bars_stripes_dataset(3, 'distinct')) == 14

    def test_weighted(self):
        data = bars_stripes_dataset(3, 'weighted')
        assert sorted(data.weights.tolist()) == [1.0] * 12 + [2.0, 2.0]
        assert len(data.expanded()) == 16

    def test_sampled_frequencies(self):
        data = bars_stripes_dataset(3, 'sampled', 100000, RngStream(0))
        counts = Counter(row.astype(np.uint8).tobytes() for row in data.rows)
        for pattern, prob in bars_stripes_distribution(3):
            assert abs(counts[pattern.astype(np.uint8).tobytes()] / 100000 - prob) < 0.005

    def test_sampled_needs_count(self):
        with pytest.raises(ConfigError):
            bars_stripes_dataset(3, 'sampled')

    def test_entropy(self):
        assert bars_stripes_entropy(3) == pytest.approx(2.5994, abs=1e-4)


class TestIdx:

    def test_fixture_values(self, tmp_path):
        images = np.array([[[0, 255], [128, 0]], [[255, 255], [0, 0]]])
        loaded = load_idx(_write_idx(tmp_path / 'tiny-idx3-ubyte', images))
        np.testing.assert_allclose(loaded, [[0, 1, 0.50196, 0], [1, 1, 0, 0]], atol=1e-5)

    def test_empty_file(self, tmp_path):
        loaded = load_idx(_write_idx(tmp_path / 'empty', np.zeros((0, 2, 2))))
        assert loaded.shape == (0, 4)

    def test_wrong_magic(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_idx(_write_idx(tmp_path / 'bad', np.zeros((1, 2, 2)), magic=0x00000802))

    def test_truncated(self, tmp_path):
        path = _write_idx(tmp_path / 'short', np.zeros((2, 2, 2)))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(DataFormatError):
            load_idx(path)

    def test_save_then_load(self, tmp_path):
        images = np.array([[0.0, 1.0, 1.0, 0.0]])
        np.testing.assert_array_equal(load_idx(save_idx(images, tmp_path / 'out.idx')), images)


class TestBinarize:

    def test_threshold(self):
        data = binarize(np.array([[0.0, 0.49, 0.5, 1.0]]), 'threshold', 0.5)
        np.testing.assert_array_equal(data.rows, [[0, 0, 1, 1]])

    def test_stochastic_extremes(self):
        data = binarize(np.array([[0.0, 1.0] * 50]), 'stochastic', rng=RngStream(0))
        np.testing.assert_array_equal(data.rows, [[0.0, 1.0] * 50])

    def test_stochastic_half(self):
        data = binarize(np.full((100, 1000), 0.5), 'stochastic', rng=RngStream(1))
        assert abs(data.rows.mean() - 0.5) < 0.01

    def test_out_of_range(self):
        with pytest.raises(ContractViolation):
            binarize(np.array([[1.5]]))


class TestFiles:

    def test_bmat(self, tmp_path):
        data = bars_stripes_dataset(3, 'weighted')
        loaded = load_bmat(save_bmat(data, tmp_path / 'bars.bmat'))
        np.testing.assert_array_equal(loaded.rows, data.expanded())

    def test_bmat_bad_magic(self, tmp_path):
        path = tmp_path / 'x.bmat'
        path.write_bytes(b'NOPE' + bytes(16))
        with pytest.raises(DataFormatError):
            load_bmat(path)

    def test_csv_keeps_weights(self, tmp_path):
        data = bars_stripes_dataset(2, 'weighted')
        loaded = load_csv(save_csv(data, tmp_path / 'bars.csv'))
        np.testing.assert_array_equal(loaded.rows, data.rows)
        np.testing.assert_array_equal(loaded.weights, data.weights)


class TestLoadDataset:

    def test_bars_stripes_source(self):
        data = load_dataset('bars-stripes:3')
        assert (len(data), data.m) == (14, 9)
        assert len(load_dataset('bars-stripes:2:distinct')) == 6
        assert len(load_dataset('bars-stripes:3:sampled:40', seed=2)) == 40

    def test_bad_source(self):
        with pytest.raises(ConfigError):
            load_dataset('bars-stripes:x')

    def test_idx_source_with_limit(self, tmp_path):
        path = _write_idx(tmp_path / 'imgs-idx3-ubyte', np.full((5, 2, 2), 255))
        data = load_dataset(str(path), 'threshold', limit=3)
        assert len(data) == 3
        np.testing.assert_array_equal(data.rows, 1.0)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(str(tmp_path / 'absent.bmat'))


class TestMinibatches:

    def test_full_batch(self):
        data = bars_stripes_dataset(3, 'weighted')
        batches = list(minibatches(data, 16, True, RngStream(0)))
        assert len(batches) == 1 and batches[0].shape == (16, 9)

    def test_epoch_covers_multiset(self):
        rows = np.random.default_rng(0).integers(0, 2, (23, 5)).astype(float)
        batches = list(minibatches(rows, 5, True, RngStream(3)))
        assert [len(b) for b in batches] == [5, 5, 5, 5, 3]
        key = lambda r: r.tobytes()
        assert sorted(map(key, np.vstack(batches))) == sorted(map(key, rows))

    def test_same_seed_same_order(self):
        rows = np.eye(10)
        first = list(minibatches(rows, 3, True, RngStream(1)))
        second = list(minibatches(rows, 3, True, RngStream(1)))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_invalid_batch_size(self):
        with pytest.raises(ConfigError):
            list(minibatches(np.eye(3), 0, False, None))
