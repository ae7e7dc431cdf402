import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlbench.datasets import (
    DenseDataset,
    ImageSample,
    export_csv,
    glyph_stencil,
    load_idx,
    load_libsvm,
    sample_minibatch,
    scale_features,
    synth_classification,
    synth_glyphs,
    write_libsvm,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


class TestLibsvm:
    def test_dense_row_with_gaps(self, tmp_path):
        f = tmp_path / "a.libsvm"
        write_lines(f, ["+1 1:0.5 3:-1"])
        data = load_libsvm(f)
        assert data.n_dims == 3
        np.testing.assert_array_equal(data.features[0], [0.5, 0.0, -1.0])
        assert data.labels[0] == 1

    def test_label_only_line_is_all_zeros(self, tmp_path):
        f = tmp_path / "a.libsvm"
        write_lines(f, ["-1", "+1 2:3.0"])
        data = load_libsvm(f)
        np.testing.assert_array_equal(data.features[0], [0.0, 0.0])
        assert data.labels[0] == 0

    def test_n_dims_inferred_from_max_index(self, tmp_path):
        # oracle: hand-written file, max index across all lines wins
        f = tmp_path / "a.libsvm"
        write_lines(f, ["+1 2:1", "-1 5:1", "+1 1:2"])
        data = load_libsvm(f)
        assert data.n_dims == 5
        assert data.n_rows == 3

    def test_malformed_token_reports_line_number(self, tmp_path):
        f = tmp_path / "a.libsvm"
        write_lines(f, ["+1 1:0.5", "-1 nonsense"])
        with pytest.raises(ValueError, match=":2:"):
            load_libsvm(f)

    def test_non_ascending_indices_rejected(self, tmp_path):
        f = tmp_path / "a.libsvm"
        write_lines(f, ["+1 3:1 2:1"])
        with pytest.raises(ValueError, match="ascending"):
            load_libsvm(f)

    def test_empty_file_rejected(self, tmp_path):
        f = tmp_path / "a.libsvm"
        f.write_text("")
        with pytest.raises(ValueError, match="empty"):
            load_libsvm(f)

    def test_write_read_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        features = rng.normal(size=(20, 7))
        features[rng.random(size=features.shape) < 0.3] = 0.0
        features[:, -1] = 1.0  # keep last column nonzero so n_dims survives
        data = DenseDataset(features, rng.integers(0, 2, size=20))
        f = tmp_path / "rt.libsvm"
        write_libsvm(data, f)
        back = load_libsvm(f)
        np.testing.assert_array_equal(back.labels, data.labels)
        np.testing.assert_allclose(back.features, data.features, atol=1e-12)


class TestIdx:
    def test_round_trip_tiny_file(self, tmp_path):
        import struct

        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(4, 3, 2), dtype=np.uint8)
        labels = np.array([0, 3, 9, 1], dtype=np.uint8)
        img_path = tmp_path / "img.idx"
        lbl_path = tmp_path / "lbl.idx"
        img_path.write_bytes(struct.pack(">IIII", 0x803, 4, 3, 2) + images.tobytes())
        lbl_path.write_bytes(struct.pack(">II", 0x801, 4) + labels.tobytes())
        samples = load_idx(img_path, lbl_path)
        assert len(samples) == 4
        assert [s.label for s in samples] == [0, 3, 9, 1]
        np.testing.assert_allclose(samples[2].pixels, images[2] / 255.0)

    def test_bad_magic_rejected(self, tmp_path):
        import struct

        img_path = tmp_path / "img.idx"
        img_path.write_bytes(struct.pack(">IIII", 0x123, 1, 1, 1) + b"\x00")
        with pytest.raises(ValueError, match="magic"):
            load_idx(img_path, img_path)


class TestScaleFeatures:
    def test_endpoints_and_midpoint(self):
        data = DenseDataset(np.array([[0.0], [5.0], [10.0]]), [0, 1, 0])
        scaled = scale_features(data)
        np.testing.assert_allclose(scaled.features[:, 0], [-1.0, 0.0, 1.0])

    def test_constant_column_becomes_zero(self):
        data = DenseDataset(np.array([[7.0, 1.0], [7.0, 2.0], [7.0, 3.0]]), [0, 1, 0])
        scaled = scale_features(data)
        np.testing.assert_array_equal(scaled.features[:, 0], [0.0, 0.0, 0.0])

    def test_two_point_column(self):
        data = DenseDataset(np.array([[2.0], [4.0]]), [0, 1])
        scaled = scale_features(data)
        np.testing.assert_allclose(scaled.features[:, 0], [-1.0, 1.0])

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_idempotent_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        data = DenseDataset(
            rng.normal(scale=5.0, size=(8, 4)), rng.integers(0, 2, size=8)
        )
        once = scale_features(data)
        assert once.features.min() >= -1.0 and once.features.max() <= 1.0
        twice = scale_features(once)
        np.testing.assert_allclose(twice.features, once.features, atol=1e-12)


class TestSynthClassification:
    def test_deterministic(self):
        a = synth_classification(100, 10, 4.0, seed=1)
        b = synth_classification(100, 10, 4.0, seed=1)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_balanced_labels(self):
        for n in (10, 11):
            data = synth_classification(n, 3, 1.0, seed=2)
            ones = int(data.labels.sum())
            assert abs(ones - (n - ones)) <= 1

    def test_margin_separates_clusters(self):
        # oracle: projecting onto the class-mean difference separates margin=6 data
        data = synth_classification(400, 10, 6.0, seed=5)
        mu1 = data.features[data.labels == 1].mean(axis=0)
        mu0 = data.features[data.labels == 0].mean(axis=0)
        w = mu1 - mu0
        proj = data.features @ w
        threshold = (mu1 + mu0) @ w / 2
        accuracy = ((proj > threshold).astype(int) == data.labels).mean()
        assert accuracy >= 0.95

    def test_margin_zero_is_unseparable(self):
        data = synth_classification(400, 10, 0.0, seed=5)
        mu1 = data.features[data.labels == 1].mean(axis=0)
        mu0 = data.features[data.labels == 0].mean(axis=0)
        w = mu1 - mu0
        proj = data.features @ w
        accuracy = ((proj > proj.mean()).astype(int) == data.labels).mean()
        assert 0.35 <= accuracy <= 0.65

    def test_tiny_n_rejected(self):
        with pytest.raises(ValueError):
            synth_classification(1, 3, 1.0, seed=0)


class TestSynthGlyphs:
    def test_noiseless_samples_equal_stencil(self):
        samples = synth_glyphs(2, 8, 0.0, seed=9)
        threes = [s for s in samples if s.label == 3]
        assert len(threes) == 2
        np.testing.assert_array_equal(threes[0].pixels, threes[1].pixels)
        np.testing.assert_array_equal(threes[0].pixels, glyph_stencil(3, 8))

    def test_nearest_stencil_classifier_is_perfect_on_noiseless(self):
        # oracle: match each sample to the closest stencil by squared distance
        samples = synth_glyphs(3, 16, 0.0, seed=4)
        stencils = np.stack([glyph_stencil(c, 16) for c in range(10)])
        for s in samples:
            d = ((stencils - s.pixels) ** 2).sum(axis=(1, 2))
            assert int(np.argmin(d)) == s.label

    def test_counts_and_uniform_labels(self):
        samples = synth_glyphs(5, 8, 0.1, seed=1)
        assert len(samples) == 50
        counts = np.bincount([s.label for s in samples], minlength=10)
        np.testing.assert_array_equal(counts, [5] * 10)

    def test_stencils_pairwise_distinct(self):
        stencils = [glyph_stencil(c, 8) for c in range(10)]
        for i in range(10):
            for j in range(i + 1, 10):
                assert not np.array_equal(stencils[i], stencils[j])

    def test_noise_bounds_respected(self):
        samples = synth_glyphs(2, 8, 0.8, seed=7)
        for s in samples:
            assert s.pixels.min() >= 0.0 and s.pixels.max() <= 1.0

    def test_deterministic(self):
        a = synth_glyphs(2, 10, 0.3, seed=11)
        b = synth_glyphs(2, 10, 0.3, seed=11)
        for x, y in zip(a, b):
            assert x.label == y.label
            np.testing.assert_array_equal(x.pixels, y.pixels)

    def test_bad_noise_rejected(self):
        with pytest.raises(ValueError, match="noise"):
            synth_glyphs(1, 8, 1.5, seed=0)

    def test_small_size_rejected(self):
        with pytest.raises(ValueError, match="size"):
            synth_glyphs(1, 4, 0.0, seed=0)


class TestSampleMinibatch:
    def setup_method(self):
        self.data = synth_classification(10, 3, 1.0, seed=0)

    def test_full_batch_is_permutation(self):
        batch = sample_minibatch(self.data, 10, np.random.default_rng(1))
        assert sorted(batch.row_indices.tolist()) == list(range(10))

    def test_same_stream_same_batch(self):
        a = sample_minibatch(self.data, 4, np.random.default_rng(42))
        b = sample_minibatch(self.data, 4, np.random.default_rng(42))
        np.testing.assert_array_equal(a.row_indices, b.row_indices)

    def test_no_replacement_within_draw(self):
        batch = sample_minibatch(self.data, 8, np.random.default_rng(3))
        assert len(set(batch.row_indices.tolist())) == 8

    def test_uniform_frequencies(self):
        # oracle: multinomial counting, each index within 3 sigma of n/10
        rng = np.random.default_rng(0)
        draws = 10**5
        counts = np.zeros(10)
        for _ in range(draws):
            counts[sample_minibatch(self.data, 1, rng).row_indices[0]] += 1
        expected = draws / 10
        sigma = np.sqrt(draws * 0.1 * 0.9)
        assert np.all(np.abs(counts - expected) <= 3 * sigma)

    def test_oversized_batch_rejected(self):
        with pytest.raises(ValueError):
            sample_minibatch(self.data, 11, np.random.default_rng(0))


class TestExportCsv:
    def test_header_and_determinism(self, tmp_path):
        data = synth_classification(5, 3, 1.0, seed=8)
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        export_csv(data, f1)
        export_csv(data, f2)
        assert f1.read_bytes() == f2.read_bytes()
        header = f1.read_text().splitlines()[0]
        assert header == "f0,f1,f2,label"

    def test_values_round_trip_exactly(self, tmp_path):
        data = synth_classification(5, 3, 1.0, seed=8)
        f = tmp_path / "a.csv"
        export_csv(data, f)
        lines = f.read_text().splitlines()[1:]
        parsed = np.array([[float(v) for v in line.split(",")[:-1]] for line in lines])
        np.testing.assert_array_equal(parsed, data.features)


class TestImageSample:
    def test_rejects_out_of_range_pixels(self):
        with pytest.raises(ValueError):
            ImageSample(np.array([[1.5]]), 0)
