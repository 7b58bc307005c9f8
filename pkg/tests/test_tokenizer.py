import numpy as np
import pytest

from conftest import check_gradients
from pointlink.geometry import PointCloud, synth_shape
from pointlink.rng import RandomSource
from pointlink.tensor import Tensor
from pointlink.tokenizer import (SetAbstraction, SetAbstractionConfig,
                                 tokenize)


def stage(source, sample_count=16, radius=0.3, k=8, widths=(8, 8), feature_dim=3):
    cfg = SetAbstractionConfig(sample_count, radius, k, list(widths))
    return SetAbstraction(cfg, feature_dim, source)


class TestConfig:
    def test_rejects_empty_widths(self):
        with pytest.raises(ValueError):
            SetAbstractionConfig(4, 0.2, 8, [])

    def test_rejects_zero_samples(self):
        with pytest.raises(ValueError):
            SetAbstractionConfig(0, 0.2, 8, [8])


class TestSetAbstraction:
    def test_self_neighbor_sees_zero_relative_coords(self, source):
        """K=1: the descending-index rule picks the highest in-radius index.
        With a radius tight enough that each centroid only finds itself, the
        grouped relative coordinates are all zero, so the embedding is the
        pointwise map of (features, 0, 0, 0)."""
        pts = np.array([[0.0, 0, 0], [0.5, 0, 0], [1.0, 0, 0]])
        sa = stage(source, sample_count=3, radius=1e-6, k=1, widths=(4,))
        feats = Tensor(pts)
        tokens = sa(pts, feats)
        order = tokens.indices
        direct = sa.pointwise(
            Tensor(np.hstack([pts[order], np.zeros((3, 3))])))
        np.testing.assert_allclose(tokens.embeddings.data,
                                   direct.data[:, None, :].squeeze(1))

    def test_translation_shifts_group_tensor_uniformly(self, source):
        """Relative coordinates ignore global translation; with
        coordinate-only features the grouped feature block shifts by exactly
        the translation."""
        src = RandomSource(3)
        pts = src.uniform((32, 3))
        shift = np.array([10.0, -4.0, 2.5])
        sa = stage(source, sample_count=8, radius=0.4, k=4)
        base = sa(pts, Tensor(pts))
        moved = sa(pts + shift, Tensor(pts + shift))
        np.testing.assert_array_equal(base.indices, moved.indices)
        np.testing.assert_allclose(moved.centroids - base.centroids,
                                   np.tile(shift, (8, 1)), atol=1e-12)

    def test_dimension_trace_matches_flow(self, source):
        """N=256 -> N'=64 centroids, K=16 grouped rows of C+3=6, lifted to
        C'=32, pooled to (64, 32)."""
        cloud = synth_shape("sphere", 256, RandomSource(1))
        sa = stage(source, sample_count=64, radius=0.2, k=16, widths=(32, 32))
        tokens = sa(cloud.points, Tensor(cloud.points))
        assert tokens.embeddings.shape == (64, 32)
        assert tokens.centroids.shape == (64, 3)
        table_shape = (64, 16, 3 + 3)
        grouped_width = sa.pointwise.layers[0].w.shape[0]
        assert grouped_width == table_shape[2]

    def test_neighbor_permutation_invariance(self, source):
        """Max pooling makes the embedding invariant to any permutation of a
        centroid's K neighbor rows; emulated by permuting the pointwise
        input rows directly."""
        sa = stage(source, widths=(6,))
        src = RandomSource(9)
        rows = Tensor(src.uniform((1, 5, 6)))
        pooled = sa.pointwise(rows).max(axis=1)
        perm = src.permutation(5)
        pooled_perm = sa.pointwise(Tensor(rows.data[:, perm])).max(axis=1)
        np.testing.assert_allclose(pooled.data, pooled_perm.data, atol=1e-15)

    def test_gradient_via_finite_differences(self, source):
        src = RandomSource(5)
        pts = src.uniform((20, 3))
        sa = stage(source, sample_count=6, radius=0.5, k=4, widths=(5, 4))
        params = [p for p in sa.parameters()]

        def loss():
            tokens = sa(pts, Tensor(pts))
            return (tokens.embeddings ** 2).sum()

        check_gradients(loss, params)


class TestTokenize:
    def test_desk_shape(self, source):
        cloud = synth_shape("torus", 256, RandomSource(2))
        sa = stage(source, sample_count=64, radius=0.2, k=16, widths=(32, 32))
        tokens = tokenize(cloud, sa)
        assert tokens.embeddings.shape == (64, 32)
        assert len(tokens) == 64

    def test_paper_scale_counts(self, source):
        # N=2048 -> N'=512 shape check only
        cloud = synth_shape("sphere", 2048, RandomSource(3))
        sa = stage(source, sample_count=512, radius=0.2, k=16, widths=(16,))
        tokens = tokenize(cloud, sa)
        assert tokens.embeddings.shape == (512, 16)

    def test_identical_inputs_identical_outputs(self, source):
        cloud = synth_shape("plane", 64, RandomSource(4))
        sa = stage(source, sample_count=16, radius=0.3, k=8)
        a = tokenize(cloud, sa)
        b = tokenize(cloud, sa)
        np.testing.assert_array_equal(a.embeddings.data, b.embeddings.data)
        np.testing.assert_array_equal(a.indices, b.indices)
