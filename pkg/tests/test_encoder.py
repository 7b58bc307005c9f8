import numpy as np
import pytest

from conftest import check_gradients, rand_tensor
from pointlink.encoder import (AuxiliaryEncoder, ChannelAdapter, MainEncoder,
                               PointTransformerBlock, VectorAttention,
                               logit_width)
from pointlink.geometry import synth_shape
from pointlink.rng import RandomSource
from pointlink.tensor import Tensor
from pointlink.tokenizer import SetAbstraction, SetAbstractionConfig, tokenize


def make_tokens(source, n=16, dim=8, n_points=64):
    cloud = synth_shape("sphere", n_points, RandomSource(17))
    sa = SetAbstraction(SetAbstractionConfig(n, 0.35, 8, [dim, dim]), 3, source)
    return tokenize(cloud, sa)


class TestLogitWidth:
    def test_square_orders(self):
        assert logit_width(4) == 4
        assert logit_width(16) == 8
        assert logit_width(64) == 16
        assert logit_width(256) == 32

    def test_non_square_rejected(self):
        for m in (8, 32, 100):
            with pytest.raises(ValueError):
                logit_width(m)


class TestVectorAttention:
    def test_single_neighbor_degenerates_to_value_plus_position(self, source):
        dim = 6
        attn = VectorAttention(dim, source)
        feats = rand_tensor(source, (4, dim))
        coords = Tensor(RandomSource(3).uniform((4, 3)))
        idx = np.array([[1], [2], [3], [0]])  # k = 1
        out = attn(feats, coords, idx)
        rel = coords.data[:, None, :] - coords.data[idx]
        pos = attn.pos_mlp(Tensor(rel)).data
        val = attn.value(feats).data[idx]
        np.testing.assert_allclose(out.data, (val + pos).squeeze(1), atol=1e-12)

    def test_zeroed_score_mlp_gives_uniform_weights(self, source):
        dim = 5
        attn = VectorAttention(dim, source)
        for layer in attn.attn_mlp.layers:
            layer.w.data[...] = 0.0
            layer.b.data[...] = 0.0
        feats = rand_tensor(source, (6, dim))
        coords = Tensor(RandomSource(4).uniform((6, 3)))
        idx = np.array([[1, 2, 3]] * 6)
        out = attn(feats, coords, idx)
        pos = attn.pos_mlp(Tensor(coords.data[:, None, :] - coords.data[idx])).data
        val = attn.value(feats).data[idx]
        np.testing.assert_allclose(out.data, (val + pos).mean(axis=1), atol=1e-12)

    def test_weights_sum_to_one_per_channel(self, source):
        dim = 4
        attn = VectorAttention(dim, source)
        feats = rand_tensor(source, (5, dim))
        coords = Tensor(RandomSource(5).uniform((5, 3)))
        idx = np.array([[0, 1], [2, 3], [4, 0], [1, 2], [3, 4]])
        q = attn.query(feats).reshape(5, 1, dim)
        from pointlink import tensor as T
        key = T.take_rows(attn.key(feats), idx)
        pos = attn.pos_mlp(Tensor(coords.data[:, None, :] - coords.data[idx]))
        scores = attn.attn_mlp(q - key + pos) * (1.0 / np.sqrt(dim))
        w = scores.softmax(axis=1)
        np.testing.assert_allclose(w.data.sum(axis=1), np.ones((5, dim)),
                                   atol=1e-12)

    def test_gradient_four_tokens_two_neighbors(self, source):
        dim = 4
        attn = VectorAttention(dim, source)
        feats = rand_tensor(source, (4, dim))
        coords = Tensor(RandomSource(6).uniform((4, 3)))
        idx = np.array([[1, 2], [0, 3], [3, 0], [2, 1]])
        params = list(attn.parameters()) + [feats]
        check_gradients(lambda: (attn(feats, coords, idx) ** 2).sum(), params)


class TestPointTransformerBlock:
    def test_zeroed_attention_path_is_residual_plus_bias(self, source):
        dim = 5
        block = PointTransformerBlock(dim, source)
        # zero every learned map in the attention path
        for p in block.parameters():
            p.data[...] = 0.0
        block.post.b.data[...] = 3.0
        feats = rand_tensor(source, (6, dim))
        coords = Tensor(RandomSource(7).uniform((6, 3)))
        idx = np.array([[0, 1]] * 6)
        out = block(feats, coords, idx)
        np.testing.assert_allclose(out.data, feats.data + 3.0, atol=1e-12)

    def test_shape_preserved(self, source):
        block = PointTransformerBlock(8, source)
        feats = rand_tensor(source, (10, 8))
        coords = Tensor(RandomSource(8).uniform((10, 3)))
        idx = np.array([[i, (i + 1) % 10] for i in range(10)])
        assert block(feats, coords, idx).shape == (10, 8)

    def test_gradient(self, source):
        block = PointTransformerBlock(3, source)
        feats = rand_tensor(source, (4, 3))
        coords = Tensor(RandomSource(9).uniform((4, 3)))
        idx = np.array([[1, 2], [0, 2], [3, 1], [0, 2]])
        check_gradients(lambda: (block(feats, coords, idx) ** 2).sum(),
                        list(block.parameters()))


class TestBranchEncoders:
    def _main(self, source, n_tokens=16, dim=8, n_coarse=4, n_main=10, m=16):
        coarse_cfg = SetAbstractionConfig(n_coarse, 0.6, 8, [dim, dim])
        return MainEncoder(dim, n_tokens, coarse_cfg, n_main, m, attn_k=4,
                           head_widths=[16, 16], source=source)

    def test_desk_shape(self, source):
        enc = self._main(source)
        tokens = make_tokens(source)
        logits = enc(tokens)
        assert logits.shape == (10, 8)  # n_main x 2 sqrt(M)

    def test_ratio_two_to_one(self):
        # 300 symbols at 2:1 -> 200 main rows of width 16 for M=64
        n_mod, a, b = 300, 2, 1
        n_main = n_mod * a // (a + b)
        assert n_main == 200
        assert n_mod - n_main == 100
        assert logit_width(64) == 16

    def test_full_scale_logit_shape(self, source):
        """N'=512 tokens, second stage to N''=128, 64-QAM, 300 symbols at
        2:1: the main branch must emit 200 rows of 16 logits."""
        dim = 32  # trimmed embedding width; the row/column contract is the point
        coarse_cfg = SetAbstractionConfig(128, 0.4, 16, [dim, dim])
        enc = MainEncoder(dim, 512, coarse_cfg, n_main=200, mod_order=64,
                          attn_k=16, head_widths=[64, 64], source=source)
        cloud = synth_shape("torus", 2048, RandomSource(19))
        sa = SetAbstraction(SetAbstractionConfig(512, 0.2, 16, [dim, dim]), 3,
                            source.derive("sa"))
        tokens = tokenize(cloud, sa)
        assert enc(tokens).shape == (200, 16)

    def test_ratio_four_to_one(self):
        n_mod, a, b = 50, 4, 1
        n_main = n_mod * a // (a + b)
        assert n_main == 40
        assert n_mod - n_main == 10

    def test_all_zero_parameters_give_zero_logits(self, source):
        enc = self._main(source)
        for p in enc.parameters():
            p.data[...] = 0.0
        tokens = make_tokens(source)
        np.testing.assert_array_equal(enc(tokens).data, np.zeros((10, 8)))

    def test_auxiliary_shape(self, source):
        enc = AuxiliaryEncoder(8, 16, 5, 16, attn_k=4, head_widths=[16, 16],
                               source=source)
        tokens = make_tokens(source)
        assert enc(tokens).shape == (5, 8)

    def test_deterministic_given_parameters(self, source):
        enc = self._main(source)
        tokens = make_tokens(source)
        np.testing.assert_array_equal(enc(tokens).data, enc(tokens).data)

    def test_end_to_end_gradient(self, source):
        """tokens -> logits finite-difference check on a tiny config."""
        enc = self._main(source, n_tokens=6, dim=3, n_coarse=2, n_main=3, m=4)
        src = RandomSource(21)
        pts = src.uniform((12, 3))
        sa = SetAbstraction(SetAbstractionConfig(6, 0.5, 4, [3]), 3,
                            source.derive("sa"))
        params = list(enc.parameters())[:6]  # spot-check a slice of the chain

        def loss():
            tokens = sa(pts, Tensor(pts))
            return (enc(tokens) ** 2).sum()

        check_gradients(loss, params)


class TestChannelAdapter:
    def test_zero_weights_give_zero_logits_any_snr(self, source):
        adapter = ChannelAdapter(16, source)
        for p in adapter.parameters():
            p.data[...] = 0.0
        logits = rand_tensor(source, (7, 8))
        for snr in (-5.0, 0.0, 20.0):
            np.testing.assert_array_equal(adapter(logits, snr).data,
                                          np.zeros((7, 8)))

    def test_snr_scaled_by_ten(self, source):
        """At 10 dB the appended condition feature is exactly 1.0: probe it
        by wiring the first layer to read only that column."""
        adapter = ChannelAdapter(4, source)
        first = adapter.refine.layers[0]
        first.w.data[...] = 0.0
        first.w.data[-1, :] = 1.0  # every hidden unit = the condition feature
        first.b.data[...] = 0.0
        second = adapter.refine.layers[1]
        second.w.data[...] = 0.0
        second.w.data[:, 0] = 1.0 / first.w.shape[1]
        second.b.data[...] = 0.0
        out = adapter(Tensor(np.zeros((3, 4))), 10.0)
        np.testing.assert_allclose(out.data[:, 0], 1.0)
        out20 = adapter(Tensor(np.zeros((3, 4))), 20.0)
        np.testing.assert_allclose(out20.data[:, 0], 2.0)

    def test_output_shape_matches_input(self, source):
        adapter = ChannelAdapter(64, source)
        logits = rand_tensor(source, (12, 16))
        assert adapter(logits, 3.3).shape == (12, 16)

    def test_gradient(self, source):
        adapter = ChannelAdapter(4, source)
        logits = rand_tensor(source, (3, 4))
        check_gradients(lambda: (adapter(logits, 5.0) ** 2).sum(),
                        list(adapter.parameters()) + [logits])
