"""The end-to-end link: tokenizer, branch encoders, modulator, channel,
receiver, composed per an ExperimentConfig."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .channel import (ChannelRealization, noise_power_for_snr, perturb_csi,
                      transmit_awgn, transmit_rayleigh, zf_equalize)
from .config import ExperimentConfig
from .decoder import CloudDecoder, Demodulator, Detokenizer, zero_pad
from .encoder import AuxiliaryEncoder, ChannelAdapter, MainEncoder
from .geometry import PointCloud
from .modulation import (RateDecision, SymbolStream, apply_rate_mask,
                         make_codebook, modulate, normalize_power,
                         RateAllocator)
from .nn import Module
from .rng import RandomSource
from .tensor import Tensor
from .tokenizer import SetAbstraction, SetAbstractionConfig, TokenSet, tokenize


@dataclass
class LinkResult:
    """Everything one transmission produced."""

    recon: Tensor                   # (N, 3) reconstructed coordinates
    logits: Tensor                  # (n_symbols, 2 sqrt M) pre-modulation
    sent: SymbolStream              # post-mask, post-normalization
    decision: RateDecision | None
    realization: ChannelRealization | None
    n_send: Tensor                  # scalar node (constant when no allocator)
    tokens: TokenSet

    @property
    def n_send_value(self) -> int:
        return int(round(float(self.n_send.data)))


class LinkSystem(Module):
    """All learned pieces of the chain, wired per the config."""

    def __init__(self, cfg: ExperimentConfig, source: RandomSource):
        self.cfg = cfg
        widths = [cfg.embed_dim, cfg.embed_dim]
        head = [cfg.head_hidden, cfg.head_hidden]
        self.tokenizer = SetAbstraction(
            SetAbstractionConfig(cfg.n_tokens, cfg.sa_radius, cfg.sa_k, widths),
            feature_dim=3, source=source.derive("tokenizer"))
        self.encoder_main = MainEncoder(
            cfg.embed_dim, cfg.n_tokens,
            SetAbstractionConfig(cfg.n_tokens_coarse, cfg.sa_radius_coarse,
                                 cfg.sa_k, widths),
            cfg.n_main, cfg.mod_order, cfg.attn_k, head,
            source.derive("encoder_main"))
        self.encoder_aux = AuxiliaryEncoder(
            cfg.embed_dim, cfg.n_tokens, cfg.n_auxi, cfg.mod_order,
            cfg.attn_k, head, source.derive("encoder_aux"))
        if cfg.channel_adapter:
            self.adapter_main = ChannelAdapter(
                cfg.mod_order, source.derive("adapter_main"), cfg.adapter_hidden)
            self.adapter_aux = ChannelAdapter(
                cfg.mod_order, source.derive("adapter_aux"), cfg.adapter_hidden)
        if cfg.rate_allocator:
            self.rate = RateAllocator(cfg.n_symbols, cfg.n_main, cfg.n_auxi,
                                      cfg.temperature, source.derive("rate"))
        self.codebook = make_codebook(cfg.mod_order)
        self.demod = Demodulator(cfg.n_symbols, cfg.n_demod, cfg.n_fine,
                                 source.derive("demod"))
        self.decoder = CloudDecoder(cfg.n_demod, cfg.n_fine, cfg.attn_k,
                                    source.derive("decoder"))
        self.detokenizer = Detokenizer(cfg.n_demod, cfg.offset_range,
                                       source.derive("detokenizer"))

    # ---- transmitter ---------------------------------------------------------

    def encode(self, cloud: PointCloud, snr: float) -> tuple[Tensor, TokenSet]:
        """Cloud -> concatenated (main, auxiliary) logit rows."""
        tokens = tokenize(cloud, self.tokenizer)
        y_main = self.encoder_main(tokens)
        y_aux = self.encoder_aux(tokens)
        if self.cfg.channel_adapter:
            y_main = self.adapter_main(y_main, snr)
            y_aux = self.adapter_aux(y_aux, snr)
        return T.concat([y_main, y_aux], axis=0), tokens

    def modulate_and_mask(self, logits: Tensor,
                          noise_source: RandomSource | None,
                          soft_forward: bool = False
                          ) -> tuple[SymbolStream, RateDecision | None, Tensor]:
        """Logits -> (masked stream, rate decision, n_send node)."""
        cfg = self.cfg
        stream = modulate(logits, self.codebook, cfg.temperature,
                          noise_source, cfg.estimator, soft_forward=soft_forward)
        if cfg.rate_allocator:
            decision = self.rate(logits, noise_source)
            stream = apply_rate_mask(stream, decision, cfg.n_main)
            return stream, decision, decision.n_send
        return stream, None, Tensor(float(cfg.n_symbols))

    # ---- channel + receiver -----------------------------------------------------

    def channel_pass(self, sent: SymbolStream, snr: float,
                     channel_source: RandomSource,
                     kind: str | None = None
                     ) -> tuple[SymbolStream, ChannelRealization]:
        cfg = self.cfg
        kind = kind or cfg.channel
        p_noise = noise_power_for_snr(snr, cfg.target_power)
        if kind == "awgn":
            return transmit_awgn(sent, p_noise, channel_source)
        received, real = transmit_rayleigh(sent, p_noise, channel_source)
        real.gain_estimate = perturb_csi(real.gain, cfg.csi_noise, channel_source)
        return zf_equalize(received, real.gain_estimate), real

    def receive(self, received: SymbolStream) -> Tensor:
        padded = zero_pad(received, self.cfg.n_symbols)
        features = self.demod(padded)
        decoded = self.decoder(features)
        return self.detokenizer(decoded)

    # ---- full passes ---------------------------------------------------------

    def run_batch(self, clouds, snr: float, *,
                  noise_source: RandomSource | None,
                  channel_source: RandomSource | None,
                  channel_kind: str | None = None,
                  soft_forward: bool = False) -> list[LinkResult]:
        """One iteration over a batch: power normalization is shared across
        the whole batch (one scale per iteration)."""
        staged = []
        for cloud in clouds:
            logits, tokens = self.encode(cloud, snr)
            stream, decision, n_send = self.modulate_and_mask(
                logits, noise_source, soft_forward=soft_forward)
            staged.append((logits, tokens, stream, decision, n_send))
        normalized = normalize_power([s[2] for s in staged],
                                     self.cfg.target_power)
        results = []
        for (logits, tokens, _, decision, n_send), sent in zip(staged, normalized):
            if channel_source is not None:
                received, real = self.channel_pass(sent, snr, channel_source,
                                                   channel_kind)
            else:
                received, real = sent, None  # channel-free forward pass
            recon = self.receive(received)
            results.append(LinkResult(recon=recon, logits=logits, sent=sent,
                                      decision=decision, realization=real,
                                      n_send=n_send, tokens=tokens))
        return results

    def run(self, cloud: PointCloud, snr: float, *,
            noise_source: RandomSource | None = None,
            channel_source: RandomSource | None = None,
            channel_kind: str | None = None,
            soft_forward: bool = False) -> LinkResult:
        return self.run_batch([cloud], snr, noise_source=noise_source,
                              channel_source=channel_source,
                              channel_kind=channel_kind,
                              soft_forward=soft_forward)[0]

    def reconstruct(self, cloud: PointCloud, snr: float = 1000.0) -> np.ndarray:
        """Deterministic channel-free reconstruction (noiseless eval)."""
        return self.run(cloud, snr).recon.data
