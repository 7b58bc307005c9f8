"""End-to-end training: per-batch SNR draws, shared power normalization,
Adam with the halving schedule, and an append-only run record."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig
from .dataset import dataset_hash
from .metrics import chamfer, total_loss
from .optim import Adam, halved_lr
from .rng import RandomSource
from .system import LinkSystem


@dataclass
class RunRecord:
    """Append-only training log; serializable to JSON."""

    config: dict
    config_hash: str
    data_hash: str
    epoch_loss: list = field(default_factory=list)
    epoch_cd: list = field(default_factory=list)
    epoch_lr: list = field(default_factory=list)
    epoch_n_send: list = field(default_factory=list)
    wall_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())


def build_system(cfg: ExperimentConfig) -> LinkSystem:
    return LinkSystem(cfg, RandomSource(cfg.seed).derive("init"))


def train(cfg: ExperimentConfig, clouds, init_state: dict | None = None,
          log=None) -> tuple[LinkSystem, RunRecord]:
    """Optimize the full chain on `clouds` (the training split).

    Deterministic given (cfg, clouds): every random stream derives from
    cfg.seed.  `init_state` warm-starts the parameters (e.g. fading-channel
    models fine-tuned from AWGN checkpoints).
    """
    system = build_system(cfg)
    if init_state is not None:
        system.load_state_arrays(init_state)
    record = RunRecord(config=cfg.to_dict(), config_hash=cfg.config_hash(),
                       data_hash=dataset_hash(clouds))
    opt = Adam(system.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    root = RandomSource(cfg.seed)
    shuffle_src = root.derive("shuffle")
    snr_src = root.derive("snr")
    noise_src = root.derive("gumbel")
    channel_src = root.derive("channel")
    started = time.monotonic()
    for epoch in range(cfg.epochs):
        opt.lr = halved_lr(cfg.lr, epoch, cfg.lr_halving_epochs)
        order = shuffle_src.permutation(len(clouds))
        losses, cds, sends = [], [], []
        for lo in range(0, len(clouds), cfg.batch_size):
            batch = [clouds[i] for i in order[lo:lo + cfg.batch_size]]
            if cfg.snr_fixed is not None:
                snr = cfg.snr_fixed
            else:
                snr = float(snr_src.uniform(low=cfg.snr_lo, high=cfg.snr_hi))
            results = system.run_batch(batch, snr, noise_source=noise_src,
                                       channel_source=channel_src)
            loss = None
            cd_sum = 0.0
            for cloud, res in zip(batch, results):
                cd = chamfer(cloud.points, res.recon)
                cd_sum += float(cd.data)
                term = total_loss(cd, res.n_send, cfg.n_symbols,
                                  rate_weight=cfg.rate_weight,
                                  rate_enabled=cfg.rate_allocator,
                                  verbatim_rate=cfg.rate_loss_verbatim)
                loss = term if loss is None else loss + term
            loss = loss / float(len(batch))
            if not np.isfinite(loss.data):
                raise RuntimeError(
                    f"training diverged at epoch {epoch}: loss={loss.data!r}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
            cds.append(cd_sum / len(batch))
            sends.append(float(np.mean([r.n_send_value for r in results])))
        record.epoch_loss.append(float(np.mean(losses)))
        record.epoch_cd.append(float(np.mean(cds)))
        record.epoch_lr.append(opt.lr)
        record.epoch_n_send.append(float(np.mean(sends)))
        if log is not None:
            log(f"epoch {epoch + 1}/{cfg.epochs}: loss {record.epoch_loss[-1]:.6f} "
                f"cd {record.epoch_cd[-1]:.6f} lr {opt.lr:.2e}")
    record.wall_seconds = time.monotonic() - started
    return system, record


def save_trained(path, system: LinkSystem, record: RunRecord):
    save_checkpoint(path, system.state_arrays(),
                    extra={"config": record.config,
                           "config_hash": record.config_hash,
                           "data_hash": record.data_hash})


def load_trained(path) -> tuple[LinkSystem, dict]:
    """Rebuild a system from a checkpoint; returns (system, extra)."""
    state, extra = load_checkpoint(path)
    if "config" not in extra:
        raise ValueError(f"{path} carries no config; cannot rebuild the model")
    cfg = ExperimentConfig(**extra["config"])
    system = build_system(cfg)
    system.load_state_arrays(state)
    return system, extra
