"""Evaluation sweeps and constellation statistics.

Scoring always runs in deterministic eval mode (Gumbel noise disabled);
channel noise stays on and is redrawn per trial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .geometry import PointCloud, estimate_normals
from .metrics import MetricReport, score
from .rng import RandomSource
from .system import LinkSystem


@dataclass
class SnrSummary:
    snr: float
    channel: str
    mean_d1_psnr: float
    mean_d2_psnr: float
    mean_cd: float
    mean_n_send: float
    reports: list = field(default_factory=list)

    CSV_HEADER = "snr,channel,mean_d1_psnr,mean_d2_psnr,mean_cd,mean_n_send"

    def csv_row(self) -> str:
        return (f"{self.snr:.9g},{self.channel},{self.mean_d1_psnr:.9g},"
                f"{self.mean_d2_psnr:.9g},{self.mean_cd:.9g},{self.mean_n_send:.9g}")


def _with_normals(cloud: PointCloud) -> PointCloud:
    return cloud if cloud.normals is not None else estimate_normals(cloud)


def evaluate(system: LinkSystem, clouds, snr_list, trials: int = 1,
             channel_kind: str | None = None, seed: int = 0) -> list[SnrSummary]:
    """Average reconstruction quality per SNR over fresh channel draws."""
    cfg = system.cfg
    kind = channel_kind or cfg.channel
    summaries = []
    for snr in snr_list:
        reports: list[MetricReport] = []
        for trial in range(trials):
            channel_src = RandomSource(seed).derive(f"eval-{snr}-{trial}")
            for cloud in clouds:
                res = system.run(cloud, snr, noise_source=None,
                                 channel_source=channel_src,
                                 channel_kind=kind)
                recon = estimate_normals(PointCloud(points=res.recon.data))
                reports.append(score(_with_normals(cloud), recon,
                                     res.n_send_value, cfg.n_symbols))
        summaries.append(SnrSummary(
            snr=float(snr), channel=kind,
            mean_d1_psnr=float(np.mean([r.d1_psnr for r in reports])),
            mean_d2_psnr=float(np.mean([r.d2_psnr for r in reports])),
            mean_cd=float(np.mean([r.cd for r in reports])),
            mean_n_send=float(np.mean([r.n_send for r in reports])),
            reports=reports))
    return summaries


@dataclass
class ConstellationStats:
    """Empirical usage of each grid point plus its entropy in bits."""

    grid: np.ndarray          # complex grid points
    counts: np.ndarray
    probs: np.ndarray
    entropy_bits: float

    CSV_HEADER = "i,q,probability"

    def csv_rows(self):
        for point, p in zip(self.grid, self.probs):
            yield f"{point.real:.9g},{point.imag:.9g},{p:.9g}"


def constellation_stats(system: LinkSystem, clouds, snr: float,
                        with_noise: bool = True, seed: int = 0) -> ConstellationStats:
    """Empirical frequency of each constellation point over the dataset.

    `with_noise` keeps the Gumbel sampling on, showing the distribution the
    transmitter actually draws from; symbols are counted pre-normalization
    so they sit exactly on the grid.
    """
    cb = system.codebook
    grid = cb.grid()
    counts = np.zeros(len(grid))
    noise_src = RandomSource(seed).derive("stats") if with_noise else None
    for cloud in clouds:
        logits, _ = system.encode(cloud, snr)
        stream, _, _ = system.modulate_and_mask(logits, noise_src)
        values = stream.complex_values
        for v in values:
            counts[np.argmin(np.abs(grid - v))] += 1
    probs = counts / counts.sum()
    nz = probs[probs > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    return ConstellationStats(grid=grid, counts=counts, probs=probs,
                              entropy_bits=entropy)


def estimator_comparison(cfg: ExperimentConfig, clouds_train, clouds_test,
                         snr_list,
                         estimators=("gumbel-soft", "ste", "uniform-noise"),
                         seed: int = 0):
    """Train one model per gradient estimator on identical seeds/config and
    evaluate them on the same sweep; returns {estimator: [SnrSummary]}."""
    import dataclasses as _dc

    from .train import train

    out = {}
    for est in estimators:
        cfg_e = _dc.replace(cfg, estimator=est, seed=seed)
        system, _ = train(cfg_e, clouds_train)
        out[est] = evaluate(system, clouds_test, snr_list, seed=seed)
    return out
