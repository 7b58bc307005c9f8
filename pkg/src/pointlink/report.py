"""Delimited outputs and their companion figures.

Every report path writes the CSV first, then renders a PNG next to it, so a
run directory is self-describing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path, header: str, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")
    return path


def plot_psnr_vs_snr(path, summaries, label: str = "model"):
    """Line plot of mean D1/D2 PSNR against SNR for one evaluation sweep."""
    snrs = [s.snr for s in summaries]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharex=True)
    for ax, attr, title in ((axes[0], "mean_d1_psnr", "point-to-point PSNR"),
                            (axes[1], "mean_d2_psnr", "point-to-plane PSNR")):
        ax.plot(snrs, [getattr(s, attr) for s in summaries], "o-", label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("PSNR (dB)")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_constellation(path, stats, title: str = "constellation usage"):
    """Bubble plot: marker area proportional to each grid point's empirical
    probability."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    area = 2000.0 * stats.probs
    ax.scatter(stats.grid.real, stats.grid.imag, s=area, alpha=0.6)
    ax.set_xlabel("in-phase")
    ax.set_ylabel("quadrature")
    ax.set_title(f"{title} (entropy {stats.entropy_bits:.2f} bits)")
    ax.grid(True, alpha=0.3)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_loss_curve(path, record):
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    epochs = range(1, len(record.epoch_loss) + 1)
    ax.plot(epochs, record.epoch_loss, label="loss")
    ax.plot(epochs, record.epoch_cd, label="chamfer", alpha=0.7)
    ax.set_xlabel("epoch")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_estimator_comparison(path, comparison: dict):
    """One PSNR-vs-SNR curve per gradient estimator."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for est, summaries in comparison.items():
        ax.plot([s.snr for s in summaries],
                [s.mean_d2_psnr for s in summaries], "o-", label=est)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("point-to-plane PSNR (dB)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
