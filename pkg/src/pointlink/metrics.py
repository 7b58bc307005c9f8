"""Geometry fidelity metrics and the training objective.

Chamfer distance is differentiable with respect to predicted coordinates
(nearest-neighbor assignments are recomputed from values, gradients flow
through the matched pairs).  The point-to-point (D1) and point-to-plane (D2)
measures and their PSNR forms are plain scoring functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .geometry import PointCloud
from .tensor import Tensor


def _coords(x) -> np.ndarray:
    if isinstance(x, PointCloud):
        return x.points
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _nearest(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Index of the nearest dst row per src row (ties to the lower index)."""
    d2 = np.sum((src[:, None, :] - dst[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


def chamfer(x, x_hat) -> Tensor:
    """Mean squared nearest-neighbor distance in both directions, summed.

    Accepts PointCloud / ndarray / Tensor; pass the prediction as a Tensor
    to get gradients.  Returns a scalar Tensor.
    """
    xa, xb = _coords(x), _coords(x_hat)
    if len(xa) == 0 or len(xb) == 0:
        raise ValueError("chamfer distance needs non-empty clouds")
    ta = x if isinstance(x, Tensor) else Tensor(xa)
    tb = x_hat if isinstance(x_hat, Tensor) else Tensor(xb)
    fwd = ta - T.take_rows(tb, _nearest(xa, xb))   # x -> nearest in x_hat
    bwd = tb - T.take_rows(ta, _nearest(xb, xa))   # x_hat -> nearest in x
    return (fwd ** 2).sum(axis=1).mean() + (bwd ** 2).sum(axis=1).mean()


def _directed_mean_sq(src: np.ndarray, dst: np.ndarray) -> float:
    idx = _nearest(src, dst)
    return float(np.mean(np.sum((src - dst[idx]) ** 2, axis=1)))


def d1(x, x_hat) -> float:
    """Point-to-point distortion: max of the two directed mean squared
    nearest-neighbor distances."""
    xa, xb = _coords(x), _coords(x_hat)
    return max(_directed_mean_sq(xa, xb), _directed_mean_sq(xb, xa))


def peak_value(x) -> float:
    """Default peak: the maximum absolute coordinate of the cloud."""
    return float(np.max(np.abs(_coords(x))))


def _psnr(distortion: float, peak: float) -> float:
    if distortion == 0.0:
        return math.inf
    return 10.0 * math.log10(3.0 * peak * peak / distortion)


def d1_psnr(x, x_hat, peak: float | None = None) -> float:
    """10 log10(3 P^2 / D1); +inf when the clouds coincide."""
    return _psnr(d1(x, x_hat), peak_value(x) if peak is None else peak)


def _directed_plane_sq(src: np.ndarray, dst: np.ndarray,
                       dst_normals: np.ndarray) -> float:
    """Mean cos^2-weighted squared distance from src points to their nearest
    dst points; the angle is against the matched dst normal, so the weighted
    term is the squared projection onto the plane normal."""
    idx = _nearest(src, dst)
    diff = src - dst[idx]
    proj = np.sum(diff * dst_normals[idx], axis=1)  # |diff| cos(theta)
    return float(np.mean(proj ** 2))


def d2(x: PointCloud, x_hat: PointCloud) -> float:
    """Point-to-plane distortion (needs normals on the target cloud of each
    directed term); sign flips of the normals cannot change it."""
    if x_hat.normals is None or x.normals is None:
        raise ValueError("d2 requires normals on both clouds")
    return max(_directed_plane_sq(x.points, x_hat.points, x_hat.normals),
               _directed_plane_sq(x_hat.points, x.points, x.normals))


def d2_psnr(x: PointCloud, x_hat: PointCloud, peak: float | None = None) -> float:
    return _psnr(d2(x, x_hat), peak_value(x) if peak is None else peak)


def rate_loss(n_send, n_mod: int, verbatim: bool = False):
    """Rate penalty: kept fraction n_send/n_mod by default.

    `verbatim=True` selects the inverted n_mod/n_send form, which rewards
    sending more symbols instead of penalizing it; kept available for
    comparison only.
    """
    n_send = T.as_tensor(n_send)
    if verbatim:
        return Tensor(float(n_mod)) / n_send
    return n_send / float(n_mod)


def total_loss(cd, n_send=None, n_mod: int | None = None,
               rate_weight: float = 2e-4, rate_enabled: bool = False,
               verbatim_rate: bool = False):
    """Reconstruction loss, plus the weighted rate penalty when enabled."""
    if rate_weight < 0:
        raise ValueError("rate weight must be >= 0")
    cd = T.as_tensor(cd)
    if not rate_enabled:
        return cd
    return cd + rate_weight * rate_loss(n_send, n_mod, verbatim=verbatim_rate)


@dataclass
class MetricReport:
    """One scored reconstruction."""

    cd: float
    d1: float
    d1_psnr: float
    d2: float
    d2_psnr: float
    peak: float
    n_send: int
    n_mod: int

    CSV_HEADER = "cd,d1,d1_psnr,d2,d2_psnr,peak,n_send,n_mod"

    def csv_row(self) -> str:
        return (f"{self.cd:.9g},{self.d1:.9g},{self.d1_psnr:.9g},"
                f"{self.d2:.9g},{self.d2_psnr:.9g},{self.peak:.9g},"
                f"{self.n_send},{self.n_mod}")


def score(reference: PointCloud, recon: PointCloud,
          n_send: int, n_mod: int, peak: float | None = None) -> MetricReport:
    """Full report for a reconstruction against its reference cloud."""
    p = peak_value(reference) if peak is None else peak
    cd_value = float(chamfer(reference.points, recon.points).data)
    return MetricReport(
        cd=cd_value,
        d1=d1(reference, recon),
        d1_psnr=d1_psnr(reference, recon, p),
        d2=d2(reference, recon),
        d2_psnr=d2_psnr(reference, recon, p),
        peak=p, n_send=n_send, n_mod=n_mod)
