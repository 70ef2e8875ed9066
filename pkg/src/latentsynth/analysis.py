"""Measurement helpers: linear probes and descriptor tracks."""
from __future__ import annotations

import numpy as np

from . import dsp
from .errors import InvalidArgument
from .rng import SplitMix64


def linear_probe_r2(features: np.ndarray, targets: np.ndarray,
                    train_frac: float = 0.8, seed: int = 0) -> float:
    """Held-out R^2 of a least-squares linear probe (with intercept).

    The probe is the standard read-out test: how much of the target variance
    a linear map of the features explains on unseen rows.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.shape != (len(x),):
        raise InvalidArgument("features must be (n, d) with matching 1-D targets")
    if len(x) < 10:
        raise InvalidArgument("too few rows for a probe split")
    rng = SplitMix64(seed)
    order = np.argsort(rng.uniform((len(x),)), kind="stable")
    cut = int(len(x) * train_frac)
    train, test = order[:cut], order[cut:]
    xt = np.column_stack([x[train], np.ones(len(train))])
    w, *_ = np.linalg.lstsq(xt, y[train], rcond=None)
    pred = np.column_stack([x[test], np.ones(len(test))]) @ w
    resid = float(np.sum((y[test] - pred) ** 2))
    total = float(np.sum((y[test] - np.mean(y[test])) ** 2))
    if total <= 0:
        return 1.0 if resid <= 0 else 0.0
    return 1.0 - resid / total


def centroid_track(audio, fft_size: int, hop: int) -> np.ndarray:
    """Per-frame spectral centroid of an audio buffer."""
    log_mags, _ = dsp.stft_arrays(audio.samples, fft_size, hop)
    return np.array([dsp.spectral_centroid(f, audio.sample_rate) for f in log_mags])


def segment_centroids(audio, fft_size: int, hop: int, frames_per_segment: int) -> np.ndarray:
    """Mean centroid of the analysis frames fully interior to each segment.

    Segment j spans synthesis frames [j*n, (j+1)*n); an analysis frame at
    index i covers synthesis positions i .. i+3 (hop = fft/4), so interior
    means i >= j*n and i + 4 <= (j+1)*n.
    """
    track = centroid_track(audio, fft_size, hop)
    per = frames_per_segment
    n_segments = len(track) // per
    out = []
    for j in range(n_segments):
        lo, hi = j * per, (j + 1) * per - 3
        if hi <= lo:
            lo, hi = j * per, (j + 1) * per
        out.append(float(np.mean(track[lo:hi])))
    return np.array(out)
