"""Windowed spectral analysis/synthesis and acoustic descriptors.

Everything in this module is a pure function. Frames are log-magnitude
spectra of length ``fft_size // 2 + 1`` with ``log(|X| + EPS_MAG)`` values;
phase is carried separately and recovered with Griffin-Lim when absent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument

EPS_MAG = 1e-5
LOG_FLOOR = float(np.log(EPS_MAG))
RMS_FLOOR = 1e-5
LOUDNESS_FLOOR_DB = -100.0

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_FFT_SIZE = 1024
DEFAULT_HOP = 256

# Affine conditioning applied to log-magnitudes before they enter a network:
# shifts the floor to zero and compresses the range to tanh-friendly scale.
INPUT_SCALE = 0.1


# -----------------------------
# Domain types
# -----------------------------
@dataclass
class AudioBuffer:
    """Mono sample sequence with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidArgument("audio must be a 1-D sample sequence")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise InvalidArgument(f"sample_rate must be a positive integer, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgument("audio contains non-finite samples")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class SpectralFrame:
    """One log-magnitude analysis window."""

    log_mags: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.log_mags = np.asarray(self.log_mags, dtype=np.float64)
        if self.log_mags.ndim != 1:
            raise InvalidArgument("log_mags must be a vector")
        if not np.all(np.isfinite(self.log_mags)):
            raise InvalidArgument("log_mags contains non-finite values")
        # allow one ulp of slack below the floor from exp/log round trips
        if np.any(self.log_mags < LOG_FLOOR - 1e-9):
            raise InvalidArgument("log_mags below the magnitude floor")


@dataclass
class DescriptorVector:
    """Per-frame acoustic descriptors; f0 is None for unvoiced material."""

    loudness_db: float
    centroid_hz: float
    bandwidth_hz: float
    f0_hz: Optional[float] = None


# -----------------------------
# Windowing and transforms
# -----------------------------
def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window, w[j] = 0.5 (1 - cos(2 pi j / n)).

    Satisfies constant overlap-add at hop = n / 4 (the shifted windows sum
    to the constant 2 at interior points).
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2 != 0:
        raise InvalidArgument(f"window length must be an even integer >= 2, got {n}")
    j = np.arange(n, dtype=np.float64)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * j / n))


def _check_stft_args(fft_size: int, hop: int) -> None:
    if fft_size < 4 or (fft_size & (fft_size - 1)) != 0:
        raise InvalidArgument(f"fft_size must be a power of two >= 4, got {fft_size}")
    if hop * 4 != fft_size:
        raise InvalidArgument(f"hop must be fft_size/4, got hop={hop}, fft_size={fft_size}")


def frame_count(num_samples: int, fft_size: int, hop: int) -> int:
    return (num_samples - fft_size) // hop + 1


def stft_arrays(samples: np.ndarray, fft_size: int = DEFAULT_FFT_SIZE,
                hop: int = DEFAULT_HOP) -> tuple[np.ndarray, np.ndarray]:
    """STFT as (log_mags, phases) matrices of shape (frames, fft_size/2+1)."""
    _check_stft_args(fft_size, hop)
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < fft_size:
        raise InvalidArgument(f"audio ({len(x)} samples) shorter than one frame ({fft_size})")
    n_frames = frame_count(len(x), fft_size, hop)
    window = hann_window(fft_size)
    offsets = np.arange(n_frames) * hop
    segments = np.stack([x[o:o + fft_size] for o in offsets])
    spec = np.fft.rfft(segments * window, axis=1)
    mags = np.abs(spec)
    return np.log(mags + EPS_MAG), np.angle(spec)


def stft(audio: AudioBuffer, fft_size: int = DEFAULT_FFT_SIZE,
         hop: int = DEFAULT_HOP) -> list[tuple[SpectralFrame, np.ndarray]]:
    """Analyze audio into (SpectralFrame, phase vector) pairs."""
    log_mags, phases = stft_arrays(audio.samples, fft_size, hop)
    return [(SpectralFrame(log_mags[i], i), phases[i]) for i in range(len(log_mags))]


def linear_magnitudes(log_mags: np.ndarray) -> np.ndarray:
    """Invert the log transform; negatives from rounding are clipped to 0."""
    return np.maximum(np.exp(np.asarray(log_mags, dtype=np.float64)) - EPS_MAG, 0.0)


def log_magnitudes(linear: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(np.asarray(linear, dtype=np.float64), 0.0) + EPS_MAG)


# Window-sum floor for the inverse transform: positions covered by a full
# complement of windows sum to 1.5 and are divided exactly (least squares);
# the outermost edge samples, where the sum collapses toward zero, are
# tapered instead of amplified.
_NORM_FLOOR = 0.05


def _overlap_add(linear_mags: np.ndarray, phases: np.ndarray,
                 fft_size: int, hop: int) -> np.ndarray:
    """Least-squares inverse STFT (synthesis window = analysis window)."""
    n_frames, n_bins = linear_mags.shape
    window = hann_window(fft_size)
    out_len = (n_frames - 1) * hop + fft_size
    acc = np.zeros(out_len)
    norm = np.zeros(out_len)
    segments = np.fft.irfft(linear_mags * np.exp(1j * phases), n=fft_size, axis=1)
    for i in range(n_frames):
        o = i * hop
        acc[o:o + fft_size] += window * segments[i]
        norm[o:o + fft_size] += window * window
    return acc / np.maximum(norm, _NORM_FLOOR)


def _frames_to_matrix(frames: Sequence[SpectralFrame] | np.ndarray) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        mat = np.asarray(frames, dtype=np.float64)
        if mat.ndim != 2:
            raise InvalidArgument("frame matrix must be 2-D")
        return mat
    if len(frames) == 0:
        raise InvalidArgument("empty frame list")
    rows = []
    for f in frames:
        v = f.log_mags if isinstance(f, SpectralFrame) else np.asarray(f, dtype=np.float64)
        rows.append(v)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidArgument(f"frames have mixed widths: {sorted(widths)}")
    return np.stack(rows)


def griffin_lim(log_mags: np.ndarray, fft_size: int, hop: int, iterations: int = 32,
                init_phases: Optional[np.ndarray] = None) -> tuple[np.ndarray, list[float]]:
    """Phase recovery. Returns (samples, per-iteration objective values).

    The objective is the summed frame-wise squared L2 distance between the
    target magnitudes and the magnitudes of the re-analyzed estimate; it is
    non-increasing across iterations for this analysis/synthesis pair.
    """
    if iterations < 0:
        raise InvalidArgument("iterations must be >= 0")
    target = linear_magnitudes(log_mags)
    phases = np.zeros_like(target) if init_phases is None else np.asarray(init_phases, dtype=np.float64)
    if phases.shape != target.shape:
        raise InvalidArgument(f"init_phases shape {phases.shape} != frames shape {target.shape}")
    x = _overlap_add(target, phases, fft_size, hop)
    objectives: list[float] = []
    for _ in range(iterations):
        spec = np.fft.rfft(
            np.stack([x[i * hop:i * hop + fft_size] for i in range(len(target))]) * hann_window(fft_size),
            axis=1)
        objectives.append(float(np.sum((np.abs(spec) - target) ** 2)))
        x = _overlap_add(target, np.angle(spec), fft_size, hop)
    return x, objectives


def istft_griffin_lim(frames: Sequence[SpectralFrame] | np.ndarray, sample_rate: int,
                      iterations: int = 32, init_phases: Optional[np.ndarray] = None,
                      hop: Optional[int] = None) -> AudioBuffer:
    """Invert log-magnitude frames to audio.

    With the true phases and iterations=0 this is an exact reconstruction of
    the analyzed signal at interior samples.
    """
    mat = _frames_to_matrix(frames)
    if mat.shape[0] == 0:
        raise InvalidArgument("empty frame list")
    fft_size = (mat.shape[1] - 1) * 2
    hop = fft_size // 4 if hop is None else hop
    _check_stft_args(fft_size, hop)
    samples, _ = griffin_lim(mat, fft_size, hop, iterations, init_phases)
    return AudioBuffer(samples, sample_rate)


# -----------------------------
# Descriptors
# -----------------------------
def loudness_db(frame_samples: np.ndarray) -> float:
    """Windowed RMS level in dB relative to full scale, floored at -100."""
    x = np.asarray(frame_samples, dtype=np.float64)
    rms = np.sqrt(np.mean(x * x)) if x.size else 0.0
    return float(20.0 * np.log10(max(rms, RMS_FLOOR)))


def bin_frequencies(n_bins: int, sample_rate: int) -> np.ndarray:
    fft_size = (n_bins - 1) * 2
    return np.arange(n_bins, dtype=np.float64) * sample_rate / fft_size


def centroid_of_magnitudes(mags: np.ndarray, sample_rate: int) -> float:
    """Linear-domain centroid: exactly scale-invariant in its weights."""
    m = np.asarray(mags, dtype=np.float64)
    total = float(np.sum(m))
    if total < 1e-12:
        return 0.0
    return float(np.dot(bin_frequencies(len(m), sample_rate), m) / total)


def bandwidth_of_magnitudes(mags: np.ndarray, sample_rate: int) -> float:
    m = np.asarray(mags, dtype=np.float64)
    total = float(np.sum(m))
    if total < 1e-12:
        return 0.0
    freqs = bin_frequencies(len(m), sample_rate)
    centroid = float(np.dot(freqs, m) / total)
    var = float(np.dot((freqs - centroid) ** 2, m) / total)
    return float(np.sqrt(max(var, 0.0)))


def _frame_mags(frame) -> np.ndarray:
    log_mags = frame.log_mags if isinstance(frame, SpectralFrame) else np.asarray(frame, dtype=np.float64)
    return linear_magnitudes(log_mags)


def spectral_centroid(frame, sample_rate: int) -> float:
    """Magnitude-weighted mean frequency; 0 by convention for floor frames."""
    return centroid_of_magnitudes(_frame_mags(frame), sample_rate)


def spectral_bandwidth(frame, sample_rate: int) -> float:
    """Magnitude-weighted standard deviation around the centroid."""
    return bandwidth_of_magnitudes(_frame_mags(frame), sample_rate)


def fundamental_frequency(frame_samples: np.ndarray, sample_rate: int,
                          f_min: float = 50.0, f_max: float = 2000.0,
                          voicing_threshold: float = 0.3) -> Optional[float]:
    """Pitch estimate from the normalized autocorrelation, or None if unvoiced.

    The peak is searched over lags in [sr/f_max, sr/f_min]; among near-equal
    peaks the shortest lag wins, which avoids octave-down errors on strongly
    periodic input. Parabolic interpolation refines the integer lag.
    """
    x = np.asarray(frame_samples, dtype=np.float64)
    min_len = int(np.ceil(2.0 * sample_rate / f_min))
    if len(x) < min_len:
        raise InvalidArgument(f"window of {len(x)} samples too short; need >= {min_len}")
    if float(np.max(np.abs(x))) < 1e-9:
        return None
    lag_min = max(2, int(np.floor(sample_rate / f_max)))
    lag_max = min(int(np.ceil(sample_rate / f_min)), len(x) - 2)
    x0 = x - np.mean(x)
    # normalized cross-correlation per lag, values in [-1, 1]
    scores = np.full(lag_max + 2, -1.0)
    for lag in range(lag_min, lag_max + 1):
        a = x0[:-lag]
        b = x0[lag:]
        denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
        if denom < 1e-18:
            continue
        scores[lag] = np.dot(a, b) / denom
    best = float(np.max(scores[lag_min:lag_max + 1]))
    if best < voicing_threshold:
        return None
    # earliest local maximum within 10% of the global peak
    chosen = None
    for lag in range(lag_min, lag_max + 1):
        s = scores[lag]
        if s >= 0.9 * best and scores[lag - 1] <= s and s >= scores[lag + 1]:
            chosen = lag
            break
    if chosen is None:
        chosen = lag_min + int(np.argmax(scores[lag_min:lag_max + 1]))
    sm1, s0, sp1 = scores[chosen - 1], scores[chosen], scores[chosen + 1]
    denom = sm1 - 2.0 * s0 + sp1
    delta = 0.0 if abs(denom) < 1e-18 else 0.5 * (sm1 - sp1) / denom
    delta = float(np.clip(delta, -0.5, 0.5))
    return float(sample_rate / (chosen + delta))


# -----------------------------
# Level normalization helpers
# -----------------------------
def normalize_magnitudes(linear: np.ndarray) -> tuple[np.ndarray, float]:
    """Split linear magnitudes into (unit L2-norm shape, gain)."""
    m = np.asarray(linear, dtype=np.float64)
    gain = float(np.linalg.norm(m))
    return m / max(gain, 1e-8), gain


def unit_log_frames(log_mags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise level normalization of log-magnitude frames.

    Returns (unit frames re-expressed in the log domain, per-row gains).
    Works on a single vector or a (frames, bins) matrix.
    """
    arr = np.asarray(log_mags, dtype=np.float64)
    single = arr.ndim == 1
    mat = arr[None, :] if single else arr
    m = linear_magnitudes(mat)
    gains = np.linalg.norm(m, axis=1)
    unit = m / np.maximum(gains, 1e-8)[:, None]
    out = log_magnitudes(unit)
    if single:
        return out[0], gains[0]
    return out, gains


def network_input(log_mags: np.ndarray) -> np.ndarray:
    """Affine conditioning of log-magnitudes for network consumption."""
    return (np.asarray(log_mags, dtype=np.float64) - LOG_FLOOR) * INPUT_SCALE


def network_output_to_log(raw: np.ndarray) -> np.ndarray:
    """Inverse of network_input, clamped to the magnitude floor."""
    return np.maximum(np.asarray(raw, dtype=np.float64) / INPUT_SCALE + LOG_FLOOR, LOG_FLOOR)


def magnitude_gain(loudness_db, fft_size: int):
    """Linear-magnitude L2 gain implied by a time-domain RMS level in dB.

    For a Hann-analyzed steady frame, Parseval gives
    ||X||_2 ~= rms * fft_size * sqrt(3/16).
    """
    rms = 10.0 ** (np.asarray(loudness_db, dtype=np.float64) / 20.0)
    return rms * fft_size * np.sqrt(3.0 / 16.0)
