"""Synthetic tone corpus, frame dataset assembly, and WAV file I/O.

The corpus stands in for instrument recordings: harmonic tones whose
spectral slope (brightness) and fundamental give ground-truth timbre axes,
rendered at several gains so level invariance can be trained and measured.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Optional, Sequence, Union

import numpy as np

from . import dsp
from .dsp import AudioBuffer
from .errors import InvalidArgument, InvalidState, UnsupportedWavFormat, WavParseError
from .rng import SplitMix64

DEFAULT_F0_GRID = (110.0, 220.0, 440.0, 880.0)
DEFAULT_ALPHA_GRID = (0.5, 1.0, 2.0, 4.0)
DEFAULT_GAIN_OFFSETS = (0.0, -6.0, -12.0, -24.0)
DEFAULT_DURATION_S = 2.0
SILENCE_CUTOFF_DB = -80.0


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic tone."""

    kind: str                 # "harmonic" | "noise"
    f0_hz: float
    brightness: float         # spectral slope alpha >= 0; partial n has amplitude n^-alpha
    duration_s: float
    gain_db: float
    seed: int

    def __post_init__(self):
        if self.kind not in ("harmonic", "noise"):
            raise InvalidArgument(f"unknown tone kind {self.kind!r}")
        if not 50.0 <= self.f0_hz <= 2000.0:
            raise InvalidArgument(f"f0 {self.f0_hz} outside [50, 2000] Hz")
        if self.brightness < 0:
            raise InvalidArgument("brightness must be >= 0")
        if self.duration_s <= 0:
            raise InvalidArgument("duration must be positive")
        if not -60.0 <= self.gain_db <= 0.0:
            raise InvalidArgument(f"gain {self.gain_db} dB outside [-60, 0]")


def synth_tone(spec: SynthSpec, sample_rate: int) -> AudioBuffer:
    """Render a spec deterministically (same spec -> bit-identical audio)."""
    rng = SplitMix64(spec.seed)
    n = int(round(spec.duration_s * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate
    if spec.kind == "harmonic":
        x = np.zeros(n)
        k = 1
        while k * spec.f0_hz < sample_rate / 2:
            amp = k ** (-spec.brightness)
            phase = rng.uniform() * 2.0 * np.pi
            x += amp * np.sin(2.0 * np.pi * k * spec.f0_hz * t + phase)
            k += 1
    else:
        # white noise through a one-pole lowpass; brightness sets the cutoff
        x = rng.normal((n,))
        cutoff = (sample_rate / 2.0) * 2.0 ** (-spec.brightness)
        a = float(np.exp(-2.0 * np.pi * cutoff / sample_rate))
        y = np.empty(n)
        prev = 0.0
        for i in range(n):
            prev = (1.0 - a) * x[i] + a * prev
            y[i] = prev
        x = y
    peak = float(np.max(np.abs(x)))
    if peak > 0:
        x *= 10.0 ** (spec.gain_db / 20.0) / peak
    return AudioBuffer(x, sample_rate)


@dataclass
class FrameDataset:
    """Analysis frames with per-frame loudness labels and provenance."""

    frames: np.ndarray          # (n, bins) log-magnitudes
    loudness: np.ndarray        # (n,) dB labels
    provenance: list            # per frame: (SynthSpec, gain_offset_db, frame_index)
    sample_rate: int
    fft_size: int
    hop: int

    def __post_init__(self):
        if not (len(self.frames) == len(self.loudness) == len(self.provenance)):
            raise InvalidState("frames, labels and provenance must be parallel")

    def __len__(self) -> int:
        return len(self.frames)

    def shuffled_indices(self, seed: int) -> np.ndarray:
        rng = SplitMix64(seed)
        order = np.arange(len(self))
        # Fisher-Yates with the seeded generator
        for i in range(len(order) - 1, 0, -1):
            j = int(rng.integers(0, i + 1, 1)[0])
            order[i], order[j] = order[j], order[i]
        return order


def default_specs(f0_grid: Sequence[float] = DEFAULT_F0_GRID,
                  alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
                  duration_s: float = DEFAULT_DURATION_S,
                  base_seed: int = 7) -> list[SynthSpec]:
    specs = []
    for i, f0 in enumerate(f0_grid):
        for j, alpha in enumerate(alpha_grid):
            specs.append(SynthSpec("harmonic", f0, alpha, duration_s, 0.0,
                                   base_seed + 97 * i + j))
    return specs


def build_dataset(specs: Sequence[SynthSpec], gain_offsets: Sequence[float],
                  sample_rate: int = dsp.DEFAULT_SAMPLE_RATE,
                  fft_size: int = dsp.DEFAULT_FFT_SIZE,
                  hop: int = dsp.DEFAULT_HOP) -> FrameDataset:
    """Render every spec at every augmentation gain and frame the results.

    Near-silent frames (below -80 dB) are dropped; each kept frame is labeled
    with the loudness of its own raw sample window.
    """
    if not specs:
        raise InvalidArgument("empty spec grid")
    frames, labels, provenance = [], [], []
    for spec in specs:
        for offset in gain_offsets:
            eff = spec.gain_db + offset
            if not -60.0 <= eff <= 0.0:
                raise InvalidArgument(
                    f"augmented gain {eff} dB outside [-60, 0] for {spec}")
            audio = synth_tone(replace(spec, gain_db=eff), sample_rate)
            log_mags, _ = dsp.stft_arrays(audio.samples, fft_size, hop)
            for i in range(len(log_mags)):
                level = dsp.loudness_db(audio.samples[i * hop:i * hop + fft_size])
                if level < SILENCE_CUTOFF_DB:
                    continue
                frames.append(log_mags[i])
                labels.append(level)
                provenance.append((spec, offset, i))
    if not frames:
        raise InvalidState("all frames were filtered as near-silent")
    return FrameDataset(np.stack(frames), np.array(labels), provenance,
                        sample_rate, fft_size, hop)


def save_dataset(ds: FrameDataset, path) -> None:
    kinds = np.array([p[0].kind for p in ds.provenance])
    np.savez_compressed(
        path, frames=ds.frames, loudness=ds.loudness,
        sample_rate=ds.sample_rate, fft_size=ds.fft_size, hop=ds.hop,
        prov_kind=kinds,
        prov_f0=np.array([p[0].f0_hz for p in ds.provenance]),
        prov_brightness=np.array([p[0].brightness for p in ds.provenance]),
        prov_duration=np.array([p[0].duration_s for p in ds.provenance]),
        prov_gain=np.array([p[0].gain_db for p in ds.provenance]),
        prov_seed=np.array([p[0].seed for p in ds.provenance]),
        prov_offset=np.array([p[1] for p in ds.provenance]),
        prov_frame=np.array([p[2] for p in ds.provenance]))


def load_dataset(path) -> FrameDataset:
    with np.load(path, allow_pickle=False) as d:
        provenance = [
            (SynthSpec(str(d["prov_kind"][i]), float(d["prov_f0"][i]),
                       float(d["prov_brightness"][i]), float(d["prov_duration"][i]),
                       float(d["prov_gain"][i]), int(d["prov_seed"][i])),
             float(d["prov_offset"][i]), int(d["prov_frame"][i]))
            for i in range(len(d["frames"]))]
        return FrameDataset(d["frames"], d["loudness"], provenance,
                            int(d["sample_rate"]), int(d["fft_size"]), int(d["hop"]))


# -----------------------------
# WAV I/O (RIFF, mono, PCM16 or IEEE float32)
# -----------------------------
def wav_write(path_or_file: Union[str, BinaryIO], audio: AudioBuffer) -> None:
    """Write IEEE float 32-bit mono little-endian."""
    data = audio.samples.astype("<f4").tobytes()
    fmt = struct.pack("<HHIIHHH", 3, 1, audio.sample_rate, audio.sample_rate * 4, 4, 32, 0)
    fact = struct.pack("<I", len(audio.samples))
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"fact" + struct.pack("<I", len(fact)) + fact
            + b"data" + struct.pack("<I", len(data)) + data)
    blob = b"RIFF" + struct.pack("<I", len(body)) + body
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "wb") as fh:
            fh.write(blob)
    else:
        path_or_file.write(blob)


def wav_to_bytes(audio: AudioBuffer) -> bytes:
    buf = io.BytesIO()
    wav_write(buf, audio)
    return buf.getvalue()


def wav_read(path_or_file: Union[str, BinaryIO],
             expect_sample_rate: Optional[int] = None) -> AudioBuffer:
    """Read a mono PCM 16-bit or IEEE float 32-bit WAV file.

    No resampling: if expect_sample_rate is given and differs from the file,
    this raises InvalidArgument.
    """
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "rb") as fh:
            blob = fh.read()
    else:
        blob = path_or_file.read()
    if len(blob) < 12 or blob[:4] != b"RIFF":
        raise WavParseError("missing RIFF header")
    if blob[8:12] != b"WAVE":
        raise WavParseError("missing WAVE id")
    chunks = {}
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        payload = blob[pos + 8:pos + 8 + size]
        if len(payload) < size:
            raise WavParseError(f"truncated {cid.decode('ascii', 'replace')} chunk")
        chunks.setdefault(cid, payload)
        pos += 8 + size + (size & 1)
    if b"fmt " not in chunks:
        raise WavParseError("missing fmt chunk")
    if b"data" not in chunks:
        raise WavParseError("missing data chunk")
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise WavParseError("fmt chunk too short")
    tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels != 1:
        raise UnsupportedWavFormat(f"only mono supported, got {channels} channels")
    data = chunks[b"data"]
    if tag == 1 and bits == 16:
        samples = np.frombuffer(data[:len(data) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
    elif tag == 3 and bits == 32:
        samples = np.frombuffer(data[:len(data) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedWavFormat(f"unsupported encoding: format tag {tag}, {bits}-bit")
    if expect_sample_rate is not None and rate != expect_sample_rate:
        raise InvalidArgument(
            f"sample rate {rate} != expected {expect_sample_rate} (no resampling)")
    return AudioBuffer(samples, int(rate))


def wav_from_bytes(blob: bytes, expect_sample_rate: Optional[int] = None) -> AudioBuffer:
    return wav_read(io.BytesIO(blob), expect_sample_rate)
