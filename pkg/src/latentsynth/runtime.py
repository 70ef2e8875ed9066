"""Composed end-to-end operations shared by the CLI and the HTTP service."""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from . import dsp
from .dsp import AudioBuffer
from .errors import InvalidArgument
from .latent import LatentSeries, interpolate, resample_series
from .vae import ContinuousModel
from .vq import DiscreteModel

Model = Union[ContinuousModel, DiscreteModel]
GL_ITERATIONS = 32


def encode_audio(model: Model, audio: AudioBuffer) -> LatentSeries:
    if audio.sample_rate != model.sample_rate:
        raise InvalidArgument(
            f"audio rate {audio.sample_rate} != model rate {model.sample_rate}")
    if isinstance(model, ContinuousModel):
        return model.encode_series(audio)
    # discrete: the latent series carries the quantized codebook vectors
    log_mags, _ = dsp.stft_arrays(audio.samples, model.fft_size, model.hop)
    gains = np.array([
        dsp.loudness_db(audio.samples[i * model.hop:i * model.hop + model.fft_size])
        for i in range(len(log_mags))])
    z_e = model.encode_frames(log_mags)
    _, z_q, _ = model.quantize(z_e)
    return LatentSeries(z_q, gains, model.sample_rate, model.fft_size, model.hop)


def decode_series(model: Model, series: LatentSeries) -> AudioBuffer:
    if isinstance(model, ContinuousModel):
        return model.decode_series(series, GL_ITERATIONS)
    if series.latent_dim != model.cfg.latent_dim:
        raise InvalidArgument(
            f"series latent dim {series.latent_dim} != model dim {model.cfg.latent_dim}")
    # snap each latent to its code, then decode at the sidechain level
    codes, _, _ = model.quantize(series.z)
    frames = model.decode_codes(codes, dsp.magnitude_gain(series.gain_db, model.fft_size))
    return dsp.istft_griffin_lim(frames, model.sample_rate, GL_ITERATIONS, hop=model.hop)


def reconstruct_audio(model: Model, audio: AudioBuffer) -> AudioBuffer:
    return decode_series(model, encode_audio(model, audio))


def interpolate_audio(model: Model, a: AudioBuffer, b: AudioBuffer,
                      curve: np.ndarray) -> AudioBuffer:
    """Encode both clips, resample to the curve length, blend, decode."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.ndim != 1 or len(curve) == 0:
        raise InvalidArgument("curve must be a nonempty 1-D sequence")
    sa = encode_audio(model, a)
    sb = encode_audio(model, b)
    sa = resample_series(sa, len(curve))
    sb = resample_series(sb, len(curve))
    return decode_series(model, interpolate(sa, sb, curve))


def parse_curve_spec(spec: str, default_len: Optional[int] = None) -> np.ndarray:
    """CLI curve syntax: 'start:end' linear ramp or comma-separated values."""
    spec = spec.strip()
    if ":" in spec:
        lo_s, _, hi_s = spec.partition(":")
        if default_len is None or default_len < 1:
            raise InvalidArgument("ramp curve needs a target length")
        return np.linspace(float(lo_s), float(hi_s), default_len)
    values = np.array([float(v) for v in spec.split(",") if v.strip()])
    if len(values) == 0:
        raise InvalidArgument(f"empty curve spec {spec!r}")
    return values
