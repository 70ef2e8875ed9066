"""Continuous latent model: a frame VAE whose latents ignore loudness.

Three cooperating pieces make the representation level-blind while keeping
reconstruction exact:

* encoder inputs are level-normalized frame shapes (L2 in the linear
  magnitude domain), so gain changes cannot reach the latents;
* a loudness regressor reads the latents through a gradient-reversal node,
  adversarially scrubbing whatever level information still leaks in;
* the decoder is conditioned on the loudness sidechain and its output is
  re-leveled to that target, so the original frame is still recoverable.

Setting normalize_input=False, condition_loudness=False and lambda_adv=0
yields the plain baseline autoencoder used for comparison probes.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from . import dsp, nn
from .dsp import AudioBuffer, SpectralFrame
from .errors import InvalidArgument
from .latent import LatentSeries
from .rng import SplitMix64

LOGVAR_MIN = -10.0
LOGVAR_MAX = 2.0

# dB condition mapped to [-1, 1] over [-100, 0]
def _condition(loudness_db: np.ndarray) -> np.ndarray:
    return (np.asarray(loudness_db, dtype=np.float64) + 50.0) / 50.0


def reparameterize(mu: np.ndarray, logvar: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Sample z = mu + exp(logvar / 2) * noise."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if mu.shape != logvar.shape or mu.shape != noise.shape:
        raise InvalidArgument(
            f"shape mismatch: mu{mu.shape} logvar{logvar.shape} noise{noise.shape}")
    return mu + np.exp(0.5 * logvar) * noise


@dataclass(frozen=True)
class ContinuousConfig:
    frame_dim: int
    latent_dim: int = 16
    hidden: int = 256
    beta_kl: float = 1e-3
    lambda_adv: float = 1.0
    normalize_input: bool = True
    condition_loudness: bool = True

    def __post_init__(self):
        if self.latent_dim >= self.frame_dim:
            raise InvalidArgument(
                f"latent_dim ({self.latent_dim}) must be < frame_dim ({self.frame_dim})")


class ContinuousModel:
    KIND = "continuous"

    def __init__(self, cfg: ContinuousConfig, sample_rate: int, fft_size: int, hop: int,
                 params: nn.ParameterSet):
        if cfg.frame_dim != fft_size // 2 + 1:
            raise InvalidArgument(
                f"frame_dim {cfg.frame_dim} inconsistent with fft_size {fft_size}")
        self.cfg = cfg
        self.sample_rate = sample_rate
        self.fft_size = fft_size
        self.hop = hop
        self.params = params

    @classmethod
    def init(cls, cfg: ContinuousConfig, sample_rate: int = dsp.DEFAULT_SAMPLE_RATE,
             fft_size: int = dsp.DEFAULT_FFT_SIZE, hop: int = dsp.DEFAULT_HOP,
             seed: int = 0) -> "ContinuousModel":
        rng = SplitMix64(seed)
        params = nn.ParameterSet()
        dec_in = cfg.latent_dim + (1 if cfg.condition_loudness else 0)
        nn.add_dense_layer(params, "enc.h", cfg.frame_dim, cfg.hidden, rng)
        nn.add_dense_layer(params, "enc.mu", cfg.hidden, cfg.latent_dim, rng)
        nn.add_dense_layer(params, "enc.logvar", cfg.hidden, cfg.latent_dim, rng)
        nn.add_dense_layer(params, "dec.h", dec_in, cfg.hidden, rng)
        nn.add_dense_layer(params, "dec.out", cfg.hidden, cfg.frame_dim, rng)
        nn.add_dense_layer(params, "adv.h", cfg.latent_dim, cfg.hidden, rng)
        nn.add_dense_layer(params, "adv.out", cfg.hidden, 1, rng)
        return cls(cfg, sample_rate, fft_size, hop, params)

    # ---- input pipeline -------------------------------------------------
    def encoder_input(self, log_mags: np.ndarray) -> np.ndarray:
        """Network-ready encoder input. Depends only on the frame content."""
        x = np.atleast_2d(np.asarray(log_mags, dtype=np.float64))
        if x.shape[1] != self.cfg.frame_dim:
            raise InvalidArgument(f"frame dim {x.shape[1]} != model dim {self.cfg.frame_dim}")
        if self.cfg.normalize_input:
            x, _ = dsp.unit_log_frames(x)
        return dsp.network_input(x)

    def _decoder_target(self, log_mags: np.ndarray) -> np.ndarray:
        """Training target in the network's output domain."""
        x = np.atleast_2d(np.asarray(log_mags, dtype=np.float64))
        if self.cfg.condition_loudness:
            x, _ = dsp.unit_log_frames(x)
        return dsp.network_input(x)

    # ---- graph builders --------------------------------------------------
    def _encoder_nodes(self, x_in: np.ndarray):
        p = self.params
        x = nn.const(x_in)
        h = nn.tanh(nn.dense(x, nn.param(p["enc.h.w"]), nn.param(p["enc.h.b"])))
        mu = nn.dense(h, nn.param(p["enc.mu.w"]), nn.param(p["enc.mu.b"]))
        logvar = nn.clamp(
            nn.dense(h, nn.param(p["enc.logvar.w"]), nn.param(p["enc.logvar.b"])),
            LOGVAR_MIN, LOGVAR_MAX)
        return mu, logvar

    def _decoder_nodes(self, z: nn.Node, loudness_db: np.ndarray) -> nn.Node:
        p = self.params
        if self.cfg.condition_loudness:
            cond = nn.const(_condition(loudness_db)[:, None])
            z = nn.concat_cols(z, cond)
        h = nn.tanh(nn.dense(z, nn.param(p["dec.h.w"]), nn.param(p["dec.h.b"])))
        return nn.dense(h, nn.param(p["dec.out.w"]), nn.param(p["dec.out.b"]))

    def _adversary_nodes(self, z: nn.Node) -> nn.Node:
        p = self.params
        h = nn.tanh(nn.dense(z, nn.param(p["adv.h.w"]), nn.param(p["adv.h.b"])))
        return nn.dense(h, nn.param(p["adv.out.w"]), nn.param(p["adv.out.b"]))

    # ---- inference -------------------------------------------------------
    def encode(self, frame) -> tuple[np.ndarray, np.ndarray]:
        """Posterior parameters (mu, logvar) for one frame."""
        log_mags = frame.log_mags if isinstance(frame, SpectralFrame) else frame
        mu, logvar = self.encode_frames(np.atleast_2d(log_mags))
        return mu[0], logvar[0]

    def encode_frames(self, log_mags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mu, logvar = self._encoder_nodes(self.encoder_input(log_mags))
        return mu.value, logvar.value

    def decode(self, z: np.ndarray, loudness_db: float) -> SpectralFrame:
        return SpectralFrame(self.decode_frames(np.atleast_2d(z), np.array([loudness_db]))[0])

    def decode_frames(self, z: np.ndarray, loudness_db: np.ndarray) -> np.ndarray:
        """Batch decode to log-magnitude frames (>= the magnitude floor)."""
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if z.shape[1] != self.cfg.latent_dim:
            raise InvalidArgument(f"latent dim {z.shape[1]} != model dim {self.cfg.latent_dim}")
        loud = np.asarray(loudness_db, dtype=np.float64)
        raw = self._decoder_nodes(nn.const(z), loud).value
        if not self.cfg.condition_loudness:
            return dsp.network_output_to_log(raw)
        # re-level the decoded shape so the conditioned loudness always holds
        unit = dsp.linear_magnitudes(dsp.network_output_to_log(raw))
        norms = np.maximum(np.linalg.norm(unit, axis=1), 1e-8)
        mags = unit * (dsp.magnitude_gain(loud, self.fft_size) / norms)[:, None]
        return dsp.log_magnitudes(mags)

    def encode_series(self, audio: AudioBuffer) -> LatentSeries:
        """Frame-wise posterior means plus the per-frame loudness sidechain."""
        log_mags, _ = dsp.stft_arrays(audio.samples, self.fft_size, self.hop)
        gains = np.array([
            dsp.loudness_db(audio.samples[i * self.hop:i * self.hop + self.fft_size])
            for i in range(len(log_mags))])
        mu, _ = self.encode_frames(log_mags)
        return LatentSeries(mu, gains, self.sample_rate, self.fft_size, self.hop)

    def decode_series(self, series: LatentSeries, griffin_lim_iterations: int = 32) -> AudioBuffer:
        if series.latent_dim != self.cfg.latent_dim:
            raise InvalidArgument(
                f"series latent dim {series.latent_dim} != model dim {self.cfg.latent_dim}")
        frames = self.decode_frames(series.z, series.gain_db)
        return dsp.istft_griffin_lim(frames, self.sample_rate, griffin_lim_iterations,
                                     hop=self.hop)

    # ---- training ----------------------------------------------------------
    def train_step(self, frames: np.ndarray, loudness: np.ndarray, noise: np.ndarray,
                   lambda_eff: float, lr: float = 1e-3) -> dict[str, float]:
        """One joint Adam step on encoder, decoder and adversary.

        Total objective: recon + beta_kl * KL + adversary MSE, with the
        adversary reading the sampled latent through gradient reversal of
        strength lambda_eff.
        """
        frames = np.atleast_2d(frames)
        if len(frames) == 0:
            raise InvalidArgument("empty batch")
        loud = np.asarray(loudness, dtype=np.float64)
        mu, logvar = self._encoder_nodes(self.encoder_input(frames))
        sigma = nn.exp(nn.scale(logvar, 0.5))
        z = nn.add(mu, nn.mul(sigma, nn.const(noise)))
        xhat = self._decoder_nodes(z, loud)
        recon = nn.mse_loss(xhat, self._decoder_target(frames))
        kl = nn.kl_gauss_std(mu, logvar)
        adv_pred = self._adversary_nodes(nn.gradient_reversal(z, lambda_eff))
        adv = nn.mse_loss(adv_pred, _condition(loud)[:, None])
        total = nn.wsum([(recon, 1.0), (kl, self.cfg.beta_kl), (adv, 1.0)])
        nn.backward(total)
        nn.adam_step(self.params, lr)
        return {"recon": float(recon.value), "kl": float(kl.value), "adv": float(adv.value)}

    def reconstruction_mse(self, frames: np.ndarray, loudness: np.ndarray) -> float:
        """Full-frame MSE of decode(encode(x).mu, loudness) in the network domain."""
        mu, _ = self.encode_frames(frames)
        decoded = self.decode_frames(mu, loudness)
        a = dsp.network_input(decoded)
        b = dsp.network_input(np.atleast_2d(frames))
        return float(np.mean((a - b) ** 2))


def lambda_schedule(step: int, total_steps: int, lambda_adv: float) -> float:
    """0 for the first 10% of steps, linear ramp to lambda_adv by 50%."""
    if total_steps <= 0:
        return lambda_adv
    frac = step / total_steps
    if frac < 0.1:
        return 0.0
    return lambda_adv * min(1.0, (frac - 0.1) / 0.4)


def train(model: ContinuousModel, frames: np.ndarray, loudness: np.ndarray, steps: int,
          batch_size: int = 64, lr: float = 1e-3, seed: int = 1,
          log_every: int = 0) -> list[dict[str, float]]:
    """Seeded training loop; returns the per-step loss history."""
    if len(frames) == 0:
        raise InvalidArgument("empty dataset")
    rng = SplitMix64(seed)
    history = []
    n = len(frames)
    for step in range(steps):
        idx = rng.integers(0, n, min(batch_size, n))
        noise = rng.normal((len(idx), model.cfg.latent_dim))
        lam = lambda_schedule(step, steps, model.cfg.lambda_adv)
        losses = model.train_step(frames[idx], loudness[idx], noise, lam, lr)
        history.append(losses)
        if log_every and (step + 1) % log_every == 0:
            print(f"step {step + 1}/{steps} recon={losses['recon']:.5f} "
                  f"kl={losses['kl']:.4f} adv={losses['adv']:.4f}", file=sys.stderr)
    return history
