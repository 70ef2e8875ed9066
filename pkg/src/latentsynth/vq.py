"""Discrete latent model: codebook quantization with gain disentanglement.

Frames are split into a unit-norm shape (linear-magnitude L2) and a scalar
gain before encoding, so the codebook only ever sees level-normalized
material; the gain is reapplied multiplicatively after decoding, which makes
the level law exactly linear. Training uses straight-through gradients and
separate codebook/commitment pull terms.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

from . import dsp, nn
from .dsp import SpectralFrame
from .errors import InvalidArgument, InvalidState
from .rng import SplitMix64

RECENT_CODES_CAP = 4096
REINIT_NOISE = 1e-4


def normalize_frame(frame) -> tuple[np.ndarray, float]:
    """Split a frame into (unit shape re-expressed as log-magnitudes, gain).

    The gain is the L2 norm of the linear magnitudes; a 1e-8 guard keeps the
    all-floor case finite.
    """
    log_mags = frame.log_mags if isinstance(frame, SpectralFrame) else np.asarray(frame)
    unit, gain = dsp.unit_log_frames(log_mags)
    return unit, float(gain)


@dataclass(frozen=True)
class DiscreteConfig:
    frame_dim: int
    latent_dim: int = 16
    hidden: int = 256
    codebook_size: int = 64
    beta_commit: float = 0.25

    def __post_init__(self):
        if self.codebook_size < 2:
            raise InvalidArgument(f"codebook_size must be >= 2, got {self.codebook_size}")
        if self.beta_commit <= 0:
            raise InvalidArgument("beta_commit must be > 0")
        if self.latent_dim >= self.frame_dim:
            raise InvalidArgument(
                f"latent_dim ({self.latent_dim}) must be < frame_dim ({self.frame_dim})")


class DiscreteModel:
    KIND = "discrete"

    def __init__(self, cfg: DiscreteConfig, sample_rate: int, fft_size: int, hop: int,
                 params: nn.ParameterSet):
        if cfg.frame_dim != fft_size // 2 + 1:
            raise InvalidArgument(
                f"frame_dim {cfg.frame_dim} inconsistent with fft_size {fft_size}")
        self.cfg = cfg
        self.sample_rate = sample_rate
        self.fft_size = fft_size
        self.hop = hop
        self.params = params
        self.usage_counts = np.zeros(cfg.codebook_size, dtype=np.int64)
        self._recent_codes: list[np.ndarray] = []
        self._steps_since_reset = 0

    @classmethod
    def init(cls, cfg: DiscreteConfig, sample_rate: int = dsp.DEFAULT_SAMPLE_RATE,
             fft_size: int = dsp.DEFAULT_FFT_SIZE, hop: int = dsp.DEFAULT_HOP,
             seed: int = 0) -> "DiscreteModel":
        rng = SplitMix64(seed)
        params = nn.ParameterSet()
        nn.add_dense_layer(params, "enc.h", cfg.frame_dim, cfg.hidden, rng)
        nn.add_dense_layer(params, "enc.out", cfg.hidden, cfg.latent_dim, rng)
        nn.add_dense_layer(params, "dec.h", cfg.latent_dim, cfg.hidden, rng)
        nn.add_dense_layer(params, "dec.out", cfg.hidden, cfg.frame_dim, rng)
        params.add("codebook", rng.normal((cfg.codebook_size, cfg.latent_dim)) * 0.1)
        return cls(cfg, sample_rate, fft_size, hop, params)

    @property
    def codebook(self) -> np.ndarray:
        return self.params["codebook"].value

    # ---- encoder/decoder --------------------------------------------------
    def _encoder_input(self, log_mags: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(log_mags, dtype=np.float64))
        if x.shape[1] != self.cfg.frame_dim:
            raise InvalidArgument(f"frame dim {x.shape[1]} != model dim {self.cfg.frame_dim}")
        unit, _ = dsp.unit_log_frames(x)
        return dsp.network_input(unit)

    def _encoder_nodes(self, x_in: np.ndarray) -> nn.Node:
        p = self.params
        x = nn.const(x_in)
        h = nn.tanh(nn.dense(x, nn.param(p["enc.h.w"]), nn.param(p["enc.h.b"])))
        return nn.dense(h, nn.param(p["enc.out.w"]), nn.param(p["enc.out.b"]))

    def _decoder_nodes(self, z: nn.Node) -> nn.Node:
        p = self.params
        h = nn.tanh(nn.dense(z, nn.param(p["dec.h.w"]), nn.param(p["dec.h.b"])))
        return nn.dense(h, nn.param(p["dec.out.w"]), nn.param(p["dec.out.b"]))

    def encode_frames(self, log_mags: np.ndarray) -> np.ndarray:
        """Pre-quantization latents z_e; input is level-normalized internally."""
        return self._encoder_nodes(self._encoder_input(log_mags)).value

    def quantize(self, z_e: np.ndarray, training: bool = False):
        """Nearest codebook row: (index, z_q, squared distance).

        Ties break toward the lowest index. Batch input returns arrays.
        """
        cb = self.codebook
        if cb.shape[0] == 0:
            raise InvalidState("empty codebook")
        z = np.asarray(z_e, dtype=np.float64)
        single = z.ndim == 1
        zb = z[None, :] if single else z
        if zb.shape[1] != cb.shape[1]:
            raise InvalidArgument(f"latent dim {zb.shape[1]} != codebook dim {cb.shape[1]}")
        diff = zb[:, None, :] - cb[None, :, :]
        dists = np.sum(diff * diff, axis=2)
        idx = np.argmin(dists, axis=1)  # first minimum = lowest index on ties
        if training:
            np.add.at(self.usage_counts, idx, 1)
        z_q = cb[idx]
        d = dists[np.arange(len(idx)), idx]
        if single:
            return int(idx[0]), z_q[0], float(d[0])
        return idx, z_q, d

    # ---- training -----------------------------------------------------------
    def train_step(self, frames: np.ndarray, lr: float = 1e-3) -> dict[str, float]:
        """One Adam step on encoder, decoder and the selected codebook rows."""
        frames = np.atleast_2d(frames)
        if len(frames) == 0:
            raise InvalidArgument("empty batch")
        x_in = self._encoder_input(frames)
        z_e = self._encoder_nodes(x_in)
        idx, z_q, _ = self.quantize(z_e.value, training=True)
        # decoder sees z_q but gradients flow straight through to z_e
        st = nn.straight_through(z_e, z_q)
        xhat = self._decoder_nodes(st)
        recon = nn.mse_loss(xhat, x_in)
        cb_rows = nn.embed_rows(nn.param(self.params["codebook"]), idx)
        codebook_loss = nn.row_sq_error(cb_rows, z_e.value)
        commit = nn.row_sq_error(z_e, z_q)
        total = nn.wsum([(recon, 1.0), (codebook_loss, 1.0), (commit, self.cfg.beta_commit)])
        nn.backward(total)
        nn.adam_step(self.params, lr, sparse_rows={"codebook": idx})
        self._remember_codes(z_e.value)
        self._steps_since_reset += 1
        return {"recon": float(recon.value), "codebook": float(codebook_loss.value),
                "commit": float(commit.value)}

    def _remember_codes(self, z_e: np.ndarray) -> None:
        self._recent_codes.append(np.array(z_e))
        total = sum(len(a) for a in self._recent_codes)
        while total - len(self._recent_codes[0]) >= RECENT_CODES_CAP:
            total -= len(self._recent_codes.pop(0))

    def reinit_dead_codes(self, rng: SplitMix64) -> int:
        """Relocate codes unused since the last call onto recent encoder outputs.

        Returns the number of codes reinitialized; all usage counters reset.
        A window with no training steps is a no-op.
        """
        if self._steps_since_reset == 0 or not self._recent_codes:
            return 0
        dead = np.flatnonzero(self.usage_counts == 0)
        pool = np.concatenate(self._recent_codes)
        cb = self.params["codebook"]
        for j in dead:
            pick = int(rng.integers(0, len(pool), 1)[0])
            cb.value[j] = pool[pick] + REINIT_NOISE * rng.normal((self.cfg.latent_dim,))
            cb.m[j] = 0.0
            cb.v[j] = 0.0
        self.usage_counts[...] = 0
        self._steps_since_reset = 0
        return int(len(dead))

    # ---- synthesis ------------------------------------------------------------
    def decode_code(self, index: int, gain: float) -> SpectralFrame:
        """Decode one codebook entry at a linear gain, back to log-magnitudes."""
        if not 0 <= index < self.cfg.codebook_size:
            raise InvalidArgument(
                f"code index {index} out of range [0, {self.cfg.codebook_size})")
        return SpectralFrame(self.decode_codes(np.array([index]), np.array([gain]))[0])

    def decode_codes(self, indices: np.ndarray, gains: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= self.cfg.codebook_size):
            raise InvalidArgument("code index out of range")
        g = np.asarray(gains, dtype=np.float64)
        raw = self._decoder_nodes(nn.const(self.codebook[idx])).value
        unit = dsp.linear_magnitudes(dsp.network_output_to_log(raw))
        return dsp.log_magnitudes(unit * g[:, None])


def train(model: DiscreteModel, frames: np.ndarray, steps: int, batch_size: int = 64,
          lr: float = 1e-3, seed: int = 1, reinit_every: int = 250,
          log_every: int = 0) -> list[dict[str, float]]:
    """Seeded training loop with periodic dead-code maintenance."""
    if len(frames) == 0:
        raise InvalidArgument("empty dataset")
    rng = SplitMix64(seed)
    maintenance_rng = rng.fork()
    history = []
    n = len(frames)
    for step in range(steps):
        idx = rng.integers(0, n, min(batch_size, n))
        losses = model.train_step(frames[idx], lr)
        history.append(losses)
        if reinit_every and (step + 1) % reinit_every == 0 and step + 1 < steps:
            model.reinit_dead_codes(maintenance_rng)
        if log_every and (step + 1) % log_every == 0:
            print(f"step {step + 1}/{steps} recon={losses['recon']:.5f} "
                  f"codebook={losses['codebook']:.5f} commit={losses['commit']:.5f}",
                  file=sys.stderr)
    return history
