import struct
from pathlib import Path

import numpy as np
import pytest

from latentsynth import checkpoint as ckpt
from latentsynth import dsp
from latentsynth.checkpoint import (checkpoint_bytes, checkpoint_load,
                                    checkpoint_load_bytes, checkpoint_save)
from latentsynth.errors import (CheckpointFormatError, CorruptCheckpoint,
                                UnsupportedVersion)
from latentsynth.rng import SplitMix64
from latentsynth.vae import ContinuousConfig, ContinuousModel
from latentsynth.vq import DiscreteConfig, DiscreteModel

SR = 16000
FFT = 256
HOP = 64
DX = FFT // 2 + 1

GOLDEN = Path(__file__).parent / "data" / "golden_continuous.ckpt"


def fresh_continuous(seed=3):
    cfg = ContinuousConfig(frame_dim=DX, latent_dim=8, hidden=32)
    return ContinuousModel.init(cfg, SR, FFT, HOP, seed=seed)


def fresh_discrete(seed=4):
    cfg = DiscreteConfig(frame_dim=DX, latent_dim=8, hidden=32, codebook_size=8)
    return DiscreteModel.init(cfg, SR, FFT, HOP, seed=seed)


class TestRoundTrip:
    def test_continuous_outputs_survive(self, tmp_path):
        model = fresh_continuous()
        path = tmp_path / "m.ckpt"
        checkpoint_save(model, path)
        loaded = checkpoint_load(path)
        rng = SplitMix64(5)
        frames = rng.uniform((6, DX)) * 3 - 11
        a_mu, a_lv = model.encode_frames(frames)
        b_mu, b_lv = loaded.encode_frames(frames)
        denom = np.maximum(np.maximum(np.abs(a_mu), np.abs(b_mu)), 1.0)
        assert np.max(np.abs(a_mu - b_mu) / denom) <= 1e-5
        da = model.decode_frames(a_mu, np.full(6, -12.0))
        db = loaded.decode_frames(b_mu, np.full(6, -12.0))
        # decoded magnitudes compared relative to the frame magnitude scale
        ma, mb = dsp.linear_magnitudes(da), dsp.linear_magnitudes(db)
        assert np.max(np.abs(ma - mb)) / np.max(ma) <= 1e-5

    def test_discrete_round_trip(self, tmp_path):
        model = fresh_discrete()
        path = tmp_path / "m.ckpt"
        checkpoint_save(model, path)
        loaded = checkpoint_load(path)
        assert isinstance(loaded, DiscreteModel)
        assert loaded.cfg == model.cfg
        assert np.max(np.abs(loaded.codebook - model.codebook)) <= 1e-6

    def test_config_echo_preserves_hyperparams(self, tmp_path):
        cfg = ContinuousConfig(frame_dim=DX, latent_dim=8, hidden=32,
                               beta_kl=0.005, lambda_adv=2.0,
                               normalize_input=False, condition_loudness=False)
        model = ContinuousModel.init(cfg, SR, FFT, HOP, seed=6)
        blob = checkpoint_bytes(model)
        loaded = checkpoint_load_bytes(blob)
        assert loaded.cfg == cfg


class TestGuards:
    def test_bad_magic(self):
        blob = b"XXXX" + checkpoint_bytes(fresh_continuous())[4:]
        with pytest.raises(CheckpointFormatError):
            checkpoint_load_bytes(blob)

    def test_future_version(self):
        blob = bytearray(checkpoint_bytes(fresh_continuous()))
        blob[4:8] = struct.pack("<I", 99)
        with pytest.raises(UnsupportedVersion):
            checkpoint_load_bytes(bytes(blob))

    def test_truncated_tensor_names_context(self):
        blob = checkpoint_bytes(fresh_continuous())
        with pytest.raises(CorruptCheckpoint, match="tensor"):
            checkpoint_load_bytes(blob[:-10])

    def test_dims_payload_mismatch(self):
        model = fresh_continuous()
        blob = bytearray(checkpoint_bytes(model))
        # grow the first tensor's first dimension: payload no longer fits
        cfg_len = struct.unpack_from("<I", blob, 9)[0]
        pos = 13 + cfg_len + 4
        name_len = struct.unpack_from("<H", blob, pos)[0]
        dim_pos = pos + 2 + name_len + 1
        (d0,) = struct.unpack_from("<I", blob, dim_pos)
        struct.pack_into("<I", blob, dim_pos, d0 + 1)
        with pytest.raises(CorruptCheckpoint):
            checkpoint_load_bytes(bytes(blob))


class TestGolden:
    def test_golden_checkpoint_reparses(self):
        """Format stability: bytes written once and committed must keep
        loading (acceptance criterion 9 support)."""
        model = checkpoint_load(GOLDEN)
        assert isinstance(model, ContinuousModel)
        assert model.cfg.latent_dim == 4
        assert model.fft_size == 128
        assert sorted(model.params.names()) == sorted([
            "enc.h.w", "enc.h.b", "enc.mu.w", "enc.mu.b",
            "enc.logvar.w", "enc.logvar.b", "dec.h.w", "dec.h.b",
            "dec.out.w", "dec.out.b", "adv.h.w", "adv.h.b",
            "adv.out.w", "adv.out.b"])
        mu, _ = model.encode_frames(np.full((1, 65), -11.0))
        assert np.all(np.isfinite(mu))
