"""Binary model checkpoints.

Layout (all little-endian):

    magic    4 bytes  "TLSC"
    version  u32      currently 1
    kind     u8       0 = continuous, 1 = discrete
    config   u32 length + UTF-8 key=value text (full RunConfig echo)
    count    u32      number of tensor records
    record   u16 name length + UTF-8 name
             u8 rank, then u32 per dimension
             float32 payload, row-major

Tensors are stored in 32-bit; a save/load round trip preserves model outputs
to about 1e-6 relative.
"""
from __future__ import annotations

import struct
from dataclasses import replace
from typing import Union

import numpy as np

from .config import RunConfig, dump_config, parse_config_text
from .errors import CheckpointFormatError, CorruptCheckpoint, UnsupportedVersion
from .nn import ParameterSet
from .vae import ContinuousConfig, ContinuousModel
from .vq import DiscreteConfig, DiscreteModel

MAGIC = b"TLSC"
VERSION = 1
_KIND_CODES = {"continuous": 0, "discrete": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}

Model = Union[ContinuousModel, DiscreteModel]


def model_config(model: Model) -> RunConfig:
    """RunConfig echo describing a model's geometry and hyperparameters."""
    base = RunConfig(
        dsp_sample_rate=model.sample_rate, dsp_fft_size=model.fft_size, dsp_hop=model.hop,
        model_kind=model.KIND, model_latent_dim=model.cfg.latent_dim,
        model_hidden=model.cfg.hidden)
    if isinstance(model, ContinuousModel):
        return replace(base, model_beta_kl=model.cfg.beta_kl,
                       model_lambda_adv=model.cfg.lambda_adv,
                       model_normalize_input=model.cfg.normalize_input,
                       model_condition_loudness=model.cfg.condition_loudness)
    return replace(base, model_codebook_size=model.cfg.codebook_size,
                   model_beta_commit=model.cfg.beta_commit)


def model_from_config(cfg: RunConfig) -> Model:
    """Instantiate a fresh model of the configured kind (zero training)."""
    frame_dim = cfg.dsp_fft_size // 2 + 1
    if cfg.model_kind == "continuous":
        mc = ContinuousConfig(frame_dim, cfg.model_latent_dim, cfg.model_hidden,
                              cfg.model_beta_kl, cfg.model_lambda_adv,
                              cfg.model_normalize_input, cfg.model_condition_loudness)
        return ContinuousModel.init(mc, cfg.dsp_sample_rate, cfg.dsp_fft_size, cfg.dsp_hop,
                                    seed=cfg.train_seed)
    mc = DiscreteConfig(frame_dim, cfg.model_latent_dim, cfg.model_hidden,
                        cfg.model_codebook_size, cfg.model_beta_commit)
    return DiscreteModel.init(mc, cfg.dsp_sample_rate, cfg.dsp_fft_size, cfg.dsp_hop,
                              seed=cfg.train_seed)


def checkpoint_bytes(model: Model) -> bytes:
    config_text = dump_config(model_config(model)).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", VERSION), struct.pack("<B", _KIND_CODES[model.KIND]),
             struct.pack("<I", len(config_text)), config_text]
    tensors = [(p.name, p.value) for p in model.params]
    parts.append(struct.pack("<I", len(tensors)))
    for name, value in tensors:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", value.ndim))
        for d in value.shape:
            parts.append(struct.pack("<I", d))
        parts.append(value.astype("<f4").tobytes())
    return b"".join(parts)


def checkpoint_save(model: Model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0
        self.context = "header"

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CorruptCheckpoint(f"truncated while reading {self.context}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def checkpoint_load_bytes(blob: bytes) -> Model:
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise CheckpointFormatError(f"bad magic; expected {MAGIC!r}")
    version = r.u32()
    if version > VERSION:
        raise UnsupportedVersion(f"checkpoint version {version} is newer than {VERSION}")
    kind_code = r.u8()
    if kind_code not in _KIND_NAMES:
        raise CorruptCheckpoint(f"unknown model kind code {kind_code}")
    r.context = "config echo"
    config_text = r.take(r.u32()).decode("utf-8")
    cfg = parse_config_text(config_text).validate()
    if cfg.model_kind != _KIND_NAMES[kind_code]:
        raise CorruptCheckpoint("model kind byte disagrees with config echo")
    model = model_from_config(cfg)
    r.context = "tensor table"
    count = r.u32()
    loaded: dict[str, np.ndarray] = {}
    for _ in range(count):
        r.context = "tensor name"
        name = r.take(r.u16()).decode("utf-8")
        r.context = f"tensor {name!r}"
        rank = r.u8()
        dims = tuple(r.u32() for _ in range(rank))
        n_items = int(np.prod(dims)) if dims else 1
        payload = r.take(4 * n_items)
        loaded[name] = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(dims)
    expected = set(model.params.names())
    if set(loaded) != expected:
        missing = expected - set(loaded)
        extra = set(loaded) - expected
        raise CorruptCheckpoint(f"tensor set mismatch; missing={sorted(missing)}, "
                                f"unexpected={sorted(extra)}")
    for name, value in loaded.items():
        p = model.params[name]
        if p.value.shape != value.shape:
            raise CorruptCheckpoint(
                f"tensor {name!r} has shape {value.shape}, expected {p.value.shape}")
        p.value[...] = value
    return model


def checkpoint_load(path) -> Model:
    with open(path, "rb") as fh:
        return checkpoint_load_bytes(fh.read())
