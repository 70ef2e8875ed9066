"""Run configuration: dotted key/value files, defaults, and precedence.

Config files are UTF-8 ``key = value`` lines with ``#`` comments. Keys are
dotted by module (``dsp.fft_size``). Precedence is CLI flag > config file >
built-in default; unknown keys are rejected everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import InvalidArgument


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    dsp_sample_rate: int = 16000
    dsp_fft_size: int = 1024
    dsp_hop: int = 256
    model_kind: str = "continuous"
    model_latent_dim: int = 16
    model_hidden: int = 256
    model_beta_kl: float = 1e-3
    model_lambda_adv: float = 1.0
    model_normalize_input: bool = True
    model_condition_loudness: bool = True
    model_codebook_size: int = 64
    model_beta_commit: float = 0.25
    train_steps: int = 3000
    train_batch: int = 64
    train_lr: float = 1e-3
    train_seed: int = 1
    data_f0_grid: tuple = (110.0, 220.0, 440.0, 880.0)
    data_alpha_grid: tuple = (0.5, 1.0, 2.0, 4.0)
    data_gain_grid: tuple = (0.0, -6.0, -12.0, -24.0)
    data_duration_s: float = 2.0
    paths_dataset: str = "dataset.npz"
    paths_checkpoint: str = "model.ckpt"
    paths_atlas: str = "atlas.txt"
    serve_host: str = "127.0.0.1"
    serve_port: int = 8765

    def validate(self) -> "RunConfig":
        if self.model_kind not in ("continuous", "discrete"):
            raise InvalidArgument(f"model.kind must be continuous or discrete, "
                                  f"got {self.model_kind!r}")
        if self.dsp_hop * 4 != self.dsp_fft_size:
            raise InvalidArgument("dsp.hop must be dsp.fft_size / 4")
        if self.dsp_sample_rate <= 0 or self.train_steps < 0 or self.train_batch < 1:
            raise InvalidArgument("non-positive dsp/training sizes")
        return self


def _key_to_attr(key: str) -> str:
    return key.strip().replace(".", "_")


_ATTR_TO_KEY = {f.name: f.name.replace("_", ".", 1) for f in fields(RunConfig)}
KNOWN_KEYS = tuple(sorted(_ATTR_TO_KEY.values()))

_PARSERS = {
    int: int,
    float: float,
    str: lambda s: s.strip(),
    bool: _parse_bool,
    tuple: _parse_float_list,
}


def _coerce(attr: str, raw: str):
    default = getattr(RunConfig(), attr)
    parser = _PARSERS[type(default)]
    try:
        return parser(raw)
    except ValueError as exc:
        raise InvalidArgument(f"bad value for {_ATTR_TO_KEY[attr]}: {raw!r} ({exc})") from exc


def apply_overrides(cfg: RunConfig, pairs: dict[str, str]) -> RunConfig:
    """Apply raw string overrides keyed by dotted names."""
    updates = {}
    for key, raw in pairs.items():
        attr = _key_to_attr(key)
        if attr not in _ATTR_TO_KEY:
            raise InvalidArgument(f"unknown config key {key!r}; known keys: {KNOWN_KEYS}")
        updates[attr] = _coerce(attr, raw)
    return replace(cfg, **updates)


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InvalidArgument(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        pairs[key.strip()] = value.strip()
    return apply_overrides(cfg, pairs)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def dump_config(cfg: RunConfig) -> str:
    """Serialize every key (used for the checkpoint config echo)."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            text = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        lines.append(f"{_ATTR_TO_KEY[f.name]} = {text}")
    return "\n".join(lines) + "\n"
