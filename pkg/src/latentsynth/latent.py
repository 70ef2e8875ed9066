"""Latent series: the per-frame latent trajectory of a clip, plus operators.

A series carries the latent frames, the per-frame loudness sidechain in dB,
and the analysis geometry needed to decode it again. The operators here are
pure; none of them touch a model.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgument

WIRE_HEADER = "latent-series 1"


@dataclass
class LatentSeries:
    z: np.ndarray          # (frames, latent_dim)
    gain_db: np.ndarray    # (frames,)
    sample_rate: int
    fft_size: int
    hop: int

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.gain_db = np.asarray(self.gain_db, dtype=np.float64)
        if self.z.ndim != 2 or len(self.z) == 0:
            raise InvalidArgument("latent series needs a nonempty (frames, dim) matrix")
        if self.gain_db.shape != (len(self.z),):
            raise InvalidArgument(
                f"gain sidechain length {self.gain_db.shape} != frame count {len(self.z)}")
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.gain_db))):
            raise InvalidArgument("latent series contains non-finite values")

    def __len__(self) -> int:
        return len(self.z)

    @property
    def latent_dim(self) -> int:
        return self.z.shape[1]


def interpolate(a: LatentSeries, b: LatentSeries, curve: np.ndarray) -> LatentSeries:
    """Time-variant linear interpolation: frame i is (1-t_i) a_i + t_i b_i.

    All three inputs must already share one length; resample first if not.
    Gains are interpolated linearly in dB. Metadata is copied from `a`.
    """
    t = np.asarray(curve, dtype=np.float64)
    if t.ndim != 1:
        raise InvalidArgument("curve must be a 1-D sequence of t values")
    if not (len(a) == len(b) == len(t)):
        raise InvalidArgument(
            f"length mismatch: a={len(a)}, b={len(b)}, curve={len(t)}; resample first")
    if a.latent_dim != b.latent_dim:
        raise InvalidArgument(f"latent dim mismatch: {a.latent_dim} vs {b.latent_dim}")
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise InvalidArgument("curve values must lie in [0, 1]")
    w = t[:, None]
    z = (1.0 - w) * a.z + w * b.z
    gains = (1.0 - t) * a.gain_db + t * b.gain_db
    return LatentSeries(z, gains, a.sample_rate, a.fft_size, a.hop)


def resample_series(s: LatentSeries, new_len: int) -> LatentSeries:
    """Linear resampling along the time axis (per dimension and for gains)."""
    if new_len < 1:
        raise InvalidArgument(f"new_len must be >= 1, got {new_len}")
    n = len(s)
    if new_len == n:
        return replace(s, z=s.z.copy(), gain_db=s.gain_db.copy())
    grid = np.linspace(0.0, n - 1, new_len)
    base = np.arange(n, dtype=np.float64)
    z = np.stack([np.interp(grid, base, s.z[:, d]) for d in range(s.latent_dim)], axis=1)
    gains = np.interp(grid, base, s.gain_db)
    return LatentSeries(z, gains, s.sample_rate, s.fft_size, s.hop)


def _check_compatible(a: LatentSeries, b: LatentSeries) -> None:
    if a.latent_dim != b.latent_dim:
        raise InvalidArgument(f"latent dim mismatch: {a.latent_dim} vs {b.latent_dim}")
    if (a.sample_rate, a.fft_size, a.hop) != (b.sample_rate, b.fft_size, b.hop):
        raise InvalidArgument("series metadata differs")


def add_series(a: LatentSeries, b: LatentSeries) -> LatentSeries:
    """Frame-wise sum; the gain sidechains are averaged."""
    _check_compatible(a, b)
    if len(a) != len(b):
        raise InvalidArgument(f"length mismatch: {len(a)} vs {len(b)}")
    return replace(a, z=a.z + b.z, gain_db=0.5 * (a.gain_db + b.gain_db))


def scale_series(s: LatentSeries, factor: float) -> LatentSeries:
    """Multiply every latent by a scalar; gains are untouched."""
    return replace(s, z=s.z * factor, gain_db=s.gain_db.copy())


def offset_dim(s: LatentSeries, dim: int, delta: float) -> LatentSeries:
    """Add delta to one latent dimension of every frame."""
    if not 0 <= dim < s.latent_dim:
        raise InvalidArgument(f"dimension {dim} out of range for latent_dim={s.latent_dim}")
    z = s.z.copy()
    z[:, dim] += delta
    return replace(s, z=z, gain_db=s.gain_db.copy())


def concat_series(a: LatentSeries, b: LatentSeries) -> LatentSeries:
    _check_compatible(a, b)
    return replace(a, z=np.concatenate([a.z, b.z]),
                   gain_db=np.concatenate([a.gain_db, b.gain_db]))


def reverse_series(s: LatentSeries) -> LatentSeries:
    return replace(s, z=s.z[::-1].copy(), gain_db=s.gain_db[::-1].copy())


_ARITH = {
    "add": add_series,
    "scale": scale_series,
    "offset_dim": offset_dim,
    "concat": concat_series,
    "reverse": reverse_series,
}


def series_arith(op: str, *args) -> LatentSeries:
    if op not in _ARITH:
        raise InvalidArgument(f"unknown series op {op!r}; choose from {sorted(_ARITH)}")
    return _ARITH[op](*args)


# -----------------------------
# Wire format
# -----------------------------
def serialize_series(s: LatentSeries) -> str:
    """Human-inspectable text form; floats use shortest round-trip repr."""
    lines = [
        WIRE_HEADER,
        f"sr {s.sample_rate}",
        f"fft_size {s.fft_size}",
        f"hop {s.hop}",
        f"d_z {s.latent_dim}",
        f"frames {len(s)}",
        "gain_db " + " ".join(repr(float(v)) for v in s.gain_db),
    ]
    for row in s.z:
        lines.append("z " + " ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_series(text: str) -> LatentSeries:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != WIRE_HEADER:
        raise InvalidArgument(f"latent series text must start with {WIRE_HEADER!r}")
    fields: dict[str, str] = {}
    rows: list[list[float]] = []
    try:
        for ln in lines[1:]:
            key, _, rest = ln.partition(" ")
            if key == "z":
                rows.append([float(v) for v in rest.split()])
            else:
                fields[key] = rest.strip()
        sr = int(fields["sr"])
        fft_size = int(fields["fft_size"])
        hop = int(fields["hop"])
        d_z = int(fields["d_z"])
        n = int(fields["frames"])
        gains = [float(v) for v in fields["gain_db"].split()]
    except (KeyError, ValueError) as exc:
        raise InvalidArgument(f"malformed latent series text: {exc}") from exc
    if len(rows) != n or len(gains) != n:
        raise InvalidArgument(f"frame count mismatch: header says {n}, "
                              f"got {len(rows)} z rows and {len(gains)} gains")
    z = np.array(rows, dtype=np.float64)
    if z.shape != (n, d_z):
        raise InvalidArgument(f"z rows are not uniformly {d_z}-dimensional")
    return LatentSeries(z, np.array(gains), sr, fft_size, hop)
