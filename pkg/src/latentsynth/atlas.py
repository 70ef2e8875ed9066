"""Descriptor mapping of the discrete codebook, and descriptor-driven synthesis.

Every code is decoded on its own, rendered to audio, and measured; the atlas
keeps one descriptor record per code plus ascending sort permutations, which
turn the unordered codebook into something that can be traversed by centroid,
bandwidth or pitch, or matched against a drawn target curve.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import dsp
from .dsp import AudioBuffer, DescriptorVector
from .errors import InvalidArgument, InvalidState
from .vq import DiscreteModel

DESCRIPTOR_NAMES = ("centroid", "bandwidth", "f0")
ATLAS_HEADER = "descriptor-atlas 1"
MEASURE_TILE_FRAMES = 8
REFERENCE_GAIN = 1.0


@dataclass
class DescriptorAtlas:
    entries: list[DescriptorVector]
    sort_orders: dict[str, np.ndarray]

    def __post_init__(self):
        k = len(self.entries)
        for name, order in self.sort_orders.items():
            if sorted(order.tolist()) != list(range(k)):
                raise InvalidState(f"sort order {name!r} is not a permutation of 0..{k - 1}")

    @property
    def size(self) -> int:
        return len(self.entries)

    def values(self, descriptor: str) -> np.ndarray:
        """Descriptor value per code; NaN marks an absent f0."""
        if descriptor not in DESCRIPTOR_NAMES:
            raise InvalidArgument(
                f"unknown descriptor {descriptor!r}; choose from {DESCRIPTOR_NAMES}")
        if descriptor == "centroid":
            return np.array([e.centroid_hz for e in self.entries])
        if descriptor == "bandwidth":
            return np.array([e.bandwidth_hz for e in self.entries])
        return np.array([np.nan if e.f0_hz is None else e.f0_hz for e in self.entries])


def _sort_order(values: np.ndarray) -> np.ndarray:
    key = np.where(np.isnan(values), np.inf, values)
    return np.argsort(key, kind="stable")


def measure_code_audio(model: DiscreteModel, audio: AudioBuffer) -> DescriptorVector:
    """Descriptors of a decoded-code rendering, averaged over interior frames."""
    log_mags, _ = dsp.stft_arrays(audio.samples, model.fft_size, model.hop)
    interior = log_mags[1:-1] if len(log_mags) > 2 else log_mags
    centroid = float(np.mean([dsp.spectral_centroid(f, model.sample_rate) for f in interior]))
    bandwidth = float(np.mean([dsp.spectral_bandwidth(f, model.sample_rate) for f in interior]))
    mid = len(audio.samples) // 2
    half = min(1024, mid)
    f0_window = audio.samples[mid - half:mid + half]
    min_len = int(np.ceil(2.0 * model.sample_rate / 50.0))
    if len(f0_window) < min_len:
        f0_window = audio.samples
    f0 = dsp.fundamental_frequency(f0_window, model.sample_rate)
    return DescriptorVector(
        loudness_db=dsp.loudness_db(audio.samples),
        centroid_hz=centroid, bandwidth_hz=bandwidth, f0_hz=f0)


def render_codes(model: DiscreteModel, indices: np.ndarray, gains: np.ndarray,
                 griffin_lim_iterations: int = 32) -> AudioBuffer:
    frames = model.decode_codes(indices, gains)
    return dsp.istft_griffin_lim(frames, model.sample_rate, griffin_lim_iterations,
                                 hop=model.hop)


def build_atlas(model: DiscreteModel, griffin_lim_iterations: int = 32) -> DescriptorAtlas:
    """Decode and measure every code at the reference gain.

    Each code is tiled over several frames before phase reconstruction so
    descriptor measurement is stable, and measured over interior frames only.
    """
    entries = []
    for j in range(model.cfg.codebook_size):
        idx = np.full(MEASURE_TILE_FRAMES, j)
        gains = np.full(MEASURE_TILE_FRAMES, REFERENCE_GAIN)
        audio = render_codes(model, idx, gains, griffin_lim_iterations)
        entries.append(measure_code_audio(model, audio))
    atlas = DescriptorAtlas(entries, {})
    atlas.sort_orders = {name: _sort_order(atlas.values(name)) for name in DESCRIPTOR_NAMES}
    return atlas


def traverse(atlas: DescriptorAtlas, model: DiscreteModel, descriptor: str,
             frames_per_code: int, griffin_lim_iterations: int = 32) -> AudioBuffer:
    """Sweep the whole codebook in ascending descriptor order."""
    if descriptor not in atlas.sort_orders:
        raise InvalidArgument(f"unknown descriptor {descriptor!r}")
    if frames_per_code < 1:
        raise InvalidArgument("frames_per_code must be >= 1")
    order = atlas.sort_orders[descriptor]
    indices = np.repeat(order, frames_per_code)
    gains = np.full(len(indices), REFERENCE_GAIN)
    return render_codes(model, indices, gains, griffin_lim_iterations)


def select_codes(atlas: DescriptorAtlas, descriptor: str,
                 targets: Sequence[float]) -> np.ndarray:
    """Nearest-value code per target, via binary search on the sorted order.

    Distances tie toward the lowest code index. Codes with an absent value
    (unvoiced f0) are never selected; if no code has the descriptor at all,
    the atlas cannot serve targets for it.
    """
    if descriptor not in atlas.sort_orders:
        raise InvalidArgument(f"unknown descriptor {descriptor!r}")
    values = atlas.values(descriptor)
    order = atlas.sort_orders[descriptor]
    usable = order[~np.isnan(values[order])]
    if len(usable) == 0:
        raise InvalidState(f"no code has a defined {descriptor!r} value")
    sorted_vals = values[usable].tolist()
    chosen = []
    for t in np.asarray(targets, dtype=np.float64):
        pos = bisect_left(sorted_vals, t)
        candidates: list[float] = []
        if pos > 0:
            candidates.append(sorted_vals[pos - 1])
        if pos < len(sorted_vals):
            candidates.append(sorted_vals[pos])
        best_dist = min(abs(v - t) for v in candidates)
        best_index = None
        for v in candidates:
            if abs(v - t) != best_dist:
                continue
            lo = bisect_left(sorted_vals, v)
            hi = lo
            while hi < len(sorted_vals) and sorted_vals[hi] == v:
                hi += 1
            group_min = int(np.min(usable[lo:hi]))
            if best_index is None or group_min < best_index:
                best_index = group_min
        chosen.append(best_index)
    return np.array(chosen, dtype=np.int64)


def synthesize_target(atlas: DescriptorAtlas, model: DiscreteModel, descriptor: str,
                      targets: Sequence[float], gain_db: Optional[Sequence[float]] = None,
                      griffin_lim_iterations: int = 32) -> tuple[np.ndarray, AudioBuffer]:
    """Follow a descriptor target curve; one code (one frame) per target value."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 1 or len(targets) == 0:
        raise InvalidArgument("target must be a nonempty 1-D sequence")
    codes = select_codes(atlas, descriptor, targets)
    if gain_db is None:
        gains = np.full(len(codes), REFERENCE_GAIN)
    else:
        g = np.asarray(gain_db, dtype=np.float64)
        if g.shape == ():
            g = np.full(len(codes), float(g))
        if len(g) != len(codes):
            raise InvalidArgument(f"gain list length {len(g)} != target length {len(codes)}")
        gains = dsp.magnitude_gain(g, model.fft_size)
    audio = render_codes(model, codes, gains, griffin_lim_iterations)
    return codes, audio


# -----------------------------
# Export format
# -----------------------------
def _fmt(v: float) -> str:
    return repr(float(v))


def export_atlas(atlas: DescriptorAtlas) -> str:
    lines = [ATLAS_HEADER, f"codes {atlas.size}"]
    for i, e in enumerate(atlas.entries):
        lines.append(f"index {i}")
        lines.append(f"centroid_hz {_fmt(e.centroid_hz)}")
        lines.append(f"bandwidth_hz {_fmt(e.bandwidth_hz)}")
        lines.append("f0_hz none" if e.f0_hz is None else f"f0_hz {_fmt(e.f0_hz)}")
    for name in DESCRIPTOR_NAMES:
        lines.append(f"order_{name} " + " ".join(str(int(i)) for i in atlas.sort_orders[name]))
    return "\n".join(lines) + "\n"


def import_atlas(text: str) -> DescriptorAtlas:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ATLAS_HEADER:
        raise InvalidArgument(f"atlas text must start with {ATLAS_HEADER!r}")
    try:
        k = int(lines[1].split()[1])
        entries: list[DescriptorVector] = []
        orders: dict[str, np.ndarray] = {}
        fields: dict[str, float | None] = {}
        for ln in lines[2:]:
            key, _, rest = ln.partition(" ")
            if key == "index":
                if fields:
                    entries.append(DescriptorVector(0.0, fields["centroid_hz"],
                                                    fields["bandwidth_hz"], fields["f0_hz"]))
                fields = {}
            elif key in ("centroid_hz", "bandwidth_hz"):
                fields[key] = float(rest)
            elif key == "f0_hz":
                fields[key] = None if rest.strip() == "none" else float(rest)
            elif key.startswith("order_"):
                orders[key[len("order_"):]] = np.array([int(v) for v in rest.split()],
                                                       dtype=np.int64)
            else:
                raise InvalidArgument(f"unknown atlas field {key!r}")
        if fields:
            entries.append(DescriptorVector(0.0, fields["centroid_hz"],
                                            fields["bandwidth_hz"], fields["f0_hz"]))
    except (IndexError, KeyError, ValueError) as exc:
        raise InvalidArgument(f"malformed atlas text: {exc}") from exc
    if len(entries) != k:
        raise InvalidArgument(f"atlas declares {k} codes but has {len(entries)} records")
    return DescriptorAtlas(entries, orders)
