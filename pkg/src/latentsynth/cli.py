"""Command-line client. Thin by design: parse arguments, assemble a RunConfig,
call the package, write artifacts. Exit codes: 0 success, 1 usage, 2 runtime."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import atlas as atlas_mod
from . import corpus, runtime, vae, vq
from .checkpoint import checkpoint_load, checkpoint_save, model_from_config
from .config import RunConfig, apply_overrides, load_config
from .errors import (CheckpointError, InvalidArgument, InvalidState,
                     TrainingDiverged, UnsupportedWavFormat, WavParseError)
from .latent import parse_series, serialize_series
from .vq import DiscreteModel


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_flags(parser, suppress: bool = False) -> None:
    # SUPPRESS on the subcommand level keeps values given before the
    # subcommand intact; append actions extend rather than clobber
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", help="key = value config file", **kw)
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)",
                        **({"default": argparse.SUPPRESS} if suppress else {"default": []}))


def build_parser() -> _Parser:
    p = _Parser(prog="latentsynth", description=__doc__)
    _add_config_flags(p)
    sub = p.add_subparsers(dest="command")

    def add_parser(name, **kw):
        c = sub.add_parser(name, **kw)
        _add_config_flags(c, suppress=True)
        return c

    gen = add_parser("gen-data", help="render the synthetic corpus to a dataset file")
    gen.add_argument("--out", help="dataset path (default: paths.dataset)")

    tr = add_parser("train", help="train a model on a dataset")
    tr.add_argument("--model", choices=["continuous", "discrete"])
    tr.add_argument("--data", help="dataset path (default: paths.dataset)")
    tr.add_argument("--out", help="checkpoint path (default: paths.checkpoint)")
    tr.add_argument("--steps", type=int)
    tr.add_argument("--seed", type=int)

    for name in ("reconstruct", "encode", "decode"):
        c = add_parser(name)
        c.add_argument("--checkpoint", required=True)
        c.add_argument("--in", dest="input", required=True)
        c.add_argument("--out", required=True)

    it = add_parser("interpolate", help="blend two clips along a t curve")
    it.add_argument("--checkpoint", required=True)
    it.add_argument("--a", required=True)
    it.add_argument("--b", required=True)
    it.add_argument("--curve", required=True,
                    help="'start:end' ramp or comma-separated t values")
    it.add_argument("--out", required=True)

    ab = add_parser("atlas-build", help="measure every code of a discrete model")
    ab.add_argument("--checkpoint", required=True)
    ab.add_argument("--out", help="atlas path (default: paths.atlas)")

    at = add_parser("atlas-traverse", help="sweep the codebook in descriptor order")
    at.add_argument("--checkpoint", required=True)
    at.add_argument("--atlas", required=True)
    at.add_argument("--descriptor", default="centroid")
    at.add_argument("--frames-per-code", type=int, default=8)
    at.add_argument("--out", required=True)

    tg = add_parser("atlas-target", help="synthesize a descriptor target curve")
    tg.add_argument("--checkpoint", required=True)
    tg.add_argument("--atlas", required=True)
    tg.add_argument("--descriptor", default="centroid")
    tg.add_argument("--values", help="comma-separated target values")
    tg.add_argument("--ramp", help="lo:hi:steps linear target ramp")
    tg.add_argument("--out", required=True)
    tg.add_argument("--codes-out", help="write chosen code indices here")

    sv = add_parser("serve", help="start the HTTP inference service")
    sv.add_argument("--checkpoint", required=True)
    sv.add_argument("--atlas")
    sv.add_argument("--host")
    sv.add_argument("--port", type=int)
    return p


def _assemble_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    overrides = {}
    for pair in args.set:
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        overrides[key.strip()] = value.strip()
    return apply_overrides(cfg, overrides).validate()


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _cmd_gen_data(args, cfg: RunConfig) -> int:
    specs = corpus.default_specs(cfg.data_f0_grid, cfg.data_alpha_grid,
                                 cfg.data_duration_s)
    _log(f"rendering {len(specs)} tones x {len(cfg.data_gain_grid)} gains")
    ds = corpus.build_dataset(specs, cfg.data_gain_grid, cfg.dsp_sample_rate,
                              cfg.dsp_fft_size, cfg.dsp_hop)
    out = args.out or cfg.paths_dataset
    corpus.save_dataset(ds, out)
    _log(f"wrote {len(ds)} frames to {out}")
    return 0


def _cmd_train(args, cfg: RunConfig) -> int:
    if args.model:
        cfg = apply_overrides(cfg, {"model.kind": args.model})
    if args.steps is not None:
        cfg = apply_overrides(cfg, {"train.steps": str(args.steps)})
    if args.seed is not None:
        cfg = apply_overrides(cfg, {"train.seed": str(args.seed)})
    ds = corpus.load_dataset(args.data or cfg.paths_dataset)
    if (ds.sample_rate, ds.fft_size, ds.hop) != \
            (cfg.dsp_sample_rate, cfg.dsp_fft_size, cfg.dsp_hop):
        raise InvalidArgument("dataset geometry disagrees with the configured dsp")
    model = model_from_config(cfg)
    _log(f"training {cfg.model_kind} model: {cfg.train_steps} steps, "
         f"batch {cfg.train_batch}, {len(ds)} frames")
    log_every = max(1, cfg.train_steps // 10)
    if isinstance(model, DiscreteModel):
        vq.train(model, ds.frames, cfg.train_steps, cfg.train_batch, cfg.train_lr,
                 cfg.train_seed, log_every=log_every)
    else:
        vae.train(model, ds.frames, ds.loudness, cfg.train_steps, cfg.train_batch,
                  cfg.train_lr, cfg.train_seed, log_every=log_every)
    out = args.out or cfg.paths_checkpoint
    checkpoint_save(model, out)
    _log(f"wrote checkpoint to {out}")
    return 0


def _cmd_reconstruct(args, cfg: RunConfig) -> int:
    model = checkpoint_load(args.checkpoint)
    audio = corpus.wav_read(args.input, expect_sample_rate=model.sample_rate)
    corpus.wav_write(args.out, runtime.reconstruct_audio(model, audio))
    _log(f"wrote {args.out}")
    return 0


def _cmd_encode(args, cfg: RunConfig) -> int:
    model = checkpoint_load(args.checkpoint)
    audio = corpus.wav_read(args.input, expect_sample_rate=model.sample_rate)
    series = runtime.encode_audio(model, audio)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(serialize_series(series))
    _log(f"wrote {len(series)} latent frames to {args.out}")
    return 0


def _cmd_decode(args, cfg: RunConfig) -> int:
    model = checkpoint_load(args.checkpoint)
    with open(args.input, "r", encoding="utf-8") as fh:
        series = parse_series(fh.read())
    corpus.wav_write(args.out, runtime.decode_series(model, series))
    _log(f"wrote {args.out}")
    return 0


def _cmd_interpolate(args, cfg: RunConfig) -> int:
    model = checkpoint_load(args.checkpoint)
    a = corpus.wav_read(args.a, expect_sample_rate=model.sample_rate)
    b = corpus.wav_read(args.b, expect_sample_rate=model.sample_rate)
    frames_a = (len(a.samples) - model.fft_size) // model.hop + 1
    frames_b = (len(b.samples) - model.fft_size) // model.hop + 1
    curve = runtime.parse_curve_spec(args.curve, max(frames_a, frames_b))
    corpus.wav_write(args.out, runtime.interpolate_audio(model, a, b, curve))
    _log(f"wrote {args.out} ({len(curve)} frames)")
    return 0


def _require_discrete(model) -> DiscreteModel:
    if not isinstance(model, DiscreteModel):
        raise InvalidArgument("this command needs a discrete-model checkpoint")
    return model


def _cmd_atlas_build(args, cfg: RunConfig) -> int:
    model = _require_discrete(checkpoint_load(args.checkpoint))
    _log(f"measuring {model.cfg.codebook_size} codes")
    table = atlas_mod.build_atlas(model)
    out = args.out or cfg.paths_atlas
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(atlas_mod.export_atlas(table))
    _log(f"wrote atlas to {out}")
    return 0


def _load_atlas(path: str) -> atlas_mod.DescriptorAtlas:
    with open(path, "r", encoding="utf-8") as fh:
        return atlas_mod.import_atlas(fh.read())


def _cmd_atlas_traverse(args, cfg: RunConfig) -> int:
    model = _require_discrete(checkpoint_load(args.checkpoint))
    table = _load_atlas(args.atlas)
    audio = atlas_mod.traverse(table, model, args.descriptor, args.frames_per_code)
    corpus.wav_write(args.out, audio)
    _log(f"wrote {args.out} ({audio.duration_s:.2f} s)")
    return 0


def _cmd_atlas_target(args, cfg: RunConfig) -> int:
    model = _require_discrete(checkpoint_load(args.checkpoint))
    table = _load_atlas(args.atlas)
    if bool(args.values) == bool(args.ramp):
        raise UsageError("atlas-target needs exactly one of --values / --ramp")
    if args.values:
        targets = np.array([float(v) for v in args.values.split(",") if v.strip()])
    else:
        lo_s, hi_s, n_s = args.ramp.split(":")
        targets = np.linspace(float(lo_s), float(hi_s), int(n_s))
    codes, audio = atlas_mod.synthesize_target(table, model, args.descriptor, targets)
    corpus.wav_write(args.out, audio)
    if args.codes_out:
        with open(args.codes_out, "w", encoding="utf-8") as fh:
            fh.write(" ".join(str(int(c)) for c in codes) + "\n")
    _log(f"wrote {args.out}; codes: {' '.join(str(int(c)) for c in codes[:16])}"
         + (" ..." if len(codes) > 16 else ""))
    return 0


def _cmd_serve(args, cfg: RunConfig) -> int:
    import uvicorn

    from .service import create_app_from_paths
    app = create_app_from_paths(args.checkpoint, args.atlas)
    host = args.host or cfg.serve_host
    port = args.port if args.port is not None else cfg.serve_port
    _log(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "reconstruct": _cmd_reconstruct,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "interpolate": _cmd_interpolate,
    "atlas-build": _cmd_atlas_build,
    "atlas-traverse": _cmd_atlas_traverse,
    "atlas-target": _cmd_atlas_target,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        cfg = _assemble_config(args)
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        parser.print_help(sys.stderr)
        return 1
    except (InvalidArgument, InvalidState, TrainingDiverged, CheckpointError,
            WavParseError, UnsupportedWavFormat, OSError) as exc:
        _log(f"error: {exc}")
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
