"""HTTP inference service.

One immutable model (plus its atlas, for the discrete kind) is loaded at
startup and shared read-only across requests; all per-request DSP state is
local. Training never runs in this process.

Endpoints:
    GET  /info               model kind, geometry, codebook size
    POST /encode             WAV body        -> latent series text
    POST /decode             latent text     -> WAV
    POST /reconstruct        WAV body        -> WAV
    POST /interpolate        JSON            -> WAV
    GET  /atlas?descriptor=  atlas export text (discrete only)
    POST /target             JSON            -> JSON codes + WAV (base64)
"""
from __future__ import annotations

import base64
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import atlas as atlas_mod
from . import runtime
from .atlas import DescriptorAtlas
from .checkpoint import checkpoint_load
from .corpus import wav_from_bytes, wav_to_bytes
from .errors import (InvalidArgument, InvalidState, UnsupportedWavFormat,
                     WavParseError)
from .latent import parse_series, serialize_series
from .vq import DiscreteModel

MAX_AUDIO_SECONDS = 30.0
MAX_BODY_BYTES = 64 * 1024 * 1024


class InfoResponse(BaseModel):
    model_kind: str
    latent_dim: int
    sample_rate: int
    fft_size: int
    hop: int
    codebook_size: Optional[int] = None


class InterpolateRequest(BaseModel):
    a: str = Field(description="base64-encoded WAV clip A")
    b: str = Field(description="base64-encoded WAV clip B")
    curve: list[float] = Field(min_length=1)


class TargetRequest(BaseModel):
    descriptor: str
    values: list[float] = Field(min_length=1)
    gain_db: Optional[list[float]] = None


class TargetResponse(BaseModel):
    codes: list[int]
    audio_wav_base64: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message, "code": code})


def _wav_response(audio) -> Response:
    return Response(content=wav_to_bytes(audio), media_type="audio/wav")


def create_app(model, atlas: Optional[DescriptorAtlas] = None,
               max_seconds: float = MAX_AUDIO_SECONDS) -> FastAPI:
    app = FastAPI(title="latentsynth service")
    # the explorer UI is served from its own origin; the service is a
    # single-user desk tool, so a permissive policy is fine
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "malformed-body", str(exc.errors()[:3]))

    @app.exception_handler(InvalidArgument)
    async def on_invalid_argument(request: Request, exc: InvalidArgument):
        return _error(400, "invalid-argument", str(exc))

    @app.exception_handler(WavParseError)
    async def on_wav_parse(request: Request, exc: WavParseError):
        return _error(400, "wav-parse-error", str(exc))

    @app.exception_handler(UnsupportedWavFormat)
    async def on_wav_format(request: Request, exc: UnsupportedWavFormat):
        return _error(400, "unsupported-wav-format", str(exc))

    @app.exception_handler(InvalidState)
    async def on_invalid_state(request: Request, exc: InvalidState):
        return _error(409, "invalid-state", str(exc))

    def read_audio(blob: bytes):
        if len(blob) > MAX_BODY_BYTES:
            raise _Oversize("request body too large")
        audio = wav_from_bytes(blob, expect_sample_rate=model.sample_rate)
        if audio.duration_s > max_seconds:
            raise _Oversize(f"audio of {audio.duration_s:.1f} s exceeds "
                            f"the {max_seconds:.0f} s limit")
        return audio

    class _Oversize(Exception):
        pass

    @app.exception_handler(_Oversize)
    async def on_oversize(request: Request, exc: _Oversize):
        return _error(413, "payload-too-large", str(exc))

    @app.get("/info", response_model=InfoResponse, response_model_exclude_none=True)
    def info():
        payload = InfoResponse(
            model_kind=model.KIND, latent_dim=model.cfg.latent_dim,
            sample_rate=model.sample_rate, fft_size=model.fft_size, hop=model.hop)
        if isinstance(model, DiscreteModel):
            payload.codebook_size = model.cfg.codebook_size
        return payload

    @app.post("/encode")
    async def encode(request: Request):
        audio = read_audio(await request.body())
        series = runtime.encode_audio(model, audio)
        return Response(content=serialize_series(series),
                        media_type="text/plain; charset=utf-8")

    @app.post("/decode")
    async def decode(request: Request):
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            raise _Oversize("request body too large")
        series = parse_series(body.decode("utf-8", errors="replace"))
        if series.hop > 0 and len(series) * series.hop > max_seconds * model.sample_rate:
            raise _Oversize("latent series decodes past the duration limit")
        return _wav_response(runtime.decode_series(model, series))

    @app.post("/reconstruct")
    async def reconstruct(request: Request):
        audio = read_audio(await request.body())
        return _wav_response(runtime.reconstruct_audio(model, audio))

    @app.post("/interpolate")
    async def interpolate(body: InterpolateRequest):
        try:
            blob_a = base64.b64decode(body.a, validate=True)
            blob_b = base64.b64decode(body.b, validate=True)
        except Exception as exc:
            raise InvalidArgument(f"clips must be base64 WAV: {exc}") from exc
        a = read_audio(blob_a)
        b = read_audio(blob_b)
        curve = np.asarray(body.curve, dtype=np.float64)
        if len(curve) * model.hop > max_seconds * model.sample_rate:
            raise _Oversize("curve decodes past the duration limit")
        return _wav_response(runtime.interpolate_audio(model, a, b, curve))

    def require_atlas() -> DescriptorAtlas:
        if not isinstance(model, DiscreteModel) or atlas is None:
            # atlas endpoints simply do not exist for a continuous service
            raise _NoAtlas()
        return atlas

    class _NoAtlas(Exception):
        pass

    @app.exception_handler(_NoAtlas)
    async def on_no_atlas(request: Request, exc: _NoAtlas):
        return _error(404, "no-atlas", "this service has no descriptor atlas")

    @app.get("/atlas")
    def atlas_export(descriptor: Optional[str] = None):
        table = require_atlas()
        if descriptor is not None and descriptor not in table.sort_orders:
            raise InvalidArgument(
                f"unknown descriptor {descriptor!r}; "
                f"choose from {sorted(table.sort_orders)}")
        return Response(content=atlas_mod.export_atlas(table),
                        media_type="text/plain; charset=utf-8")

    @app.post("/target", response_model=TargetResponse)
    def target(body: TargetRequest):
        table = require_atlas()
        if len(body.values) * model.hop > max_seconds * model.sample_rate:
            raise _Oversize("target decodes past the duration limit")
        codes, audio = atlas_mod.synthesize_target(
            table, model, body.descriptor, body.values, gain_db=body.gain_db)
        return TargetResponse(
            codes=[int(c) for c in codes],
            audio_wav_base64=base64.b64encode(wav_to_bytes(audio)).decode("ascii"))

    return app


def create_app_from_paths(checkpoint_path: str, atlas_path: Optional[str] = None,
                          max_seconds: float = MAX_AUDIO_SECONDS) -> FastAPI:
    model = checkpoint_load(checkpoint_path)
    table = None
    if isinstance(model, DiscreteModel):
        if atlas_path is None:
            raise InvalidArgument("a discrete service needs --atlas")
        with open(atlas_path, "r", encoding="utf-8") as fh:
            table = atlas_mod.import_atlas(fh.read())
        if table.size != model.cfg.codebook_size:
            raise InvalidArgument(
                f"atlas has {table.size} codes but the model has "
                f"{model.cfg.codebook_size}")
    return create_app(model, table, max_seconds)
