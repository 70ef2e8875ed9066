import base64
import hashlib
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from latentsynth import vae, vq
from latentsynth.atlas import build_atlas
from latentsynth.corpus import SynthSpec, build_dataset, synth_tone, wav_to_bytes
from latentsynth.dsp import AudioBuffer
from latentsynth.service import create_app
from latentsynth.vae import ContinuousConfig, ContinuousModel
from latentsynth.vq import DiscreteConfig, DiscreteModel

SR = 16000
FFT = 256
HOP = 64
DX = FFT // 2 + 1


@pytest.fixture(scope="module")
def continuous_client():
    cfg = ContinuousConfig(frame_dim=DX, latent_dim=8, hidden=32)
    model = ContinuousModel.init(cfg, SR, FFT, HOP, seed=40)
    specs = [SynthSpec("harmonic", 220.0, 1.0, 0.25, 0.0, seed=41),
             SynthSpec("harmonic", 440.0, 2.0, 0.25, 0.0, seed=42)]
    ds = build_dataset(specs, (0.0, -12.0), SR, FFT, HOP)
    vae.train(model, ds.frames, ds.loudness, steps=120, batch_size=32, seed=2)
    return TestClient(create_app(model, max_seconds=10.0)), model


@pytest.fixture(scope="module")
def discrete_client():
    cfg = DiscreteConfig(frame_dim=DX, latent_dim=8, hidden=32, codebook_size=8)
    model = DiscreteModel.init(cfg, SR, FFT, HOP, seed=43)
    specs = [SynthSpec("harmonic", 220.0, 1.0, 0.25, 0.0, seed=44),
             SynthSpec("harmonic", 880.0, 0.5, 0.25, 0.0, seed=45)]
    ds = build_dataset(specs, (0.0, -6.0), SR, FFT, HOP)
    vq.train(model, ds.frames, steps=150, batch_size=32, seed=3, reinit_every=50)
    atlas = build_atlas(model)
    return TestClient(create_app(model, atlas, max_seconds=10.0)), model, atlas


def clip(f0=220.0, seconds=0.25, seed=46) -> bytes:
    audio = synth_tone(SynthSpec("harmonic", f0, 1.0, seconds, -3.0, seed), SR)
    return wav_to_bytes(audio)


class TestInfo:
    def test_continuous_info(self, continuous_client):
        client, model = continuous_client
        r = client.get("/info")
        assert r.status_code == 200
        body = r.json()
        assert body["model_kind"] == "continuous"
        assert body["latent_dim"] == 8
        assert body["sample_rate"] == SR
        assert "codebook_size" not in body

    def test_discrete_info_reports_codebook(self, discrete_client):
        client, model, _ = discrete_client
        body = client.get("/info").json()
        assert body["model_kind"] == "discrete"
        assert body["codebook_size"] == 8


class TestEncodeDecode:
    def test_round_trip_duration(self, continuous_client):
        client, model = continuous_client
        wav = clip()
        r = client.post("/encode", content=wav)
        assert r.status_code == 200
        assert r.headers["content-type"].startswith("text/plain")
        r2 = client.post("/decode", content=r.text)
        assert r2.status_code == 200
        assert r2.headers["content-type"] == "audio/wav"
        from latentsynth.corpus import wav_from_bytes
        original = wav_from_bytes(wav)
        decoded = wav_from_bytes(r2.content)
        assert abs(len(decoded.samples) - len(original.samples)) <= HOP

    def test_malformed_wav_400(self, continuous_client):
        client, _ = continuous_client
        r = client.post("/encode", content=b"not a wav")
        assert r.status_code == 400
        assert "error" in r.json()

    def test_malformed_series_400(self, continuous_client):
        client, _ = continuous_client
        r = client.post("/decode", content="garbage")
        assert r.status_code == 400
        assert "error" in r.json()

    def test_oversize_413(self, continuous_client):
        client, _ = continuous_client
        long_clip = wav_to_bytes(AudioBuffer(np.zeros(SR * 11), SR))
        r = client.post("/encode", content=long_clip)
        assert r.status_code == 413
        assert "error" in r.json()

    def test_wrong_rate_400(self, continuous_client):
        client, _ = continuous_client
        r = client.post("/encode", content=wav_to_bytes(AudioBuffer(np.zeros(8000), 8000)))
        assert r.status_code == 400


class TestInterpolate:
    def test_zero_curve_matches_reconstruct_byte_for_byte(self, continuous_client):
        client, model = continuous_client
        wav_a = clip(220.0, seed=47)
        wav_b = clip(440.0, seed=48)
        n_frames = (int(0.25 * SR) - FFT) // HOP + 1
        r = client.post("/interpolate", json={
            "a": base64.b64encode(wav_a).decode(),
            "b": base64.b64encode(wav_b).decode(),
            "curve": [0.0] * n_frames})
        assert r.status_code == 200
        ref = client.post("/reconstruct", content=wav_a)
        assert ref.status_code == 200
        assert r.content == ref.content

    def test_malformed_json_400(self, continuous_client):
        client, _ = continuous_client
        r = client.post("/interpolate", json={"a": "x"})
        assert r.status_code == 400
        assert "error" in r.json()

    def test_bad_base64_400(self, continuous_client):
        client, _ = continuous_client
        r = client.post("/interpolate", json={"a": "@@@", "b": "@@@", "curve": [0.0]})
        assert r.status_code == 400


class TestAtlasEndpoints:
    def test_atlas_404_on_continuous(self, continuous_client):
        client, _ = continuous_client
        assert client.get("/atlas").status_code == 404
        r = client.post("/target", json={"descriptor": "centroid", "values": [500.0]})
        assert r.status_code == 404

    def test_atlas_export(self, discrete_client):
        client, _, atlas = discrete_client
        r = client.get("/atlas")
        assert r.status_code == 200
        from latentsynth.atlas import export_atlas
        assert r.text == export_atlas(atlas)

    def test_atlas_unknown_descriptor(self, discrete_client):
        client, _, _ = discrete_client
        assert client.get("/atlas", params={"descriptor": "flux"}).status_code == 400

    def test_discrete_encode_decode_round_trip(self, discrete_client):
        client, _, _ = discrete_client
        wav = clip(seed=52)
        series_text = client.post("/encode", content=wav).text
        r = client.post("/decode", content=series_text)
        assert r.status_code == 200
        from latentsynth.corpus import wav_from_bytes
        decoded = wav_from_bytes(r.content)
        original = wav_from_bytes(wav)
        assert abs(len(decoded.samples) - len(original.samples)) <= HOP

    def test_target_returns_codes_and_audio(self, discrete_client):
        client, model, atlas = discrete_client
        values = atlas.values("centroid")
        ramp = np.linspace(values.min(), values.max(), 10).tolist()
        r = client.post("/target", json={"descriptor": "centroid", "values": ramp})
        assert r.status_code == 200
        body = r.json()
        assert len(body["codes"]) == 10
        from latentsynth.corpus import wav_from_bytes
        audio = wav_from_bytes(base64.b64decode(body["audio_wav_base64"]))
        assert len(audio.samples) == (10 - 1) * HOP + FFT
        # ascending targets select codes in non-decreasing sort position
        order = atlas.sort_orders["centroid"].tolist()
        positions = [order.index(c) for c in body["codes"]]
        assert positions == sorted(positions)


class TestReadOnly:
    def test_request_storm_leaves_model_untouched(self, continuous_client):
        client, model = continuous_client

        def snapshot():
            h = hashlib.sha256()
            for p in model.params:
                h.update(p.value.tobytes())
            return h.hexdigest()

        before = snapshot()
        wav = clip(seed=49)
        errors = []

        def hammer():
            try:
                for _ in range(5):
                    assert client.post("/reconstruct", content=wav).status_code == 200
            except Exception as exc:
                errors.append(exc)

        threads = [threading.Thread(target=hammer) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert snapshot() == before
