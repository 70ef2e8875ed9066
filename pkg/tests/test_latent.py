import numpy as np
import pytest

from latentsynth.errors import InvalidArgument
from latentsynth.latent import (LatentSeries, interpolate, resample_series,
                                add_series, scale_series, offset_dim,
                                concat_series, reverse_series, series_arith,
                                serialize_series, parse_series)
from latentsynth.rng import SplitMix64


def series(n=5, dim=4, seed=0, sr=16000, fft=1024, hop=256):
    rng = SplitMix64(seed)
    return LatentSeries(rng.normal((n, dim)), rng.normal((n,)) * 10 - 20, sr, fft, hop)


class TestInterpolate:
    def test_endpoint_zero_returns_a(self):
        a, b = series(seed=1), series(seed=2)
        out = interpolate(a, b, np.zeros(len(a)))
        assert np.array_equal(out.z, a.z)
        assert np.array_equal(out.gain_db, a.gain_db)

    def test_endpoint_one_returns_b(self):
        a, b = series(seed=3), series(seed=4)
        out = interpolate(a, b, np.ones(len(a)))
        assert np.array_equal(out.z, b.z)
        assert np.array_equal(out.gain_db, b.gain_db)

    def test_midpoint(self):
        a, b = series(seed=5), series(seed=6)
        out = interpolate(a, b, np.full(len(a), 0.5))
        assert np.array_equal(out.z, 0.5 * a.z + 0.5 * b.z)

    def test_symmetry_property(self):
        a, b = series(seed=7), series(seed=8)
        rng = SplitMix64(9)
        for _ in range(20):
            t = rng.uniform((len(a),))
            fwd = interpolate(a, b, t)
            back = interpolate(b, a, 1.0 - t)
            assert np.array_equal(fwd.z, back.z)

    def test_segment_ratio_property(self):
        a, b = series(seed=10), series(seed=11)
        rng = SplitMix64(12)
        t = rng.uniform((len(a),))
        out = interpolate(a, b, t)
        for i in range(len(a)):
            denom = np.linalg.norm(b.z[i] - a.z[i])
            if denom == 0:
                continue
            ratio = np.linalg.norm(out.z[i] - a.z[i]) / denom
            assert abs(ratio - t[i]) <= 1e-12

    def test_metadata_copied_from_a(self):
        a = series(seed=13, sr=16000)
        b = series(seed=14, sr=16000)
        out = interpolate(a, b, np.zeros(len(a)))
        assert (out.sample_rate, out.fft_size, out.hop) == (16000, 1024, 256)

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidArgument):
            interpolate(series(n=5), series(n=6), np.zeros(5))
        with pytest.raises(InvalidArgument):
            interpolate(series(n=5), series(n=5), np.zeros(4))

    def test_curve_out_of_range_rejected(self):
        a, b = series(seed=15), series(seed=16)
        with pytest.raises(InvalidArgument):
            interpolate(a, b, np.full(len(a), 1.5))
        with pytest.raises(InvalidArgument):
            interpolate(a, b, np.full(len(a), -0.1))


class TestResample:
    def test_identity(self):
        s = series(seed=17)
        out = resample_series(s, len(s))
        assert np.array_equal(out.z, s.z)
        assert np.array_equal(out.gain_db, s.gain_db)

    def test_single_frame_takes_first(self):
        s = series(n=2, seed=18)
        out = resample_series(s, 1)
        assert np.array_equal(out.z[0], s.z[0])

    def test_constant_series_stays_constant(self):
        z = np.tile([1.0, 2.0, 3.0], (4, 1))
        s = LatentSeries(z, np.full(4, -10.0), 16000, 1024, 256)
        out = resample_series(s, 11)
        assert np.allclose(out.z, np.tile([1.0, 2.0, 3.0], (11, 1)), atol=1e-12)
        assert np.allclose(out.gain_db, -10.0, atol=1e-12)

    def test_bad_length(self):
        with pytest.raises(InvalidArgument):
            resample_series(series(), 0)


class TestArith:
    def test_scale_by_one_identity(self):
        s = series(seed=19)
        out = scale_series(s, 1.0)
        assert np.array_equal(out.z, s.z)
        assert np.array_equal(out.gain_db, s.gain_db)

    def test_offset_zero_identity(self):
        s = series(seed=20)
        out = offset_dim(s, 0, 0.0)
        assert np.array_equal(out.z, s.z)

    def test_offset_out_of_range(self):
        with pytest.raises(InvalidArgument):
            offset_dim(series(dim=4), 4, 1.0)

    def test_reverse_involution(self):
        s = series(seed=21)
        out = reverse_series(reverse_series(s))
        assert np.array_equal(out.z, s.z)
        assert np.array_equal(out.gain_db, s.gain_db)

    def test_add_averages_gains(self):
        a, b = series(seed=22), series(seed=23)
        out = add_series(a, b)
        assert np.array_equal(out.z, a.z + b.z)
        assert np.array_equal(out.gain_db, 0.5 * (a.gain_db + b.gain_db))

    def test_concat(self):
        a, b = series(n=3, seed=24), series(n=4, seed=25)
        out = concat_series(a, b)
        assert len(out) == 7
        assert np.array_equal(out.z[:3], a.z)
        assert np.array_equal(out.gain_db[3:], b.gain_db)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgument):
            add_series(series(n=3), series(n=4))
        with pytest.raises(InvalidArgument):
            add_series(series(dim=4), series(dim=5))

    def test_dispatcher(self):
        s = series(seed=26)
        out = series_arith("reverse", s)
        assert np.array_equal(out.z, s.z[::-1])
        with pytest.raises(InvalidArgument):
            series_arith("slerp", s)


class TestWireFormat:
    def test_round_trip_exact(self):
        s = series(seed=27)
        text = serialize_series(s)
        back = parse_series(text)
        assert np.array_equal(back.z, s.z)
        assert np.array_equal(back.gain_db, s.gain_db)
        assert (back.sample_rate, back.fft_size, back.hop) == \
               (s.sample_rate, s.fft_size, s.hop)
        assert serialize_series(back) == text

    def test_field_names_present(self):
        text = serialize_series(series())
        for field in ("sr ", "fft_size ", "hop ", "d_z ", "frames ", "gain_db "):
            assert field in text

    def test_rejects_garbage(self):
        with pytest.raises(InvalidArgument):
            parse_series("not a series")
        with pytest.raises(InvalidArgument):
            parse_series("latent-series 1\nsr 16000\n")

    def test_rejects_frame_count_mismatch(self):
        s = series(n=3)
        text = serialize_series(s).replace("frames 3", "frames 4")
        with pytest.raises(InvalidArgument):
            parse_series(text)


class TestValidation:
    def test_empty_series_rejected(self):
        with pytest.raises(InvalidArgument):
            LatentSeries(np.zeros((0, 4)), np.zeros(0), 16000, 1024, 256)

    def test_gain_length_mismatch(self):
        with pytest.raises(InvalidArgument):
            LatentSeries(np.zeros((3, 4)), np.zeros(2), 16000, 1024, 256)

    def test_non_finite_rejected(self):
        z = np.zeros((2, 2))
        z[0, 0] = np.nan
        with pytest.raises(InvalidArgument):
            LatentSeries(z, np.zeros(2), 16000, 1024, 256)
