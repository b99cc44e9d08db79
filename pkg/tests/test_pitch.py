import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_sawtooth, make_silence, make_sine
from prosody_units.audio import Waveform
from prosody_units.pitch import (
    PitchQuantizer,
    PitchTrack,
    SpeakerPitchStats,
    TrackerConfig,
    bins_to_f0,
    denormalize_f0,
    f0_to_bins,
    normalize_f0,
    read_f0_csv,
    read_speaker_stats_csv,
    speaker_stats,
    track_f0,
    write_f0_csv,
    write_speaker_stats_csv,
)

CFG = TrackerConfig(f_min=60.0, f_max=400.0)


class TestTracker:
    def test_sine_220(self, sine_220):
        track = track_f0(sine_220, CFG)
        assert len(track) == 50
        voiced_ratio = track.voiced.mean()
        assert voiced_ratio >= 0.90
        median = np.median(track.f0_hz[track.voiced])
        assert abs(median - 220.0) <= 4.0

    def test_silence_all_unvoiced(self):
        track = track_f0(make_silence(), CFG)
        assert not track.voiced.any()
        assert np.all(track.f0_hz == 0.0)

    def test_sawtooth_110(self):
        track = track_f0(make_sawtooth(110.0), CFG)
        median = np.median(track.f0_hz[track.voiced])
        assert abs(median - 110.0) / 110.0 <= 0.02

    @pytest.mark.parametrize("freq", [110.0, 165.0, 220.0, 330.0])
    @pytest.mark.parametrize("shape", ["sine", "sawtooth"])
    def test_octave_sanity(self, freq, shape):
        wave = make_sine(freq) if shape == "sine" else make_sawtooth(freq)
        track = track_f0(wave, CFG)
        voiced = track.f0_hz[track.voiced]
        assert voiced.size > 0
        octave_up = np.abs(voiced - 2 * freq) / (2 * freq) < 0.05
        octave_down = np.abs(voiced - freq / 2) / (freq / 2) < 0.05
        assert (octave_up | octave_down).mean() <= 0.10

    def test_too_short(self):
        with pytest.raises(ValueError, match="too short"):
            track_f0(Waveform(samples=np.zeros(100), sample_rate=16000), CFG)

    def test_invalid_range(self, sine_220):
        with pytest.raises(ValueError, match="invalid pitch range"):
            track_f0(sine_220, TrackerConfig(f_min=500.0, f_max=400.0))

    def test_low_sample_rate_rejected(self):
        with pytest.raises(ValueError, match="8000"):
            track_f0(Waveform(samples=np.zeros(4000), sample_rate=4000), CFG)


class TestSpeakerStats:
    def make_track(self, f0_values, voiced=None):
        f0 = np.asarray(f0_values, dtype=np.float64)
        if voiced is None:
            voiced = f0 > 0
        return PitchTrack(f0_hz=f0, voiced=np.asarray(voiced, dtype=bool))

    def test_constant_pitch_hits_std_floor(self):
        stats = speaker_stats([self.make_track([200.0] * 10)], "spk")
        assert stats.mean_hz == pytest.approx(200.0)
        assert stats.std_hz == pytest.approx(1e-5)

    def test_two_point_population_std(self):
        stats = speaker_stats([self.make_track([100.0, 300.0])], "spk")
        assert stats.mean_hz == pytest.approx(200.0)
        assert stats.std_hz == pytest.approx(100.0)

    def test_all_unvoiced_errors(self):
        with pytest.raises(ValueError, match="no voiced speech"):
            speaker_stats([self.make_track([0.0, 0.0])], "spk")

    def test_pools_across_tracks(self):
        tracks = [self.make_track([100.0]), self.make_track([300.0])]
        stats = speaker_stats(tracks, "spk")
        assert stats.mean_hz == pytest.approx(200.0)
        assert stats.n_voiced == 2


class TestNormalization:
    STATS = SpeakerPitchStats(speaker_id="s", mean_hz=180.0, std_hz=30.0, n_voiced=100)

    def make_track(self, f0_values):
        f0 = np.asarray(f0_values, dtype=np.float64)
        return PitchTrack(f0_hz=f0, voiced=f0 > 0)

    def test_mean_maps_to_zero(self):
        norm = normalize_f0(self.make_track([180.0]), self.STATS)
        assert norm[0] == pytest.approx(0.0)

    def test_mean_plus_std_maps_to_one(self):
        norm = normalize_f0(self.make_track([210.0]), self.STATS)
        assert norm[0] == pytest.approx(1.0)

    def test_unvoiced_is_nan(self):
        norm = normalize_f0(self.make_track([180.0, 0.0]), self.STATS)
        assert np.isnan(norm[1])

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        f0 = rng.uniform(100.0, 300.0, size=200)
        track = self.make_track(f0)
        norm = normalize_f0(track, self.STATS)
        back = denormalize_f0(norm, self.STATS)
        assert np.abs(back - f0).max() < 1e-9


class TestQuantizer:
    STATS = SpeakerPitchStats(speaker_id="s", mean_hz=180.0, std_hz=30.0, n_voiced=100)

    def test_center_of_bin(self):
        q = PitchQuantizer(d=8, lo=-3.0, hi=3.0)
        onehot = f0_to_bins(q.bin_centers[3], q)
        assert onehot.tolist() == [0, 0, 0, 1, 0, 0, 0, 0]

    def test_clamps_below_range(self):
        q = PitchQuantizer(d=8, lo=-3.0, hi=3.0)
        assert np.argmax(f0_to_bins(-100.0, q)) == 0

    def test_clamps_above_range(self):
        q = PitchQuantizer(d=8, lo=-3.0, hi=3.0)
        assert np.argmax(f0_to_bins(100.0, q)) == 7

    def test_boundary_goes_right(self):
        q = PitchQuantizer(d=8, lo=-3.0, hi=3.0)
        boundary = q.lo + 4 * q.bin_width  # between bins 3 and 4
        assert np.argmax(f0_to_bins(boundary, q)) == 4

    def test_one_hot_decodes_to_center(self):
        q = PitchQuantizer(d=32)
        onehot = np.zeros(32)
        onehot[10] = 1.0
        got = bins_to_f0(onehot, q, self.STATS)
        expected = q.bin_centers[10] * 30.0 + 180.0
        assert got == pytest.approx(expected, abs=1e-12)

    def test_equal_adjacent_activations_hit_midpoint(self):
        # Weighted average of two equal activations on adjacent bins is the
        # midpoint of the two centers: (c_j + c_{j+1}) / 2.
        q = PitchQuantizer(d=32)
        act = np.zeros(32)
        act[5] = act[6] = 0.5
        expected_norm = 0.5 * (q.bin_centers[5] + q.bin_centers[6])
        got = bins_to_f0(act, q, self.STATS)
        assert got == pytest.approx(expected_norm * 30.0 + 180.0, abs=1e-9)

    def test_below_cutoff_is_unvoiced(self):
        q = PitchQuantizer(d=32)
        assert bins_to_f0(np.full(32, 0.05), q, self.STATS) == 0.0

    def test_activation_out_of_range_rejected(self):
        q = PitchQuantizer(d=32)
        act = np.zeros(32)
        act[0] = 1.5
        with pytest.raises(ValueError, match="0, 1"):
            bins_to_f0(act, q, self.STATS)

    @given(st.floats(min_value=-3.0, max_value=2.999))
    @settings(max_examples=300, deadline=None)
    def test_round_trip_within_half_bin(self, value):
        q = PitchQuantizer(d=32)
        decoded = bins_to_f0(f0_to_bins(value, q), q, self.STATS)
        reference = denormalize_f0(np.array([value]), self.STATS)[0]
        assert abs(decoded - reference) <= 0.5 * q.bin_width * self.STATS.std_hz + 1e-9

    @given(
        st.integers(min_value=0, max_value=31),
        st.integers(min_value=0, max_value=31),
        st.floats(min_value=0.3, max_value=1.0),
        st.floats(min_value=0.3, max_value=1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_scale_invariance(self, i, j, a, b):
        # Uniform scaling of the activations must not change the decode as
        # long as everything stays above the cutoff.
        q = PitchQuantizer(d=32)
        act = np.zeros(32)
        act[i] = a
        act[j] = b
        scaled = act * 0.5
        lhs = bins_to_f0(act, q, self.STATS)
        rhs = bins_to_f0(scaled, q, self.STATS)
        assert lhs == pytest.approx(rhs, abs=1e-9)


class TestPitchFiles:
    def test_f0_csv_round_trip(self, tmp_path):
        f0 = np.array([0.0, 220.0, 221.5, 0.0])
        track = PitchTrack(f0_hz=f0, voiced=f0 > 0, frame_period=0.020)
        path = tmp_path / "t.f0.csv"
        write_f0_csv(path, track)
        back = read_f0_csv(path)
        assert np.allclose(back.f0_hz, track.f0_hz, atol=1e-6)
        assert np.array_equal(back.voiced, track.voiced)
        assert back.frame_period == pytest.approx(0.020)
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "time_s,f0_hz,voiced"

    def test_stats_csv_round_trip(self, tmp_path):
        stats = SpeakerPitchStats("spk1", 182.5, 31.25, 840)
        path = tmp_path / "stats.csv"
        write_speaker_stats_csv(path, [stats])
        back = read_speaker_stats_csv(path)
        assert back["spk1"] == stats
