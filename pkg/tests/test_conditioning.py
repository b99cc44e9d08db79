import numpy as np
import pytest

from prosody_units.conditioning import (
    ConditioningMatrix,
    assemble_conditioning,
    interpolate_f0,
    read_conditioning,
    toy_synthesize,
    write_conditioning,
    _harmonic_amplitudes,
)
from prosody_units.pitch import (
    PitchQuantizer,
    PitchTrack,
    TrackerConfig,
    bins_to_f0,
    f0_to_bins,
    speaker_stats,
    track_f0,
)
from prosody_units.predictors import EMO_DIM
from prosody_units.units import UnitSequence


def make_track(f0_values, frame_period=0.020):
    f0 = np.asarray(f0_values, dtype=np.float64)
    return PitchTrack(f0_hz=f0, voiced=f0 > 0, frame_period=frame_period)


class TestInterpolateF0:
    def test_identity_at_source_rate(self):
        track = make_track([100.0, 150.0, 200.0, 0.0, 120.0])
        out = interpolate_f0(track, 50.0)  # 1 / 0.020
        assert out.shape == (5,)
        assert np.allclose(out, track.f0_hz)

    def test_linear_ramp_upsampled_stays_on_line(self):
        # 10 frames ramping 100 -> 200; doubling the rate must keep every
        # sample on the closed-form line through the endpoints.
        ramp = np.linspace(100.0, 200.0, 10)
        out = interpolate_f0(make_track(ramp), 100.0)
        assert out.size == 20
        x = np.arange(20) * 9 / 19
        expected = 100.0 + x * (100.0 / 9.0)
        assert np.abs(out - expected).max() < 1e-9

    @pytest.mark.parametrize("rate", [25.0, 50.0, 77.5, 200.0])
    def test_endpoints_preserved(self, rate):
        track = make_track([111.0, 140.0, 0.0, 190.0, 222.0])
        out = interpolate_f0(track, rate)
        assert out[0] == pytest.approx(111.0)
        assert out[-1] == pytest.approx(222.0)

    def test_unvoiced_gaps_stay_zero(self):
        track = make_track([100.0, 0.0, 0.0, 200.0])
        out = interpolate_f0(track, 100.0)
        # No output sample between the voiced endpoints of the gap may ramp.
        assert np.all(out[2:6] == 0.0)

    def test_empty_track_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            interpolate_f0(make_track([]), 50.0)


class TestAssemble:
    def test_shape_arithmetic(self):
        units = UnitSequence(units=np.array([0, 1, 2, 1]))
        emb = np.arange(8.0).reshape(4, 2)
        cond = assemble_conditioning(
            units, emb, np.array([100.0, 0.0, 120.0, 130.0]),
            np.zeros(EMO_DIM), np.array([1.0, 2.0, 3.0]),
        )
        assert cond.data.shape == (4, 2 + 1 + 96 + 3)

    def test_emotion_block_replicated(self):
        rng = np.random.default_rng(0)
        emo = rng.standard_normal(EMO_DIM)
        cond = assemble_conditioning(
            UnitSequence(units=np.array([0, 0, 1])),
            rng.standard_normal((2, 4)),
            np.array([100.0, 110.0, 0.0]),
            emo,
            rng.standard_normal(5),
        )
        for row in cond.emotion_block:
            assert np.allclose(row, emo.astype(np.float32))

    def test_unaligned_streams_rejected(self):
        with pytest.raises(ValueError, match="unaligned streams"):
            assemble_conditioning(
                UnitSequence(units=np.arange(10)),
                np.zeros((10, 2)),
                np.zeros(9),
                np.zeros(EMO_DIM),
                np.zeros(3),
            )

    def test_negative_f0_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            assemble_conditioning(
                UnitSequence(units=np.array([0])),
                np.zeros((1, 2)),
                np.array([-5.0]),
                np.zeros(EMO_DIM),
                np.zeros(3),
            )


def constant_conditioning(f0_value, t_frames=50, k=4, emb_dim=4, seed=0):
    rng = np.random.default_rng(seed)
    units = UnitSequence(units=rng.integers(0, k, size=t_frames))
    emb = rng.standard_normal((k, emb_dim))
    f0 = np.full(t_frames, float(f0_value))
    return assemble_conditioning(units, emb, f0, np.zeros(EMO_DIM), np.zeros(3))


class TestToySynthesize:
    def test_output_length(self):
        cond = constant_conditioning(220.0, t_frames=37)
        wave = toy_synthesize(cond, 16000)
        assert len(wave) == 37 * 320

    def test_dft_peak_at_f0(self):
        cond = constant_conditioning(220.0, t_frames=50)
        wave = toy_synthesize(cond, 16000)
        # Skip edge frames, window, and locate the strongest DFT bin.
        x = wave.samples[640:-640]
        spec = np.abs(np.fft.rfft(x * np.hanning(x.size)))
        freqs = np.fft.rfftfreq(x.size, 1 / 16000)
        peak = freqs[np.argmax(spec)]
        assert abs(peak - 220.0) <= 5.0

    def test_unvoiced_is_quiet_and_flat(self):
        cond = constant_conditioning(0.0, t_frames=50)
        wave = toy_synthesize(cond, 16000)
        rms_dbfs = 20 * np.log10(np.sqrt(np.mean(wave.samples**2)) + 1e-12)
        assert rms_dbfs < -30.0
        # Averaged periodogram: no bin may poke 6 dB above the mean floor.
        segs = wave.samples[: 16 * 1000].reshape(16, 1000)
        win = np.hanning(1000)
        psd = np.mean(np.abs(np.fft.rfft(segs * win, axis=1)) ** 2, axis=0)
        psd_db = 10 * np.log10(psd[1:] + 1e-20)
        assert psd_db.max() <= psd_db.mean() + 6.0

    def test_nyquist_rejected(self):
        cond = constant_conditioning(9000.0, t_frames=5)
        with pytest.raises(ValueError, match="Nyquist"):
            toy_synthesize(cond, 16000)

    def test_phase_continuity_no_clicks(self):
        # Derived bound: per-harmonic amplitude cap 2.78/h^2 (before the unit
        # L2 norm the raw weights lie in [0.5, 1.5]/h^2 and the norm is at
        # least 0.54), windows add pi/hop slope, fundamental adds 2 pi f0/sr.
        f0 = 220.0
        cond = constant_conditioning(f0, t_frames=50)
        wave = toy_synthesize(cond, 16000)
        h = np.arange(1, 9)
        amp_cap = 2.78 / h**2
        slope = 0.6 * (
            np.sum(amp_cap * h) * 2 * np.pi * f0 / 16000
            + 2 * np.sum(amp_cap) * np.pi / 320
        )
        diffs = np.abs(np.diff(wave.samples))
        assert diffs.max() <= slope + 0.01

    def test_deterministic(self):
        cond = constant_conditioning(180.0, t_frames=20)
        a = toy_synthesize(cond, 16000, noise_seed=7)
        b = toy_synthesize(cond, 16000, noise_seed=7)
        assert np.array_equal(a.samples, b.samples)

    def test_fundamental_dominates_harmonics(self):
        amps = _harmonic_amplitudes(np.random.default_rng(3).standard_normal((40, 8)))
        assert np.all(amps[:, 0] > amps[:, 1:].max(axis=1))


class TestConditioningFile:
    def test_round_trip_bit_exact(self, tmp_path):
        cond = constant_conditioning(150.0, t_frames=9)
        path = tmp_path / "c.cnd"
        write_conditioning(path, cond)
        back = read_conditioning(path)
        assert np.array_equal(back.data, cond.data)
        assert back.emb_dim == cond.emb_dim and back.spk_dim == cond.spk_dim
        write_conditioning(tmp_path / "c2.cnd", back)
        assert (tmp_path / "c2.cnd").read_bytes() == path.read_bytes()

    def test_header_format(self, tmp_path):
        cond = constant_conditioning(150.0, t_frames=9)
        write_conditioning(tmp_path / "c.cnd", cond)
        header = (tmp_path / "c.cnd").read_bytes().split(b"\n", 1)[0]
        assert header.startswith(b"CND1 9 4 3 ")

    def test_truncated_rejected(self, tmp_path):
        cond = constant_conditioning(150.0, t_frames=9)
        path = tmp_path / "c.cnd"
        write_conditioning(path, cond)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(ValueError, match="truncated"):
            read_conditioning(path)


class TestProsodyTransparency:
    def test_round_trip_contour_recovery(self):
        # Ground-truth durations and quantize/decode F0 through assembly and
        # synthesis; the tracker must recover the decoded contour to within
        # one quantizer bin width in Hz.
        rng = np.random.default_rng(11)
        t_frames = 100
        frame_idx = np.arange(t_frames)
        f0 = 180.0 + 30.0 * np.sin(2 * np.pi * frame_idx / 40.0)
        voiced = np.zeros(t_frames, dtype=bool)
        voiced[5:45] = True
        voiced[55:95] = True
        f0 = np.where(voiced, f0, 0.0)
        track = make_track(f0)
        stats = speaker_stats([track], "spk")
        quantizer = PitchQuantizer(d=32, lo=-3.0, hi=3.0)

        decoded = np.zeros(t_frames)
        for i in range(t_frames):
            if voiced[i]:
                norm = (f0[i] - stats.mean_hz) / stats.std_hz
                decoded[i] = bins_to_f0(f0_to_bins(norm, quantizer), quantizer, stats)

        units = UnitSequence(units=rng.integers(0, 8, size=t_frames))
        cond = assemble_conditioning(
            units, rng.standard_normal((8, 4)), decoded,
            np.zeros(EMO_DIM), rng.standard_normal(3),
        )
        wave = toy_synthesize(cond, 16000)
        tracked = track_f0(wave, TrackerConfig(f_min=60.0, f_max=400.0))

        both = (decoded > 0) & tracked.voiced
        assert both.sum() >= 60
        errors = np.abs(tracked.f0_hz[both] - decoded[both])
        bin_width_hz = quantizer.bin_width * stats.std_hz
        assert np.median(errors) <= bin_width_hz
