import json

import numpy as np
import pytest
from scipy import signal as sps

from karma.cepstrum import ResonanceState, arma_to_cepstrum, state_to_cepstrum
from karma.synthesis import (
    FramePlan,
    TrajectorySpec,
    load_spec,
    nasal_utterance_spec,
    random_trajectory,
    resonances_from_arma,
    resonator_cascade,
    rosenberg_source,
    save_spec,
    spec_from_json,
    spec_to_json,
    synthesize,
)


class TestResonatorCascade:
    def test_quarter_rate_section(self):
        fs = 8000.0
        b = 120.0
        x = ResonanceState([fs / 4], [b], [], [], fs)
        m = resonator_cascade(x)
        assert m.ar[0] == pytest.approx(0.0, abs=1e-12)
        assert m.ar[1] == pytest.approx(-np.exp(-2 * np.pi * b / fs))

    def test_pole_radius_value(self):
        x = ResonanceState([257.0], [32.0], [], [], 10000.0)
        m = resonator_cascade(x)
        radius = np.abs(m.poles())[0]
        assert radius == pytest.approx(np.exp(-np.pi * 32.0 / 10000.0), abs=1e-12)
        assert radius == pytest.approx(0.98999, abs=1e-5)

    def test_root_inversion_roundtrip(self, rng):
        for _ in range(50):
            fs = 10000.0
            i, j = int(rng.integers(1, 4)), int(rng.integers(0, 3))
            x = ResonanceState(
                np.sort(rng.uniform(150, fs / 2 - 150, i)),
                rng.uniform(30, 300, i),
                np.sort(rng.uniform(150, fs / 2 - 150, j)),
                rng.uniform(30, 300, j),
                fs,
            )
            back = resonances_from_arma(resonator_cascade(x), fs)
            assert np.abs(back.formant_freqs - x.formant_freqs).max() < 1e-9
            assert np.abs(back.formant_bws - x.formant_bws).max() < 1e-9
            if j:
                assert np.abs(back.antiformant_freqs - x.antiformant_freqs).max() < 1e-9

    def test_cepstral_consistency_with_state_map(self, rng):
        fs = 10000.0
        x = ResonanceState([500.0, 1500.0], [80.0, 120.0], [1100.0], [90.0], fs)
        c1 = state_to_cepstrum(x, 24).coeffs
        c2 = arma_to_cepstrum(resonator_cascade(x), 24).coeffs
        assert np.abs(c1 - c2).max() < 1e-9


class TestRosenbergSource:
    def test_exact_period(self):
        pulse = rosenberg_source([100.0] * 4, 400, 10000.0)
        period = 100
        # pulse shape repeats exactly every period
        assert np.abs(pulse[:period] - pulse[period : 2 * period]).max() < 1e-12
        assert pulse.max() == pytest.approx(1.0, abs=1e-3)

    def test_closed_phase_length(self):
        # closure to next opening: period * (1 - 0.40 - 0.16) zero samples
        pulse = rosenberg_source([100.0], 100, 10000.0)
        closed_run = round(100 * (1 - 0.40 - 0.16))
        assert np.all(pulse[100 - closed_run :] == 0.0)
        assert pulse[100 - closed_run - 1] > 0.0

    def test_harmonic_peaks(self):
        fs = 10000.0
        f0 = 125.0
        pulse = rosenberg_source([f0] * 50, 400, fs, hop=400)
        spec = np.abs(np.fft.rfft(pulse * np.hanning(pulse.size)))
        freqs = np.fft.rfftfreq(pulse.size, 1 / fs)
        bin_width = freqs[1] - freqs[0]
        peaks, _ = sps.find_peaks(spec, height=spec.max() * 0.01)
        for k in range(1, 6):
            assert np.abs(freqs[peaks] - k * f0).min() <= bin_width

    def test_f0_above_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            rosenberg_source([6000.0], 100, 10000.0)

    def test_phase_continuity_across_hops(self):
        a = rosenberg_source([100.0, 100.0], 200, 10000.0, hop=100)
        b = rosenberg_source([100.0], 300, 10000.0, hop=300)
        assert np.abs(a - b[: a.size]).max() < 1e-12


class TestSynthesize:
    def vowel_spec(self, n_frames=8, seed=0, source="white_noise"):
        fs = 10000.0
        state = ResonanceState([600.0, 1600.0], [80.0, 120.0], [], [], fs)
        plans = [
            FramePlan(state=state, source=source, f0_hz=110.0 if source == "rosenberg" else None)
            for _ in range(n_frames)
        ]
        return TrajectorySpec(plans, 40.0, 0.5, fs, seed=seed)

    def test_all_silence_gives_zero_waveform(self):
        fs = 8000.0
        state = ResonanceState([500.0], [100.0], [], [], fs)
        plans = [FramePlan(state=state, source="silence") for _ in range(5)]
        wave, ref = synthesize(TrajectorySpec(plans, 20.0, 0.5, fs, seed=1))
        assert np.all(wave.samples == 0.0)
        assert not ref.speech.any()

    def test_deterministic_per_seed(self):
        w1, _ = synthesize(self.vowel_spec(seed=5))
        w2, _ = synthesize(self.vowel_spec(seed=5))
        w3, _ = synthesize(self.vowel_spec(seed=6))
        assert np.array_equal(w1.samples, w2.samples)
        assert not np.array_equal(w1.samples, w3.samples)

    def test_reference_alignment(self):
        spec = self.vowel_spec(n_frames=6)
        wave, ref = synthesize(spec)
        assert ref.n_frames == 6
        assert wave.samples.size == 5 * spec.hop + spec.frame_length
        assert ref.hop_s == pytest.approx(spec.hop / spec.sample_rate_hz)

    def test_spectral_peaks_at_formants(self):
        fs = 10000.0
        state = ResonanceState([700.0, 2000.0], [60.0, 90.0], [], [], fs)
        psd_acc = None
        for seed in range(100):
            plans = [FramePlan(state=state, source="white_noise")]
            wave, _ = synthesize(TrajectorySpec(plans, 100.0, 0.5, fs, seed=seed))
            f, psd = sps.periodogram(wave.samples, fs=fs)
            psd_acc = psd if psd_acc is None else psd_acc + psd
        for target in (700.0, 2000.0):
            band = (f > target - 300) & (f < target + 300)
            peak = f[band][np.argmax(psd_acc[band])]
            assert abs(peak - target) < 50.0

    def test_nasal_spec_valley_near_antiformant(self):
        spec = nasal_utterance_spec()
        wave, ref = synthesize(spec)
        fs = spec.sample_rate_hz
        length, hop = spec.frame_length, spec.hop
        hits = 0
        nasal_frames = [t for t in range(spec.n_frames) if ref.antiformant_active[t, 0]]
        for t in nasal_frames:
            seg = wave.samples[t * hop : t * hop + length]
            f, psd = sps.periodogram(seg, fs=fs, window="hann")
            db = 10 * np.log10(psd + 1e-18)
            band = (f > 900) & (f < 1600)
            valleys, _ = sps.find_peaks(-db[band])
            if valleys.size:
                nearest = np.abs(f[band][valleys] - ref.antiformant_freqs[t, 0]).min()
                hits += nearest < 100.0
        assert hits / len(nasal_frames) > 0.8

    def test_nasal_spec_plan(self):
        spec = nasal_utterance_spec()
        assert spec.n_frames == 75
        assert spec.sample_rate_hz == 10000.0
        assert spec.frame_length == 1000 and spec.hop == 500
        active = np.array([f.antiformant_present[0] for f in spec.frames])
        assert active[:25].all() and active[50:].all()
        assert not active[25:50].any()


class TestRandomTrajectory:
    def test_deterministic(self):
        a = random_trajectory(3, 1.0, seed=4, sample_rate_hz=16000.0)
        b = random_trajectory(3, 1.0, seed=4, sample_rate_hz=16000.0)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.state.formant_freqs, fb.state.formant_freqs)

    def test_ordering_and_separation(self):
        for seed in range(20):
            spec = random_trajectory(3, 1.0, seed=seed, sample_rate_hz=16000.0)
            for f in spec.frames:
                freqs = f.state.formant_freqs
                assert np.all(np.diff(freqs) >= 150.0 - 1e-9)

    def test_frequencies_below_nyquist(self):
        spec = random_trajectory(4, 5.0, seed=1, sample_rate_hz=16000.0)
        for f in spec.frames:
            assert np.all(f.state.formant_freqs < 8000.0)
            assert np.all((f.state.formant_bws >= 40.0) & (f.state.formant_bws <= 250.0))

    def test_voiced_variant_has_f0(self):
        spec = random_trajectory(3, 0.5, seed=2, sample_rate_hz=16000.0, source="rosenberg")
        assert all(90.0 <= f.f0_hz <= 220.0 for f in spec.frames)


class TestSpecSerialization:
    def test_json_roundtrip(self, tmp_path):
        spec = nasal_utterance_spec()
        path = tmp_path / "spec.json"
        save_spec(spec, path)
        back = load_spec(path)
        assert back.n_frames == spec.n_frames
        assert back.sample_rate_hz == spec.sample_rate_hz
        for fa, fb in zip(spec.frames, back.frames):
            assert np.allclose(fa.state.to_vector(), fb.state.to_vector())
            assert np.array_equal(fa.antiformant_present, fb.antiformant_present)
            assert fa.source == fb.source

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError, match="invalid trajectory spec"):
            spec_from_json({"frames": [{}]})

    def test_bad_source_rejected(self):
        fs = 8000.0
        state = ResonanceState([500.0], [80.0], [], [], fs)
        with pytest.raises(ValueError, match="unknown source"):
            FramePlan(state=state, source="square_wave")

    def test_rosenberg_requires_f0(self):
        state = ResonanceState([500.0], [80.0], [], [], 8000.0)
        with pytest.raises(ValueError, match="f0"):
            FramePlan(state=state, source="rosenberg")
