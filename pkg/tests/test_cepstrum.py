import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from karma.arma import ArmaModel
from karma.cepstrum import (
    CepstralVector,
    ResonanceState,
    arma_to_cepstrum,
    cepstrum_jacobian,
    real_cepstrum,
    state_to_cepstrum,
)
from karma.synthesis import resonator_cascade

from conftest import random_minimum_phase_model, root_sum_cepstrum


def random_state(rng, n_formants=None, n_antiformants=None, fs=10000.0):
    i = int(rng.integers(1, 5)) if n_formants is None else n_formants
    j = int(rng.integers(0, 3)) if n_antiformants is None else n_antiformants
    return ResonanceState(
        np.sort(rng.uniform(100.0, fs / 2 - 100.0, i)),
        rng.uniform(20.0, 400.0, i),
        np.sort(rng.uniform(100.0, fs / 2 - 100.0, j)),
        rng.uniform(20.0, 400.0, j),
        fs,
    )


class TestArmaToCepstrum:
    def test_empty_model_zero_cepstrum(self):
        m = ArmaModel([], [], 1.0)
        assert np.all(arma_to_cepstrum(m, 10).coeffs == 0.0)

    def test_single_pole_series(self):
        m = ArmaModel([0.5], [], 1.0)
        c = arma_to_cepstrum(m, 3)
        assert c.coeffs == pytest.approx([0.5, 0.125, 0.0416667], abs=1e-7)

    def test_matches_root_sum_oracle(self, rng):
        for _ in range(100):
            p = int(rng.integers(1, 21))
            q = int(rng.integers(0, 9))
            m = random_minimum_phase_model(rng, p, q)
            c = arma_to_cepstrum(m, 30).coeffs
            assert np.abs(c - root_sum_cepstrum(m, 30)).max() < 1e-10

    def test_non_minimum_phase_rejected(self):
        m = ArmaModel([2.0], [], 1.0)
        with pytest.raises(ValueError, match="reflect roots"):
            arma_to_cepstrum(m, 5)

    def test_ma_sign_convention(self):
        # single zero at -0.5 (numerator 1 + 0.5 z^-1): C_n = -(-0.5)^n / n
        m = ArmaModel([], [0.5], 1.0)
        c = arma_to_cepstrum(m, 3)
        assert c.coeffs == pytest.approx([0.5, -0.125, 0.125 / 3.0], abs=1e-12)


class TestStateToCepstrum:
    def test_quarter_rate_pattern(self):
        st_ = ResonanceState([2500.0], [0.0], [], [], 10000.0)
        c = state_to_cepstrum(st_, 4)
        assert c.coeffs == pytest.approx([0.0, -1.0, 0.0, 0.5], abs=1e-12)

    def test_formant_antiformant_cancellation(self):
        st_ = ResonanceState([1200.0], [90.0], [1200.0], [90.0], 8000.0)
        assert np.all(np.abs(state_to_cepstrum(st_, 20).coeffs) < 1e-15)

    def test_matches_cascade_cepstrum(self, rng):
        for _ in range(50):
            x = random_state(rng)
            c1 = state_to_cepstrum(x, 30).coeffs
            c2 = arma_to_cepstrum(resonator_cascade(x), 30).coeffs
            assert np.abs(c1 - c2).max() < 1e-9

    @settings(deadline=None, max_examples=50)
    @given(seed=st.integers(0, 2**31))
    def test_decay_bound(self, seed):
        x = random_state(np.random.default_rng(seed))
        c = state_to_cepstrum(x, 25).coeffs
        n = np.arange(1, 26)
        bound = (2.0 / n) * (x.n_formants + x.n_antiformants)
        assert np.all(np.abs(c) <= bound + 1e-12)


class TestCepstrumJacobian:
    def test_zero_frequency_limit(self):
        x = ResonanceState([1e-9], [50.0], [], [], 8000.0)
        jac = cepstrum_jacobian(x, 5)
        assert np.abs(jac[:, 0]).max() < 1e-10

    def test_bandwidth_column_zero_at_quarter_rate(self):
        x = ResonanceState([2000.0], [50.0], [], [], 8000.0)
        jac = cepstrum_jacobian(x, 1)
        assert jac[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_finite_difference_match(self, rng):
        fs = 10000.0
        for _ in range(20):
            x = random_state(rng, fs=fs)
            i, j = x.n_formants, x.n_antiformants
            jac = cepstrum_jacobian(x, 15)
            vec = x.to_vector()
            fd = np.zeros_like(jac)
            for k in range(vec.size):
                up, dn = vec.copy(), vec.copy()
                up[k] += 1e-4
                dn[k] -= 1e-4
                cu = state_to_cepstrum(ResonanceState.from_vector(up, i, j, fs), 15).coeffs
                cd = state_to_cepstrum(ResonanceState.from_vector(dn, i, j, fs), 15).coeffs
                fd[:, k] = (cu - cd) / 2e-4
            assert np.abs(jac - fd).max() / np.abs(jac).max() < 1e-6

    def test_antiformant_columns_negate_formant_columns(self):
        fs = 9000.0
        x = ResonanceState([1400.0], [110.0], [1400.0], [110.0], fs)
        jac = cepstrum_jacobian(x, 12)
        # columns: f, b, f', b'
        assert np.allclose(jac[:, 2], -jac[:, 0])
        assert np.allclose(jac[:, 3], -jac[:, 1])


class TestRealCepstrum:
    def test_unit_impulse_flat(self):
        frame = np.zeros(64)
        frame[0] = 1.0
        assert np.abs(real_cepstrum(frame, 10).coeffs).max() < 1e-12

    def test_matches_model_cepstrum_for_long_impulse_response(self):
        impulse = np.zeros(4096)
        impulse[0] = 1.0
        h = sps.lfilter([1.0], [1.0, -1.0, 0.5], impulse)
        c = real_cepstrum(h, 5).coeffs
        ref = arma_to_cepstrum(ArmaModel([1.0, -0.5], [], 1.0), 5).coeffs
        assert np.abs(c - ref).max() < 0.01

    @settings(deadline=None, max_examples=25)
    @given(scale=st.floats(0.1, 100.0), seed=st.integers(0, 2**31))
    def test_gain_invariant(self, scale, seed):
        frame = np.random.default_rng(seed).standard_normal(256)
        c1 = real_cepstrum(frame, 8).coeffs
        c2 = real_cepstrum(scale * frame, 8).coeffs
        assert np.abs(c1 - c2).max() < 1e-9

    def test_zero_frame_rejected(self):
        with pytest.raises(ValueError, match="log spectrum"):
            real_cepstrum(np.zeros(32), 4)


class TestCepstralVector:
    def test_one_based_indexing(self):
        c = CepstralVector([0.5, 0.25])
        assert c[1] == 0.5 and c[2] == 0.25
        with pytest.raises(IndexError):
            _ = c[0]

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            CepstralVector([np.nan])
