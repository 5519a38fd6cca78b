"""End-to-end tracking pipeline: waveform in, resonance tracks out.

Ties the front end, per-frame model fitting, cepstral observation
generation, and Kalman tracking together under one dataclass config whose
defaults reproduce the standard analysis conditions (7 kHz rate, 20 ms
Hamming frames at 50 % overlap, pre-emphasis 0.7, AR order 12, 15 cepstral
coefficients, three formants).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, replace

import numpy as np

from .arma import estimate_ar, estimate_arma
from .cepstrum import arma_to_cepstrum, real_cepstrum
from .frontend import (
    LabelInterval,
    Waveform,
    activity_from_labels,
    detect_activity,
    preemphasize,
    resample,
    window_frames,
)
from .tracker import (
    TrackActivation,
    TrackerParams,
    default_params,
    ekf_filter,
    eks_smooth,
    estimate_transition,
)

__all__ = ["RunConfig", "make_tracker_params", "build_observations", "track_waveform"]

OBSERVATION_SOURCES = ("arma_cepstrum", "real_cepstrum")
MODES = ("filter", "smooth")


@dataclass
class RunConfig:
    """Analysis and tracker configuration for one tracking run."""

    target_sample_rate_hz: float = 7000.0
    frame_ms: float = 20.0
    overlap: float = 0.5
    gamma: float = 0.7
    window: str = "hamming"
    lpc_order: int = 12  # p
    ma_order: int = 0  # q
    n_cepstra: int = 15  # N
    n_formants: int = 3  # I
    n_antiformants: int = 0  # J
    observation_source: str = "arma_cepstrum"
    mode: str = "smooth"
    energy_threshold_db: float = -40.0
    fit_transition: bool = True  # re-track with a least-squares transition matrix
    freq_process_std: float = 320.0
    bw_process_std: float = 100.0
    initial_formant_freqs: list[float] | None = None
    initial_formant_bws: list[float] | None = None
    initial_antiformant_freqs: list[float] | None = None
    initial_antiformant_bws: list[float] | None = None

    def validate(self) -> None:
        if self.n_cepstra < max(self.lpc_order, self.ma_order):
            raise ValueError("n_cepstra must be at least max(lpc_order, ma_order)")
        if self.lpc_order < 2 * self.n_formants:
            raise ValueError("lpc_order must be at least 2 * n_formants")
        if self.ma_order < 2 * self.n_antiformants:
            raise ValueError("ma_order must be at least 2 * n_antiformants")
        if not 0 <= self.overlap < 1:
            raise ValueError("overlap must be in [0, 1)")
        if self.observation_source not in OBSERVATION_SOURCES:
            raise ValueError(f"observation_source must be one of {OBSERVATION_SOURCES}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.target_sample_rate_hz <= 0:
            raise ValueError("target sample rate must be positive")
        if abs(self.gamma) > 1:
            raise ValueError("|gamma| must be <= 1")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")


def make_tracker_params(config: RunConfig, hop_s: float) -> TrackerParams:
    params = default_params(
        config.n_formants,
        config.n_antiformants,
        config.target_sample_rate_hz,
        config.n_cepstra,
        hop_s=hop_s,
        freq_process_std=config.freq_process_std,
        bw_process_std=config.bw_process_std,
    )
    mu0 = params.mu0.copy()
    i, j = config.n_formants, config.n_antiformants
    overrides = (
        (config.initial_formant_freqs, 0, i),
        (config.initial_formant_bws, i, 2 * i),
        (config.initial_antiformant_freqs, 2 * i, 2 * i + j),
        (config.initial_antiformant_bws, 2 * i + j, 2 * i + 2 * j),
    )
    for values, lo, hi in overrides:
        if values is not None:
            if len(values) != hi - lo:
                raise ValueError("initial value override has wrong length")
            mu0[lo:hi] = values
    return replace(params, mu0=mu0)


def build_observations(frames_emphasized: np.ndarray, config: RunConfig, speech: np.ndarray) -> np.ndarray:
    """Per-frame cepstral observation matrix (T, N).

    Silent frames get zero rows; the tracker never uses them because the
    Kalman gain is masked there.  The pre-emphasis response and residual
    source coloration stay in the observations, as the observation noise
    covariance is sized to absorb them.
    """
    n_frames = frames_emphasized.shape[0]
    obs = np.zeros((n_frames, config.n_cepstra))
    for t in range(n_frames):
        frame = frames_emphasized[t]
        if not speech[t] or not np.any(frame):
            continue
        if config.observation_source == "real_cepstrum":
            obs[t] = real_cepstrum(frame, config.n_cepstra).coeffs
        else:
            if config.ma_order > 0:
                model = estimate_arma(frame, config.lpc_order, config.ma_order)
            else:
                model = estimate_ar(frame, config.lpc_order)
            obs[t] = arma_to_cepstrum(model, config.n_cepstra).coeffs
    return obs


def track_waveform(
    w: Waveform,
    config: RunConfig,
    labels: list[LabelInterval] | None = None,
    activation: TrackActivation | None = None,
    return_details: bool = False,
):
    """Run the full tracking pipeline on a waveform.

    Resamples to the analysis rate, windows and pre-emphasizes frames, fits
    per-frame models, converts them to cepstral observations, and tracks
    with the extended Kalman filter (plus the smoothing pass in smooth
    mode).  When ``fit_transition`` is on, a first pass with the identity
    transition matrix seeds a least-squares estimate of F and the tracker
    runs again with it.
    """
    config.validate()
    rate_ratio = config.target_sample_rate_hz / w.sample_rate_hz
    if rate_ratio != 1.0:
        w = resample(w, config.target_sample_rate_hz)
    frames = window_frames(w, config.frame_ms, config.overlap, config.window)
    emphasized = preemphasize(frames.frames, config.gamma)

    if labels is not None:
        mask = activity_from_labels(
            labels,
            n_samples=w.samples.size,
            frame_length=frames.frame_length,
            hop=frames.hop,
            n_frames=frames.n_frames,
            sample_scale=rate_ratio,
        )
    else:
        mask = detect_activity(frames, config.energy_threshold_db)

    obs = build_observations(emphasized, config, mask.flags)
    params = make_tracker_params(config, frames.hop_s)
    run = eks_smooth if config.mode == "smooth" else ekf_filter

    if config.fit_transition:
        # identification pass: always smoothed, so both output modes share
        # the same estimated transition matrix
        first = eks_smooth(obs, params, mask, activation)
        try:
            F = estimate_transition(first.means, speech=mask.flags)
        except ValueError:
            F = None
        if F is not None:
            params = replace(params, F=F)
    result = run(obs, params, mask, activation)
    if return_details:
        return result, mask, obs, params
    return result
