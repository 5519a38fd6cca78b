"""Ground-truth-labeled speech-like synthesis.

Waveforms are built by overlap-add: each frame's stochastic or glottal
source segment is filtered by the second-order resonator cascade for that
frame's resonance state, windowed, and summed into the output.  The
synthesizer returns the waveform together with reference tracks aligned to
its frame grid, so trackers can be scored against exact truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.interpolate import PchipInterpolator

from .arma import ArmaModel
from .cepstrum import ResonanceState
from .frontend import Waveform
from .tracker import TrackResult

__all__ = [
    "FramePlan",
    "TrajectorySpec",
    "resonator_cascade",
    "resonances_from_arma",
    "rosenberg_source",
    "synthesize",
    "random_trajectory",
    "nasal_utterance_spec",
    "spec_to_json",
    "spec_from_json",
    "load_spec",
    "save_spec",
]

SOURCES = ("white_noise", "rosenberg", "silence")

# Rosenberg glottal pulse phase fractions: polynomial opening, quadratic closing.
OPEN_FRACTION = 0.40
CLOSE_FRACTION = 0.16

# Plausible per-formant frequency ranges (Hz) for random trajectories.
FORMANT_RANGES = ((250.0, 900.0), (900.0, 2300.0), (1800.0, 3000.0), (2800.0, 3900.0))
BANDWIDTH_RANGE = (40.0, 250.0)
MIN_FORMANT_SEPARATION = 150.0


@dataclass(frozen=True)
class FramePlan:
    """Ground truth for one synthesis frame.

    ``state`` always carries the full track geometry; ``formant_present``
    and ``antiformant_present`` say which tracks are audible in this frame
    (absent tracks keep reference values but do not enter the filter).
    """

    state: ResonanceState
    source: str = "white_noise"
    f0_hz: float | None = None
    formant_present: np.ndarray | None = None
    antiformant_present: np.ndarray | None = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "rosenberg" and (self.f0_hz is None or self.f0_hz <= 0):
            raise ValueError("rosenberg source needs a positive f0_hz")
        for name, count in (
            ("formant_present", self.state.n_formants),
            ("antiformant_present", self.state.n_antiformants),
        ):
            flags = getattr(self, name)
            flags = np.ones(count, bool) if flags is None else np.asarray(flags, bool)
            if flags.size != count:
                raise ValueError(f"{name} length mismatch")
            object.__setattr__(self, name, flags)

    def audible_state(self) -> ResonanceState:
        s = self.state
        return ResonanceState(
            s.formant_freqs[self.formant_present],
            s.formant_bws[self.formant_present],
            s.antiformant_freqs[self.antiformant_present],
            s.antiformant_bws[self.antiformant_present],
            s.sample_rate_hz,
        )


@dataclass(frozen=True)
class TrajectorySpec:
    """Frame-by-frame synthesis plan with its framing grid and noise seed."""

    frames: list[FramePlan]
    frame_ms: float
    overlap_fraction: float
    sample_rate_hz: float
    seed: int = 0

    def __post_init__(self):
        if not self.frames:
            raise ValueError("spec needs at least one frame")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError("overlap_fraction must be in [0, 1)")
        counts = {(f.state.n_formants, f.state.n_antiformants) for f in self.frames}
        if len(counts) != 1:
            raise ValueError("all frames must share one track geometry")

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def frame_length(self) -> int:
        return int(round(self.frame_ms * 1e-3 * self.sample_rate_hz))

    @property
    def hop(self) -> int:
        return max(1, int(round(self.frame_length * (1.0 - self.overlap_fraction))))

    @property
    def n_formants(self) -> int:
        return self.frames[0].state.n_formants

    @property
    def n_antiformants(self) -> int:
        return self.frames[0].state.n_antiformants


def resonator_cascade(x: ResonanceState) -> ArmaModel:
    """Pole/zero polynomials of a cascade of second-order digital resonators.

    Each formant (f, b) contributes a denominator section
    1 - 2 exp(-pi b/fs) cos(2 pi f/fs) z^-1 + exp(-2 pi b/fs) z^-2;
    antiformants contribute the analogous numerator sections.
    """
    fs = x.sample_rate_hz

    def cascade(freqs, bws):
        poly = np.array([1.0])
        for f, b in zip(freqs, bws):
            radius = np.exp(-np.pi * b / fs)
            section = np.array([1.0, -2.0 * radius * np.cos(2.0 * np.pi * f / fs), radius**2])
            poly = np.convolve(poly, section)
        return poly

    den = cascade(x.formant_freqs, x.formant_bws)
    num = cascade(x.antiformant_freqs, x.antiformant_bws)
    return ArmaModel(ar=-den[1:], ma=num[1:], noise_variance=1.0)


def resonances_from_arma(model: ArmaModel, sample_rate_hz: float) -> ResonanceState:
    """Invert the cascade: recover (frequency, bandwidth) pairs from roots.

    Keeps one representative of each conjugate pair (positive angle),
    sorted by frequency; real roots are ignored.
    """
    fs = sample_rate_hz

    def pairs(roots):
        sel = roots[np.imag(roots) > 1e-12]
        freq = np.angle(sel) * fs / (2.0 * np.pi)
        bw = -np.log(np.abs(sel)) * fs / np.pi
        order = np.argsort(freq)
        return freq[order], bw[order]

    f, b = pairs(model.poles())
    fa, ba = pairs(model.zeros())
    return ResonanceState(f, b, fa, ba, fs)


def rosenberg_source(
    f0_per_frame,
    frame_length: int,
    sample_rate_hz: float,
    hop: int | None = None,
) -> np.ndarray:
    """Phase-continuous glottal pulse train covering a whole frame grid.

    Each period opens for 40 % of the cycle (cubic rise to unit peak),
    closes for the next 16 % (quadratic fall), and stays at zero for the
    remainder.  Frame t controls f0 over samples [t*hop, (t+1)*hop).
    """
    f0 = np.atleast_1d(np.asarray(f0_per_frame, dtype=float))
    if np.any(f0 >= sample_rate_hz / 2.0):
        raise ValueError("f0 must be below the Nyquist rate")
    if np.any(f0 <= 0):
        raise ValueError("f0 must be positive")
    hop = frame_length if hop is None else hop
    total = (f0.size - 1) * hop + frame_length
    seg_idx = np.minimum(np.arange(total) // hop, f0.size - 1)
    inc = f0[seg_idx] / sample_rate_hz
    # phase of sample m is the accumulated increment up to (not including) m
    phase = np.concatenate(([0.0], np.cumsum(inc[:-1]))) % 1.0

    out = np.zeros(total)
    opening = phase < OPEN_FRACTION
    u = phase[opening] / OPEN_FRACTION
    out[opening] = 3.0 * u**2 - 2.0 * u**3
    closing = (phase >= OPEN_FRACTION) & (phase < OPEN_FRACTION + CLOSE_FRACTION)
    v = (phase[closing] - OPEN_FRACTION) / CLOSE_FRACTION
    out[closing] = 1.0 - v**2
    return out


def synthesize(spec: TrajectorySpec) -> tuple[Waveform, TrackResult]:
    """Overlap-add synthesis of a trajectory spec.

    Every frame's source segment is filtered with zero initial filter state,
    multiplied by a periodic Hann window, and summed at 50 % (or the spec's)
    overlap.  Silence frames contribute zeros.  Returns the waveform and the
    ground-truth tracks aligned to the same frame grid.
    """
    length = spec.frame_length
    hop = spec.hop
    n_frames = spec.n_frames
    total = (n_frames - 1) * hop + length
    fs = spec.sample_rate_hz

    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(total)
    f0 = np.array([f.f0_hz if f.f0_hz else 100.0 for f in spec.frames])
    flow = rosenberg_source(f0, length, fs, hop=hop)
    # radiated pressure excitation: first difference of the glottal flow
    voiced = np.empty_like(flow)
    voiced[0] = flow[0]
    voiced[1:] = np.diff(flow)

    window = sps.get_window("hann", length, fftbins=True)
    out = np.zeros(total)
    for t, plan in enumerate(spec.frames):
        if plan.source == "silence":
            continue
        start = t * hop
        seg = noise[start : start + length] if plan.source == "white_noise" else voiced[start : start + length]
        model = resonator_cascade(plan.audible_state())
        filtered = sps.lfilter(model.ma_polynomial, model.ar_polynomial, seg)
        out[start : start + length] += window * filtered

    peak = np.abs(out).max()
    if peak > 0:
        out *= 0.9 / peak

    i, j = spec.n_formants, spec.n_antiformants
    dim = 2 * (i + j)
    means = np.vstack([f.state.to_vector() for f in spec.frames])
    reference = TrackResult(
        means=means,
        covariances=np.zeros((n_frames, dim, dim)),
        speech=np.array([f.source != "silence" for f in spec.frames]),
        formant_active=np.vstack([f.formant_present for f in spec.frames]),
        antiformant_active=np.vstack([f.antiformant_present for f in spec.frames]).reshape(n_frames, j),
        n_formants=i,
        n_antiformants=j,
        n_cepstra=0,
        sample_rate_hz=fs,
        hop_s=hop / fs,
    )
    return Waveform(out, fs), reference


def _smooth_contour(rng, n_frames: int, hop_s: float, lo: float, hi: float) -> np.ndarray:
    """Piecewise-smooth random contour: pchip through keyframes ~0.4 s apart."""
    times = np.arange(n_frames) * hop_s
    n_keys = max(2, int(round(times[-1] / 0.4)) + 1)
    key_t = np.linspace(0.0, max(times[-1], hop_s), n_keys)
    key_v = rng.uniform(lo, hi, n_keys)
    return PchipInterpolator(key_t, key_v)(times)


def random_trajectory(
    n_formants: int,
    duration_s: float,
    seed: int,
    sample_rate_hz: float,
    source: str = "white_noise",
    frame_ms: float = 20.0,
    overlap_fraction: float = 0.5,
    f0_range: tuple[float, float] = (90.0, 220.0),
) -> TrajectorySpec:
    """Random piecewise-smooth formant trajectories for a desk-scale corpus.

    Frequencies stay inside per-formant plausible ranges with ascending
    order and at least 150 Hz separation; bandwidths stay in [40, 250] Hz.
    Deterministic for a fixed seed.
    """
    if n_formants > len(FORMANT_RANGES):
        raise ValueError("no frequency range defined for that many formants")
    fs = sample_rate_hz
    length = int(round(frame_ms * 1e-3 * fs))
    hop = max(1, int(round(length * (1.0 - overlap_fraction))))
    n_frames = max(1, 1 + int(round((duration_s * fs - length) / hop)))
    hop_s = hop / fs

    rng = np.random.default_rng(seed)
    freqs = np.zeros((n_frames, n_formants))
    bws = np.zeros((n_frames, n_formants))
    times = np.arange(n_frames) * hop_s
    n_keys = max(2, int(round(times[-1] / 0.4)) + 1)
    key_t = np.linspace(0.0, max(times[-1], hop_s), n_keys)
    # sample keyframes jointly with a comfortable gap so neighboring
    # resonances do not merge into a single spectral mass
    key_f = np.zeros((n_keys, n_formants))
    for k in range(n_formants):
        lo, hi = FORMANT_RANGES[k]
        if k > 0:
            lo_vec = np.maximum(lo, key_f[:, k - 1] + 2 * MIN_FORMANT_SEPARATION)
        else:
            lo_vec = np.full(n_keys, lo)
        key_f[:, k] = rng.uniform(lo_vec, np.maximum(lo_vec + 1.0, hi))
    for k in range(n_formants):
        freqs[:, k] = PchipInterpolator(key_t, key_f[:, k])(times)
        bws[:, k] = _smooth_contour(rng, n_frames, hop_s, *BANDWIDTH_RANGE)
    for k in range(1, n_formants):
        lo, hi = FORMANT_RANGES[k]
        floor = np.maximum(freqs[:, k - 1] + MIN_FORMANT_SEPARATION, lo)
        freqs[:, k] = np.maximum(freqs[:, k], floor)

    f0 = _smooth_contour(rng, n_frames, hop_s, *f0_range) if source == "rosenberg" else None
    frames = []
    for t in range(n_frames):
        state = ResonanceState(freqs[t], bws[t], [], [], fs)
        frames.append(
            FramePlan(
                state=state,
                source=source,
                f0_hz=float(f0[t]) if f0 is not None else None,
            )
        )
    return TrajectorySpec(frames, frame_ms, overlap_fraction, fs, seed=seed)


def nasal_utterance_spec(
    seed: int = 715,
    n_segment_frames: int = 25,
    transition_frames: int = 5,
    walk_std_hz: float = 10.0,
) -> TrajectorySpec:
    """Nasal-vowel-nasal demo utterance with a known antiformant.

    Three 25-frame segments (nasal, open vowel, nasal) of 100 ms frames at
    10 kHz with 50 % overlap and a declining-pitch glottal source.  The
    nasal segments carry two formants at 257 Hz (32 Hz) and 1891 Hz
    (100 Hz) plus one antiformant at 1223 Hz (52 Hz); the vowel uses
    850 Hz (80 Hz) and 1500 Hz (120 Hz) with the antiformant absent.
    Segment boundaries interpolate linearly over ``transition_frames``;
    every frequency follows a seeded random walk (std ``walk_std_hz`` per
    frame) while bandwidths get independent per-frame jitter around their
    nominal values (std ``walk_std_hz``/3, floored at 8 Hz) so resonances
    stay observable.
    """
    fs = 10000.0
    nasal_f = np.array([257.0, 1891.0])
    nasal_b = np.array([32.0, 100.0])
    vowel_f = np.array([850.0, 1500.0])
    vowel_b = np.array([80.0, 120.0])
    anti_f, anti_b = 1223.0, 52.0

    n_frames = 3 * n_segment_frames
    segment = np.repeat([0, 1, 0], n_segment_frames)  # 0 = nasal, 1 = vowel

    def blend(a, b):
        """Per-frame values: a in nasal segments, b in vowel, linear transitions."""
        vals = np.where(segment == 0, a, b).astype(float)
        for boundary in (n_segment_frames, 2 * n_segment_frames):
            for k in range(transition_frames):
                t = boundary + k
                if t < n_frames:
                    w = (k + 1) / (transition_frames + 1)
                    vals[t] = (1 - w) * vals[boundary - 1] + w * (
                        b if segment[boundary] == 1 else a
                    )
        return vals

    rng = np.random.default_rng(seed)

    def walk(std):
        return np.cumsum(rng.normal(0.0, std, n_frames))

    def jitter(std):
        return rng.normal(0.0, std, n_frames)

    freq_tracks = np.column_stack(
        [blend(nasal_f[0], vowel_f[0]) + walk(walk_std_hz), blend(nasal_f[1], vowel_f[1]) + walk(walk_std_hz)]
    )
    bw_tracks = np.column_stack(
        [
            np.maximum(blend(nasal_b[0], vowel_b[0]) + jitter(walk_std_hz / 3.0), 8.0),
            np.maximum(blend(nasal_b[1], vowel_b[1]) + jitter(walk_std_hz / 3.0), 8.0),
        ]
    )
    anti_freq = anti_f + walk(walk_std_hz)
    anti_bw = np.maximum(anti_b + jitter(walk_std_hz / 3.0), 8.0)
    f0 = np.linspace(128.0, 96.0, n_frames)

    frames = []
    for t in range(n_frames):
        state = ResonanceState(freq_tracks[t], bw_tracks[t], [anti_freq[t]], [anti_bw[t]], fs)
        frames.append(
            FramePlan(
                state=state,
                source="rosenberg",
                f0_hz=float(f0[t]),
                antiformant_present=np.array([segment[t] == 0]),
            )
        )
    return TrajectorySpec(frames, frame_ms=100.0, overlap_fraction=0.5, sample_rate_hz=fs, seed=seed)


def spec_to_json(spec: TrajectorySpec) -> dict:
    """Plain-dict form of a trajectory spec (schema documented in README)."""
    frames = []
    for f in spec.frames:
        entry = {
            "source": f.source,
            "formant_freqs": f.state.formant_freqs.tolist(),
            "formant_bws": f.state.formant_bws.tolist(),
            "antiformant_freqs": f.state.antiformant_freqs.tolist(),
            "antiformant_bws": f.state.antiformant_bws.tolist(),
        }
        if f.f0_hz is not None:
            entry["f0_hz"] = f.f0_hz
        if not f.formant_present.all():
            entry["formant_present"] = f.formant_present.tolist()
        if not f.antiformant_present.all():
            entry["antiformant_present"] = f.antiformant_present.tolist()
        frames.append(entry)
    return {
        "sample_rate_hz": spec.sample_rate_hz,
        "frame_ms": spec.frame_ms,
        "overlap_fraction": spec.overlap_fraction,
        "seed": spec.seed,
        "frames": frames,
    }


def spec_from_json(data: dict) -> TrajectorySpec:
    try:
        fs = float(data["sample_rate_hz"])
        frames = []
        for entry in data["frames"]:
            state = ResonanceState(
                entry.get("formant_freqs", []),
                entry.get("formant_bws", []),
                entry.get("antiformant_freqs", []),
                entry.get("antiformant_bws", []),
                fs,
            )
            frames.append(
                FramePlan(
                    state=state,
                    source=entry.get("source", "white_noise"),
                    f0_hz=entry.get("f0_hz"),
                    formant_present=entry.get("formant_present"),
                    antiformant_present=entry.get("antiformant_present"),
                )
            )
        return TrajectorySpec(
            frames=frames,
            frame_ms=float(data["frame_ms"]),
            overlap_fraction=float(data["overlap_fraction"]),
            sample_rate_hz=fs,
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"invalid trajectory spec: {exc}") from exc


def load_spec(path) -> TrajectorySpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))


def save_spec(spec: TrajectorySpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_json(spec), fh, indent=1)
        fh.write("\n")
