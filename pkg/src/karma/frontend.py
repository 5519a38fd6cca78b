"""Waveform I/O, framing, pre-emphasis, resampling, and speech-activity detection.

The analysis front end turns a mono PCM waveform into windowed,
pre-emphasized short-time frames plus a per-frame speech-activity mask.
Everything here is a pure function over immutable values, so frames and
masks can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal as sps
from scipy.io import wavfile

__all__ = [
    "Waveform",
    "FrameSequence",
    "ActivityMask",
    "LabelInterval",
    "window_frames",
    "preemphasize",
    "read_wav",
    "write_wav",
    "resample",
    "detect_activity",
    "read_label_file",
    "activity_from_labels",
    "DEFAULT_SILENCE_LABELS",
]

# TIMIT-style pause, closure-interval, and glottal-stop labels treated as silence.
DEFAULT_SILENCE_LABELS = frozenset(
    {"pau", "epi", "h#", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl", "q"}
)

# Periodic (DFT-even) windows so 50 % overlap-add sums to a constant.
_WINDOWS = {"hamming": "hamming", "hanning": "hann", "rectangular": "boxcar"}


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples (dimensionless amplitude) with their sampling rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).ravel()
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class FrameSequence:
    """Short-time frames of a waveform, one row per frame."""

    frames: np.ndarray  # (n_frames, frame_length)
    frame_length: int
    hop: int
    window_kind: str
    sample_rate_hz: float

    def __post_init__(self):
        if not (0 < self.hop <= self.frame_length):
            raise ValueError("hop must satisfy 0 < hop <= frame_length")
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 2 or frames.shape[1] != self.frame_length:
            raise ValueError("frames must be (n_frames, frame_length)")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def hop_s(self) -> float:
        return self.hop / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        """Start time of each frame in seconds."""
        return np.arange(self.n_frames) * self.hop_s


@dataclass(frozen=True)
class ActivityMask:
    """Per-frame boolean speech-activity flags (True = speech energy present)."""

    flags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "flags", np.asarray(self.flags, dtype=bool).ravel())

    def __len__(self) -> int:
        return self.flags.size

    @classmethod
    def all_speech(cls, n_frames: int) -> "ActivityMask":
        return cls(np.ones(n_frames, dtype=bool))


@dataclass(frozen=True)
class LabelInterval:
    """One line of a label file: a half-open sample span and its label."""

    start_sample: int
    end_sample: int
    label: str


def window_frames(
    w: Waveform,
    frame_ms: float,
    overlap_fraction: float,
    window_kind: str = "hamming",
) -> FrameSequence:
    """Split ``w`` into overlapping frames and apply the analysis window.

    Frame t covers samples [t*hop, t*hop + frame_length).  A trailing
    partial frame, if any samples remain uncovered, is zero padded rather
    than dropped so track lengths match spectrogram conventions.
    """
    if not 0 <= overlap_fraction < 1:
        raise ValueError("overlap_fraction must be in [0, 1)")
    if window_kind not in _WINDOWS:
        raise ValueError(f"unknown window kind {window_kind!r}")
    frame_length = int(round(frame_ms * 1e-3 * w.sample_rate_hz))
    if frame_length < 1:
        raise ValueError("frame_ms yields no samples at this rate")
    x = w.samples
    if x.size < frame_length:
        raise ValueError("input too short")
    hop = max(1, int(round(frame_length * (1.0 - overlap_fraction))))

    n_full = (x.size - frame_length) // hop + 1
    covered = (n_full - 1) * hop + frame_length
    n_frames = n_full + (1 if covered < x.size else 0)

    window = sps.get_window(_WINDOWS[window_kind], frame_length, fftbins=True)
    frames = np.zeros((n_frames, frame_length))
    for t in range(n_frames):
        start = t * hop
        seg = x[start : start + frame_length]
        frames[t, : seg.size] = seg
    frames *= window
    return FrameSequence(frames, frame_length, hop, window_kind, w.sample_rate_hz)


def preemphasize(frame: np.ndarray, gamma: float) -> np.ndarray:
    """First-difference high-pass: out[m] = in[m] - gamma*in[m-1], with in[-1] = 0.

    Works on a single frame or on a stack of frames (last axis = time).
    """
    if abs(gamma) > 1:
        raise ValueError("|gamma| must be <= 1")
    x = np.asarray(frame, dtype=float)
    out = x.copy()
    out[..., 1:] -= gamma * x[..., :-1]
    return out


def read_wav(path) -> Waveform:
    """Read a RIFF PCM (16-bit or 32-bit float) WAV file as a mono waveform.

    Samples are scaled to [-1, 1]; stereo channels are averaged.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        msg = str(exc).lower()
        if "format" in msg or "compressed" in msg or "fmt" in msg:
            raise ValueError("unsupported codec") from exc
        raise ValueError("unsupported wav") from exc
    except Exception as exc:  # struct errors on truncated headers
        raise ValueError("unsupported wav") from exc

    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(float)
    elif data.dtype == np.uint8:
        samples = (data.astype(float) - 128.0) / 128.0
    else:
        raise ValueError("unsupported codec")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return Waveform(samples, float(rate))


def write_wav(path, w: Waveform) -> None:
    """Write a waveform as 16-bit PCM, clipping to the representable range."""
    scaled = np.clip(np.round(w.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(Path(path), int(round(w.sample_rate_hz)), scaled)


def resample(w: Waveform, target_hz: float) -> Waveform:
    """Band-limited polyphase resampling to ``target_hz``.

    Content above the smaller Nyquist rate is attenuated by at least 75 dB;
    output length is round(len * target / source).
    """
    if target_hz <= 0:
        raise ValueError("target rate must be positive")
    if target_hz == w.sample_rate_hz:
        return Waveform(w.samples.copy(), w.sample_rate_hz)
    ratio = Fraction(target_hz / w.sample_rate_hz).limit_denominator(1000)
    up, down = ratio.numerator, ratio.denominator
    fs_up = w.sample_rate_hz * up
    cutoff = 0.5 * min(w.sample_rate_hz, target_hz)
    width = 0.10 * cutoff
    ntaps, beta = sps.kaiserord(75.0, width / (fs_up / 2.0))
    ntaps |= 1
    fir = sps.firwin(ntaps, cutoff - width / 2.0, window=("kaiser", beta), fs=fs_up)
    y = sps.resample_poly(w.samples, up, down, window=fir)
    n_out = int(round(w.samples.size * target_hz / w.sample_rate_hz))
    if y.size > n_out:
        y = y[:n_out]
    elif y.size < n_out:
        y = np.pad(y, (0, n_out - y.size))
    return Waveform(y, float(target_hz))


def detect_activity(frames: FrameSequence, threshold_db: float = -40.0) -> ActivityMask:
    """Energy-based activity: frame RMS in dB relative to the loudest frame."""
    rms = np.sqrt(np.mean(frames.frames**2, axis=1))
    ref = rms.max() if rms.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        db = np.where(rms > 0, 20.0 * np.log10(rms / ref) if ref > 0 else -np.inf, -np.inf)
    return ActivityMask(db >= threshold_db)


def read_label_file(path) -> list[LabelInterval]:
    """Parse 'start_sample end_sample label' lines; blank lines are skipped."""
    intervals = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: expected 'start end label'")
            try:
                start, end = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer sample index") from exc
            intervals.append(LabelInterval(start, end, parts[2]))
    return intervals


def activity_from_labels(
    intervals: list[LabelInterval],
    n_samples: int,
    frame_length: int,
    hop: int,
    n_frames: int,
    silence_labels: frozenset[str] = DEFAULT_SILENCE_LABELS,
    sample_scale: float = 1.0,
) -> ActivityMask:
    """Label-based activity: a frame is silent only if every sample it covers
    lies inside a silence-labeled interval.

    ``sample_scale`` rescales label sample indices (use target_rate/source_rate
    when the waveform was resampled after labeling).
    """
    silent = np.zeros(n_samples, dtype=bool)
    for iv in intervals:
        if iv.label in silence_labels:
            lo = max(0, int(round(iv.start_sample * sample_scale)))
            hi = min(n_samples, int(round(iv.end_sample * sample_scale)))
            silent[lo:hi] = True
    flags = np.empty(n_frames, dtype=bool)
    for t in range(n_frames):
        start = t * hop
        seg = silent[start : start + frame_length]
        # zero-padded tail samples count as silence
        all_silent = bool(seg.all()) if seg.size else True
        flags[t] = not all_silent
    return ActivityMask(flags)
