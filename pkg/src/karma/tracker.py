"""Extended Kalman filtering and smoothing over resonance states.

The hidden state stacks formant and antiformant frequency/bandwidth pairs,
evolving as x_{t+1} = F x_t + w_t with cepstral observations
y_t = h(x_t) + v_t.  The filter follows the standard extended-Kalman
recursion with the exact nonlinear h in the innovation and its analytic
Jacobian in the covariance update; the smoother is a fixed-interval
Rauch-Tung-Striebel backward pass over the stored filtered moments.

Silent frames coast: the Kalman gain is premultiplied by a diagonal 0/1
mask so the update degenerates to pure prediction and uncertainty grows.
Individual tracks may be deactivated per frame; an inactive track is
excluded from the observation model, decoupled from the active block, and
reinitialized from the prior when it reappears.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cepstrum import CepstralVector, _jacobian_blocks, _resonance_cepstrum
from .frontend import ActivityMask

__all__ = [
    "TrackerParams",
    "TrackActivation",
    "TrackResult",
    "CepstralObservation",
    "LinearObservation",
    "ekf_filter",
    "eks_smooth",
    "reactivate_track",
    "estimate_transition",
    "default_params",
]


@dataclass(frozen=True)
class TrackerParams:
    """State-space parameter set (F, Q, R, mu0, Sigma0) plus track geometry."""

    F: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    mu0: np.ndarray
    Sigma0: np.ndarray
    n_formants: int
    n_antiformants: int
    n_cepstra: int
    sample_rate_hz: float
    hop_s: float = 0.01

    def __post_init__(self):
        for name in ("F", "Q", "R", "Sigma0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "mu0", np.asarray(self.mu0, dtype=float).ravel())
        dim = self.state_dim
        for name in ("F", "Q", "Sigma0"):
            mat = getattr(self, name)
            if mat.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim}x{dim}")
        if self.mu0.size != dim:
            raise ValueError("mu0 length inconsistent with track counts")
        if self.R.shape != (self.n_cepstra, self.n_cepstra):
            raise ValueError("R must be N x N")

    @property
    def state_dim(self) -> int:
        return 2 * self.n_formants + 2 * self.n_antiformants


@dataclass(frozen=True)
class TrackActivation:
    """Per-frame presence flags for each formant and antiformant track."""

    formants: np.ndarray  # (T, I) bool
    antiformants: np.ndarray  # (T, J) bool

    def __post_init__(self):
        object.__setattr__(self, "formants", np.asarray(self.formants, dtype=bool))
        object.__setattr__(self, "antiformants", np.asarray(self.antiformants, dtype=bool))
        if self.formants.shape[0] != self.antiformants.shape[0]:
            raise ValueError("formant/antiformant flag lengths differ")

    @classmethod
    def all_active(cls, n_frames: int, n_formants: int, n_antiformants: int):
        return cls(
            np.ones((n_frames, n_formants), dtype=bool),
            np.ones((n_frames, n_antiformants), dtype=bool),
        )

    def __len__(self) -> int:
        return self.formants.shape[0]


@dataclass(frozen=True)
class TrackResult:
    """Per-frame posterior means and covariances for every tracked parameter."""

    means: np.ndarray  # (T, dim)
    covariances: np.ndarray  # (T, dim, dim)
    speech: np.ndarray  # (T,) bool
    formant_active: np.ndarray  # (T, I) bool
    antiformant_active: np.ndarray  # (T, J) bool
    n_formants: int
    n_antiformants: int
    n_cepstra: int
    sample_rate_hz: float
    hop_s: float

    @property
    def n_frames(self) -> int:
        return self.means.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.hop_s

    @property
    def formant_freqs(self) -> np.ndarray:
        return self.means[:, : self.n_formants]

    @property
    def formant_bws(self) -> np.ndarray:
        return self.means[:, self.n_formants : 2 * self.n_formants]

    @property
    def antiformant_freqs(self) -> np.ndarray:
        i = 2 * self.n_formants
        return self.means[:, i : i + self.n_antiformants]

    @property
    def antiformant_bws(self) -> np.ndarray:
        i = 2 * self.n_formants + self.n_antiformants
        return self.means[:, i : i + self.n_antiformants]

    @property
    def variances(self) -> np.ndarray:
        """Posterior variances (diagonal of each covariance), shape (T, dim)."""
        return np.einsum("tii->ti", self.covariances)


class CepstralObservation:
    """Observation model mapping a state vector to N cepstral coefficients.

    Inactive tracks are dropped from the sum and their Jacobian columns are
    zero, which is how the tracker omits a track from the state.
    """

    def __init__(self, n_formants: int, n_antiformants: int, n_cepstra: int, sample_rate_hz: float):
        self.n_formants = n_formants
        self.n_antiformants = n_antiformants
        self.n_cepstra = n_cepstra
        self.sample_rate_hz = sample_rate_hz

    def _split(self, x: np.ndarray):
        i, j = self.n_formants, self.n_antiformants
        return x[..., :i], x[..., i : 2 * i], x[..., 2 * i : 2 * i + j], x[..., 2 * i + j :]

    def value(self, x: np.ndarray, active_f=None, active_a=None) -> np.ndarray:
        f, b, fa, ba = self._split(x)
        if active_f is not None:
            f, b = f[active_f], b[active_f]
        if active_a is not None:
            fa, ba = fa[active_a], ba[active_a]
        fs, n = self.sample_rate_hz, self.n_cepstra
        return _resonance_cepstrum(f, b, fs, n) - _resonance_cepstrum(fa, ba, fs, n)

    def jacobian(self, x: np.ndarray, active_f=None, active_a=None) -> np.ndarray:
        f, b, fa, ba = self._split(x)
        fs, n = self.sample_rate_hz, self.n_cepstra
        df, db = _jacobian_blocks(f, b, fs, n, +1.0)
        daf, dab = _jacobian_blocks(fa, ba, fs, n, -1.0)
        if active_f is not None:
            df[:, ~active_f] = 0.0
            db[:, ~active_f] = 0.0
        if active_a is not None:
            daf[:, ~active_a] = 0.0
            dab[:, ~active_a] = 0.0
        return np.hstack([df, db, daf, dab])

    def value_batch(self, states: np.ndarray, active_f=None, active_a=None) -> np.ndarray:
        """Vectorized ``value`` over rows of ``states``: (M, dim) -> (M, N)."""
        f, b, fa, ba = self._split(states)
        if active_f is not None:
            f, b = f[:, active_f], b[:, active_f]
        if active_a is not None:
            fa, ba = fa[:, active_a], ba[:, active_a]
        fs = self.sample_rate_hz
        n = np.arange(1, self.n_cepstra + 1, dtype=float)[None, :, None]

        def part(freqs, bws):
            if freqs.shape[1] == 0:
                return np.zeros((states.shape[0], self.n_cepstra))
            decay = np.exp(-np.pi * n * bws[:, None, :] / fs)
            osc = np.cos(2.0 * np.pi * n * freqs[:, None, :] / fs)
            return (2.0 / n[0, :, 0]) * np.sum(decay * osc, axis=2)

        return part(f, b) - part(fa, ba)

    def state_bounds(self):
        """Clamp bounds keeping frequencies inside (0, fs/2) and bandwidths >= 1 Hz.

        The frequency margins stay away from 0 and fs/2, where the
        observation gradient vanishes and a clamped track could never
        recover.
        """
        i, j = self.n_formants, self.n_antiformants
        f_lo = 0.005 * self.sample_rate_hz
        f_hi = 0.495 * self.sample_rate_hz
        lo = np.concatenate([np.full(i, f_lo), np.full(i, 1.0), np.full(j, f_lo), np.full(j, 1.0)])
        hi = np.concatenate(
            [np.full(i, f_hi), np.full(i, np.inf), np.full(j, f_hi), np.full(j, np.inf)]
        )
        return lo, hi


class LinearObservation:
    """Fixed linear observation y = H x, mainly for surrogate tests."""

    def __init__(self, H: np.ndarray):
        self.H = np.asarray(H, dtype=float)

    def value(self, x, active_f=None, active_a=None):
        return self.H @ x

    def jacobian(self, x, active_f=None, active_a=None):
        return self.H.copy()

    def value_batch(self, states, active_f=None, active_a=None):
        return states @ self.H.T

    def state_bounds(self):
        return None


def _as_matrix(obs) -> np.ndarray:
    """Accept a (T, N) array or a sequence of CepstralVector."""
    if isinstance(obs, np.ndarray):
        return np.atleast_2d(np.asarray(obs, dtype=float))
    rows = [o.coeffs if isinstance(o, CepstralVector) else np.asarray(o, float) for o in obs]
    return np.vstack(rows)


def _speech_flags(mask, n_frames: int) -> np.ndarray:
    if mask is None:
        return np.ones(n_frames, dtype=bool)
    flags = mask.flags if isinstance(mask, ActivityMask) else np.asarray(mask, dtype=bool)
    if flags.size != n_frames:
        raise ValueError("activity mask length does not match observation count")
    return flags


def _entry_flags(act_f: np.ndarray, act_a: np.ndarray) -> np.ndarray:
    return np.concatenate([act_f, act_f, act_a, act_a])


def _track_entries(track_index: int, n_formants: int, n_antiformants: int) -> np.ndarray:
    """State entry indices (frequency, bandwidth) of one track.

    Tracks are indexed 0..I-1 for formants, then I..I+J-1 for antiformants.
    """
    i, j = n_formants, n_antiformants
    if not 0 <= track_index < i + j:
        raise ValueError("track index out of range")
    if track_index < i:
        return np.array([track_index, i + track_index])
    k = track_index - i
    return np.array([2 * i + k, 2 * i + j + k])


def reactivate_track(mean: np.ndarray, cov: np.ndarray, track_index: int, params: TrackerParams):
    """Reset one track's mean and covariance entries from the prior.

    Cross covariances with every other entry are zeroed, matching the
    semantics of a state that just re-entered the model.
    """
    entries = _track_entries(track_index, params.n_formants, params.n_antiformants)
    mean = np.array(mean, dtype=float)
    cov = np.array(cov, dtype=float)
    mean[entries] = params.mu0[entries]
    cov[entries, :] = 0.0
    cov[:, entries] = 0.0
    cov[np.ix_(entries, entries)] = params.Sigma0[np.ix_(entries, entries)]
    return mean, cov


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _solve_innovation(S: np.ndarray, rhs: np.ndarray, warn_label: str) -> np.ndarray:
    """Solve x S = rhs robustly, regularizing a singular innovation covariance."""
    try:
        sol = np.linalg.solve(S.T, rhs.T).T
        if np.all(np.isfinite(sol)):
            return sol
    except np.linalg.LinAlgError:
        pass
    warnings.warn(f"singular innovation covariance in {warn_label}; regularizing")
    bump = 1e-8 * max(np.trace(S), 1.0) / S.shape[0]
    S = S + bump * np.eye(S.shape[0])
    return np.linalg.solve(S.T, rhs.T).T


class _FilterStore:
    """Forward-pass quantities the smoother needs."""

    def __init__(self, n_frames: int, dim: int):
        self.m_prev = np.zeros((n_frames, dim))
        self.P_prev = np.zeros((n_frames, dim, dim))
        self.F_eff = np.zeros((n_frames, dim, dim))
        self.m_pred = np.zeros((n_frames, dim))
        self.P_pred = np.zeros((n_frames, dim, dim))
        self.m_filt = np.zeros((n_frames, dim))
        self.P_filt = np.zeros((n_frames, dim, dim))


def _resolve_setup(obs, params, mask, activation, obs_model):
    y = _as_matrix(obs)
    n_frames = y.shape[0]
    if n_frames < 1:
        raise ValueError("need at least one observation frame")
    speech = _speech_flags(mask, n_frames)
    if activation is None:
        activation = TrackActivation.all_active(n_frames, params.n_formants, params.n_antiformants)
    if len(activation) != n_frames:
        raise ValueError("activation length does not match observation count")
    if obs_model is None:
        obs_model = CepstralObservation(
            params.n_formants, params.n_antiformants, params.n_cepstra, params.sample_rate_hz
        )
    return y, n_frames, speech, activation, obs_model


def _apply_frozen(mean, cov, frozen_indices, frozen_values):
    if frozen_indices is None:
        return
    mean[frozen_indices] = frozen_values
    cov[frozen_indices, :] = 0.0
    cov[:, frozen_indices] = 0.0


def _clamp(vec, bounds):
    if bounds is None:
        return vec
    lo, hi = bounds
    return np.clip(vec, lo, hi)


def _run_forward(
    y, params, speech, activation, obs_model, frozen_indices, frozen_values
) -> _FilterStore:
    dim = params.state_dim
    n_frames = y.shape[0]
    bounds = obs_model.state_bounds()
    store = _FilterStore(n_frames, dim)

    m = params.mu0.copy()
    P = params.Sigma0.copy()
    _apply_frozen(m, P, frozen_indices, frozen_values)
    prev_g = np.ones(dim, dtype=bool)

    for t in range(n_frames):
        act_f = activation.formants[t]
        act_a = activation.antiformants[t]
        g = _entry_flags(act_f, act_a)

        newly = g & ~prev_g
        if newly.any():
            m[newly] = params.mu0[newly]
            P[newly, :] = 0.0
            P[:, newly] = 0.0
            P[np.ix_(newly, newly)] = params.Sigma0[np.ix_(newly, newly)]
        if (g != prev_g).any():
            # decouple active and inactive blocks
            P[np.ix_(g, ~g)] = 0.0
            P[np.ix_(~g, g)] = 0.0

        store.m_prev[t] = m
        store.P_prev[t] = P

        block = np.outer(g, g) | np.outer(~g, ~g)
        F_eff = np.where(block, params.F, 0.0)
        store.F_eff[t] = F_eff

        m = F_eff @ m
        P = _symmetrize(F_eff @ P @ F_eff.T + np.where(block, params.Q, 0.0))
        m = _clamp(m, bounds)
        _apply_frozen(m, P, frozen_indices, frozen_values)
        store.m_pred[t] = m
        store.P_pred[t] = P

        gain_rows = g if speech[t] else np.zeros(dim, dtype=bool)
        if gain_rows.any():
            h_val = obs_model.value(m, act_f, act_a)
            H = obs_model.jacobian(m, act_f, act_a)
            S = _symmetrize(H @ P @ H.T + params.R)
            PHt = P @ H.T
            PHt[~gain_rows, :] = 0.0
            K = _solve_innovation(S, PHt, "ekf_filter")
            m = m + K @ (y[t] - h_val)
            P = _symmetrize(P - K @ H @ P)
            m = _clamp(m, bounds)
            _apply_frozen(m, P, frozen_indices, frozen_values)

        store.m_filt[t] = m
        store.P_filt[t] = P
        prev_g = g

    return store


def _make_result(means, covs, speech, activation, params) -> TrackResult:
    return TrackResult(
        means=means,
        covariances=covs,
        speech=speech.copy(),
        formant_active=activation.formants.copy(),
        antiformant_active=activation.antiformants.copy(),
        n_formants=params.n_formants,
        n_antiformants=params.n_antiformants,
        n_cepstra=params.n_cepstra,
        sample_rate_hz=params.sample_rate_hz,
        hop_s=params.hop_s,
    )


def ekf_filter(
    obs,
    params: TrackerParams,
    mask=None,
    activation: TrackActivation | None = None,
    obs_model=None,
    frozen_indices=None,
    frozen_values=None,
) -> TrackResult:
    """Forward extended Kalman filter over cepstral observations.

    ``obs`` is a (T, N) array or sequence of ``CepstralVector``.  ``mask``
    marks speech frames; silent frames update nothing but still propagate.
    ``frozen_indices``/``frozen_values`` pin chosen state entries to known
    values (their covariance rows stay zero), used when true bandwidths are
    supplied externally.
    """
    y, _, speech, activation, obs_model = _resolve_setup(obs, params, mask, activation, obs_model)
    store = _run_forward(y, params, speech, activation, obs_model, frozen_indices, frozen_values)
    return _make_result(store.m_filt.copy(), store.P_filt.copy(), speech, activation, params)


def eks_smooth(
    obs,
    params: TrackerParams,
    mask=None,
    activation: TrackActivation | None = None,
    obs_model=None,
    frozen_indices=None,
    frozen_values=None,
) -> TrackResult:
    """Fixed-interval smoother: forward filter plus RTS backward pass."""
    y, n_frames, speech, activation, obs_model = _resolve_setup(
        obs, params, mask, activation, obs_model
    )
    store = _run_forward(y, params, speech, activation, obs_model, frozen_indices, frozen_values)
    bounds = obs_model.state_bounds()

    m_s = store.m_filt.copy()
    P_s = store.P_filt.copy()
    for t in range(n_frames - 1, 0, -1):
        P_pred = store.P_pred[t]
        if frozen_indices is not None:
            # frozen coordinates have zero prediction covariance by
            # construction; a unit diagonal keeps the solve nonsingular and
            # still yields a zero smoother gain on those coordinates
            P_pred = P_pred.copy()
            P_pred[frozen_indices, frozen_indices] = 1.0
        gain_rhs = store.P_prev[t] @ store.F_eff[t].T
        S = _solve_innovation(P_pred, gain_rhs, "eks_smooth")
        m_s[t - 1] = store.m_prev[t] + S @ (m_s[t] - store.m_pred[t])
        P_s[t - 1] = _symmetrize(store.P_prev[t] + S @ (P_s[t] - P_pred) @ S.T)
        _apply_frozen(m_s[t - 1], P_s[t - 1], frozen_indices, frozen_values)
        m_s[t - 1] = _clamp(m_s[t - 1], bounds)
    return _make_result(m_s, P_s, speech, activation, params)


def estimate_transition(
    first_pass_tracks: np.ndarray,
    speech=None,
    max_spectral_radius: float = 0.999,
) -> np.ndarray:
    """Single-lag least-squares fit of x_{t+1} ~ F x_t over speech frames.

    Falls back to the identity (with a warning) when the regressors are rank
    deficient; the spectral radius is clipped by uniform scaling.
    """
    tracks = np.asarray(first_pass_tracks, dtype=float)
    if tracks.ndim != 2:
        raise ValueError("tracks must be (frames, states)")
    n_frames, dim = tracks.shape
    ok = np.all(np.isfinite(tracks), axis=1)
    if speech is not None:
        flags = speech.flags if isinstance(speech, ActivityMask) else np.asarray(speech, bool)
        ok &= flags
    pairs = np.flatnonzero(ok[:-1] & ok[1:])
    if pairs.size < 2 * dim:
        raise ValueError("need at least 2*states usable frame pairs")
    X = tracks[pairs]
    Y = tracks[pairs + 1]
    sol, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < dim:
        warnings.warn("rank-deficient regressors; falling back to identity transition")
        return np.eye(dim)
    F = sol.T
    radius = np.abs(np.linalg.eigvals(F)).max()
    if radius > max_spectral_radius:
        F = F * (max_spectral_radius / radius)
    return F


def default_params(
    n_formants: int,
    n_antiformants: int,
    sample_rate_hz: float,
    n_cepstra: int,
    hop_s: float = 0.01,
    freq_process_std: float = 320.0,
    bw_process_std: float = 100.0,
) -> TrackerParams:
    """Default state-space parameters.

    Process noise uses per-frame standard deviations of 320 Hz for center
    frequencies and 100 Hz for bandwidths; the observation covariance is
    diagonal with R_nn = 1/n.  Initial formant means start at 500 Hz and
    step by 1000 Hz (bandwidths 80, 120, 160, ...); antiformants start at
    1000 Hz with 80 Hz bandwidths.  Sigma0 = Q and F = identity until
    ``estimate_transition`` replaces it.
    """
    i, j = n_formants, n_antiformants
    dim = 2 * i + 2 * j
    q_diag = np.concatenate(
        [
            np.full(i, freq_process_std**2),
            np.full(i, bw_process_std**2),
            np.full(j, freq_process_std**2),
            np.full(j, bw_process_std**2),
        ]
    )
    Q = np.diag(q_diag)
    R = np.diag(1.0 / np.arange(1, n_cepstra + 1, dtype=float))
    ceiling = 0.48 * sample_rate_hz
    mu0 = np.concatenate(
        [
            np.minimum(500.0 + 1000.0 * np.arange(i), ceiling),
            80.0 + 40.0 * np.arange(i),
            np.minimum(1000.0 + 1000.0 * np.arange(j), ceiling),
            np.full(j, 80.0),
        ]
    )
    return TrackerParams(
        F=np.eye(dim),
        Q=Q,
        R=R,
        mu0=mu0,
        Sigma0=Q.copy(),
        n_formants=i,
        n_antiformants=j,
        n_cepstra=n_cepstra,
        sample_rate_hz=sample_rate_hz,
        hop_s=hop_s,
    )
