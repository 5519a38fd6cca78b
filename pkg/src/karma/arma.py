"""Per-frame AR and ARMA model fitting with a minimum-phase guarantee.

Model convention for a frame s[m]:

    s[m] = sum_i a_i s[m-i] + sum_j b_j u[m-j] + u[m],

so the transfer function is T(z) = (1 + sum_j b_j z^-j) / (1 - sum_i a_i z^-i).
AR fitting uses the autocorrelation method (Levinson-Durbin), which is
minimum phase by construction.  ARMA fitting uses a Hannan-Rissanen start
followed by damped Gauss-Newton refinement of the one-step prediction
error, with both polynomials root-reflected into the unit circle at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

__all__ = [
    "ArmaModel",
    "estimate_ar",
    "estimate_arma",
    "enforce_minimum_phase",
]

MAX_ROOT_RADIUS = 1.0 - 1e-6  # post-fit clip keeps the cepstral recursion stable


@dataclass(frozen=True)
class ArmaModel:
    """AR coefficients a_1..a_p and MA coefficients b_1..b_q of one frame's fit."""

    ar: np.ndarray
    ma: np.ndarray
    noise_variance: float = 1.0
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ar", np.atleast_1d(np.asarray(self.ar, dtype=float)))
        object.__setattr__(self, "ma", np.atleast_1d(np.asarray(self.ma, dtype=float)))
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")

    @property
    def p(self) -> int:
        return self.ar.size

    @property
    def q(self) -> int:
        return self.ma.size

    @property
    def ar_polynomial(self) -> np.ndarray:
        """Denominator polynomial [1, -a_1, ..., -a_p] in powers of z^-1."""
        return np.concatenate(([1.0], -self.ar))

    @property
    def ma_polynomial(self) -> np.ndarray:
        """Numerator polynomial [1, b_1, ..., b_q] in powers of z^-1."""
        return np.concatenate(([1.0], self.ma))

    def poles(self) -> np.ndarray:
        return np.roots(self.ar_polynomial) if self.p else np.zeros(0, dtype=complex)

    def zeros(self) -> np.ndarray:
        return np.roots(self.ma_polynomial) if self.q else np.zeros(0, dtype=complex)

    def is_minimum_phase(self, tol: float = 0.0) -> bool:
        radii = [np.abs(r).max(initial=0.0) for r in (self.poles(), self.zeros())]
        return max(radii) < 1.0 - tol

    def log_magnitude(self, n_points: int = 512) -> np.ndarray:
        """log |T(e^jw)| on an n_points grid over [0, pi)."""
        w, h = sps.freqz(self.ma_polynomial, self.ar_polynomial, worN=n_points)
        return np.log(np.abs(h) + 1e-300)


def _autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.size
    full = np.correlate(x, x, mode="full")
    return full[n - 1 : n + max_lag] / n


def _levinson(r: np.ndarray) -> tuple[np.ndarray, float]:
    """Levinson-Durbin solve of the autocorrelation normal equations.

    Returns prediction coefficients a (s[m] ~ sum a_i s[m-i]) and the final
    per-sample prediction error.
    """
    p = r.size - 1
    alpha = np.zeros(p)  # error-filter coefficients, A(z) = 1 + sum alpha_i z^-i
    err = float(r[0])
    for m in range(1, p + 1):
        if err <= 0.0:
            break
        acc = r[m] + np.dot(alpha[: m - 1], r[m - 1 : 0 : -1])
        k = -acc / err
        alpha[: m - 1] += k * alpha[m - 2 :: -1] if m > 1 else 0.0
        alpha[m - 1] = k
        err *= 1.0 - k * k
    return -alpha, max(err, 0.0)


def estimate_ar(frame: np.ndarray, p: int) -> ArmaModel:
    """Autocorrelation-method linear prediction of order ``p``.

    A zero-energy frame yields all-zero coefficients with zero noise
    variance (flagged via ``converged=False``) rather than an error.
    """
    x = np.asarray(frame, dtype=float).ravel()
    if p < 1:
        raise ValueError("order p must be positive")
    if x.size <= p:
        raise ValueError("frame length must exceed the AR order")
    if not np.any(x):
        return ArmaModel(np.zeros(p), np.zeros(0), 0.0, converged=False)
    r = _autocorrelation(x, p)
    a, err = _levinson(r)
    return ArmaModel(a, np.zeros(0), err)


def _reflect_roots(poly: np.ndarray, clip_radius: float) -> np.ndarray:
    """Reflect roots of a monic polynomial into the unit circle and clip radii."""
    if poly.size <= 1:
        return poly.astype(float)
    roots = np.roots(poly)
    mags = np.abs(roots)
    outside = mags > 1.0
    roots[outside] = 1.0 / np.conj(roots[outside])
    mags = np.abs(roots)
    hot = mags > clip_radius
    roots[hot] *= clip_radius / mags[hot]
    return np.real(np.poly(roots))


def enforce_minimum_phase(m: ArmaModel, clip_radius: float = 1.0 - 1e-9) -> ArmaModel:
    """Replace every root r with |r| >= 1 by 1/conj(r).

    The magnitude spectrum is unchanged up to a constant gain, which is
    irrelevant for cepstral coefficients beyond the zeroth.
    """
    ar_poly = _reflect_roots(m.ar_polynomial, clip_radius)
    ma_poly = _reflect_roots(m.ma_polynomial, clip_radius)
    return ArmaModel(-ar_poly[1:], ma_poly[1:], m.noise_variance, m.converged)


def _prediction_error(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return sps.lfilter(np.concatenate(([1.0], -a)), np.concatenate(([1.0], b)), x)


def _stabilize_ma(b: np.ndarray, clip_radius: float = 0.99) -> np.ndarray:
    """Keep 1 + sum b_j z^-j stable so the inverse filter stays usable."""
    if b.size == 0:
        return b
    poly = _reflect_roots(np.concatenate(([1.0], b)), clip_radius)
    return poly[1:]


def estimate_arma(
    frame: np.ndarray,
    p: int,
    q: int,
    max_iter: int = 50,
    rel_tol: float = 1e-8,
    full_output: bool = False,
):
    """Prediction-error fit of an ARMA(p, q) model to one frame.

    Hannan-Rissanen two-stage regression provides the starting point; damped
    Gauss-Newton minimizes the sum of squared one-step prediction errors with
    step halving, so the objective is nonincreasing by construction.  Both
    polynomials are root-reflected into the unit circle afterwards.

    With ``full_output=True`` returns ``(model, info)`` where ``info`` holds
    the accepted objective values per iteration.
    """
    x = np.asarray(frame, dtype=float).ravel()
    if p < 0 or q < 0 or p + q == 0:
        raise ValueError("orders must be nonnegative with p + q > 0")
    if x.size <= p + q + 1:
        raise ValueError("frame length must exceed p + q + 1")
    if q == 0:
        model = estimate_ar(x, p)
        return (model, {"objective": [], "converged": model.converged}) if full_output else model
    if not np.any(x):
        model = ArmaModel(np.zeros(p), np.zeros(q), 0.0, converged=False)
        return (model, {"objective": [], "converged": False}) if full_output else model

    # Stage 1: long AR for innovation estimates.
    n_long = min(max(20, 2 * (p + q)), max(p + q + 2, x.size // 3))
    long_ar = estimate_ar(x, n_long)
    u = sps.lfilter(long_ar.ar_polynomial, [1.0], x)

    # Stage 2: regress x[m] on lagged x and lagged innovations.
    k0 = max(p, q)
    rows = x.size - k0
    design = np.empty((rows, p + q))
    for i in range(1, p + 1):
        design[:, i - 1] = x[k0 - i : x.size - i]
    for j in range(1, q + 1):
        design[:, p + j - 1] = u[k0 - j : x.size - j]
    theta, *_ = np.linalg.lstsq(design, x[k0:], rcond=None)
    a = theta[:p].copy()
    b = _stabilize_ma(theta[p:].copy())

    e = _prediction_error(x, a, b)
    sse = float(e @ e)
    history = [sse]
    converged = False

    # Stage 3: damped Gauss-Newton on the prediction-error sum of squares.
    for _ in range(max_iter):
        b_poly = np.concatenate(([1.0], b))
        x_b = sps.lfilter([1.0], b_poly, x)
        e_b = sps.lfilter([1.0], b_poly, e)
        jac = np.zeros((x.size, p + q))
        for i in range(1, p + 1):
            jac[i:, i - 1] = -x_b[:-i]
        for j in range(1, q + 1):
            jac[j:, p + j - 1] = -e_b[:-j]
        hess = jac.T @ jac
        hess[np.diag_indices_from(hess)] += 1e-10 * max(np.trace(hess), 1.0)
        try:
            delta = np.linalg.solve(hess, jac.T @ e)
        except np.linalg.LinAlgError:
            break

        accepted = False
        for scale in 2.0 ** -np.arange(11):
            a_new = a - scale * delta[:p]
            b_new = _stabilize_ma(b - scale * delta[p:])
            e_new = _prediction_error(x, a_new, b_new)
            sse_new = float(e_new @ e_new)
            if np.isfinite(sse_new) and sse_new < sse:
                accepted = True
                break
        if not accepted:
            converged = True  # no descent direction left
            break
        rel_gain = (sse - sse_new) / max(sse, 1e-300)
        a, b, e, sse = a_new, b_new, e_new, sse_new
        history.append(sse)
        if rel_gain < rel_tol:
            converged = True
            break

    model = enforce_minimum_phase(
        ArmaModel(a, b, 1.0, converged=converged), clip_radius=MAX_ROOT_RADIUS
    )
    resid = _prediction_error(x, model.ar, model.ma)
    model = ArmaModel(model.ar, model.ma, float(np.mean(resid**2)), converged)
    if full_output:
        return model, {"objective": history, "converged": converged}
    return model
