"""Shared test helpers."""

import numpy as np
import pytest

from karma.arma import ArmaModel


def random_minimum_phase_model(rng, p: int, q: int, max_radius: float = 0.95) -> ArmaModel:
    """Random minimum-phase ARMA model built from conjugate root pairs.

    A small angular separation between pairs keeps the polynomial
    root-finding oracle well conditioned.
    """

    def polynomial(order):
        roots = []
        angles = []
        for _ in range(order // 2):
            theta = rng.uniform(0.05, np.pi - 0.05)
            for _ in range(50):
                if all(abs(theta - a) > 0.05 for a in angles):
                    break
                theta = rng.uniform(0.05, np.pi - 0.05)
            angles.append(theta)
            radius = rng.uniform(0.1, max_radius)
            roots += [radius * np.exp(1j * theta), radius * np.exp(-1j * theta)]
        if order % 2:
            roots.append(complex(rng.uniform(-max_radius, max_radius)))
        if not roots:
            return np.array([1.0])
        return np.atleast_1d(np.real(np.poly(roots)))

    den = polynomial(p)
    num = polynomial(q)
    return ArmaModel(-den[1:], num[1:], 1.0)


def root_sum_cepstrum(model: ArmaModel, n_coeffs: int) -> np.ndarray:
    """Independent oracle: C_n = (1/n)(sum of pole^n - sum of zero^n)."""
    poles = model.poles()
    zeros = model.zeros()
    out = np.zeros(n_coeffs)
    for n in range(1, n_coeffs + 1):
        pole_sum = np.sum(poles**n) if poles.size else 0.0
        zero_sum = np.sum(zeros**n) if zeros.size else 0.0
        out[n - 1] = float(np.real(pole_sum - zero_sum)) / n
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
