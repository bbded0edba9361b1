"""Synthetic measurements of a steady profile and FFT smoothing machinery.

Noise is multiplicative and uniform per node, clamped to keep densities
nonnegative.  The smoother applies the frequency response
``1/sqrt(1 + alpha^2 xi^2)`` (and ``i xi`` times it for the derivative)
through a real FFT on a zero-padded copy of the signal; a linear ramp
matching the right-edge value is removed first and handled in closed form,
so profiles with a small residual tail do not ring at the pad junction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .direct import EigenPair
from .model import Grid, GridFunction


@dataclass(frozen=True)
class Measurement:
    """Noisy observation of a steady profile and its growth rate."""

    profile: GridFunction
    malthus: float
    epsilon: float
    seed: int

    @property
    def grid(self) -> Grid:
        return self.profile.grid


@dataclass(frozen=True)
class MollifiedPair:
    """Smoothed signal and smoothed derivative at one filter width."""

    smoothed: GridFunction
    derivative: GridFunction
    alpha: float


def add_noise(pair: EigenPair, epsilon: float, seed: int,
              perturb_malthus: bool = False) -> Measurement:
    """Per-node multiplicative noise ``n_i (1 + l_i eps)`` with ``l_i ~ U[-1/2, 1/2]``.

    Deterministic for a given seed.  ``epsilon = 0`` returns the input
    values unchanged.  The growth rate is passed through exactly unless
    ``perturb_malthus`` is set, in which case it gets one extra draw of the
    same multiplicative model (drawn after the node noise, so the profile
    realization for a seed does not depend on the flag).
    """
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"noise level must lie in [0, 1], got {epsilon}")
    seed = int(seed)
    if epsilon == 0.0:
        return Measurement(pair.profile, pair.malthus, 0.0, seed)
    rng = np.random.default_rng(seed)
    shifts = rng.random(pair.profile.grid.npoints) - 0.5
    values = np.maximum(pair.profile.values * (1.0 + shifts * epsilon), 0.0)
    malthus = pair.malthus
    if perturb_malthus:
        malthus *= 1.0 + (rng.random() - 0.5) * epsilon
    return Measurement(GridFunction(pair.profile.grid, values), malthus, float(epsilon), seed)


def _spectral_apply(values: np.ndarray, dx: float, alpha: float, pad_factor: int):
    n = values.size
    if pad_factor > 1:
        slope = values[-1] / ((n - 1) * dx)
        ramp = slope * np.arange(n) * dx
    else:
        slope = 0.0
        ramp = np.zeros(n)
    padded_len = pad_factor * n
    xi = 2.0 * np.pi * np.fft.rfftfreq(padded_len, d=dx)
    spectrum = np.fft.rfft(values - ramp, n=padded_len)
    response = 1.0 / np.sqrt(1.0 + (alpha * xi) ** 2)
    smoothed = np.fft.irfft(response * spectrum, n=padded_len)[:n] + ramp
    deriv_response = 1j * xi * response
    if padded_len % 2 == 0:
        deriv_response[-1] = 0.0  # odd multiplier has no real Nyquist component
    derivative = np.fft.irfft(deriv_response * spectrum, n=padded_len)[:n] + slope
    return smoothed, derivative


def mollify(f: GridFunction, alpha: float, pad_factor: int = 2) -> MollifiedPair:
    """Smooth a grid function and differentiate it spectrally.

    ``pad_factor`` controls the zero extension appended before the FFT
    (default 2, which suppresses circular wrap-around on decaying
    profiles).  ``pad_factor = 1`` treats the samples as one period and
    realizes the frequency response exactly on periodic inputs; the
    detrending step is skipped in that mode.
    """
    if alpha <= 0:
        raise ValueError(f"filter width must be positive, got {alpha}")
    if pad_factor < 1:
        raise ValueError("pad_factor must be at least 1")
    smoothed, derivative = _spectral_apply(f.values, f.grid.dx, float(alpha), int(pad_factor))
    return MollifiedPair(
        smoothed=GridFunction(f.grid, smoothed),
        derivative=GridFunction(f.grid, derivative),
        alpha=float(alpha),
    )
