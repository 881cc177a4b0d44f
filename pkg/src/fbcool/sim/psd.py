"""Welch spectra in the single-sided angular normalization, and noise sources."""

from __future__ import annotations

import math

import numpy as np
from scipy import signal

from ..errors import ValidationError
from ..noise import NoiseSpectrum

__all__ = ["estimate_psd", "white_sigma", "gaussian_kernel", "ColoredNoise", "MIN_SERIES"]

MIN_SERIES = 2**10


def white_sigma(density, dt):
    """Per-sample standard deviation for white noise of density S: var = pi S / dt."""
    if density < 0:
        raise ValidationError("density must be non-negative")
    return math.sqrt(math.pi * density / dt)


def estimate_psd(series, dt, nperseg=None, source="estimate") -> NoiseSpectrum:
    """Welch-averaged single-sided PSD S(omega), with integral over omega = variance.

    ``series`` may be 1-D or 2-D with time along the first axis; columns are
    treated as independent records and their spectra averaged.
    """
    x = np.asarray(series, dtype=float)
    if x.shape[0] < MIN_SERIES:
        raise ValidationError(f"series too short for a PSD estimate ({x.shape[0]} < {MIN_SERIES})")
    if nperseg is None:
        nperseg = min(x.shape[0], max(MIN_SERIES // 4, 2 ** int(math.log2(x.shape[0] // 8))))
    f, p = signal.welch(x, fs=1.0 / dt, nperseg=nperseg, axis=0, detrend="constant")
    if p.ndim > 1:
        p = p.reshape(p.shape[0], -1).mean(axis=1)
    return NoiseSpectrum(2.0 * math.pi * f, p / (2.0 * math.pi), source)


def gaussian_kernel(width_omega, dt, span=6.0):
    """FIR taps whose squared response is exp(-omega^2 / width_omega^2), unit DC gain."""
    tau = 1.0 / width_omega
    half = max(1, int(math.ceil(span * tau / dt)))
    t = dt * np.arange(-half, half + 1)
    h = np.exp(-(t**2) / (2.0 * tau**2))
    return h / h.sum()


class ColoredNoise:
    """Gaussian-spectrum noise S(omega) = S0 exp(-omega^2 / width^2) by FIR filtering.

    Keeps filter memory between blocks so consecutive blocks join seamlessly.
    """

    def __init__(self, density0, width_omega, dt, n_channels):
        self.taps = gaussian_kernel(width_omega, dt)
        self.sigma = white_sigma(density0, dt)
        self.zi = np.zeros((len(self.taps) - 1, n_channels))
        self.delay = (len(self.taps) - 1) // 2

    def filter(self, white):
        """Shape a block of unit white noise, time along axis 0."""
        out, self.zi = signal.lfilter(self.taps, [1.0], self.sigma * white, axis=0, zi=self.zi)
        return out
