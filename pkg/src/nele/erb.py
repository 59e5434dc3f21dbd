"""ERB-scaled triangular filterbank: band-energy analysis, interpolation of
per-band gains back to FFT bins, and the power-law feature compression.

Band geometry: 64 centers uniformly spaced on the ERB-rate scale between
0 Hz and Nyquist (both inclusive), triangles with apex 1 at each center and
base spanning the two neighbouring centers, linear in Hz. Adjacent triangles
therefore sum to exactly 1 at every bin (partition of unity), which makes
band analysis followed by gain interpolation energy-exact per frame. Edge
bands are half-triangles clamped at 0 Hz / Nyquist.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonPositiveGain

FEATURE_COMPRESSION_EXPONENT = 1.0 / 6.0


def erb_rate(freq_hz):
    """Glasberg-Moore ERB-rate (perceptually uniform frequency axis)."""
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq_hz, dtype=np.float64))


def erb_rate_to_hz(rate):
    return (10.0 ** (np.asarray(rate, dtype=np.float64) / 21.4) - 1.0) / 0.00437


@dataclass(frozen=True)
class ErbFilterBank:
    """Immutable bank of triangular band amplitudes, shape (n_bands, n_bins)."""

    amplitudes: np.ndarray
    centers_hz: np.ndarray
    sample_rate: int

    @property
    def n_bands(self):
        return self.amplitudes.shape[0]

    @property
    def n_bins(self):
        return self.amplitudes.shape[1]

    def dump_csv(self, path):
        """Debug dump: band index, center Hz, then per-bin amplitudes."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["band", "center_hz"] + ["bin_%d" % k for k in range(self.n_bins)])
            for i in range(self.n_bands):
                writer.writerow(
                    [i, "%.6f" % self.centers_hz[i]] + ["%.9g" % a for a in self.amplitudes[i]]
                )


def build_filterbank(n_bands=64, n_bins=257, sample_rate=16000):
    """Construct the triangular ERB bank. Centers sit at equal ERB-rate steps
    from 0 Hz to Nyquist; the first/last bands keep only the half-triangle
    inside the spectrum. With 64 bands at 16 kHz a few of the lowest bands
    fall between DC and the first bin and stay empty, which is harmless: they
    carry no energy and no interpolation weight."""
    if n_bands < 2:
        raise ValueError("need at least 2 bands")
    nyquist = sample_rate / 2.0
    centers = erb_rate_to_hz(np.linspace(erb_rate(0.0), erb_rate(nyquist), n_bands))
    centers[0] = 0.0
    centers[-1] = nyquist
    bin_freqs = np.arange(n_bins) * nyquist / (n_bins - 1)
    amplitudes = np.zeros((n_bands, n_bins))
    for i in range(n_bands):
        center = centers[i]
        left = centers[i - 1] if i > 0 else None
        right = centers[i + 1] if i < n_bands - 1 else None
        g = np.zeros(n_bins)
        if left is not None:
            rising = (bin_freqs >= left) & (bin_freqs < center)
            g[rising] = (bin_freqs[rising] - left) / (center - left)
        else:
            g[bin_freqs < center] = 1.0
        if right is not None:
            falling = (bin_freqs >= center) & (bin_freqs < right)
            g[falling] = (right - bin_freqs[falling]) / (right - center)
        else:
            g[bin_freqs >= center] = 1.0
        amplitudes[i] = g
    return ErbFilterBank(amplitudes=amplitudes, centers_hz=centers, sample_rate=sample_rate)


def band_energies(spec, bank):
    """Per-frame band energies: E(m, i) = sum_k g_i(k) |X(m, k)|^2."""
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != bank.n_bins:
        raise DimensionMismatch(
            "spectrogram shape %s, filterbank expects (frames, %d)"
            % ((spec.shape,), bank.n_bins)
        )
    power = np.abs(spec) ** 2
    return power @ bank.amplitudes.T


def psd_band_energies(psd, bank):
    """Same reduction for an already-squared PSD matrix."""
    psd = np.asarray(psd, dtype=np.float64)
    if psd.ndim != 2 or psd.shape[1] != bank.n_bins:
        raise DimensionMismatch(
            "PSD shape %s, filterbank expects (frames, %d)" % ((psd.shape,), bank.n_bins)
        )
    return psd @ bank.amplitudes.T


def interpolate_gains(gains, bank):
    """Per-bin amplitude gains from per-band gains:
    a_hat(m, k) = sqrt(sum_i g_i(k) a(m, i)^2).

    The squared-domain interpolation makes the modified frame energy
    sum_k a_hat^2 |X|^2 equal sum_i a^2 E(m, i) exactly (partition of unity).
    """
    gains = np.asarray(gains, dtype=np.float64)
    if gains.ndim != 2 or gains.shape[1] != bank.n_bands:
        raise DimensionMismatch(
            "gain matrix has shape %s, expected (frames, %d)" % ((gains.shape,), bank.n_bands)
        )
    if np.any(gains <= 0.0) or not np.all(np.isfinite(gains)):
        raise NonPositiveGain("band gains must be positive and finite")
    return np.sqrt((gains**2) @ bank.amplitudes)


def compress_features(bands, exponent=FEATURE_COMPRESSION_EXPONENT):
    """Power-law compression of band energies for the network input. Never
    applied to the energies used in equal-power normalization."""
    bands = np.asarray(bands, dtype=np.float64)
    if np.any(bands < 0.0):
        raise ValueError("band energies must be non-negative")
    return bands**exponent
