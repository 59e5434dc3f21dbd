"""Noise PSD estimation from a reference microphone, plus controlled
corruption of the estimate for robustness studies.

The estimator is a documented MCRA-style minima tracker, not the full
minima-controlled-recursive-averaging family: the periodogram is recursively
smoothed (constant 0.8), a sliding-window minimum (~1.5 s) tracks the noise
floor through speech, and a fixed bias factor 1.66 compensates the low bias
of the minimum statistic. Estimation fidelity is deliberately not
load-bearing here; downstream the system tolerates large PSD errors.
"""

import numpy as np

from .dsp import StftConfig, stft
from .errors import BadErrorRate, SignalTooShort
from .validation import as_signal

PSD_FLOOR = 1e-10
SMOOTHING = 0.8
BIAS_COMPENSATION = 1.66
MIN_WINDOW_FRAMES = 90  # ~1.5 s of 16 ms hops


class NoiseTracker:
    """Streaming per-stream estimator; one instance per stream, not shared."""

    def __init__(self, n_bins=257, smoothing=SMOOTHING, bias=BIAS_COMPENSATION,
                 window_frames=MIN_WINDOW_FRAMES):
        self.n_bins = n_bins
        self.smoothing = smoothing
        self.bias = bias
        self.window_frames = window_frames
        self._smoothed = None
        self._history = []

    def update(self, power_frame):
        """Feed one periodogram frame |Y(m,k)|^2; returns the floored PSD
        estimate for this frame (causal: uses frames <= m only)."""
        power_frame = np.asarray(power_frame, dtype=np.float64)
        if self._smoothed is None:
            self._smoothed = power_frame.copy()
        else:
            self._smoothed = self.smoothing * self._smoothed + (1.0 - self.smoothing) * power_frame
        self._history.append(self._smoothed.copy())
        if len(self._history) > self.window_frames:
            self._history.pop(0)
        floor_track = np.min(np.stack(self._history), axis=0)
        return np.maximum(self.bias * floor_track, PSD_FLOOR)


def estimate_noise_psd(reference, config=None):
    """Causal noise PSD matrix W^2(m,k) from a reference signal."""
    config = config or StftConfig()
    reference = as_signal(reference, "reference")
    if reference.size < 2 * config.window_length:
        raise SignalTooShort(
            "reference must be at least two windows (%d samples) long" % (2 * config.window_length)
        )
    power = np.abs(stft(reference, config)) ** 2
    tracker = NoiseTracker(n_bins=config.n_bins)
    return np.stack([tracker.update(frame) for frame in power])


def inject_estimation_error(psd, error_rate_percent, seed=None):
    """Replace each PSD bin, independently with probability error_rate/100,
    by exp(N) where N is Gaussian with the mean and variance of log(PSD)
    over the whole matrix. Deterministic given the seed; rate 0 is identity.
    """
    if not (0.0 <= error_rate_percent <= 100.0):
        raise BadErrorRate("error rate %r not in [0, 100]" % (error_rate_percent,))
    psd = np.maximum(np.asarray(psd, dtype=np.float64), PSD_FLOOR)
    if error_rate_percent == 0.0:
        return psd.copy()
    log_psd = np.log(psd)
    mean = float(np.mean(log_psd))
    std = float(np.std(log_psd))
    rng = np.random.default_rng(seed)
    mask = rng.random(psd.shape) < error_rate_percent / 100.0
    corrupted = psd.copy()
    corrupted[mask] = np.exp(mean + std * rng.standard_normal(int(mask.sum())))
    return np.maximum(corrupted, PSD_FLOOR)
