"""ssdrc-lite: simplified spectral shaping + dynamic range compression.

A deliberately plain stand-in for the rule-based state of the art: a fixed
high-frequency tilt (formant-region emphasis) followed by an attack/release
envelope compressor, with the cascade renormalized to the input RMS so the
baseline plays fair under the equal-power comparison. It ignores the noise
by construction. Not a faithful reproduction of the published algorithm;
"lite" is part of the name on purpose.
"""

from dataclasses import dataclass, fields

import numpy as np
from scipy.signal import fftconvolve, firwin2
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import UnsupportedFormat
from .validation import SAMPLE_RATE, as_signal, signal_rms


@dataclass(frozen=True)
class SsdrcConfig:
    tilt_start_hz: float = 1000.0  # shelving tilt onset
    tilt_db_per_octave: float = 12.0
    tilt_cap_db: float = 12.0
    attack_ms: float = 2.0
    release_ms: float = 20.0
    ratio: float = 2.0  # compression above the median envelope level
    fir_taps: int = 513

    def __post_init__(self):
        if self.attack_ms <= 0 or self.release_ms <= 0:
            raise ValueError("time constants must be positive")
        if self.ratio < 1.0:
            raise ValueError("compression ratio must be >= 1")
        if self.tilt_db_per_octave < 0 or self.tilt_cap_db < 0:
            raise ValueError("tilt must be non-decreasing (non-negative slope and cap)")

    @classmethod
    def from_file(cls, path):
        """Load `key = value` lines; '#' starts a comment; unknown keys fail."""
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UnsupportedFormat("%s:%d: expected key = value" % (path, lineno))
                key, _, value = (part.strip() for part in line.partition("="))
                if key not in known:
                    raise UnsupportedFormat("%s:%d: unknown key %r" % (path, lineno, key))
                values[key] = int(value) if key == "fir_taps" else float(value)
        return cls(**values)


def _tilt_gain_db(freqs_hz, cfg):
    gains = np.zeros_like(freqs_hz, dtype=np.float64)
    above = freqs_hz > cfg.tilt_start_hz
    gains[above] = np.minimum(
        cfg.tilt_db_per_octave * np.log2(freqs_hz[above] / cfg.tilt_start_hz),
        cfg.tilt_cap_db,
    )
    return gains


def shaping_filter(cfg, n_points=512):
    """Linear-phase FIR realizing the configured tilt response."""
    freqs = np.linspace(0.0, SAMPLE_RATE / 2.0, n_points)
    amplitude = 10.0 ** (_tilt_gain_db(freqs, cfg) / 20.0)
    return firwin2(cfg.fir_taps, freqs, amplitude, fs=SAMPLE_RATE)


def spectral_shaping(x, cfg=None):
    cfg = cfg or SsdrcConfig()
    x = as_signal(x)
    # linear phase: 'same' keeps alignment by absorbing the group delay
    return fftconvolve(x, shaping_filter(cfg), mode="same")


def envelope(x, cfg=None, sample_rate=SAMPLE_RATE):
    """Attack/release peak follower of |x|."""
    cfg = cfg or SsdrcConfig()
    attack = np.exp(-1.0 / (sample_rate * cfg.attack_ms * 1e-3))
    release = np.exp(-1.0 / (sample_rate * cfg.release_ms * 1e-3))
    rectified = np.abs(np.asarray(x, dtype=np.float64))
    env = np.empty_like(rectified)
    state = 0.0
    for i, level in enumerate(rectified):
        coef = attack if level > state else release
        state = coef * state + (1.0 - coef) * level
        env[i] = state
    return env


def dynamic_range_compression(x, cfg=None):
    """Compress envelope excursions above the median envelope level at the
    configured ratio; silence and flat envelopes pass through."""
    cfg = cfg or SsdrcConfig()
    x = as_signal(x)
    env = envelope(x, cfg)
    threshold = float(np.median(env))
    if threshold <= 0.0:
        return x.copy()
    gain = np.ones_like(env)
    hot = env > threshold
    gain[hot] = (env[hot] / threshold) ** (1.0 / cfg.ratio - 1.0)
    return x * gain


def ssdrc(x, cfg=None):
    """Shaping then compression, renormalized to the input RMS."""
    cfg = cfg or SsdrcConfig()
    x = as_signal(x)
    in_rms = signal_rms(x)
    if in_rms == 0.0:
        return np.zeros_like(x)
    y = dynamic_range_compression(spectral_shaping(x, cfg), cfg)
    return y * (in_rms / signal_rms(y))


class SsdrcLite(BaseEstimator, TransformerMixin):
    """Estimator wrapper so the baseline drops into sklearn-style pipelines.

    Stateless: fit only materializes the config.
    """

    def __init__(self, tilt_start_hz=1000.0, tilt_db_per_octave=12.0, tilt_cap_db=12.0,
                 attack_ms=2.0, release_ms=20.0, ratio=2.0):
        self.tilt_start_hz = tilt_start_hz
        self.tilt_db_per_octave = tilt_db_per_octave
        self.tilt_cap_db = tilt_cap_db
        self.attack_ms = attack_ms
        self.release_ms = release_ms
        self.ratio = ratio

    def _config(self):
        return SsdrcConfig(
            tilt_start_hz=self.tilt_start_hz,
            tilt_db_per_octave=self.tilt_db_per_octave,
            tilt_cap_db=self.tilt_cap_db,
            attack_ms=self.attack_ms,
            release_ms=self.release_ms,
            ratio=self.ratio,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            self.fit()
        if isinstance(X, np.ndarray) and X.ndim == 1:
            return ssdrc(X, self.config_)
        return [ssdrc(x, self.config_) for x in X]
