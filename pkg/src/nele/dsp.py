"""Framing, STFT/iSTFT, WAV I/O and the noisy-reverberant observation model.

Windowing policy
----------------
The analysis/synthesis taper pair is the square root of a periodic (DFT-even)
Hann window on each side, so the effective analysis-times-synthesis window is
a periodic Hann. At 50% hop the shifted Hann windows sum to exactly 1, which
gives three properties the rest of the engine leans on:

* the applied window squared is constant-overlap-add (COLA) on the interior,
* ``istft(stft(x))`` reconstructs interior samples exactly with no division,
* per-frame energies sum to the time-domain energy (Parseval bookkeeping).

Framing policy: the signal is zero-padded by ``window_length - hop`` samples
at the head (and as needed at the tail) so every input sample is covered by
two frames; ``istft`` trims the same amount. Frame count is
``ceil((n_samples + window_length - hop) / hop)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import fftconvolve

from .errors import (
    MalformedSpectrogram,
    SilentNoise,
    SilentSpeech,
    UnsupportedFormat,
    WrongSampleRate,
)
from .validation import SAMPLE_RATE, as_signal, signal_energy


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters. Defaults are the engine contract: 32 ms window,
    16 ms hop at 16 kHz, 512-point FFT, periodic Hann taper."""

    window_length: int = 512
    hop: int = 256
    fft_size: int = 512

    def __post_init__(self):
        if self.hop * 2 != self.window_length:
            raise ValueError("hop must be window_length / 2 (50% overlap contract)")
        if self.fft_size < self.window_length:
            raise ValueError("fft_size must be >= window_length")

    @property
    def n_bins(self):
        return self.fft_size // 2 + 1

    @property
    def pad(self):
        return self.window_length - self.hop


def periodic_hann(n):
    """Periodic (DFT-even) Hann window of length n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def analysis_window(config):
    """Root-Hann taper applied on analysis and again on synthesis."""
    return np.sqrt(periodic_hann(config.window_length))


def num_frames(n_samples, config):
    return int(np.ceil((n_samples + config.pad) / config.hop))


def stft(x, config=None):
    """Complex spectrogram of a 16 kHz signal, shape (frames, fft_size//2+1)."""
    config = config or StftConfig()
    x = as_signal(x)
    m = num_frames(x.size, config)
    padded = np.zeros((m - 1) * config.hop + config.window_length)
    padded[config.pad : config.pad + x.size] = x
    window = analysis_window(config)
    starts = np.arange(m) * config.hop
    frames = np.stack([padded[s : s + config.window_length] for s in starts])
    return np.fft.rfft(frames * window, n=config.fft_size, axis=1)


def istft(spec, config=None, length=None):
    """Weighted overlap-add resynthesis.

    Returns ``(frames - 1) * hop`` samples (head/tail padding trimmed); pass
    ``length`` to cut to an exact sample count.
    """
    config = config or StftConfig()
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != config.n_bins or spec.shape[0] < 1:
        raise MalformedSpectrogram(
            "expected (frames, %d) complex matrix, got shape %s" % (config.n_bins, (spec.shape,))
        )
    if not np.all(np.isfinite(spec)):
        raise MalformedSpectrogram("spectrogram contains non-finite values")
    m = spec.shape[0]
    window = analysis_window(config)
    frames = np.fft.irfft(spec, n=config.fft_size, axis=1)[:, : config.window_length]
    out = np.zeros((m - 1) * config.hop + config.window_length)
    for i in range(m):
        s = i * config.hop
        out[s : s + config.window_length] += frames[i] * window
    out = out[config.pad : config.pad + (m - 1) * config.hop]
    if length is not None:
        if length > out.size:
            out = np.pad(out, (0, length - out.size))
        out = out[:length]
    return out


def spectrogram_energy(spec, config=None):
    """Time-domain energy implied by a one-sided spectrogram.

    Interior bins count twice (conjugate symmetry), all divided by fft_size.
    For our root-Hann analysis this equals the windowed time-domain energy,
    i.e. the signal energy on the interior.
    """
    config = config or StftConfig()
    power = np.abs(np.asarray(spec)) ** 2
    weights = np.full(power.shape[1], 2.0)
    weights[0] = 1.0
    if config.fft_size % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum(power * weights) / config.fft_size)


def mix_observed(speech, rir, noise, snr_db, rng=None):
    """Observed signal: speech convolved with the room response plus noise
    scaled to the requested SNR.

    Energies are taken over the full utterance (no activity gating). Noise
    shorter than the reverberant speech is tiled; longer noise is cut at a
    random offset when ``rng`` is given, else at offset 0.
    """
    speech = as_signal(speech, "speech")
    rir = as_signal(rir, "rir")
    noise = as_signal(noise, "noise")
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    reverberant = fftconvolve(speech, rir, mode="full")
    n = reverberant.size
    if noise.size < n:
        noise = np.tile(noise, int(np.ceil(n / noise.size)))
    if noise.size > n:
        offset = int(rng.integers(0, noise.size - n + 1)) if rng is not None else 0
        noise = noise[offset : offset + n]
    e_speech = signal_energy(reverberant)
    e_noise = signal_energy(noise)
    if e_speech <= 0.0:
        raise SilentSpeech("speech (after RIR) has zero energy, cannot set SNR")
    if e_noise <= 0.0:
        raise SilentNoise("noise has zero energy, cannot be SNR-scaled")
    gain = np.sqrt(e_speech / (e_noise * 10.0 ** (snr_db / 10.0)))
    return reverberant + gain * noise


def read_wav(path):
    """Read a mono 16 kHz WAV (16-bit PCM or 32-bit float) as float64 samples.

    16-bit data is scaled by 1/32768; float data is returned as-is.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise UnsupportedFormat("cannot parse %s: %s" % (path, exc))
    if data.ndim != 1:
        raise UnsupportedFormat("%s is not mono (%d channels)" % (path, data.shape[1]))
    if rate != SAMPLE_RATE:
        raise WrongSampleRate(
            "%s has sample rate %d, engine requires %d Hz (resampling is out of scope)"
            % (path, rate, SAMPLE_RATE)
        )
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise UnsupportedFormat("%s: unsupported sample format %s" % (path, data.dtype))


def write_wav(path, x, subtype="float32"):
    """Write a mono 16 kHz WAV. ``float32`` round-trips float data exactly;
    ``pcm16`` quantizes to int16 (scale 32768, clipped to the int16 range, so
    the round trip through read_wav is exact to half an LSB)."""
    x = as_signal(x)
    if subtype == "float32":
        wavfile.write(path, SAMPLE_RATE, x.astype(np.float32))
    elif subtype == "pcm16":
        quantized = np.clip(np.round(x * 32768.0), -32768, 32767)
        wavfile.write(path, SAMPLE_RATE, quantized.astype(np.int16))
    else:
        raise UnsupportedFormat("unknown WAV subtype %r" % subtype)
