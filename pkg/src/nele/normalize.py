"""Energy normalization: turns raw amplification factors into gains that
honor (or approximate) the equal-power constraint.

Three strategies:

* utterance: one global scale so total modified band energy equals the
  original (exact, non-causal — needs the whole utterance);
* frame: the same constraint enforced per frame (causal; silent frames
  pass through with unit gain);
* soft: a fixed precomputed scale, causal but only approximately
  power-preserving.
"""

import numpy as np

from .errors import AllSilentUtterance, BadGamma, EmptyCorpus

SILENCE_FLOOR = 1e-10


def _check(raw_gains, energies):
    raw_gains = np.asarray(raw_gains, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    if raw_gains.shape != energies.shape:
        raise ValueError(
            "gain matrix %s and energies %s differ in shape"
            % ((raw_gains.shape,), (energies.shape,))
        )
    if np.any(energies < 0.0):
        raise ValueError("band energies must be non-negative")
    return raw_gains, energies


def utterance_scale(raw_gains, energies):
    """The global factor g with sum (g*a)^2 E == sum E over the utterance."""
    raw_gains, energies = _check(raw_gains, energies)
    total = float(np.sum(energies))
    if total <= SILENCE_FLOOR:
        raise AllSilentUtterance("utterance has no band energy to preserve")
    weighted = float(np.sum(raw_gains**2 * energies))
    return float(np.sqrt(total / weighted))


def normalize_utterance(raw_gains, energies):
    return utterance_scale(raw_gains, energies) * np.asarray(raw_gains, dtype=np.float64)


def normalize_frame(raw_gains, energies):
    """Per-frame equal power; frames with (near) zero energy keep unit gain."""
    raw_gains, energies = _check(raw_gains, energies)
    frame_total = np.sum(energies, axis=1)
    frame_weighted = np.sum(raw_gains**2 * energies, axis=1)
    out = np.ones_like(raw_gains)
    live = frame_total > SILENCE_FLOOR
    scale = np.sqrt(frame_total[live] / frame_weighted[live])
    out[live] = raw_gains[live] * scale[:, None]
    return out


def normalize_soft(raw_gains, gamma):
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise BadGamma("soft normalization scale must be positive, got %r" % (gamma,))
    return float(gamma) * np.asarray(raw_gains, dtype=np.float64)


def compute_soft_gamma(corpus):
    """Static scale from a corpus of (raw_gains, energies) pairs: the square
    root of the mean per-utterance energy ratio sum E / sum a^2 E."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("need at least one utterance to calibrate the soft scale")
    ratios = [utterance_scale(raw, energies) ** 2 for raw, energies in corpus]
    return float(np.sqrt(np.mean(ratios)))
