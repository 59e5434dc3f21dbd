"""Quality proxy standing in for the out-of-scope quality metrics: a
log-spectral distance mapped through the same logistic shape used for score
normalization, with (a, b) = (1.2, 2.0) documented here. Both signals are
RMS-normalized first, so the score is invariant to global scaling; identical
signals have distance 0 and hence the curve's maximum value."""

import numpy as np

from nele import stft
from nele.metrics import normalize_score

PROXY_PARAMS = (1.2, 2.0)  # a > 0: decreasing in distance, max at distance 0
SPEC_FLOOR = 1e-12


def log_spectral_distance(enhanced, clean):
    enhanced = np.asarray(enhanced, dtype=np.float64)
    clean = np.asarray(clean, dtype=np.float64)
    n = min(enhanced.size, clean.size)
    enhanced, clean = enhanced[:n], clean[:n]
    scale_e = np.sqrt(np.mean(enhanced**2))
    scale_c = np.sqrt(np.mean(clean**2))
    if scale_e == 0.0 or scale_c == 0.0:
        return np.inf
    power_e = np.maximum(np.abs(stft(enhanced / scale_e)) ** 2, SPEC_FLOOR)
    power_c = np.maximum(np.abs(stft(clean / scale_c)) ** 2, SPEC_FLOOR)
    diff_db = 10.0 * np.log10(power_e) - 10.0 * np.log10(power_c)
    return float(np.mean(np.sqrt(np.mean(diff_db**2, axis=1))))


def quality_proxy(enhanced, clean):
    """Normalized quality score in (0, 1); higher is better."""
    return normalize_score(log_spectral_distance(enhanced, clean), PROXY_PARAMS)
