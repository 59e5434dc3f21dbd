"""End-to-end enhancement engine with a scikit-learn style surface.

The pipeline per utterance: STFT -> ERB band energies -> 1/6-power features
(speech and estimated-noise) -> causal generator -> energy normalization ->
gain interpolation to bins -> spectral multiply -> iSTFT.

`Enhancer` follows the estimator idiom: constructor stores parameters
verbatim (get_params/set_params work), `fit` materializes the filterbank and
weights (and, for soft mode without an explicit scale, calibrates gamma on a
corpus), `transform`/`enhance` run the pipeline. Everything fitted is
immutable afterwards, so one fitted instance can serve many threads.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dsp import StftConfig, istft, stft
from .erb import band_energies, build_filterbank, compress_features, interpolate_gains, psd_band_energies
from .errors import BadErrorRate, BadGamma
from .generator import Generator
from .noise import PSD_FLOOR, estimate_noise_psd, inject_estimation_error
from .normalize import compute_soft_gamma, normalize_frame, normalize_soft, normalize_utterance
from .validation import as_signal, signal_energy
from .weights import GeneratorWeights, load_weights

MODES = ("utterance", "frame", "soft")


def _fit_frame_count(psd, n_frames):
    """Cut or extend (repeating the last row) a PSD matrix to n_frames."""
    psd = np.asarray(psd, dtype=np.float64)
    if psd.shape[0] >= n_frames:
        return psd[:n_frames]
    tail = np.repeat(psd[-1:], n_frames - psd.shape[0], axis=0)
    return np.vstack([psd, tail])


class Enhancer(BaseEstimator, TransformerMixin):
    """Near-end intelligibility enhancer.

    Parameters
    ----------
    weights : path, GeneratorWeights or None
        Trained generator weights. None runs unit gains (identity path).
    mode : {"utterance", "frame", "soft"}
        Energy normalization strategy. "utterance" is exact equal-power but
        non-causal; "frame" and "soft" are causal.
    gamma : float or None
        Static scale for soft mode. If None, fit() calibrates it from the
        corpus passed as X (iterable of (speech, noise_reference) pairs,
        noise may be None).
    error_rate : float
        Percentage of noise-PSD bins replaced by random values (robustness
        corruption), in [0, 100].
    seed : int or None
        RNG seed for the error injection.
    identity_gains : bool
        Debug bypass: force unit raw gains regardless of weights.
    """

    def __init__(self, weights=None, mode="utterance", gamma=None, error_rate=0.0,
                 seed=None, identity_gains=False):
        self.weights = weights
        self.mode = mode
        self.gamma = gamma
        self.error_rate = error_rate
        self.seed = seed
        self.identity_gains = identity_gains

    def fit(self, X=None, y=None):
        if self.mode not in MODES:
            raise ValueError("mode must be one of %s, got %r" % (MODES, self.mode))
        if not (0.0 <= self.error_rate <= 100.0):
            raise BadErrorRate("error rate %r not in [0, 100]" % (self.error_rate,))
        self.stft_config_ = StftConfig()
        self.filterbank_ = build_filterbank(n_bins=self.stft_config_.n_bins)
        if self.weights is None or self.identity_gains:
            self.generator_ = None
        else:
            weights = self.weights
            if not isinstance(weights, GeneratorWeights):
                weights = load_weights(weights)
            self.generator_ = Generator(weights)
        self.gamma_ = self.gamma
        if self.mode == "soft" and self.gamma_ is None:
            if X is None:
                raise BadGamma("soft mode needs gamma or a calibration corpus in fit(X)")
            self.gamma_ = self._calibrate_gamma(X)
        return self

    def _ensure_fitted(self):
        if not hasattr(self, "filterbank_"):
            self.fit()

    def _raw_gains(self, spec, energies, noise=None, noise_psd=None):
        n_frames = spec.shape[0]
        if noise_psd is not None:
            psd = np.maximum(np.asarray(noise_psd, dtype=np.float64), PSD_FLOOR)
        elif noise is not None:
            psd = estimate_noise_psd(noise, self.stft_config_)
        else:
            psd = np.full((n_frames, self.stft_config_.n_bins), PSD_FLOOR)
        psd = _fit_frame_count(psd, n_frames)
        if self.error_rate > 0.0:
            psd = inject_estimation_error(psd, self.error_rate, seed=self.seed)
        if self.generator_ is None:
            return np.ones_like(energies), psd
        speech_feats = compress_features(energies)
        noise_feats = compress_features(psd_band_energies(psd, self.filterbank_))
        return self.generator_.forward_utterance(speech_feats, noise_feats), psd

    def _normalize(self, raw_gains, energies):
        if self.mode == "utterance":
            return normalize_utterance(raw_gains, energies)
        if self.mode == "frame":
            return normalize_frame(raw_gains, energies)
        if self.gamma_ is None:
            raise BadGamma("soft mode used before gamma was set or calibrated")
        return normalize_soft(raw_gains, self.gamma_)

    def _calibrate_gamma(self, corpus):
        samples = []
        for item in corpus:
            speech, noise = item if isinstance(item, tuple) else (item, None)
            speech = as_signal(speech, "speech")
            spec = stft(speech, self.stft_config_)
            energies = band_energies(spec, self.filterbank_)
            raw, _ = self._raw_gains(spec, energies, noise=noise)
            samples.append((raw, energies))
        return compute_soft_gamma(samples)

    def enhance(self, speech, noise=None, noise_psd=None, return_gains=False):
        """Enhance one utterance. `noise` is a reference-microphone signal;
        `noise_psd` is a precomputed W^2(m,k) matrix (takes precedence).

        In utterance mode the output waveform is finally scaled to the exact
        input energy: the band-domain constraint fixes the spectrogram
        energy, and the scalar trim (order 1%) absorbs the overlap-add cross
        terms of resynthesis so equal power holds end to end.
        """
        self._ensure_fitted()
        speech = as_signal(speech, "speech")
        spec = stft(speech, self.stft_config_)
        energies = band_energies(spec, self.filterbank_)
        raw, _ = self._raw_gains(spec, energies, noise=noise, noise_psd=noise_psd)
        gains = self._normalize(raw, energies)
        per_bin = interpolate_gains(gains, self.filterbank_)
        out = istft(spec * per_bin, self.stft_config_, length=speech.size)
        if self.mode == "utterance":
            e_out = signal_energy(out)
            if e_out > 0.0:
                out = out * np.sqrt(signal_energy(speech) / e_out)
        return (out, gains) if return_gains else out

    def transform(self, X):
        """X: a 1-D signal, a (speech, noise) pair, or a list of either."""
        self._ensure_fitted()
        if isinstance(X, np.ndarray) and X.ndim == 1:
            return self.enhance(X)
        if isinstance(X, tuple):
            return self.enhance(X[0], noise=X[1])
        return [self.transform(item) for item in X]
