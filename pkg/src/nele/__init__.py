"""Near-end listening enhancement: causal ERB-band speech energy
reallocation under an equal-power constraint, with the evaluation,
simulation and baseline machinery around it."""

from . import errors
from .dsp import StftConfig, istft, mix_observed, read_wav, stft, write_wav
from .engine import Enhancer
from .erb import (
    ErbFilterBank,
    band_energies,
    build_filterbank,
    compress_features,
    interpolate_gains,
)
from .generator import Generator, GeneratorState
from .metrics import (
    LOGISTIC_PARAMS,
    LogisticParams,
    MetricScore,
    align_signals,
    estoi,
    ltas_gain,
    normalize_score,
    rms_ratio_stats,
    score_estoi,
)
from .noise import NoiseTracker, estimate_noise_psd, inject_estimation_error
from .normalize import (
    compute_soft_gamma,
    normalize_frame,
    normalize_soft,
    normalize_utterance,
)
from .ssdrc import SsdrcConfig, SsdrcLite, dynamic_range_compression, spectral_shaping, ssdrc
from .weights import (
    GeneratorWeights,
    load_matrix,
    load_weights,
    random_weights,
    save_matrix,
    save_weights,
    serialize_weights,
)

__version__ = "0.1.0"

__all__ = [
    "Enhancer",
    "ErbFilterBank",
    "Generator",
    "GeneratorState",
    "GeneratorWeights",
    "LOGISTIC_PARAMS",
    "LogisticParams",
    "MetricScore",
    "NoiseTracker",
    "SsdrcConfig",
    "SsdrcLite",
    "StftConfig",
    "align_signals",
    "band_energies",
    "build_filterbank",
    "compress_features",
    "compute_soft_gamma",
    "dynamic_range_compression",
    "errors",
    "estimate_noise_psd",
    "estoi",
    "inject_estimation_error",
    "interpolate_gains",
    "istft",
    "load_matrix",
    "load_weights",
    "ltas_gain",
    "mix_observed",
    "normalize_frame",
    "normalize_score",
    "normalize_soft",
    "normalize_utterance",
    "random_weights",
    "read_wav",
    "rms_ratio_stats",
    "save_matrix",
    "save_weights",
    "score_estoi",
    "serialize_weights",
    "spectral_shaping",
    "ssdrc",
    "stft",
    "write_wav",
]
