"""Objective evaluation: native ESTOI, logistic score normalization, LTAS
gain and RMS-ratio statistics.

ESTOI recipe (the extended short-time intelligibility measure, implemented
in full): both signals are resampled to the metric's native 10 kHz with a
Kaiser-windowed (beta = 5.0) polyphase sinc, frames where the clean signal
sits more than 40 dB below its loudest frame are removed from both signals,
short-time 1/3-octave band envelopes are formed (256-sample Hann frames,
50% overlap, 512-point FFT, 15 bands from 150 Hz), and every 384 ms segment
(30 frames) is row- and column-normalized before correlating clean against
distorted. The final score is the mean segment correlation.

Only ESTOI is computed natively. SIIB/HASPI/PESQ/ViSQOL raw scores can be
imported from CSV and passed through the same logistic normalization; their
internals are out of scope.
"""

import csv
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import correlate, resample_poly
from scipy.signal.windows import hann
from scipy.special import expit

from .dsp import StftConfig, stft
from .errors import EmptyInput, SilentInput, SilentUnmodified, TooShort
from .validation import as_signal, signal_rms

ESTOI_FS = 10000
ESTOI_FRAME = 256
ESTOI_HOP = 128
ESTOI_NFFT = 512
ESTOI_NUM_BANDS = 15
ESTOI_MIN_FREQ = 150.0
ESTOI_SEG = 30
ESTOI_DYN_RANGE = 40.0

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class LogisticParams:
    a: float
    b: float

    def __post_init__(self):
        if self.a == 0.0:
            raise ValueError("logistic slope a must be nonzero")


# (a, b) per metric, chosen upstream to spread raw scores over (0, 1)
LOGISTIC_PARAMS = {
    "SIIB": LogisticParams(-0.06, 32.0),
    "HASPI": LogisticParams(-0.95, 2.8),
    "ESTOI": LogisticParams(-8.0, 0.25),
    "PESQ": LogisticParams(-1.5, 2.5),
    "VISQOL": LogisticParams(-2.5, 2.2),
}


@dataclass(frozen=True)
class MetricScore:
    metric_id: str
    raw: float
    normalized: float


def normalize_score(value, params):
    """f(v) = 1 / (1 + exp(a * (v - b))); strictly monotone, bounded in (0,1)."""
    if isinstance(params, tuple):
        params = LogisticParams(*params)
    return float(expit(-params.a * (float(value) - params.b)))


def _estoi_window():
    # MATLAB-style Hann without the zero endpoints
    return hann(ESTOI_FRAME + 2, sym=True)[1:-1]


def _frame_starts(n):
    return range(0, n - ESTOI_FRAME + 1, ESTOI_HOP)


def _remove_silent_frames(clean, distorted):
    """Drop frames whose clean-signal energy is more than 40 dB below the
    loudest frame; both signals keep the same frame set and are rebuilt by
    overlap-add."""
    window = _estoi_window()
    starts = list(_frame_starts(clean.size))
    if not starts:
        raise TooShort("signal shorter than one analysis frame")
    clean_frames = np.stack([window * clean[s : s + ESTOI_FRAME] for s in starts])
    dist_frames = np.stack([window * distorted[s : s + ESTOI_FRAME] for s in starts])
    energies_db = 20.0 * np.log10(np.linalg.norm(clean_frames, axis=1) + EPS)
    mask = energies_db > np.max(energies_db) - ESTOI_DYN_RANGE
    clean_frames = clean_frames[mask]
    dist_frames = dist_frames[mask]
    n_out = (clean_frames.shape[0] - 1) * ESTOI_HOP + ESTOI_FRAME
    clean_out = np.zeros(n_out)
    dist_out = np.zeros(n_out)
    for i in range(clean_frames.shape[0]):
        s = i * ESTOI_HOP
        clean_out[s : s + ESTOI_FRAME] += clean_frames[i]
        dist_out[s : s + ESTOI_FRAME] += dist_frames[i]
    return clean_out, dist_out


def _third_octave_matrix():
    """Boolean (bands, bins) matrix grouping FFT bins into 1/3-octave bands."""
    bin_freqs = np.arange(ESTOI_NFFT // 2 + 1) * ESTOI_FS / ESTOI_NFFT
    centers = ESTOI_MIN_FREQ * 2.0 ** (np.arange(ESTOI_NUM_BANDS) / 3.0)
    low = centers * 2.0 ** (-1.0 / 6.0)
    high = centers * 2.0 ** (1.0 / 6.0)
    obm = np.zeros((ESTOI_NUM_BANDS, bin_freqs.size))
    for j in range(ESTOI_NUM_BANDS):
        lo = int(np.argmin(np.abs(bin_freqs - low[j])))
        hi = int(np.argmin(np.abs(bin_freqs - high[j])))
        obm[j, lo:hi] = 1.0
    return obm


def _band_envelopes(x):
    window = _estoi_window()
    starts = list(_frame_starts(x.size))
    frames = np.stack([window * x[s : s + ESTOI_FRAME] for s in starts])
    spec = np.fft.rfft(frames, n=ESTOI_NFFT, axis=1)
    return np.sqrt(np.abs(spec) ** 2 @ _third_octave_matrix().T).T  # (bands, frames)


def _zero_mean_unit_norm(mat, axis):
    centered = mat - np.mean(mat, axis=axis, keepdims=True)
    norms = np.linalg.norm(centered, axis=axis, keepdims=True)
    return np.divide(centered, norms, out=np.zeros_like(centered), where=norms > 0.0)


def _resample_to_native(x, sample_rate):
    if sample_rate == ESTOI_FS:
        return x
    ratio = Fraction(ESTOI_FS, int(sample_rate))
    return resample_poly(x, ratio.numerator, ratio.denominator, window=("kaiser", 5.0))


def estoi(clean, distorted, sample_rate=16000):
    """Raw ESTOI score of `distorted` against the clean reference.

    Signals of unequal length are trimmed to the shorter with a warning.
    Raises TooShort when fewer than 30 analysis frames survive silent-frame
    removal (roughly 0.4 s of active speech).
    """
    clean = as_signal(clean, "clean")
    distorted = as_signal(distorted, "distorted")
    if clean.size != distorted.size:
        warnings.warn("length mismatch (%d vs %d), trimming" % (clean.size, distorted.size))
        n = min(clean.size, distorted.size)
        clean, distorted = clean[:n], distorted[:n]
    clean = _resample_to_native(clean, sample_rate)
    distorted = _resample_to_native(distorted, sample_rate)
    if clean.size < ESTOI_FRAME:
        raise TooShort("need at least %d samples at 10 kHz" % ESTOI_FRAME)
    clean, distorted = _remove_silent_frames(clean, distorted)
    clean_bands = _band_envelopes(clean)
    dist_bands = _band_envelopes(distorted)
    n_frames = clean_bands.shape[1]
    if n_frames < ESTOI_SEG:
        raise TooShort(
            "only %d active frames, need %d for one segment" % (n_frames, ESTOI_SEG)
        )
    total = 0.0
    n_segments = n_frames - ESTOI_SEG + 1
    for m in range(n_segments):
        cseg = clean_bands[:, m : m + ESTOI_SEG]
        dseg = dist_bands[:, m : m + ESTOI_SEG]
        cn = _zero_mean_unit_norm(_zero_mean_unit_norm(cseg, axis=1), axis=0)
        dn = _zero_mean_unit_norm(_zero_mean_unit_norm(dseg, axis=1), axis=0)
        total += float(np.sum(cn * dn)) / ESTOI_SEG
    return total / n_segments


def score_estoi(clean, distorted, sample_rate=16000):
    raw = estoi(clean, distorted, sample_rate)
    return MetricScore("ESTOI", raw, normalize_score(raw, LOGISTIC_PARAMS["ESTOI"]))


def align_signals(clean, distorted, max_lag_seconds=0.1, sample_rate=16000):
    """Time-align a (possibly delayed, e.g. reverberant) signal to the clean
    reference by cross-correlation peak search, then trim both to the common
    length. Searches lags within +-max_lag_seconds."""
    clean = as_signal(clean, "clean")
    distorted = as_signal(distorted, "distorted")
    max_lag = int(round(max_lag_seconds * sample_rate))
    corr = correlate(distorted, clean, mode="full")
    lags = np.arange(-clean.size + 1, distorted.size)
    window = np.abs(lags) <= max_lag
    best = int(lags[window][np.argmax(corr[window])])
    if best > 0:
        distorted = distorted[best:]
    elif best < 0:
        clean = clean[-best:]
    n = min(clean.size, distorted.size)
    return clean[:n], distorted[:n]


LTAS_FLOOR = 1e-10


def ltas(x, config=None):
    """Long-term average spectrum: time-averaged |STFT|^2 per bin."""
    return np.mean(np.abs(stft(x, config or StftConfig())) ** 2, axis=0)


def ltas_gain(signal, reference, config=None):
    """Per-bin 10*log10 ratio of the signal's LTAS over the reference's."""
    signal = as_signal(signal, "signal")
    reference = as_signal(reference, "reference")
    if signal_rms(signal) == 0.0 or signal_rms(reference) == 0.0:
        raise SilentInput("LTAS gain undefined for silent input")
    num = np.maximum(ltas(signal, config), LTAS_FLOOR)
    den = np.maximum(ltas(reference, config), LTAS_FLOOR)
    return 10.0 * np.log10(num / den)


RMS_HIST_BINS = np.round(np.arange(0.5, 1.5 + 1e-12, 0.05), 10)


def rms_ratio_stats(pairs):
    """RMS(enhanced)/RMS(unmodified) per pair, with mean/std and a histogram
    over [0.5, 1.5] in 0.05 steps (ratios outside the range leave the
    histogram but still count in mean/std)."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no signal pairs given")
    ratios = []
    for enhanced, unmodified in pairs:
        denom = signal_rms(as_signal(unmodified, "unmodified"))
        if denom == 0.0:
            raise SilentUnmodified("unmodified signal has zero RMS")
        ratios.append(signal_rms(as_signal(enhanced, "enhanced")) / denom)
    ratios = np.asarray(ratios)
    counts, edges = np.histogram(ratios, bins=RMS_HIST_BINS)
    return {
        "ratios": ratios,
        "mean": float(np.mean(ratios)),
        "std": float(np.std(ratios)),
        "histogram": (counts, edges),
    }


SCORE_CSV_FIELDS = ["utterance_id", "metric_id", "raw", "normalized"]


def write_scores_csv(path, rows):
    """rows: iterables or dicts with utterance_id, metric_id, raw, normalized."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_CSV_FIELDS)
        for row in rows:
            if isinstance(row, dict):
                row = [row[f] for f in SCORE_CSV_FIELDS]
            writer.writerow(row)


def read_scores_csv(path):
    """Read scores in the shared CSV shape (also the external-metric import
    path for SIIB/HASPI/PESQ/ViSQOL raw scores)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                {
                    "utterance_id": rec["utterance_id"],
                    "metric_id": rec["metric_id"],
                    "raw": float(rec["raw"]),
                    "normalized": float(rec["normalized"]),
                }
            )
    return out
