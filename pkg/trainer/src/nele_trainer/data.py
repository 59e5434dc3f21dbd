"""Desk-scale corpus synthesis and per-item feature preparation.

The trainer consumes (clean, noise, snr) triples. Reverberation is left out
of training on purpose (identity room response); the engine is evaluated
under reverberation separately. Everything derived from the primary package
goes through its public surfaces: STFT/banks/metrics/baseline calls, and WAV
manifests on disk for the CLI path.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from nele import (
    build_filterbank,
    band_energies,
    compress_features,
    estimate_noise_psd,
    estoi,
    interpolate_gains,
    istft,
    read_wav,
    ssdrc,
    stft,
    write_wav,
)
from nele.erb import psd_band_energies
from nele.metrics import LOGISTIC_PARAMS, normalize_score

from .qproxy import quality_proxy

SR = 16000


def synth_speech(duration=1.2, seed=0, level=0.1):
    """Harmonic-stack pseudo-speech with syllabic gating and noise bursts."""
    rng = np.random.default_rng(seed)
    n = int(duration * SR)
    t = np.arange(n) / SR
    pitch = 110.0 + 45.0 * np.sin(2 * np.pi * rng.uniform(0.3, 1.0) * t + rng.uniform(0, 6))
    phase = 2 * np.pi * np.cumsum(pitch) / SR
    voiced = np.zeros(n)
    for k in range(1, 12):
        voiced += (1.0 / k) * np.sin(k * phase + rng.uniform(0, 6))
    gate = 2 * np.pi * rng.uniform(2.0, 4.0) * t + rng.uniform(0, 6)
    voiced *= np.clip(np.sin(gate), 0.0, None) ** 1.3
    hiss = lfilter([1.0, -0.96], [1.0], rng.standard_normal(n))
    voiced += 0.3 * hiss * np.clip(-np.sin(gate), 0.0, None) ** 2
    return level * voiced / np.sqrt(np.mean(voiced**2))


def synth_noise(duration=1.2, seed=0, kind="lowpass", level=0.1):
    rng = np.random.default_rng(seed)
    n = int(duration * SR)
    x = rng.standard_normal(n)
    if kind == "lowpass":
        x = lfilter([1.0], [1.0, -0.95], x)
    elif kind == "babble":
        x = sum(synth_speech(duration, seed=seed + 50 + i, level=1.0) for i in range(4))
    elif kind != "white":
        raise ValueError(kind)
    return level * x / np.sqrt(np.mean(x**2))


def build_desk_corpus(n_utterances, noises=("lowpass", "white"), snr_db=-5.0,
                      duration=1.2, seed=0):
    """(clean, noise, snr) triples: each utterance paired with every noise."""
    triples = []
    for i in range(n_utterances):
        clean = synth_speech(duration, seed=seed * 1000 + i)
        for j, kind in enumerate(noises):
            noise = synth_noise(duration, seed=seed * 1000 + 500 + i * 7 + j, kind=kind)
            triples.append((clean, noise, snr_db))
    return triples


def write_corpus(directory, triples):
    """Materialize a corpus as WAVs plus a manifest CSV (clean, noise, snr)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = directory / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clean", "noise", "snr_db"])
        for i, (clean, noise, snr) in enumerate(triples):
            clean_path = directory / ("clean_%03d.wav" % i)
            noise_path = directory / ("noise_%03d.wav" % i)
            write_wav(clean_path, clean)
            write_wav(noise_path, noise)
            writer.writerow([clean_path.name, noise_path.name, "%g" % snr])
    return manifest


def load_manifest(manifest_path):
    manifest_path = Path(manifest_path)
    triples = []
    with open(manifest_path, newline="") as fh:
        for row in csv.DictReader(fh):
            triples.append(
                (
                    read_wav(manifest_path.parent / row["clean"]),
                    read_wav(manifest_path.parent / row["noise"]),
                    float(row["snr_db"]),
                )
            )
    return triples


def scale_noise(clean, noise, snr_db):
    noise = np.tile(noise, int(np.ceil(clean.size / noise.size)))[: clean.size]
    gain = np.sqrt(np.mean(clean**2) / (np.mean(noise**2) * 10.0 ** (snr_db / 10.0)))
    return gain * noise


@dataclass
class TrainingItem:
    utt_id: str
    clean: np.ndarray
    noise_scaled: np.ndarray
    spec: np.ndarray          # complex STFT of clean speech
    energies: np.ndarray      # raw band energies E(m, i)
    speech_feats: np.ndarray  # compressed speech bands (generator + D input)
    noise_feats: np.ndarray   # compressed estimated-noise bands
    ref_bands: np.ndarray     # compressed bands of the baseline example
    q_int_ref: float          # cached measured scores of the baseline example
    q_qua_ref: float
    unmodified_estoi: float   # raw ESTOI of the untouched mixture


def _fit_frames(matrix, n_frames):
    if matrix.shape[0] >= n_frames:
        return matrix[:n_frames]
    return np.vstack([matrix, np.repeat(matrix[-1:], n_frames - matrix.shape[0], axis=0)])


def prepare_item(clean, noise, snr_db, bank=None, utt_id=""):
    bank = bank or build_filterbank()
    noise_scaled = scale_noise(clean, noise, snr_db)
    spec = stft(clean)
    energies = band_energies(spec, bank)
    speech_feats = compress_features(energies)
    psd = _fit_frames(estimate_noise_psd(noise_scaled), spec.shape[0])
    noise_feats = compress_features(psd_band_energies(psd, bank))
    reference = ssdrc(clean)
    ref_bands = compress_features(band_energies(stft(reference), bank))
    q_int_ref = normalize_score(
        estoi(clean, reference + noise_scaled), LOGISTIC_PARAMS["ESTOI"]
    )
    return TrainingItem(
        utt_id=utt_id,
        clean=clean,
        noise_scaled=noise_scaled,
        spec=spec,
        energies=energies,
        speech_feats=speech_feats,
        noise_feats=noise_feats,
        ref_bands=ref_bands,
        q_int_ref=q_int_ref,
        q_qua_ref=quality_proxy(reference, clean),
        unmodified_estoi=estoi(clean, clean + noise_scaled),
    )


def resynthesize(item, normalized_gains, bank):
    """Waveform from per-band gains via the engine's own interpolation."""
    per_bin = interpolate_gains(normalized_gains, bank)
    return istft(item.spec * per_bin, length=item.clean.size)


def measure_scores(item, enhanced):
    """True (Q) scores of an enhanced signal for this item's condition."""
    q_int = normalize_score(
        estoi(item.clean, enhanced + item.noise_scaled), LOGISTIC_PARAMS["ESTOI"]
    )
    return q_int, quality_proxy(enhanced, item.clean)
