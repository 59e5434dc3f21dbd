import numpy as np
import pytest
from sklearn.base import clone

from nele.dsp import StftConfig, stft
from nele.engine import Enhancer
from nele.erb import band_energies
from nele.errors import AllSilentUtterance, BadErrorRate, BadGamma
from nele.noise import estimate_noise_psd
from nele.weights import random_weights
from synth import make_speech

WEIGHTS = random_weights(seed=5)
CONFIG = StftConfig()


def test_identity_path_reproduces_input(speech):
    out = Enhancer(identity_gains=True).fit().enhance(speech)
    assert np.max(np.abs(out - speech)) < 1e-5


def test_utterance_mode_energy_exact(speech, noise):
    enh = Enhancer(weights=WEIGHTS, mode="utterance").fit()
    out = enh.enhance(speech, noise=noise)
    assert np.dot(out, out) == pytest.approx(np.dot(speech, speech), rel=1e-6)


def test_utterance_mode_band_constraint(speech, noise):
    enh = Enhancer(weights=WEIGHTS, mode="utterance").fit()
    _, gains = enh.enhance(speech, noise=noise, return_gains=True)
    energies = band_energies(stft(speech, CONFIG), enh.filterbank_)
    assert np.sum(gains**2 * energies) / np.sum(energies) == pytest.approx(1.0, abs=1e-9)


def test_frame_mode_per_frame_energies(speech, noise):
    enh = Enhancer(weights=WEIGHTS, mode="frame").fit()
    _, gains = enh.enhance(speech, noise=noise, return_gains=True)
    energies = band_energies(stft(speech, CONFIG), enh.filterbank_)
    live = energies.sum(axis=1) > 1e-10
    ratios = np.sum(gains[live] ** 2 * energies[live], axis=1) / energies[live].sum(axis=1)
    assert np.allclose(ratios, 1.0, atol=1e-9)


def test_modes_differ(speech, noise):
    out_ul = Enhancer(weights=WEIGHTS, mode="utterance").fit().enhance(speech, noise=noise)
    out_fl = Enhancer(weights=WEIGHTS, mode="frame").fit().enhance(speech, noise=noise)
    assert np.all(np.isfinite(out_ul)) and np.all(np.isfinite(out_fl))
    assert not np.allclose(out_ul, out_fl)


def test_soft_mode_fixed_gamma(speech, noise):
    enh = Enhancer(weights=WEIGHTS, mode="soft", gamma=2.0).fit()
    out = enh.enhance(speech, noise=noise)
    assert np.all(np.isfinite(out))


def test_soft_mode_calibrates_gamma_from_corpus(noise):
    corpus = [(make_speech(0.5, seed=s), noise) for s in range(80, 84)]
    enh = Enhancer(weights=WEIGHTS, mode="soft").fit(corpus)
    assert enh.gamma_ > 0
    out = enh.enhance(make_speech(0.5, seed=99), noise=noise)
    assert np.all(np.isfinite(out))


def test_soft_mode_without_gamma_or_corpus():
    with pytest.raises(BadGamma):
        Enhancer(mode="soft").fit()


def test_frame_mode_waveform_causality(speech, noise):
    """Perturbing the tail of the input leaves earlier output samples
    bit-identical in the causal modes (live cLN included)."""
    enh = Enhancer(weights=WEIGHTS, mode="frame").fit()
    base = enh.enhance(speech, noise=noise)
    perturbed = speech.copy()
    edit_at = 12000
    perturbed[edit_at:] += 0.01
    out = enh.enhance(perturbed, noise=noise)
    first_touched_frame = (edit_at - CONFIG.pad) // CONFIG.hop + 1
    safe_samples = first_touched_frame * CONFIG.hop - CONFIG.pad
    assert np.array_equal(out[:safe_samples], base[:safe_samples])


def test_noise_psd_input_path(speech, noise):
    psd = estimate_noise_psd(noise)
    enh = Enhancer(weights=WEIGHTS, mode="utterance").fit()
    out_psd = enh.enhance(speech, noise_psd=psd)
    assert np.all(np.isfinite(out_psd))


def test_error_rate_deterministic(speech, noise):
    a = Enhancer(weights=WEIGHTS, mode="frame", error_rate=40.0, seed=3).fit()
    b = Enhancer(weights=WEIGHTS, mode="frame", error_rate=40.0, seed=3).fit()
    assert np.array_equal(a.enhance(speech, noise=noise), b.enhance(speech, noise=noise))


def test_error_rate_changes_output(speech, noise):
    clean = Enhancer(weights=WEIGHTS, mode="frame").fit().enhance(speech, noise=noise)
    noisy = Enhancer(weights=WEIGHTS, mode="frame", error_rate=100.0, seed=3).fit().enhance(
        speech, noise=noise
    )
    assert not np.allclose(clean, noisy)


def test_bad_error_rate():
    with pytest.raises(BadErrorRate):
        Enhancer(error_rate=123.0).fit()


def test_silent_utterance_rejected_in_utterance_mode():
    with pytest.raises(AllSilentUtterance):
        Enhancer(identity_gains=True, mode="utterance").fit().enhance(np.zeros(8000))


def test_transform_shapes(speech, noise):
    enh = Enhancer(identity_gains=True).fit()
    single = enh.transform(speech)
    assert single.shape == speech.shape
    pair = enh.transform((speech, noise))
    assert pair.shape == speech.shape
    batch = enh.transform([speech, (speech, noise)])
    assert len(batch) == 2


def test_sklearn_params_and_clone():
    enh = Enhancer(mode="frame", error_rate=10.0, seed=7)
    params = enh.get_params()
    assert params["mode"] == "frame" and params["error_rate"] == 10.0
    cloned = clone(enh)
    assert cloned.get_params() == params


def test_mode_validation():
    with pytest.raises(ValueError):
        Enhancer(mode="bogus").fit()
