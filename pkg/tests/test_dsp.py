import numpy as np
import pytest
from scipy.io import wavfile

from nele.dsp import (
    StftConfig,
    analysis_window,
    istft,
    mix_observed,
    num_frames,
    read_wav,
    spectrogram_energy,
    stft,
    write_wav,
)
from nele.errors import (
    EmptySignal,
    MalformedSpectrogram,
    SilentNoise,
    SilentSpeech,
    UnsupportedFormat,
    WrongSampleRate,
)
from synth import make_speech

CONFIG = StftConfig()


def test_config_contract():
    assert CONFIG.window_length == 512 and CONFIG.hop == 256 and CONFIG.fft_size == 512
    assert CONFIG.n_bins == 257
    with pytest.raises(ValueError):
        StftConfig(window_length=512, hop=128)


def test_stft_zero_signal():
    spec = stft(np.zeros(16000))
    assert spec.shape == (num_frames(16000, CONFIG), 257)
    assert np.all(spec == 0)


def test_frame_count_formula():
    for n in [500, 511, 512, 513, 4096, 16000, 16001]:
        expected = int(np.ceil((n + CONFIG.pad) / CONFIG.hop))
        assert stft(np.ones(n)).shape[0] == expected


def test_sinusoid_peak_matches_dft_oracle():
    t = np.arange(16000) / 16000.0
    x = np.sin(2 * np.pi * 1000.0 * t)
    spec = stft(x)
    mags = np.abs(spec[5:-5])
    assert np.all(np.argmax(mags, axis=1) == 32)  # 1000 / (16000/512)

    # brute-force DFT of one interior frame, direct summation
    window = analysis_window(CONFIG)
    m = 10
    start = m * CONFIG.hop - CONFIG.pad
    frame = window * x[start : start + 512]
    oracle = np.array(
        [np.sum(frame * np.exp(-2j * np.pi * k * np.arange(512) / 512)) for k in range(257)]
    )
    assert np.max(np.abs(oracle - spec[m])) < 1e-9 * np.max(np.abs(oracle))


def test_parseval_white_noise(rng):
    x = rng.standard_normal(16000) * 0.3
    spec = stft(x)
    assert spectrogram_energy(spec) == pytest.approx(np.dot(x, x), rel=1e-9)


def test_cola_window_square_constant():
    window_sq = analysis_window(CONFIG) ** 2
    total = np.zeros(CONFIG.hop * 20 + CONFIG.window_length)
    for m in range(21):
        total[m * CONFIG.hop : m * CONFIG.hop + CONFIG.window_length] += window_sq
    interior = total[CONFIG.window_length : -CONFIG.window_length]
    assert np.max(np.abs(interior - 1.0)) < 1e-9


def test_roundtrip_random(rng):
    x = rng.standard_normal(16000)
    y = istft(stft(x), length=x.size)
    assert np.max(np.abs(y - x)) < 1e-6


def test_roundtrip_awkward_lengths(rng):
    for n in [700, 1024, 12345]:
        x = rng.standard_normal(n)
        assert np.max(np.abs(istft(stft(x), length=n) - x)) < 1e-6


def test_roundtrip_energy_preserved():
    x = make_speech(duration=1.0, seed=3)
    y = istft(stft(x), length=x.size)
    assert np.dot(y, y) == pytest.approx(np.dot(x, x), rel=1e-9)


def test_istft_zero():
    assert np.all(istft(np.zeros((10, 257), dtype=complex)) == 0)


def test_istft_malformed():
    with pytest.raises(MalformedSpectrogram):
        istft(np.zeros((10, 129), dtype=complex))
    with pytest.raises(MalformedSpectrogram):
        istft(np.full((4, 257), np.nan + 0j))


def test_stft_empty_signal():
    with pytest.raises(EmptySignal):
        stft(np.array([]))


class TestMix:
    def test_identity_rir_unit_gain(self, rng):
        speech = rng.standard_normal(8000)
        noise = rng.standard_normal(8000)
        snr = 10 * np.log10(np.dot(speech, speech) / np.dot(noise, noise))
        out = mix_observed(speech, np.array([1.0]), noise, snr)
        assert np.allclose(out, speech + noise, atol=1e-12)

    def test_zero_snr_matches_energies(self, rng):
        speech = rng.standard_normal(8000)
        noise = rng.standard_normal(8000)
        out = mix_observed(speech, np.array([1.0]), noise, 0.0)
        scaled = out - speech
        assert np.dot(scaled, scaled) == pytest.approx(np.dot(speech, speech), rel=1e-9)

    def test_requested_snr_reached(self, rng):
        speech = make_speech(duration=0.7, seed=5)
        noise = rng.standard_normal(3 * speech.size)
        rir = np.zeros(200)
        rir[0] = 1.0
        rir[150] = 0.4
        out = mix_observed(speech, rir, noise, -5.0)
        reverberant = np.convolve(speech, rir)
        measured = 10 * np.log10(
            np.dot(reverberant, reverberant)
            / np.dot(out - reverberant, out - reverberant)
        )
        assert measured == pytest.approx(-5.0, abs=0.01)

    def test_noise_tiled_when_short(self, rng):
        speech = rng.standard_normal(8000)
        noise = rng.standard_normal(1000)
        out = mix_observed(speech, np.array([1.0]), noise, 0.0)
        assert out.shape == speech.shape

    def test_random_offset_deterministic(self, rng):
        speech = rng.standard_normal(4000)
        noise = rng.standard_normal(20000)
        a = mix_observed(speech, np.array([1.0]), noise, 0.0, rng=np.random.default_rng(7))
        b = mix_observed(speech, np.array([1.0]), noise, 0.0, rng=np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_silent_inputs(self, rng):
        with pytest.raises(SilentNoise):
            mix_observed(rng.standard_normal(100), np.array([1.0]), np.zeros(100), 0.0)
        with pytest.raises(SilentSpeech):
            mix_observed(np.zeros(100), np.array([1.0]), rng.standard_normal(100), 0.0)


class TestWavIo:
    def test_float_roundtrip_bit_identical(self, tmp_path, rng):
        x = rng.standard_normal(3000).astype(np.float32).astype(np.float64)
        path = tmp_path / "x.wav"
        write_wav(path, x)
        assert np.array_equal(read_wav(path), x)

    def test_pcm16_quantization(self, tmp_path):
        x = np.linspace(-0.9, 0.9, 1000)
        path = tmp_path / "x.wav"
        write_wav(path, x, subtype="pcm16")
        y = read_wav(path)
        assert np.max(np.abs(y - x)) <= 0.5 / 32768.0

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        wavfile.write(path, 16000, np.zeros((100, 2), dtype=np.int16))
        with pytest.raises(UnsupportedFormat):
            read_wav(path)

    def test_wrong_rate_rejected(self, tmp_path):
        path = tmp_path / "44k.wav"
        wavfile.write(path, 44100, np.zeros(100, dtype=np.int16))
        with pytest.raises(WrongSampleRate):
            read_wav(path)

    def test_unsupported_dtype_rejected(self, tmp_path):
        path = tmp_path / "u8.wav"
        wavfile.write(path, 16000, np.zeros(100, dtype=np.uint8))
        with pytest.raises(UnsupportedFormat):
            read_wav(path)
