"""Trainer acceptance: the three secondary criteria, each printing a [PASS]
line (run with -s). The training-improvement criterion runs a real desk-scale
GAN schedule and takes a few minutes on a laptop-class CPU."""

import numpy as np
import pytest
import torch

from nele import Enhancer, estoi, rms_ratio_stats
from nele.generator import Generator
from nele.weights import generator_tensor_table, load_weights
from nele_trainer import (
    GainGenerator,
    TrainConfig,
    build_desk_corpus,
    load_nelw_into,
    serialize_nelw,
    train,
)
from nele_trainer.data import scale_noise
from nele_trainer.losses import discriminator_loss, generator_loss


def report(name):
    print("\n[PASS] %s" % name)


def test_loss_arithmetic():
    """Hand-computed loss values reproduce to 1e-9 (float64 evaluation)."""
    t = lambda v: torch.tensor(float(v), dtype=torch.float64)
    d_example = discriminator_loss(t(0.0), 0.3, t(0.0), 0.7)
    assert float(d_example) == pytest.approx(0.58, abs=1e-9)
    g_example = generator_loss(t(0.6), t(0.8), 0.5)
    assert float(g_example) == pytest.approx(0.18, abs=1e-9)
    assert float(discriminator_loss(t(0.5), 0.5, t(0.5), 0.5)) == pytest.approx(0.0, abs=1e-12)
    assert float(generator_loss(t(1.0), t(1.0), 0.5)) == pytest.approx(0.0, abs=1e-12)
    report("loss arithmetic: hand examples 0.58 and 0.18 reproduced to 1e-9")


def test_cross_component_forward_parity(tmp_path):
    """Trainer and engine forwards agree within 1e-4 per element on shared
    weights; the NELW container round-trips bit-exactly."""
    torch.manual_seed(100)
    model = GainGenerator()
    blob = serialize_nelw(model)
    weights = load_weights(blob)
    for name, _ in generator_tensor_table():
        assert weights[name].dtype == np.float32
    path = tmp_path / "parity.nelw"
    path.write_bytes(blob)
    assert load_weights(path).parameter_count() == 2_093_120
    torch.manual_seed(1)  # different init, fully overwritten by the file
    assert serialize_nelw(load_nelw_into(GainGenerator(), path)) == blob

    engine = Generator(weights)
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(10):
        frames = int(rng.integers(8, 50))
        speech = rng.uniform(0.0, 2.0, size=(frames, 64))
        noise = rng.uniform(0.0, 1.0, size=(frames, 64))
        with torch.no_grad():
            torch_out = model.double()(torch.from_numpy(speech), torch.from_numpy(noise)).numpy()
        worst = max(worst, float(np.max(np.abs(engine.forward_utterance(speech, noise) - torch_out))))
    assert worst < 1e-4
    report("cross-component parity: max |trainer - engine| = %.2e < 1e-4; "
           "NELW round trip bit-exact" % worst)


def test_desk_scale_training_improves_heldout_estoi(tmp_path):
    """Train on 16 mixtures (8 utterances x 2 noises, minutes on a CPU);
    held-out enhanced mixtures must beat unmodified ESTOI by 0.02 absolute
    at -5 dB SNR, with the exported weights evaluated through the engine."""
    train_triples = build_desk_corpus(n_utterances=8, noises=("lowpass", "white"),
                                      snr_db=-5.0, duration=1.2, seed=1)
    heldout = build_desk_corpus(n_utterances=2, noises=("lowpass", "white"),
                                snr_db=-5.0, duration=1.2, seed=99)
    weights_path = tmp_path / "desk.nelw"
    log_path = tmp_path / "train_log.csv"
    history = train(TrainConfig(seed=0, max_epochs=6), train_triples, heldout,
                    weights_path, log_path=log_path)
    assert weights_path.exists() and log_path.exists()

    enhancer = Enhancer(weights=str(weights_path), mode="utterance").fit()
    unmodified, enhanced = [], []
    for clean, noise, snr in heldout:
        scaled = scale_noise(clean, noise, snr)
        unmodified.append(estoi(clean, clean + scaled))
        out = enhancer.enhance(clean, noise=scaled)
        enhanced.append(estoi(clean, out + scaled))
    base, improved = float(np.mean(unmodified)), float(np.mean(enhanced))
    assert improved >= base + 0.02
    report("desk-scale training: held-out ESTOI %.4f -> %.4f (+%.4f >= +0.02) "
           "after %d epochs" % (base, improved, improved - base, len(history)))

    # soft normalization with the trained model: RMS ratios concentrate
    # close to one over the corpus that calibrated the static scale
    calibration = [(clean, scale_noise(clean, noise, snr)) for clean, noise, snr in train_triples]
    soft = Enhancer(weights=str(weights_path), mode="soft").fit(calibration)
    stats = rms_ratio_stats([(soft.enhance(c, noise=w), c) for c, w in calibration])
    assert 0.9 <= stats["mean"] <= 1.1
    report("soft normalization: trained-model RMS ratios mean %.3f (std %.3f) "
           "within [0.9, 1.1]" % (stats["mean"], stats["std"]))
