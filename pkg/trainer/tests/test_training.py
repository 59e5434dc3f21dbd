import copy

import numpy as np
import pytest
import torch

from nele.errors import EmptyCorpus
from nele_trainer import (
    DivergedTraining,
    TrainConfig,
    Trainer,
    build_desk_corpus,
    load_manifest,
    log_spectral_distance,
    prepare_item,
    quality_proxy,
    serialize_nelw,
    train,
    write_corpus,
)
from nele_trainer.data import scale_noise, synth_speech
from nele_trainer.train import normalized_gains


@pytest.fixture(scope="module")
def item():
    clean, noise, snr = build_desk_corpus(n_utterances=1, noises=("lowpass",), seed=3)[0]
    return prepare_item(clean, noise, snr, utt_id="fixture")


class TestConfig:
    def test_defaults_match_schedule(self):
        cfg = TrainConfig()
        assert cfg.quality_weight == 0.5
        assert cfg.lr_g == 4e-4 and cfg.lr_d == 2e-4
        assert cfg.batch_size == 1 and cfg.patience == 5
        assert cfg.t_int == 1.0 and cfg.t_qua == 1.0

    def test_invariants(self):
        with pytest.raises(ValueError):
            TrainConfig(quality_weight=-0.1)
        with pytest.raises(ValueError):
            TrainConfig(lr_g=0.0)


class TestQualityProxy:
    def test_identical_is_maximum(self):
        x = synth_speech(1.0, seed=4)
        assert log_spectral_distance(x, x) == pytest.approx(0.0, abs=1e-9)
        top = quality_proxy(x, x)
        for other in (0.7 * x + 0.01 * synth_speech(1.0, seed=5), np.roll(x, 100)):
            assert quality_proxy(other, x) <= top

    def test_monotone_under_distortion(self):
        x = synth_speech(1.0, seed=6)
        rng = np.random.default_rng(7)
        noise = rng.standard_normal(x.size) * np.sqrt(np.mean(x**2))
        mild = quality_proxy(x + 0.05 * noise, x)
        heavy = quality_proxy(x + 0.8 * noise, x)
        assert heavy < mild

    def test_scale_invariant(self):
        x = synth_speech(1.0, seed=8)
        y = x + 0.1 * np.roll(x, 50)
        assert quality_proxy(3.0 * y, 3.0 * x) == pytest.approx(quality_proxy(y, x), abs=1e-12)


class TestTrainerMechanics:
    def test_equal_power_inside_forward(self, item):
        trainer = Trainer(TrainConfig(seed=1))
        with torch.no_grad():
            gains = normalized_gains(trainer.generator, item)
        energies = torch.from_numpy(item.energies).float()
        ratio = float((gains**2 * energies).sum() / energies.sum())
        assert ratio == pytest.approx(1.0, abs=1e-6)

    def test_discriminators_frozen_during_g_step(self, item):
        trainer = Trainer(TrainConfig(seed=2))
        trainer.train_step(item)  # warm everything up once
        before_int = copy.deepcopy(trainer.d_int.state_dict())
        before_qua = copy.deepcopy(trainer.d_qua.state_dict())
        trainer._generator_step(item)
        for before, module in ((before_int, trainer.d_int), (before_qua, trainer.d_qua)):
            after = module.state_dict()
            assert before.keys() == after.keys()
            for key in before:
                assert torch.equal(before[key], after[key]), key

    def test_generator_changes_after_g_step(self, item):
        trainer = Trainer(TrainConfig(seed=3))
        before = copy.deepcopy(trainer.generator.state_dict())
        trainer.train_step(item)
        changed = any(
            not torch.equal(before[key], value)
            for key, value in trainer.generator.state_dict().items()
        )
        assert changed

    def test_diverged_training_detected(self, item):
        trainer = Trainer(TrainConfig(seed=4))
        with torch.no_grad():
            trainer.generator.fc2.bias.fill_(float("nan"))
        with pytest.raises(DivergedTraining):
            trainer.train_step(item)


class TestTrainLoop:
    def test_empty_corpus(self, tmp_path):
        with pytest.raises(EmptyCorpus):
            train(TrainConfig(), [], [(np.ones(4000), np.ones(4000), 0.0)], tmp_path / "w.nelw")
        with pytest.raises(EmptyCorpus):
            train(TrainConfig(), [(np.ones(4000), np.ones(4000), 0.0)], [], tmp_path / "w.nelw")

    def test_seed_fixed_runs_export_identical_weights(self, tmp_path):
        triples = build_desk_corpus(n_utterances=2, noises=("lowpass",), duration=0.8, seed=5)
        blobs = []
        for run in range(2):
            out = tmp_path / ("w%d.nelw" % run)
            train(TrainConfig(seed=11, max_epochs=2), triples, triples[:1], out,
                  log_path=tmp_path / ("log%d.csv" % run))
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_log_csv_shape(self, tmp_path):
        triples = build_desk_corpus(n_utterances=1, noises=("white",), duration=0.8, seed=6)
        log = tmp_path / "log.csv"
        history = train(TrainConfig(seed=12, max_epochs=2), triples, triples, tmp_path / "w.nelw",
                        log_path=log)
        lines = log.read_text().splitlines()
        assert lines[0] == "epoch,loss_g,loss_d_int,loss_d_qua,val_estoi"
        assert len(lines) == len(history) + 1


class TestCorpusIo:
    def test_manifest_roundtrip(self, tmp_path):
        triples = build_desk_corpus(n_utterances=2, noises=("white",), duration=0.5, seed=7)
        manifest = write_corpus(tmp_path / "corpus", triples)
        loaded = load_manifest(manifest)
        assert len(loaded) == len(triples)
        for (c0, n0, s0), (c1, n1, s1) in zip(triples, loaded):
            assert s0 == s1
            # float32 WAV round trip
            assert np.max(np.abs(c0 - c1)) < 1e-6
            assert np.max(np.abs(n0 - n1)) < 1e-6

    def test_scale_noise_hits_snr(self):
        clean = synth_speech(0.6, seed=9)
        noise = np.random.default_rng(10).standard_normal(clean.size)
        scaled = scale_noise(clean, noise, -7.0)
        measured = 10 * np.log10(np.mean(clean**2) / np.mean(scaled**2))
        assert measured == pytest.approx(-7.0, abs=1e-9)


def test_cli_synth(tmp_path, capsys):
    from nele_trainer.cli import main

    code = main(["synth", str(tmp_path / "desk"), "--utterances", "2",
                 "--noises", "white", "--duration", "0.5"])
    assert code == 0
    assert (tmp_path / "desk" / "manifest.csv").exists()
    assert "wrote 2 items" in capsys.readouterr().out


def test_export_blob_is_stable(tmp_path):
    torch.manual_seed(21)
    from nele_trainer import GainGenerator

    model = GainGenerator()
    assert serialize_nelw(model) == serialize_nelw(model)
