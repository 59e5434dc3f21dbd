"""Alternating GAN training at desk scale.

Per item (batch size 1): the two discriminators take a step matching their
predictions to freshly measured scores of the current generator output and
of the baseline example, then the generator takes a step against the frozen
discriminators. Early stopping watches validation ESTOI with the configured
patience; the best-epoch weights are exported as a NELW file the engine can
load directly.
"""

import copy
import csv
from dataclasses import dataclass

import numpy as np
import torch

from nele import build_filterbank
from nele.errors import EmptyCorpus

from .arch import GainGenerator, export_nelw
from .data import measure_scores, prepare_item, resynthesize
from .discriminator import make_intelligibility_discriminator, make_quality_discriminator
from .losses import discriminator_loss, generator_loss

BAND_FLOOR = 1e-12
COMPRESSION = 1.0 / 6.0


class DivergedTraining(RuntimeError):
    """A loss went non-finite."""


@dataclass
class TrainConfig:
    quality_weight: float = 0.5  # lambda on the quality term
    lr_g: float = 4e-4
    lr_d: float = 2e-4
    batch_size: int = 1
    patience: int = 5  # epochs without validation improvement
    max_epochs: int = 30
    t_int: float = 1.0
    t_qua: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.quality_weight < 0:
            raise ValueError("quality weight must be >= 0")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("learning rates must be positive")
        if self.patience < 1 or self.max_epochs < 1:
            raise ValueError("patience and max_epochs must be >= 1")


def normalized_gains(model, item):
    """Generator output with the in-graph utterance-level energy
    normalization layer (differentiable)."""
    speech = torch.from_numpy(item.speech_feats).float()
    noise = torch.from_numpy(item.noise_feats).float()
    raw = model(speech, noise)
    energies = torch.from_numpy(item.energies).float()
    scale = torch.sqrt(energies.sum() / (raw**2 * energies).sum())
    return scale * raw


def enhanced_band_image(gains, item):
    """Compressed enhanced-band features the discriminators read; keeps the
    gradient path from the discriminators back into the generator."""
    energies = torch.from_numpy(item.energies).float()
    return torch.clamp(gains**2 * energies, min=BAND_FLOOR) ** COMPRESSION


def _images(item, enhanced_bands, with_noise):
    clean = torch.from_numpy(item.speech_feats).float()
    channels = [enhanced_bands, clean]
    if with_noise:
        channels.append(torch.from_numpy(item.noise_feats).float())
    # (1, C, bands, frames)
    return torch.stack(channels).transpose(1, 2).unsqueeze(0)


def _reference_images(item, with_noise):
    ref = torch.from_numpy(item.ref_bands).float()
    return _images(item, ref, with_noise)


def _check_finite(value, what):
    if not np.isfinite(value):
        raise DivergedTraining("%s became %r" % (what, value))


class Trainer:
    def __init__(self, config):
        self.config = config
        torch.manual_seed(config.seed)
        self.bank = build_filterbank()
        self.generator = GainGenerator()
        self.d_int = make_intelligibility_discriminator()
        self.d_qua = make_quality_discriminator()
        self.opt_g = torch.optim.Adam(self.generator.parameters(), lr=config.lr_g)
        self.opt_di = torch.optim.Adam(self.d_int.parameters(), lr=config.lr_d)
        self.opt_dq = torch.optim.Adam(self.d_qua.parameters(), lr=config.lr_d)

    def enhance_item(self, item):
        """Numpy waveform from the current generator (no gradients)."""
        with torch.no_grad():
            gains = normalized_gains(self.generator, item).double().numpy()
        if not np.all(np.isfinite(gains)):
            raise DivergedTraining("generator produced non-finite gains")
        return resynthesize(item, gains, self.bank), gains

    def _discriminator_step(self, item, enhanced_bands, q_int, q_qua):
        losses = []
        for disc, opt, with_noise, q_enh, q_ref in (
            (self.d_int, self.opt_di, True, q_int, item.q_int_ref),
            (self.d_qua, self.opt_dq, False, q_qua, item.q_qua_ref),
        ):
            disc.train()
            opt.zero_grad()
            pred_enh = disc(_images(item, enhanced_bands, with_noise))
            pred_ref = disc(_reference_images(item, with_noise))
            loss = discriminator_loss(pred_enh, q_enh, pred_ref, q_ref)
            loss.backward()
            opt.step()
            losses.append(float(loss.detach()))
        return losses

    def _generator_step(self, item):
        # frozen critics: eval mode stops the spectral-norm power iteration,
        # requires_grad(False) keeps their parameters untouched
        for disc in (self.d_int, self.d_qua):
            disc.eval()
            disc.requires_grad_(False)
        self.opt_g.zero_grad()
        gains = normalized_gains(self.generator, item)
        enhanced_bands = enhanced_band_image(gains, item)
        pred_int = self.d_int(_images(item, enhanced_bands, True))
        pred_qua = self.d_qua(_images(item, enhanced_bands, False))
        loss = generator_loss(
            pred_int, pred_qua, self.config.quality_weight, self.config.t_int, self.config.t_qua
        )
        loss.backward()
        self.opt_g.step()
        for disc in (self.d_int, self.d_qua):
            disc.requires_grad_(True)
        return float(loss.detach())

    def train_step(self, item):
        """One alternation on one item: both discriminators, then G."""
        enhanced, gains = self.enhance_item(item)
        q_int, q_qua = measure_scores(item, enhanced)
        enhanced_bands = enhanced_band_image(torch.from_numpy(gains).float(), item)
        loss_di, loss_dq = self._discriminator_step(item, enhanced_bands, q_int, q_qua)
        loss_g = self._generator_step(item)
        for name, value in (("loss_d_int", loss_di), ("loss_d_qua", loss_dq), ("loss_g", loss_g)):
            _check_finite(value, name)
        return loss_g, loss_di, loss_dq

    def validate(self, items):
        from nele import estoi

        scores = []
        for item in items:
            enhanced, _ = self.enhance_item(item)
            scores.append(estoi(item.clean, enhanced + item.noise_scaled))
        return float(np.mean(scores))


def train(config, train_triples, val_triples, out_path, log_path=None, verbose=False):
    """Run the full schedule and export the best-epoch weights to out_path.

    train_triples / val_triples: iterables of (clean, noise, snr_db).
    Returns the per-epoch history.
    """
    train_triples = list(train_triples)
    val_triples = list(val_triples)
    if not train_triples:
        raise EmptyCorpus("no training utterances")
    if not val_triples:
        raise EmptyCorpus("no validation utterances")
    trainer = Trainer(config)
    bank = trainer.bank
    train_items = [
        prepare_item(c, n, s, bank, utt_id="train_%03d" % i)
        for i, (c, n, s) in enumerate(train_triples)
    ]
    val_items = [
        prepare_item(c, n, s, bank, utt_id="val_%03d" % i)
        for i, (c, n, s) in enumerate(val_triples)
    ]
    order_rng = np.random.default_rng(config.seed)
    history = []
    best_score = -np.inf
    best_state = None
    best_epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        epoch_losses = []
        for idx in order_rng.permutation(len(train_items)):
            epoch_losses.append(trainer.train_step(train_items[idx]))
        val_estoi = trainer.validate(val_items)
        loss_g, loss_di, loss_dq = np.mean(np.asarray(epoch_losses), axis=0)
        history.append(
            {
                "epoch": epoch,
                "loss_g": float(loss_g),
                "loss_d_int": float(loss_di),
                "loss_d_qua": float(loss_dq),
                "val_estoi": val_estoi,
            }
        )
        if verbose:
            print(
                "epoch %d: loss_g=%.4f d_int=%.4f d_qua=%.4f val_estoi=%.4f"
                % (epoch, loss_g, loss_di, loss_dq, val_estoi)
            )
        if val_estoi > best_score:
            best_score = val_estoi
            best_state = copy.deepcopy(trainer.generator.state_dict())
            best_epoch = epoch
        elif epoch - best_epoch >= config.patience:
            break
    trainer.generator.load_state_dict(best_state)
    export_nelw(trainer.generator, out_path)
    if log_path:
        with open(log_path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["epoch", "loss_g", "loss_d_int", "loss_d_qua", "val_estoi"]
            )
            writer.writeheader()
            writer.writerows(history)
    return history
