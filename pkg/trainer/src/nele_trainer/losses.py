"""GAN objectives: squared-error matching of predicted to measured scores
for the discriminators, squared distance to the maximum scores for the
generator (weighted quality term)."""

import torch


def discriminator_loss(pred_enhanced, q_enhanced, pred_reference, q_reference):
    """(D(enh) - Q(enh))^2 + (D(ref) - Q(ref))^2; the reference example is
    the pre-enhanced signal from the rule-based baseline."""
    return (pred_enhanced - q_enhanced) ** 2 + (pred_reference - q_reference) ** 2


def generator_loss(pred_int, pred_qua, quality_weight, t_int=1.0, t_qua=1.0):
    """(D_int - t_int)^2 + lambda * (D_qua - t_qua)^2 with frozen critics."""
    loss = (pred_int - t_int) ** 2
    if quality_weight != 0.0:
        loss = loss + quality_weight * (pred_qua - t_qua) ** 2
    return loss


def as_scalar(value):
    return float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
