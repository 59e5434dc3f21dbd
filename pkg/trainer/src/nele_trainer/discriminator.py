"""Score-predicting discriminators: five spectrally normalized 2-D conv
layers with LReLU, global average pooling, one hidden FC and a sigmoid head.
The intelligibility discriminator reads (enhanced, clean, noise) band
images; the quality discriminator reads (enhanced, clean)."""

import torch
from torch import nn
from torch.nn.utils.parametrizations import spectral_norm

CONV_PLAN = (((1, 1), 8), ((3, 3), 16), ((5, 5), 32), ((7, 7), 48), ((9, 9), 64))
LRELU_SLOPE = 0.3


class BandDiscriminator(nn.Module):
    """One sigmoid output per modelled metric; both critics currently run a
    single head (ESTOI / the quality proxy), with width kept configurable so
    further metric heads can be added when external scores are imported."""

    def __init__(self, in_channels, n_heads=1):
        super().__init__()
        layers = []
        prev = in_channels
        for kernel, channels in CONV_PLAN:
            pad = (kernel[0] // 2, kernel[1] // 2)
            # 5 power iterations per access keep the Lipschitz bound tight
            # (one iteration leaves ~0.1% overshoot on near-degenerate spectra)
            layers.append(
                spectral_norm(nn.Conv2d(prev, channels, kernel, padding=pad), n_power_iterations=5)
            )
            prev = channels
        self.convs = nn.ModuleList(layers)
        self.n_heads = n_heads
        self.fc_hidden = spectral_norm(nn.Linear(64, 64), n_power_iterations=5)
        self.fc_out = spectral_norm(nn.Linear(64, n_heads), n_power_iterations=5)

    def forward(self, bands):
        # bands: (1, C, n_bands, n_frames) -> score(s) in (0, 1)
        x = bands
        for conv in self.convs:
            x = nn.functional.leaky_relu(conv(x), LRELU_SLOPE)
        pooled = x.mean(dim=(2, 3))  # global average pooling
        hidden = nn.functional.leaky_relu(self.fc_hidden(pooled), LRELU_SLOPE)
        scores = torch.sigmoid(self.fc_out(hidden)).squeeze(0)
        return scores.squeeze(-1) if self.n_heads == 1 else scores


def make_intelligibility_discriminator(n_heads=1):
    return BandDiscriminator(in_channels=3, n_heads=n_heads)


def make_quality_discriminator(n_heads=1):
    return BandDiscriminator(in_channels=2, n_heads=n_heads)


def top_singular_value(weight, iterations=100):
    """Power-iteration estimate of the largest singular value of an
    (out, fan_in)-reshaped weight; used to audit the 1-Lipschitz contract."""
    mat = weight.detach().reshape(weight.shape[0], -1)
    v = torch.randn(mat.shape[1], generator=torch.Generator().manual_seed(0))
    v = v / v.norm()
    for _ in range(iterations):
        u = mat @ v
        u = u / (u.norm() + 1e-12)
        v = mat.T @ u
        v = v / (v.norm() + 1e-12)
    return float(u @ (mat @ v))
