"""Forward-only inference of the causal gain generator.

Six causal 1-D conv blocks (kernel widths 5,7,7,7,7,5; channels 256 x5 then
64), each followed by cumulative layer normalization and LeakyReLU(0.3),
then two per-frame 64-node fully connected layers (LReLU after the first
only) and the bounded exponential activation exp(3 * tanh(u)), so every raw
amplification factor lies in [e^-3, e^3].

Cumulative layer normalization keeps per-channel running mean/variance over
all frames seen so far (variance = E[z^2] - E[z]^2, floored at 1e-8) with a
learned per-channel gain and bias. Convolutions are left-padded with zeros
at stream start. Everything here is streaming: `forward_utterance` is
literally the fold of `forward_frame`, so batch and frame-by-frame use are
bitwise identical.
"""

import numpy as np

from .errors import DimensionMismatch, StateArchMismatch
from .weights import CONV_SPECS, FC_SIZE, GENERATOR_ARCH_ID, PARAMETER_COUNT

LRELU_SLOPE = 0.3
VARIANCE_FLOOR = 1e-8
LOOKBACK_FRAMES = sum(k - 1 for k, _, _ in CONV_SPECS)  # 32
FRAME_SECONDS = 0.016


def leaky_relu(x, slope=LRELU_SLOPE):
    return np.where(x >= 0.0, x, slope * x)


def flop_rate(parameter_count=PARAMETER_COUNT, frame_seconds=FRAME_SECONDS):
    """Sustained FLOP rate for real-time use: each weight is one multiply-add
    (two operations) per frame."""
    return 2.0 * parameter_count / frame_seconds


class GeneratorState:
    """Per-stream mutable state: conv input history plus cLN running sums.

    With ``frozen_norm`` the normalization uses fixed zero-mean/unit-variance
    statistics instead of the running ones, which bounds the receptive field
    to the convolutional lookback (32 frames); live cLN has unbounded causal
    memory.
    """

    def __init__(self, frozen_norm=False):
        self.arch_id = GENERATOR_ARCH_ID
        self.frozen_norm = frozen_norm
        self.frames_seen = 0
        self.buffers = [np.zeros((kernel - 1, cin)) for kernel, cin, _ in CONV_SPECS]
        self.counts = [0 for _ in CONV_SPECS]
        self.sums = [np.zeros(cout) for _, _, cout in CONV_SPECS]
        self.sumsqs = [np.zeros(cout) for _, _, cout in CONV_SPECS]


class Generator:
    """Immutable weight binding; create one state per stream."""

    def __init__(self, weights):
        if weights.arch_id != GENERATOR_ARCH_ID:
            raise StateArchMismatch("weights arch %r unsupported" % weights.arch_id)
        self._conv_flat = []
        self._conv_bias = []
        self._cln_gain = []
        self._cln_bias = []
        for idx, (kernel, cin, cout) in enumerate(CONV_SPECS, start=1):
            w = weights["conv%d.weight" % idx].astype(np.float64)
            # (out, in, k) -> (out, k*in) so a flattened (k, in) history
            # multiplies in one dot; tap k-1 is the current frame.
            self._conv_flat.append(np.ascontiguousarray(w.transpose(0, 2, 1).reshape(cout, -1)))
            self._conv_bias.append(weights["conv%d.bias" % idx].astype(np.float64))
            self._cln_gain.append(weights["cln%d.gain" % idx].astype(np.float64))
            self._cln_bias.append(weights["cln%d.bias" % idx].astype(np.float64))
        self._fc1_w = weights["fc1.weight"].astype(np.float64)
        self._fc1_b = weights["fc1.bias"].astype(np.float64)
        self._fc2_w = weights["fc2.weight"].astype(np.float64)
        self._fc2_b = weights["fc2.bias"].astype(np.float64)

    def new_state(self, frozen_norm=False):
        return GeneratorState(frozen_norm=frozen_norm)

    def forward_frame(self, state, speech_feat, noise_feat):
        """One 64-dim row of raw amplification factors for one feature frame.

        Features are the 1/6-power-compressed ERB band energies of speech and
        estimated noise. Output depends on the current and past frames only.
        """
        if not isinstance(state, GeneratorState) or state.arch_id != GENERATOR_ARCH_ID:
            raise StateArchMismatch("state was not created for this architecture")
        speech_feat = np.asarray(speech_feat, dtype=np.float64)
        noise_feat = np.asarray(noise_feat, dtype=np.float64)
        if speech_feat.shape != (FC_SIZE,) or noise_feat.shape != (FC_SIZE,):
            raise DimensionMismatch("feature frames must be 64-vectors")
        x = np.concatenate([speech_feat, noise_feat])
        for i in range(len(CONV_SPECS)):
            history = np.vstack([state.buffers[i], x])
            z = self._conv_flat[i] @ history.ravel() + self._conv_bias[i]
            state.buffers[i] = history[1:]
            if state.frozen_norm:
                mean, var = 0.0, 1.0
            else:
                state.counts[i] += 1
                state.sums[i] += z
                state.sumsqs[i] += z * z
                mean = state.sums[i] / state.counts[i]
                var = np.maximum(state.sumsqs[i] / state.counts[i] - mean * mean, VARIANCE_FLOOR)
            normed = self._cln_gain[i] * (z - mean) / np.sqrt(var) + self._cln_bias[i]
            x = leaky_relu(normed)
        h = leaky_relu(self._fc1_w @ x + self._fc1_b)
        u = self._fc2_w @ h + self._fc2_b
        state.frames_seen += 1
        return np.exp(3.0 * np.tanh(u))

    def forward_utterance(self, speech_feats, noise_feats, frozen_norm=False):
        """Raw gain matrix for a whole utterance; defined as the fold of
        `forward_frame` over frames (bitwise identical to streaming)."""
        speech_feats = np.asarray(speech_feats, dtype=np.float64)
        noise_feats = np.asarray(noise_feats, dtype=np.float64)
        if speech_feats.shape != noise_feats.shape or speech_feats.ndim != 2:
            raise DimensionMismatch(
                "feature matrices must share shape (frames, 64), got %s and %s"
                % ((speech_feats.shape,), (noise_feats.shape,))
            )
        state = self.new_state(frozen_norm=frozen_norm)
        rows = [
            self.forward_frame(state, speech_feats[m], noise_feats[m])
            for m in range(speech_feats.shape[0])
        ]
        return np.vstack(rows) if rows else np.zeros((0, FC_SIZE))
