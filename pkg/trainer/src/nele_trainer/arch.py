"""Torch implementation of the gain generator plus an independent NELW
writer. The architecture must mirror the engine exactly (same layer table,
same cumulative-normalization formula, variance floor 1e-8); parity is
checked through the weight file, never by sharing code with the engine."""

import io
import json
import os
import struct
import tempfile

import numpy as np
import torch
from torch import nn

ARCH_ID = "nele-g-v1"
CONV_SPECS = (
    (5, 128, 256),
    (7, 256, 256),
    (7, 256, 256),
    (7, 256, 256),
    (7, 256, 256),
    (5, 256, 64),
)
LRELU_SLOPE = 0.3
VARIANCE_FLOOR = 1e-8
PARAMETER_COUNT = 2_093_120


class CumulativeLayerNorm(nn.Module):
    """Per-channel causal normalization: running mean/variance over all
    frames seen so far (population variance, floored), learned gain/bias."""

    def __init__(self, channels):
        super().__init__()
        self.gain = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))

    def forward(self, z):
        # z: (1, C, T)
        counts = torch.arange(1, z.shape[-1] + 1, dtype=z.dtype, device=z.device)
        mean = torch.cumsum(z, dim=-1) / counts
        var = torch.cumsum(z * z, dim=-1) / counts - mean * mean
        var = torch.clamp(var, min=VARIANCE_FLOOR)
        return self.gain[None, :, None] * (z - mean) / torch.sqrt(var) + self.bias[None, :, None]


class GainGenerator(nn.Module):
    """Causal conv stack + per-frame FC head + bounded exponential output."""

    def __init__(self):
        super().__init__()
        self.convs = nn.ModuleList(
            [nn.Conv1d(cin, cout, kernel) for kernel, cin, cout in CONV_SPECS]
        )
        self.norms = nn.ModuleList([CumulativeLayerNorm(cout) for _, _, cout in CONV_SPECS])
        self.fc1 = nn.Linear(64, 64)
        self.fc2 = nn.Linear(64, 64)

    def forward(self, speech_feats, noise_feats):
        # (T, 64) + (T, 64) -> raw gains (T, 64)
        x = torch.cat([speech_feats, noise_feats], dim=1).T.unsqueeze(0)  # (1, 128, T)
        for conv, norm in zip(self.convs, self.norms):
            x = nn.functional.pad(x, (conv.kernel_size[0] - 1, 0))  # causal left padding
            x = nn.functional.leaky_relu(norm(conv(x)), LRELU_SLOPE)
        h = x.squeeze(0).T  # (T, 64)
        h = nn.functional.leaky_relu(self.fc1(h), LRELU_SLOPE)
        return torch.exp(3.0 * torch.tanh(self.fc2(h)))

    def parameter_count(self):
        return sum(p.numel() for p in self.parameters())


def weight_table(model):
    """Ordered (name, float32 array) pairs in the canonical NELW layout."""
    pairs = []
    for idx, (conv, norm) in enumerate(zip(model.convs, model.norms), start=1):
        pairs.append(("conv%d.weight" % idx, conv.weight.detach().cpu().numpy()))
        pairs.append(("conv%d.bias" % idx, conv.bias.detach().cpu().numpy()))
        pairs.append(("cln%d.gain" % idx, norm.gain.detach().cpu().numpy()))
        pairs.append(("cln%d.bias" % idx, norm.bias.detach().cpu().numpy()))
    for name in ("fc1", "fc2"):
        layer = getattr(model, name)
        pairs.append(("%s.weight" % name, layer.weight.detach().cpu().numpy()))
        pairs.append(("%s.bias" % name, layer.bias.detach().cpu().numpy()))
    return pairs


def serialize_nelw(model):
    """NELW container: magic, version byte, uint32-LE manifest length, UTF-8
    JSON manifest, little-endian float32 blob (offsets in bytes)."""
    manifest = []
    blob = io.BytesIO()
    offset = 0
    for name, arr in weight_table(model):
        arr = np.ascontiguousarray(arr, dtype="<f4")
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob.write(arr.tobytes())
        offset += arr.nbytes
    header = json.dumps({"arch_id": ARCH_ID, "tensors": manifest}).encode("utf-8")
    return b"NELW" + bytes([1]) + struct.pack("<I", len(header)) + header + blob.getvalue()


def export_nelw(model, path):
    """Atomic export: write to a temp file in the target directory, rename."""
    data = serialize_nelw(model)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".nelw.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def load_nelw_into(model, path):
    """Read a NELW file back into the torch module (inverse of export)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != b"NELW" or data[4] != 1:
        raise ValueError("not a NELW v1 container")
    (length,) = struct.unpack_from("<I", data, 5)
    manifest = json.loads(data[9 : 9 + length].decode("utf-8"))
    blob = data[9 + length :]
    arrays = {}
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"]))
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=entry["offset"])
        arrays[entry["name"]] = torch.from_numpy(flat.reshape(entry["shape"]).copy())
    with torch.no_grad():
        for idx, (conv, norm) in enumerate(zip(model.convs, model.norms), start=1):
            conv.weight.copy_(arrays["conv%d.weight" % idx])
            conv.bias.copy_(arrays["conv%d.bias" % idx])
            norm.gain.copy_(arrays["cln%d.gain" % idx])
            norm.bias.copy_(arrays["cln%d.bias" % idx])
        model.fc1.weight.copy_(arrays["fc1.weight"])
        model.fc1.bias.copy_(arrays["fc1.bias"])
        model.fc2.weight.copy_(arrays["fc2.weight"])
        model.fc2.bias.copy_(arrays["fc2.bias"])
    return model
