"""Versioned binary container for generator weights (and debug matrices).

Layout (all integers little-endian)::

    offset 0   4 bytes   magic "NELW"
    offset 4   1 byte    format version (0x01)
    offset 5   4 bytes   uint32 manifest length L
    offset 9   L bytes   UTF-8 JSON manifest
    offset 9+L           raw float32 tensor blob

Manifest: ``{"arch_id": str, "tensors": [{"name", "shape", "offset"}, ...]}``
with ``offset`` in bytes into the blob. Tensors are stored row-major
(C order). Convolution kernels have shape (out_channels, in_channels,
kernel); the kernel index runs over time with the last tap at the current
frame. Fully connected weights are (out, in).

The format is deliberately dumb so any training ecosystem can emit it
bit-exactly.
"""

import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, ShapeMismatch, TruncatedBlob

MAGIC = b"NELW"
VERSION = 1

GENERATOR_ARCH_ID = "nele-g-v1"
MATRIX_ARCH_ID = "nele-mat-v1"

N_BANDS = 64
IN_CHANNELS = 2 * N_BANDS
# (kernel, in_channels, out_channels) for the six causal conv blocks
CONV_SPECS = (
    (5, 128, 256),
    (7, 256, 256),
    (7, 256, 256),
    (7, 256, 256),
    (7, 256, 256),
    (5, 256, 64),
)
FC_SIZE = 64
PARAMETER_COUNT = 2_093_120


def generator_tensor_table():
    """Canonical (name, shape) list defining arch nele-g-v1."""
    table = []
    for idx, (kernel, cin, cout) in enumerate(CONV_SPECS, start=1):
        table.append(("conv%d.weight" % idx, (cout, cin, kernel)))
        table.append(("conv%d.bias" % idx, (cout,)))
        table.append(("cln%d.gain" % idx, (cout,)))
        table.append(("cln%d.bias" % idx, (cout,)))
    table.append(("fc1.weight", (FC_SIZE, FC_SIZE)))
    table.append(("fc1.bias", (FC_SIZE,)))
    table.append(("fc2.weight", (FC_SIZE, FC_SIZE)))
    table.append(("fc2.bias", (FC_SIZE,)))
    return table


@dataclass(frozen=True)
class GeneratorWeights:
    arch_id: str
    tensors: dict

    def parameter_count(self):
        return sum(int(np.prod(t.shape)) for t in self.tensors.values())

    def __getitem__(self, name):
        return self.tensors[name]


def _serialize(arch_id, named_tensors):
    manifest_tensors = []
    blob = io.BytesIO()
    offset = 0
    for name, tensor in named_tensors:
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        manifest_tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob.write(arr.tobytes())
        offset += arr.nbytes
    manifest = json.dumps({"arch_id": arch_id, "tensors": manifest_tensors}).encode("utf-8")
    return MAGIC + bytes([VERSION]) + struct.pack("<I", len(manifest)) + manifest + blob.getvalue()


def _parse_container(data):
    if len(data) < 9:
        raise TruncatedBlob("container shorter than header (%d bytes)" % len(data))
    if data[:4] != MAGIC:
        raise BadMagic("bad magic %r, expected %r" % (data[:4], MAGIC))
    if data[4] != VERSION:
        raise BadMagic("unsupported container version %d" % data[4])
    (manifest_len,) = struct.unpack_from("<I", data, 5)
    if 9 + manifest_len > len(data):
        raise TruncatedBlob("manifest length %d exceeds file size" % manifest_len)
    try:
        manifest = json.loads(data[9 : 9 + manifest_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadMagic("manifest is not valid UTF-8 JSON: %s" % exc)
    blob = data[9 + manifest_len :]
    tensors = {}
    expected_offset = 0
    for entry in manifest.get("tensors", []):
        name, shape, offset = entry["name"], tuple(entry["shape"]), int(entry["offset"])
        if offset != expected_offset:
            raise ShapeMismatch("tensor %s at offset %d, expected %d" % (name, offset, expected_offset))
        nbytes = int(np.prod(shape)) * 4
        if offset + nbytes > len(blob):
            raise TruncatedBlob(
                "blob ends inside tensor %s (need %d bytes at offset %d, have %d)"
                % (name, nbytes, offset, len(blob))
            )
        flat = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        tensors[name] = flat.reshape(shape)
        expected_offset = offset + nbytes
    if expected_offset != len(blob):
        raise ShapeMismatch(
            "blob has %d trailing bytes beyond the manifest" % (len(blob) - expected_offset)
        )
    return manifest.get("arch_id", ""), tensors


def save_weights(weights, path):
    table = generator_tensor_table()
    data = _serialize(weights.arch_id, [(name, weights.tensors[name]) for name, _ in table])
    with open(path, "wb") as fh:
        fh.write(data)


def serialize_weights(weights):
    table = generator_tensor_table()
    return _serialize(weights.arch_id, [(name, weights.tensors[name]) for name, _ in table])


def load_weights(source):
    """Load and validate generator weights from a path or a bytes object.

    Raises BadMagic / TruncatedBlob on malformed containers and
    ShapeMismatch when the manifest disagrees with the nele-g-v1
    architecture table (including the 2,093,120 parameter total).
    """
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    arch_id, tensors = _parse_container(data)
    if arch_id != GENERATOR_ARCH_ID:
        raise ShapeMismatch("arch_id %r is not %r" % (arch_id, GENERATOR_ARCH_ID))
    table = generator_tensor_table()
    if [name for name, _ in table] != list(tensors.keys()):
        raise ShapeMismatch(
            "tensor list %s does not match architecture table" % list(tensors.keys())
        )
    for name, shape in table:
        if tensors[name].shape != shape:
            raise ShapeMismatch(
                "tensor %s has shape %s, architecture requires %s"
                % (name, tensors[name].shape, shape)
            )
    weights = GeneratorWeights(arch_id=arch_id, tensors=tensors)
    if weights.parameter_count() != PARAMETER_COUNT:
        raise ShapeMismatch(
            "parameter count %d != %d" % (weights.parameter_count(), PARAMETER_COUNT)
        )
    return weights


def random_weights(seed=0, scale=1.0):
    """Randomly initialized weights with sane magnitudes (tests and the
    --identity-gains-free debug path; no trained model required)."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in generator_tensor_table():
        if name.endswith(".weight"):
            fan_in = int(np.prod(shape[1:]))
            tensors[name] = (scale / np.sqrt(fan_in) * rng.standard_normal(shape)).astype(
                np.float32
            )
        elif ".gain" in name:
            tensors[name] = (1.0 + 0.1 * rng.standard_normal(shape)).astype(np.float32)
        else:
            tensors[name] = (0.1 * rng.standard_normal(shape)).astype(np.float32)
    return GeneratorWeights(arch_id=GENERATOR_ARCH_ID, tensors=tensors)


def save_matrix(matrix, path):
    """Dump a 2-D float matrix (e.g. a noise PSD) in the shared container."""
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ShapeMismatch("matrix dump requires a 2-D array, got %s" % (matrix.shape,))
    with open(path, "wb") as fh:
        fh.write(_serialize(MATRIX_ARCH_ID, [("matrix", matrix)]))


def load_matrix(path):
    with open(path, "rb") as fh:
        arch_id, tensors = _parse_container(fh.read())
    if arch_id != MATRIX_ARCH_ID or list(tensors.keys()) != ["matrix"]:
        raise ShapeMismatch("%s is not a matrix dump" % path)
    return tensors["matrix"].astype(np.float64)
