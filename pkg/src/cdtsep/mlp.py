"""Dense sigmoidal autoencoder trained by per-example stochastic gradient descent.

The network is fixed at one hidden layer: sizes [d_in, d_hidden, d_out],
logistic sigmoid on both layers, trainable hidden bias, and an output bias
pinned to zero (never updated).  Training minimizes squared reconstruction
error with batch-size-1 updates.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import AudioFormatError, TrainingDivergedError
from .framing import TrainingSet

MODEL_MAGIC = b"CDT1"


@dataclass
class Mlp:
    """Parameters of the two-layer sigmoid network.

    weights[k] has shape (fan_out, fan_in) for layer k; biases[k] matches
    fan_out.  biases[-1] (the output layer) is identically zero at all
    times.
    """

    layer_sizes: tuple[int, int, int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes,
                   [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class Gradients:
    """Partial derivatives of the per-example loss, same shapes as the Mlp."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class TrainConfig:
    epochs: int = 300
    learning_rate: float = 0.05
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not np.isfinite(self.learning_rate):
            raise ValueError("learning_rate must be finite")


def init_mlp(layer_sizes, seed: int) -> Mlp:
    """Create a network with uniform fan-scaled weights and zero biases.

    Weights for each layer are drawn from U(-r, r) with
    r = sqrt(6 / (fan_in + fan_out)); the draw is deterministic given the
    seed.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) != 3 or any(s < 1 for s in sizes):
        raise ValueError(f"layer_sizes must be three positive integers, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
    biases = [np.zeros(sizes[1]), np.zeros(sizes[2])]
    return Mlp(sizes, weights, biases)


def forward(mlp: Mlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run one input through the network; returns (hidden, output).

    hidden = sigmoid(W1 x + b1), output = sigmoid(W2 hidden); the hidden
    activation is returned alongside the output for gradient computation.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (mlp.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match d_in={mlp.input_dim}")
    hidden = expit(mlp.weights[0] @ x + mlp.biases[0])
    output = expit(mlp.weights[1] @ hidden)
    return hidden, output


def _forward_backward(mlp, x, t, g_w1=None, g_w2=None):
    """Shared kernel for backprop and the SGD loop (keeps both bit-identical).

    g_w1/g_w2 are optional preallocated gradient buffers; reusing them only
    avoids allocations, the computed values are unchanged.
    """
    hidden = expit(mlp.weights[0] @ x + mlp.biases[0])
    output = expit(mlp.weights[1] @ hidden)
    err = output - t
    loss = 0.5 * float(err @ err)
    delta2 = err * output * (1.0 - output)
    delta1 = (mlp.weights[1].T @ delta2) * hidden * (1.0 - hidden)
    g_w2 = np.multiply(delta2[:, None], hidden[None, :], out=g_w2)
    g_w1 = np.multiply(delta1[:, None], x[None, :], out=g_w1)
    return g_w1, delta1, g_w2, loss


def backprop(mlp: Mlp, x: np.ndarray, target: np.ndarray) -> tuple[Gradients, float]:
    """Exact gradients of the squared-error loss for one example.

    loss = 0.5 * sum((output - target)^2).  The output-layer bias gradient
    is defined as zero (that bias is never trained).
    """
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if x.shape != (mlp.input_dim,):
        raise ValueError(f"input shape {x.shape} does not match d_in={mlp.input_dim}")
    if target.shape != (mlp.output_dim,):
        raise ValueError(
            f"target shape {target.shape} does not match d_out={mlp.output_dim}")
    g_w1, g_b1, g_w2, loss = _forward_backward(mlp, x, target)
    grads = Gradients([g_w1, g_w2], [g_b1, np.zeros(mlp.output_dim)])
    return grads, loss


def train_sgd(mlp: Mlp, data: TrainingSet,
              config: TrainConfig) -> tuple[Mlp, list[float]]:
    """Train a copy of the network with per-example gradient steps.

    Every epoch sweeps all examples once (in a seeded shuffled order when
    config.shuffle is set) applying theta -= lr * grad after each example.
    Returns the trained network and the mean per-example loss of each
    epoch.  A non-finite parameter raises
    :class:`~cdtsep.errors.TrainingDivergedError` naming the epoch.
    """
    if data.num_examples < 1:
        raise ValueError("training set is empty")
    if data.inputs.shape[1] != mlp.input_dim:
        raise ValueError(
            f"input dim {data.inputs.shape[1]} does not match d_in={mlp.input_dim}")
    if data.targets.shape[1] != mlp.output_dim:
        raise ValueError(
            f"target dim {data.targets.shape[1]} does not match d_out={mlp.output_dim}")

    net = mlp.copy()
    w1, w2 = net.weights
    b1 = net.biases[0]
    lr = config.learning_rate
    rng = np.random.default_rng(config.seed)
    inputs = np.ascontiguousarray(data.inputs, dtype=np.float64)
    targets = np.ascontiguousarray(data.targets, dtype=np.float64)
    n = data.num_examples

    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for idx in order:
            g_w1, g_b1, g_w2, loss = _forward_backward(net, inputs[idx], targets[idx])
            w1 -= lr * g_w1
            b1 -= lr * g_b1
            w2 -= lr * g_w2
            total += loss
        history.append(total / n)
        if not (np.isfinite(w1).all() and np.isfinite(w2).all()
                and np.isfinite(b1).all()):
            raise TrainingDivergedError(epoch)
    return net, history


def save_mlp(mlp: Mlp, path) -> None:
    """Write the model file: b"CDT1", then little-endian u32 layer count,
    u32 sizes, float64 weight matrices row-major in layer order, float64
    hidden biases, and a trailing u32 CRC32 of everything after the magic.
    """
    parts = [struct.pack("<I", len(mlp.layer_sizes))]
    parts.append(struct.pack(f"<{len(mlp.layer_sizes)}I", *mlp.layer_sizes))
    for w in mlp.weights:
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
    for b in mlp.biases[:-1]:  # output bias is identically zero, not stored
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    payload = b"".join(parts)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", crc))


def load_mlp(path) -> Mlp:
    """Read a model file written by :func:`save_mlp`, validating magic and CRC."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MODEL_MAGIC) + 8 or blob[:4] != MODEL_MAGIC:
        raise AudioFormatError(f"{path}: not a CDT1 model file")
    payload, crc_bytes = blob[4:-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) & 0xFFFFFFFF != stored_crc:
        raise AudioFormatError(f"{path}: model file CRC mismatch")

    offset = 0
    (count,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    if count != 3:
        raise AudioFormatError(f"{path}: expected 3 layer sizes, found {count}")
    sizes = struct.unpack_from(f"<{count}I", payload, offset)
    offset += 4 * count

    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        nbytes = fan_in * fan_out * 8
        w = np.frombuffer(payload, dtype="<f8", count=fan_in * fan_out, offset=offset)
        weights.append(w.reshape(fan_out, fan_in).copy())
        offset += nbytes
    b1 = np.frombuffer(payload, dtype="<f8", count=sizes[1], offset=offset).copy()
    offset += sizes[1] * 8
    if offset != len(payload):
        raise AudioFormatError(f"{path}: model file has trailing bytes")
    return Mlp(tuple(sizes), weights, [b1, np.zeros(sizes[2])])
