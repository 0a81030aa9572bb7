"""Multi-head MLP with manual backprop.

Trunk weights are stored input-major, shape (n_in, n_out), so each column of
a weight gradient lies in the span of the layer's input activations.  Each
task gets its own linear head; heads of other tasks are never touched while
training.  Biases are off by default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ForwardTrace:
    """Per-layer input activations captured during a forward pass."""

    inputs: list[np.ndarray]  # one (batch, n_l) array per trunk layer
    head_input: np.ndarray  # (batch, dims[-1])
    logits: np.ndarray  # (batch, classes)


@dataclass
class GradientSet:
    task: int
    layers: list[np.ndarray]
    head: np.ndarray
    layer_biases: list[np.ndarray] | None = None
    head_bias: np.ndarray | None = None


class Mlp:
    """ReLU trunk defined by a width list plus one linear head per task."""

    def __init__(self, dims: list[int], use_bias: bool = False):
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ValueError(f"bad width list {dims}")
        self.dims = list(dims)
        self.use_bias = use_bias
        self.layers: list[np.ndarray] = [
            np.zeros((dims[l], dims[l + 1])) for l in range(len(dims) - 1)
        ]
        self.layer_biases: list[np.ndarray] | None = (
            [np.zeros(dims[l + 1]) for l in range(len(dims) - 1)]
            if use_bias
            else None
        )
        self.heads: dict[int, np.ndarray] = {}
        self.head_biases: dict[int, np.ndarray] = {}

    def clone(self) -> "Mlp":
        other = Mlp(self.dims, self.use_bias)
        other.layers = [w.copy() for w in self.layers]
        if self.layer_biases is not None:
            other.layer_biases = [b.copy() for b in self.layer_biases]
        other.heads = {t: w.copy() for t, w in self.heads.items()}
        other.head_biases = {t: b.copy() for t, b in self.head_biases.items()}
        return other

    def add_head(self, task: int, classes: int, rng: np.random.Generator) -> None:
        if task in self.heads:
            raise ValueError(f"head for task {task} already exists")
        self.heads[task] = _glorot(self.dims[-1], classes, rng)
        if self.use_bias:
            self.head_biases[task] = np.zeros(classes)


def _glorot(n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
    bound = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-bound, bound, size=(n_in, n_out))


def init_mlp(dims: list[int], rng: np.random.Generator, use_bias: bool = False) -> Mlp:
    """Fresh trunk with Glorot-uniform weights drawn in layer order."""
    model = Mlp(dims, use_bias)
    model.layers = [
        _glorot(dims[l], dims[l + 1], rng) for l in range(len(dims) - 1)
    ]
    return model


def forward(model: Mlp, batch: np.ndarray, task: int) -> ForwardTrace:
    """Run the trunk plus the given task's head, recording layer inputs."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.dims[0]:
        raise ValueError(
            f"batch shape {batch.shape} does not match input width {model.dims[0]}"
        )
    if task not in model.heads:
        raise ValueError(f"no head for task {task}")
    inputs = []
    act = batch
    for l, w in enumerate(model.layers):
        inputs.append(act)
        z = act @ w
        if model.layer_biases is not None:
            z = z + model.layer_biases[l]
        act = np.maximum(z, 0.0)
    logits = act @ model.heads[task]
    if model.use_bias:
        logits = logits + model.head_biases[task]
    return ForwardTrace(inputs=inputs, head_input=act, logits=logits)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    model: Mlp, batch: np.ndarray, labels: np.ndarray, task: int
) -> tuple[float, GradientSet]:
    """Mean cross-entropy over the batch and its exact gradients."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != np.asarray(batch).shape[0]:
        raise ValueError("labels must be a vector matching the batch size")
    if labels.shape[0] == 0:
        raise ValueError("empty batch")
    trace = forward(model, batch, task)
    n, classes = trace.logits.shape
    if labels.min() < 0 or labels.max() >= classes:
        raise ValueError(
            f"labels must lie in 0..{classes - 1}, got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    probs = _softmax(trace.logits)
    loss = float(-np.mean(np.log(probs[np.arange(n), labels])))
    d = probs.copy()
    d[np.arange(n), labels] -= 1.0
    d /= n
    g_head = trace.head_input.T @ d
    g_head_bias = d.sum(axis=0) if model.use_bias else None
    upstream = d @ model.heads[task].T
    g_layers: list[np.ndarray] = [np.empty(0)] * len(model.layers)
    g_biases: list[np.ndarray] | None = (
        [np.empty(0)] * len(model.layers) if model.use_bias else None
    )
    for l in range(len(model.layers) - 1, -1, -1):
        post = trace.head_input if l == len(model.layers) - 1 else trace.inputs[l + 1]
        dz = upstream * (post > 0.0)
        g_layers[l] = trace.inputs[l].T @ dz
        if g_biases is not None:
            g_biases[l] = dz.sum(axis=0)
        upstream = dz @ model.layers[l].T
    return loss, GradientSet(
        task=task,
        layers=g_layers,
        head=g_head,
        layer_biases=g_biases,
        head_bias=g_head_bias,
    )


def sgd_step(model: Mlp, grads: GradientSet, eta: float) -> None:
    """In-place gradient step; only the gradient's task head is touched."""
    for w, g in zip(model.layers, grads.layers):
        if w.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match {w.shape}")
        w -= eta * g
    if grads.layer_biases is not None and model.layer_biases is not None:
        for b, g in zip(model.layer_biases, grads.layer_biases):
            b -= eta * g
    head = model.heads[grads.task]
    if head.shape != grads.head.shape:
        raise ValueError("head gradient shape mismatch")
    head -= eta * grads.head
    if grads.head_bias is not None and model.use_bias:
        model.head_biases[grads.task] -= eta * grads.head_bias


def capture_representation(
    model: Mlp, samples: np.ndarray, task: int
) -> list[np.ndarray]:
    """Layer-input matrices, one (n_l, n_samples) array per trunk layer.

    Columns are samples; the first entry is just the sample batch transposed.
    """
    trace = forward(model, samples, task)
    return [a.T.copy() for a in trace.inputs]


def _param_arrays(model: Mlp) -> list[np.ndarray]:
    arrays: list[np.ndarray] = []
    for l, w in enumerate(model.layers):
        arrays.append(w)
        if model.layer_biases is not None:
            arrays.append(model.layer_biases[l])
    for task in sorted(model.heads):
        arrays.append(model.heads[task])
        if model.use_bias:
            arrays.append(model.head_biases[task])
    return arrays


def flatten_params(model: Mlp) -> np.ndarray:
    """Flat copy of all parameters: trunk layers in order, then heads by id."""
    arrays = _param_arrays(model)
    if not arrays:
        return np.zeros(0)
    return np.concatenate([a.reshape(-1) for a in arrays])


def unflatten_params(model: Mlp, flat: np.ndarray) -> None:
    """Write a flat vector produced by ``flatten_params`` back in place."""
    flat = np.asarray(flat, dtype=np.float64)
    total = sum(a.size for a in _param_arrays(model))
    if flat.shape != (total,):
        raise ValueError(f"expected a flat vector of length {total}, got {flat.shape}")
    offset = 0
    for a in _param_arrays(model):
        a[...] = flat[offset : offset + a.size].reshape(a.shape)
        offset += a.size
