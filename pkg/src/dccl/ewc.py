"""Decentralized elastic weight consolidation pieces.

The quadratic penalty (lambda/2) * sum f * (x - x_prev)^2 acts on trunk
parameters only; heads are per task and never revisited, so there is
nothing to anchor them to.  Fisher information is the empirical diagonal:
the mean of squared per-sample loss gradients over an agent's shard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GradientSet, Mlp, loss_and_grad
from .tasks import TaskShard


@dataclass
class FisherState:
    f: list[np.ndarray]  # one entry per trunk parameter array
    anchor: list[np.ndarray]  # parameter snapshot the penalty pulls toward

    def copy(self) -> "FisherState":
        return FisherState(
            f=[a.copy() for a in self.f], anchor=[a.copy() for a in self.anchor]
        )


def _trunk_params(model: Mlp) -> list[np.ndarray]:
    params = list(model.layers)
    if model.layer_biases is not None:
        params += list(model.layer_biases)
    return params


def _trunk_grads(grads: GradientSet) -> list[np.ndarray]:
    arrays = list(grads.layers)
    if grads.layer_biases is not None:
        arrays += list(grads.layer_biases)
    return arrays


def fisher_estimate(model: Mlp, shard: TaskShard, task: int) -> FisherState:
    """Diagonal Fisher from one agent's shard at the current parameters."""
    n = len(shard)
    if n == 0:
        raise ValueError("cannot estimate Fisher information on an empty shard")
    acc = [np.zeros_like(p) for p in _trunk_params(model)]
    for i in range(n):
        _, grads = loss_and_grad(
            model, shard.examples[i : i + 1], shard.labels[i : i + 1], task
        )
        for slot, g in zip(acc, _trunk_grads(grads)):
            slot += g * g
    f = [a / n for a in acc]
    anchor = [p.copy() for p in _trunk_params(model)]
    return FisherState(f=f, anchor=anchor)


def ewc_grad(
    model: Mlp, base_grads: GradientSet, fisher: FisherState | None, lam: float
) -> GradientSet:
    """Add the penalty gradient lambda * f * (x - x_prev) to trunk gradients."""
    if fisher is None or lam == 0.0:
        return base_grads
    params = _trunk_params(model)
    penalized = [g.copy() for g in _trunk_grads(base_grads)]
    for slot, p, f, anchor in zip(penalized, params, fisher.f, fisher.anchor):
        slot += lam * f * (p - anchor)
    n_layers = len(base_grads.layers)
    return GradientSet(
        task=base_grads.task,
        layers=penalized[:n_layers],
        head=base_grads.head,
        layer_biases=penalized[n_layers:] if base_grads.layer_biases is not None else None,
        head_bias=base_grads.head_bias,
    )


def fisher_average(states: list[FisherState], anchor_index: int = 0) -> FisherState:
    """Elementwise mean of per-agent Fishers; anchor from the designated agent."""
    if not states:
        raise ValueError("no Fisher states to average")
    if not 0 <= anchor_index < len(states):
        raise ValueError(f"anchor index {anchor_index} outside 0..{len(states) - 1}")
    f = [np.zeros_like(a) for a in states[0].f]
    for state in states:
        if len(state.f) != len(f):
            raise ValueError("Fisher states disagree on parameter count")
        for slot, part in zip(f, state.f):
            slot += part
    f = [a / len(states) for a in f]
    anchor = [a.copy() for a in states[anchor_index].anchor]
    return FisherState(f=f, anchor=anchor)


def accumulate_fisher(
    running: FisherState | None, latest: FisherState
) -> FisherState:
    """Online accumulation: running sum of Fishers with the newest anchor."""
    if running is None:
        return latest.copy()
    return FisherState(
        f=[a + b for a, b in zip(running.f, latest.f)],
        anchor=[a.copy() for a in latest.anchor],
    )
