"""Short-burst BPTT training of individual genomes.

Candidates arrive carrying their parents' weights, so a few epochs of
stochastic gradient descent with Nesterov momentum per generation are enough:
refinement accumulates along the lineage instead of inside any single
training call.  The global gradient norm is clipped above ``clip_threshold``
and boosted up to ``boost_threshold`` so updates neither explode nor stall.
A non-finite loss or gradient aborts training, rolls the weights back to the
last completed epoch, and marks the genome diverged; diverged genomes are
assigned the worst possible fitness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cells
from .genome import RnnGenome
from .kernels import run_backward, run_forward
from .network import CompiledNetwork, compile_network, write_back


@dataclass
class TrainingConfig:
    epochs: int = 10
    learning_rate: float = 0.001
    momentum: float = 0.9
    clip_threshold: float = 1.0
    boost_threshold: float = 0.05
    lstm_forget_bias_offset: float = 1.0
    # "epoch": one parameter update per epoch from the gradient summed over
    # every training sequence; "sequence": one update per sequence.
    update_granularity: str = "sequence"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.boost_threshold < 0 or self.clip_threshold <= self.boost_threshold:
            raise ValueError("need clip_threshold > boost_threshold >= 0")
        if self.update_granularity not in ("epoch", "sequence"):
            raise ValueError("update_granularity must be 'epoch' or 'sequence'")


@dataclass
class TrainingOutcome:
    genome: RnnGenome
    train_mse: list            # loss recorded at each completed epoch
    validation_mse: float
    diverged: bool = False


@dataclass
class UnrollTrace:
    net: CompiledNetwork
    states: np.ndarray
    cell_states: np.ndarray
    store: np.ndarray


def mse_loss(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ValueError(
            f"shape mismatch {predictions.shape} vs {targets.shape}")
    if predictions.size == 0:
        raise ValueError("mse_loss of an empty frame set is undefined")
    diff = predictions - targets
    return float(np.mean(diff * diff))


def rescale_gradient(grad: np.ndarray, clip_threshold: float,
                     boost_threshold: float):
    """Rescale the whole gradient by its global L2 norm.

    Norms above ``clip_threshold`` are clipped down to it; norms strictly
    between zero and ``boost_threshold`` are boosted up to it.  Returns the
    (new array) rescaled gradient and the original norm.
    """
    norm = float(np.linalg.norm(grad))
    if norm > clip_threshold:
        return grad * (clip_threshold / norm), norm
    if 0.0 < norm < boost_threshold:
        return grad * (boost_threshold / norm), norm
    return grad.copy(), norm


def unroll_forward(genome: RnnGenome, inputs):
    """Evaluate a genome over one input sequence.

    Returns ``(predictions, trace)`` where predictions is [T, n_outputs]
    (output nodes in innovation-id order) and the trace holds the cached
    activations a backward pass needs.
    """
    net = compile_network(genome)
    states, cell_states, store = run_forward(net, np.asarray(inputs, dtype=np.float64))
    trace = UnrollTrace(net, states, cell_states, store)
    return states[:, net.output_idx], trace


def _as_frame(frame):
    x, y = frame
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and targets disagree on sequence length")
    return x, y


def _loss_and_grad(net, weights, frames, total_count):
    """Mean squared error over all frames and its gradient at ``weights``."""
    grad = np.zeros(net.n_weights)
    sq_sum = 0.0
    for x, y in frames:
        states, cell_states, store = run_forward(net, x, weights)
        preds = states[:, net.output_idx]
        err = preds - y
        sq_sum += float(np.sum(err * err))
        d_states = np.zeros_like(states)
        d_states[:, net.output_idx] = 2.0 * err / total_count
        run_backward(net, weights, states, cell_states, store, d_states, grad)
    return sq_sum / total_count, grad


def evaluate_mse(net: CompiledNetwork, weights, frames) -> float:
    frames = [_as_frame(f) for f in frames]
    sq_sum = 0.0
    count = 0
    for x, y in frames:
        states, _, _ = run_forward(net, x, weights)
        err = states[:, net.output_idx] - y
        sq_sum += float(np.sum(err * err))
        count += err.size
    if count == 0:
        raise ValueError("cannot evaluate on an empty frame set")
    return sq_sum / count


def bptt_epoch(net: CompiledNetwork, weights, velocity, frames,
               config: TrainingConfig):
    """One epoch of Nesterov-momentum SGD over the training frames.

    The gradient is evaluated at the lookahead point ``w + momentum * v``;
    then ``v <- momentum * v - learning_rate * grad`` and ``w <- w + v``.
    Returns ``(weights, velocity, epoch_loss, grad_norm, diverged)``; on
    divergence the incoming weights and velocity are returned unchanged.
    """
    frames = [_as_frame(f) for f in frames]
    if not frames:
        raise ValueError("cannot train on an empty frame set")
    if config.update_granularity == "epoch":
        batches = [frames]
    else:
        batches = [[f] for f in frames]
    w = weights.copy()
    v = velocity.copy()
    epoch_sq = 0.0
    epoch_count = 0
    last_norm = 0.0
    for batch in batches:
        total = sum(y.size for _, y in batch)
        lookahead = w + config.momentum * v
        loss, grad = _loss_and_grad(net, lookahead, batch, total)
        if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
            return weights, velocity, float("nan"), float("nan"), True
        grad, last_norm = rescale_gradient(grad, config.clip_threshold,
                                           config.boost_threshold)
        v = config.momentum * v - config.learning_rate * grad
        w = w + v
        if not np.all(np.isfinite(w)):
            return weights, velocity, float("nan"), float("nan"), True
        epoch_sq += loss * total
        epoch_count += total
    return w, v, epoch_sq / epoch_count, last_norm, False


def apply_fresh_node_initialization(genome: RnnGenome,
                                    config: TrainingConfig) -> None:
    """One-time parameter adjustments for nodes created by the generating
    operator; currently the LSTM forget-gate bias offset.  Clears the fresh
    list so the offset is never applied twice."""
    for nid in genome.fresh_node_ids:
        for node in genome.nodes:
            if node.innovation_id == nid and node.cell_type == cells.LSTM:
                node.params[cells.LSTM_FORGET_BIAS_INDEX] += \
                    config.lstm_forget_bias_offset
    genome.fresh_node_ids = ()


def train(genome: RnnGenome, train_frames, val_frames,
          config: TrainingConfig) -> TrainingOutcome:
    """Train a copy of the genome for ``config.epochs`` epochs and score it
    on the validation frames.  The input genome is never mutated."""
    g = genome.copy(reset_fitness=True)
    apply_fresh_node_initialization(g, config)
    net = compile_network(g)
    weights = net.weights.copy()
    velocity = np.zeros_like(weights)
    train_mse = []
    diverged = False
    for _ in range(config.epochs):
        weights, velocity, loss, _, bad = bptt_epoch(
            net, weights, velocity, train_frames, config)
        if bad:
            diverged = True
            break
        train_mse.append(loss)
    write_back(net, g, weights)
    if diverged:
        return TrainingOutcome(g, train_mse, float("inf"), True)
    val = evaluate_mse(net, weights, val_frames)
    if not math.isfinite(val):
        return TrainingOutcome(g, train_mse, float("inf"), True)
    return TrainingOutcome(g, train_mse, val, False)
