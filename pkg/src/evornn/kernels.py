"""Unrolled forward and backward passes over a compiled network.

Two interchangeable implementations exist: the plain Python functions below
and numba-compiled versions of the very same functions.  Which one the rest
of the package uses is decided once at import time: numba is the default,
setting the environment variable ``EVORNN_DISABLE_NUMBA`` to a non-empty
value other than ``0`` selects the pure Python path (or numba simply being
absent does).  Both variants stay importable so they can be benchmarked
against each other; they produce bit-identical float64 results because the
jitted code runs without fastmath.

The compiled kernels release the GIL, so worker threads training different
genomes overlap for real.
"""

from __future__ import annotations

import os

import numpy as np

from .cells import cell_backward, cell_forward

DISABLE_ENV = "EVORNN_DISABLE_NUMBA"


def forward_pass_python(cell_code, is_input, input_col, param_off, param_len,
                        ff_ptr, ff_src, ff_widx,
                        rec_ptr, rec_src, rec_skip, rec_widx,
                        weights, inputs, states, cell_states, store):
    """Evaluate every node at every time step.

    ``inputs`` is [T, n_columns]; ``states`` / ``cell_states`` are [T, n]
    output buffers and ``store`` is [T, n, STORE_WIDTH] scratch kept for the
    backward pass.  Nodes are visited in compiled (topological) order;
    recurrent taps read states older than t and are zero before the
    sequence starts.
    """
    n_steps = inputs.shape[0]
    n_nodes = cell_code.shape[0]
    for t in range(n_steps):
        for j in range(n_nodes):
            if is_input[j] == 1:
                states[t, j] = inputs[t, input_col[j]]
                continue
            e_ff = 0.0
            for k in range(ff_ptr[j], ff_ptr[j + 1]):
                e_ff += weights[ff_widx[k]] * states[t, ff_src[k]]
            e_rec = 0.0
            for k in range(rec_ptr[j], rec_ptr[j + 1]):
                tk = t - rec_skip[k]
                if tk >= 0:
                    e_rec += weights[rec_widx[k]] * states[tk, rec_src[k]]
            prev_s = states[t - 1, j] if t > 0 else 0.0
            prev_c = cell_states[t - 1, j] if t > 0 else 0.0
            p = weights[param_off[j]:param_off[j] + param_len[j]]
            s, c = cell_forward(cell_code[j], e_ff, e_rec, prev_s, prev_c,
                                p, store[t, j])
            states[t, j] = s
            cell_states[t, j] = c


def backward_pass_python(cell_code, is_input, input_col, param_off, param_len,
                         ff_ptr, ff_src, ff_widx,
                         rec_ptr, rec_src, rec_skip, rec_widx,
                         weights, states, cell_states, store,
                         d_states, grad):
    """Backpropagation through time over a recorded forward pass.

    ``d_states`` arrives holding dL/d state for every node and step (the
    loss seeds output nodes, everything else is zero) and is consumed as a
    work buffer.  Gradients accumulate into ``grad``, which mirrors the
    weight vector.
    """
    n_steps = states.shape[0]
    n_nodes = cell_code.shape[0]
    d_cell_carry = np.zeros(n_nodes)
    for t in range(n_steps - 1, -1, -1):
        for j in range(n_nodes - 1, -1, -1):
            if is_input[j] == 1:
                continue
            prev_s = states[t - 1, j] if t > 0 else 0.0
            prev_c = cell_states[t - 1, j] if t > 0 else 0.0
            p = weights[param_off[j]:param_off[j] + param_len[j]]
            gp = grad[param_off[j]:param_off[j] + param_len[j]]
            d_eff, d_erec, d_prev_s, d_prev_c = cell_backward(
                cell_code[j], d_states[t, j], d_cell_carry[j],
                states[t, j], cell_states[t, j], prev_s, prev_c,
                p, store[t, j], gp)
            d_cell_carry[j] = d_prev_c
            if t > 0:
                d_states[t - 1, j] += d_prev_s
            for k in range(ff_ptr[j], ff_ptr[j + 1]):
                grad[ff_widx[k]] += d_eff * states[t, ff_src[k]]
                d_states[t, ff_src[k]] += d_eff * weights[ff_widx[k]]
            for k in range(rec_ptr[j], rec_ptr[j + 1]):
                tk = t - rec_skip[k]
                if tk >= 0:
                    grad[rec_widx[k]] += d_erec * states[tk, rec_src[k]]
                    d_states[tk, rec_src[k]] += d_erec * weights[rec_widx[k]]


def _numba_requested() -> bool:
    flag = os.environ.get(DISABLE_ENV, "").strip()
    return flag in ("", "0")


forward_pass_numba = None
backward_pass_numba = None
try:
    from numba import njit

    _jit = njit(cache=True, nogil=True, fastmath=False)
    forward_pass_numba = _jit(forward_pass_python)
    backward_pass_numba = _jit(backward_pass_python)
except ImportError:                                    # pragma: no cover
    pass

NUMBA_ACTIVE = _numba_requested() and forward_pass_numba is not None
if NUMBA_ACTIVE:
    forward_pass = forward_pass_numba
    backward_pass = backward_pass_numba
else:
    forward_pass = forward_pass_python
    backward_pass = backward_pass_python


def run_forward(net, inputs: np.ndarray, weights: np.ndarray | None = None,
                kernel=None):
    """Allocate buffers and run the forward kernel over one sequence.

    Returns ``(states, cell_states, store)``; output predictions are
    ``states[:, net.output_idx]``.
    """
    from .cells import STORE_WIDTH
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != net.n_columns:
        raise ValueError(
            f"input matrix must be [T, {net.n_columns}], got {inputs.shape}")
    w = net.weights if weights is None else weights
    n_steps = inputs.shape[0]
    states = np.zeros((n_steps, net.n_nodes))
    cell_states = np.zeros((n_steps, net.n_nodes))
    store = np.zeros((n_steps, net.n_nodes, STORE_WIDTH))
    fn = forward_pass if kernel is None else kernel
    fn(net.cell_code, net.is_input, net.input_col, net.param_off,
       net.param_len, net.ff_ptr, net.ff_src, net.ff_widx,
       net.rec_ptr, net.rec_src, net.rec_skip, net.rec_widx,
       w, inputs, states, cell_states, store)
    return states, cell_states, store


def run_backward(net, weights, states, cell_states, store, d_states,
                 grad=None, kernel=None):
    """Run the backward kernel; ``d_states`` is consumed.  Returns grad."""
    if grad is None:
        grad = np.zeros(net.n_weights)
    fn = backward_pass if kernel is None else kernel
    fn(net.cell_code, net.is_input, net.input_col, net.param_off,
       net.param_len, net.ff_ptr, net.ff_src, net.ff_widx,
       net.rec_ptr, net.rec_src, net.rec_skip, net.rec_widx,
       weights, states, cell_states, store, d_states, grad)
    return grad
