"""Scalar memory-cell math: forward and backward steps for every cell type.

Each node in a network graph is a single unit.  Incoming feed-forward
connections are reduced to one shared sum ``e_ff`` and incoming recurrent
connections to one shared sum ``e_rec`` before the cell runs; every gate of a
gated cell then applies its own scalar multipliers to those two shared sums.
A connection therefore carries exactly one weight regardless of the cell type
at its endpoints, which keeps crossover between differently-typed nodes
well defined.

``cell_forward`` / ``cell_backward`` are written so that :mod:`evornn.kernels`
can compile them with numba unchanged: they branch on integer cell codes and
touch only floats and 1-d float64 array slices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:
    # Lets jitted kernels call these functions while plain Python callers
    # still run the originals, so there is a single source for the math.
    from numba.extending import register_jitable
except ImportError:                                    # pragma: no cover
    def register_jitable(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

SIMPLE = 0
DELTA = 1
GRU = 2
LSTM = 3
MGU = 4
UGRNN = 5

CELL_NAMES = ("simple", "delta", "gru", "lstm", "mgu", "ugrnn")
CELL_CODES = {name: code for code, name in enumerate(CELL_NAMES)}

# Learnable per-node scalars, in storage order.  "w_*" multiplies e_ff,
# "v_*" multiplies e_rec, "b_*" is the gate bias.
PARAM_NAMES = {
    SIMPLE: ("bias",),
    DELTA: ("alpha", "beta1", "beta2", "gate_bias", "self_weight", "bias"),
    GRU: (
        "w_update", "v_update", "b_update",
        "w_reset", "v_reset", "b_reset",
        "w_cand", "v_cand", "b_cand",
    ),
    LSTM: (
        "w_forget", "v_forget", "b_forget",
        "w_input", "v_input", "b_input",
        "w_cand", "v_cand", "b_cand",
        "w_output", "v_output", "b_output",
    ),
    MGU: (
        "w_forget", "v_forget", "b_forget",
        "w_cand", "v_cand", "b_cand",
    ),
    UGRNN: (
        "w_cand", "v_cand", "b_cand",
        "w_update", "v_update", "b_update",
    ),
}

PARAM_COUNTS = tuple(len(PARAM_NAMES[code]) for code in range(len(CELL_NAMES)))

# Index of b_forget inside the LSTM parameter block; training adds a one-time
# offset here for freshly created LSTM nodes.
LSTM_FORGET_BIAS_INDEX = 2

# Scratch slots stored during the forward step and consumed by the backward
# step.  Width is the max over cell types.
STORE_WIDTH = 6


def param_count(cell_type: int) -> int:
    return PARAM_COUNTS[cell_type]


@register_jitable
def sigmoid(x: float) -> float:
    """Exact logistic; the two-branch form avoids overflow in exp."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@register_jitable
def cell_forward(cell_type, e_ff, e_rec, prev_state, prev_cell, params, store):
    """One step of one unit.  Returns ``(state, cell_state)``.

    ``prev_state`` / ``prev_cell`` are this unit's own outputs at t-1 and are
    zero at t=0.  ``cell_state`` is only meaningful for LSTM; other types
    return 0.0.  ``store`` is a float64 slice of length STORE_WIDTH that
    receives intermediates needed by :func:`cell_backward`.
    """
    if cell_type == SIMPLE:
        return math.tanh(e_ff + e_rec + params[0]), 0.0

    if cell_type == DELTA:
        e_w = e_ff + e_rec + params[5]
        e_v = params[4] * prev_state
        d1 = params[0] * e_v * e_w
        d2 = params[1] * e_v + params[2] * e_w
        r = sigmoid(e_w + params[3])
        cand = math.tanh(d1 + d2)
        store[0] = e_w
        store[1] = e_v
        store[2] = r
        store[3] = cand
        return math.tanh((1.0 - r) * cand + r * prev_state), 0.0

    if cell_type == GRU:
        z = sigmoid(params[0] * e_ff + params[1] * e_rec + params[2])
        r = sigmoid(params[3] * e_ff + params[4] * e_rec + params[5])
        cand = math.tanh(params[6] * e_ff + params[7] * (r * e_rec) + params[8])
        store[0] = e_ff
        store[1] = e_rec
        store[2] = z
        store[3] = r
        store[4] = cand
        return z * cand + (1.0 - z) * prev_state, 0.0

    if cell_type == LSTM:
        f = sigmoid(params[0] * e_ff + params[1] * e_rec + params[2])
        i = sigmoid(params[3] * e_ff + params[4] * e_rec + params[5])
        cand = math.tanh(params[6] * e_ff + params[7] * e_rec + params[8])
        o = sigmoid(params[9] * e_ff + params[10] * e_rec + params[11])
        c = f * prev_cell + i * cand
        store[0] = e_ff
        store[1] = e_rec
        store[2] = f
        store[3] = i
        store[4] = cand
        store[5] = o
        return o * math.tanh(c), c

    if cell_type == MGU:
        f = sigmoid(params[0] * e_ff + params[1] * e_rec + params[2])
        cand = math.tanh(params[3] * e_ff + params[4] * (f * e_rec) + params[5])
        store[0] = e_ff
        store[1] = e_rec
        store[2] = f
        store[3] = cand
        return f * cand + (1.0 - f) * prev_state, 0.0

    # UGRNN
    cand = math.tanh(params[0] * e_ff + params[1] * e_rec + params[2])
    g = sigmoid(params[3] * e_ff + params[4] * e_rec + params[5])
    store[0] = e_ff
    store[1] = e_rec
    store[2] = cand
    store[3] = g
    return g * prev_state + (1.0 - g) * cand, 0.0


@register_jitable
def cell_backward(cell_type, d_state, d_cell_in, state, cell_state,
                  prev_state, prev_cell, params, store, d_params):
    """Backward step matching :func:`cell_forward`.

    ``d_state`` is dL/d state(t); ``d_cell_in`` is dL/d cell_state(t) carried
    back from t+1 (LSTM only).  Accumulates into ``d_params`` and returns
    ``(d_e_ff, d_e_rec, d_prev_state, d_prev_cell)``.
    """
    if cell_type == SIMPLE:
        dz = d_state * (1.0 - state * state)
        d_params[0] += dz
        return dz, dz, 0.0, 0.0

    if cell_type == DELTA:
        e_w = store[0]
        e_v = store[1]
        r = store[2]
        cand = store[3]
        d_inner = d_state * (1.0 - state * state)
        d_r = d_inner * (prev_state - cand)
        d_cand = d_inner * (1.0 - r)
        d_prev = d_inner * r
        d_dd = d_cand * (1.0 - cand * cand)
        d_params[0] += d_dd * e_v * e_w
        d_params[1] += d_dd * e_v
        d_params[2] += d_dd * e_w
        d_e_v = d_dd * (params[0] * e_w + params[1])
        d_e_w = d_dd * (params[0] * e_v + params[2])
        d_gate = d_r * r * (1.0 - r)
        d_params[3] += d_gate
        d_e_w += d_gate
        d_params[4] += d_e_v * prev_state
        d_prev += d_e_v * params[4]
        d_params[5] += d_e_w
        return d_e_w, d_e_w, d_prev, 0.0

    if cell_type == GRU:
        e_ff = store[0]
        e_rec = store[1]
        z = store[2]
        r = store[3]
        cand = store[4]
        d_z = d_state * (cand - prev_state)
        d_cand = d_state * z
        d_prev = d_state * (1.0 - z)
        d_ac = d_cand * (1.0 - cand * cand)
        d_params[6] += d_ac * e_ff
        d_params[7] += d_ac * (r * e_rec)
        d_params[8] += d_ac
        d_e_ff = d_ac * params[6]
        d_e_rec = d_ac * params[7] * r
        d_r = d_ac * params[7] * e_rec
        d_ar = d_r * r * (1.0 - r)
        d_params[3] += d_ar * e_ff
        d_params[4] += d_ar * e_rec
        d_params[5] += d_ar
        d_e_ff += d_ar * params[3]
        d_e_rec += d_ar * params[4]
        d_az = d_z * z * (1.0 - z)
        d_params[0] += d_az * e_ff
        d_params[1] += d_az * e_rec
        d_params[2] += d_az
        d_e_ff += d_az * params[0]
        d_e_rec += d_az * params[1]
        return d_e_ff, d_e_rec, d_prev, 0.0

    if cell_type == LSTM:
        e_ff = store[0]
        e_rec = store[1]
        f = store[2]
        i = store[3]
        cand = store[4]
        o = store[5]
        tc = math.tanh(cell_state)
        d_o = d_state * tc
        d_c = d_state * o * (1.0 - tc * tc) + d_cell_in
        d_f = d_c * prev_cell
        d_prev_cell = d_c * f
        d_i = d_c * cand
        d_cand = d_c * i
        d_af = d_f * f * (1.0 - f)
        d_ai = d_i * i * (1.0 - i)
        d_ac = d_cand * (1.0 - cand * cand)
        d_ao = d_o * o * (1.0 - o)
        d_params[0] += d_af * e_ff
        d_params[1] += d_af * e_rec
        d_params[2] += d_af
        d_params[3] += d_ai * e_ff
        d_params[4] += d_ai * e_rec
        d_params[5] += d_ai
        d_params[6] += d_ac * e_ff
        d_params[7] += d_ac * e_rec
        d_params[8] += d_ac
        d_params[9] += d_ao * e_ff
        d_params[10] += d_ao * e_rec
        d_params[11] += d_ao
        d_e_ff = d_af * params[0] + d_ai * params[3] + d_ac * params[6] + d_ao * params[9]
        d_e_rec = d_af * params[1] + d_ai * params[4] + d_ac * params[7] + d_ao * params[10]
        return d_e_ff, d_e_rec, 0.0, d_prev_cell

    if cell_type == MGU:
        e_ff = store[0]
        e_rec = store[1]
        f = store[2]
        cand = store[3]
        d_f = d_state * (cand - prev_state)
        d_cand = d_state * f
        d_prev = d_state * (1.0 - f)
        d_ac = d_cand * (1.0 - cand * cand)
        d_params[3] += d_ac * e_ff
        d_params[4] += d_ac * (f * e_rec)
        d_params[5] += d_ac
        d_e_ff = d_ac * params[3]
        d_e_rec = d_ac * params[4] * f
        d_f += d_ac * params[4] * e_rec
        d_af = d_f * f * (1.0 - f)
        d_params[0] += d_af * e_ff
        d_params[1] += d_af * e_rec
        d_params[2] += d_af
        d_e_ff += d_af * params[0]
        d_e_rec += d_af * params[1]
        return d_e_ff, d_e_rec, d_prev, 0.0

    # UGRNN
    e_ff = store[0]
    e_rec = store[1]
    cand = store[2]
    g = store[3]
    d_g = d_state * (prev_state - cand)
    d_cand = d_state * (1.0 - g)
    d_prev = d_state * g
    d_ac = d_cand * (1.0 - cand * cand)
    d_params[0] += d_ac * e_ff
    d_params[1] += d_ac * e_rec
    d_params[2] += d_ac
    d_e_ff = d_ac * params[0]
    d_e_rec = d_ac * params[1]
    d_ag = d_g * g * (1.0 - g)
    d_params[3] += d_ag * e_ff
    d_params[4] += d_ag * e_rec
    d_params[5] += d_ag
    d_e_ff += d_ag * params[3]
    d_e_rec += d_ag * params[4]
    return d_e_ff, d_e_rec, d_prev, 0.0


def _shared_sums(input_values, input_weights, recurrent_values, recurrent_weights):
    e_ff = 0.0
    for i in range(len(input_weights)):
        e_ff += float(input_weights[i]) * float(input_values[i])
    e_rec = 0.0
    for i in range(len(recurrent_weights)):
        e_rec += float(recurrent_weights[i]) * float(recurrent_values[i])
    return e_ff, e_rec


def _forward_one(cell_type, input_values, input_weights, recurrent_values,
                 recurrent_weights, prev_state, prev_cell, params):
    e_ff, e_rec = _shared_sums(input_values, input_weights,
                               recurrent_values, recurrent_weights)
    store = np.zeros(STORE_WIDTH)
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (param_count(cell_type),):
        raise ValueError(
            f"expected {param_count(cell_type)} params for "
            f"{CELL_NAMES[cell_type]}, got {params.shape}")
    state, cell_state = cell_forward(cell_type, e_ff, e_rec,
                                     float(prev_state), float(prev_cell),
                                     params, store)
    return state, cell_state


def forward_simple(input_values, input_weights, recurrent_values,
                   recurrent_weights, params):
    state, _ = _forward_one(SIMPLE, input_values, input_weights,
                            recurrent_values, recurrent_weights,
                            0.0, 0.0, params)
    return state


def forward_delta(input_values, input_weights, recurrent_values,
                  recurrent_weights, prev_state, params):
    state, _ = _forward_one(DELTA, input_values, input_weights,
                            recurrent_values, recurrent_weights,
                            prev_state, 0.0, params)
    return state


def forward_gru(input_values, input_weights, recurrent_values,
                recurrent_weights, prev_state, params):
    state, _ = _forward_one(GRU, input_values, input_weights,
                            recurrent_values, recurrent_weights,
                            prev_state, 0.0, params)
    return state


def forward_lstm(input_values, input_weights, recurrent_values,
                 recurrent_weights, prev_cell, params):
    """Returns ``(state, cell_state)``."""
    return _forward_one(LSTM, input_values, input_weights,
                        recurrent_values, recurrent_weights,
                        0.0, prev_cell, params)


def forward_mgu(input_values, input_weights, recurrent_values,
                recurrent_weights, prev_state, params):
    state, _ = _forward_one(MGU, input_values, input_weights,
                            recurrent_values, recurrent_weights,
                            prev_state, 0.0, params)
    return state


def forward_ugrnn(input_values, input_weights, recurrent_values,
                  recurrent_weights, prev_state, params):
    state, _ = _forward_one(UGRNN, input_values, input_weights,
                            recurrent_values, recurrent_weights,
                            prev_state, 0.0, params)
    return state


@dataclass
class GradientBuffer:
    """Gradient accumulator for one unit over one unrolled sequence.

    Shapes mirror the unit configuration exactly: ``d_params`` matches the
    cell's parameter block, ``d_ff_weights`` / ``d_rec_weights`` match the
    connection weight vectors, and the input gradients carry one row per
    time step.
    """

    d_params: np.ndarray
    d_ff_weights: np.ndarray
    d_rec_weights: np.ndarray
    d_ff_inputs: np.ndarray
    d_rec_inputs: np.ndarray

    def zero(self) -> None:
        self.d_params[:] = 0.0
        self.d_ff_weights[:] = 0.0
        self.d_rec_weights[:] = 0.0
        self.d_ff_inputs[:] = 0.0
        self.d_rec_inputs[:] = 0.0


@dataclass
class UnitTrace:
    """Everything recorded while unrolling a single unit over a sequence."""

    cell_type: int
    params: np.ndarray
    ff_weights: np.ndarray
    rec_weights: np.ndarray
    rec_skips: np.ndarray
    ff_inputs: np.ndarray       # [T, n_ff]
    rec_values: np.ndarray      # [T, n_rec] resolved recurrent tap values
    states: np.ndarray          # [T]
    cell_states: np.ndarray     # [T]
    store: np.ndarray           # [T, STORE_WIDTH]
    self_recurrent: bool
    external_rec: np.ndarray | None = None


def unit_forward(cell_type: int, params, ff_weights, ff_inputs,
                 rec_weights=(), rec_skips=(), rec_inputs=None) -> UnitTrace:
    """Unroll one unit over a whole sequence.

    ``ff_inputs`` is [T, n_ff].  Recurrent taps either read this unit's own
    past states delayed by ``rec_skips`` (when ``rec_inputs`` is None) or an
    externally supplied [T, n_rec] array.  States before t=0 are zero.
    """
    params = np.asarray(params, dtype=np.float64)
    ff_weights = np.asarray(ff_weights, dtype=np.float64)
    rec_weights = np.asarray(rec_weights, dtype=np.float64)
    rec_skips = np.asarray(rec_skips, dtype=np.int64)
    ff_inputs = np.asarray(ff_inputs, dtype=np.float64)
    if ff_inputs.ndim != 2 or ff_inputs.shape[1] != ff_weights.shape[0]:
        raise ValueError("ff_inputs must be [T, n_ff] matching ff_weights")
    if params.shape != (param_count(cell_type),):
        raise ValueError(
            f"expected {param_count(cell_type)} params for "
            f"{CELL_NAMES[cell_type]}, got {params.shape}")
    n_rec = rec_weights.shape[0]
    self_recurrent = rec_inputs is None
    if self_recurrent and rec_skips.shape[0] != n_rec:
        raise ValueError("rec_skips must match rec_weights")
    steps = ff_inputs.shape[0]
    states = np.zeros(steps)
    cell_states = np.zeros(steps)
    store = np.zeros((steps, STORE_WIDTH))
    rec_values = np.zeros((steps, n_rec))
    external = None
    if not self_recurrent:
        external = np.asarray(rec_inputs, dtype=np.float64)
        if external.shape != (steps, n_rec):
            raise ValueError("rec_inputs must be [T, n_rec]")
    for t in range(steps):
        for j in range(n_rec):
            if self_recurrent:
                tk = t - int(rec_skips[j])
                rec_values[t, j] = states[tk] if tk >= 0 else 0.0
            else:
                rec_values[t, j] = external[t, j]
        e_ff = float(ff_weights @ ff_inputs[t])
        e_rec = float(rec_weights @ rec_values[t]) if n_rec else 0.0
        prev_s = states[t - 1] if t > 0 else 0.0
        prev_c = cell_states[t - 1] if t > 0 else 0.0
        s, c = cell_forward(cell_type, e_ff, e_rec, prev_s, prev_c,
                            params, store[t])
        states[t] = s
        cell_states[t] = c
    return UnitTrace(cell_type=cell_type, params=params,
                     ff_weights=ff_weights, rec_weights=rec_weights,
                     rec_skips=rec_skips, ff_inputs=ff_inputs,
                     rec_values=rec_values, states=states,
                     cell_states=cell_states, store=store,
                     self_recurrent=self_recurrent, external_rec=external)


def unit_backward(trace: UnitTrace, upstream) -> GradientBuffer:
    """Backpropagate dL/d state(t) through a :func:`unit_forward` trace.

    For self-recurrent taps the gradient flows back into earlier states; for
    external taps it lands in ``d_rec_inputs``.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    steps, n_ff = trace.ff_inputs.shape
    n_rec = trace.rec_weights.shape[0]
    if upstream.shape != (steps,):
        raise ValueError("upstream must be [T]")
    buf = GradientBuffer(
        d_params=np.zeros_like(trace.params),
        d_ff_weights=np.zeros(n_ff),
        d_rec_weights=np.zeros(n_rec),
        d_ff_inputs=np.zeros((steps, n_ff)),
        d_rec_inputs=np.zeros((steps, n_rec)),
    )
    d_states = upstream.copy()
    d_cell_next = 0.0
    for t in range(steps - 1, -1, -1):
        prev_s = trace.states[t - 1] if t > 0 else 0.0
        prev_c = trace.cell_states[t - 1] if t > 0 else 0.0
        d_eff, d_erec, d_prev_s, d_prev_c = cell_backward(
            trace.cell_type, d_states[t], d_cell_next,
            trace.states[t], trace.cell_states[t], prev_s, prev_c,
            trace.params, trace.store[t], buf.d_params)
        d_cell_next = d_prev_c
        if t > 0:
            d_states[t - 1] += d_prev_s
        buf.d_ff_weights += d_eff * trace.ff_inputs[t]
        buf.d_ff_inputs[t] = d_eff * trace.ff_weights
        for j in range(n_rec):
            buf.d_rec_weights[j] += d_erec * trace.rec_values[t, j]
            d_tap = d_erec * trace.rec_weights[j]
            buf.d_rec_inputs[t, j] = d_tap
            if trace.self_recurrent:
                tk = t - int(trace.rec_skips[j])
                if tk >= 0:
                    d_states[tk] += d_tap
    return buf
