"""Four-directional Tensor-LSTM encoder.

A sentence's ``w x f`` feature matrix is expanded into a ``w x (w+1) x (2f+1)``
edge tensor (dependent features, head features, root flag), run through
stacked four-directional Tensor-LSTM layers and mapped pointwise to a
``w x (w+1)`` score matrix. Column 0 of a score matrix is the root; column
``j`` is token ``j`` (1-based), so cell ``(i, i+1)`` is a self-arc and is
masked downstream.
"""
from dataclasses import dataclass, fields

import numpy as np

from . import autodiff as ad
from .errors import ShapeError
from .tensor import concat, row_reverse, tensor_transpose

GATES = ("input", "forget", "output", "cell")
DIRECTIONS = ("row_fwd", "row_bwd", "col_fwd", "col_bwd")


@dataclass
class LstmParams:
    """Gate weights ``h x (x+h)`` and biases ``h`` for one LSTM direction."""

    W_input: np.ndarray
    W_forget: np.ndarray
    W_output: np.ndarray
    W_cell: np.ndarray
    b_input: np.ndarray
    b_forget: np.ndarray
    b_output: np.ndarray
    b_cell: np.ndarray

    @property
    def hidden(self):
        return self.W_input.shape[0]

    @property
    def input_width(self):
        return self.W_input.shape[1] - self.hidden

    def validate(self):
        h = self.hidden
        for gate in GATES:
            w = getattr(self, "W_" + gate)
            b = getattr(self, "b_" + gate)
            if tuple(w.shape) != tuple(self.W_input.shape):
                raise ShapeError(f"W_{gate} has shape {w.shape}, expected {self.W_input.shape}")
            if tuple(b.shape) != (h,):
                raise ShapeError(f"b_{gate} has shape {b.shape}, expected ({h},)")

    @classmethod
    def zeros(cls, input_width, hidden):
        return cls(*[np.zeros((hidden, input_width + hidden)) for _ in GATES],
                   *[np.zeros(hidden) for _ in GATES])


@dataclass
class LayerParams:
    row_fwd: LstmParams
    row_bwd: LstmParams
    col_fwd: LstmParams
    col_bwd: LstmParams


@dataclass
class ModelParams:
    """All learned weights: one :class:`LayerParams` per stacked layer plus the output map."""

    layers: list
    output_weights: np.ndarray
    output_bias: np.ndarray  # shape (1,)

    @property
    def hidden(self):
        return self.layers[0].row_fwd.hidden

    @property
    def features(self):
        return (self.layers[0].row_fwd.input_width - 1) // 2

    @property
    def num_layers(self):
        return len(self.layers)

    def validate(self):
        if not self.layers:
            raise ShapeError("a model needs at least one layer")
        h = self.hidden
        for k, layer in enumerate(self.layers):
            expected = 2 * self.features + 1 if k == 0 else 4 * h
            for name in DIRECTIONS:
                p = getattr(layer, name)
                p.validate()
                if p.hidden != h or p.input_width != expected:
                    raise ShapeError(
                        f"layer {k} {name}: input width {p.input_width}, hidden {p.hidden}; "
                        f"expected {expected}, {h}")
        if tuple(self.output_weights.shape) != (4 * h,):
            raise ShapeError(f"output weights have shape {self.output_weights.shape}")
        if tuple(self.output_bias.shape) != (1,):
            raise ShapeError(f"output bias has shape {self.output_bias.shape}")

    def flatten(self):
        """Name -> array mapping, in a fixed order."""
        flat = {}
        for k, layer in enumerate(self.layers):
            for name in DIRECTIONS:
                p = getattr(layer, name)
                for fld in fields(LstmParams):
                    flat[f"layers.{k}.{name}.{fld.name}"] = getattr(p, fld.name)
        flat["output.weights"] = self.output_weights
        flat["output.bias"] = self.output_bias
        return flat

    @classmethod
    def from_flat(cls, flat):
        count = 1 + max(int(key.split(".")[1]) for key in flat if key.startswith("layers."))
        layers = []
        for k in range(count):
            dirs = {}
            for name in DIRECTIONS:
                prefix = f"layers.{k}.{name}."
                dirs[name] = LstmParams(**{fld.name: flat[prefix + fld.name]
                                           for fld in fields(LstmParams)})
            layers.append(LayerParams(**dirs))
        return cls(layers, flat["output.weights"], flat["output.bias"])

    @classmethod
    def zeros(cls, features, hidden, num_layers):
        layers = []
        for k in range(num_layers):
            width = 2 * features + 1 if k == 0 else 4 * hidden
            layers.append(LayerParams(*[LstmParams.zeros(width, hidden) for _ in DIRECTIONS]))
        return cls(layers, np.zeros(4 * hidden), np.zeros(1))


def self_arc_mask(w):
    """Boolean ``w x (w+1)`` matrix, True on the self-arc cells ``(i, i+1)``."""
    mask = np.zeros((w, w + 1), dtype=bool)
    mask[np.arange(w), np.arange(1, w + 1)] = True
    return mask


def apply_dropout(t, p, seed=None, train_mode=True):
    """Inverted dropout: zero each element with probability ``p`` and scale survivors by 1/(1-p).

    ``seed`` may be an int or a ``numpy.random.Generator``. Identity when
    ``train_mode`` is off or ``p == 0``.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not train_mode or p == 0.0:
        return t
    rng = np.random.default_rng(seed)
    keep = rng.random(ad.value_of(t).shape) >= p
    return ad.mul(t, keep / (1.0 - p))


def lstm_cell(x, h_prev, c_prev, p):
    """One LSTM step on vectors; returns ``(h, c)``."""
    x, h_prev, c_prev = (ad.value_of(v) if not isinstance(v, ad.Var) else v
                         for v in (x, h_prev, c_prev))
    if (ad.value_of(x).shape != (p.input_width,) or ad.value_of(h_prev).shape != (p.hidden,)
            or ad.value_of(c_prev).shape != (p.hidden,)):
        raise ShapeError(
            f"lstm_cell: x {ad.value_of(x).shape}, h {ad.value_of(h_prev).shape}, "
            f"c {ad.value_of(c_prev).shape} do not match params (x={p.input_width}, h={p.hidden})")
    joined = ad.concat([x, h_prev], axis=0)
    g_input = ad.sigmoid(p.W_input @ joined + p.b_input)
    g_forget = ad.sigmoid(p.W_forget @ joined + p.b_forget)
    g_output = ad.sigmoid(p.W_output @ joined + p.b_output)
    c = g_forget * c_prev + g_input * ad.tanh(p.W_cell @ joined + p.b_cell)
    h = g_output * ad.tanh(c)
    return h, c


def _run_rows(t, p):
    """Matrix-LSTM along axis 1 of ``t`` (shape a x b x c), batched over axis 0."""
    a, b, c = ad.value_of(t).shape
    if c != p.input_width:
        raise ShapeError(f"input width {c} does not match LSTM input width {p.input_width}")
    h = p.hidden
    weights = ad.transpose(ad.concat([p.W_input, p.W_forget, p.W_output, p.W_cell], axis=0),
                           (1, 0))
    bias = ad.concat([p.b_input, p.b_forget, p.b_output, p.b_cell], axis=0)
    # I = x (+) h_prev, so W I splits into an input part and a recurrent part
    projected = ad.matmul(t, weights[:c]) + bias
    recurrent = weights[c:]
    outputs = []
    h_prev = c_prev = None
    for j in range(b):
        z = projected[:, j]
        if h_prev is not None:
            z = z + ad.matmul(h_prev, recurrent)
        gates = ad.sigmoid(z[:, :3 * h])
        candidate = ad.tanh(z[:, 3 * h:])
        cell = gates[:, :h] * candidate
        if c_prev is not None:
            cell = gates[:, h:2 * h] * c_prev + cell
        h_prev = gates[:, 2 * h:] * ad.tanh(cell)
        c_prev = cell
        outputs.append(h_prev)
    return ad.stack(outputs, axis=1)


def matrix_lstm(x, p):
    """Apply an LSTM to the rows of ``x`` (a x b); returns the a x h hidden states."""
    shape = ad.value_of(x).shape
    if len(shape) != 2 or 0 in shape:
        raise ShapeError(f"matrix_lstm expects a non-empty matrix, got shape {shape}")
    return _run_rows(ad.reshape(x, (1,) + shape), p)[0]


def bidirectional_matrix_lstm(x, p_fwd, p_bwd):
    return concat(matrix_lstm(x, p_fwd), row_reverse(matrix_lstm(row_reverse(x), p_bwd)), axis=1)


def tensor_lstm_2d(t, p_fwd, p_bwd):
    """Bidirectional Matrix-LSTM on every matrix along the first axis (shared parameters)."""
    shape = ad.value_of(t).shape
    if len(shape) != 3 or 0 in shape:
        raise ShapeError(f"tensor_lstm_2d expects a non-empty rank-3 tensor, got {shape}")
    forward = _run_rows(t, p_fwd)
    backward = ad.flip(_run_rows(ad.flip(t, axis=1), p_bwd), axis=1)
    return concat(forward, backward, axis=2)


def tensor_lstm_4d(t, layer):
    """Row-wise pass concatenated with the transposed column-wise pass: a x b x 4h."""
    rows = tensor_lstm_2d(t, layer.row_fwd, layer.row_bwd)
    swapped = tensor_transpose(t, (1, 0, 2))
    cols = tensor_transpose(tensor_lstm_2d(swapped, layer.col_fwd, layer.col_bwd), (1, 0, 2))
    return concat(rows, cols, axis=2)


def build_edge_tensor(s):
    """``w x (w+1) x (2f+1)`` tensor whose cell (i, j) is dependent i's features then head j's.

    Head 0 is the root: zero word features and root flag 1.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or 0 in s.shape:
        raise ShapeError(f"feature matrix must be non-empty w x f, got {s.shape}")
    w, f = s.shape
    heads = np.zeros((w + 1, f + 1))
    heads[0, f] = 1.0
    heads[1:, :f] = s
    dependents = np.broadcast_to(s[:, None, :], (w, w + 1, f))
    return np.concatenate([dependents, np.broadcast_to(heads[None], (w, w + 1, f + 1))], axis=2)


def score_sentence(features, params, train_mode=False, rng=None,
                   input_dropout=0.2, hidden_dropout=0.5):
    """Score every (dependent, head) pair of one sentence.

    Returns a ``w x (w+1)`` matrix (a recorded variable when ``params`` holds
    variables). Self-arc cells carry values but are meaningless; see
    :func:`self_arc_mask`. Dropout is applied only when ``train_mode`` is set.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.features:
        raise ShapeError(f"feature matrix {features.shape} does not match model "
                         f"feature width {params.features}")
    hidden = build_edge_tensor(features)
    if train_mode:
        hidden = apply_dropout(hidden, input_dropout, rng)
    for layer in params.layers:
        hidden = tensor_lstm_4d(hidden, layer)
        if train_mode:
            hidden = apply_dropout(hidden, hidden_dropout, rng)
    return ad.matmul(hidden, params.output_weights) + params.output_bias
