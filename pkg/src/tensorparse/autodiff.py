"""Minimal reverse-mode differentiation over numpy arrays.

Every op accepts plain ``ndarray`` operands and returns a plain ``ndarray``
when none of them is a :class:`Var`; this lets the encoder run the same code
for inference (no bookkeeping) and for training (recorded on a tape).

A :class:`Tape` is created per :func:`compute_gradients` call, so independent
gradient computations never share mutable state and may run concurrently over
the same read-only parameter arrays.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


class Tape:
    """Records nodes in creation order; creation order is a valid topological order."""

    def __init__(self):
        self.nodes = []
        self.first_nonfinite = None

    def record(self, node):
        self.nodes.append(node)
        if self.first_nonfinite is None and not np.all(np.isfinite(node.value)):
            self.first_nonfinite = node.op


class Var:
    __slots__ = ("value", "tape", "parents", "backward", "op")
    __array_priority__ = 100  # make ndarray <op> Var dispatch to Var

    def __init__(self, value, tape, parents=(), backward=None, op="leaf"):
        self.value = value
        self.tape = tape
        self.parents = parents
        self.backward = backward
        self.op = op
        tape.record(self)

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(op={self.op!r}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)


def value_of(x):
    """Underlying array; non-float inputs become float64, float inputs keep their precision."""
    if isinstance(x, Var):
        return x.value
    arr = np.asarray(x)
    return arr if arr.dtype.kind == "f" else arr.astype(np.float64)


def _tape_of(operands):
    for x in operands:
        if isinstance(x, Var):
            return x.tape
    return None


def _make(value, operands, backward, op):
    """Wrap ``value`` as a node if any operand is recorded; otherwise return it bare.

    ``backward(g)`` returns one gradient (or None) per operand.
    """
    tape = _tape_of(operands)
    if tape is None:
        return value
    return Var(value, tape, tuple(operands), backward, op)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverses numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- elementwise ---------------------------------------------------------------

def add(a, b):
    av, bv = value_of(a), value_of(b)
    return _make(av + bv, (a, b),
                 lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)), "add")


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    return _make(av - bv, (a, b),
                 lambda g: (_unbroadcast(g, av.shape), _unbroadcast(-g, bv.shape)), "sub")


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    return _make(av * bv, (a, b),
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
                 "mul")


def neg(a):
    return _make(-value_of(a), (a,), lambda g: (-g,), "neg")


def square(a):
    av = value_of(a)
    return _make(av * av, (a,), lambda g: (2.0 * av * g,), "square")


def sigmoid(a):
    av = value_of(a)
    out = np.empty_like(av)
    pos = av >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-av[pos]))
    ez = np.exp(av[~pos])
    out[~pos] = ez / (1.0 + ez)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def tanh(a):
    out = np.tanh(value_of(a))
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def exp(a):
    out = np.exp(value_of(a))
    return _make(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    av = value_of(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(av)
    return _make(out, (a,), lambda g: (g / av,), "log")


# -- linear algebra and reductions ---------------------------------------------

def matmul(a, b):
    """``np.matmul`` with gradients; batch dimensions broadcast."""
    av, bv = value_of(a), value_of(b)

    def backward(g):
        if bv.ndim == 1:
            ga = g[..., None] * bv
            gb = (av * g[..., None]).reshape(-1, bv.shape[0]).sum(axis=0)
        elif av.ndim == 1:
            ga = bv @ g
            gb = np.multiply.outer(av, g)
        else:
            ga = _unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape)
            gb = _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape)
        return ga, gb

    return _make(av @ bv, (a, b), backward, "matmul")


def sum_all(a):
    av = value_of(a)
    return _make(np.asarray(av.sum()), (a,), lambda g: (np.broadcast_to(g, av.shape).copy(),),
                 "sum")


def mean_all(a):
    av = value_of(a)
    n = av.size
    return _make(np.asarray(av.mean()), (a,),
                 lambda g: (np.broadcast_to(g / n, av.shape).copy(),), "mean")


# -- structural ----------------------------------------------------------------

def getitem(a, index):
    av = value_of(a)

    parts = index if isinstance(index, tuple) else (index,)
    basic = all(isinstance(i, (slice, int, type(Ellipsis))) for i in parts)

    def backward(g):
        out = np.zeros_like(av)
        if basic:
            out[index] = g
        else:
            np.add.at(out, index, g)
        return (out,)

    return _make(np.asarray(av[index]), (a,), backward, "getitem")


def reshape(a, shape):
    av = value_of(a)
    return _make(av.reshape(shape), (a,), lambda g: (g.reshape(av.shape),), "reshape")


def transpose(a, perm):
    perm = tuple(perm)
    inverse = tuple(np.argsort(perm))
    return _make(np.transpose(value_of(a), perm), (a,),
                 lambda g: (np.transpose(g, inverse),), "transpose")


def flip(a, axis):
    return _make(np.flip(value_of(a), axis=axis).copy(), (a,),
                 lambda g: (np.flip(g, axis=axis).copy(),), "flip")


def concat(parts, axis):
    values = [value_of(p) for p in parts]
    out = np.concatenate(values, axis=axis)
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(out, tuple(parts), backward, "concat")


def stack(parts, axis):
    values = [value_of(p) for p in parts]
    out = np.stack(values, axis=axis)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(values)))

    return _make(out, tuple(parts), backward, "stack")


# -- fused loss op -------------------------------------------------------------

def masked_row_cross_entropy(scores, gold, valid):
    """Sum over rows of ``-log softmax(row)[gold]`` restricted to ``valid`` cells.

    ``gold`` holds one column index per row; ``valid`` is a boolean matrix of
    the same shape as ``scores``.
    """
    sv = value_of(scores)
    rows = np.arange(sv.shape[0])
    shifted = np.where(valid, sv, -np.inf)
    top = shifted.max(axis=1, keepdims=True)
    expd = np.where(valid, np.exp(shifted - top), 0.0)
    denom = expd.sum(axis=1, keepdims=True)
    probs = expd / denom
    logz = top[:, 0] + np.log(denom[:, 0])
    loss = np.asarray(np.sum(logz - sv[rows, gold]))

    def backward(g):
        grad = probs.copy()
        grad[rows, gold] -= 1.0
        return (g * grad,)

    return _make(loss, (scores,), backward, "cross_entropy")


# -- gradient driver -----------------------------------------------------------

@dataclass
class GradientContext:
    """Parameters, their same-shaped gradients, and the loss value they were taken at."""

    parameters: dict
    gradients: dict = field(default_factory=dict)
    loss: float = float("nan")


def backpropagate(loss):
    """Run the reverse pass from scalar ``loss``; returns ``{id(node): grad}``."""
    grads = {id(loss): np.ones_like(loss.value)}
    for node in reversed(loss.tape.nodes):
        g = grads.pop(id(node), None)
        if g is None or node.backward is None:
            if g is not None:
                grads[id(node)] = g
            continue
        for parent, pg in zip(node.parents, node.backward(g)):
            if pg is None or not isinstance(parent, Var):
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
    return grads


def compute_gradients(loss_builder, params):
    """Gradients of ``loss_builder(params)`` with respect to every entry of ``params``.

    ``params`` maps names to float64 arrays (or is a :class:`GradientContext`).
    ``loss_builder`` receives a dict of the same keys holding recorded
    variables and must return a scalar built from this module's ops.
    """
    if isinstance(params, GradientContext):
        params = params.parameters
    tape = Tape()
    leaves = {name: Var(np.asarray(v, dtype=np.float64), tape) for name, v in params.items()}
    loss = loss_builder(leaves)
    if not isinstance(loss, Var):
        value = float(np.asarray(loss))
        if not np.isfinite(value):
            raise NumericError(f"non-finite loss {value}", op=None)
        zeros = {name: np.zeros_like(np.asarray(v, dtype=np.float64)) for name, v in params.items()}
        return GradientContext(dict(params), zeros, value)
    value = float(loss.value)
    if not np.isfinite(value):
        op = tape.first_nonfinite
        raise NumericError(f"non-finite loss {value}; first non-finite value from op '{op}'",
                           op=op)
    grads = backpropagate(loss)
    out = {}
    for name, leaf in leaves.items():
        g = grads.get(id(leaf))
        out[name] = np.zeros_like(leaf.value) if g is None else np.asarray(g, dtype=np.float64)
    return GradientContext(dict(params), out, value)
