"""Training objectives: row-wise softmax cross-entropy and masked mean squared error."""
import numpy as np

from . import autodiff as ad
from .encoder import self_arc_mask
from .errors import DataError, ShapeError


def softmax_rows(scores, mask=None):
    """Row-wise softmax over unmasked cells; masked cells get probability 0."""
    scores = np.asarray(scores, dtype=np.float64)
    if mask is None:
        mask = self_arc_mask(scores.shape[0])
    shifted = np.where(mask, -np.inf, scores)
    shifted = shifted - shifted.max(axis=1, keepdims=True)
    e = np.where(mask, 0.0, np.exp(shifted))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(pred, gold_heads):
    """``-sum_i log p_i(head_i)`` with each row softmaxed over its unmasked cells.

    ``pred`` is a ``w x (w+1)`` score matrix (array or recorded variable);
    ``gold_heads`` lists one head per token, 0 for the root.
    """
    w, cols = ad.value_of(pred).shape
    if cols != w + 1:
        raise ShapeError(f"score matrix must be w x (w+1), got {(w, cols)}")
    gold = np.asarray(gold_heads, dtype=np.int64)
    if gold.shape != (w,):
        raise ShapeError(f"{len(gold)} gold heads for a {w}-token score matrix")
    for i, h in enumerate(gold):
        if not 0 <= h <= w:
            raise DataError(f"row {i}: gold head {h} out of range")
        if h == i + 1:
            raise DataError(f"row {i}: gold head is the masked self-arc cell")
    return ad.masked_row_cross_entropy(pred, gold, ~self_arc_mask(w))


def mse_loss(pred, target):
    """Mean squared difference over the unmasked (non-self-arc) cells.

    Zero-valued targets count as ordinary targets.
    """
    shape = ad.value_of(pred).shape
    target = np.asarray(target, dtype=np.float64)
    if target.shape != shape or len(shape) != 2 or shape[1] != shape[0] + 1:
        raise ShapeError(f"prediction {shape} and target {target.shape} must both be w x (w+1)")
    valid = ~self_arc_mask(shape[0])
    diff = ad.sub(pred, target)
    return ad.mul(ad.sum_all(ad.mul(ad.square(diff), valid)), 1.0 / valid.sum())
