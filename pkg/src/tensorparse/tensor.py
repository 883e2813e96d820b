"""Structural tensor operations used by the encoder.

Dense tensors are float64 ``ndarray`` values of rank 1 to 3. Each op here
also accepts recorded :class:`~tensorparse.autodiff.Var` operands, so the same
call works in inference and during gradient computation.
"""
import numpy as np

from . import autodiff as ad
from .errors import ShapeError


def as_tensor(values):
    """Copy ``values`` into a float64 array of rank 1-3 with finite entries."""
    arr = np.array(values, dtype=np.float64)
    if not 1 <= arr.ndim <= 3:
        raise ShapeError(f"tensors have rank 1 to 3, got rank {arr.ndim}")
    if 0 in arr.shape:
        raise ShapeError(f"tensor dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains non-finite values")
    return arr


def row_reverse(m):
    """Reverse the row order of a matrix (left-multiplication by the exchange matrix)."""
    if ad.value_of(m).ndim != 2:
        raise ShapeError(f"row_reverse expects a matrix, got shape {ad.value_of(m).shape}")
    return ad.flip(m, axis=0)


def tensor_transpose(t, perm):
    """Permute the axes of a rank-3 tensor.

    ``perm`` lists source axes (0-based) in their new order, as in
    ``np.transpose``: ``(1, 0, 2)`` swaps the first two axes.
    """
    shape = ad.value_of(t).shape
    if len(shape) != 3:
        raise ShapeError(f"tensor_transpose expects a rank-3 tensor, got shape {shape}")
    perm = tuple(perm)
    if sorted(perm) != [0, 1, 2]:
        raise ValueError(f"invalid axis permutation {perm!r}")
    if perm == (0, 1, 2):
        return t
    return ad.transpose(t, perm)


def concat(a, b, axis):
    """Concatenate ``a`` then ``b`` along ``axis``; all other axes must agree."""
    sa, sb = ad.value_of(a).shape, ad.value_of(b).shape
    if len(sa) != len(sb):
        raise ShapeError(f"cannot concatenate rank {len(sa)} with rank {len(sb)}")
    if not -len(sa) <= axis < len(sa):
        raise ShapeError(f"axis {axis} out of range for rank {len(sa)}")
    axis %= len(sa)
    for i, (x, y) in enumerate(zip(sa, sb)):
        if i != axis and x != y:
            raise ShapeError(f"shapes {sa} and {sb} differ off axis {axis}")
    return ad.concat([a, b], axis=axis)
