import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from tensorparse.errors import ShapeError
from tensorparse.tensor import as_tensor, concat, row_reverse, tensor_transpose

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_row_reverse_two_rows():
    np.testing.assert_array_equal(row_reverse(np.array([[1.0, 2], [3, 4]])), [[3, 4], [1, 2]])


def test_row_reverse_single_row_is_identity():
    np.testing.assert_array_equal(row_reverse(np.array([[5.0, 6]])), [[5, 6]])


def test_row_reverse_matches_exchange_matrix(rng):
    m = rng.normal(size=(4, 3))
    exchange = np.fliplr(np.eye(4))
    np.testing.assert_array_equal(row_reverse(m), exchange @ m)


def test_row_reverse_rejects_non_matrix():
    with pytest.raises(ShapeError):
        row_reverse(np.zeros(3))
    with pytest.raises(ShapeError):
        row_reverse(np.zeros((2, 2, 2)))


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite))
def test_row_reverse_involution(m):
    np.testing.assert_array_equal(row_reverse(row_reverse(m)), m)


def test_transpose_shape_and_elements(rng):
    t = rng.normal(size=(2, 3, 4))
    out = tensor_transpose(t, (1, 0, 2))
    assert out.shape == (3, 2, 4)
    for i, j, k in np.ndindex(t.shape):
        assert out[j, i, k] == t[i, j, k]


def test_transpose_identity_is_bitwise(rng):
    t = rng.normal(size=(2, 3, 4))
    assert tensor_transpose(t, (0, 1, 2)).tobytes() == t.tobytes()


def test_transpose_accepts_any_permutation(rng):
    t = rng.normal(size=(2, 3, 4))
    assert tensor_transpose(t, (2, 0, 1)).shape == (4, 2, 3)


@pytest.mark.parametrize("perm", [(0, 0, 1), (0, 1), (1, 2, 3)])
def test_transpose_rejects_bad_permutation(perm):
    with pytest.raises(ValueError):
        tensor_transpose(np.zeros((2, 2, 2)), perm)


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=3, max_dims=3, max_side=5), elements=finite))
def test_transpose_involution(t):
    np.testing.assert_array_equal(tensor_transpose(tensor_transpose(t, (1, 0, 2)), (1, 0, 2)), t)


def test_concat_second_axis():
    a = np.arange(6.0).reshape(2, 3)
    b = np.array([[10.0], [20.0]])
    out = concat(a, b, axis=1)
    assert out.shape == (2, 4)
    np.testing.assert_array_equal(out[:, 3], [10, 20])


def test_concat_third_axis_shape():
    assert concat(np.zeros((1, 2, 3)), np.zeros((1, 2, 5)), axis=2).shape == (1, 2, 8)


def test_concat_vectors():
    np.testing.assert_array_equal(concat(np.array([1.0]), np.array([2.0, 3.0]), axis=0), [1, 2, 3])


def test_concat_rejects_off_axis_mismatch():
    with pytest.raises(ShapeError):
        concat(np.zeros((2, 3)), np.zeros((3, 3)), axis=1)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 1))
def test_concat_then_slice_recovers_inputs(n, m, k, axis):
    r = np.random.default_rng(n * 100 + m * 10 + k)
    shape_a = [n, k]
    shape_b = [n, k]
    shape_b[axis] = m
    a, b = r.normal(size=shape_a), r.normal(size=shape_b)
    out = concat(a, b, axis=axis)
    first = out[:n] if axis == 0 else out[:, :k]
    second = out[n:] if axis == 0 else out[:, k:]
    np.testing.assert_array_equal(first, a)
    np.testing.assert_array_equal(second, b)


def test_as_tensor_validates():
    assert as_tensor([[1, 2]]).dtype == np.float64
    with pytest.raises(ShapeError):
        as_tensor(np.zeros((1, 1, 1, 1)))
    with pytest.raises(ShapeError):
        as_tensor(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        as_tensor([np.nan])
