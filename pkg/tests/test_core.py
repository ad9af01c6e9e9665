import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minplus.core import (
    ConvVerificationInstance,
    DimensionMismatchError,
    IntArray,
    MonotoneTag,
    ValidationReport,
    VerificationInstance,
    as_int_array,
    minplus_convolution_naive,
    minplus_product_naive,
    validate_instance,
    validate_promises,
    witness_mask_naive,
)


def test_validate_row_monotone_ok():
    tag = MonotoneTag("row-monotone", 2)
    rep = validate_promises(np.array([[1, 2], [1, 2]]), tag)
    assert rep == ValidationReport(True)


def test_validate_row_monotone_violation_coord():
    # 2 followed by 1 breaks monotonicity at the second entry of row 0
    rep = validate_promises(np.array([[2, 1]]), MonotoneTag("row-monotone", 10))
    assert not rep.ok
    assert rep.coord == (0, 1)
    assert rep.reason == "monotonicity"


def test_validate_array_monotone_ok():
    rep = validate_promises(IntArray(np.array([1, 1, 3])), MonotoneTag("array-monotone", 3))
    assert rep.ok


def test_validate_bound_violation_precedes():
    rep = validate_promises(np.array([[0, 5]]), MonotoneTag("row-monotone", 4))
    assert not rep.ok and rep.coord == (0, 0) and rep.reason == "bound"


def test_validate_column_monotone():
    rep = validate_promises(np.array([[3, 1], [2, 2]]), MonotoneTag("column-monotone", 5))
    assert not rep.ok and rep.coord == (1, 0)


def test_product_naive_hand_instance():
    A = np.array([[0, 1], [2, 0]])
    B = np.array([[1, 2], [1, 2]])
    assert np.array_equal(minplus_product_naive(A, B), [[1, 2], [1, 2]])


def test_product_naive_single_cell():
    assert np.array_equal(minplus_product_naive([[0]], [[5]]), [[5]])


def test_product_naive_zero_left_factor():
    rng = np.random.default_rng(1)
    B = np.sort(rng.integers(1, 9, size=(3, 4)), axis=1)
    A = np.zeros((2, 3), dtype=np.int64)
    C = minplus_product_naive(A, B)
    assert np.array_equal(C, np.broadcast_to(B.min(axis=0), (2, 4)))


def test_product_naive_dim_mismatch():
    with pytest.raises(DimensionMismatchError):
        minplus_product_naive(np.zeros((2, 3)), np.zeros((2, 3)))


def test_convolution_naive_hand_instance():
    out = minplus_convolution_naive(as_int_array([1, 2]), as_int_array([1, 1]))
    assert out.origin == 2
    assert np.array_equal(out.values, [2, 2, 3])


def test_convolution_naive_length_one():
    out = minplus_convolution_naive(as_int_array([3]), as_int_array([4]))
    assert np.array_equal(out.values, [7])


def test_convolution_naive_zero():
    out = minplus_convolution_naive(as_int_array([0] * 5), as_int_array([0] * 5))
    assert np.array_equal(out.values, np.zeros(9, dtype=np.int64))


def _matrix_instance(A, B, C, M=100):
    return VerificationInstance(
        A=np.asarray(A, dtype=np.int64),
        B=np.asarray(B, dtype=np.int64),
        C=np.asarray(C, dtype=np.int64),
        M=M,
    )


def test_witness_mask_all_true_on_exact_product():
    A = np.array([[0, 1], [2, 0]])
    B = np.array([[1, 2], [1, 2]])
    C = minplus_product_naive(A, B)
    mask = witness_mask_naive(_matrix_instance(A, B, C), "ij")
    assert mask.all()


def test_witness_mask_all_false_below_sums():
    A = np.array([[0, 1], [2, 0]])
    B = np.array([[1, 2], [1, 2]])
    mask = witness_mask_naive(_matrix_instance(A, B, np.zeros((2, 2))), "ij")
    assert not mask.any()


def test_witness_mask_conv():
    inst = ConvVerificationInstance(
        A=as_int_array([1, 2]),
        B=as_int_array([1, 1]),
        C=IntArray(np.array([2, 2, 3]), origin=2),
        M=100,
    )
    assert witness_mask_naive(inst, "k").all()


def test_witness_mask_ik_axis():
    # witness per (i,k): does some j satisfy A[i,k] + B[k,j] == C[i,j]
    A = np.array([[0, 3]])
    B = np.array([[1, 1, 2], [5, 5, 5]])
    C = np.array([[1, 3, 9]])
    mask = witness_mask_naive(_matrix_instance(A, B, C), "ik")
    assert mask.tolist() == [[True, False]]


def test_validate_instance_residue_promise():
    inst = _matrix_instance([[100]], [[100]], [[211]], M=100)
    rep = validate_instance(inst)
    assert not rep.ok and "residue" in rep.reason and rep.coord == (0, 0)


def test_validate_instance_ok():
    inst = _matrix_instance([[100, 105]], [[200], [300]], [[301]], M=100)
    assert validate_instance(inst).ok


monotone_rows = st.integers(1, 6).flatmap(
    lambda n: st.lists(
        st.lists(st.integers(1, 30), min_size=n, max_size=n).map(sorted),
        min_size=1,
        max_size=6,
    )
)


@settings(max_examples=60, deadline=None)
@given(monotone_rows, st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_product_rows_stay_monotone_when_B_is(brows, ni, seed):
    B = np.array(brows, dtype=np.int64)
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 20, size=(ni, B.shape[0])).astype(np.int64)
    C = minplus_product_naive(A, B)
    assert (C[:, 1:] >= C[:, :-1]).all()


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_product_cell_is_min_over_k(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 15, size=(n, n)).astype(np.int64)
    B = rng.integers(0, 15, size=(n, n)).astype(np.int64)
    C = minplus_product_naive(A, B)
    for i in range(n):
        for j in range(n):
            sums = [int(A[i, k] + B[k, j]) for k in range(n)]
            assert C[i, j] == min(sums)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_conv_cell_is_min_over_i(n, seed):
    rng = np.random.default_rng(seed)
    a = np.sort(rng.integers(1, 25, size=n)).astype(np.int64)
    b = np.sort(rng.integers(1, 25, size=n)).astype(np.int64)
    out = minplus_convolution_naive(as_int_array(a), as_int_array(b)).values
    for t in range(2 * n - 1):
        best = min(
            int(a[i] + b[t - i])
            for i in range(max(0, t - n + 1), min(n - 1, t) + 1)
        )
        assert out[t] == best


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_witness_mask_true_on_lifted_product(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 9, size=(n, n)).astype(np.int64)
    B = np.sort(rng.integers(1, 9, size=(n, n)), axis=1).astype(np.int64)
    C = minplus_product_naive(A, B)
    assert witness_mask_naive(_matrix_instance(A, B, C), "ij").all()
