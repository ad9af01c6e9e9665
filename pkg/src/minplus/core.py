"""Integer matrix/array types, promise validation, and brute-force oracles.

Everything in this module is deliberately small and definitional: the
functions here are the reference behaviour that the fast solvers are tested
against. All public indices are 0-based. ``IntArray.origin`` records the
semantic index of ``values[0]`` (1 for convolution inputs, 2 for convolution
outputs), so callers that want 1-based bookkeeping can reconstruct it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional, Tuple, Union

import numpy as np

__all__ = [
    "INT64_GUARD",
    "Axis",
    "DimensionMismatchError",
    "PromiseViolationError",
    "IntMatrix",
    "IntArray",
    "MonotoneTag",
    "WitnessMask",
    "ValidationReport",
    "VerificationInstance",
    "ConvVerificationInstance",
    "as_int_matrix",
    "as_int_array",
    "validate_promises",
    "validate_instance",
    "require_valid_instance",
    "minplus_product_naive",
    "minplus_convolution_naive",
    "witness_mask_naive",
]

# Any A + B - C the solvers form must fit a signed 64-bit integer with room
# to spare; inputs beyond this are rejected at load/validation time.
INT64_GUARD = int(np.int64(1) << 61)

Axis = Literal["row-monotone", "column-monotone", "array-monotone"]

# A dense 2-D int64 ndarray. Kept as a plain numpy alias on purpose: rows,
# cols and entries are exactly ndarray.shape and ndarray itself.
IntMatrix = np.ndarray

# Boolean ndarray, 2-D for the product variants, 1-D for convolution.
WitnessMask = np.ndarray


class DimensionMismatchError(ValueError):
    """Shapes of the operands do not line up."""


class PromiseViolationError(ValueError):
    """An instance breaks a promised invariant; coord points at the witness."""

    def __init__(self, message: str, coord: Optional[Tuple[int, ...]] = None):
        super().__init__(message)
        self.coord = coord


@dataclass(frozen=True, eq=False)
class IntArray:
    """1-D integer array with an explicit index origin."""

    values: np.ndarray
    origin: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", as_int_vector(self.values))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class MonotoneTag:
    """Which monotonicity promise applies, and the entry bound it comes with."""

    axis: Axis
    entry_bound: int


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    coord: Optional[Tuple[int, ...]] = None
    reason: str = ""


@dataclass(frozen=True, eq=False)
class VerificationInstance:
    """(A, B, C, M) with the small-residue promise, matrix variants.

    variant "row" answers per output cell (i, j) whether some inner k has
    A[i,k] + B[k,j] == C[i,j]; variant "col" holds the already rotated data
    (same layout and promises) and answers per (i, k) whether some column j
    works. In both variants B and C are row-monotone.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    M: int
    variant: str = "row"


@dataclass(frozen=True, eq=False)
class ConvVerificationInstance:
    """(A, B, C, M) for convolution verification; C has origin 2."""

    A: IntArray
    B: IntArray
    C: IntArray
    M: int


def as_int_matrix(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=np.int64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.size and int(np.abs(a).max()) >= INT64_GUARD:
        raise PromiseViolationError("entries too large for safe 64-bit arithmetic")
    return a


def as_int_vector(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=np.int64)
    if a.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D array, got ndim={a.ndim}")
    if a.size == 0:
        raise DimensionMismatchError("empty array")
    if int(np.abs(a).max()) >= INT64_GUARD:
        raise PromiseViolationError("entries too large for safe 64-bit arithmetic")
    return a


def as_int_array(obj, origin: int = 1) -> IntArray:
    if isinstance(obj, IntArray):
        return obj
    return IntArray(values=as_int_vector(obj), origin=origin)


def _values_of(m) -> np.ndarray:
    if isinstance(m, IntArray):
        return m.values
    return np.asarray(m, dtype=np.int64)


def validate_promises(m: Union[IntMatrix, IntArray], tag: MonotoneTag) -> ValidationReport:
    """Check monotonicity along tag.axis and entries within [1, entry_bound].

    Returns ok, or the smallest violating coordinate in row-major order.
    A monotonicity break between positions p and p+1 is reported at p+1.
    """
    v = _values_of(m)
    if tag.axis == "array-monotone":
        if v.ndim != 1:
            raise DimensionMismatchError("array-monotone tag on a non-array")
    else:
        if v.ndim != 2:
            raise DimensionMismatchError("matrix tag on a non-matrix")

    bad_bound = (v < 1) | (v > tag.entry_bound)
    bad_mono = np.zeros_like(bad_bound)
    if tag.axis == "row-monotone":
        bad_mono[:, 1:] = v[:, 1:] < v[:, :-1]
    elif tag.axis == "column-monotone":
        bad_mono[1:, :] = v[1:, :] < v[:-1, :]
    else:
        bad_mono[1:] = v[1:] < v[:-1]

    viol = bad_bound | bad_mono
    if not viol.any():
        return ValidationReport(True)
    flat = int(np.argmax(viol))
    coord = tuple(int(c) for c in np.unravel_index(flat, viol.shape))
    reason = "bound" if bad_bound[coord] else "monotonicity"
    return ValidationReport(False, coord=coord, reason=reason)


def _first_bad(mask: np.ndarray) -> Tuple[int, ...]:
    flat = int(np.argmax(mask))
    return tuple(int(c) for c in np.unravel_index(flat, mask.shape))


def validate_instance(
    inst: Union[VerificationInstance, ConvVerificationInstance],
) -> ValidationReport:
    """Validate the promises of a verification instance (report style)."""
    if isinstance(inst, ConvVerificationInstance):
        a, b, c = inst.A.values, inst.B.values, inst.C.values
        n = a.shape[0]
        if b.shape[0] != n or c.shape[0] != 2 * n - 1:
            return ValidationReport(False, reason="shape")
        mats = (("A", a), ("B", b), ("C", c))
        mono = (("A", a), ("B", b))
    else:
        a, b, c = inst.A, inst.B, inst.C
        if a.ndim != 2 or b.ndim != 2 or c.ndim != 2:
            return ValidationReport(False, reason="shape")
        if a.shape[1] != b.shape[0] or c.shape != (a.shape[0], b.shape[1]):
            return ValidationReport(False, reason="shape")
        mats = (("A", a), ("B", b), ("C", c))
        mono = (("B", b), ("C", c))

    M = inst.M
    if M < 100 or M % 100 != 0:
        return ValidationReport(False, reason="M not a positive multiple of 100")
    for name, m in mats:
        neg = m < 0
        if neg.any():
            return ValidationReport(False, coord=_first_bad(neg), reason=f"{name} negative entry")
        res = (m % M) > (M // 10)
        if res.any():
            return ValidationReport(False, coord=_first_bad(res), reason=f"{name} residue exceeds M/10")
    for name, m in mono:
        if m.ndim == 1:
            brk = np.zeros(m.shape, dtype=bool)
            brk[1:] = m[1:] < m[:-1]
        else:
            brk = np.zeros(m.shape, dtype=bool)
            brk[:, 1:] = m[:, 1:] < m[:, :-1]
        if brk.any():
            return ValidationReport(False, coord=_first_bad(brk), reason=f"{name} not monotone")
    return ValidationReport(True)


def require_valid_instance(inst) -> None:
    rep = validate_instance(inst)
    if not rep.ok:
        raise PromiseViolationError(f"invalid instance: {rep.reason}", coord=rep.coord)


def minplus_product_naive(A: IntMatrix, B: IntMatrix) -> IntMatrix:
    """C[i,j] = min over k of A[i,k] + B[k,j], straight from the definition."""
    A = as_int_matrix(A)
    B = as_int_matrix(B)
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(
            f"inner dimensions differ: {A.shape[1]} vs {B.shape[0]}"
        )
    ni, nb = A.shape[0], B.shape[1]
    C = np.empty((ni, nb), dtype=np.int64)
    for i in range(ni):
        C[i] = (A[i][:, None] + B).min(axis=0)
    return C


def minplus_convolution_naive(A: IntArray, B: IntArray) -> IntArray:
    """(A <> B)[k] = min over valid i of A[i] + B[k-i]; output origin is 2."""
    a = as_int_array(A).values
    b = as_int_array(B).values
    n = a.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatchError(f"length mismatch: {n} vs {b.shape[0]}")
    out = np.full(2 * n - 1, np.iinfo(np.int64).max, dtype=np.int64)
    for i in range(n):
        seg = out[i : i + n]
        np.minimum(seg, a[i] + b, out=seg)
    return IntArray(values=out, origin=2)


def witness_mask_naive(
    inst: Union[VerificationInstance, ConvVerificationInstance],
    query_axis: str,
) -> WitnessMask:
    """Exact brute-force witness mask; the oracle all solvers are tested against.

    query_axis: "ij" (per output cell, witness k), "ik" (per (i, k), witness
    j) or "k" (per convolution index, witness i).
    """
    if query_axis == "k":
        if not isinstance(inst, ConvVerificationInstance):
            raise DimensionMismatchError("axis 'k' needs a convolution instance")
        a, b, c = inst.A.values, inst.B.values, inst.C.values
        n = a.shape[0]
        mask = np.zeros(2 * n - 1, dtype=bool)
        for t in range(2 * n - 1):
            lo = max(0, t - (n - 1))
            hi = min(n - 1, t)
            i = np.arange(lo, hi + 1)
            mask[t] = bool(np.any(a[i] + b[t - i] == c[t]))
        return mask

    if isinstance(inst, ConvVerificationInstance):
        raise DimensionMismatchError(f"axis '{query_axis}' needs a matrix instance")
    A, B, C = inst.A, inst.B, inst.C
    if A.shape[1] != B.shape[0] or C.shape != (A.shape[0], B.shape[1]):
        raise DimensionMismatchError("instance shapes are inconsistent")
    ni = A.shape[0]
    if query_axis == "ij":
        mask = np.zeros(C.shape, dtype=bool)
        for i in range(ni):
            mask[i] = ((A[i][:, None] + B) == C[i][None, :]).any(axis=0)
        return mask
    if query_axis == "ik":
        mask = np.zeros(A.shape, dtype=bool)
        for i in range(ni):
            mask[i] = ((A[i][:, None] + B) == C[i][None, :]).any(axis=1)
        return mask
    raise DimensionMismatchError(f"unknown query axis {query_axis!r}")
