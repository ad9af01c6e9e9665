"""Min-plus product for matrices with monotone columns.

The column case reduces to the row machinery through a complement rotation:
``A[i,k] + B[k,j] = C[i,j]`` rearranges to ``(W - C[i,j]) + B[k,j] =
(W - A[i,k])`` for any W at least the maximum entry, so deciding a candidate
C is the same as asking, per cell of ``W - C``, whether some output column of
``(W - C) * B^T`` attains ``W - A``.  After forcing A's rows non-increasing
(a prefix minimum, harmless when B is column-monotone) both rotated right
factors are row-monotone and the verification theory from the row module
applies unchanged.

Two engines solve the rotated check: the congruence scan shared with the row
driver, and a direct two-pointer pass over the constant-block decompositions
of the rotated rows, which needs no residue promise at all and wins whenever
entries are small.  ``col_engine="auto"`` picks by estimated cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .core import (
    IntMatrix,
    MonotoneTag,
    PromiseViolationError,
    VerificationInstance,
    WitnessMask,
    minplus_product_naive,
    require_valid_instance,
    validate_promises,
)
from .modulus import find_good_modulus
from .polyring import DEFAULT_PRIME, CyclicPolyMatrix, PrimeField, polymat_mul
from .product_row import choose_M, normalize_A
from .segments import active_level0_bounds, levelmax_for, matrix_layout, rprime_ik_flat
from .shifting import congruent_witness_scan, residue_class, shift_operand, shift_output


@dataclass(frozen=True)
class RotatedInstance:
    """The complement-rotated triple: (W-C, B^T, W-A) with the witness kept.

    ``A`` is na x nc, ``B`` is nc x nb, ``C`` is na x nb; the question is per
    cell (i, j) of ``A`` whether some column k satisfies
    ``A[i,j] + B[j,k] == C[i,k]``, which holds exactly when k witnessed the
    original product cell (i, j).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: int


def normalize_nonincreasing(A: IntMatrix) -> IntMatrix:
    """Running prefix minimum along each row.

    Valid only against a column-monotone B: a row entry larger than one to
    its left can never win the minimum there, because B's corresponding row
    is entrywise at most the later one.
    """
    return np.minimum.accumulate(np.asarray(A, dtype=np.int64), axis=1)


def rotate_to_problem2prime(
    A: IntMatrix, B: IntMatrix, C_cand: IntMatrix, W: int
) -> RotatedInstance:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    C_cand = np.asarray(C_cand, dtype=np.int64)
    top = max(int(A.max()), int(B.max()), int(C_cand.max()))
    if W < top:
        raise ValueError(f"complement bound {W} below the maximum entry {top}")
    return RotatedInstance(A=W - C_cand, B=np.ascontiguousarray(B.T), C=W - A, W=W)


def compute_r_matrix(
    inst: VerificationInstance, Q: int, field_: PrimeField | None = None
) -> np.ndarray:
    """Count, for each (i, k), the j with A[i,k] + B[k,j] = C[i,j] (mod Q).

    Same polynomial trick as the per-cell count in the row module, with the
    roles rotated: the product of x^(-C) (na x nc) and x^(B^T) (nc x nb)
    collects, per (i, k), one term x^(B[k,j]-C[i,j]) for every j, and the
    congruent j are read off at exponent -A[i,k].
    """
    if field_ is None:
        field_ = PrimeField(DEFAULT_PRIME)
    if inst.C.shape[1] >= field_.p:
        raise ValueError("inner dimension too large for exact counting")
    Pc = CyclicPolyMatrix.from_exponents(field_, Q, -inst.C)
    Pbt = CyclicPolyMatrix.from_exponents(field_, Q, inst.B.T)
    prod = polymat_mul(Pc, Pbt)
    na, nb = inst.A.shape
    rows = np.arange(na)[:, None]
    cols = np.arange(nb)[None, :]
    return prod.coeffs[rows, cols, (-inst.A) % Q]


def solve_verification_col(
    inst: VerificationInstance,
    Q: int | None = None,
    config: SolverConfig | None = None,
) -> WitnessMask:
    """Exact per-(i, k) witness mask: True where some j attains C[i,j].

    Mirrors solve_verification_row with r/r' in place of s/s': r counts the
    congruent j per (i, k), r' the congruent-but-unequal ones via the active
    level-0 segments, and the mask is ``r > r'``.
    """
    if config is None:
        config = SolverConfig()
    require_valid_instance(inst)
    if Q is None:
        Q, _ = find_good_modulus(
            inst, inst.M, R=config.R, slack=config.slack, y_method=config.y_method
        )
    r_counts = compute_r_matrix(inst, Q)
    layout = matrix_layout(inst)
    starts, ends = active_level0_bounds(layout, levelmax_for(inst.M), Q)
    r_prime = rprime_ik_flat(layout, starts, ends, Q)
    return r_counts > r_prime


def _row_block_starts(row: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.diff(row, prepend=row[0] - 1) != 0)


def twopointer_direct(inst: VerificationInstance) -> WitnessMask:
    """Per-(i, k) witness mask by scanning constant-block representatives.

    For the row pair (B[k,:], C[i,:]) every interval of their common
    refinement has both values constant, so testing the interval starts is
    enough.  Each start is a change point of B's row or of C's row, which
    lets the scan run once per B row and once per C row instead of per
    (i, k) pair.  No promise is needed; this is exact on any instance.
    """
    A, B, C = inst.A, inst.B, inst.C
    na, nb = A.shape
    mask = np.zeros((na, nb), dtype=bool)
    for k in range(nb):
        starts = _row_block_starts(B[k])
        sums = A[:, k, None] + B[k, starts][None, :]
        mask[:, k] = (sums == C[:, starts]).any(axis=1)
    for i in range(na):
        starts = _row_block_starts(C[i])
        sums = A[i, :, None] + B[:, starts]
        mask[i] |= (sums == C[i, starts][None, :]).any(axis=1)
    return mask


def _shift_rotated(rot: RotatedInstance, M: int, s: int, t: int) -> VerificationInstance:
    return VerificationInstance(
        A=shift_operand(rot.A + M, s, M),
        B=shift_operand(rot.B + M, t, M),
        C=shift_output(rot.C + 2 * M, s + t, M),
        M=M,
        variant="col",
    )


def _resolve_engine(dims: tuple[int, int, int], entry_bound: int, config: SolverConfig) -> str:
    if config.col_engine != "auto":
        return config.col_engine
    na, nb, nc = dims
    ver_cost = config.M if config.M is not None else choose_M(dims, entry_bound)
    ver_cost *= float(na * nb * nc) ** (config.omega_exponent / 3.0)
    two_cost = na * nc * min(nb, 2 * entry_bound + 2)
    return "twopointer" if two_cost <= ver_cost else "verification"


def _recurse_col(
    A: IntMatrix, B: IntMatrix, M: int, engine: str, config: SolverConfig
) -> IntMatrix:
    if not A.any() and not B.any():
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    base = 2 * _recurse_col(A >> 1, B >> 1, M, engine, config)
    result = np.empty_like(base)
    pending = np.ones(base.shape, dtype=bool)
    W = int(max(A.max(), B.max(), base.max() + 2, 0))
    Q = None
    for s in (0, 1, 2):
        cand = base + s
        if s == 2 and not config.test_mode:
            result[pending] = cand[pending]
            pending[:] = False
            break
        rot = rotate_to_problem2prime(A, B, cand, W)
        if engine == "twopointer":
            inst = VerificationInstance(A=rot.A, B=rot.B, C=rot.C, M=M, variant="col")
            mask = twopointer_direct(inst) & pending
        else:
            if Q is None:
                s0 = int(residue_class(rot.A + M, M).min())
                t0 = int(residue_class(rot.B + M, M).min())
                Q, _ = find_good_modulus(
                    _shift_rotated(rot, M, s0, t0),
                    M,
                    R=config.R,
                    slack=config.slack,
                    y_method=config.y_method,
                )
            mask = congruent_witness_scan(rot.A, rot.B, rot.C, M, Q, query_axis="ik") & pending
        result[mask] = cand[mask]
        pending &= ~mask
        if not pending.any():
            break
    if config.test_mode and pending.any():
        raise AssertionError("candidate sandwich violated: unresolved cells remain")
    return result


def minplus_monotone_col(
    A: IntMatrix, B: IntMatrix, tag: MonotoneTag, config: SolverConfig | None = None
) -> IntMatrix:
    """Min-plus product of A and B given the column-monotone promise on B.

    ``tag`` states the promise: columns of B are non-decreasing with entries
    in ``[1, tag.entry_bound]``.  Raises PromiseViolationError when B breaks
    the promise and ValueError for a tag on the wrong axis.
    """
    if tag.axis != "column-monotone":
        raise ValueError(f"expected a column-monotone tag, got axis={tag.axis!r}")
    if config is None:
        config = SolverConfig()
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    rep = validate_promises(B, tag)
    if not rep.ok:
        raise PromiseViolationError(f"B violates the promise: {rep.reason}", coord=rep.coord)
    if config.engine == "naive":
        return minplus_product_naive(A, B)
    A_norm, deltas = normalize_A(A, tag.entry_bound)
    A_norm = normalize_nonincreasing(A_norm)
    dims = (A.shape[0], A.shape[1], B.shape[1])
    M = config.M if config.M is not None else choose_M(dims, tag.entry_bound)
    engine = _resolve_engine(dims, tag.entry_bound, config)
    C_norm = _recurse_col(A_norm, B, M, engine, config)
    return C_norm + deltas[:, None]
