"""Deterministic min-plus product for matrices with monotone rows.

``minplus_monotone_row(A, B, tag)`` computes ``C[i, j] = min_k A[i, k] +
B[k, j]`` exactly, assuming every row of B is non-decreasing with entries in
``[1, tag.entry_bound]``.  The driver recurses on halved entries: the true
product C satisfies ``2 * C' <= C <= 2 * C' + 2`` where ``C'`` is the product
of the halved matrices, so each cell is settled by checking the candidate
values ``2 * C' + s`` for ``s`` in ``{0, 1, 2}`` and keeping the smallest
accepted one.

Candidate checking is a batch of equality tests after residue shifting: entry
``x`` in residue class ``s = (x % M) // (M // 100)`` maps to a shifted value
whose low part is below ``7 * M / 100``, so for any modulus ``Q >= M`` a cell
is correct iff some k has shifted values congruent mod Q with matching high
parts.  The modulus search from :mod:`minplus.modulus` picks a Q with few
spurious near-collisions, which is what keeps the check subproblems sparse.

Two slower engines back the batched one: ``naive`` is the cubic scan, and
``det-reference`` runs the per-shift-pair verification pipeline literally
(residue shift, modulus search or audit, polynomial counting, segment
aggregation) so the batched kernel has something independent to agree with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .core import (
    INT64_GUARD,
    IntMatrix,
    MonotoneTag,
    PromiseViolationError,
    VerificationInstance,
    WitnessMask,
    minplus_product_naive,
    require_valid_instance,
    validate_promises,
)
from .modulus import audit_modulus, find_good_modulus
from .polyring import DEFAULT_PRIME, CyclicPolyMatrix, PrimeField, polymat_mul
from .segments import active_level0_bounds, levelmax_for, matrix_layout, sprime_rows_flat
from .shifting import congruent_witness_scan, residue_class, shift_operand, shift_output


@dataclass(frozen=True)
class BalanceConfig:
    """Knobs for the modulus-size heuristic ``choose_M``."""

    omega_exponent: float = 3.0
    M_min: int = 100
    M_max: int = 10000


def normalize_A(A: IntMatrix, bound: int) -> tuple[IntMatrix, np.ndarray]:
    """Subtract row minima from A and clip useless entries.

    Returns ``(A_norm, deltas)`` with ``A = A_norm + deltas[:, None]`` wherever
    A_norm was not clipped.  Entries above ``2 * bound`` after the shift cannot
    participate in any minimum against a B bounded by ``bound``, so they are
    replaced by the sentinel ``2 * bound + 1``.
    """
    A = np.asarray(A, dtype=np.int64)
    deltas = A.min(axis=1)
    A_norm = A - deltas[:, None]
    A_norm = np.where(A_norm > 2 * bound, 2 * bound + 1, A_norm)
    return A_norm, deltas


def choose_M(dims: tuple[int, int, int], entry_bound: int, cfg: BalanceConfig | None = None) -> int:
    """Pick the shift modulus M balancing verification work against counting work.

    Dimensions are measured as powers of ``n = max(dims)`` and the returned M
    is ``n ** d`` rounded to a multiple of 100, where d balances the matmul
    exponent against the instance shape.  With the cubic default
    ``omega_exponent = 3`` the exponent is never positive, so the floor of 100
    applies at every size this package targets; the knob exists so the
    crossover can be explored.
    """
    if cfg is None:
        cfg = BalanceConfig()
    n = max(max(dims), 2)
    logn = math.log(n)
    ea, eb, ec = (math.log(max(d, 1)) / logn for d in dims)
    mu = math.log(max(entry_bound, 1)) / logn
    omega_rect = cfg.omega_exponent * (ea + eb + ec) / 3.0
    d = (ea + eb + mu - omega_rect) / 2.0
    M = int(round(n**d / 100.0)) * 100
    return min(max(M, cfg.M_min), cfg.M_max)


def _shift_instance(
    A: IntMatrix, B: IntMatrix, C_cand: IntMatrix, M: int, s: int, t: int
) -> VerificationInstance:
    return VerificationInstance(
        A=shift_operand(A + M, s, M),
        B=shift_operand(B + M, t, M),
        C=shift_output(C_cand + 2 * M, s + t, M),
        M=M,
        variant="row",
    )


def shift_residues(
    A: IntMatrix, B: IntMatrix, C_cand: IntMatrix, M: int
) -> list[tuple[int, int, VerificationInstance]]:
    """All 10000 shifted verification instances for one candidate matrix.

    The pre-shift by M (operands) and 2M (output) happens here, so callers
    pass raw non-negative matrices.  A cell of C_cand is a true product value
    iff some (s, t) instance has a witness at it, and no instance ever
    produces a witness at an incorrect cell.
    """
    out = []
    for s in range(100):
        for t in range(100):
            out.append((s, t, _shift_instance(A, B, C_cand, M, s, t)))
    return out


def compute_s_matrix(
    inst: VerificationInstance, Q: int, field_: PrimeField | None = None
) -> np.ndarray:
    """Count, for each cell, the k with A[i,k] + B[k,j] = C[i,j] (mod Q).

    Exponent-encoded polynomial matrices over Z_p turn the count into one
    coefficient of a cyclic-polynomial product; p = 998244353 far exceeds any
    inner dimension used here, so the counts are exact integers.
    """
    if field_ is None:
        field_ = PrimeField(DEFAULT_PRIME)
    if inst.A.shape[1] >= field_.p:
        raise ValueError("inner dimension too large for exact counting")
    Pa = CyclicPolyMatrix.from_exponents(field_, Q, inst.A)
    Pb = CyclicPolyMatrix.from_exponents(field_, Q, inst.B)
    prod = polymat_mul(Pa, Pb)
    na, nc = inst.C.shape
    rows = np.arange(na)[:, None]
    cols = np.arange(nc)[None, :]
    return prod.coeffs[rows, cols, inst.C % Q]


def solve_verification_row(
    inst: VerificationInstance,
    Q: int | None = None,
    config: SolverConfig | None = None,
) -> WitnessMask:
    """Exact witness mask for one promised instance: True where C is attained.

    s counts all congruent k per cell; s' counts congruent-but-unequal k by
    aggregating over the refined level-0 segments, where every unequal pair
    lands because its defect is at least 7M/10.  The difference is the number
    of exact witnesses, so the mask is ``s > s'``.
    """
    if config is None:
        config = SolverConfig()
    require_valid_instance(inst)
    if Q is None:
        Q, _ = find_good_modulus(
            inst, inst.M, R=config.R, slack=config.slack, y_method=config.y_method
        )
    s_counts = compute_s_matrix(inst, Q)
    layout = matrix_layout(inst)
    starts, ends = active_level0_bounds(layout, levelmax_for(inst.M), Q)
    s_prime = sprime_rows_flat(layout, starts, ends, Q)
    return s_counts > s_prime


def _reference_mask(
    A: IntMatrix,
    B: IntMatrix,
    C_cand: IntMatrix,
    M: int,
    config: SolverConfig,
    q_holder: list,
) -> WitnessMask:
    """Literal per-(s, t) verification sweep; tiny inputs only.

    Shift pairs whose output window misses every residue class present in
    C_cand cannot hold a witness and are skipped.  In fast mode one modulus is
    shared across the level's instances, re-audited per instance with a fresh
    search as the fallback.
    """
    classes_A = np.unique(residue_class(A + M, M)).tolist()
    classes_B = np.unique(residue_class(B + M, M)).tolist()
    classes_C = set(np.unique(residue_class(C_cand + 2 * M, M)).tolist())
    mask = np.zeros(C_cand.shape, dtype=bool)
    for s in classes_A:
        for t in classes_B:
            u = s + t
            if u % 100 not in classes_C and (u + 1) % 100 not in classes_C:
                continue
            inst = _shift_instance(A, B, C_cand, M, s, t)
            if config.fast_shared_modulus:
                if q_holder and audit_modulus(inst, q_holder[0], slack=config.slack):
                    Q = q_holder[0]
                else:
                    Q, _ = find_good_modulus(
                        inst, M, R=config.R, slack=config.slack, y_method=config.y_method
                    )
                    q_holder[:] = [Q]
            else:
                Q, _ = find_good_modulus(
                    inst, M, R=config.R, slack=config.slack, y_method=config.y_method
                )
            mask |= solve_verification_row(inst, Q=Q, config=config)
    return mask


def _level_modulus(A: IntMatrix, B: IntMatrix, C_cand: IntMatrix, M: int, config: SolverConfig) -> int:
    """One good modulus per recursion level, searched on the lexicographically
    first class-pair instance of the level's first candidate."""
    s = int(residue_class(A + M, M).min())
    t = int(residue_class(B + M, M).min())
    inst = _shift_instance(A, B, C_cand, M, s, t)
    Q, _ = find_good_modulus(
        inst, M, R=config.R, slack=config.slack, y_method=config.y_method
    )
    return Q


def _recurse(A: IntMatrix, B: IntMatrix, M: int, config: SolverConfig) -> IntMatrix:
    if not A.any() and not B.any():
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    base = 2 * _recurse(A >> 1, B >> 1, M, config)
    result = np.empty_like(base)
    pending = np.ones(base.shape, dtype=bool)
    reference = config.engine == "det-reference"
    Q = None if reference else _level_modulus(A, B, base, M, config)
    q_holder: list = []
    for s in (0, 1, 2):
        cand = base + s
        if s == 2 and not config.test_mode:
            # 0 <= C - 2C' <= 2, so whatever the first two passes left is +2.
            result[pending] = cand[pending]
            pending[:] = False
            break
        if reference:
            mask = _reference_mask(A, B, cand, M, config, q_holder) & pending
        else:
            mask = congruent_witness_scan(A, B, cand, M, Q, query_axis="ij") & pending
        result[mask] = cand[mask]
        pending &= ~mask
        if not pending.any():
            break
    if config.test_mode and pending.any():
        raise AssertionError("candidate sandwich violated: unresolved cells remain")
    return result


def minplus_monotone_row(
    A: IntMatrix, B: IntMatrix, tag: MonotoneTag, config: SolverConfig | None = None
) -> IntMatrix:
    """Min-plus product of A and B given the row-monotone promise on B.

    ``tag`` states the promise: rows of B are non-decreasing with entries in
    ``[1, tag.entry_bound]``.  A is unrestricted beyond fitting in int64.
    Raises PromiseViolationError when B breaks the promise and ValueError for
    a tag on the wrong axis.
    """
    if tag.axis != "row-monotone":
        raise ValueError(f"expected a row-monotone tag, got axis={tag.axis!r}")
    if tag.entry_bound >= INT64_GUARD // 8:
        raise ValueError("entry bound too large for exact int64 arithmetic")
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
    dims = (A.shape[0], A.shape[1], B.shape[1])
    M = config.M if config.M is not None else choose_M(dims, tag.entry_bound)
    C_norm = _recurse(A_norm, B, M, config)
    return C_norm + deltas[:, None]
