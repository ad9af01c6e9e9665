"""Deterministic min-plus convolution of two monotone arrays.

The driver mirrors :mod:`minplus.product_row` on diagonals instead of rows:
halve entries, recurse, then settle each output slot among the candidates
``2 * C'[k] + s`` for ``s`` in ``{0, 1, 2}``. Candidate checking shifts
residues exactly as in the matrix case and counts congruent index pairs with
a bivariate polynomial product that is cyclic in the value variable and
ordinary in the position variable, so the count lands per output slot.

``solve_verification_conv`` is the promised-instance pipeline (modulus
search, bivariate counting, diagonal segment aggregation); the fast driver
path uses the fused scan from :mod:`minplus.shifting` instead.
"""

from __future__ import annotations

import math

import numpy as np

from .config import SolverConfig
from .core import (
    INT64_GUARD,
    ConvVerificationInstance,
    DimensionMismatchError,
    IntArray,
    MonotoneTag,
    PromiseViolationError,
    WitnessMask,
    as_int_array,
    minplus_convolution_naive,
    require_valid_instance,
    validate_promises,
)
from .modulus import audit_modulus, find_good_modulus
from .polyring import DEFAULT_PRIME, PrimeField, bivariate_convolve
from .product_row import BalanceConfig
from .segments import active_level0_bounds, conv_layout, levelmax_for, sprime_conv_flat
from .shifting import (
    congruent_witness_scan_conv,
    residue_class,
    shift_operand,
    shift_output,
)

__all__ = [
    "choose_M_conv",
    "shift_residues_conv",
    "compute_s_array",
    "solve_verification_conv",
    "minplus_conv_monotone",
]


def choose_M_conv(entry_bound: int, cfg: BalanceConfig | None = None) -> int:
    """Shift modulus for convolution: the multiple of 100 nearest sqrt(bound).

    Balances the O(Mn) verification volume against the O(n^2 / M) counting
    volume when entries go up to entry_bound; clamped to [M_min, M_max].
    """
    if cfg is None:
        cfg = BalanceConfig()
    M = int(round(math.sqrt(max(entry_bound, 1)) / 100.0)) * 100
    return min(max(M, cfg.M_min), cfg.M_max)


def _shift_instance_conv(
    a: np.ndarray, b: np.ndarray, c_cand: np.ndarray, M: int, s: int, t: int
) -> ConvVerificationInstance:
    return ConvVerificationInstance(
        A=IntArray(values=shift_operand(a + M, s, M), origin=1),
        B=IntArray(values=shift_operand(b + M, t, M), origin=1),
        C=IntArray(values=shift_output(c_cand + 2 * M, s + t, M), origin=2),
        M=M,
    )


def shift_residues_conv(
    a: np.ndarray, b: np.ndarray, c_cand: np.ndarray, M: int
) -> list[tuple[int, int, ConvVerificationInstance]]:
    """All 10000 shifted convolution instances for one candidate array.

    Same construction as the matrix version: operands pre-shifted by M,
    output by 2M, then the class-s / class-t / window-(s + t) maps. Slot k
    of c_cand is a true convolution value iff some pair's instance has a
    witness there.
    """
    out = []
    for s in range(100):
        for t in range(100):
            out.append((s, t, _shift_instance_conv(a, b, c_cand, M, s, t)))
    return out


def compute_s_array(
    inst: ConvVerificationInstance, Q: int, field_: PrimeField | None = None
) -> np.ndarray:
    """Count, per output slot k, the pairs i + j = k with A_i + B_j = C_k (mod Q).

    P_A = sum_i x^(A_i mod Q) y^i and likewise P_B; the product is cyclic in
    x and ordinary in y, so the y^k stripe of P_A * P_B indexes output slots
    and the x^(C_k mod Q) coefficient is the congruent-pair count.
    """
    if field_ is None:
        field_ = PrimeField(DEFAULT_PRIME)
    a, b, c = inst.A.values, inst.B.values, inst.C.values
    n = a.shape[0]
    if n >= field_.p:
        raise ValueError("array length too large for exact counting")
    Pa = np.zeros((n, Q), dtype=np.int64)
    Pa[np.arange(n), a % Q] = 1
    Pb = np.zeros((n, Q), dtype=np.int64)
    Pb[np.arange(n), b % Q] = 1
    prod = bivariate_convolve(field_, Pa, Pb, Q)
    return prod[np.arange(2 * n - 1), c % Q]


def solve_verification_conv(
    inst: ConvVerificationInstance,
    Q: int | None = None,
    config: SolverConfig | None = None,
) -> WitnessMask:
    """Exact per-slot witness mask for one promised convolution instance.

    s counts congruent pairs per slot, s' counts the congruent-but-unequal
    ones through the diagonal segment refinement; the mask is ``s > s'``.
    """
    if config is None:
        config = SolverConfig()
    require_valid_instance(inst)
    if Q is None:
        Q, _ = find_good_modulus(
            inst, inst.M, R=config.R, slack=config.slack, y_method=config.y_method
        )
    s_counts = compute_s_array(inst, Q)
    layout = conv_layout(inst)
    starts, ends = active_level0_bounds(layout, levelmax_for(inst.M), Q)
    s_prime = sprime_conv_flat(layout, starts, ends, Q)
    return s_counts > s_prime


def _reference_mask_conv(
    a: np.ndarray,
    b: np.ndarray,
    c_cand: np.ndarray,
    M: int,
    config: SolverConfig,
    q_holder: list,
) -> WitnessMask:
    """Literal per-(s, t) sweep over the live shifted instances."""
    classes_a = np.unique(residue_class(a + M, M)).tolist()
    classes_b = np.unique(residue_class(b + M, M)).tolist()
    classes_c = set(np.unique(residue_class(c_cand + 2 * M, M)).tolist())
    mask = np.zeros(c_cand.shape, dtype=bool)
    for s in classes_a:
        for t in classes_b:
            u = s + t
            if u % 100 not in classes_c and (u + 1) % 100 not in classes_c:
                continue
            inst = _shift_instance_conv(a, b, c_cand, M, s, t)
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
            mask |= solve_verification_conv(inst, Q=Q, config=config)
    return mask


def _level_modulus_conv(
    a: np.ndarray, b: np.ndarray, c_cand: np.ndarray, M: int, config: SolverConfig
) -> int:
    s = int(residue_class(a + M, M).min())
    t = int(residue_class(b + M, M).min())
    inst = _shift_instance_conv(a, b, c_cand, M, s, t)
    Q, _ = find_good_modulus(
        inst, M, R=config.R, slack=config.slack, y_method=config.y_method
    )
    return Q


def _recurse_conv(a: np.ndarray, b: np.ndarray, M: int, config: SolverConfig) -> np.ndarray:
    if not a.any() and not b.any():
        return np.zeros(2 * a.shape[0] - 1, dtype=np.int64)
    base = 2 * _recurse_conv(a >> 1, b >> 1, M, config)
    result = np.empty_like(base)
    pending = np.ones(base.shape, dtype=bool)
    reference = config.engine == "det-reference"
    Q = None if reference else _level_modulus_conv(a, b, base, M, config)
    q_holder: list = []
    for s in (0, 1, 2):
        cand = base + s
        if s == 2 and not config.test_mode:
            result[pending] = cand[pending]
            pending[:] = False
            break
        if reference:
            mask = _reference_mask_conv(a, b, cand, M, config, q_holder) & pending
        else:
            mask = congruent_witness_scan_conv(a, b, cand, M, Q) & pending
        result[mask] = cand[mask]
        pending &= ~mask
        if not pending.any():
            break
    if config.test_mode and pending.any():
        raise AssertionError("candidate sandwich violated: unresolved slots remain")
    return result


def minplus_conv_monotone(
    A, B, tag: MonotoneTag, config: SolverConfig | None = None
) -> IntArray:
    """Min-plus convolution of two monotone arrays; output has origin 2.

    Both arrays must be non-decreasing with entries in [1, tag.entry_bound].
    Raises PromiseViolationError when either array breaks the promise and
    ValueError for a tag on the wrong axis.
    """
    if tag.axis != "array-monotone":
        raise ValueError(f"expected an array-monotone tag, got axis={tag.axis!r}")
    if tag.entry_bound >= INT64_GUARD // 8:
        raise ValueError("entry bound too large for exact int64 arithmetic")
    if config is None:
        config = SolverConfig()
    a = as_int_array(A).values
    b = as_int_array(B).values
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    for name, arr in (("A", a), ("B", b)):
        rep = validate_promises(IntArray(values=arr), tag)
        if not rep.ok:
            raise PromiseViolationError(
                f"{name} violates the promise: {rep.reason}", coord=rep.coord
            )
    if config.engine == "naive":
        return minplus_convolution_naive(a, b)
    M = config.M if config.M is not None else choose_M_conv(tag.entry_bound)
    out = _recurse_conv(a, b, M, config)
    return IntArray(values=out, origin=2)
