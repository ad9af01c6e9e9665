"""Deterministic search for a good verification modulus Q.

Q is grown as a product of primes from the pool [R/2, R]. At each step the
candidate prime is scored by the level-wise counters

    Y_l(Q') = sum over all level-l segment starts of
              #{ s in [-4*2^l, 4*2^l] : Q' divides (delta_start - s) }

and the prime minimising max_l (Y_l(p) - min_p Y_l(p)) is appended. The
quantity the argument actually controls is X_l = Y_l - Z_l where Z_l counts
the starts with delta inside the window exactly; Z_l does not depend on Q,
so minimising Y minimises X. The search stops at the first Q >= M.

Two interchangeable Y backends exist. The counting backend evaluates the
sum directly from the per-level start discrepancies with a W lookup table.
The ring backend follows the polynomial-matrix formulation (boundary
indicator matrices, products over F_p[x]/(x^Q' - 1)) and is cross-checked
against the counting backend in the tests; it is the reference definition
of compute_Y_all_matrix / compute_Y_all_conv.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ConvVerificationInstance
from .polyring import CyclicPolyMatrix, PrimeField, bivariate_convolve, polymat_mul
from .segments import conv_layout, level_start_deltas, levelmax_for, matrix_layout

__all__ = [
    "PrimePool",
    "YTable",
    "SearchStep",
    "ModulusReport",
    "primes_in_range",
    "compute_W",
    "compute_Y_all_matrix",
    "compute_Y_all_conv",
    "select_prime",
    "find_good_modulus",
    "count_X_bruteforce",
    "count_Z_bruteforce",
    "default_range_parameter",
    "default_slack",
]

BRUTE_CELL_LIMIT = 1 << 16


@dataclass(frozen=True)
class PrimePool:
    R: int
    primes: tuple

    def __post_init__(self):
        if not self.primes:
            raise ValueError("prime pool is empty")
        lo = -(self.R // -2)
        for p in self.primes:
            if not (lo <= p <= self.R):
                raise ValueError(f"prime {p} outside [{lo}, {self.R}]")


def primes_in_range(R: int) -> PrimePool:
    """Exact sieve of [ceil(R/2), R]."""
    if R < 4:
        raise ValueError("range parameter must be at least 4")
    sieve = np.ones(R + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(math.isqrt(R)) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    lo = -(R // -2)
    primes = tuple(int(p) for p in np.flatnonzero(sieve) if p >= lo)
    if not primes:
        raise ValueError(f"no primes in [{lo}, {R}]")
    return PrimePool(R=R, primes=primes)


def compute_W(level: int, Qp: int) -> np.ndarray:
    """W(r) = #{s in [-4*2^l, 4*2^l] : s = r mod Qp}, for r in [0, Qp)."""
    if Qp < 1:
        raise ValueError("modulus must be positive")
    w = 4 << level
    return np.bincount(np.arange(-w, w + 1) % Qp, minlength=Qp)


@dataclass(frozen=True)
class YTable:
    """Y values per (level, prime), for one step of the search."""

    primes: tuple
    Y: np.ndarray  # shape (lmax + 1, len(primes))

    def __post_init__(self):
        if self.Y.ndim != 2 or self.Y.shape[1] != len(self.primes):
            raise ValueError("Y must have one column per prime")
        if (self.Y < 0).any():
            raise ValueError("Y counts cannot be negative")

    @property
    def ystar(self) -> np.ndarray:
        return self.Y.min(axis=1)


def _boundary_cols(rows: np.ndarray, level: int) -> np.ndarray:
    """Column-start indicator: column 0 plus every level-l floor change."""
    ind = np.ones_like(rows, dtype=bool)
    if rows.shape[-1] > 1:
        f = rows >> level
        ind[..., 1:] = f[..., 1:] != f[..., :-1]
    return ind


def compute_Y_all_matrix(inst, Q_prev: int, pool: PrimePool, lmax: int,
                         field_: PrimeField | None = None) -> YTable:
    """Ring-backend Y table: one polynomial transform per candidate Q'."""
    A, B, C = inst.A, inst.B, inst.C
    fld = field_ or PrimeField()
    if A.shape[1] >= fld.p:
        raise ValueError("inner dimension reaches the field characteristic")
    na, nc = C.shape
    cols = []
    for p in pool.primes:
        Qp = Q_prev * p
        Ap = CyclicPolyMatrix.from_exponents(fld, Qp, A)
        Bp = CyclicPolyMatrix.from_exponents(fld, Qp, B)
        D_all = polymat_mul(Ap, Bp).coeffs
        shift = (np.arange(Qp)[None, :] - C.reshape(-1, 1)) % Qp
        col = []
        for level in range(lmax + 1):
            IB = _boundary_cols(B, level)
            IC = _boundary_cols(C, level)
            B_bdry = CyclicPolyMatrix(Q=Qp, coeffs=Bp.coeffs * IB[:, :, None], field=fld)
            D_bdry = polymat_mul(Ap, B_bdry).coeffs
            U = np.where(IC[:, :, None], D_all, D_bdry).reshape(na * nc, Qp)
            Wt = compute_W(level, Qp)
            col.append(int((U * Wt[shift]).sum()))
        cols.append(col)
    return YTable(primes=pool.primes, Y=np.array(cols, dtype=np.int64).T)


def compute_Y_all_conv(inst: ConvVerificationInstance, Q_prev: int, pool: PrimePool,
                       lmax: int, field_: PrimeField | None = None) -> YTable:
    """Ring-backend Y table for diagonals, via bivariate products.

    A start of diagonal k at i is where the A block begins at i or the B
    block seen along the diagonal begins, i.e. k-i is the last index of a
    B block. Position 0 of A and position n-1 of B are forced so the
    diagonal endpoints count as starts. The OR of the two indicators is
    assembled by inclusion-exclusion over three products.
    """
    a, b, c = inst.A.values, inst.B.values, inst.C.values
    fld = field_ or PrimeField()
    if max(len(a), len(b)) >= fld.p:
        raise ValueError("array length reaches the field characteristic")
    cols = []
    for p in pool.primes:
        Qp = Q_prev * p
        PA = np.zeros((len(a), Qp), dtype=np.int64)
        PA[np.arange(len(a)), a % Qp] = 1
        PB = np.zeros((len(b), Qp), dtype=np.int64)
        PB[np.arange(len(b)), b % Qp] = 1
        shift = (np.arange(Qp)[None, :] - c.reshape(-1, 1)) % Qp
        col = []
        for level in range(lmax + 1):
            IA = _boundary_cols(a[None, :], level)[0]
            fB = b >> level
            JB = np.ones(len(b), dtype=bool)
            if len(b) > 1:
                JB[:-1] = fB[1:] != fB[:-1]
            c1 = bivariate_convolve(fld, PA * IA[:, None], PB, Qp)
            c2 = bivariate_convolve(fld, PA, PB * JB[:, None], Qp)
            c3 = bivariate_convolve(fld, PA * IA[:, None], PB * JB[:, None], Qp)
            counts = (c1 + c2 - c3) % fld.p
            Wt = compute_W(level, Qp)
            col.append(int((counts * Wt[shift]).sum()))
        cols.append(col)
    return YTable(primes=pool.primes, Y=np.array(cols, dtype=np.int64).T)


def select_prime(table: YTable, pool: PrimePool) -> int:
    """Argmin of Phi(p) = max_l (Y_l(p) - Y*_l); ties go to the smallest prime."""
    if table.primes != pool.primes:
        raise ValueError("table and pool disagree on the prime set")
    phi = (table.Y - table.ystar[:, None]).max(axis=0)
    return pool.primes[int(np.argmin(phi))]


def default_range_parameter(n: int) -> int:
    return max(16, math.ceil(2 ** math.sqrt(math.log2(max(n, 2)))))


def default_slack(n: int) -> float:
    return 64.0 * (1.0 + math.log2(max(n, 2))) ** 2


@dataclass(frozen=True)
class SearchStep:
    Q_prev: int
    table: YTable
    phi: tuple
    chosen: int


@dataclass(frozen=True)
class ModulusReport:
    M: int
    R: int
    pool: PrimePool
    primes: tuple
    q_values: tuple
    steps: tuple
    Q: int
    active_counts: tuple
    audit_bounds: tuple
    audit_ok: bool
    slack: float
    y_method: str

    def __post_init__(self):
        q = 1
        for p in self.primes:
            q *= p
        if q != self.Q:
            raise ValueError("Q is not the product of the chosen primes")
        if not (self.M <= self.Q <= self.M * self.R):
            raise ValueError("Q outside [M, M*R]")
        if self.primes and self.Q // self.primes[-1] >= self.M:
            raise ValueError("first-crossing rule violated")

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "R": self.R,
            "pool": list(self.pool.primes),
            "primes": list(self.primes),
            "q_values": list(self.q_values),
            "Q": self.Q,
            "phi_per_step": [list(s.phi) for s in self.steps],
            "active_counts": list(self.active_counts),
            "audit_bounds": list(self.audit_bounds),
            "audit_ok": self.audit_ok,
            "slack": self.slack,
            "y_method": self.y_method,
        }


def _counting_columns(level_deltas, Q_prev: int, pool: PrimePool) -> YTable:
    cols = []
    for p in pool.primes:
        Qp = Q_prev * p
        col = []
        for level, (deltas, _) in enumerate(level_deltas):
            Wt = compute_W(level, Qp)
            col.append(int(Wt[deltas % Qp].sum()))
        cols.append(col)
    return YTable(primes=pool.primes, Y=np.array(cols, dtype=np.int64).T)


def find_good_modulus(inst, M: int, R: int | None = None, backend: str | None = None,
                      y_method: str = "counting", slack: float | None = None,
                      test_mode: bool = False,
                      field_: PrimeField | None = None):
    """Grow Q = p_1 * ... * p_T until the first crossing of M.

    Returns (Q, ModulusReport). The report keeps the full Y table of every
    step so the X = Y - Z identity can be audited externally, plus the
    measured per-level active-segment counts at the final Q.
    """
    if M <= 0 or M % 100:
        raise ValueError("M must be a positive multiple of 100")
    if backend is None:
        backend = "conv" if isinstance(inst, ConvVerificationInstance) else "matrix"
    if backend == "conv":
        layout = conv_layout(inst)
        n_scale = max(len(inst.A.values), len(inst.B.values))
    elif backend == "matrix":
        layout = matrix_layout(inst)
        n_scale = max(*inst.A.shape, inst.B.shape[1])
    else:
        raise ValueError(f"unknown backend {backend!r}")

    if R is None:
        R = default_range_parameter(n_scale)
    pool = primes_in_range(R)
    while len(pool.primes) < 2:
        R += 1
        pool = primes_in_range(R)
    if slack is None:
        slack = default_slack(n_scale)

    lmax = levelmax_for(M)
    deltas = level_start_deltas(layout, lmax)

    Q = 1
    primes, q_values, steps = [], [], []
    while Q < M:
        if y_method == "counting":
            table = _counting_columns(deltas, Q, pool)
        elif y_method == "ring":
            compute = compute_Y_all_conv if backend == "conv" else compute_Y_all_matrix
            table = compute(inst, Q, pool, lmax, field_=field_)
        else:
            raise ValueError(f"unknown y_method {y_method!r}")
        phi = tuple(int(v) for v in (table.Y - table.ystar[:, None]).max(axis=0))
        p = select_prime(table, pool)
        steps.append(SearchStep(Q_prev=Q, table=table, phi=phi, chosen=p))
        Q *= p
        primes.append(p)
        q_values.append(Q)

    active_counts = []
    for level, (delta, eqhigh) in enumerate(deltas):
        win = 4 << level
        r = delta % Q
        active_counts.append(int((~eqhigh & ((r <= win) | (r >= Q - win))).sum()))

    groups = len(layout.gstarts) - 1
    if backend == "conv":
        U = int(max(inst.A.values.max(), inst.B.values.max(), inst.C.values.max(), 1))
    else:
        U = int(max(inst.A.max(), inst.B.max(), inst.C.max(), 1))
    audit_bounds = tuple(slack * groups * U / Q for _ in range(lmax + 1))
    audit_ok = all(c <= b for c, b in zip(active_counts, audit_bounds))
    if not audit_ok:
        msg = (
            f"active-segment audit failed: counts {active_counts} exceed "
            f"slack bound {audit_bounds[0]:.1f} at Q={Q}"
        )
        if test_mode:
            raise AssertionError(msg)
        warnings.warn(msg)

    report = ModulusReport(
        M=M,
        R=R,
        pool=pool,
        primes=tuple(primes),
        q_values=tuple(q_values),
        steps=tuple(steps),
        Q=Q,
        active_counts=tuple(active_counts),
        audit_bounds=audit_bounds,
        audit_ok=audit_ok,
        slack=slack,
        y_method=y_method,
    )
    return Q, report


def audit_modulus(inst, Q: int, slack: float | None = None, backend: str | None = None) -> bool:
    """Check |S_l(Q)| <= slack * groups * U / Q at every level.

    This is the same audit find_good_modulus runs on its own result; callers
    that reuse a Q found on a different instance run it to decide whether a
    fresh search is needed.
    """
    if backend is None:
        backend = "conv" if isinstance(inst, ConvVerificationInstance) else "matrix"
    if backend == "conv":
        layout = conv_layout(inst)
        n_scale = max(len(inst.A.values), len(inst.B.values))
        U = int(max(inst.A.values.max(), inst.B.values.max(), inst.C.values.max(), 1))
    else:
        layout = matrix_layout(inst)
        n_scale = max(*inst.A.shape, inst.B.shape[1])
        U = int(max(inst.A.max(), inst.B.max(), inst.C.max(), 1))
    if slack is None:
        slack = default_slack(n_scale)
    groups = len(layout.gstarts) - 1
    bound = slack * groups * U / Q
    M = inst.M
    for level, (delta, eqhigh) in enumerate(level_start_deltas(layout, levelmax_for(M))):
        win = 4 << level
        r = delta % Q
        count = int((~eqhigh & ((r <= win) | (r >= Q - win))).sum())
        if count > bound:
            return False
    return True


# --- brute-force oracles ------------------------------------------------------

def _scan_segments_matrix(inst, level):
    """Per-(i,k) linear scan; independent of the flat engine."""
    A, B, C = inst.A, inst.B, inst.C
    out = []
    for i in range(A.shape[0]):
        for k in range(A.shape[1]):
            brow = B[k] >> level
            crow = C[i] >> level
            s = 0
            for j in range(1, len(brow) + 1):
                if j == len(brow) or brow[j] != brow[s] or crow[j] != crow[s]:
                    out.append(int(A[i, k] + B[k, s] - C[i, s]))
                    s = j
    return np.array(out, dtype=np.int64)


def _scan_segments_conv(inst, level):
    a, b, c = inst.A.values, inst.B.values, inst.C.values
    na, nb = len(a), len(b)
    out = []
    for k in range(na + nb - 1):
        lo, hi = max(0, k - (nb - 1)), min(na - 1, k)
        s = lo
        for i in range(lo + 1, hi + 2):
            if (
                i == hi + 1
                or (a[i] >> level) != (a[s] >> level)
                or (b[k - i] >> level) != (b[k - s] >> level)
            ):
                out.append(int(a[s] + b[k - s] - c[k]))
                s = i
    return np.array(out, dtype=np.int64)


def _guarded_deltas(inst, level: int, backend: str | None, limit: int):
    if backend is None:
        backend = "conv" if isinstance(inst, ConvVerificationInstance) else "matrix"
    if backend == "conv":
        cells = len(inst.A.values) * len(inst.B.values)
        scan = _scan_segments_conv
    else:
        cells = inst.A.shape[0] * inst.A.shape[1] * inst.B.shape[1]
        scan = _scan_segments_matrix
    if cells > limit:
        raise ValueError(f"instance too large for brute-force counting ({cells} cells)")
    return scan(inst, level)


def count_X_bruteforce(inst, Q: int, level: int, backend: str | None = None,
                       limit: int = BRUTE_CELL_LIMIT) -> int:
    """#{(segment, s) : Q divides delta - s, delta != s}, enumerated directly."""
    deltas = _guarded_deltas(inst, level, backend, limit)
    w = 4 << level
    s = np.arange(-w, w + 1)
    diff = deltas[:, None] - s[None, :]
    return int(((diff % Q == 0) & (diff != 0)).sum())


def count_Z_bruteforce(inst, level: int, backend: str | None = None,
                       limit: int = BRUTE_CELL_LIMIT) -> int:
    """#{segments : delta lies inside the window}; independent of Q."""
    deltas = _guarded_deltas(inst, level, backend, limit)
    return int((np.abs(deltas) <= (4 << level)).sum())
