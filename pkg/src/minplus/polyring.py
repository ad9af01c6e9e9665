"""Exact arithmetic in F_p[x]/(x^Q - 1) and bivariate products over it.

The ring order Q is an arbitrary positive integer (a product of search
primes), so there is no reason for Q-th roots of unity to exist in the
field. All products therefore run at a padded power-of-two length L >= 2Q-1
through a number-theoretic transform, and exponents are folded mod Q
afterwards. Counts stored in the field stay exact as long as they are below
p, which the solvers assert at entry.

The default modulus is 998244353 = 119 * 2^23 + 1 (primitive root 3). It is
NTT-friendly up to length 2^23 and small enough that a row of eight int64
products can be summed before reduction without overflow, which is what the
vectorised kernels rely on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_PRIME",
    "PrimeField",
    "CyclicPoly",
    "CyclicPolyMatrix",
    "cyclic_convolve",
    "polymat_mul",
    "coefficient",
    "bivariate_convolve",
    "next_pow2",
]

DEFAULT_PRIME = 998244353

# Primes with known small primitive roots; anything else goes through the
# trial-division search below.
_KNOWN_ROOTS = {998244353: 3, 1004535809: 3, 469762049: 3, 167772161: 3}

# Inner chunk for mod-p integer matmuls: 8 * (p-1)^2 < 2^63 for p <= 2^30.
_MATMUL_CHUNK = 8


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _factorize(n: int) -> list:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _find_root(p: int) -> int:
    if p == 2:
        return 1
    factors = _factorize(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in factors):
            return g
    raise ValueError(f"no primitive root found for {p}")


class PrimeField:
    """Arithmetic mod a fixed NTT-friendly prime, with batched transforms."""

    def __init__(self, p: int = DEFAULT_PRIME):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p > 1 << 30:
            raise ValueError("field modulus must be at most 2^30 for the int64 kernels")
        self.p = p
        self.root = _KNOWN_ROOTS.get(p) or _find_root(p)
        t = p - 1
        self.two_adicity = 0
        while t % 2 == 0:
            t //= 2
            self.two_adicity += 1
        self._bitrev_cache: dict = {}
        self._stage_cache: dict = {}
        self._pow_cache: dict = {}

    def _bitrev(self, L: int) -> np.ndarray:
        rev = self._bitrev_cache.get(L)
        if rev is None:
            bits = L.bit_length() - 1
            idx = np.arange(L)
            rev = np.zeros(L, dtype=np.int64)
            for b in range(bits):
                rev |= ((idx >> b) & 1) << (bits - 1 - b)
            self._bitrev_cache[L] = rev
        return rev

    def _stage_roots(self, ln: int, inverse: bool) -> np.ndarray:
        key = (ln, inverse)
        w = self._stage_cache.get(key)
        if w is None:
            p = self.p
            wn = pow(self.root, (p - 1) // ln, p)
            if inverse:
                wn = pow(wn, p - 2, p)
            half = ln >> 1
            w = np.empty(half, dtype=np.int64)
            cur = 1
            for i in range(half):
                w[i] = cur
                cur = cur * wn % p
            self._stage_cache[key] = w
        return w

    def unit_powers(self, L: int) -> np.ndarray:
        """omega^0 .. omega^(L-1) for the order-L root omega."""
        pw = self._pow_cache.get(L)
        if pw is None:
            p = self.p
            w = pow(self.root, (p - 1) // L, p)
            pw = np.empty(L, dtype=np.int64)
            cur = 1
            for i in range(L):
                pw[i] = cur
                cur = cur * w % p
            self._pow_cache[L] = pw
        return pw

    def ntt(self, a: np.ndarray, inverse: bool = False) -> np.ndarray:
        """Length-L transform along the last axis, L a power of two."""
        p = self.p
        L = a.shape[-1]
        if L & (L - 1):
            raise ValueError("transform length must be a power of two")
        if (1 << self.two_adicity) < L:
            raise ValueError(f"no order-{L} root of unity mod {p}")
        a = np.ascontiguousarray(np.asarray(a, dtype=np.int64) % p)
        if L == 1:
            return a
        a = a[..., self._bitrev(L)]
        ln = 2
        while ln <= L:
            half = ln >> 1
            w = self._stage_roots(ln, inverse)
            v = a.reshape(a.shape[:-1] + (L // ln, ln))
            lo = v[..., :half].copy()
            t = v[..., half:] * w % p
            v[..., :half] = (lo + t) % p
            v[..., half:] = (lo - t) % p
            ln <<= 1
        if inverse:
            a = a * pow(L, p - 2, p) % p
        return a

    def mod_matmul(self, A: np.ndarray, B: np.ndarray, backend: str = "schoolbook") -> np.ndarray:
        """(stacked) integer matrix product reduced mod p, overflow-safe."""
        if backend == "schoolbook":
            return _matmul_chunked(A, B, self.p)
        if backend == "blocked":
            return _matmul_blocked(A, B, self.p)
        raise ValueError(f"unknown numeric backend {backend!r}")


def _matmul_chunked(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    inner = A.shape[-1]
    out = None
    for c0 in range(0, inner, _MATMUL_CHUNK):
        c1 = min(inner, c0 + _MATMUL_CHUNK)
        part = np.matmul(A[..., :, c0:c1], B[..., c0:c1, :]) % p
        out = part if out is None else out + part
    if out is None:
        shape = np.broadcast_shapes(A.shape[:-2], B.shape[:-2]) + (A.shape[-2], B.shape[-1])
        return np.zeros(shape, dtype=np.int64)
    return out % p


def _matmul_blocked(A: np.ndarray, B: np.ndarray, p: int, tile: int = 16) -> np.ndarray:
    rows, inner, cols = A.shape[-2], A.shape[-1], B.shape[-1]
    shape = np.broadcast_shapes(A.shape[:-2], B.shape[:-2]) + (rows, cols)
    out = np.zeros(shape, dtype=np.int64)
    for r0 in range(0, rows, tile):
        r1 = min(rows, r0 + tile)
        for c0 in range(0, cols, tile):
            c1 = min(cols, c0 + tile)
            acc = np.zeros(shape[:-2] + (r1 - r0, c1 - c0), dtype=np.int64)
            for k0 in range(0, inner, _MATMUL_CHUNK):
                k1 = min(inner, k0 + _MATMUL_CHUNK)
                acc += np.matmul(A[..., r0:r1, k0:k1], B[..., k0:k1, c0:c1]) % p
            out[..., r0:r1, c0:c1] = acc % p
    return out


@dataclass(frozen=True, eq=False)
class CyclicPoly:
    """Element of F_p[x]/(x^Q - 1); coeffs[r] is the coefficient of x^r."""

    Q: int
    coeffs: np.ndarray
    field: PrimeField

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.int64) % self.field.p
        if c.shape != (self.Q,):
            raise ValueError(f"need exactly Q={self.Q} coefficients")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, field: PrimeField, Q: int, exp: int, coeff: int = 1) -> "CyclicPoly":
        c = np.zeros(Q, dtype=np.int64)
        c[exp % Q] = coeff % field.p
        return cls(Q=Q, coeffs=c, field=field)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CyclicPoly)
            and self.Q == other.Q
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )


@dataclass(frozen=True, eq=False)
class CyclicPolyMatrix:
    """Matrix over F_p[x]/(x^Q - 1); coeffs has shape (rows, cols, Q)."""

    Q: int
    coeffs: np.ndarray
    field: PrimeField

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.int64) % self.field.p
        if c.ndim != 3 or c.shape[2] != self.Q:
            raise ValueError("coeffs must have shape (rows, cols, Q)")
        object.__setattr__(self, "coeffs", c)

    @property
    def rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_exponents(cls, field: PrimeField, Q: int, exps: np.ndarray) -> "CyclicPolyMatrix":
        """Monomial matrix with entry x^(exps[i,j] mod Q)."""
        exps = np.asarray(exps, dtype=np.int64) % Q
        r, c = exps.shape
        coeffs = np.zeros((r, c, Q), dtype=np.int64)
        ii, jj = np.meshgrid(np.arange(r), np.arange(c), indexing="ij")
        coeffs[ii.ravel(), jj.ravel(), exps.ravel()] = 1
        return cls(Q=Q, coeffs=coeffs, field=field)

    def entry(self, i: int, j: int) -> CyclicPoly:
        return CyclicPoly(Q=self.Q, coeffs=self.coeffs[i, j].copy(), field=self.field)


def _fold_modQ(flat: np.ndarray, Q: int) -> np.ndarray:
    """Fold degrees [0, 2Q-2] onto [0, Q); input last axis length >= 2Q-1."""
    out = flat[..., :Q].copy()
    hi = flat[..., Q : 2 * Q - 1]
    out[..., : hi.shape[-1]] += hi
    return out


def cyclic_convolve(u: CyclicPoly, v: CyclicPoly) -> CyclicPoly:
    """Product in F_p[x]/(x^Q - 1) via a padded NTT plus exponent folding."""
    if u.Q != v.Q:
        raise ValueError(f"ring orders differ: {u.Q} vs {v.Q}")
    field = u.field
    p = field.p
    Q = u.Q
    if Q == 1:
        return CyclicPoly(Q=1, coeffs=(u.coeffs * v.coeffs) % p, field=field)
    L = next_pow2(2 * Q - 1)
    fu = np.zeros(L, dtype=np.int64)
    fu[:Q] = u.coeffs
    fv = np.zeros(L, dtype=np.int64)
    fv[:Q] = v.coeffs
    prod = field.ntt(field.ntt(fu) * field.ntt(fv) % p, inverse=True)
    out = _fold_modQ(prod, Q) % p
    return CyclicPoly(Q=Q, coeffs=out, field=field)


def polymat_mul(
    Pm: CyclicPolyMatrix,
    Qm: CyclicPolyMatrix,
    method: str = "frequency",
    numeric_backend: str = "schoolbook",
) -> CyclicPolyMatrix:
    """Matrix product over the cyclic ring.

    method "frequency" transforms every entry once, runs one numeric matrix
    product per frequency slot, inverse-transforms and folds mod x^Q - 1.
    method "schoolbook" is the direct triple loop over cyclic_convolve and
    exists as the comparison oracle.
    """
    if Pm.Q != Qm.Q:
        raise ValueError("ring orders differ")
    if Pm.cols != Qm.rows:
        raise ValueError(f"dimension mismatch: {Pm.cols} vs {Qm.rows}")
    field = Pm.field
    p = field.p
    Q = Pm.Q

    if method == "schoolbook":
        out = np.zeros((Pm.rows, Qm.cols, Q), dtype=np.int64)
        for i in range(Pm.rows):
            for j in range(Qm.cols):
                acc = CyclicPoly(Q=Q, coeffs=np.zeros(Q, dtype=np.int64), field=field)
                for k in range(Pm.cols):
                    term = cyclic_convolve(Pm.entry(i, k), Qm.entry(k, j))
                    acc = CyclicPoly(Q=Q, coeffs=(acc.coeffs + term.coeffs) % p, field=field)
                out[i, j] = acc.coeffs
        return CyclicPolyMatrix(Q=Q, coeffs=out, field=field)
    if method != "frequency":
        raise ValueError(f"unknown method {method!r}")

    if Q == 1:
        prod = field.mod_matmul(Pm.coeffs[:, :, 0], Qm.coeffs[:, :, 0], numeric_backend)
        return CyclicPolyMatrix(Q=1, coeffs=prod[:, :, None], field=field)

    L = next_pow2(2 * Q - 1)
    fa = np.zeros((Pm.rows, Pm.cols, L), dtype=np.int64)
    fa[:, :, :Q] = Pm.coeffs
    fb = np.zeros((Qm.rows, Qm.cols, L), dtype=np.int64)
    fb[:, :, :Q] = Qm.coeffs
    fa = field.ntt(fa)
    fb = field.ntt(fb)
    # one numeric product per frequency slot
    fa = np.moveaxis(fa, 2, 0)
    fb = np.moveaxis(fb, 2, 0)
    fc = field.mod_matmul(fa, fb, numeric_backend)
    fc = np.moveaxis(fc, 0, 2)
    prod = field.ntt(fc, inverse=True)
    out = _fold_modQ(prod, Q) % p
    return CyclicPolyMatrix(Q=Q, coeffs=out, field=field)


def coefficient(Pm: CyclicPolyMatrix, i: int, j: int, r: int) -> int:
    """Coefficient of x^r in entry (i, j), lifted to a plain integer count."""
    if not 0 <= r < Pm.Q:
        raise ValueError(f"exponent {r} out of range for Q={Pm.Q}")
    return int(Pm.coeffs[i, j, r])


def bivariate_convolve(field: PrimeField, P: np.ndarray, R: np.ndarray, Q: int) -> np.ndarray:
    """Product cyclic in x (order Q) and ordinary in y.

    P and R are 2-D coefficient arrays with P[y, x] the coefficient of
    x^x * y^y, x < Q. The pair (x, y) is packed into a single exponent
    x + Lx * y with Lx = next_pow2(2Q - 1), so x-sums (at most 2Q - 2) never
    carry into the y stride; x is folded mod Q after one univariate product.
    """
    P = np.asarray(P, dtype=np.int64) % field.p
    R = np.asarray(R, dtype=np.int64) % field.p
    if P.ndim != 2 or R.ndim != 2 or P.shape[1] > Q or R.shape[1] > Q:
        raise ValueError("bivariate operands must be (ny, <=Q) arrays")
    ny = P.shape[0] + R.shape[0] - 1
    Lx = next_pow2(2 * Q - 1)
    L = next_pow2(Lx * ny)

    def pack(Mx: np.ndarray) -> np.ndarray:
        buf = np.zeros((Mx.shape[0], Lx), dtype=np.int64)
        buf[:, : Mx.shape[1]] = Mx
        flat = np.zeros(L, dtype=np.int64)
        flat[: buf.size] = buf.ravel()
        return flat

    prod = field.ntt(field.ntt(pack(P)) * field.ntt(pack(R)) % field.p, inverse=True)
    stripes = prod[: Lx * ny].reshape(ny, Lx)
    out = stripes[:, :Q].copy()
    hi = stripes[:, Q : 2 * Q - 1]
    out[:, : hi.shape[1]] = (out[:, : hi.shape[1]] + hi) % field.p
    return out
