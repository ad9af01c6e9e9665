"""Command-line harness: gen, run, check, bench, stats.

Instance files are canonical JSON (sorted keys, indent 1, single trailing
newline) so outputs diff cleanly and rerunning any command on the same input
reproduces the same bytes. All generator randomness flows from one 64-bit
seed through numpy's counter-based Philox generator.

Exit codes: 0 success / check passed, 1 check or stats found a mismatch,
2 structured diagnostic (bad file, broken promise, refused oracle size).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import COL_ENGINES, ENGINES, SolverConfig
from .convolution import (
    _shift_instance_conv,
    compute_s_array,
    minplus_conv_monotone,
    solve_verification_conv,
)
from .core import (
    ConvVerificationInstance,
    DimensionMismatchError,
    IntArray,
    MonotoneTag,
    PromiseViolationError,
    VerificationInstance,
    minplus_convolution_naive,
    minplus_product_naive,
    require_valid_instance,
    witness_mask_naive,
)
from .modulus import count_X_bruteforce, count_Z_bruteforce, find_good_modulus
from .product_col import (
    compute_r_matrix,
    minplus_monotone_col,
    normalize_nonincreasing,
    rotate_to_problem2prime,
    solve_verification_col,
)
from .product_row import _shift_instance, compute_s_matrix, minplus_monotone_row, solve_verification_row
from .segments import (
    active_level0_bounds,
    conv_layout,
    level_start_deltas,
    levelmax_for,
    matrix_layout,
    rprime_ik_flat,
    sprime_conv_flat,
    sprime_rows_flat,
)
from .shifting import residue_class

FORMAT_VERSION = 1
KINDS = ("product-row", "product-col", "conv", "verify-row", "verify-col", "verify-conv")
FAMILIES = ("uniform-monotone", "bounded-difference", "staircase", "adversarial-ties")


class CliError(Exception):
    """Diagnostic carrying a structured payload for stderr."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = {"error": message, **details}


# ---------------------------------------------------------------------------
# canonical file I/O

def canonical_bytes(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=1) + "\n").encode("utf-8")


def checksum_of(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def write_payload(path, obj) -> bytes:
    data = canonical_bytes(obj)
    Path(path).write_bytes(data)
    return data


def load_payload(path) -> dict:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}", path=str(path), reason=str(e))
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as e:
        raise CliError(f"not valid JSON: {path}", path=str(path), reason=str(e))
    if not isinstance(obj, dict) or obj.get("format") != FORMAT_VERSION:
        raise CliError(f"unsupported file format in {path}", path=str(path))
    return obj


# ---------------------------------------------------------------------------
# generators

def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _staircase_rows(rng, rows: int, cols: int, bound: int) -> np.ndarray:
    plateau = max(1, math.ceil(cols / bound))
    starts = rng.integers(1, bound + 1, (rows, 1))
    steps = np.arange(cols) // plateau
    return np.minimum(starts + steps[None, :], bound)


def _monotone_rows(rng, family: str, rows: int, cols: int, bound: int) -> np.ndarray:
    """Rows non-decreasing, entries in [1, bound]."""
    if family == "uniform-monotone":
        return np.sort(rng.integers(1, bound + 1, (rows, cols)), axis=1)
    if family == "bounded-difference":
        start = rng.integers(1, bound + 1, (rows, 1))
        inc = rng.integers(0, 2, (rows, cols - 1)) if cols > 1 else np.zeros((rows, 0), dtype=np.int64)
        walk = np.concatenate([start, inc], axis=1).cumsum(axis=1)
        return np.minimum(walk, bound)
    if family == "staircase":
        return _staircase_rows(rng, rows, cols, bound)
    if family == "adversarial-ties":
        palette = np.unique(np.array([1, max(1, bound // 2), bound]))
        return np.sort(rng.choice(palette, (rows, cols)), axis=1)
    raise CliError(f"unknown family {family!r}", families=list(FAMILIES))


def _free_matrix(rng, family: str, rows: int, cols: int, bound: int) -> np.ndarray:
    """Unrestricted operand with the family's value texture."""
    if family == "uniform-monotone":
        return rng.integers(1, bound + 1, (rows, cols))
    if family == "bounded-difference":
        start = rng.integers(1, bound + 1, (rows, 1))
        inc = rng.integers(-1, 2, (rows, cols - 1)) if cols > 1 else np.zeros((rows, 0), dtype=np.int64)
        walk = np.concatenate([start, inc], axis=1).cumsum(axis=1)
        return np.clip(walk, 1, bound)
    if family == "staircase":
        return _staircase_rows(rng, rows, cols, bound)
    if family == "adversarial-ties":
        palette = np.unique(np.array([1, max(1, bound // 2), bound]))
        return rng.choice(palette, (rows, cols))
    raise CliError(f"unknown family {family!r}", families=list(FAMILIES))


def _lift_matrix(A, B, C, M: int, variant: str) -> VerificationInstance:
    """Shift a true product through the first live class pair."""
    s = int(residue_class(A + M, M).min())
    t = int(residue_class(B + M, M).min())
    inst = _shift_instance(A, B, C, M, s, t)
    return VerificationInstance(A=inst.A, B=inst.B, C=inst.C, M=M, variant=variant)


def generate_instance(kind: str, n: int, entry_bound: int, seed: int, family: str,
                      M: int | None = None) -> dict:
    if kind not in KINDS:
        raise CliError(f"unknown kind {kind!r}", kinds=list(KINDS))
    if family not in FAMILIES:
        raise CliError(f"unknown family {family!r}", families=list(FAMILIES))
    if n < 1 or entry_bound < 1:
        raise CliError("n and entry bound must be at least 1", n=n, entry_bound=entry_bound)
    rng = _rng_for(seed)
    header = {
        "format": FORMAT_VERSION,
        "kind": kind,
        "family": family,
        "seed": int(seed),
        "entry_bound": int(entry_bound),
    }

    if kind == "product-row":
        A = _free_matrix(rng, family, n, n, entry_bound)
        B = _monotone_rows(rng, family, n, n, entry_bound)
        return {**header, "dims": [n, n, n], "A": A.tolist(), "B": B.tolist()}
    if kind == "product-col":
        A = _free_matrix(rng, family, n, n, entry_bound)
        B = _monotone_rows(rng, family, n, n, entry_bound).T
        return {**header, "dims": [n, n, n], "A": A.tolist(), "B": B.tolist()}
    if kind == "conv":
        a = _monotone_rows(rng, family, 1, n, entry_bound)[0]
        b = _monotone_rows(rng, family, 1, n, entry_bound)[0]
        return {**header, "dims": [n], "A": a.tolist(), "B": b.tolist()}

    M = 100 if M is None else int(M)
    if kind == "verify-row":
        A = _free_matrix(rng, family, n, n, entry_bound)
        B = _monotone_rows(rng, family, n, n, entry_bound)
        inst = _lift_matrix(A, B, minplus_product_naive(A, B), M, "row")
    elif kind == "verify-col":
        A = normalize_nonincreasing(_free_matrix(rng, family, n, n, entry_bound))
        B = _monotone_rows(rng, family, n, n, entry_bound).T
        C = minplus_product_naive(A, B)
        W = int(max(A.max(), B.max(), C.max()))
        rot = rotate_to_problem2prime(A, B, C, W)
        inst = _lift_matrix(rot.A, rot.B, rot.C, M, "col")
    else:
        a = _monotone_rows(rng, family, 1, n, entry_bound)[0]
        b = _monotone_rows(rng, family, 1, n, entry_bound)[0]
        c = minplus_convolution_naive(a, b).values
        s = int(residue_class(a + M, M).min())
        t = int(residue_class(b + M, M).min())
        inst = _shift_instance_conv(a, b, c, M, s, t)

    require_valid_instance(inst)
    if kind == "verify-conv":
        body = {"A": inst.A.values.tolist(), "B": inst.B.values.tolist(),
                "C": inst.C.values.tolist(), "dims": [n]}
    else:
        body = {"A": inst.A.tolist(), "B": inst.B.tolist(), "C": inst.C.tolist(),
                "dims": list(inst.A.shape) + [inst.B.shape[1]]}
    return {**header, **body, "M": M}


# ---------------------------------------------------------------------------
# run

def _config_from(args) -> SolverConfig:
    return SolverConfig(
        engine=args.engine,
        M=args.M,
        R=args.R,
        omega_exponent=args.omega,
        slack=args.slack,
        fast_shared_modulus=args.fast_shared_modulus,
        oracle_limit=args.oracle_limit,
        col_engine=getattr(args, "col_engine", "auto"),
    )


def _instance_from(payload: dict):
    kind = payload["kind"]
    if kind == "verify-conv":
        return ConvVerificationInstance(
            A=IntArray(values=np.asarray(payload["A"], dtype=np.int64)),
            B=IntArray(values=np.asarray(payload["B"], dtype=np.int64)),
            C=IntArray(values=np.asarray(payload["C"], dtype=np.int64), origin=2),
            M=int(payload["M"]),
        )
    variant = "col" if kind == "verify-col" else "row"
    return VerificationInstance(
        A=np.asarray(payload["A"], dtype=np.int64),
        B=np.asarray(payload["B"], dtype=np.int64),
        C=np.asarray(payload["C"], dtype=np.int64),
        M=int(payload["M"]),
        variant=variant,
    )


def _timed(timings: dict, phase: str, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    timings[phase] += time.perf_counter() - t0
    return out


def run_instance(payload: dict, config: SolverConfig):
    """Execute one instance file; returns (output payload, report dict).

    The report's checksum covers the canonical output bytes only, so it is
    stable across reruns while the timing fields are free to vary.
    """
    kind = payload.get("kind")
    if kind not in KINDS:
        raise CliError(f"unknown kind {kind!r}", kinds=list(KINDS))
    timings = {"reductions": 0.0, "modulus_search": 0.0, "counting": 0.0, "segments": 0.0}
    digests = []
    bound = int(payload.get("entry_bound", 0))

    try:
        if kind == "product-row":
            A = np.asarray(payload["A"], dtype=np.int64)
            B = np.asarray(payload["B"], dtype=np.int64)
            tag = MonotoneTag(axis="row-monotone", entry_bound=bound)
            C = _timed(timings, "reductions", minplus_monotone_row, A, B, tag, config)
            body = {"C": C.tolist()}
        elif kind == "product-col":
            A = np.asarray(payload["A"], dtype=np.int64)
            B = np.asarray(payload["B"], dtype=np.int64)
            tag = MonotoneTag(axis="column-monotone", entry_bound=bound)
            C = _timed(timings, "reductions", minplus_monotone_col, A, B, tag, config)
            body = {"C": C.tolist()}
        elif kind == "conv":
            a = np.asarray(payload["A"], dtype=np.int64)
            b = np.asarray(payload["B"], dtype=np.int64)
            tag = MonotoneTag(axis="array-monotone", entry_bound=bound)
            out = _timed(timings, "reductions", minplus_conv_monotone, a, b, tag, config)
            body = {"C": out.values.tolist(), "origin": out.origin}
        else:
            inst = _instance_from(payload)
            require_valid_instance(inst)
            Q, rep = _timed(
                timings, "modulus_search", find_good_modulus,
                inst, inst.M, R=config.R, slack=config.slack, y_method=config.y_method,
            )
            digests.append({
                "Q": Q,
                "sha256": checksum_of(canonical_bytes(rep.to_dict())),
            })
            if kind == "verify-conv":
                s = _timed(timings, "counting", compute_s_array, inst, Q)
                layout = conv_layout(inst)
                starts, ends = _timed(
                    timings, "segments", active_level0_bounds, layout, levelmax_for(inst.M), Q
                )
                s_prime = _timed(timings, "segments", sprime_conv_flat, layout, starts, ends, Q)
            else:
                counter = compute_s_matrix if kind == "verify-row" else compute_r_matrix
                s = _timed(timings, "counting", counter, inst, Q)
                layout = matrix_layout(inst)
                starts, ends = _timed(
                    timings, "segments", active_level0_bounds, layout, levelmax_for(inst.M), Q
                )
                aggregate = sprime_rows_flat if kind == "verify-row" else rprime_ik_flat
                s_prime = _timed(timings, "segments", aggregate, layout, starts, ends, Q)
            mask = s > s_prime
            body = {"mask": mask.astype(int).tolist()}
    except (PromiseViolationError, DimensionMismatchError, ValueError) as e:
        coord = getattr(e, "coord", None)
        raise CliError(str(e), kind=kind, coord=list(coord) if coord else None)

    output = {"format": FORMAT_VERSION, "kind": "output", "of_kind": kind, **body}
    report = {
        "format": FORMAT_VERSION,
        "kind": "report",
        "of_kind": kind,
        "engine": config.engine if kind.startswith("product") or kind == "conv" else "verification",
        "checksum": checksum_of(canonical_bytes(output)),
        "modulus_digests": digests,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    return output, report


def _out_paths(args, in_path: Path):
    out = Path(args.out) if args.out else in_path.with_suffix(".out.json")
    rep = Path(args.report) if getattr(args, "report", None) else out.with_suffix(".report.json")
    return out, rep


# ---------------------------------------------------------------------------
# check

def _oracle_cells(payload: dict) -> int:
    dims = payload.get("dims", [])
    if payload["kind"] in ("conv", "verify-conv"):
        n = int(dims[0]) if dims else len(payload["A"])
        return n * n
    na, nb, nc = (int(d) for d in dims)
    return na * nb * nc


def check_instance(payload: dict, config: SolverConfig):
    """Compare the deterministic engine against the brute-force oracle.

    Returns (ok, first_mismatch_coord). Raises CliError when the oracle
    volume exceeds config.oracle_limit.
    """
    cells = _oracle_cells(payload)
    if cells > config.oracle_limit:
        raise CliError(
            "instance too large for the oracle; raise --oracle-limit to force",
            cells=cells, oracle_limit=config.oracle_limit,
        )
    kind = payload["kind"]
    bound = int(payload.get("entry_bound", 0))
    if kind == "product-row":
        A = np.asarray(payload["A"], dtype=np.int64)
        B = np.asarray(payload["B"], dtype=np.int64)
        got = minplus_monotone_row(A, B, MonotoneTag(axis="row-monotone", entry_bound=bound), config)
        want = minplus_product_naive(A, B)
    elif kind == "product-col":
        A = np.asarray(payload["A"], dtype=np.int64)
        B = np.asarray(payload["B"], dtype=np.int64)
        got = minplus_monotone_col(A, B, MonotoneTag(axis="column-monotone", entry_bound=bound), config)
        want = minplus_product_naive(A, B)
    elif kind == "conv":
        a = np.asarray(payload["A"], dtype=np.int64)
        b = np.asarray(payload["B"], dtype=np.int64)
        got = minplus_conv_monotone(a, b, MonotoneTag(axis="array-monotone", entry_bound=bound), config).values
        want = minplus_convolution_naive(a, b).values
    else:
        inst = _instance_from(payload)
        solver = {
            "verify-row": solve_verification_row,
            "verify-col": solve_verification_col,
            "verify-conv": solve_verification_conv,
        }[kind]
        got = solver(inst, config=config)
        want = witness_mask_naive(inst, "k" if kind == "verify-conv" else
                                  ("ik" if kind == "verify-col" else "ij"))
    if np.array_equal(got, want):
        return True, None
    bad = np.argwhere(np.asarray(got) != np.asarray(want))[0]
    return False, tuple(int(c) for c in bad)


# ---------------------------------------------------------------------------
# stats

def stats_instance(payload: dict, config: SolverConfig, test_mode: bool = False) -> dict:
    kind = payload.get("kind")
    if kind not in ("verify-row", "verify-col", "verify-conv"):
        raise CliError("stats needs a verify-* instance file", kind=kind)
    inst = _instance_from(payload)
    require_valid_instance(inst)
    Q, rep = find_good_modulus(
        inst, inst.M, R=config.R, slack=config.slack, y_method=config.y_method
    )
    layout = conv_layout(inst) if kind == "verify-conv" else matrix_layout(inst)
    deltas = level_start_deltas(layout, levelmax_for(inst.M))
    dump = {
        "format": FORMAT_VERSION,
        "kind": "stats",
        "of_kind": kind,
        "modulus_report": rep.to_dict(),
        "level0_segments": [int(len(d)) for d, _ in deltas],
        "first_crossing": bool(rep.q_values[-1] >= rep.M > (rep.q_values[-2] if len(rep.q_values) > 1 else 1)),
    }
    if test_mode:
        checks = []
        verified = True
        for step in rep.steps:
            for pi, p in enumerate(step.table.primes):
                Qp = step.Q_prev * p
                for level in range(step.table.Y.shape[0]):
                    X = count_X_bruteforce(inst, Qp, level, limit=config.oracle_limit)
                    Z = count_Z_bruteforce(inst, level, limit=config.oracle_limit)
                    Y = int(step.table.Y[level, pi])
                    ok = X == Y - Z
                    verified &= ok
                    checks.append({"Q_prev": step.Q_prev, "p": int(p), "level": level,
                                   "X": X, "Y": Y, "Z": Z, "ok": ok})
        dump["xyz_checks"] = checks
        dump["xyz_verified"] = verified
        dump["x_at_Q"] = [
            count_X_bruteforce(inst, Q, level, limit=config.oracle_limit)
            for level in range(levelmax_for(inst.M) + 1)
        ]
    return dump


# ---------------------------------------------------------------------------
# bench

def _bench_one(job):
    path, out_dir, config_kwargs = job
    payload = load_payload(path)
    config = SolverConfig(**config_kwargs)
    t0 = time.perf_counter()
    output, report = run_instance(payload, config)
    wall = time.perf_counter() - t0
    stem = Path(path).stem
    out_path = Path(out_dir) / f"{stem}.out.json"
    rep_path = Path(out_dir) / f"{stem}.report.json"
    write_payload(out_path, output)
    write_payload(rep_path, report)
    return str(path), report["checksum"], wall


def bench_files(paths, out_dir, config: SolverConfig, jobs: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kwargs = {
        "engine": config.engine, "M": config.M, "R": config.R,
        "omega_exponent": config.omega_exponent, "slack": config.slack,
        "fast_shared_modulus": config.fast_shared_modulus,
        "oracle_limit": config.oracle_limit, "col_engine": config.col_engine,
    }
    jobs_list = [(str(p), str(out_dir), kwargs) for p in paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_bench_one, jobs_list))
    else:
        results = [_bench_one(j) for j in jobs_list]
    results.sort(key=lambda r: r[0])
    return {
        "format": FORMAT_VERSION,
        "kind": "bench",
        "engine": config.engine,
        "runs": [{"file": f, "checksum": c, "seconds": round(w, 6)} for f, c, w in results],
    }


# ---------------------------------------------------------------------------
# argument plumbing

def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--engine", choices=ENGINES, default="det")
    p.add_argument("--col-engine", choices=COL_ENGINES, default="auto")
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--R", type=int, default=None)
    p.add_argument("--omega", type=float, default=3.0)
    p.add_argument("--slack", type=float, default=None)
    p.add_argument("--fast-shared-modulus", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--oracle-limit", type=int, default=1 << 22)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minplus", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--entry-bound", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--family", choices=FAMILIES, default="uniform-monotone")
    g.add_argument("--M", type=int, default=None)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="solve an instance file")
    r.add_argument("file")
    r.add_argument("--out", default=None)
    r.add_argument("--report", default=None)
    _add_config_flags(r)

    c = sub.add_parser("check", help="compare det against the naive oracle")
    c.add_argument("file")
    _add_config_flags(c)

    b = sub.add_parser("bench", help="run many instance files, optionally in parallel")
    b.add_argument("files", nargs="+")
    b.add_argument("--out-dir", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--summary", default=None)
    _add_config_flags(b)

    s = sub.add_parser("stats", help="modulus-search diagnostics for a verify-* file")
    s.add_argument("file")
    s.add_argument("--test-mode", action="store_true")
    _add_config_flags(s)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            payload = generate_instance(
                args.kind, args.n, args.entry_bound, args.seed, args.family, M=args.M
            )
            write_payload(args.out, payload)
            print(f"wrote {args.out}")
            return 0
        if args.command == "run":
            payload = load_payload(args.file)
            output, report = run_instance(payload, _config_from(args))
            out_path, rep_path = _out_paths(args, Path(args.file))
            write_payload(out_path, output)
            write_payload(rep_path, report)
            print(f"wrote {out_path} ({report['checksum']})")
            return 0
        if args.command == "check":
            payload = load_payload(args.file)
            ok, coord = check_instance(payload, _config_from(args))
            if ok:
                print(f"PASS {args.file}")
                return 0
            print(f"FAIL {args.file}: first mismatch at {coord}")
            return 1
        if args.command == "bench":
            summary = bench_files(args.files, args.out_dir, _config_from(args), args.jobs)
            if args.summary:
                write_payload(args.summary, summary)
            total = sum(r["seconds"] for r in summary["runs"])
            print(f"bench: {len(summary['runs'])} runs, {total:.3f}s total")
            return 0
        if args.command == "stats":
            payload = load_payload(args.file)
            dump = stats_instance(payload, _config_from(args), test_mode=args.test_mode)
            sys.stdout.write(canonical_bytes(dump).decode("utf-8"))
            if args.test_mode:
                line = "X = Y - Z verified" if dump["xyz_verified"] else "X = Y - Z MISMATCH"
                print(line, file=sys.stderr)
                return 0 if dump["xyz_verified"] else 1
            return 0
    except CliError as e:
        json.dump(e.details, sys.stderr)
        sys.stderr.write("\n")
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
