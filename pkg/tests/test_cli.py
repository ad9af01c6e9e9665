import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from minplus import cli
from minplus.config import SolverConfig
from minplus.core import minplus_product_naive, witness_mask_naive

GOLDEN = Path(__file__).parent / "golden"
CFG = SolverConfig()


def _args(**overrides):
    ns = cli.build_parser().parse_args(
        ["run", "ignored.json"] + [f"--{k.replace('_', '-')}={v}" for k, v in overrides.items()]
    )
    return ns


def test_golden_files_roundtrip_canonically():
    for path in sorted(GOLDEN.glob("*.json")):
        raw = path.read_bytes()
        assert cli.canonical_bytes(json.loads(raw)) == raw


def test_golden_files_pass_check():
    for path in sorted(GOLDEN.glob("*.json")):
        ok, coord = cli.check_instance(cli.load_payload(path), CFG)
        assert ok, f"{path.name}: mismatch at {coord}"


def test_gen_is_deterministic_per_seed():
    a = cli.generate_instance("product-row", 6, 9, seed=42, family="uniform-monotone")
    b = cli.generate_instance("product-row", 6, 9, seed=42, family="uniform-monotone")
    c = cli.generate_instance("product-row", 6, 9, seed=43, family="uniform-monotone")
    assert cli.canonical_bytes(a) == cli.canonical_bytes(b)
    assert cli.canonical_bytes(a) != cli.canonical_bytes(c)


@pytest.mark.parametrize("kind", cli.KINDS)
@pytest.mark.parametrize("family", cli.FAMILIES)
def test_gen_one_by_one_all_kinds(kind, family):
    payload = cli.generate_instance(kind, 1, 3, seed=0, family=family)
    assert payload["kind"] == kind
    ok, _ = cli.check_instance(payload, CFG)
    assert ok


def test_staircase_rows_have_expected_plateaus():
    n, bound = 12, 4
    payload = cli.generate_instance("product-row", n, bound, seed=7, family="staircase")
    B = np.array(payload["B"])
    plateau = -(-n // bound)
    changes = np.nonzero(np.diff(B, axis=1))[1] + 1
    assert (changes % plateau == 0).all()


def test_gen_rejects_bad_params():
    with pytest.raises(cli.CliError):
        cli.generate_instance("product-row", 0, 3, seed=0, family="uniform-monotone")
    with pytest.raises(cli.CliError):
        cli.generate_instance("product-row", 3, 3, seed=0, family="nonsense")


def test_run_det_equals_run_naive_payload():
    payload = cli.load_payload(GOLDEN / "conv-n4.json")
    out_det, _ = cli.run_instance(payload, SolverConfig(engine="det"))
    out_naive, _ = cli.run_instance(payload, SolverConfig(engine="naive"))
    assert cli.canonical_bytes(out_det) == cli.canonical_bytes(out_naive)


def test_run_rerun_checksums_match():
    payload = cli.load_payload(GOLDEN / "product-row-n4.json")
    _, rep1 = cli.run_instance(payload, CFG)
    _, rep2 = cli.run_instance(payload, CFG)
    assert rep1["checksum"] == rep2["checksum"]


@pytest.mark.parametrize("name,axis", [
    ("verify-row-n3.json", "ij"),
    ("verify-col-n3.json", "ik"),
    ("verify-conv-n4.json", "k"),
])
def test_run_verify_mask_matches_oracle(name, axis):
    payload = cli.load_payload(GOLDEN / name)
    output, report = cli.run_instance(payload, CFG)
    inst = cli._instance_from(payload)
    want = witness_mask_naive(inst, axis)
    assert np.array_equal(np.array(output["mask"], dtype=bool), want)
    assert len(report["modulus_digests"]) == 1
    assert report["checksum"].startswith("sha256:")


def test_run_reports_promise_violation():
    payload = cli.load_payload(GOLDEN / "product-row-n4.json")
    payload = {**payload, "B": [[3, 1, 1, 1]] + payload["B"][1:]}
    with pytest.raises(cli.CliError) as exc:
        cli.run_instance(payload, CFG)
    assert exc.value.details["coord"] == [0, 1]


def test_check_reports_first_mismatch(monkeypatch):
    payload = cli.load_payload(GOLDEN / "product-row-n4.json")

    def corrupted(A, B):
        C = minplus_product_naive(A, B).copy()
        C[2, 1] += 1
        return C

    monkeypatch.setattr(cli, "minplus_product_naive", corrupted)
    ok, coord = cli.check_instance(payload, CFG)
    assert not ok and coord == (2, 1)


def test_check_refuses_oversized_oracle():
    payload = cli.load_payload(GOLDEN / "product-row-n4.json")
    with pytest.raises(cli.CliError):
        cli.check_instance(payload, SolverConfig(oracle_limit=8))


def test_stats_requires_verify_kind():
    with pytest.raises(cli.CliError):
        cli.stats_instance(cli.load_payload(GOLDEN / "conv-n4.json"), CFG)


def test_stats_reports_bounds_and_xyz():
    dump = cli.stats_instance(cli.load_payload(GOLDEN / "verify-row-n3.json"), CFG, test_mode=True)
    rep = dump["modulus_report"]
    assert rep["M"] <= rep["Q"] <= rep["M"] * rep["R"]
    assert dump["first_crossing"]
    assert dump["xyz_verified"]
    assert all(c["ok"] for c in dump["xyz_checks"])
    assert len(dump["level0_segments"]) == len(rep["active_counts"])


def test_stats_all_zero_instance_has_no_spurious_matches():
    payload = {
        "format": 1, "kind": "verify-conv", "dims": [3], "M": 100,
        "A": [0, 0, 0], "B": [0, 0, 0], "C": [0, 0, 0, 0, 0],
    }
    dump = cli.stats_instance(payload, CFG, test_mode=True)
    assert all(x == 0 for x in dump["x_at_Q"])
    assert dump["xyz_verified"]


def test_bench_parallel_outputs_are_byte_identical(tmp_path):
    files = sorted(GOLDEN.glob("*.json"))
    d1, d2 = tmp_path / "one", tmp_path / "two"
    s1 = cli.bench_files(files, d1, CFG, jobs=2)
    s2 = cli.bench_files(files, d2, CFG, jobs=2)
    assert [r["checksum"] for r in s1["runs"]] == [r["checksum"] for r in s2["runs"]]
    for f in files:
        out_name = f"{f.stem}.out.json"
        assert (d1 / out_name).read_bytes() == (d2 / out_name).read_bytes()


def test_main_subprocess_gen_run_check(tmp_path):
    inst = tmp_path / "inst.json"

    def invoke(*argv):
        return subprocess.run(
            [sys.executable, "-m", "minplus", *argv],
            capture_output=True, text=True,
        )

    r = invoke("gen", "--kind", "conv", "--n", "5", "--entry-bound", "6",
               "--seed", "11", "--family", "bounded-difference", "--out", str(inst))
    assert r.returncode == 0, r.stderr
    r = invoke("run", str(inst), "--out", str(tmp_path / "o.json"))
    assert r.returncode == 0 and (tmp_path / "o.json").exists()
    assert (tmp_path / "o.report.json").exists()
    r = invoke("check", str(inst))
    assert r.returncode == 0 and r.stdout.startswith("PASS")
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    r = invoke("run", str(bad))
    assert r.returncode == 2
    assert "error" in json.loads(r.stderr)
