"""Acceptance battery.

Each test drives one verification criterion end to end, prints a single
``ACCEPTANCE <nn>: PASS|FAIL`` line, re-asserts the frozen headline numbers,
and enforces a generous wall-clock ceiling (an order of magnitude above the
measured cost, so only pathological regressions trip it).
"""

import json
import subprocess
import sys

from matsemi import verify

BOUNDS_S = {
    "01": 120,
    "02": 60,
    "03": 300,
    "04": 600,
    "05": 300,
    "06": 3000,
    "07": 3000,
    "08": 1200,
    "09": 3000,
    "10": 600,
    "11": 1200,
    "12": 1200,
    "13": 600,
}


def _gate(res):
    line = f"ACCEPTANCE {res.key}: {'PASS' if res.passed else 'FAIL'}"
    print(line)
    assert res.passed, f"{line} — {res.witness}"
    assert res.elapsed_ms < BOUNDS_S[res.key] * 1000.0, (
        f"criterion {res.key} took {res.elapsed_ms:.0f} ms"
    )
    return dict(res.details)


def test_criterion_01_classes_agree():
    d = _gate(verify.criterion_01(pairs=verify.CLASS_PAIRS))
    assert d["classes_n2_q2"] == 5
    assert d["classes_n2_q3"] == 11
    assert d["classes_n3_q2"] == 11
    assert d["classes_n2_q4"] == 19
    assert d["agree"] is True


def test_criterion_02_m2f2_census():
    d = _gate(verify.criterion_02())
    assert d["count"] == 5
    assert d["sizes"] == (1, 2, 3, 4, 6)
    assert d["nilpotent_count"] == 4
    assert d["nilpotents_with_zero"] is True


def test_criterion_03_size_law():
    d = _gate(verify.criterion_03())
    assert d["flags_checked"] == 322
    assert d["size_law"] is True


def test_criterion_04_maximal_nilpotent():
    d = _gate(verify.criterion_04())
    assert d["flags"] == 36
    assert d["escapes_checked"] == 18207
    assert d["all_blocked"] is True


def test_criterion_05_consolidation():
    d = _gate(verify.criterion_05())
    assert d["ordered_pairs"] == 36 * 36
    assert d["biconditional"] is True


def test_criterion_06_preorder_routes():
    d = _gate(verify.criterion_06())
    assert d["contexts"] == 40
    assert d["pairs"] == 74272
    assert d["routes_agree"] is True


def test_criterion_07_super_rank_law():
    d = _gate(verify.criterion_07())
    assert d["contexts"] == 40
    assert d["decomposables_checked"] == 44
    assert d["law_holds"] is True


def test_criterion_08_covering_statistic():
    d = _gate(verify.criterion_08())
    assert d["positions_checked"] == 27
    assert d["all_equal"] is True


def test_criterion_09_fingerprints():
    d = _gate(verify.criterion_09())
    assert d["trio_distinct"] is True
    assert d["iso_pairs_verified"] == 539
    assert d["cross_sig_refusal"] is True


def test_criterion_10_annihilator_census():
    d = _gate(verify.criterion_10())
    assert d["two_sided_ann"] == 16
    assert d["decomposable_in_ann"] == 10
    assert d["rank_le_one_corner"] == 10
    assert d["geometric_shortcut"] == 8
    assert d["expected_mismatch"] is True
    assert d["right_ann"] == 64
    assert d["right_ann_matches"] is True


def test_criterion_11_stratum_ideals():
    d = _gate(verify.criterion_11())
    assert d["ideal_n3_q2_k2"] == 344
    assert d["all_match"] is True


def test_criterion_12_isolated_classification():
    d = _gate(verify.criterion_12())
    assert d["f2_isolated"] == 15
    assert d["f2_completely_isolated"] == 3
    assert d["f3_isolated"] == 53
    assert d["sound"] is True


def test_criterion_13_thread_determinism():
    d = _gate(verify.criterion_13())
    assert d["commands"] == len(verify.DETERMINISM_COMMANDS)
    assert d["byte_identical"] is True
    # the full driver must also be byte-stable across thread counts
    outs = []
    for threads in ("1", "8"):
        cp = subprocess.run(
            [
                sys.executable,
                "-m",
                "matsemi.cli",
                "verify",
                "all",
                "--profile",
                "quick",
                "--format",
                "json",
                "--threads",
                threads,
            ],
            capture_output=True,
            timeout=BOUNDS_S["13"],
        )
        assert cp.returncode == 0, cp.stderr.decode()
        outs.append(cp.stdout)
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["result"]["passed"] is True
    assert [c["id"] for c in rep["result"]["criteria"]] == [r[0] for r in verify._REGISTRY]
