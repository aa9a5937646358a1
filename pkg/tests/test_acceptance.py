"""Acceptance criteria 1-9 on the default configuration (seed 0).

The full suite runs once per session; each criterion is asserted separately
and one pass/fail line per criterion is printed (also in the terminal summary).
"""
import json
import time

import pytest

import conftest
from twoweight.io import dumps
from twoweight.suite import CRITERIA, SuiteConfig, run_suite


@pytest.fixture(scope="module")
def report():
    t0 = time.perf_counter()
    rep = run_suite(SuiteConfig(), log=print)
    total = time.perf_counter() - t0
    for c in rep.criteria:
        conftest.ACCEPTANCE_LINES.append(c.line())
    conftest.ACCEPTANCE_LINES.append(f"suite runtime {total:.1f} s")
    rep.timings["total"] = total
    return rep


def _criterion(report, n):
    c = next(c for c in report.criteria if c.number == n)
    print(c.line())
    print(json.dumps(json.loads(dumps(c.observed)), sort_keys=True))
    return c


def test_every_criterion_reported(report):
    assert [c.number for c in report.criteria] == sorted(CRITERIA)
    json.loads(dumps(report.to_dict()))


def test_criterion_1_necessity(report):
    c = _criterion(report, 1)
    assert c.observed["instances"] == 200
    assert c.passed
    assert report.timings["total"] < 300


def test_criterion_2_ratio_stability(report):
    c = _criterion(report, 2)
    assert c.passed


def test_criterion_3_grid_statistics(report):
    c = _criterion(report, 3)
    assert set(c.observed) >= {"r=12", "r=14", "r=16"}
    assert report.config["pbad_trials"] == 10_000 and report.config["pbad_grids"] == 200
    assert report.timings["grid"] < 60
    assert c.passed


def test_criterion_4_haar(report):
    c = _criterion(report, 4)
    assert c.observed["instances"] == 50 and c.observed["tolerance"] == 1e-10
    assert c.passed


def test_criterion_5_energy(report):
    c = _criterion(report, 5)
    assert c.observed["instances"] == 50
    assert c.passed


def test_criterion_6_monotonicity(report):
    c = _criterion(report, 6)
    assert c.observed["sign_samples"] == 10_000 and c.observed["constant"] == 64
    assert c.passed


def test_criterion_7_corona(report):
    c = _criterion(report, 7)
    assert report.config["C0"] == 64
    assert c.passed


def test_criterion_8_hardy(report):
    c = _criterion(report, 8)
    assert c.observed["instances"] == 50
    assert c.passed


def test_criterion_9_disk(report):
    c = _criterion(report, 9)
    assert c.passed
