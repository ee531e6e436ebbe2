import json

import pytest

from qdichotomy.verify import CHECKS, MANIFEST, MUTANTS, THREADS_ENV, check_coverage, run_suite, thread_count

CHEAP = tuple(c for c in CHECKS if c.cost == 1)


def test_manifest_is_covered():
    check_coverage()
    assert {c.property for c in CHECKS} >= MANIFEST
    with pytest.raises(RuntimeError, match="misses properties"):
        check_coverage(CHECKS[1:])


def test_cheap_checks_pass():
    report = run_suite(seed=7, trials=20, dims=(2, 3), tolerance=1e-9, checks=CHEAP)
    assert report.passed, report.to_table()
    margins = [c.margin for c in report.checks]
    assert margins == sorted(margins)


def test_mutated_check_fails():
    report = run_suite(seed=42, trials=20, dims=(2, 3), checks=MUTANTS)
    assert not report.passed
    assert report.failures[0].worst_slack < -1e-3


def test_zero_tolerance_semantics():
    report = run_suite(seed=3, trials=10, dims=(3,), tolerance=0.0, checks=CHEAP)
    for c in report.checks:
        if c.kind == "equality":
            assert c.passed == (c.worst_slack == 0.0)
        elif c.worst_slack > 0:
            assert c.passed


@pytest.mark.parametrize("workers", [1, 4])
def test_reports_are_reproducible(workers):
    first = run_suite(seed=11, trials=8, dims=(2, 4), checks=CHEAP, workers=1).to_json()
    again = run_suite(seed=11, trials=8, dims=(2, 4), checks=CHEAP, workers=workers).to_json()
    assert first == again
    other = run_suite(seed=12, trials=8, dims=(2, 4), checks=CHEAP, workers=workers).to_json()
    assert other != first


def test_report_formats():
    report = run_suite(seed=1, trials=4, dims=(2,), checks=CHEAP[:3])
    data = json.loads(report.to_json())
    assert data["seed"] == 1 and data["dims_tested"] == [2]
    assert len(data["checks"]) == 3
    table = report.to_table()
    assert table.splitlines()[-1].startswith("seed=1")


@pytest.mark.parametrize("kwargs", [{"trials": 0}, {"dims": (1, 2)}, {"dims": (7,)}, {"dims": ()}])
def test_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        run_suite(checks=CHEAP, **kwargs)


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    monkeypatch.setenv(THREADS_ENV, "many")
    assert thread_count() == 1
    monkeypatch.delenv(THREADS_ENV)
    assert thread_count(default=2) == 2
