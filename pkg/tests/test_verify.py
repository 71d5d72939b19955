import json
from pathlib import Path

import pytest

from rswmaxwell import verify as vf

MUTATIONS = sorted((Path(__file__).parent / "fixtures" / "mutations").glob("*.json"))


@pytest.mark.parametrize("scope", ["algebra", "operators", "evolution"])
def test_each_suite_passes(scope):
    checks = vf.run_checks(scope, seed=0)
    assert checks
    failed = [(c.name, c.norm, c.tolerance) for c in checks if not c.passed]
    assert not failed


def test_unknown_scope():
    with pytest.raises(ValueError):
        vf.run_checks("physics")


def test_report_shape():
    checks = vf.run_checks("algebra")
    rep = json.loads(vf.report_json(checks, "algebra", 0))
    assert rep["passed"] is True and rep["failed"] == []
    assert set(rep["checks"][0]) == {"check_name", "norm", "tolerance", "pass"}
    assert "PASS" in vf.format_table(checks)


def test_reports_are_deterministic():
    a = vf.report_json(vf.run_checks("operators", seed=7), "operators", 7)
    b = vf.report_json(vf.run_checks("operators", seed=7), "operators", 7)
    assert a == b


def test_five_mutation_fixtures_committed():
    assert len(MUTATIONS) == 5
    assert len({json.loads(p.read_text())["matrix"] for p in MUTATIONS}) == 5


@pytest.mark.parametrize("path", MUTATIONS, ids=lambda p: p.stem)
def test_mutation_is_caught_by_named_check(path):
    spec = vf.load_mutation(path)
    checks = vf.run_checks("algebra", consts=vf.mutated_constants(spec))
    failed = [c.name for c in checks if not c.passed]
    assert spec["expect_failed"] in failed


def test_load_mutation_requires_fields(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"matrix": "beta", "row": 0}')
    with pytest.raises(ValueError, match="col"):
        vf.load_mutation(p)


def test_explicit_mutation_value():
    c = vf.mutated_constants({"matrix": "sigma_x", "row": 0, "col": 1, "value": [0, 1]})
    assert c.get("sigma_x")[0, 1] == 1j
