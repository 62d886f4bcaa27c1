import copy
import json
from pathlib import Path

import pytest

from condmeasure.scenario import (
    ScenarioError,
    build_scenario,
    load_scenario,
    render_json,
    render_text,
    run_scenario,
)

SCENARIO_DIR = Path(__file__).parent.parent / "src" / "condmeasure" / "scenarios"
GOLDEN_DIR = Path(__file__).parent / "golden"

SHIPPED = ["dice", "density", "fubini", "coverage", "chain"]


def run_shipped(name: str):
    return run_scenario(load_scenario(str(SCENARIO_DIR / f"{name}.json")))


class TestGoldenReports:
    @pytest.mark.parametrize("name", SHIPPED)
    def test_text_report_matches_golden(self, name):
        report = run_shipped(name)
        assert report.verified
        assert render_text(report) == (GOLDEN_DIR / f"{name}.txt").read_text()

    @pytest.mark.parametrize("name", ["dice", "chain"])
    def test_json_report_matches_golden(self, name):
        report = run_shipped(name)
        assert render_json(report) == (GOLDEN_DIR / f"{name}.json").read_text()

    def test_reports_are_deterministic(self):
        assert render_text(run_shipped("density")) == render_text(run_shipped("density"))

    def test_json_reports_parse_back(self):
        doc = json.loads(render_json(run_shipped("dice")))
        assert doc["verified"] is True
        assert len(doc["queries"]) == 2


@pytest.fixture
def doc():
    with open(SCENARIO_DIR / "density.json") as fh:
        return json.load(fh)


class TestValidation:
    def test_missing_atoms(self, doc):
        del doc["atoms"]
        with pytest.raises(ScenarioError, match="missing required key 'atoms'"):
            build_scenario(doc)

    def test_weights_must_sum_to_one(self, doc):
        doc["atoms"] = [["a1", "1/2"], ["a2", "1/3"]]
        with pytest.raises(ScenarioError, match="atoms:"):
            build_scenario(doc)

    def test_unknown_op_lists_known_ops(self, doc):
        doc["queries"][0]["op"] = "frobnicate"
        with pytest.raises(ScenarioError, match="unknown op 'frobnicate' \\(known: .*measure-of"):
            build_scenario(doc)

    def test_unknown_point_in_query_set(self, doc):
        doc["queries"][0]["set"]["a1"] = [9]
        scn = build_scenario(doc)
        with pytest.raises(ScenarioError, match="unknown point 9"):
            run_scenario(scn)

    def test_unknown_measure_name(self, doc):
        doc["queries"][0]["measure"] = "ghost"
        scn = build_scenario(doc)
        with pytest.raises(ScenarioError, match="unknown measure 'ghost'"):
            run_scenario(scn)

    def test_function_must_cover_all_points(self, doc):
        doc["functions"]["double-or-nothing"]["values"] = [[1, "1"]]
        scn = build_scenario(doc)
        with pytest.raises(ScenarioError, match="function misses points"):
            run_scenario(scn)

    def test_block_masses_must_name_actual_blocks(self):
        with open(SCENARIO_DIR / "coverage.json") as fh:
            doc = json.load(fh)
        bad = copy.deepcopy(doc)
        bad["measures"]["rho"]["blocks"]["a1"][0][0] = [1, 2]
        with pytest.raises(ScenarioError, match="not a block of the domain"):
            build_scenario(bad)

    def test_queries_are_required(self, doc):
        doc["queries"] = []
        with pytest.raises(ScenarioError, match="nonempty 'queries' list"):
            build_scenario(doc)

    def test_not_json(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ScenarioError, match="not valid JSON"):
            load_scenario(str(p))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read scenario"):
            load_scenario(str(tmp_path / "absent.json"))


class TestReportShape:
    def test_failed_query_flips_the_verdict(self, doc):
        scn = build_scenario(doc)
        report = run_scenario(scn)
        assert report.verified
        report.results[0].ok = False
        assert not report.verified
        assert "FAILED verification" in render_text(report)
