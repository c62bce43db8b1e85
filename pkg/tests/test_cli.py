import json
from importlib import resources

import pytest
from click.testing import CliRunner

from divstab.cli import main

CONFIG_NAMES = [
    "blp2_instability.json",
    "f1_volumes.json",
    "p2_delta.json",
    "p2_ma.json",
    "p2_toric_finite_k.json",
]


def config_path(name):
    return str(resources.files("divstab") / "configs" / name)


def run_cli(args):
    return CliRunner().invoke(main, args)


def run_to_report(tmp_path, args):
    out = tmp_path / "report.json"
    result = run_cli(["run", *args, "--out", str(out)])
    payload = json.loads(out.read_text()) if out.exists() else None
    return result, payload


class TestHappyPath:
    @pytest.mark.parametrize("name", CONFIG_NAMES)
    def test_bundled_configs_succeed(self, tmp_path, name):
        result, report = run_to_report(tmp_path, [config_path(name)])
        assert result.exit_code == 0
        assert report["version"]
        assert len(report["config_sha256"]) == 64
        assert "seed" in report and "tolerances" in report
        for task in report["tasks"]:
            assert "outputs" in task and "error" not in task
            assert task["wall_time_s"] >= 0

    def test_stdout_when_no_out_given(self):
        result = run_cli(["run", config_path("f1_volumes.json")])
        assert result.exit_code == 0
        report = json.loads(result.stdout)
        assert report["tasks"]

    def test_list_examples(self):
        result = run_cli(["--list-examples"])
        assert result.exit_code == 0
        listed = result.stdout.split()
        for name in CONFIG_NAMES:
            assert name in listed

    def test_empty_task_list_is_fine(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": {"name": "p2"}, "line_bundle": [3]}))
        result, report = run_to_report(tmp_path, [str(cfg)])
        assert result.exit_code == 0
        assert report["tasks"] == []


class TestReportContents:
    def test_selected_values(self, tmp_path):
        _, report = run_to_report(tmp_path, [config_path("f1_volumes.json")])
        by_kind = {t["kind"]: t["outputs"] for t in report["tasks"]}
        assert by_kind["volume"]["volume"] == "8"
        assert by_kind["gamma"]["gamma"] == "2"
        assert by_kind["zariski"]["positive_part"]["coefficients"] == ["1", "1"]
        assert abs(by_kind["S"]["S"] - 5.0 / 6.0) < 1e-6

    def test_probe_outputs_semantics(self, tmp_path):
        _, report = run_to_report(tmp_path, [config_path("blp2_instability.json")])
        probe = next(t for t in report["tasks"] if t["kind"] == "probe")["outputs"]["probe"]
        assert probe["unstable"] is True
        assert probe["witness"] == "ord_e"
        assert "evidence" in probe["semantics"]

    def test_rationals_serialized_as_strings(self, tmp_path):
        _, report = run_to_report(tmp_path, [config_path("blp2_instability.json")])
        zar = next(t for t in report["tasks"] if t["kind"] == "zariski")["outputs"]
        assert zar["negative_part"][0]["coefficient"] == "2"
        gamma = next(t for t in report["tasks"] if t["kind"] == "gamma")["outputs"]
        assert gamma["gamma"] == "2"
        delta = next(t for t in report["tasks"] if t["kind"] == "delta")["outputs"]
        assert abs(delta["delta"] - 6.0 / 7.0) < 1e-8

    def test_determinism_modulo_wall_time(self, tmp_path):
        def scrub(report):
            for task in report["tasks"]:
                task.pop("wall_time_s", None)
            return report

        _, a = run_to_report(tmp_path, [config_path("p2_ma.json")])
        _, b = run_to_report(tmp_path, [config_path("p2_ma.json")])
        assert scrub(a) == scrub(b)


class TestOverrides:
    def test_tolerance_override_recorded(self, tmp_path):
        result, report = run_to_report(
            tmp_path,
            [config_path("f1_volumes.json"), "--tolerance-override", "quadrature=1e-10"],
        )
        assert result.exit_code == 0
        assert report["tolerances"]["quadrature"] == 1e-10

    def test_seed_override_recorded(self, tmp_path):
        result, report = run_to_report(
            tmp_path, [config_path("p2_ma.json"), "--seed", "7"]
        )
        assert result.exit_code == 0
        assert report["seed"] == 7

    def test_unknown_tolerance_rejected(self, tmp_path):
        result, _ = run_to_report(
            tmp_path, [config_path("f1_volumes.json"), "--tolerance-override", "foo=1"]
        )
        assert result.exit_code == 2

    def test_malformed_override_rejected(self, tmp_path):
        result, _ = run_to_report(
            tmp_path, [config_path("f1_volumes.json"), "--tolerance-override", "quadrature"]
        )
        assert result.exit_code == 2


class TestSchemaErrors:
    def write(self, tmp_path, payload):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(payload))
        return str(cfg)

    def test_invalid_json(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        result = run_cli(["run", str(cfg)])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["path"] == "$"

    def test_zero_denominator_rational(self, tmp_path):
        cfg = self.write(tmp_path, {"model": {"name": "p2"}, "line_bundle": ["3/0"]})
        result = run_cli(["run", cfg])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["path"] == "line_bundle[0]"

    def test_unknown_task_kind_has_field_path(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {"name": "p2"},
                "line_bundle": [3],
                "tasks": [{"kind": "volume"}, {"kind": "volume"}, {"kind": "nope"}],
            },
        )
        result = run_cli(["run", cfg])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["path"] == "tasks[2].kind"

    def test_unknown_bundled_model(self, tmp_path):
        cfg = self.write(tmp_path, {"model": {"name": "p7"}, "line_bundle": [1]})
        result = run_cli(["run", cfg])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["path"] == "model.name"

    def test_unknown_valuation_named_in_path(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {"name": "p2"},
                "line_bundle": [3],
                "tasks": [{"kind": "gamma", "valuation": "mystery"}],
            },
        )
        result = run_cli(["run", cfg])
        assert result.exit_code == 2
        assert json.loads(result.stderr)["error"]["path"] == "tasks[0].valuation"

    def test_wrong_rank_line_bundle(self, tmp_path):
        cfg = self.write(tmp_path, {"model": {"name": "blp2"}, "line_bundle": [3]})
        result = run_cli(["run", cfg])
        assert result.exit_code == 2

    def test_inline_surface_model_accepted(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {
                    "type": "surface",
                    "name": "plane",
                    "intersection_matrix": [[1]],
                    "canonical_class": [-3],
                    "sample_curves": [[1]],
                    "valuations": [{"name": "line", "curve": [1]}],
                },
                "line_bundle": [3],
                "tasks": [{"kind": "S", "support": ["line"]}],
            },
        )
        result, report = run_to_report(tmp_path, [cfg])
        assert result.exit_code == 0
        assert abs(report["tasks"][0]["outputs"]["S"] - 1.0) < 1e-8


class TestRuntimeErrors:
    def write(self, tmp_path, payload):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(payload))
        return str(cfg)

    def test_geometry_error_exits_3(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {"name": "p2"},
                "line_bundle": [-1],
                "tasks": [{"kind": "gamma", "valuation": "line"}],
            },
        )
        result, report = run_to_report(tmp_path, [cfg])
        assert result.exit_code == 3
        assert report["tasks"][0]["error"]["type"] == "GeometryError"

    def test_zariski_on_toric_model_exits_3(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {"name": "p2_toric"},
                "line_bundle": [0, 0, 3],
                "tasks": [{"kind": "zariski"}],
            },
        )
        result, _ = run_to_report(tmp_path, [cfg])
        assert result.exit_code == 3

    def test_tasks_before_failure_are_reported(self, tmp_path):
        cfg = self.write(
            tmp_path,
            {
                "model": {"name": "p2"},
                "line_bundle": [3],
                "tasks": [{"kind": "volume"}, {"kind": "volume", "divisor": [-1]}],
            },
        )
        # volume is a total function, so [-1] succeeds with 0; use zariski to fail
        result, report = run_to_report(tmp_path, [cfg])
        assert result.exit_code == 0
        cfg2 = self.write(
            tmp_path,
            {
                "model": {"name": "p2"},
                "line_bundle": [3],
                "tasks": [{"kind": "volume"}, {"kind": "zariski", "divisor": [-1]}],
            },
        )
        result, report = run_to_report(tmp_path, [cfg2])
        assert result.exit_code == 3
        assert report["tasks"][0]["outputs"]["volume"] == "9"
        assert report["tasks"][1]["error"]["type"] == "NotPseudoeffectiveError"
