import csv
import json
import unittest
from unittest import mock

from click.testing import CliRunner

from nlperspective.cli import cli, main
from nlperspective.exceptions import HypothesisViolated
from nlperspective.perspective import Branch, OracleCheck
from nlperspective.transform import ConvergenceReport


def _json_output(text):
    start = text.index("{")
    data, _ = json.JSONDecoder().raw_decode(text[start:])
    return data


def _verify_document(path):
    data = {
        "command": "verify",
        "name": "small",
        "pairs": [
            {
                "name": "huber",
                "phi": {"family": "huber", "params": {"alpha": 1.0}},
                "s": {"family": "clipped_quadratic_scaling", "params": {"beta": 0.5}},
            }
        ],
        "grids": {"joint": {"lower": [-3.0, -1.5], "upper": [3.0, 3.0], "counts": [41, 41]}},
    }
    path.write_text(json.dumps(data))
    return str(path)


def _check(max_error):
    return OracleCheck(
        branch="C305_i", nodes_compared=10, max_error=max_error, infinite_mismatches=0, slack=0.0, tolerance=0.08
    )


class TestEval(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def test_classical_preset(self):
        result = self.runner.invoke(cli, ["eval", "--preset", "classical"])
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("[classical] branch Affine_Ex51", result.output)
        self.assertIn("persp=0.5", result.output)
        self.assertIn("conj([1.0],[-1.0])=0.0", result.output)

    def test_unknown_preset(self):
        result = self.runner.invoke(cli, ["eval", "--preset", "figure9"])
        self.assertEqual(result.exit_code, 2)
        self.assertIn("Error:", result.output)

    def test_needs_a_job(self):
        result = self.runner.invoke(cli, ["eval"])
        self.assertEqual(result.exit_code, 2)

    def test_unknown_family(self):
        with self.runner.isolated_filesystem():
            with open("job.json", "w") as f:
                json.dump(
                    {
                        "command": "eval",
                        "pairs": [{"name": "p", "phi": {"family": "softplus"}, "s": {"family": "affine"}}],
                        "points": [{"x": [0.0], "y": [1.0]}],
                    },
                    f,
                )
            result = self.runner.invoke(cli, ["eval", "--config", "job.json"])
        self.assertEqual(result.exit_code, 2)


def test_verify_needs_a_joint_grid():
    result = CliRunner().invoke(cli, ["verify", "--preset", "classical"])
    assert result.exit_code == 2


def test_verify_fail_and_pass(tmp_path):
    config = _verify_document(tmp_path / "job.json")
    with mock.patch("nlperspective.cli.oracle_check", return_value=_check(1.0)):
        failing = CliRunner().invoke(cli, ["verify", "--config", config])
    assert failing.exit_code == 1
    assert "[huber] FAIL branch=C305_i" in failing.output
    with mock.patch("nlperspective.cli.oracle_check", return_value=_check(1e-3)):
        passing = CliRunner().invoke(cli, ["verify", "--config", config])
    assert passing.exit_code == 0, passing.output
    assert "[huber] PASS" in passing.output


def test_verify_debug_branch_is_forced_unchecked(tmp_path):
    config = _verify_document(tmp_path / "job.json")
    with mock.patch("nlperspective.cli.oracle_check", return_value=_check(1e-3)) as check:
        result = CliRunner().invoke(cli, ["verify", "--config", config, "--debug-branch", "T55_iiia"])
    assert result.exit_code == 0, result.output
    _, kwargs = check.call_args
    assert kwargs["branch"] == Branch.zero_level_on_hull
    assert kwargs["unchecked"]
    assert kwargs["tolerance"] == 0.08


def test_convergence_needs_a_joint_grid():
    result = CliRunner().invoke(cli, ["convergence", "--preset", "classical"])
    assert result.exit_code == 2


def test_convergence_reports_each_pair(tmp_path):
    config = _verify_document(tmp_path / "job.json")
    report = ConvergenceReport(
        spacings=[0.1, 0.05], sup_errors=[0.02, 0.01], empirical_order=[1.0], reference="closed_form"
    )
    with mock.patch("nlperspective.cli.perspective_convergence", return_value=report) as sweep:
        result = CliRunner().invoke(cli, ["convergence", "--config", config])
    assert result.exit_code == 0, result.output
    data = _json_output(result.output)
    assert data["huber"]["sup_errors"] == [0.02, 0.01]
    assert data["huber"]["reference"] == "closed_form"
    assert sweep.call_count == 1


class TestClassify(unittest.TestCase):
    def test_figure3(self):
        result = CliRunner().invoke(cli, ["classify", "--preset", "figure3"])
        self.assertEqual(result.exit_code, 0, result.output)
        data = _json_output(result.output)
        self.assertEqual(data["root_scaling"]["branch"], "T55_vb")
        self.assertEqual(data["square_scaling"]["branch"], "T55_va")
        self.assertEqual(data["root_scaling"]["sign_class"]["kind"], "Mixed")
        self.assertIn("P30_iii", data["root_scaling"]["convexity_conditions"])

    def test_hypothesis_errors_exit_3(self):
        with mock.patch("nlperspective.cli.perspective_report", side_effect=HypothesisViolated("forced")):
            result = CliRunner().invoke(cli, ["classify", "--preset", "example61"])
        self.assertEqual(result.exit_code, 3)
        self.assertIn("forced", result.output)


def test_surface_functions(tmp_path):
    result = CliRunner().invoke(cli, ["surface", "--preset", "figure1", "--output-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "figure1_functions.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["x0", "huber", "berhu", "shifted_square", "max"]
    assert len(rows) == 602
    assert rows[-1][0] == "3.0"
    assert float(rows[-1][-1]) == float(rows[-1][3]) == 5.0


def test_surface_pairs(tmp_path):
    result = CliRunner().invoke(cli, ["surface", "--preset", "figure3", "--output-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    with open(tmp_path / "figure3_root_scaling.json") as f:
        document = json.load(f)
    assert document["branch"] == "T55_vb"
    assert document["columns"] == ["x0", "y0", "prepersp", "persp"]
    assert len(document["rows"]) == 121 * 71
    assert (tmp_path / "figure3_square_scaling.csv").exists()


def test_main_returns_exit_codes():
    assert main(["presets"]) == 0
    assert main(["eval", "--preset", "figure9"]) == 2
