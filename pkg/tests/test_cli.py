import json
import unittest
from pathlib import Path

from click.testing import CliRunner

from phasecert.__version__ import __version__
from phasecert.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

TINY_LEMMAS = """\
run:
  seed: 3
  workers: 1
  ensembles:
    decomposition: 2
    propB: 2
    propD: 2
    xi_identity: 2
    abc_closed_forms: 1
    abc_corollary: 2
    cramer: 1
    sylvester: 3
"""

TINY_SCAN = """\
family:
  n: 2
  theta: [1, -1]
  phases:
    2: "{p2}"
run:
  gate: {gate}
  sector: 2
  nu: {{2: 1}}
  r_grid: [10, 100]
  points: 4
  mu_samples: 2
  workers: 1
"""


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()

    def invoke(self, *args):
        return self.runner.invoke(main, ["--quiet", *args], catch_exceptions=False)

    def write(self, name, text):
        Path(name).write_text(text, encoding="utf-8")
        return name


class VersionTests(CliTestCase):
    def test_version_command(self):
        result = self.invoke("version")
        self.assertEqual(0, result.exit_code)

    def test_version_option(self):
        result = self.runner.invoke(main, ["--version"])
        self.assertEqual(0, result.exit_code)
        self.assertIn(__version__, result.output)


class CertifyCommandTests(CliTestCase):
    def test_case_a_certifies_both_sectors(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("certify", "-c", str(CONFIGS / "case_a.yaml"), "-o", "out")
            self.assertEqual(0, result.exit_code, result.output)
            for l in (1, 2):
                doc = json.loads(Path(f"out/certificate_l{l}.json").read_text())
                self.assertEqual("A", doc["case"])
                self.assertTrue(doc["passed"])
                self.assertTrue(Path(f"out/certificate_l{l}.txt").exists())

    def test_b_cases(self):
        for name, case in (("b1.yaml", "B1"), ("b2.yaml", "B2.4")):
            with self.runner.isolated_filesystem():
                result = self.invoke("certify", "-c", str(CONFIGS / name), "-o", "out")
                self.assertEqual(0, result.exit_code, f"{name}: {result.output}")
                self.assertEqual(case, json.loads(Path("out/certificate_l1.json").read_text())["case"])

    def test_gate_rejection_exits_one(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("certify", "-c", str(CONFIGS / "p2_is_q.yaml"), "-o", "out")
            self.assertEqual(1, result.exit_code)
            diagnostic = json.loads(Path("out/diagnostics.json").read_text())
            self.assertEqual("QuadraticIsQ", diagnostic["error_type"])
            self.assertEqual(1, diagnostic["exit_code"])
            self.assertFalse(Path("out/certificate_l1.json").exists())

    def test_bad_config_exits_one(self):
        with self.runner.isolated_filesystem():
            path = self.write("bad.yaml", "family:\n  n: 2\n  theta: [1, -1]\n  phases: {2: \"u1 u2\"}\n  colour: red\n")
            result = self.invoke("certify", "-c", path, "-o", "out")
            self.assertEqual(1, result.exit_code)
            diagnostic = json.loads(Path("out/diagnostics.json").read_text())
            self.assertEqual("ConfigError", diagnostic["error_type"])
            self.assertEqual(5, diagnostic["context"]["line"])

    def test_missing_config_file(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("certify", "-c", "nowhere.yaml", "-o", "out")
            self.assertEqual(1, result.exit_code)


class OtherCommandTests(CliTestCase):
    def test_expand(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("expand", "-c", str(CONFIGS / "case_a.yaml"), "-o", "out")
            self.assertEqual(0, result.exit_code, result.output)
            self.assertIn("[gamma = (1)]", Path("out/expansion_l2.txt").read_text())

    def test_check_lemmas(self):
        with self.runner.isolated_filesystem():
            path = self.write("lemmas.yaml", TINY_LEMMAS)
            result = self.invoke("check-lemmas", "-c", path, "-o", "out", "--seed", "5")
            self.assertEqual(0, result.exit_code, result.output)
            report = json.loads(Path("out/lemmas.json").read_text())
            self.assertEqual(5, report["seed"])
            self.assertTrue(report["passed"])
            self.assertTrue(Path("out/lemmas.csv").exists())

    def test_vdc_scan_defaults(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("vdc-scan", "-o", "out")
            self.assertEqual(0, result.exit_code, result.output)
            summary = json.loads(Path("out/vdc_summary.json").read_text())
            self.assertAlmostEqual(-0.5, summary["slope"], delta=0.05)
            self.assertTrue(Path("out/vdc_scan.csv").exists())

    def test_kernel_scan(self):
        with self.runner.isolated_filesystem():
            path = self.write("scan.yaml", TINY_SCAN.format(p2="u1 u2", gate="true"))
            result = self.invoke("kernel-scan", "-c", path, "-o", "out", "--seed", "2")
            self.assertEqual(0, result.exit_code, result.output)
            summary = json.loads(Path("out/kernel_summary.json").read_text())
            self.assertTrue(summary["certified"])
            self.assertEqual(2, summary["seed"])
            self.assertEqual(__version__, summary["version"])
            self.assertEqual(2, len(summary["per_r"]))
            self.assertTrue(Path("out/kernel_scan.csv").exists())

    def test_kernel_scan_negative_control(self):
        with self.runner.isolated_filesystem():
            path = self.write("control.yaml", TINY_SCAN.format(p2="u1^2 - u2^2", gate="false"))
            result = self.invoke("kernel-scan", "-c", path, "-o", "out")
            self.assertEqual(0, result.exit_code, result.output)
            summary = json.loads(Path("out/kernel_summary.json").read_text())
            self.assertFalse(summary["certified"])
            self.assertFalse(Path("out/diagnostics.json").exists())

    def test_kernel_scan_gate_rejects(self):
        with self.runner.isolated_filesystem():
            path = self.write("gated.yaml", TINY_SCAN.format(p2="u1^2 - u2^2", gate="true"))
            result = self.invoke("kernel-scan", "-c", path, "-o", "out")
            self.assertEqual(1, result.exit_code)


class DeterminismTests(CliTestCase):
    def test_same_inputs_give_identical_documents(self):
        with self.runner.isolated_filesystem():
            lemmas = self.write("lemmas.yaml", TINY_LEMMAS)
            for out in ("first", "second"):
                self.assertEqual(0, self.invoke("certify", "-c", str(CONFIGS / "case_a.yaml"), "-o", out).exit_code)
                self.assertEqual(0, self.invoke("check-lemmas", "-c", lemmas, "-o", out, "--seed", "9").exit_code)
            for name in ("certificate_l1.json", "certificate_l2.txt", "lemmas.json", "lemmas.csv"):
                self.assertEqual(Path("first", name).read_bytes(), Path("second", name).read_bytes(), name)


class RunDispatchTests(CliTestCase):
    def test_dispatch_on_run_subcommand(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("run", "-c", str(CONFIGS / "case_a.yaml"), "-o", "out")
            self.assertEqual(0, result.exit_code, result.output)
            self.assertTrue(Path("out/certificate_l1.json").exists())

    def test_subcommand_flag_overrides(self):
        with self.runner.isolated_filesystem():
            result = self.invoke("run", "-c", str(CONFIGS / "case_a.yaml"), "-o", "out", "-s", "expand")
            self.assertEqual(0, result.exit_code, result.output)
            self.assertTrue(Path("out/expansion_l1.txt").exists())
            self.assertFalse(Path("out/certificate_l1.json").exists())

    def test_missing_subcommand(self):
        with self.runner.isolated_filesystem():
            path = self.write("plain.yaml", "run:\n  seed: 1\n")
            result = self.runner.invoke(main, ["run", "-c", path])
            self.assertEqual(2, result.exit_code)


if __name__ == "__main__":
    unittest.main()
