import json
import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

import pandas as pd

from phasecert.coeffcalc import ChangeOfVars, expand_phase_in_sigma
from phasecert.errors import AdmissibilityError, RejectionReason, exit_code_for
from phasecert.lemmas import LemmaCheckResult
from phasecert.matrixcert import certify
from phasecert.polyring import parse_poly
from phasecert.quadform import PhaseFamily, QuadForm, StoppingValue
from phasecert.reports import (
    certificate_document,
    lemma_report,
    render_certificate,
    render_expansion,
    write_certificate,
    write_diagnostics,
    write_lemma_report,
    write_table,
)
from phasecert.schemas import CertificateDocument, Diagnostic, LemmaReport


def cross_family():
    return PhaseFamily(QuadForm((1, -1)), {2: parse_poly("y1 y2", 2)})


class ReportTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name) / "out"

    def tearDown(self):
        self._tmp.cleanup()


class CertificateReportTests(ReportTestCase):
    def setUp(self):
        super().setUp()
        family = cross_family()
        stopping = StoppingValue(Fraction(10), {2: Fraction(10)})
        self.cert = certify(family, stopping, ChangeOfVars(family.q, 1))
        self.doc = certificate_document(self.cert, "0" * 64)

    def test_document_fields(self):
        self.assertEqual(2, self.doc.sector)
        self.assertEqual("A", self.doc.case)
        self.assertEqual({"2": "10"}, self.doc.nu)
        self.assertTrue(self.doc.passed)
        self.assertEqual(self.cert.family.sha256(), self.doc.family_sha256)
        self.assertEqual(len(self.cert.checks), len(self.doc.checks))

    def test_written_files(self):
        json_path, text_path = write_certificate(self.out, self.doc)
        self.assertEqual("certificate_l2.json", json_path.name)
        reloaded = CertificateDocument.model_validate_json(json_path.read_text(encoding="utf-8"))
        self.assertEqual(self.doc.W, reloaded.W)
        self.assertEqual(self.doc.witness, reloaded.witness)
        text = text_path.read_text(encoding="utf-8")
        self.assertIn("case A", text)
        self.assertIn("result: PASSED", text)
        self.assertEqual(text, render_certificate(self.doc))

    def test_expansion_text(self):
        family = cross_family()
        text = render_expansion(expand_phase_in_sigma(family, ChangeOfVars(family.q, 1)))
        self.assertIn("sector l = 2", text)
        self.assertIn("[gamma = (1)]", text)
        self.assertIn("B[2] = ", text)


class TableReportTests(ReportTestCase):
    def test_summary_names_follow_the_stem(self):
        rows = pd.DataFrame([{"r": 10.0, "abs_K": 0.1}, {"r": 100.0, "abs_K": 0.01}])
        csv_path, json_path = write_table(self.out, "kernel_scan", rows, {"slope_good": -1.0})
        self.assertEqual("kernel_summary.json", json_path.name)
        self.assertEqual(2, len(pd.read_csv(csv_path)))
        self.assertEqual(-1.0, json.loads(json_path.read_text())["slope_good"])
        _, vdc_json = write_table(self.out, "vdc_scan", rows, {})
        self.assertEqual("vdc_summary.json", vdc_json.name)

    def test_lemma_report(self):
        results = [LemmaCheckResult("cramer", 3, 0), LemmaCheckResult("sylvester", 4, 1, ["seed 7"])]
        report = lemma_report(results, seed=11)
        self.assertFalse(report.passed)
        json_path, csv_path = write_lemma_report(self.out, report)
        self.assertEqual(11, LemmaReport.model_validate_json(json_path.read_text()).seed)
        frame = pd.read_csv(csv_path)
        self.assertEqual(["cramer", "sylvester"], list(frame["name"]))
        self.assertEqual([0, 1], list(frame["failures"]))

    def test_diagnostics(self):
        error = AdmissibilityError(RejectionReason.QUADRATIC_IS_Q, "p2 = 3 Q")
        diagnostic = Diagnostic(**error.to_diagnostic(), exit_code=exit_code_for(error))
        path = write_diagnostics(self.out, diagnostic)
        data = json.loads(path.read_text())
        self.assertEqual("QuadraticIsQ", data["error_type"])
        self.assertEqual(1, data["exit_code"])
        self.assertEqual("ERROR", data["severity"])


if __name__ == "__main__":
    unittest.main()
