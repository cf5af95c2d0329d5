"""Certificate and expansion documents: pydantic JSON, jinja2 text and pandas CSV."""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from jinja2 import Template

from phasecert.__version__ import __version__
from phasecert.coeffcalc import SigmaExpansion, expansion_to_text
from phasecert.lemmas import LemmaCheckResult
from phasecert.matrixcert import Certificate
from phasecert.polyring import coefficient_norm
from phasecert.schemas import CertificateDocument, Diagnostic, LemmaEntry, LemmaReport, RecheckEntry

CERTIFICATE_TEMPLATE = Template(
    """phasecert {{ doc.version }} certificate
family sha256 {{ doc.family_sha256 }}
config sha256 {{ doc.config_sha256 }}

{{ doc.family }}

sector l = {{ doc.sector }}
r = {{ doc.r }}, nu = {% for j, v in doc.nu.items() %}nu{{ j }}={{ v }}{% if not loop.last %}, {% endif %}{% endfor %}
case {{ doc.case }}, m0 = {{ doc.m0 }}
D* = {% for j, g in doc.dstar.items() %}(j={{ j }}, gamma={{ g }}){% if not loop.last %} {% endif %}{% endfor %}
{% for step in doc.trace %}  trace: {% for k, v in step.items() %}{{ k }}={{ v }}{% if not loop.last %} {% endif %}{% endfor %}
{% endfor %}gamma = {{ doc.gamma }}, d0 = {{ doc.d0 }}, s0 = {{ doc.s0 }}, s1 = {{ doc.s1 }}

det B* = {{ doc.det_bstar }}
{% for j, part in doc.W_parts.items() %}W[nu{{ j }}] = {{ part }}
{% endfor %}W = {{ doc.W }}
[[W]] = {{ "%.6g"|format(doc.W_norm) }}
W({{ doc.witness|join(", ") }}) = {{ doc.witness_value }}

re-check:
{% for item in doc.checks %}  [{{ "ok" if item.passed else "FAIL" }}] {{ item.name }}{% if item.detail %}: {{ item.detail }}{% endif %}
{% endfor %}result: {{ "PASSED" if doc.passed else "FAILED" }}
"""
)

EXPANSION_TEMPLATE = Template(
    """phasecert {{ version }} sigma-expansion
{{ family }}
sector l = {{ sector }}
{% for gamma, parts in blocks.items() %}
[gamma = {{ gamma }}]
{% for kind in ("B", "D", "E") %}{% for j, text in parts[kind].items() %}  {{ kind }}[{{ j }}] = {{ text }}
{% endfor %}{% endfor %}{% endfor %}"""
)


def certificate_document(cert: Certificate, config_sha256: str) -> CertificateDocument:
    names = [f"u{i + 1}" for i in range(cert.family.n)]
    return CertificateDocument(
        version=__version__,
        config_sha256=config_sha256,
        family_sha256=cert.family.sha256(),
        family=cert.family.canonical_text(),
        sector=cert.sector,
        case=cert.case.value,
        m0=cert.m0,
        r=str(cert.stopping.r),
        nu={str(j): str(v) for j, v in cert.stopping.nu.items()},
        dstar=cert.dstar.to_dict(),
        trace=cert.trace,
        gamma=list(cert.gamma),
        d0=cert.d0,
        s0=cert.s0,
        s1=cert.s1,
        W_parts={str(j): p.to_text(names) for j, p in sorted(cert.W_parts.items())},
        W=cert.W.to_text(names),
        W_norm=float(coefficient_norm(cert.W)),
        witness=[str(x) for x in cert.witness],
        witness_value=str(cert.witness_value),
        det_bstar=cert.det_bstar.to_text(),
        checks=[RecheckEntry(name=c.name, passed=c.passed, detail=c.detail) for c in cert.checks],
        passed=cert.passed(),
    )


def render_certificate(doc: CertificateDocument) -> str:
    return CERTIFICATE_TEMPLATE.render(doc=doc)


def render_expansion(expansion: SigmaExpansion) -> str:
    return EXPANSION_TEMPLATE.render(
        version=__version__,
        family=expansion.family.canonical_text(),
        sector=expansion.cov.sector,
        blocks=expansion_to_text(expansion),
    )


def write_certificate(out_dir: Path, doc: CertificateDocument) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"certificate_l{doc.sector}.json"
    text_path = out_dir / f"certificate_l{doc.sector}.txt"
    json_path.write_text(doc.model_dump_json(indent=2) + "\n", encoding="utf-8")
    text_path.write_text(render_certificate(doc), encoding="utf-8")
    return [json_path, text_path]


def write_expansion(out_dir: Path, expansion: SigmaExpansion) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"expansion_l{expansion.cov.sector}.txt"
    path.write_text(render_expansion(expansion), encoding="utf-8")
    return path


def lemma_report(results: Sequence[LemmaCheckResult], seed: int, config_sha256: Optional[str] = None) -> LemmaReport:
    entries = [LemmaEntry(**r.to_dict()) for r in results]
    return LemmaReport(
        version=__version__,
        seed=seed,
        config_sha256=config_sha256,
        results=entries,
        passed=all(e.passed for e in entries),
    )


def write_lemma_report(out_dir: Path, report: LemmaReport) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "lemmas.json"
    csv_path = out_dir / "lemmas.csv"
    json_path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    frame = pd.DataFrame(
        [{"name": e.name, "instances": e.instances, "failures": e.failures, "passed": e.passed} for e in report.results]
    )
    frame.to_csv(csv_path, index=False)
    return [json_path, csv_path]


def write_table(out_dir: Path, stem: str, rows: pd.DataFrame, summary: Dict[str, Any]) -> List[Path]:
    """``<stem>.csv`` plus a summary named after the stem prefix (kernel_scan -> kernel_summary.json)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem.split('_')[0]}_summary.json"
    rows.to_csv(csv_path, index=False)
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return [csv_path, json_path]


def write_diagnostics(out_dir: Path, diagnostic: Diagnostic) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "diagnostics.json"
    path.write_text(diagnostic.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path
