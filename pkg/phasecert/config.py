"""YAML config ingestion with line numbers in every diagnostic."""

import hashlib
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import yaml
from pydantic import ValidationError

from phasecert.errors import ConfigError, PolyError
from phasecert.polyring import Poly, parse_poly
from phasecert.quadform import NormalizedForm, PhaseFamily, QuadForm, StoppingValue, family_from_matrix
from phasecert.schemas import FamilyConfig, RunConfig


@dataclass
class LoadedConfig:
    path: Optional[str]
    raw: bytes
    family_config: Optional[FamilyConfig]
    run: RunConfig
    family: Optional[PhaseFamily]
    normalized: Optional[NormalizedForm] = None

    @property
    def config_sha256(self) -> str:
        return hashlib.sha256(self.raw).hexdigest()

    @property
    def family_sha256(self) -> Optional[str]:
        return self.family.sha256() if self.family is not None else None

    def require_family(self) -> PhaseFamily:
        if self.family is None:
            raise ConfigError("missing 'family' section", line=1, path=self.path)
        return self.family


def _node_line(root: Optional[yaml.Node], keys: Sequence[Union[str, int]]) -> Optional[int]:
    """1-based line of the value at ``keys``; falls back to the deepest node found."""
    node, line = root, None
    for key in keys:
        if node is None:
            break
        if isinstance(node, yaml.MappingNode):
            match = None
            for key_node, value_node in node.value:
                if str(key_node.value) == str(key):
                    match = value_node
                    break
            node = match
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
        if node is not None:
            line = node.start_mark.line + 1
    return line


def _validation_error(exc: ValidationError, root: Optional[yaml.Node], prefix: Sequence[str], path: Optional[str]) -> ConfigError:
    first = exc.errors()[0]
    location = [*prefix, *first.get("loc", ())]
    where = ".".join(str(k) for k in location)
    return ConfigError(f"{where}: {first.get('msg', 'invalid value')}", line=_node_line(root, location), path=path)


def parse_family(config: FamilyConfig, root: Optional[yaml.Node] = None, path: Optional[str] = None):
    """PhaseFamily from the family section; a matrix form is normalized exactly."""
    n = config.n
    phases: Dict[int, Poly] = {}
    for j, spec in config.phases.items():
        try:
            phases[int(j)] = parse_poly(spec, n)
        except PolyError as exc:
            raise ConfigError(f"phase p_{j}: {exc}", line=_node_line(root, ["family", "phases", j]), path=path) from exc
    if not config.is_matrix:
        try:
            return PhaseFamily(QuadForm(tuple(config.theta)), phases, config.d), None
        except (PolyError, ValueError) as exc:
            raise ConfigError(str(exc), line=_node_line(root, ["family", "theta"]), path=path) from exc
    matrix = [[Fraction(str(x)) for x in row] for row in config.theta]
    try:
        family, normal = family_from_matrix(matrix, phases, config.d)
    except ConfigError as exc:
        raise ConfigError(str(exc), line=_node_line(root, ["family", "theta"]), path=path) from exc
    return family, normal


def apply_env_overrides(run: RunConfig) -> RunConfig:
    """PHASECERT_QUAD_TOL and PHASECERT_WORKERS win over config and flags."""
    updates: Dict[str, Any] = {}
    tol = os.environ.get("PHASECERT_QUAD_TOL")
    if tol:
        try:
            updates["tolerance"] = float(tol)
        except ValueError as exc:
            raise ConfigError(f"PHASECERT_QUAD_TOL={tol!r} is not a number") from exc
    workers = os.environ.get("PHASECERT_WORKERS")
    if workers:
        try:
            updates["workers"] = int(workers)
        except ValueError as exc:
            raise ConfigError(f"PHASECERT_WORKERS={workers!r} is not an integer") from exc
    return run.model_copy(update=updates) if updates else run


def loads_config(text: Union[str, bytes], path: Optional[str] = None) -> LoadedConfig:
    raw = text.encode("utf-8") if isinstance(text, str) else text
    try:
        root = yaml.compose(raw.decode("utf-8"))
        data = yaml.safe_load(raw.decode("utf-8")) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None, path=path) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping with 'family' and 'run' sections", line=1, path=path)
    unknown = set(data) - {"family", "run"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown section {key!r}", line=_node_line(root, [key]), path=path)
    family_config = None
    if data.get("family") is not None:
        try:
            family_config = FamilyConfig.model_validate(data["family"])
        except ValidationError as exc:
            raise _validation_error(exc, root, ["family"], path) from exc
    try:
        run = RunConfig.model_validate(data.get("run") or {})
    except ValidationError as exc:
        raise _validation_error(exc, root, ["run"], path) from exc
    family, normal = parse_family(family_config, root, path) if family_config is not None else (None, None)
    return LoadedConfig(path, raw, family_config, apply_env_overrides(run), family, normal)


def load_config(path: Union[str, Path]) -> LoadedConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=str(path)) from exc
    return loads_config(raw, str(path))


def stopping_value(config: LoadedConfig) -> StoppingValue:
    """Exact nu from the run section; r defaults to |nu|."""
    config.require_family()
    run = config.run
    if not run.nu:
        raise ConfigError("run.nu is required for certify", path=config.path)
    nu = {j: Fraction(v) for j, v in run.nu.items()}
    r = Fraction(run.r) if run.r is not None else sum(abs(v) for v in nu.values())
    return StoppingValue(r, nu)


def sectors(config: LoadedConfig):
    """0-based sector indices requested by run.sector."""
    n = config.require_family().n
    if config.run.sector == "all":
        return list(range(n))
    l = int(config.run.sector)
    if l > n:
        raise ConfigError(f"sector {l} is outside 1..{n}", path=config.path)
    return [l - 1]


def dump_config(family: Dict[str, Any], run: Dict[str, Any]) -> str:
    return yaml.safe_dump({"family": family, "run": run}, sort_keys=False)
