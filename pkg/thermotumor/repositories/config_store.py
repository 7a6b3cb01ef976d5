import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import ValidationError

from thermotumor.core.exceptions import ConfigParseError, ConfigValidationError, OutputError
from thermotumor.schemas.run_config import RunConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    try:
        document: Any = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigParseError(
            f"{source}" + (f":{line}" if line is not None else "") + f": {problem}",
            context={"path": source, "line": line},
        ) from None

    if not isinstance(document, dict):
        raise ConfigParseError(
            f"{source}: the configuration must be a mapping of sections",
            context={"path": source},
        )

    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigValidationError.from_validation(exc, source) from None


def load_config(path: PathLike) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot read configuration {path}: {exc.strerror}", context={"path": str(path)}) from exc
    config = parse_config(text, str(path))
    logger.debug(f"Loaded configuration from {path}")
    return config


def write_manifest(path: PathLike, document: Dict[str, Any]) -> Path:
    """Run manifest: the effective configuration and run outcome, no timestamps"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write manifest {path}: {exc.strerror}", context={"path": str(path)}) from exc
    return path


def dump_config(config: RunConfig, path: Optional[PathLike] = None) -> str:
    """Serialize to YAML; loading the result yields an equal RunConfig"""
    text = yaml.safe_dump(config.model_dump(mode="json", exclude_none=True), sort_keys=False)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write configuration {path}: {exc.strerror}", context={"path": str(path)}) from exc
    return text
