"""
INI run files.

Sections map onto the RunConfig blocks; lists are comma separated
(group-element descriptors are separated by ';'), empty values mean
"unset". Floats are written with repr, so dump followed by load gives
back an equal RunConfig.

    [run]
    command = verify-bound
    workers = 4

    [lattice]
    N = 1, 2, 3, 5
    deltas = 1, 1/4, 1/16
    Ls = 1, 2, 4, 8, 16
    g = I; diag:4
"""

import configparser
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from src.core.exceptions import ConfigurationError
from src.core.logging import get_logger

from .schemas import RunConfig, parse_number

logger = get_logger("harness.config_file")

_LIST_SEPARATORS = {"g": ";"}
_NUMBER_LISTS = {"deltas", "Ls", "hearts", "coefficients", "frequencies"}


def _parse_value(key: str, raw: str, annotation_is_list: bool) -> Any:
    raw = raw.strip()
    if annotation_is_list:
        separator = _LIST_SEPARATORS.get(key, ",")
        items = [item.strip() for item in raw.split(separator) if item.strip()]
        if key in _NUMBER_LISTS:
            return [None if item.lower() == "none" else parse_number(item) for item in items]
        return items
    if raw == "":
        return None
    return raw


def _is_list_field(model: type[BaseModel], key: str) -> bool:
    field = model.model_fields.get(key)
    return field is not None and getattr(field.annotation, "__origin__", None) is list


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    """
    RunConfig from INI text.

    Raises:
        ConfigurationError: on syntax errors, unknown sections or keys, or
            values the schemas reject
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse {source}: {e}", config_key=source) from e

    data: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        block = RunConfig.model_fields.get(section)
        if block is None:
            raise ConfigurationError(f"Unknown section [{section}] in {source}", config_key=section)
        model = block.annotation
        values = {}
        for key, raw in parser.items(section):
            value = _parse_value(key, raw, _is_list_field(model, key))
            if value is not None:
                values[key] = value
        data[section] = values

    try:
        return RunConfig.model_validate(data)
    except PydanticValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"Invalid value for {key} in {source}: {first['msg']}", config_key=key) from e


def load_run_config(path: Path) -> RunConfig:
    """Read and validate a run file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read run file {path}: {e}", config_key=str(path)) from e
    config = parse_run_config(text, source=str(path))
    logger.info("Run file loaded", event="run_config_loaded", path=str(path), command=config.run.command)
    return config


def _format_value(key: str, value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        separator = _LIST_SEPARATORS.get(key, ",")
        return f"{separator} ".join(_format_value(key, item) if item is not None else "none" for item in value)
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_run_config(config: RunConfig) -> str:
    lines: list[str] = []
    for section in RunConfig.model_fields:
        block: BaseModel = getattr(config, section)
        lines.append(f"[{section}]")
        for key in type(block).model_fields:
            lines.append(f"{key} = {_format_value(key, getattr(block, key))}".rstrip())
        lines.append("")
    return "\n".join(lines)


def dump_run_config(config: RunConfig, path: Optional[Path] = None) -> str:
    """Render a RunConfig as INI text, writing it to `path` when given."""
    text = render_run_config(config)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        except OSError as e:
            raise ConfigurationError(f"Cannot write run file {path}: {e}", config_key=str(path)) from e
    return text
