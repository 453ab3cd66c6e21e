"""
实验配置文件解析

INI 风格的分节键值文件，区分大小写；只有 # 开头的内容是注释
（划分写法里 ; 是分隔符）。示例：

    [model]
    rule = ising_ad
    beta = 1
    J = 1

    [coupling]
    schemes = crn, micro_unopt, micro_opt
    q = 1, 2, 4
"""

import configparser
import logging
import re
from pathlib import Path
from typing import Dict, Optional, Tuple

from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.experiment_config import ExperimentConfig
from app.schemas.parameters import PARAMETER_NAMES

logger = logging.getLogger(__name__)

SECTIONS = ("model", "lattice", "observable", "perturbation", "coupling", "run", "output")
LIST_KEYS = {("lattice", "dims"), ("coupling", "schemes"), ("coupling", "q")}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#=:\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> Dict[Tuple[Optional[str], Optional[str]], int]:
    """(section, key) → 行号（从 1 开始）；(section, None) 为节标题所在行"""
    index = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        if line.lstrip().startswith("#"):
            continue
        match = _SECTION_RE.match(line)
        if match:
            section = match.group(1).strip()
            index.setdefault((section, None), number)
            continue
        match = _KEY_RE.match(line)
        if match and section is not None:
            index.setdefault((section, match.group(1).strip()), number)
    return index


def _split_list(value: str, separators: str = r"[,\s]+"):
    return [item for item in re.split(separators, value.strip()) if item]


def _to_payload(parser: configparser.ConfigParser, lines) -> dict:
    payload = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"未知的配置节，可用: {', '.join(SECTIONS)}",
                              section=section, line=lines.get((section, None)))
        items = dict(parser.items(section))
        if section == "model":
            rule = items.pop("rule", None)
            for key in items:
                if key not in PARAMETER_NAMES:
                    raise ConfigError(f"未知参数，可用: {', '.join(PARAMETER_NAMES)}",
                                      section="model", key=key, line=lines.get(("model", key)))
            payload["model"] = {"parameters": items}
            if rule is not None:
                payload["model"]["rule"] = rule
            continue
        for key in list(items):
            if (section, key) in LIST_KEYS:
                # dims 也可写作 10x10
                pattern = r"[,\sx×]+" if key == "dims" else r"[,\s]+"
                items[key] = _split_list(items[key], pattern)
        payload[section] = items
    return payload


def _locate(loc: tuple) -> Tuple[Optional[str], Optional[str]]:
    parts = [p for p in loc if isinstance(p, str)]
    if not parts:
        return None, None
    section = parts[0]
    if section == "model" and len(parts) >= 3 and parts[1] == "parameters":
        return section, parts[2]
    return section, parts[1] if len(parts) > 1 else None


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    """
    解析并校验配置文本

    Raises:
        ConfigError: 语法错误或校验失败，附带节、键和行号
    """
    parser = configparser.ConfigParser(
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: 无法解析配置文件: {e}")

    lines = _line_index(text)
    payload = _to_payload(parser, lines)
    payload["raw"] = {s: dict(parser.items(s)) for s in parser.sections()}
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        errors = e.errors()
        section, key = _locate(errors[0]["loc"])
        detail = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '配置'}: {err['msg']}" for err in errors)
        line = lines.get((section, key)) or lines.get((section, None))
        raise ConfigError(detail, section=section, key=key, line=line) from e
    except ConfigError as e:
        if e.line is None and e.section:
            raise ConfigError(e.message, section=e.section, key=e.key,
                              line=lines.get((e.section, e.key))) from e
        raise


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"配置文件不存在: {path}")
    logger.info(f"读取实验配置: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
