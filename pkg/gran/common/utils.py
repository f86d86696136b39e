"""Util functions."""

import os
import os.path as osp
from typing import Dict, List, Mapping, Optional, Union

import toml
from pydantic import ValidationError

from .typing import GranConfig

ConfigValue = Union[int, float, str, bool, List[int]]
ConfigDict = Dict[str, Dict[str, ConfigValue]]

CONFIG_DIR = osp.join(
    osp.dirname(osp.dirname(osp.abspath(__file__))), "configs"
)
STRICT_ENV = "GRAN_STRICT"


class ConfigError(ValueError):
    """Invalid, unknown or unreadable configuration."""


def list_files(
    inputs: str, suffix: str = "", with_prefix: bool = False
) -> List[str]:
    """List files paths for a folder/nested folder."""
    files: List[str] = []
    for root, _, file_iter in os.walk(inputs, topdown=True):
        path = osp.normpath(osp.relpath(root, inputs))
        path = "" if path == "." else path
        if with_prefix:
            path = osp.join(inputs, path)
        files.extend(
            [
                osp.join(path, file_)
                for file_ in file_iter
                if file_.endswith(suffix)
            ]
        )
    files = sorted(files)
    return files


def read_manifest(manifest: str) -> List[str]:
    """Read relative image paths, one per line, skipping blanks and #."""
    with open(manifest, "r") as fp:
        lines = [line.strip() for line in fp]
    return [line for line in lines if line and not line.startswith("#")]


def strict_mode(flag: bool = False) -> bool:
    """Strict determinism is on if requested or forced by GRAN_STRICT=1."""
    return flag or os.environ.get(STRICT_ENV, "") == "1"


def resolve_config_path(cfg_path: str) -> str:
    """Map a preset name such as `tiny` to its file in gran/configs."""
    if cfg_path.endswith(".toml"):
        return cfg_path
    return osp.join(CONFIG_DIR, cfg_path + ".toml")


def parse_config(
    raw: Mapping[str, Mapping[str, ConfigValue]],
    overrides: Optional[Mapping[str, ConfigValue]] = None,
) -> GranConfig:
    """Validate a nested config dict; `section.key` overrides win."""
    merged: ConfigDict = {
        section: dict(values) for section, values in raw.items()
    }
    for key, value in (overrides or {}).items():
        if "." not in key:
            raise ConfigError(
                "override {} must look like section.key".format(key)
            )
        section, name = key.split(".", 1)
        merged.setdefault(section, {})[name] = value
    try:
        return GranConfig(**merged)
    except ValidationError as err:
        raise ConfigError(str(err)) from err
    except TypeError as err:
        raise ConfigError(str(err)) from err


def load_gran_config(
    cfg_path: Optional[str] = None,
    overrides: Optional[Mapping[str, ConfigValue]] = None,
) -> GranConfig:
    """Load a config file or preset, applying flag overrides on top."""
    raw: ConfigDict = {}
    if cfg_path is not None:
        path = resolve_config_path(cfg_path)
        if not osp.isfile(path):
            raise ConfigError("Can not find config file {}".format(path))
        try:
            raw = toml.load(path)
        except toml.TomlDecodeError as err:
            raise ConfigError("{}: {}".format(path, err)) from err
    return parse_config(raw, overrides)


def config_to_text(config: GranConfig) -> str:
    """Canonical TOML text of a config: fixed section and key order."""
    sections = {"net": config.net.dict(), "train": config.train.dict()}
    for values in sections.values():
        for key, value in values.items():
            if isinstance(value, tuple):
                values[key] = list(value)
    return toml.dumps(sections)


def config_from_text(text: str) -> GranConfig:
    """Inverse of `config_to_text`."""
    try:
        raw: ConfigDict = toml.loads(text)
    except toml.TomlDecodeError as err:
        raise ConfigError(str(err)) from err
    return parse_config(raw)
