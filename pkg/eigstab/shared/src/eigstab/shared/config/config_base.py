"""eigstab base configuration module."""

import json
import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Annotated, Any, ClassVar, Literal, Self, cast

import yaml
from pydantic import BaseModel, Field, field_validator

from .config_wrapper import ConfigWrapper

LogLevel = Literal["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"]

ENV_PREFIX = "EIGSTAB"

logger = logging.getLogger(__name__)


class ConfigFileError(RuntimeError):
    """A configuration file is missing or cannot be parsed."""


class OtelConfig(BaseModel):
    """OpenTelemetry logging and tracing configuration."""

    endpoint: Annotated[
        str | None,
        Field(
            description="OpenTelemetry collector endpoint URL",
            examples=["http://localhost:4318"],
        ),
    ] = None
    log_console_spans: Annotated[
        bool,
        Field(description="Log finished spans (solver steps, driver cases) to the console"),
    ] = False
    log_level: Annotated[
        LogLevel,
        Field(description="Logging level for OTLP log export"),
    ] = "INFO"


class ConfigBase(BaseModel):
    """Configuration base class for the eigstab tools."""

    log_level: Annotated[LogLevel, Field(description="Logging level for console/stdout logging")] = "INFO"
    otel: OtelConfig = Field(default_factory=OtelConfig, description="OpenTelemetry configuration")

    # sections that always exist so <prefix>_<SECTION>_<FIELD> can reach their leaves
    env_sections: ClassVar[tuple[str, ...]] = ("otel",)

    @field_validator("otel", mode="before")
    @classmethod
    def validate_otel(cls, v: Any) -> Any:
        """Allow None for otel and convert to empty dict for default factory."""
        if v is None:
            return {}
        return v

    @classmethod
    def from_config_wrapper(cls, wrapper: ConfigWrapper, overrides: Mapping[str, Any] | None = None) -> Self:
        """Create Config from ConfigWrapper.

        Args:
            wrapper (ConfigWrapper): Wrapped configuration data.
            overrides (Mapping | None): Nested values merged over the unwrapped data before validation.

        Returns:
            Self: Configuration instance.

        Raises:
            ConfigFileError: If the wrapped data is not a mapping.

        """
        unwrapped = wrapper.unwrap()
        if not isinstance(unwrapped, dict):
            msg = f"configuration must be a mapping, found {type(unwrapped).__name__}"
            logger.error(msg)
            raise ConfigFileError(msg)
        if overrides:
            merge_overrides(unwrapped, overrides)
        return cast(Self, cls.model_validate(unwrapped))

    @classmethod
    def from_data(cls, data: dict, prefix: str = ENV_PREFIX, overrides: Mapping[str, Any] | None = None) -> Self:
        """Create Config from raw data, applying ``<prefix>_*`` environment overrides.

        Sections named in ``env_sections`` are created when absent so that the
        environment can reach their fields without a document.

        Args:
            data (dict): Raw configuration data.
            prefix (str): Environment variable prefix, empty to disable overrides.
            overrides (Mapping | None): Nested values that win over data and environment.

        Returns:
            Self: Configuration instance.

        """
        seeded = dict(data)
        for section in cls.env_sections:
            if seeded.get(section) is None:
                seeded[section] = {}
        wrapper = ConfigWrapper.from_data(seeded, prefix)
        return cls.from_config_wrapper(wrapper, overrides)

    @classmethod
    def from_file(cls, path: Path, prefix: str = ENV_PREFIX, overrides: Mapping[str, Any] | None = None) -> Self:
        """Create Config from a JSON or YAML file.

        Args:
            path (Path): Path to the config file.
            prefix (str): Environment variable prefix used for overrides.
            overrides (Mapping | None): Nested values that win over file and environment.

        Returns:
            Self: Configuration instance.

        Raises:
            ConfigFileError: If the file is missing or is not a valid document.

        """
        return cls.from_data(read_document(path), prefix, overrides)


def merge_overrides(target: dict[str, Any], overrides: Mapping[str, Any]) -> None:
    """Merge nested overrides into target in place; mappings merge, everything else replaces."""
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(target.get(key), dict):
            merge_overrides(target[key], value)
        else:
            target[key] = dict(value) if isinstance(value, Mapping) else value


def read_document(path: Path) -> dict[str, Any]:
    """Read a JSON or YAML configuration document into a dict.

    Files ending in ``.yaml``/``.yml`` are read as YAML, everything else as JSON.

    Raises:
        ConfigFileError: If the file is missing, unparsable or not a mapping.
    """
    if not path.is_file():
        msg = f"Config file {path} not found."
        logger.error(msg)
        raise ConfigFileError(msg)
    try:
        with open(path, encoding="utf-8") as f:
            if path.suffix.lower() in {".yaml", ".yml"}:
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
    except json.JSONDecodeError as e:
        msg = f"Config file {path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        logger.error(msg)
        raise ConfigFileError(msg) from e
    except yaml.YAMLError as e:
        msg = f"Config file {path}: {e}"
        logger.error(msg)
        raise ConfigFileError(msg) from e
    if not isinstance(data, dict):
        msg = f"Config file {path}: top level must be a mapping, found {type(data).__name__}"
        logger.error(msg)
        raise ConfigFileError(msg)
    return data
