"""Runtime configuration for coordconf."""

import logging
import os
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

logger = logging.getLogger(__name__)


# Config file paths
CONFIG_FILE = Path("coordconf.yaml")
DEFAULT_CONFIG_FILE = Path(__file__).parent.parent / "coordconf.default.yaml"

LOG_ENV_VAR = "COORDCONF_LOG"
LOG_ENV_LEVELS = {"debug": "DEBUG", "info": "INFO", "quiet": "ERROR"}
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"


class LoggingConfig(BaseModel):
    """Logging configuration."""

    level: str = "WARNING"
    file: Optional[str] = None

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        upper_v = v.upper()
        if upper_v not in valid_levels:
            raise ValueError(
                f"Invalid log level: {v}. Must be one of: {', '.join(sorted(valid_levels))}"
            )
        return upper_v


class EngineConfig(BaseModel):
    """Configurator engine settings."""

    applied_event: str = "conf.applied.{id}"
    failed_event: str = "conf.failed.{id}"
    queue_capacity: int = Field(default=64, ge=1)
    busy_policy: Literal["fifo"] = "fifo"

    @field_validator("applied_event", "failed_event")
    @classmethod
    def validate_template(cls, v: str) -> str:
        """Status event templates must name the configuration."""
        if "{id}" not in v:
            raise ValueError(f"Status event template must contain {{id}}: {v}")
        return v

    def applied_name(self, config_id: str) -> str:
        return self.applied_event.format(id=config_id)

    def failed_name(self, config_id: str) -> str:
        return self.failed_event.format(id=config_id)


class HarnessConfig(BaseModel):
    """Scenario runner settings."""

    bus_capacity: int = Field(default=64, ge=1)
    watchdog_seconds: float = Field(default=5.0, gt=0)
    max_rounds_per_instant: int = Field(default=1000, ge=1)
    trace_out: Optional[str] = None


class Config(BaseModel):
    """Main configuration model."""

    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    engine: EngineConfig = Field(default_factory=EngineConfig)
    harness: HarnessConfig = Field(default_factory=HarnessConfig)


def get_default_config() -> Config:
    """Get default configuration."""
    return Config()


def load_config(config_path: Optional[Path] = None) -> Config:
    """Load configuration from YAML file.

    Args:
        config_path: Path to config file. Defaults to ./coordconf.yaml

    Returns:
        Config object
    """
    if config_path is None:
        config_path = CONFIG_FILE

    if not config_path.exists():
        logger.debug(f"Config file not found at {config_path}, using defaults")
        return get_default_config()

    try:
        with open(config_path, "r") as f:
            data = yaml.safe_load(f) or {}
        return Config(**data)
    except yaml.YAMLError as e:
        logger.warning(f"Invalid YAML in config file {config_path}: {e}. Using defaults.")
        return get_default_config()
    except ValidationError as e:
        logger.warning(f"Invalid configuration in {config_path}: {e}. Using defaults.")
        return get_default_config()
    except PermissionError:
        logger.warning(f"Permission denied reading config file {config_path}. Using defaults.")
        return get_default_config()
    except Exception as e:
        logger.warning(f"Error loading config from {config_path}: {e}. Using defaults.")
        return get_default_config()


def effective_log_level(config: Config) -> int:
    """Log level from the config, overridden by ``COORDCONF_LOG`` when set."""
    level_name = config.logging.level
    override = os.environ.get(LOG_ENV_VAR)
    if override:
        mapped = LOG_ENV_LEVELS.get(override.strip().lower())
        if mapped is None:
            logger.warning(f"Ignoring {LOG_ENV_VAR}={override!r}: expected one of {', '.join(LOG_ENV_LEVELS)}")
        else:
            level_name = mapped
    return getattr(logging, level_name, logging.WARNING)


def setup_logging(config: Config) -> None:
    """Configure logging."""
    log_level = effective_log_level(config)

    logging.basicConfig(level=log_level, format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    logging.getLogger().setLevel(log_level)

    # Add file handler if configured
    if config.logging.file:
        try:
            file_handler = logging.FileHandler(config.logging.file)
            file_handler.setLevel(log_level)
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            logging.getLogger().addHandler(file_handler)
        except PermissionError:
            logger.warning(f"Cannot write to log file: {config.logging.file}")
