"""Configurator DSL: model, parser, validator and canonical printer."""

from coordconf.dsl.model import (
    DEFAULT_SUBJECT,
    Change,
    ChangeKind,
    Configuration,
    ConfiguratorConf,
    LifecycleSpecEntry,
)
from coordconf.dsl.parser import load_configurator_conf, parse_configurator_conf
from coordconf.dsl.printer import format_conf
from coordconf.dsl.validate import validate

__all__ = [
    "DEFAULT_SUBJECT",
    "Change",
    "ChangeKind",
    "Configuration",
    "ConfiguratorConf",
    "LifecycleSpecEntry",
    "format_conf",
    "load_configurator_conf",
    "parse_configurator_conf",
    "validate",
]
