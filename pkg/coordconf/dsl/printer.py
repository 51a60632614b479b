"""Canonical pretty-printer for ConfiguratorConf models."""

from coordconf.dsl.model import Change, ChangeKind, Configuration, ConfiguratorConf, LifecycleSpecEntry
from coordconf.values import format_value

INDENT = "    "


def _state_list(entries: tuple[LifecycleSpecEntry, ...]) -> str:
    if not entries:
        return "{ }"
    items = ", ".join(f"'{e.subject}:{e.target.value.lower()}'" for e in entries)
    return "{ " + items + " }"


def format_change(change: Change) -> str:
    """Render one change as it is written in a .conf file."""
    if change.kind in (ChangeKind.CONNECTION_CREATE, ChangeKind.CONNECTION_REMOVE, ChangeKind.COMPONENT_CREATE):
        args = [format_value(change.target), format_value(change.peer)]
    else:
        args = [format_value(change.target)] + [format_value(a) for a in change.args]
    return f"{change.kind.value}({', '.join(args)})"


def format_configuration(config: Configuration, indent: str = "") -> str:
    lines = []
    if config.pre:
        lines.append(f"pre_conf_state = {_state_list(config.pre)},")
    if config.post:
        lines.append(f"post_conf_state = {_state_list(config.post)},")
    lines.extend(f"{format_change(c)}," for c in config.changes)
    if not lines:
        return "Configuration { }"
    body = "\n".join(f"{indent}{INDENT}{line}" for line in lines)
    return f"Configuration {{\n{body}\n{indent}}}"


def format_conf(conf: ConfiguratorConf) -> str:
    """Render a ConfiguratorConf canonically.

    Parsing the output yields a structurally equal model, and formatting
    is a fixed point: ``format_conf(parse(format_conf(c))) == format_conf(c)``.
    """
    if not conf.configurations:
        return "ConfiguratorConf { }\n"
    parts = [
        f"{INDENT}{config_id} = {format_configuration(config, INDENT)},"
        for config_id, config in conf.configurations.items()
    ]
    return "ConfiguratorConf {\n" + "\n\n".join(parts) + "\n}\n"
