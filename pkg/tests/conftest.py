"""Pytest configuration and fixtures."""

from pathlib import Path

import pytest

from coordconf.configurator import ConfiguratorEngine
from coordconf.dsl.parser import parse_configurator_conf
from coordconf.fsm.parser import parse_statechart
from coordconf.runtime.sysmodel import build_registry, parse_system_model

REPO_ROOT = Path(__file__).parent.parent
SCENARIOS_DIR = REPO_ROOT / "scenarios"
GOLDEN_DIR = Path(__file__).parent / "golden"


# Components named by the sample configuration plus one bystander
SAMPLE_SYSTEM = """
type sample property prop1 real[] = {0.0, 0.0, 0.0}
type sample inport portX
type sample outport out
type sample operation op1 arity 2

component compA type sample
component compB type sample
component compG type sample
component compZ type sample

connect compA.out -> compB.portX
"""

SAMPLE_CONF = """
ConfiguratorConf {
    c1 = Configuration {
        pre_conf_state = { 'compA:running', 'compB:configure', '_default:stopped' },
        post_conf_state = { _default='running' },
        property_set("compA.prop1", { 2.3, 3.4, 5.34 } ),
        port_write("compB.portX", 33.4),
        operation_call("compG.op1", "arg1", "arg2"),
    },
}
"""

TOGGLE_FSM = """
fsm toggle {
    initial off;
    state off { entry raise lamp_off; }
    state on {
        entry raise lamp_on;
        exit raise lamp_leaving;
        after 100 raise e_auto_off;
    }
    transition off -> on on e_switch;
    transition on -> off on e_switch;
    transition on -> off on e_auto_off;
}
"""


def parse_ok(parse, text):
    """Parse text and fail the test with the diagnostics if it does not parse."""
    result, diagnostics = parse(text)
    assert result is not None, [d.format() for d in diagnostics]
    return result


@pytest.fixture
def scenarios_dir():
    """Directory with the shipped model files."""
    return SCENARIOS_DIR


@pytest.fixture
def golden_dir():
    """Directory with golden .conf files and their expected models."""
    return GOLDEN_DIR


@pytest.fixture
def sample_model():
    """System model with compA, compB, compG and compZ."""
    model, diagnostics = parse_system_model(SAMPLE_SYSTEM)
    assert not diagnostics
    return model


@pytest.fixture
def sample_registry(sample_model):
    """Registry built from the sample model; every component PreOperational."""
    return build_registry(sample_model, sleep=lambda _: None)


@pytest.fixture
def sample_conf():
    """The sample configuration, as configuration c1."""
    return parse_ok(parse_configurator_conf, SAMPLE_CONF)


@pytest.fixture
def youbot_model(scenarios_dir):
    """The shipped youBot system model."""
    model, diagnostics = parse_system_model((scenarios_dir / "youbot.sys").read_text())
    assert not diagnostics
    return model


@pytest.fixture
def youbot_registry(youbot_model):
    return build_registry(youbot_model)


@pytest.fixture
def youbot_conf(scenarios_dir):
    """The shipped youBot configurations."""
    return parse_ok(parse_configurator_conf, (scenarios_dir / "youbot.conf").read_text())


@pytest.fixture
def youbot_spec(scenarios_dir):
    """The shipped youBot statechart."""
    return parse_ok(parse_statechart, (scenarios_dir / "youbot.fsm").read_text())


@pytest.fixture
def status_events():
    """Collects the status events an engine emits."""
    return []


@pytest.fixture
def youbot_engine(youbot_conf, youbot_registry, youbot_model, status_events):
    """Engine over the youBot registry, emitting into status_events."""
    return ConfiguratorEngine(youbot_conf, youbot_registry, types=youbot_model.types, emit=status_events.append)


@pytest.fixture
def toggle_spec():
    """Two-state chart with entry/exit raises and a state timer."""
    return parse_ok(parse_statechart, TOGGLE_FSM)


@pytest.fixture
def write_file(tmp_path):
    """Write a file into tmp_path and return its path."""

    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
