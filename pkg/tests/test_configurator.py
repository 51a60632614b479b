"""Tests for the configurator engine."""

import itertools
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordconf.config import EngineConfig
from coordconf.configurator import ConfiguratorEngine, Outcome, Phase
from coordconf.dsl import (
    DEFAULT_SUBJECT,
    Change,
    ChangeKind,
    Configuration,
    ConfiguratorConf,
    LifecycleSpecEntry,
    parse_configurator_conf,
    validate,
)
from coordconf.dsl.parser import load_configurator_conf
from coordconf.dsl.validate import port_write_overlaps
from coordconf.errors import EmptyStack, UnknownConfiguration
from coordconf.events import Event
from coordconf.runtime import BehaviorKind, LifecycleState, OperationBehavior
from coordconf.runtime.sysmodel import SystemModel, build_registry, load_system_model, parse_system_model
from coordconf.values import format_value
from tests.conftest import parse_ok

RUNNING = LifecycleState.RUNNING
STOPPED = LifecycleState.STOPPED


@pytest.fixture
def sample_engine(sample_conf, sample_registry):
    return ConfiguratorEngine(sample_conf, sample_registry)


@pytest.fixture
def deployment(scenarios_dir):
    """Engine over an empty registry with the deployment configurations."""
    model = load_system_model(scenarios_dir / "deployment.sys")
    registry = build_registry(model)
    conf = load_configurator_conf(scenarios_dir / "deployment.conf")
    return ConfiguratorEngine(conf, registry, types=model.types)


@pytest.fixture
def faults_engine(scenarios_dir, status_events):
    """Engine over the fault-injection model, blocking calls do not sleep."""
    model = load_system_model(scenarios_dir / "faults.sys")
    registry = build_registry(model, sleep=lambda _: None)
    conf = load_configurator_conf(scenarios_dir / "faults.conf")
    return ConfiguratorEngine(conf, registry, types=model.types, emit=status_events.append)


def engine_for(text: str, registry, **kwargs) -> ConfiguratorEngine:
    return ConfiguratorEngine(parse_ok(parse_configurator_conf, text), registry, **kwargs)


class TestApplyPhases:
    """Tests for the four application phases."""

    def test_sample_configuration(self, sample_engine, sample_registry):
        """Test lifecycles, the property, the port and the operation of configuration c1."""
        report = sample_engine.apply("c1")
        assert report.ok
        assert report.phase is Phase.POST
        assert [c.ok for c in report.changes] == [True, True, True]
        assert sample_registry.lifecycle_of("compA") is RUNNING
        assert sample_registry.lifecycle_of("compB") is STOPPED
        assert sample_registry.lifecycle_of("compG") is RUNNING
        assert sample_registry.lifecycle_of("compZ") is RUNNING
        assert sample_registry.property_value("compA.prop1") == (2.3, 3.4, 5.34)
        assert sample_registry.port_value("compB.portX") == 33.4

    def test_no_default_leaves_others_untouched(self, sample_registry):
        """Test components with no entry keep their state."""
        engine = engine_for(
            "ConfiguratorConf { a = Configuration { pre_conf_state = { 'compA:stopped' } } }", sample_registry
        )
        assert engine.apply("a").ok
        assert sample_registry.lifecycle_of("compA") is STOPPED
        assert sample_registry.lifecycle_of("compB") is LifecycleState.PRE_OPERATIONAL

    def test_default_expands_in_id_order(self, sample_engine, sample_conf):
        """Test _default covers unmentioned components sorted by id."""
        config = sample_conf["c1"]
        plan = sample_engine.expand(config.pre, config.mentioned)
        assert plan == [("compA", RUNNING), ("compB", STOPPED), ("compG", STOPPED), ("compZ", STOPPED)]

    def test_default_skips_fatal(self, sample_engine, sample_registry):
        """Test a Fatal component is left alone by _default."""
        sample_registry.mark_fatal("compZ")
        assert sample_engine.apply("c1").ok
        assert sample_registry.lifecycle_of("compZ") is LifecycleState.FATAL

    def test_pre_failure_skips_changes(self, sample_engine, sample_registry):
        """Test a failure in PRE aborts before any change."""
        sample_registry.mark_fatal("compA")
        report = sample_engine.apply("c1")
        assert report.outcome is Outcome.FAILED
        assert report.phase is Phase.PRE
        assert report.error == "ComponentFatal"
        assert report.changes == []
        assert sample_registry.property_value("compA.prop1") == (0.0, 0.0, 0.0)

    def test_operation_failure_keeps_earlier_changes(self, sample_engine, sample_registry):
        """Test a failing operation aborts the rest without rolling back."""
        sample_registry.set_behavior("compG.op1", OperationBehavior(BehaviorKind.FAIL, message="busy"))
        report = sample_engine.apply("c1")
        assert report.phase is Phase.CHANGES
        assert "busy" in report.detail
        assert [c.ok for c in report.changes] == [True, True, False]
        assert sample_registry.port_value("compB.portX") == 33.4
        assert sample_registry.lifecycle_of("compG") is STOPPED

    def test_unknown_configuration(self, sample_engine):
        """Test apply with an undefined id."""
        with pytest.raises(UnknownConfiguration):
            sample_engine.apply("nope")


class TestResolve:
    """Tests for the all-or-nothing resolution phase."""

    def test_unknown_target_touches_nothing(self, sample_registry):
        """Test nothing is applied when one target does not exist."""
        engine = engine_for(
            """
            ConfiguratorConf {
                a = Configuration {
                    pre_conf_state = { _default='running' },
                    property_set("compA.prop1", {1, 2, 3}),
                    port_write("ghost.x", 1),
                },
            }
            """,
            sample_registry,
        )
        before = sample_registry.take_snapshot()
        report = engine.apply("a")
        assert report.phase is Phase.RESOLVE
        assert report.error == "ResolutionError"
        assert "unknown component ghost" in report.detail
        assert sample_registry.take_snapshot() == before

    def test_all_problems_listed(self, sample_engine):
        """Test resolve reports every problem it finds."""
        config = Configuration(
            pre=parse_ok(
                parse_configurator_conf,
                "ConfiguratorConf { a = Configuration { pre_conf_state = { 'ghost:running' } } }",
            )["a"].pre,
            changes=parse_ok(
                parse_configurator_conf,
                'ConfiguratorConf { a = Configuration { property_set("compA.nope", 1), operation_call("compG.op1", 1) } }',
            )["a"].changes,
        )
        problems = sample_engine.resolve(config)
        assert problems == [
            "pre_conf_state: unknown component ghost",
            'property_set("compA.nope", 1): unknown property compA.nope',
            'operation_call("compG.op1", 1): operation compG.op1 takes 2 arguments, got 1',
        ]

    @pytest.mark.parametrize(
        "changes",
        [
            'port_write("compA.out", 1.0), port_write("compB.portX", 2.0)',
            'port_write("compB.portX", 2.0), port_write("compA.out", 1.0)',
        ],
    )
    def test_writes_meeting_through_connection(self, sample_registry, changes):
        """Test two writes that reach one port through a connection are refused in any order."""
        engine = engine_for(f"ConfiguratorConf {{ w = Configuration {{ {changes} }} }}", sample_registry)
        before = sample_registry.take_snapshot()
        report = engine.apply("w")
        assert report.phase is Phase.RESOLVE
        assert "conflicting changes: port compB.portX is also written by" in report.detail
        assert sample_registry.take_snapshot() == before

    def test_unknown_component_type(self, deployment):
        """Test component_create needs a catalog type."""
        engine = engine_for(
            'ConfiguratorConf { a = Configuration { component_create("X", "warp_drive") } }',
            deployment.registry,
            types=deployment.types,
        )
        report = engine.apply("a")
        assert report.phase is Phase.RESOLVE
        assert "Unknown component type: warp_drive" in report.detail


class TestChangeOrder:
    """Tests that changes are a set."""

    @pytest.mark.parametrize("order", list(itertools.permutations(range(3))))
    def test_permutations_reach_same_state(self, sample_model, sample_conf, order):
        """Test every ordering of c1's changes gives the same snapshot."""
        base = sample_conf["c1"]
        reordered = Configuration(base.pre, base.post, tuple(base.changes[i] for i in order))

        results = []
        for config in (base, reordered):
            registry = build_registry(sample_model, sleep=lambda _: None)
            assert ConfiguratorEngine(sample_conf, registry).apply_configuration(config).ok
            results.append(registry.take_snapshot())
        assert results[0] == results[1]

    def test_create_before_connect(self, deployment):
        """Test a connection to a component created in the same configuration."""
        assert deployment.apply("bootstrap").ok
        engine = engine_for(
            """
            ConfiguratorConf {
                grow = Configuration {
                    connection_create("Extra.arm_torque", "youBot_Driver.arm_torque"),
                    component_create("Extra", "dynamics"),
                },
            }
            """,
            deployment.registry,
            types=deployment.types,
        )
        report = engine.apply("grow")
        assert report.ok, report.detail
        assert [c.change for c in report.changes][0] == 'component_create("Extra", "dynamics")'
        assert "Extra" in deployment.registry


class TestDeployment:
    """Tests for deployment as configuration."""

    def test_bootstrap(self, deployment):
        """Test creation, connection and post _default on created components."""
        report = deployment.apply("bootstrap")
        assert report.ok, report.detail
        registry = deployment.registry
        assert registry.component_ids() == ["Cart_Impedance", "Dynamics", "Peer_Link", "youBot_Driver"]
        assert all(registry.lifecycle_of(c) is RUNNING for c in registry.component_ids())
        assert len(registry.connections()) == 4

    def test_destroy_running_rejected(self, deployment):
        """Test destroying a Running component fails and leaves it in place."""
        deployment.apply("bootstrap")
        report = deployment.apply("destroy_running")
        assert report.phase is Phase.CHANGES
        assert report.error == "DestroyWhileRunning"
        assert "Dynamics" in deployment.registry

    def test_shutdown_in_two_steps(self, deployment):
        """Test stopping everything and then destroying everything empties the registry."""
        deployment.apply("bootstrap")
        assert deployment.apply("stop_all").ok
        assert all(deployment.registry.lifecycle_of(c) is STOPPED for c in deployment.registry.component_ids())
        assert deployment.apply("destroy_all").ok
        assert len(deployment.registry) == 0
        assert deployment.registry.connections() == []

    def test_duplicate_create_fails(self, deployment):
        """Test creating an existing component fails in the change phase."""
        deployment.apply("bootstrap")
        report = deployment.apply("bootstrap")
        assert report.phase is Phase.CHANGES
        assert report.error == "DuplicateId"


class TestEventIntake:
    """Tests for queued application and status events."""

    def test_status_event(self, youbot_engine, youbot_registry, status_events):
        """Test a configuration event is applied and answered with conf.applied."""
        youbot_engine.on_event(Event("enable_copying"))
        assert youbot_engine.pending == 1
        report = youbot_engine.step()
        assert report.ok
        assert [e.name for e in status_events] == ["conf.applied.enable_copying"]
        assert youbot_registry.port_value("Cart_Impedance.ext_ref_mode") is True

    def test_other_events_ignored(self, youbot_engine, status_events):
        """Test events naming no configuration are dropped."""
        youbot_engine.on_event(Event("e_aligned"))
        assert youbot_engine.pending == 0
        assert youbot_engine.step() is None
        assert status_events == []

    def test_fifo(self, youbot_engine, youbot_registry, status_events):
        """Test queued configurations are applied in arrival order."""
        for name in ("enable_copying", "eight_DOF", "five_DOF"):
            youbot_engine.on_event(Event(name))
        while youbot_engine.step() is not None:
            pass
        assert [e.name for e in status_events] == [
            "conf.applied.enable_copying",
            "conf.applied.eight_DOF",
            "conf.applied.five_DOF",
        ]
        assert youbot_registry.property_value("Dynamics.force_gain") == (0.0, 0.0, 0.0)

    def test_queue_full(self, youbot_conf, youbot_registry, status_events):
        """Test a full queue rejects with conf.failed and a payload."""
        engine = ConfiguratorEngine(
            youbot_conf, youbot_registry, config=EngineConfig(queue_capacity=1), emit=status_events.append
        )
        engine.on_event(Event("eight_DOF"))
        engine.on_event(Event("five_DOF"))
        assert engine.pending == 1
        assert status_events == [Event("conf.failed.five_DOF", payload="queue full", source="configurator")]

    def test_custom_status_names(self, youbot_conf, youbot_registry, status_events):
        """Test the status event templates come from the engine settings."""
        config = EngineConfig(applied_event="done.{id}")
        engine = ConfiguratorEngine(youbot_conf, youbot_registry, config=config, emit=status_events.append)
        engine.on_event(Event("five_DOF"))
        engine.step()
        assert status_events[0].name == "done.five_DOF"

    def test_crash_marks_fatal(self, faults_engine, status_events):
        """Test a crashing operation fails the configuration and only its component."""
        faults_engine.on_event(Event("flush_logs"))
        report = faults_engine.step()
        assert report.error == "OperationFailed"
        assert faults_engine.registry.lifecycle_of("Logger") is LifecycleState.FATAL
        assert faults_engine.registry.lifecycle_of("Planner") is LifecycleState.PRE_OPERATIONAL
        assert status_events[0].name == "conf.failed.flush_logs"
        assert "crashed" in status_events[0].payload

    def test_on_report(self, youbot_conf, youbot_registry):
        """Test every report reaches the on_report callback."""
        reports = []
        engine = ConfiguratorEngine(youbot_conf, youbot_registry, on_report=reports.append)
        engine.on_event(Event("five_DOF"))
        engine.step()
        assert [r.config_id for r in reports] == ["five_DOF"]

    def test_worker_thread(self, youbot_engine, status_events):
        """Test the worker applies queued configurations in the background."""
        youbot_engine.start()
        try:
            youbot_engine.on_event(Event("eight_DOF"))
            deadline = time.monotonic() + 2.0
            while not status_events and time.monotonic() < deadline:
                time.sleep(0.01)
        finally:
            youbot_engine.stop()
        assert [e.name for e in status_events] == ["conf.applied.eight_DOF"]


class TestStack:
    """Tests for pushing and popping configurations."""

    def test_push_pop_restores_snapshot(self, youbot_engine, youbot_registry):
        """Test popping every pushed configuration restores the initial state."""
        initial = youbot_registry.take_snapshot()
        assert youbot_engine.push_configuration("enable_copying").ok
        assert youbot_engine.push_configuration("five_DOF").ok
        assert youbot_engine.stack_depth == 2

        assert youbot_engine.pop_configuration().ok
        assert youbot_registry.property_value("Dynamics.force_gain") == (0.1, 0.1, 0.1)
        assert youbot_registry.port_value("Cart_Impedance.ext_ref_mode") is True

        assert youbot_engine.pop_configuration().ok
        assert youbot_registry.port_value("Cart_Impedance.ext_ref_mode") is None
        assert youbot_registry.take_snapshot() == initial

    def test_pop_restores_lifecycles(self, sample_engine, sample_registry):
        """Test lifecycles return to their pushed state and non-invertible changes are reported."""
        initial = sample_registry.take_snapshot()
        report = sample_engine.push_configuration("c1")
        assert report.ok
        assert report.warnings == ['not undoable: operation_call("compG.op1", "arg1", "arg2")']

        popped = sample_engine.pop_configuration()
        assert popped.ok
        assert popped.warnings == ['not undone: operation_call("compG.op1", "arg1", "arg2")']
        assert sample_registry.take_snapshot() == initial

    def test_restores_propagated_ports(self, sample_registry):
        """Test popping a write on an out-port restores its connected in-ports too."""
        engine = engine_for(
            'ConfiguratorConf { w = Configuration { port_write("compA.out", 1.5) } }', sample_registry
        )
        initial = sample_registry.take_snapshot()
        engine.push_configuration("w")
        assert sample_registry.port_value("compB.portX") == 1.5
        engine.pop_configuration()
        assert sample_registry.take_snapshot() == initial

    def test_pop_forgets_port_kind(self, sample_registry):
        """Test a popped first write leaves the port free to take any kind."""
        engine = engine_for('ConfiguratorConf { w = Configuration { port_write("compZ.portX", true) } }', sample_registry)
        assert engine.push_configuration("w").ok
        assert engine.pop_configuration().ok
        sample_registry.write_port("compZ.portX", "text")
        assert sample_registry.port_value("compZ.portX") == "text"

    def test_failed_push_is_not_recorded(self, sample_engine, sample_registry):
        """Test only successful applications are pushed."""
        sample_registry.mark_fatal("compA")
        assert not sample_engine.push_configuration("c1").ok
        assert sample_engine.stack_depth == 0
        assert sample_engine.peek() is None

    def test_pop_empty(self, sample_engine):
        """Test popping with nothing pushed."""
        with pytest.raises(EmptyStack):
            sample_engine.pop_configuration()


NODE_IDS = ["n0", "n1", "n2", "n3"]
CHANGE_TARGETS = [f"{cid}.{name}" for cid in NODE_IDS for name in ("gain", "cmd", "out")]

reals = st.floats(min_value=-100, max_value=100, allow_nan=False)
lifecycle_specs = st.dictionaries(
    st.sampled_from(NODE_IDS + [DEFAULT_SUBJECT]),
    st.sampled_from([LifecycleState.PRE_OPERATIONAL, STOPPED, RUNNING]),
    max_size=5,
)
unresolvable_changes = st.sampled_from(
    [
        Change(ChangeKind.PROPERTY_SET, "ghost.gain", ((1.0, 1.0, 1.0),)),
        Change(ChangeKind.PROPERTY_SET, "n0.nope", (1.0,)),
        Change(ChangeKind.PORT_WRITE, "ghost.cmd", (1.0,)),
        Change(ChangeKind.PORT_WRITE, "n1.gain", (1.0,)),
        Change(ChangeKind.OPERATION_CALL, "n2.reset", ()),
        Change(ChangeKind.CONNECTION_CREATE, "n3.out", ("ghost.cmd",)),
        Change(ChangeKind.COMPONENT_DESTROY, "ghost", ()),
    ]
)


def as_change(target: str, value: float) -> Change:
    if target.endswith(".gain"):
        return Change(ChangeKind.PROPERTY_SET, target, ((value, value / 2, -value),))
    return Change(ChangeKind.PORT_WRITE, target, (value,))


@st.composite
def system_models(draw) -> SystemModel:
    """Four components with a gain property, an in-port and an out-port, randomly wired."""
    lines = []
    for cid in NODE_IDS:
        gain = tuple(float(g) for g in draw(st.lists(st.integers(-5, 5), min_size=3, max_size=3)))
        lines += [
            f"type {cid}_t property gain real[] = {format_value(gain)}",
            f"type {cid}_t inport cmd",
            f"type {cid}_t outport out",
            f"component {cid} type {cid}_t",
        ]
    wiring = draw(st.sets(st.tuples(st.sampled_from(NODE_IDS), st.sampled_from(NODE_IDS)), max_size=6))
    lines += [f"connect {src}.out -> {dst}.cmd" for src, dst in sorted(wiring)]
    model, diagnostics = parse_system_model("\n".join(lines))
    assert not diagnostics
    return model


@st.composite
def configurations(draw, model: SystemModel, max_changes: int = 6) -> Configuration:
    """Conflict-free configurations over the model's properties, ports and lifecycles.

    A write that would reach a port already written, directly or through a
    connection, is dropped.
    """
    changes: list[Change] = []
    for target in draw(st.lists(st.sampled_from(CHANGE_TARGETS), unique=True, max_size=max_changes)):
        change = as_change(target, draw(reals))
        if not port_write_overlaps([*changes, change], model.connections):
            changes.append(change)
    pre = draw(lifecycle_specs)
    post = draw(lifecycle_specs)
    return Configuration(
        pre=tuple(LifecycleSpecEntry(c, s) for c, s in pre.items()),
        post=tuple(LifecycleSpecEntry(c, s) for c, s in post.items()),
        changes=tuple(changes),
    )


@st.composite
def modelled_configurations(draw) -> tuple[SystemModel, Configuration]:
    model = draw(system_models())
    return model, draw(configurations(model))


@st.composite
def push_sequences(draw) -> tuple[SystemModel, list[Configuration]]:
    model = draw(system_models())
    return model, draw(st.lists(configurations(model), min_size=1, max_size=5))


class TestChangeSetProperties:
    """Property tests over generated models and configurations."""

    @settings(max_examples=200, deadline=None)
    @given(modelled_configurations())
    def test_order_does_not_matter(self, modelled):
        """Test every permutation of the changes reaches the same snapshot."""
        model, config = modelled
        assert not [d for d in validate(ConfiguratorConf({"c": config}), model) if d.is_error]
        snapshots = []
        for order in itertools.permutations(config.changes):
            registry = build_registry(model)
            reordered = Configuration(config.pre, config.post, order)
            assert ConfiguratorEngine(ConfiguratorConf(), registry).apply_configuration(reordered).ok
            snapshots.append(registry.take_snapshot())
        assert all(s == snapshots[0] for s in snapshots)

    @settings(max_examples=100, deadline=None)
    @given(modelled_configurations(), unresolvable_changes, st.integers(min_value=0, max_value=6))
    def test_unresolvable_target_changes_nothing(self, modelled, bad, position):
        """Test one unresolvable target leaves the whole registry untouched."""
        model, config = modelled
        changes = list(config.changes)
        changes.insert(min(position, len(changes)), bad)
        registry = build_registry(model)
        before = registry.take_snapshot()

        engine = ConfiguratorEngine(ConfiguratorConf(), registry, types=model.types)
        report = engine.apply_configuration(Configuration(config.pre, config.post, tuple(changes)))
        assert report.phase is Phase.RESOLVE
        assert report.error == "ResolutionError"
        assert registry.take_snapshot() == before

    @settings(max_examples=100, deadline=None)
    @given(push_sequences())
    def test_push_then_pop_restores(self, pushes):
        """Test popping every pushed configuration restores the initial state."""
        model, configs = pushes
        registry = build_registry(model)
        conf = ConfiguratorConf({f"c{i}": c for i, c in enumerate(configs)})
        engine = ConfiguratorEngine(conf, registry)
        initial = registry.take_snapshot()

        for config_id in conf.configurations:
            assert engine.push_configuration(config_id).ok
        while engine.stack_depth:
            report = engine.pop_configuration()
            assert report.ok, report.detail
            assert report.warnings == []
        assert registry.take_snapshot() == initial
        # ports are absent again, so no kind is left over from the pushes
        for target in CHANGE_TARGETS:
            if not target.endswith(".gain"):
                registry.write_port(target, "text")
