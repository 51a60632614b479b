"""Tests for statechart parsing and execution."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordconf.dsl.parser import load_configurator_conf
from coordconf.errors import ModelFileError
from coordconf.events import Event
from coordconf.fsm import Statechart, fsm_init, fsm_step, fsm_tick, load_statechart, parse_statechart
from coordconf.runtime.sysmodel import build_registry, load_system_model
from tests.conftest import SCENARIOS_DIR, parse_ok


def names(events) -> list[str]:
    return [e.name for e in events]


def errors(text: str) -> list[str]:
    spec, diagnostics = parse_statechart(text)
    assert spec is None
    return [d.message for d in diagnostics]


@pytest.fixture
def youbot(youbot_spec):
    """Initialized youBot chart."""
    chart, _ = fsm_init(youbot_spec)
    return chart


def drive(chart: Statechart, *event_names: str) -> list[str]:
    """Dispatch events in order and collect everything raised."""
    raised = []
    for name in event_names:
        raised.extend(fsm_step(chart, Event(name)))
    return names(raised)


class TestParseStatechart:
    """Tests for the .fsm parser."""

    def test_youbot_chart(self, youbot_spec):
        """Test the shipped chart's structure."""
        assert youbot_spec.name == "youbot"
        assert youbot_spec.top == ["unsync", "sync", "harmonizing", "copying"]
        assert youbot_spec.initial == "unsync"
        copying = youbot_spec.states["copying"]
        assert copying.children == ["eight_DOF_mode", "five_DOF_mode"]
        assert copying.initial == "five_DOF_mode"
        assert copying.entry == ("enable_copying",)
        assert copying.exit == ("disable_copying",)
        assert youbot_spec.states["five_DOF_mode"].parent == "copying"
        assert len(youbot_spec.transitions) == 9

    def test_timers(self, toggle_spec):
        """Test after declarations."""
        (timer,) = toggle_spec.states["on"].timers
        assert timer.delay_ms == 100
        assert timer.events == ("e_auto_off",)

    def test_multiple_raises(self):
        """Test a raise list with several events."""
        spec = parse_ok(parse_statechart, "fsm m { initial a; state a { entry raise x, y.z, conf:w; } }")
        assert spec.states["a"].entry == ("x", "y.z", "conf:w")

    def test_change_in_raise_rejected(self):
        """Test raise lists cannot hold configuration changes."""
        result = errors("fsm m { initial a; state a { entry raise property_set; } }")
        assert result == ["entry raises property_set, a configuration change; raise lists may only name events"]

    def test_action_call_rejected(self):
        """Test raise lists cannot hold calls."""
        result = errors('fsm m { initial a; state a { exit raise port_write("c.p", 1); } }')
        assert len(result) == 1
        assert "raise lists may only name events" in result[0]
        result = errors("fsm m { initial a; state a { entry raise reset(); } }")
        assert result == ["entry raises reset(), an action call; raise lists may only name events"]

    def test_duplicate_state(self):
        """Test state ids are unique across the chart."""
        result = errors("fsm m { initial a; state a { initial b; state b { } } state b { } }")
        assert result == ["duplicate state id: b"]

    def test_missing_initial(self):
        """Test the chart and each composite state need an initial child."""
        assert errors("fsm m { state a { } }") == ["chart m declares no initial state"]
        assert errors("fsm m { initial a; state a { state b { } } }") == [
            "composite state a declares no initial state"
        ]

    def test_initial_must_be_child(self):
        """Test an initial declaration names a state of its own level."""
        result = errors("fsm m { initial b; state a { initial b; state b { } } }")
        assert result == ["initial state b is not a top-level state"]

    def test_unknown_transition_state(self):
        """Test transitions must reference declared states."""
        result = errors("fsm m { initial a; state a { } transition a -> nowhere on e; }")
        assert result == ["transition a -> nowhere on e references unknown state nowhere"]

    def test_entry_outside_state(self):
        """Test entry actions belong to states."""
        result = errors("fsm m { initial a; entry raise x; state a { } }")
        assert result == ["entry is only allowed inside a state"]

    def test_zero_delay_rejected(self):
        """Test timers need a positive delay."""
        result = errors("fsm m { initial a; state a { after 0 raise x; } }")
        assert result == ["after delay must be a positive number of milliseconds"]

    def test_syntax_error(self):
        """Test a missing semicolon is reported with its line."""
        spec, diagnostics = parse_statechart("fsm m {\n  initial a\n  state a { }\n}")
        assert spec is None
        assert diagnostics[0].line == 3

    def test_load_raises(self, write_file):
        """Test load_statechart raises with the file path."""
        path = write_file("bad.fsm", "fsm m { }")
        with pytest.raises(ModelFileError) as exc:
            load_statechart(path)
        assert exc.value.path == str(path)


class TestStatechart:
    """Tests for executing charts."""

    def test_init(self, youbot_spec):
        """Test the initial configuration raises nothing for the youBot chart."""
        chart, raised = fsm_init(youbot_spec)
        assert raised == []
        assert chart.active_path == "unsync"

    def test_init_raises_entries(self, toggle_spec):
        """Test init fires entry raises of the initial states."""
        _, raised = fsm_init(toggle_spec)
        assert names(raised) == ["lamp_off"]

    def test_enter_composite(self, youbot):
        """Test entering copying raises its entry before the initial child's entry."""
        raised = drive(youbot, "e_comm_ok", "e_ready", "e_aligned")
        assert raised == ["enable_copying", "five_DOF"]
        assert youbot.active_path == "copying/five_DOF_mode"

    def test_sibling_transition_stays_in_parent(self, youbot):
        """Test a transition between children does not exit the parent."""
        drive(youbot, "e_comm_ok", "e_ready", "e_aligned")
        assert drive(youbot, "e_toggle_dof") == ["eight_DOF"]
        assert youbot.active_path == "copying/eight_DOF_mode"
        assert drive(youbot, "e_toggle_dof") == ["five_DOF"]

    def test_leaving_composite_exits_inner_first(self, youbot):
        """Test leaving copying from a child runs the parent's exit."""
        drive(youbot, "e_comm_ok", "e_ready", "e_aligned")
        assert drive(youbot, "e_comm_lost") == ["disable_copying"]
        assert youbot.active_path == "unsync"

    def test_exit_before_entry(self, toggle_spec):
        """Test exit raises come before entry raises."""
        chart, _ = fsm_init(toggle_spec)
        drive(chart, "e_switch")
        assert drive(chart, "e_switch") == ["lamp_leaving", "lamp_off"]

    def test_unhandled_event(self, youbot):
        """Test an event with no transition changes nothing."""
        result = youbot.dispatch(Event("e_aligned"))
        assert not result.fired
        assert result.raised == []
        assert youbot.active_path == "unsync"

    def test_innermost_transition_wins(self):
        """Test a child's transition takes priority over its parent's."""
        spec = parse_ok(
            parse_statechart,
            """
            fsm m {
                initial p;
                state p { initial c; state c { } }
                state inner { }
                state outer { }
                transition c -> inner on e;
                transition p -> outer on e;
            }
            """,
        )
        chart, _ = fsm_init(spec)
        result = chart.dispatch(Event("e"))
        assert str(result.transition) == "c -> inner on e"
        assert chart.active_path == "inner"

    def test_self_transition_is_external(self):
        """Test a self-transition exits and re-enters its state."""
        spec = parse_ok(
            parse_statechart,
            "fsm m { initial a; state a { entry raise in; exit raise out; } transition a -> a on e; }",
        )
        chart, _ = fsm_init(spec)
        assert drive(chart, "e") == ["out", "in"]

    def test_timer_fires_once(self, toggle_spec):
        """Test a state timer raises its events when it expires."""
        chart, _ = fsm_init(toggle_spec)
        drive(chart, "e_switch")
        assert chart.next_deadline() == 100
        assert fsm_tick(chart, 60) == []
        assert chart.next_deadline() == 40
        assert names(fsm_tick(chart, 40)) == ["e_auto_off"]
        assert chart.next_deadline() is None
        assert fsm_tick(chart, 500) == []

    def test_timer_cancelled_on_exit(self, toggle_spec):
        """Test leaving a state disarms its timers."""
        chart, _ = fsm_init(toggle_spec)
        drive(chart, "e_switch", "e_switch")
        assert chart.next_deadline() is None
        assert fsm_tick(chart, 200) == []

    def test_timer_rearmed_on_reentry(self, toggle_spec):
        """Test each entry arms a fresh timer."""
        chart, _ = fsm_init(toggle_spec)
        drive(chart, "e_switch")
        fsm_tick(chart, 90)
        drive(chart, "e_switch", "e_switch")
        assert chart.next_deadline() == 100

    def test_not_initialized(self, youbot_spec):
        """Test stepping an uninitialized chart."""
        chart = Statechart(youbot_spec)
        with pytest.raises(RuntimeError):
            chart.step(Event("e_comm_ok"))
        with pytest.raises(RuntimeError):
            chart.tick(10)

    def test_negative_tick(self, youbot):
        """Test time cannot go backwards."""
        with pytest.raises(ValueError):
            youbot.tick(-1)

    def test_replay_is_deterministic(self, youbot_spec, youbot_registry):
        """Test the same event sequence gives the same raises and touches no component."""
        before = youbot_registry.take_snapshot()
        sequence = ["e_comm_ok", "e_ready", "e_aligned", "e_toggle_dof", "e_force_high", "e_aligned", "e_comm_lost"]
        runs = []
        for _ in range(2):
            chart, raised = fsm_init(youbot_spec)
            runs.append((names(raised) + drive(chart, *sequence), chart.active_path))
        assert runs[0] == runs[1]
        assert runs[0][0] == [
            "enable_copying",
            "five_DOF",
            "eight_DOF",
            "disable_copying",
            "enable_copying",
            "five_DOF",
            "disable_copying",
        ]
        assert youbot_registry.take_snapshot() == before


YOUBOT_EVENTS = ["e_comm_ok", "e_ready", "e_aligned", "e_toggle_dof", "e_force_high", "e_comm_lost", "e_unknown"]


class TestStatechartProperties:
    """Property tests over random event sequences."""

    spec = load_statechart(SCENARIOS_DIR / "youbot.fsm")
    configuration_ids = set(load_configurator_conf(SCENARIOS_DIR / "youbot.conf").configurations)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(YOUBOT_EVENTS), max_size=30))
    def test_only_configuration_ids_raised(self, sequence):
        """Test the chart only ever raises configuration ids and replays identically."""
        runs = []
        for _ in range(2):
            chart, raised = fsm_init(self.spec)
            runs.append((names(raised) + drive(chart, *sequence), chart.active_path))
        assert runs[0] == runs[1]
        assert set(runs[0][0]) <= self.configuration_ids

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(YOUBOT_EVENTS), max_size=30))
    def test_copying_entries_balanced(self, sequence):
        """Test enable and disable raises alternate, so ext_ref_mode tracks the copying state."""
        chart, _ = fsm_init(self.spec)
        raised = [n for n in drive(chart, *sequence) if n in ("enable_copying", "disable_copying")]
        assert raised == ["enable_copying", "disable_copying"] * (len(raised) // 2) + ["enable_copying"] * (len(raised) % 2)
        assert (len(raised) % 2 == 1) == chart.active_path.startswith("copying")

    @settings(max_examples=20, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_stepping_touches_no_component(self, rng):
        """Test a thousand steps without a configurator leave the registry unchanged."""
        registry = build_registry(load_system_model(SCENARIOS_DIR / "youbot.sys"))
        before = registry.take_snapshot()
        alphabet = YOUBOT_EVENTS + sorted(self.configuration_ids)
        chart, _ = fsm_init(self.spec)
        for _ in range(1000):
            fsm_step(chart, Event(rng.choice(alphabet)))
        assert registry.take_snapshot() == before
