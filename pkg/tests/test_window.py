import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeseq.errors import ConfigurationError
from spikeseq.window import WindowConfig, WindowSpan, WindowState, run_window, step_window, \
    write_window_events


def _input(steps, at):
    x = np.zeros(steps, bool)
    x[list(at)] = True
    return x


@pytest.mark.parametrize("r", [1, 2, 5, 7])
def test_resting_rate_and_inverse(r):
    run = run_window(np.zeros(60, bool), WindowConfig(resting_period=r))
    assert np.flatnonzero(run.start).tolist() == list(range(r, 60, r))
    assert np.array_equal(run.inverse, ~run.start)
    assert run.spans == []


def test_input_opens_and_stop_closes_after_wait_time():
    run = run_window(_input(400, [100]), WindowConfig(wait_time=200))
    assert run.spans == [WindowSpan(100, 300)]
    assert run.events == [("open", 100), ("close", 300), ("reset", 301)]
    assert not run.start[100:301].any()
    # resting rate resumes after the reset spike
    assert run.start[301:].all()


def test_extra_inputs_do_not_extend_the_window():
    run = run_window(_input(400, [100, 101, 150, 250, 299]), WindowConfig())
    assert run.spans == [WindowSpan(100, 300)]


def test_back_to_back_windows():
    run = run_window(_input(800, [100, 305]), WindowConfig())
    assert run.spans == [WindowSpan(100, 300), WindowSpan(305, 505)]


def test_unfinished_window_is_closed_at_end():
    run = run_window(_input(150, [100]), WindowConfig())
    assert run.spans == [WindowSpan(100, 150)]


def test_longer_resting_period_quantizes_close():
    run = run_window(_input(400, [100]), WindowConfig(resting_period=7))
    # the stop neuron counts from the last resting spike (98)
    assert run.spans[0].close == 299


def test_step_window_state_fields():
    cfg = WindowConfig()
    state, s, i = step_window(WindowState(), cfg, True, 0)
    assert state.active and state.origin == 0 and not s and i


def test_config_validation():
    with pytest.raises(ConfigurationError):
        WindowConfig(wait_time=50, window_len=100)
    with pytest.raises(ConfigurationError):
        WindowConfig(resting_period=0)


def test_events_csv(tmp_path):
    write_window_events([("open", 3), ("close", 203)], tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text() == "event,timestep\nopen,3\nclose,203\n"


def test_window_opened_at_step_zero_runs_one_step_longer():
    # no resting spike precedes step 0, so the stop neuron counts one extra step
    run = run_window(_input(400, [0]), WindowConfig())
    assert run.spans == [WindowSpan(0, 201)]


@given(st.integers(1, 300), st.integers(1, 4), st.integers(10, 60))
@settings(max_examples=60, deadline=None)
def test_window_lasts_wait_time_from_any_origin(t0, r, extra):
    cfg = WindowConfig(resting_period=r, wait_time=60 + extra, window_len=60)
    run = run_window(_input(t0 + 3 * cfg.wait_time, [t0]), cfg)
    span = run.spans[0]
    assert span.origin == t0
    # close lands on the resting grid: at most r - 1 steps early
    assert cfg.wait_time - (r - 1) <= span.length <= cfg.wait_time
