import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeseq.errors import ConfigurationError, TrainingError
from spikeseq.istdp import (ISTDPParams, SynapseWeights, first_spike_times, istdp_update,
                            run_layer2, train_layer2)
from spikeseq.neuron import NeuronParams
from spikeseq.spikes import SpikeTrain

L2 = NeuronParams(du=0.0, dv=0.0)
UNIT = ISTDPParams(tau=20.0, lam=1.0, t_stop=50, horizon=100)


def test_update_never_fired():
    assert istdp_update(0.0, 10, 0, UNIT) == pytest.approx(0.39346934028736658, rel=1e-9)


def test_update_early():
    assert istdp_update(1.0, 10, 30, UNIT) == pytest.approx(0.63212055882855768, rel=1e-9)


def test_update_late():
    assert istdp_update(1.0, 10, 60, UNIT) == pytest.approx(1.3934693402873666, rel=1e-9)


@given(st.floats(-5, 5), st.integers(0, 49))
def test_fixed_point_at_t_stop(g, t_pre):
    assert istdp_update(g, t_pre, UNIT.t_stop, UNIT) == g


@given(st.floats(-5, 5), st.integers(0, 48), st.integers(1, 99))
def test_directionality(g, t_pre, t_post):
    new = istdp_update(g, t_pre, t_post, UNIT)
    if t_post < UNIT.t_stop and t_pre < t_post:
        assert new < g
    elif t_post > UNIT.t_stop:
        assert new > g


@given(st.floats(-5, 5), st.integers(1, 99))
def test_never_fired_potentiates(g, t_pre):
    assert istdp_update(g, t_pre, 0, UNIT) > g


def test_params_validation():
    with pytest.raises(ConfigurationError):
        ISTDPParams(t_stop=500, horizon=450)
    with pytest.raises(ConfigurationError):
        ISTDPParams(tau=0.0)


def _unaided(p):
    empty = SpikeTrain.empty(1, 100)
    return run_layer2(empty, SynapseWeights.from_filtered(empty, 0.0), p, L2, p.horizon)


def test_slow_drive_alone_crosses_at_inverse_rate():
    # v(t) = (t + 1) * slow_drive, exact in binary for 1/256
    assert _unaided(ISTDPParams(slow_drive=1 / 256)).times.tolist() == [255]


def test_default_slow_drive_fires_after_the_window():
    from spikeseq.window import WindowConfig
    assert _unaided(ISTDPParams()).first_time() > WindowConfig().wait_time


def test_self_inhibition_allows_one_spike():
    p = ISTDPParams()
    f = SpikeTrain.from_events([(10, 0)], 1, 100)
    w = SynapseWeights.from_filtered(f, 0.05)
    out = run_layer2(f, w, p, L2, p.horizon)
    assert len(out) == 1


def _trajectory(filtered, params=ISTDPParams(), init=None):
    seen = []
    w = train_layer2(filtered, params, L2, init=init, history=lambda e, tp, ws: seen.append(tp.copy()))
    return w, seen


@pytest.mark.parametrize("init", [1e-5, 3e-4, 2e-3])
def test_single_spike_converges(init):
    f = SpikeTrain.from_events([(31, 0)], 1, 101)
    p = ISTDPParams(init_weight=init)
    w, seen = _trajectory(f, p)
    final = first_spike_times(run_layer2(f, w, p, L2, p.horizon))[0]
    assert abs(final - p.t_stop) <= p.convergence_tol
    assert len(seen) <= p.max_epochs
    err = [abs(int(tp[0]) - p.t_stop) for tp in seen]
    # once the error first grows (overshoot) it must not grow again
    first = next((k for k in range(1, len(err)) if err[k] > err[k - 1]), len(err))
    assert all(err[k] <= err[k - 1] or err[k] <= p.convergence_tol for k in range(first + 1, len(err)))


def test_earlier_spike_gets_no_more_weight():
    f = SpikeTrain.from_events([(10, 0), (40, 0)], 1, 101)
    w, _ = _trajectory(f)
    g10, g40 = w.weights[0]
    assert g10 <= g40


def test_silent_channel_keeps_initial_weight():
    f = SpikeTrain.from_events([(10, 0)], 2, 101)
    w, _ = _trajectory(f)
    assert w.weights[1].size == 0
    assert w.trained_channels() == [0]


def test_coincidence_after_training():
    f = SpikeTrain.from_events([(3, 0), (20, 1), (25, 1), (70, 2), (90, 3)], 4, 101)
    p = ISTDPParams()
    w, _ = _trajectory(f)
    t_post = first_spike_times(run_layer2(f, w, p, L2, p.horizon))
    assert t_post.max() - t_post.min() <= 2 * p.convergence_tol
    assert np.all(np.abs(t_post - p.t_stop) <= p.convergence_tol)


def test_removing_a_spike_delays_the_output():
    f = SpikeTrain.from_events([(10, 0), (40, 0), (60, 0)], 1, 101)
    p = ISTDPParams()
    w, _ = _trajectory(f)
    base = first_spike_times(run_layer2(f, w, p, L2, 200))[0]
    for k in range(len(f)):
        keep = np.arange(len(f)) != k
        ablated = SpikeTrain(f.times[keep], f.channels[keep], 1, f.duration)
        t = first_spike_times(run_layer2(ablated, w, p, L2, 200))[0]
        assert t == 0 or t > base


def test_budget_exhaustion_raises_with_residuals():
    f = SpikeTrain.from_events([(10, 0)], 1, 101)
    with pytest.raises(TrainingError) as err:
        train_layer2(f, ISTDPParams(max_epochs=2), L2)
    assert err.value.layer == "layer2"
    assert err.value.residuals[0] > 2


def test_weights_roundtrip(tmp_path):
    f = SpikeTrain.from_events([(10, 0), (40, 0), (5, 2)], 3, 101)
    w, _ = _trajectory(f)
    w.save(tmp_path / "w.csv")
    back = SynapseWeights.load(tmp_path / "w.csv", f)
    for a, b in zip(w.weights, back.weights):
        assert np.array_equal(a, b)
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "channel,slot,weight"


def test_slot_lookup_prefers_earlier_on_tie():
    w = SynapseWeights(1, [np.array([10, 20])], [np.array([1.0, 2.0])])
    assert w.slot_of(0, 15) == 0
    assert w.slot_of(0, 16) == 1


def test_alternate_sign_reading_is_unbounded():
    # with the minus sign restored the never-fired branch gives 1 - e^{+t_pre/tau},
    # i.e. depression that grows with t_pre; the literal reading potentiates instead
    t_pre = 30
    literal = istdp_update(0.0, t_pre, 0, UNIT)
    alternate = UNIT.lam * (1 - math.exp(t_pre / UNIT.tau))
    assert literal > 0 > alternate
