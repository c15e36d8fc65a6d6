import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeseq.errors import ConfigurationError, DomainError
from spikeseq.neuron import NeuronParams
from spikeseq.patterns import generate_pattern
from spikeseq.reward import (RewardProfile, RewardTrainConfig, apply_spike_selection, binarize,
                             excitatory_regions, load_profiles, reward_kernel, save_profiles,
                             select_relative, train_reward_profiles)
from spikeseq.spikes import SpikeTrain

L1 = NeuronParams()


def _profiles(events, n=1, window=100, **kw):
    cfg = RewardTrainConfig(**kw)
    return train_reward_profiles(SpikeTrain.from_events(events, n, window), cfg), cfg


def test_kernel_shape():
    k = reward_kernel(np.array([5]), 12, 2)
    assert k[5] == 1.0
    assert k[4] == pytest.approx(2 / 3) and k[7] == pytest.approx(1 / 3)
    assert k[2] == -1.0 and k[8] == -1.0


def test_single_target_region_within_kernel_width():
    profiles, cfg = _profiles([(40, 0)], kernel_width=3)
    regions = excitatory_regions(profiles[0])
    assert len(regions) == 1
    lo, hi = regions[0]
    assert 37 <= lo <= 40 <= hi <= 43
    assert set(np.unique(profiles[0].weights)) == {cfg.w_exc, cfg.w_inh}


def test_silent_channel_is_fully_inhibitory():
    profiles, cfg = _profiles([(40, 0)], n=2)
    assert (profiles[1].weights == cfg.w_inh).all()


def test_two_targets_give_two_regions():
    profiles, _ = _profiles([(20, 0), (60, 0)])
    (a0, a1), (b0, b1) = excitatory_regions(profiles[0])
    assert a0 <= 20 <= a1 < b0 <= 60 <= b1


def test_empty_target_is_an_error():
    with pytest.raises(DomainError):
        train_reward_profiles(SpikeTrain.empty(2, 50), RewardTrainConfig())


def test_history_sees_normalized_profiles():
    seen = []
    train_reward_profiles(SpikeTrain.from_events([(10, 0)], 1, 50), RewardTrainConfig(epochs=15),
                          history=lambda e, ws: seen.append(ws[0]))
    assert len(seen) <= 15
    assert all(np.abs(w).max() <= 1.0 + 1e-12 for w in seen)


def test_default_levels_have_margin():
    cfg = RewardTrainConfig()
    assert cfg.w_exc + cfg.input_weight >= 1.2 * L1.v_threshold - 1e-12
    assert cfg.w_inh + cfg.input_weight < 0.8 * L1.v_threshold
    assert cfg.w_exc < L1.v_threshold  # reward alone never fires


def test_expected_spike_passes_one_step_later():
    profiles, cfg = _profiles([(40, 0)])
    out = select_relative(SpikeTrain.from_events([(40, 0)], 1, 100), profiles, L1, cfg)
    assert out.events == [(41, 0)]


def test_spike_far_from_region_is_rejected():
    profiles, cfg = _profiles([(40, 0)])
    out = select_relative(SpikeTrain.from_events([(54, 0), (26, 0)], 1, 100), profiles, L1, cfg)
    assert len(out) == 0


def test_apply_spike_selection_absolute_times():
    profiles, cfg = _profiles([(0, 0), (40, 0)])
    stream = SpikeTrain.from_events([(500, 0), (540, 0), (560, 0)], 1, 700)
    out = apply_spike_selection(stream, profiles, 500, L1, cfg)
    assert out.times.tolist() == [501, 541]
    assert out.duration == 701
    assert len(apply_spike_selection(stream, profiles, 700, L1, cfg)) == 0
    assert len(apply_spike_selection(SpikeTrain.empty(1, 700), profiles, 10, L1, cfg)) == 0


def test_profile_count_must_match_channels():
    profiles, cfg = _profiles([(40, 0)])
    with pytest.raises(ConfigurationError):
        select_relative(SpikeTrain.empty(2, 100), profiles, L1, cfg)


def test_profile_file_roundtrip(tmp_path):
    profiles, _ = _profiles([(10, 0), (30, 1)], n=2, window=50)
    save_profiles(profiles, tmp_path / "p.txt")
    back = load_profiles(tmp_path / "p.txt")
    assert [p.channel for p in back] == [0, 1]
    for a, b in zip(profiles, back):
        assert np.array_equal(a.weights, b.weights)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_targets_always_accepted(seed):
    target = generate_pattern(4, 100, (1, 3), seed)
    cfg = RewardTrainConfig()
    out = select_relative(target, train_reward_profiles(target, cfg), L1, cfg)
    assert out == target.shift(1, duration=101)


@given(st.integers(0, 10_000), st.integers(-30, 30))
@settings(max_examples=60, deadline=None)
def test_displaced_spikes_rejected(seed, offset):
    cfg = RewardTrainConfig()
    target = generate_pattern(1, 100, (1, 3), seed)
    profiles = train_reward_profiles(target, cfg)
    t = int(target.times[0]) + offset
    far = np.min(np.abs(target.times - t)) > cfg.kernel_width
    if not 0 <= t < 100 or not far:
        return
    out = select_relative(SpikeTrain.from_events([(t, 0)], 1, 100), profiles, L1, cfg)
    assert len(out) == 0


@given(st.lists(st.floats(-1, 1), min_size=5, max_size=40), st.floats(0.01, 0.9), st.floats(0.01, 0.9))
@settings(max_examples=100, deadline=None)
def test_raising_threshold_never_enlarges_region(ws, a, b):
    w = np.array(ws)
    lo, hi = sorted((a, b))
    if np.abs(w).max() == 0:
        return
    low = binarize(w, RewardTrainConfig(threshold_frac=lo)) > 0
    high = binarize(w, RewardTrainConfig(threshold_frac=hi)) > 0
    assert not (high & ~low).any()


def test_drive_outside_profile_uses_default():
    p = RewardProfile(0, np.array([0.5, -1.0]))
    assert p.drive_at(np.array([-1, 0, 1, 2]), -3.0).tolist() == [-3.0, 0.5, -1.0, -3.0]
