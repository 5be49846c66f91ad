"""
Testes do histórico de aprendizado, da filtragem e da coleta por fluxo.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.history.egos import RandomEgo
from app.core.history.filtering import filter_streams, quality_score, rank_streams, window_size
from app.core.history.history import LearningHistory
from app.core.history.relabel import relabel_expert
from app.core.history.rollout import AnnealSchedule, CollectorConfig, rollout_stream
from app.core.teammates.params import Family
from app.core.teammates.policy import make_policy

SMALL = CollectorConfig(num_streams=1, recorded_steps_per_episode=10, episodes_per_stream=4, save_interval=2)


class TestLearningHistory:
    """Testes da estrutura LearningHistory."""

    def test_episode_returns(self):
        history = LearningHistory(
            obs=np.zeros((4, 5, 5, 2)),
            actions=[0, 1, 2, 3],
            rewards=[1.0, 2.0, 3.0, 4.0],
            dones=[0, 1, 0, 1],
        )
        np.testing.assert_allclose(history.episode_returns(), [3.0, 7.0])

    def test_no_episode_boundary(self, history_factory):
        history = history_factory(0)
        assert history.episode_returns().shape == (0,)

    def test_dtypes_are_canonical(self, history_factory):
        history = history_factory(12)
        assert history.obs.dtype == np.float32
        assert history.actions.dtype == np.int32
        assert history.dones.dtype == np.uint8

    def test_action_out_of_range(self):
        with pytest.raises(ValueError):
            LearningHistory(np.zeros((2, 5, 5, 2)), [0, 6], [0.0, 0.0], [0, 1])

    def test_field_length_mismatch(self):
        with pytest.raises(ValueError):
            LearningHistory(np.zeros((2, 5, 5, 2)), [0, 1], [0.0], [0, 1])

    def test_obs_rank_checked(self):
        with pytest.raises(ValueError):
            LearningHistory(np.zeros((2, 5, 5)), [0, 1], [0.0, 0.0], [0, 1])

    def test_slice_and_concat(self, history_factory):
        history = history_factory(30, with_expert=True)
        joined = LearningHistory.concat([history.slice(0, 12), history.slice(12, 30)])
        assert joined.equals(history)

    def test_concat_empty_raises(self):
        with pytest.raises(ValueError):
            LearningHistory.concat([])


class TestQualityScore:
    """Testes da pontuação de qualidade."""

    @pytest.mark.parametrize("n, expected", [(1, 1), (3, 3), (20, 5), (100, 10), (146, 14), (1000, 100)])
    def test_window_size(self, n, expected):
        assert window_size(n) == expected

    def test_linear_returns(self):
        assert quality_score(list(range(1, 21))) == pytest.approx(33.0)

    def test_constant_returns(self):
        assert quality_score([4.0] * 50) == pytest.approx(4.0)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            quality_score([])

    def test_rank_ties_by_index(self):
        assert rank_streams([1.0, 3.0, 3.0, 0.0]) == [1, 2, 0, 3]


class TestFilterStreams:
    """Testes da filtragem top-k."""

    def test_keeps_eighth_of_streams(self):
        rng = np.random.default_rng(0)
        streams = [(i, rng.normal(size=146)) for i in range(1024)]
        kept = filter_streams(streams, 128)
        assert len(kept) / len(streams) == 0.125
        scores = [quality_score(streams[i][1]) for i, _ in kept]
        assert scores == sorted(scores, reverse=True)
        worst_kept = min(scores)
        dropped = set(range(1024)) - {i for i, _ in kept}
        assert all(quality_score(streams[i][1]) <= worst_kept for i in dropped)

    def test_returns_original_objects(self):
        streams = [("a", [0.0] * 5), ("b", [10.0] * 5), ("c", [5.0] * 5)]
        assert filter_streams(streams, 2) == [(1, "b"), (2, "c")]

    def test_equal_scores_keep_lowest_indices(self):
        streams = [(i, [1.0] * 10) for i in range(8)]
        assert [i for i, _ in filter_streams(streams, 3)] == [0, 1, 2]

    @pytest.mark.parametrize("k", [0, -1, 5])
    def test_invalid_k(self, k):
        streams = [(i, [0.0]) for i in range(4)]
        with pytest.raises(ValueError):
            filter_streams(streams, k)


class TestCollectorConfig:
    """Testes da configuração de coleta."""

    def test_full_scale_history_length(self):
        assert CollectorConfig().history_length == 14_600

    def test_unknown_ego_rejected(self):
        with pytest.raises(ValidationError):
            CollectorConfig(ego="oracle")

    def test_anneal_schedule(self):
        schedule = AnnealSchedule(n_episodes=5)
        assert schedule.epsilon(0) == 1.0
        assert schedule.epsilon(2) == pytest.approx(0.5)
        assert schedule.epsilon(4) == 0.0
        assert AnnealSchedule(n_episodes=5, constant=0.3).epsilon(4) == 0.3


class TestRolloutStream:
    """Testes da coleta de um fluxo."""

    def collect(self, layout, spec, episodes=None, cfg=SMALL, seed=11, stream_index=2):
        teammate = make_policy(spec, layout)
        ego = RandomEgo(seed, ("stream", stream_index))
        return rollout_stream(layout, teammate, ego, cfg, seed, stream_index, episodes=episodes)

    def test_shape_and_boundaries(self, coord_simple, specs_by_family):
        history, records = self.collect(coord_simple, specs_by_family[Family.H4])
        assert history.length == SMALL.history_length == 40
        assert history.obs_shape == (5, 5, coord_simple.channels)
        assert np.flatnonzero(history.dones).tolist() == [9, 19, 29, 39]
        assert history.teammate_actions is not None
        assert [r.episode for r in records] == [0, 1, 2, 3]
        np.testing.assert_allclose(history.episode_returns(), [r.sparse_return for r in records])

    def test_deterministic(self, coord_simple, specs_by_family):
        a, ra = self.collect(coord_simple, specs_by_family[Family.H2])
        b, rb = self.collect(coord_simple, specs_by_family[Family.H2])
        assert a.equals(b)
        assert ra == rb

    def test_episode_blocks_concatenate(self, coord_simple, specs_by_family):
        spec = specs_by_family[Family.H1]
        full, _ = self.collect(coord_simple, spec)
        first, _ = self.collect(coord_simple, spec, episodes=range(0, 2))
        second, _ = self.collect(coord_simple, spec, episodes=range(2, 4))
        assert LearningHistory.concat([first, second]).equals(full)

    def test_streams_differ(self, coord_simple, specs_by_family):
        a, _ = self.collect(coord_simple, specs_by_family[Family.H3], stream_index=0)
        b, _ = self.collect(coord_simple, specs_by_family[Family.H3], stream_index=1)
        assert not np.array_equal(a.actions, b.actions)

    def test_recorded_prefix_longer_than_episode(self, coord_simple, specs_by_family):
        cfg = CollectorConfig(recorded_steps_per_episode=coord_simple.episode_length + 1)
        with pytest.raises(ValueError):
            self.collect(coord_simple, specs_by_family[Family.H4], cfg=cfg)


class TestRelabel:
    """Testes da rotulagem com o especialista."""

    def test_fills_expert_only(self, coord_simple, specs_by_family):
        teammate = make_policy(specs_by_family[Family.H4], coord_simple)
        history, _ = rollout_stream(coord_simple, teammate, RandomEgo(0), SMALL, 0, 0)
        labelled = relabel_expert(history, None, coord_simple)
        assert labelled.expert_actions.shape == (history.length,)
        assert labelled.expert_actions.min() >= 0 and labelled.expert_actions.max() <= 5
        np.testing.assert_array_equal(labelled.actions, history.actions)
        np.testing.assert_array_equal(labelled.obs, history.obs)

    def test_custom_expert(self, coord_simple, history_factory):
        history = history_factory(6, channels=coord_simple.channels)
        labelled = relabel_expert(history, lambda obs: 4, coord_simple)
        assert labelled.expert_actions.tolist() == [4] * 6

    def test_shape_mismatch(self, coord_simple, history_factory):
        with pytest.raises(ValueError):
            relabel_expert(history_factory(6, channels=7), lambda obs: 0, coord_simple)
