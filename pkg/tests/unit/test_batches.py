"""
Testes dos amostradores de lotes AD e DPT.
"""

import numpy as np
import pytest

from app.core.dataset.batches import (
    BatchPrefetcher,
    context_candidates,
    sample_ad_batch,
    sample_dpt_batch,
)
from app.core.dataset.store import DatasetStore
from app.core.exceptions import StoreError

class TestADBatch:
    """Testes do lote de janelas consecutivas."""

    def test_shapes(self, filled_store):
        store, _ = filled_store
        batch = sample_ad_batch(store, 6, 20, np.random.default_rng(0), with_teammate=True)
        assert batch.obs.shape == (6, 20, 5, 5, 8)
        for name in ("prev_actions", "prev_rewards", "target_actions", "dones", "attention_mask"):
            assert getattr(batch, name).shape == (6, 20)
        assert batch.prev_teammate_actions.shape == (6, 20)

    def test_rows_match_source(self, filled_store):
        store, histories = filled_store
        batch = sample_ad_batch(store, 32, 24, np.random.default_rng(1), with_teammate=True)
        for b in range(32):
            source = histories[int(batch.history_ids[b])]
            start = int(batch.starts[b])
            n = min(24, source.length - start)
            np.testing.assert_array_equal(batch.obs[b, :n], source.obs[start:start + n])
            np.testing.assert_array_equal(batch.target_actions[b, :n], source.actions[start:start + n])
            np.testing.assert_array_equal(batch.dones[b, :n], source.dones[start:start + n])
            assert batch.attention_mask[b].tolist() == [1] * n + [0] * (24 - n)
            assert not batch.obs[b, n:].any()

            expected_prev = np.concatenate([
                [source.actions[start - 1] if start > 0 else 0],
                source.actions[start:start + n - 1],
            ])
            np.testing.assert_array_equal(batch.prev_actions[b, :n], expected_prev)
            expected_reward = source.rewards[start - 1] if start > 0 else 0.0
            assert batch.prev_rewards[b, 0] == expected_reward
            expected_mate = source.teammate_actions[start - 1] if start > 0 else 0
            assert batch.prev_teammate_actions[b, 0] == expected_mate

    def test_same_rng_same_batch(self, filled_store):
        store, _ = filled_store
        a = sample_ad_batch(store, 4, 10, np.random.default_rng(5))
        b = sample_ad_batch(store, 4, 10, np.random.default_rng(5))
        np.testing.assert_array_equal(a.obs, b.obs)
        np.testing.assert_array_equal(a.starts, b.starts)
        assert a.prev_teammate_actions is None

    def test_history_filter(self, filled_store):
        store, _ = filled_store
        batch = sample_ad_batch(store, 10, 5, np.random.default_rng(2), history_ids=[2])
        assert set(batch.history_ids.tolist()) == {2}

    def test_empty_store(self, tmp_path):
        with pytest.raises(StoreError):
            sample_ad_batch(DatasetStore(tmp_path / "empty"), 2, 4, np.random.default_rng(0))

    def test_unknown_layout(self, filled_store):
        store, _ = filled_store
        with pytest.raises(StoreError):
            sample_ad_batch(store, 2, 4, np.random.default_rng(0), layout="cramped_up")

    def test_teammate_required(self, tmp_path, history_factory, entry_factory):
        history = history_factory(20, with_teammate=False)
        with DatasetStore(tmp_path / "s", chunk_length=8) as store:
            store.write_history(entry_factory(0, history), history)
            with pytest.raises(StoreError):
                sample_ad_batch(store, 2, 4, np.random.default_rng(0), with_teammate=True)

    def test_heterogeneous_shapes_need_layout(self, tmp_path, history_factory, entry_factory):
        small = history_factory(20, channels=8)
        large = history_factory(20, channels=9)
        with DatasetStore(tmp_path / "s", chunk_length=8) as store:
            store.write_history(entry_factory(0, small, layout="a"), small)
            store.write_history(entry_factory(1, large, layout="b"), large)
            with pytest.raises(StoreError):
                sample_ad_batch(store, 2, 4, np.random.default_rng(0))
            batch = sample_ad_batch(store, 2, 4, np.random.default_rng(0), layout="b")
            assert batch.obs.shape[-1] == 9

class TestDPTBatch:
    """Testes do lote consulta + contexto."""

    def test_context_candidates(self):
        assert context_candidates(np.array([0, 1, 0, 0, 1])).tolist() == [0, 2, 3]
        assert context_candidates(np.array([0])).tolist() == []

    def test_rows_match_source(self, filled_store):
        store, histories = filled_store
        K = 12
        batch = sample_dpt_batch(store, 16, K, np.random.default_rng(3), with_teammate=True)
        assert batch.context_obs.shape == (16, K, 5, 5, 8)
        for b in range(16):
            source = histories[int(batch.history_ids[b])]
            t = int(batch.query_steps[b])
            steps = batch.context_steps[b]
            assert len(set(steps.tolist())) == K
            assert set(steps.tolist()) <= set(context_candidates(source.dones).tolist())
            assert batch.query_target[b] == source.expert_actions[t]
            np.testing.assert_array_equal(batch.query_obs[b], source.obs[t])
            np.testing.assert_array_equal(batch.context_obs[b], source.obs[steps])
            np.testing.assert_array_equal(batch.context_next_obs[b], source.obs[steps + 1])
            np.testing.assert_array_equal(batch.context_actions[b], source.actions[steps])
            np.testing.assert_array_equal(batch.context_teammate_actions[b], source.teammate_actions[steps])

    def test_context_larger_than_history(self, filled_store):
        store, _ = filled_store
        with pytest.raises(StoreError):
            sample_dpt_batch(store, 1, 60, np.random.default_rng(0))

    def test_expert_required(self, tmp_path, history_factory, entry_factory):
        history = history_factory(20)
        with DatasetStore(tmp_path / "s", chunk_length=8) as store:
            store.write_history(entry_factory(0, history), history)
            with pytest.raises(StoreError):
                sample_dpt_batch(store, 1, 2, np.random.default_rng(0))

    def test_zero_context(self, filled_store):
        store, _ = filled_store
        batch = sample_dpt_batch(store, 3, 0, np.random.default_rng(0))
        assert batch.context_obs.shape == (3, 0, 5, 5, 8)

    def test_reads_only_touched_chunks(self, filled_store):
        store, histories = filled_store

        def touched(rows):
            return len(np.unique(np.asarray(rows) // 16))

        with DatasetStore(store.root, cache_bytes=0) as fresh:
            batch = sample_dpt_batch(fresh, 4, 3, np.random.default_rng(5))
            # dones lido uma vez por histórico; por linha: obs e expert da consulta,
            # obs, actions e rewards do contexto e obs do passo seguinte
            expected = sum(touched(np.arange(histories[h].length)) for h in set(batch.history_ids.tolist()))
            for b in range(4):
                steps = batch.context_steps[b]
                expected += 2 + 3 * touched(steps) + touched(steps + 1)
            assert fresh.metrics.decompressions == expected
            for b in range(4):
                source = histories[int(batch.history_ids[b])]
                np.testing.assert_array_equal(batch.context_obs[b], source.obs[batch.context_steps[b]])
                np.testing.assert_array_equal(batch.context_next_obs[b], source.obs[batch.context_steps[b] + 1])

class TestBatchPrefetcher:
    """Testes da produção em segundo plano."""

    def test_same_order_as_direct_calls(self, filled_store):
        store, _ = filled_store
        direct_rng = np.random.default_rng(9)
        direct = [sample_ad_batch(store, 2, 8, direct_rng).starts for _ in range(6)]

        rng = np.random.default_rng(9)
        with BatchPrefetcher(lambda: sample_ad_batch(store, 2, 8, rng), num_batches=6, depth=2) as prefetcher:
            produced = [batch.starts for batch in prefetcher]
        assert len(produced) == 6
        for a, b in zip(direct, produced):
            np.testing.assert_array_equal(a, b)

    def test_error_is_raised_to_consumer(self):
        def broken():
            raise StoreError("falha")

        with BatchPrefetcher(broken, num_batches=3) as prefetcher:
            with pytest.raises(StoreError):
                list(prefetcher)

    def test_invalid_depth(self):
        with pytest.raises(ValueError):
            BatchPrefetcher(lambda: None, num_batches=1, depth=0)
