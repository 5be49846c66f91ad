"""
Testes de aceitação em escala de bancada.

Não rodam por padrão (ver pytest.ini); use `pytest -m e2e`.
"""

from collections import deque

import numpy as np
import pytest

from app.core.evaluation.buffers import EpisodeContextBuffer, StepContextBuffer
from app.core.evaluation.manifest import build_collect_manifest, build_track_manifest
from app.core.history.egos import AnnealedExpertEgo
from app.core.history.rollout import AnnealSchedule, CollectorConfig, rollout_stream
from app.core.kitchen.layout import load_layout
from app.core.teammates.params import Family
from app.core.teammates.policy import make_policy
from app.core.teammates.sampling import canonical_spec_string, sample_params, sample_population
from app.services import CollectionService, DatasetService, EvaluationService
from app.services.dataset_service import INDEX_FILE, STORE_FILE

pytestmark = [pytest.mark.e2e, pytest.mark.slow]


class TestCooperability:
    """Ego aleatório contra cada família no coord_simple."""

    def test_family_ordering(self, tmp_path):
        specs = sample_population(list(Family), "test", 5)
        entries = build_track_manifest("teammate", specs, seed=0, layouts=["coord_simple"])
        report = EvaluationService(tmp_path).evaluate(
            entries, ego="random", episodes=100, instances=5, episode_len=100
        )
        means = {g.teammate_family: g.mean for g in report.groups}
        assert means["H4"] > means["H3"] > max(means["H1"], means["H2"])
        assert means["H4"] >= 20


class TestAnnealedExpert:
    """Históricos do ego recozido melhoram ao longo do fluxo."""

    def test_returns_improve(self):
        layout = load_layout("coord_simple")
        spec = sample_params(Family.H4, "train", canonical_spec_string(Family.H4, "train", "aht", 0))
        cfg = CollectorConfig(num_streams=20, episodes_per_stream=40, recorded_steps_per_episode=100,
                              save_interval=40)
        schedule = AnnealSchedule(n_episodes=cfg.episodes_per_stream)
        improved = 0
        for s in range(cfg.num_streams):
            ego = AnnealedExpertEgo(layout, 11, schedule, stream=("stream", s))
            _, records = rollout_stream(layout, make_policy(spec, layout), ego, cfg, 11, s)
            returns = np.array([r.sparse_return for r in records])
            if returns[-10:].mean() - returns[:10].mean() >= 10:
                improved += 1
        assert improved >= 0.9 * cfg.num_streams


class TestPipelineDeterminism:
    """Duas execuções completas com as mesmas seeds geram os mesmos bytes."""

    CFG = CollectorConfig(num_streams=4, episodes_per_stream=6, recorded_steps_per_episode=50,
                          save_interval=3)

    def run_pipeline(self, out):
        specs = sample_population(list(Family), "train", 1)
        tasks = build_collect_manifest(specs, ["coord_simple", "coord_ring"], seed=21)
        summary = CollectionService(out, self.CFG).run(tasks)
        assert summary.ok
        service = DatasetService(out, chunk_length=64)
        service.build(filter_k=2)
        return service.store_dir / INDEX_FILE, service.store_dir / STORE_FILE

    def test_byte_identical(self, tmp_path):
        first = self.run_pipeline(tmp_path / "a")
        second = self.run_pipeline(tmp_path / "b")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()


class TestBufferOracles:
    """Buffers contra listas ingênuas em longas sequências aleatórias."""

    @pytest.mark.parametrize("capacity", [250, 500, 2000])
    def test_step_buffer(self, capacity):
        rng = np.random.default_rng(capacity)
        buffer = StepContextBuffer(capacity, (1,), with_teammate=True)
        oracle = deque(maxlen=capacity)
        for t in range(1_000_000):
            item = (float(t), int(rng.integers(6)), float(rng.integers(-5, 21)), int(rng.integers(6)))
            buffer.push_step(np.array([item[0]]), item[1], item[2], item[3])
            oracle.append(item)
            if t % 99_991 == 0:
                self.check_step(buffer, oracle)
        self.check_step(buffer, oracle)

    @staticmethod
    def check_step(buffer, oracle):
        snap = buffer.snapshot()
        assert len(buffer) == len(oracle)
        assert snap["obs"][:, 0].tolist() == [o[0] for o in oracle]
        assert snap["prev_action"].tolist() == [o[1] for o in oracle]
        assert snap["prev_reward"].tolist() == [o[2] for o in oracle]
        assert snap["prev_teammate_action"].tolist() == [o[3] for o in oracle]

    @pytest.mark.parametrize("capacity", [250, 500, 2000])
    def test_episode_buffer(self, capacity):
        rng = np.random.default_rng(capacity)
        buffer = EpisodeContextBuffer(capacity, (1,))
        committed, pending = deque(maxlen=capacity), []
        for t in range(1_000_000):
            action = int(rng.integers(6))
            buffer.add_transition(np.array([t]), action, np.array([t + 1]), float(t % 3))
            pending.append((float(t), action))
            if rng.random() < 0.01:
                buffer.commit_episode()
                committed.extend(pending)
                pending = []
                snap = buffer.snapshot()
                assert snap["obs"][:, 0].tolist() == [c[0] for c in committed]
                assert snap["action"].tolist() == [c[1] for c in committed]
        assert buffer.pending == len(pending)
