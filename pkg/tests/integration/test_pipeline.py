"""
Testes de integração: coleta → armazenamento → lotes, e avaliação online.
"""

import gc
import subprocess
import sys
import tracemalloc
import zipfile

import numpy as np
import pandas as pd
import pytest

import app.tasks.collect_task as collect_module
from app.core.dataset.batches import sample_ad_batch, sample_dpt_batch
from app.core.evaluation.manifest import build_collect_manifest, build_track_manifest
from app.core.evaluation.protocol import PolicyServer, constant_policy_handler
from app.core.exceptions import StoreError
from app.core.history.rollout import CollectorConfig
from app.core.kitchen.types import Action
from app.core.teammates.params import Family
from app.core.teammates.sampling import sample_population
from app.repositories.artifact_repository import COMPLETION_FILES, ArtifactRepository
from app.schemas.manifest import CollectTask
from app.services import CollectionService, DatasetService, EvaluationService
from app.tasks.collect_task import COMPLETED, FAILED, LOCKED, SKIPPED, collect_task, run_task_with_retries

pytestmark = pytest.mark.integration

TINY = CollectorConfig(
    num_streams=2,
    recorded_steps_per_episode=10,
    episodes_per_stream=4,
    save_interval=2,
    ego="random",
)


@pytest.fixture
def collect_tasks():
    specs = sample_population([Family.H2, Family.H4], "train", 1)
    return build_collect_manifest(specs, ["coord_simple"], seed=4)


@pytest.fixture
def collected(tmp_path, collect_tasks):
    out = tmp_path / "run"
    summary = CollectionService(out, TINY).run(collect_tasks)
    assert [r.status for r in summary.results] == [COMPLETED, COMPLETED]
    return out


def artifact_bytes(out, task_id):
    base = ArtifactRepository(out).task_dir(task_id)
    return {name: (base / name).read_bytes() for name in COMPLETION_FILES}


class TestCollection:
    """Testes da coleta com gravação incremental e retomada."""

    def test_artifacts(self, collected, collect_tasks):
        repo = ArtifactRepository(collected)
        assert repo.completed_tasks() == sorted(t.task_id for t in collect_tasks)
        task_id = collect_tasks[0].task_id
        history = repo.read_history(task_id)
        assert history["obs"].shape == (2, 40, 5, 5, 40)
        assert history["teammate_actions"].shape == (2, 40)
        assert len(repo.read_episodes(task_id)) == 2
        metadata = repo.read_metadata(task_id)
        assert metadata.T == 40
        assert metadata.obs_shape == [5, 5, 40]
        assert not repo.parts_dir(task_id).exists()
        assert not repo.is_locked(task_id)

    def test_same_seed_same_bytes(self, tmp_path, collected, collect_tasks):
        other = tmp_path / "again"
        CollectionService(other, TINY).run(collect_tasks)
        for task in collect_tasks:
            assert artifact_bytes(other, task.task_id) == artifact_bytes(collected, task.task_id)
            with zipfile.ZipFile(ArtifactRepository(other).task_dir(task.task_id) / "history.npz") as archive:
                infos = archive.infolist()
            assert sorted(i.filename for i in infos) == [
                "actions.npy", "dones.npy", "obs.npy", "rewards.npy", "teammate_actions.npy",
            ]
            assert all(i.compress_type == zipfile.ZIP_DEFLATED for i in infos)
            assert sum(i.compress_size for i in infos) < sum(i.file_size for i in infos)

    def test_parts_are_compressed(self, tmp_path, monkeypatch, collect_tasks):
        task = collect_tasks[0]
        out = tmp_path / "parts"
        monkeypatch.setattr(ArtifactRepository, "clear_parts", lambda self, task_id: None)
        collect_task(task, out, TINY)
        parts = sorted(ArtifactRepository(out).parts_dir(task.task_id).glob("*.npz"))
        assert len(parts) == 4
        for path in parts:
            with zipfile.ZipFile(path) as archive:
                assert all(i.compress_type == zipfile.ZIP_DEFLATED for i in archive.infolist())

    def test_resume_after_interruption(self, tmp_path, monkeypatch, collected, collect_tasks):
        task = collect_tasks[0]
        out = tmp_path / "interrupted"
        original = collect_module.rollout_stream
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("interrompido")
            return original(*args, **kwargs)

        monkeypatch.setattr(collect_module, "rollout_stream", flaky)
        with pytest.raises(RuntimeError):
            collect_task(task, out, TINY)
        repo = ArtifactRepository(out)
        assert repo.has_part(task.task_id, 0, 0) and repo.has_part(task.task_id, 0, 1)
        assert not repo.is_complete(task.task_id)
        assert not repo.is_locked(task.task_id)

        result = collect_task(task, out, TINY, resume=True)
        assert result.status == COMPLETED
        assert calls["n"] == 5
        assert artifact_bytes(out, task.task_id) == artifact_bytes(collected, task.task_id)

    def test_resume_after_killed_worker(self, tmp_path, monkeypatch, collected, collect_tasks):
        task = collect_tasks[0]
        out = tmp_path / "killed"
        original = collect_module.rollout_stream
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("interrompido")
            return original(*args, **kwargs)

        monkeypatch.setattr(collect_module, "rollout_stream", flaky)
        with pytest.raises(RuntimeError):
            collect_task(task, out, TINY)
        monkeypatch.setattr(collect_module, "rollout_stream", original)

        # um worker morto não libera a trava: ela fica com o pid de um processo encerrado
        dead = subprocess.Popen([sys.executable, "-c", "pass"])
        dead.wait()
        repo = ArtifactRepository(out)
        lock_path = repo.task_dir(task.task_id) / ".lock"
        lock_path.write_text(str(dead.pid))
        assert repo.is_locked(task.task_id)

        result = run_task_with_retries(task, out, TINY, retries=0)
        assert result.status == COMPLETED
        assert not lock_path.exists()
        assert artifact_bytes(out, task.task_id) == artifact_bytes(collected, task.task_id)

    def test_memory_flat_in_streams(self, tmp_path, collect_tasks):
        task = collect_tasks[0]

        def peak(name, streams):
            cfg = TINY.model_copy(update={"num_streams": streams})
            gc.collect()
            tracemalloc.start()
            try:
                collect_task(task, tmp_path / name, cfg)
                return tracemalloc.get_traced_memory()[1]
            finally:
                tracemalloc.stop()

        peak("warmup", 2)
        small, large = peak("small", 2), peak("large", 8)
        # todos os campos de um fluxo de T=40 em coord_simple
        stream_bytes = 40 * (5 * 5 * 40 * 4 + 4 + 4 + 1 + 4)
        assert large < small + 2 * stream_bytes

    def test_no_resume_discards_parts(self, tmp_path, collect_tasks):
        task = collect_tasks[0]
        out = tmp_path / "fresh"
        repo = ArtifactRepository(out)
        repo.write_part(task.task_id, 0, 0, {"bogus": np.zeros(1)})
        result = collect_task(task, out, TINY, resume=False)
        assert result.status == COMPLETED
        assert repo.read_history(task.task_id)["obs"].shape[:2] == (2, 40)

    def test_completed_task_is_skipped(self, collected, collect_tasks):
        summary = CollectionService(collected, TINY).run(collect_tasks)
        assert [r.status for r in summary.results] == [SKIPPED, SKIPPED]

    def test_locked_task_is_reported(self, tmp_path, collect_tasks):
        task = collect_tasks[0]
        out = tmp_path / "locked"
        with ArtifactRepository(out).lock(task.task_id):
            result = run_task_with_retries(task, out, TINY, retries=0)
        assert result.status == LOCKED
        assert not (out / collect_module.FAILURE_LOG).exists()

    def test_failure_logged_and_fail_fast(self, tmp_path, collect_tasks):
        out = tmp_path / "failing"
        bad = CollectTask(task_id="bad", layout="nowhere", teammate_spec=collect_tasks[0].teammate_spec, seed=0)
        summary = CollectionService(out, TINY).run([bad] + collect_tasks, retries=0, fail_fast=True)
        assert [r.status for r in summary.results] == [FAILED]
        assert not summary.ok
        lines = (out / collect_module.FAILURE_LOG).read_text().splitlines()
        assert len(lines) == 1 and '"task_id":"bad"' in lines[0]

    def test_failure_does_not_stop_other_tasks(self, tmp_path, collect_tasks):
        out = tmp_path / "failing"
        bad = CollectTask(task_id="bad", layout="nowhere", teammate_spec=collect_tasks[0].teammate_spec, seed=0)
        summary = CollectionService(out, TINY).run([bad] + collect_tasks, retries=0)
        assert [r.status for r in summary.results] == [FAILED, COMPLETED, COMPLETED]


class TestDatasetBuild:
    """Testes da construção do armazenamento a partir das tarefas."""

    def test_build_keeps_top_streams(self, collected):
        service = DatasetService(collected, chunk_length=16)
        summary = service.build(filter_k=1)
        assert summary.tasks == 2
        assert summary.streams_seen == 4
        assert summary.histories_written == 2
        assert summary.transitions_seen == 160
        assert summary.transitions_written == 80
        assert summary.retained_ratio == 0.5

        index_stats, scan_stats = service.inspect()
        assert index_stats == scan_stats
        assert index_stats.with_expert_actions == 2

        with service.open_store() as store:
            for entry in store.entries():
                assert entry.has_expert_actions and entry.has_teammate_actions
                assert entry.env_idx in (0, 1)
                assert entry.layout == "coord_simple"
                assert entry.h5_group.endswith(str(entry.history_id))
                history = store.read_history(entry.history_id)
                source = ArtifactRepository(collected).read_history(entry.task_id)
                np.testing.assert_array_equal(history.actions, source["actions"][entry.env_idx])

    def test_samplers_on_built_store(self, collected):
        service = DatasetService(collected, chunk_length=16)
        service.build()
        with service.open_store() as store:
            ad = sample_ad_batch(store, 4, 12, np.random.default_rng(0), with_teammate=True)
            dpt = sample_dpt_batch(store, 4, 6, np.random.default_rng(0))
        assert ad.obs.shape == (4, 12, 5, 5, 40)
        assert dpt.context_obs.shape == (4, 6, 5, 5, 40)

    def test_build_requires_overwrite(self, collected):
        service = DatasetService(collected, chunk_length=16)
        service.build(relabel=False)
        with pytest.raises(StoreError):
            service.build(relabel=False)
        summary = service.build(relabel=False, overwrite=True)
        assert summary.histories_written == 4
        assert service.inspect()[0].with_expert_actions == 0

    def test_filter_k_larger_than_streams(self, collected):
        with pytest.raises(ValueError):
            DatasetService(collected).build(filter_k=3)


class TestEvaluation:
    """Testes da avaliação online e do relatório."""

    @pytest.fixture
    def entries(self):
        specs = sample_population(list(Family), "test", 2)
        return build_track_manifest("teammate", specs, seed=0, layouts=["coord_simple"])

    def evaluate(self, out, entries, ego="random", workers=1):
        return EvaluationService(out).evaluate(
            entries, ego=ego, episodes=3, instances=2, episode_len=20, workers=workers
        )

    def test_report_files(self, tmp_path, entries):
        report = self.evaluate(tmp_path / "eval", entries)
        assert len(report.results) == 8
        assert [g.teammate_family for g in report.groups] == ["H1", "H2", "H3", "H4"]
        for group in report.groups:
            assert group.instances == 2
            assert len(group.curve_mean) == 3
            assert group.adaptation_gain is None
            assert (tmp_path / "eval" / "curves" / f"coord_simple__{group.teammate_family}.csv").exists()
        groups = pd.read_csv(tmp_path / "eval" / "groups.csv")
        assert len(groups) == 4
        instances = pd.read_csv(tmp_path / "eval" / "instances.csv")
        assert len(instances) == 8
        assert (tmp_path / "eval" / "summary.json").exists()

    def test_deterministic_and_parallel_equivalent(self, tmp_path, entries):
        a = self.evaluate(tmp_path / "a", entries)
        b = self.evaluate(tmp_path / "b", entries, workers=2)
        assert [r.returns for r in a.results] == [r.returns for r in b.results]

    def test_instances_cap_per_group(self, tmp_path, entries):
        report = EvaluationService(tmp_path / "eval").evaluate(entries, ego="stay", episodes=1, instances=1,
                                                                episode_len=5)
        assert len(report.results) == 4

    def test_external_ego_matches_local_equivalent(self, tmp_path, entries):
        local = self.evaluate(tmp_path / "local", entries, ego="stay")
        with PolicyServer(constant_policy_handler(int(Action.STAY))) as server:
            remote = self.evaluate(tmp_path / "remote", entries, ego=f"external:{server.endpoint}")
        assert [r.returns for r in remote.results] == [r.returns for r in local.results]

    def test_invalid_parameters(self, tmp_path, entries):
        with pytest.raises(ValueError):
            EvaluationService(tmp_path).evaluate(entries, ego="random", episodes=0)
        with pytest.raises(ValueError):
            EvaluationService(tmp_path).evaluate(entries, ego="transformer")
