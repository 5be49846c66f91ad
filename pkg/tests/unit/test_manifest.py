"""
Testes dos manifestos de coleta e das trilhas de avaliação.
"""

import pytest
from pydantic import ValidationError

from app.core.evaluation.manifest import (
    build_collect_manifest,
    build_track_manifest,
    spec_split,
    validate_track,
)
from app.core.exceptions import LayoutError, ManifestError
from app.core.teammates.params import Family
from app.core.teammates.sampling import sample_population
from app.schemas.manifest import BenchmarkEntry, CollectTask
from app.services.manifest_service import ManifestService

TEAMMATE_TRAIN_LAYOUTS = {"coord_simple", "coord_ring", "test_simple", "test_wide", "demo_simple", "demo_wide"}


@pytest.fixture
def test_specs():
    return sample_population(list(Family), "test", 2)


@pytest.fixture
def train_specs():
    return sample_population([Family.H1, Family.H4], "train", 2)


class TestTrackManifest:
    """Testes da montagem das trilhas."""

    def test_teammate_track(self, test_specs):
        entries = build_track_manifest("teammate", test_specs, seed=1)
        assert len(entries) == 6 * len(test_specs)
        assert {e.layout for e in entries} == TEAMMATE_TRAIN_LAYOUTS
        assert all(e.track == "teammate" and e.split == "test" for e in entries)

    def test_layout_track(self, test_specs):
        entries = build_track_manifest("layout", test_specs, seed=1)
        assert {e.layout for e in entries} == {"asymm_right", "cramped_down"}
        assert len(entries) == 2 * len(test_specs)

    def test_seeds_are_deterministic_and_distinct(self, test_specs):
        a = build_track_manifest("teammate", test_specs, seed=5)
        b = build_track_manifest("teammate", test_specs, seed=5)
        c = build_track_manifest("teammate", test_specs, seed=6)
        assert [e.seed for e in a] == [e.seed for e in b]
        assert len({e.seed for e in a}) == len(a)
        assert [e.seed for e in a] != [e.seed for e in c]

    def test_train_teammate_rejected(self, train_specs):
        with pytest.raises(ManifestError):
            build_track_manifest("teammate", train_specs)

    def test_unknown_track(self, test_specs):
        with pytest.raises(ManifestError):
            build_track_manifest("zero_shot", test_specs)

    def test_layout_outside_track(self, test_specs):
        with pytest.raises(ManifestError):
            build_track_manifest("layout", test_specs, layouts=["asymm_both"])
        with pytest.raises(ManifestError):
            build_track_manifest("teammate", test_specs, layouts=["cramped_down"])

    def test_validate_rejects_train_spec(self, train_specs):
        entry = BenchmarkEntry(track="teammate", layout="coord_simple", teammate_spec=train_specs[0], seed=0)
        with pytest.raises(ManifestError):
            validate_track([entry])

    def test_external_teammate_accepted(self):
        entry = BenchmarkEntry(track="layout", layout="asymm_right", teammate_ref="external:127.0.0.1:9", seed=0)
        validate_track([entry])
        assert entry.teammate_family == "external"

    def test_spec_split(self, test_specs, train_specs):
        assert spec_split(test_specs[0]) == "test"
        assert spec_split(train_specs[0]) == "train"


class TestEntrySchemas:
    """Testes de validação das linhas de manifesto."""

    def test_requires_exactly_one_teammate(self, test_specs):
        with pytest.raises(ValidationError):
            BenchmarkEntry(track="teammate", layout="coord_simple", seed=0)
        with pytest.raises(ValidationError):
            BenchmarkEntry(track="teammate", layout="coord_simple", seed=0,
                           teammate_spec=test_specs[0], teammate_ref="external:h:1")

    def test_invalid_external_ref(self):
        with pytest.raises(ValidationError):
            BenchmarkEntry(track="teammate", layout="coord_simple", seed=0, teammate_ref="h:1")

    def test_task_id_charset(self, train_specs):
        with pytest.raises(ValidationError):
            CollectTask(task_id="a/b", layout="coord_simple", teammate_spec=train_specs[0], seed=0)


class TestCollectManifest:
    """Testes das tarefas de coleta."""

    def test_task_ids(self, train_specs):
        tasks = build_collect_manifest(train_specs, ["coord_simple", "coord_ring"], seed=0)
        assert len(tasks) == 2 * len(train_specs)
        assert tasks[0].task_id == "coord_simple__aht-H1-train-0"
        assert len({t.task_id for t in tasks}) == len(tasks)
        assert all(t.split == "train" and t.track == "teammate" for t in tasks)

    def test_unknown_layout(self, train_specs):
        with pytest.raises(LayoutError):
            build_collect_manifest(train_specs, ["nowhere"], seed=0)


class TestManifestService:
    """Testes de gravação e carga dos manifestos."""

    def test_collect_roundtrip(self, tmp_path, train_specs):
        service = ManifestService()
        tasks = service.build_collect(train_specs, seed=3, layouts=["coord_simple"])
        path = service.write(tasks, CollectTask, tmp_path / "collect.jsonl")
        assert service.load_collect(path) == tasks

    def test_default_layouts_follow_track(self, train_specs):
        tasks = ManifestService().build_collect(train_specs, seed=0, track="layout", split="train")
        assert {t.layout for t in tasks} == {"asymm_both", "cramped_up"}

    def test_no_layout_for_track(self, train_specs):
        with pytest.raises(ManifestError):
            ManifestService().build_collect(train_specs, seed=0, track="teammate", split="test")

    def test_duplicate_task_id(self, tmp_path, train_specs):
        service = ManifestService()
        tasks = service.build_collect(train_specs[:1], seed=0, layouts=["coord_simple"])
        path = service.write(tasks + tasks, CollectTask, tmp_path / "dup.jsonl")
        with pytest.raises(ManifestError):
            service.load_collect(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError):
            ManifestService().load_benchmark(tmp_path / "absent.jsonl")

    def test_invalid_line_reports_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"track": "teammate"}\n')
        with pytest.raises(ManifestError, match=":1:"):
            ManifestService().load_benchmark(path)

    def test_benchmark_roundtrip(self, tmp_path, test_specs):
        service = ManifestService()
        entries = service.build_track("layout", test_specs, seed=0)
        path = service.write(entries, BenchmarkEntry, tmp_path / "layout.jsonl")
        assert service.load_benchmark(path) == entries
