"""
Serviço de manifestos (coleta e trilhas de avaliação).
"""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import structlog

from app.core.evaluation.manifest import build_collect_manifest, build_track_manifest, validate_track
from app.core.exceptions import ManifestError
from app.core.kitchen.layout import layouts_for
from app.repositories.base import JsonlRepository
from app.schemas.manifest import BenchmarkEntry, CollectTask
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()


class ManifestService:
    """Gera, grava e carrega manifestos JSONL."""

    def build_track(
        self,
        track: str,
        teammates: Sequence[TeammateSpec],
        seed: int,
        layouts: Optional[Sequence[str]] = None,
    ) -> List[BenchmarkEntry]:
        return build_track_manifest(track, teammates, seed=seed, layouts=layouts)

    def build_collect(
        self,
        teammates: Sequence[TeammateSpec],
        seed: int,
        track: str = "teammate",
        split: str = "train",
        layouts: Optional[Sequence[str]] = None,
    ) -> List[CollectTask]:
        """
        Tarefas de coleta; sem `layouts`, usa os layouts da trilha e partição.

        Raises:
            ManifestError: Nenhum layout selecionado
        """
        names = list(layouts) if layouts else layouts_for(track, split)
        if not names:
            raise ManifestError(f"Nenhum layout para a trilha {track}/{split}")
        return build_collect_manifest(teammates, names, seed=seed, track=track, split=split)

    def write(self, records: Sequence, schema, path: Union[str, Path]) -> Path:
        repo = JsonlRepository(schema, path)
        repo.write_all(records)
        logger.info("manifest_written", path=str(repo.path), records=len(records))
        return repo.path

    def load_collect(self, path: Union[str, Path]) -> List[CollectTask]:
        """
        Raises:
            ManifestError: Arquivo ausente, linha inválida ou task_id repetido
        """
        tasks = self._load(CollectTask, path)
        seen = set()
        for task in tasks:
            if task.task_id in seen:
                raise ManifestError(f"task_id repetido no manifesto: {task.task_id}")
            seen.add(task.task_id)
        return tasks

    def load_benchmark(self, path: Union[str, Path]) -> List[BenchmarkEntry]:
        """
        Carrega e valida a separação das trilhas.

        Raises:
            ManifestError: Arquivo ausente, linha inválida ou trilha violada
        """
        entries = self._load(BenchmarkEntry, path)
        validate_track(entries)
        return entries

    def _load(self, schema, path: Union[str, Path]) -> list:
        repo = JsonlRepository(schema, path)
        if not repo.exists():
            raise ManifestError(f"Manifesto não encontrado: {path}")
        records = repo.get_all()
        logger.debug("manifest_loaded", path=str(path), records=len(records))
        return records
