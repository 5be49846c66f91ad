"""
Serviço de construção e inspeção do armazenamento de históricos.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import structlog

from app.core.dataset.store import INDEX_FILE, STORE_FILE, DatasetStore
from app.core.exceptions import StoreError
from app.core.history.filtering import filter_streams
from app.core.history.history import LearningHistory
from app.core.history.relabel import relabel_expert
from app.core.kitchen.layout import LayoutSpec, load_layout
from app.repositories.artifact_repository import ArtifactRepository
from app.schemas.dataset import DatasetIndexEntry, DatasetStats, history_group
from app.schemas.manifest import TaskMetadata

logger = structlog.get_logger()

DATASET_DIR = "dataset"


@dataclass
class BuildSummary:
    """Totais de um `dataset build`."""

    tasks: int = 0
    streams_seen: int = 0
    histories_written: int = 0
    transitions_seen: int = 0
    transitions_written: int = 0

    @property
    def retained_ratio(self) -> float:
        return self.transitions_written / self.transitions_seen if self.transitions_seen else 0.0


class DatasetService:
    """
    Converte as tarefas concluídas em um armazenamento de históricos.

    Attributes:
        out_root: Raiz com `tasks/` (saída do collect)
        store_dir: Diretório do armazenamento
    """

    def __init__(
        self,
        out_root: Union[str, Path],
        store_dir: Optional[Union[str, Path]] = None,
        chunk_length: int = 1000,
        compression_level: int = 6,
        cache_bytes: int = 512 * 1024 * 1024,
    ):
        self.out_root = Path(out_root)
        self.store_dir = Path(store_dir) if store_dir else self.out_root / DATASET_DIR
        self.artifacts = ArtifactRepository(self.out_root)
        self.store_options = dict(
            chunk_length=chunk_length,
            compression_level=compression_level,
            cache_bytes=cache_bytes,
        )

    def open_store(self) -> DatasetStore:
        return DatasetStore(self.store_dir, **self.store_options)

    def build(
        self,
        filter_k: Optional[int] = None,
        relabel: bool = True,
        overwrite: bool = False,
    ) -> BuildSummary:
        """
        Filtra os fluxos de cada tarefa concluída e grava os k melhores.

        Args:
            filter_k: Fluxos mantidos por tarefa (None mantém todos)
            relabel: Preencher expert_actions com o especialista por observação
            overwrite: Descartar um armazenamento existente

        Raises:
            StoreError: Armazenamento já populado sem `overwrite`
            ValueError: filter_k maior que o número de fluxos de uma tarefa
        """
        if overwrite:
            for name in (STORE_FILE, INDEX_FILE):
                (self.store_dir / name).unlink(missing_ok=True)

        summary = BuildSummary()
        with self.open_store() as store:
            if len(store):
                raise StoreError(f"Armazenamento em {self.store_dir} já contém {len(store)} históricos")
            for task_id in self.artifacts.completed_tasks():
                written, seen = self._build_task(store, task_id, filter_k, relabel)
                summary.tasks += 1
                summary.streams_seen += seen[0]
                summary.transitions_seen += seen[1]
                summary.histories_written += written[0]
                summary.transitions_written += written[1]

        logger.info(
            "dataset_built",
            store=str(self.store_dir),
            tasks=summary.tasks,
            histories=summary.histories_written,
            retained_ratio=summary.retained_ratio,
        )
        return summary

    def _build_task(
        self,
        store: DatasetStore,
        task_id: str,
        filter_k: Optional[int],
        relabel: bool,
    ) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        metadata = self.artifacts.read_metadata(task_id)
        episodes = self.artifacts.read_episodes(task_id)
        returns = [[e["sparse_return"] for e in stream] for stream in episodes]
        k = filter_k if filter_k is not None else len(returns)
        kept = filter_streams(list(zip(range(len(returns)), returns)), k)

        layout = load_layout(metadata.layout)
        transitions = 0
        with self.artifacts.open_history(task_id) as reader:
            for _, stream in kept:
                history = LearningHistory.from_arrays(reader.rows(stream))
                transitions += self._ingest(store, task_id, metadata, stream, history, layout, relabel)

        logger.info("task_ingested", task_id=task_id, streams=len(returns), kept=len(kept))
        return (len(kept), transitions), (len(returns), len(returns) * metadata.T)

    @staticmethod
    def _ingest(
        store: DatasetStore,
        task_id: str,
        metadata: TaskMetadata,
        stream: int,
        history: LearningHistory,
        layout: LayoutSpec,
        relabel: bool,
    ) -> int:
        """Grava um fluxo no armazenamento; devolve as transições gravadas."""
        if relabel:
            history = relabel_expert(history, None, layout)
        history_id = store.next_history_id()
        entry = DatasetIndexEntry(
            history_id=history_id,
            task_id=task_id,
            env_idx=stream,
            T=history.length,
            obs_shape=list(history.obs_shape),
            track=metadata.track,
            split=metadata.split,
            layout=metadata.layout,
            teammate_family=metadata.teammate_family,
            teammate_kind=metadata.teammate_kind,
            h5_group=history_group(history_id),
            has_teammate_actions=history.teammate_actions is not None,
            has_expert_actions=history.expert_actions is not None,
        )
        store.write_history(entry, history)
        return history.length

    def inspect(self) -> Tuple[DatasetStats, DatasetStats]:
        """Estatísticas pelo índice e pela varredura de store.bin."""
        with self.open_store() as store:
            return store.stats(), store.scan_stats()
