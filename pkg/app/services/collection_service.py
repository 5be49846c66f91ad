"""
Serviço de coleta de históricos.
"""

from pathlib import Path
from typing import Sequence, Union

import structlog

from app.core.history.rollout import CollectorConfig
from app.schemas.manifest import CollectTask
from app.tasks.collect_task import CollectionSummary, run_collection

logger = structlog.get_logger()


class CollectionService:
    """
    Executa manifestos de coleta sob um diretório de saída.

    Attributes:
        out_root: Raiz dos artefatos (`--out`)
        config: Configuração da coleta
    """

    def __init__(
        self,
        out_root: Union[str, Path],
        config: CollectorConfig,
        external_timeout_s: float = 30.0,
        external_attempts: int = 5,
    ):
        self.out_root = Path(out_root)
        self.config = config
        self.external_timeout_s = external_timeout_s
        self.external_attempts = external_attempts

    def run(
        self,
        tasks: Sequence[CollectTask],
        workers: int = 1,
        retries: int = 2,
        resume: bool = True,
        fail_fast: bool = False,
    ) -> CollectionSummary:
        self.out_root.mkdir(parents=True, exist_ok=True)
        logger.info(
            "collection_requested",
            tasks=len(tasks),
            streams=self.config.num_streams,
            history_length=self.config.history_length,
        )
        return run_collection(
            tasks,
            self.out_root,
            self.config,
            workers=workers,
            retries=retries,
            resume=resume,
            fail_fast=fail_fast,
            external_timeout_s=self.external_timeout_s,
            external_attempts=self.external_attempts,
        )
