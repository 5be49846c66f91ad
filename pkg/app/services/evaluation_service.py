"""
Serviço de avaliação online.
"""

from functools import partial
from pathlib import Path
from typing import Sequence, Union

import structlog

from app.core.evaluation.adapters import BUFFER_KINDS, EGO_KINDS, make_ego_adapter
from app.core.evaluation.harness import EgoFactory, run_eval, write_report
from app.schemas.manifest import EXTERNAL_PREFIX, BenchmarkEntry
from app.schemas.report import EvalReport

logger = structlog.get_logger()

EVAL_DIR = "eval"


def ego_factory(
    kind: str,
    context_k: int = 2000,
    buffer: str = "step",
    with_teammate: bool = False,
    timeout_s: float = 30.0,
    attempts: int = 5,
) -> EgoFactory:
    """
    Fábrica serializável (partial) que cria um ego novo por instância.

    Raises:
        ValueError: Ego ou buffer desconhecido
    """
    if kind not in EGO_KINDS and not kind.startswith(EXTERNAL_PREFIX):
        raise ValueError(f"Ego desconhecido: {kind} (use {', '.join(EGO_KINDS)} ou external:<endpoint>)")
    if buffer not in BUFFER_KINDS:
        raise ValueError(f"Buffer desconhecido: {buffer} (use {', '.join(BUFFER_KINDS)})")
    return partial(
        make_ego_adapter,
        kind,
        context_k=context_k,
        buffer=buffer,
        with_teammate=with_teammate,
        timeout_s=timeout_s,
        attempts=attempts,
    )


class EvaluationService:
    """Roda o protocolo de avaliação e grava o relatório."""

    def __init__(self, out_dir: Union[str, Path], timeout_s: float = 30.0, attempts: int = 5):
        self.out_dir = Path(out_dir)
        self.timeout_s = timeout_s
        self.attempts = attempts

    def evaluate(
        self,
        entries: Sequence[BenchmarkEntry],
        ego: str,
        episodes: int = 100,
        instances: int = 5,
        episode_len: int = 100,
        context_k: int = 2000,
        buffer: str = "step",
        with_teammate: bool = False,
        seed: int = 0,
        workers: int = 1,
    ) -> EvalReport:
        """
        Raises:
            ValueError: Ego/buffer desconhecido ou parâmetros não positivos
            ExternalPolicyError: Endpoint externo inacessível
        """
        if episodes <= 0 or instances <= 0 or episode_len <= 0:
            raise ValueError("episodes, instances e episode_len devem ser positivos")
        factory = ego_factory(ego, context_k, buffer, with_teammate, self.timeout_s, self.attempts)
        report = run_eval(
            entries,
            factory,
            ego_name=ego,
            episodes_per_instance=episodes,
            instances=instances,
            episode_len=episode_len,
            seed=seed,
            workers=workers,
            timeout_s=self.timeout_s,
            attempts=self.attempts,
        )
        write_report(report, self.out_dir)
        return report
