"""
Tarefas de coleta de históricos de aprendizado.

Uma tarefa (linha do manifesto de coleta) roda todos os fluxos de um par
(layout, parceiro), gravando partes a cada `save_interval` episódios. A
retomada reaproveita as partes já gravadas; como cada episódio tem sub-fluxos
de rng próprios, o resultado final é idêntico ao de uma execução contínua.
history.npz é montado das partes em disco, um fluxo por vez.
"""

import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import structlog
from tenacity import Retrying, retry_if_not_exception_type, stop_after_attempt, wait_fixed

from app.core.exceptions import TaskLockedError
from app.core.history.egos import AnnealedExpertEgo, EgoPolicy, RandomEgo
from app.core.history.rollout import AnnealSchedule, CollectorConfig, EpisodeRecord, rollout_stream
from app.core.kitchen.layout import LayoutSpec, load_layout
from app.core.teammates.policy import make_policy
from app.repositories.artifact_repository import ArtifactRepository
from app.repositories.base import JsonlRepository
from app.schemas.manifest import CollectTask, FailureRecord, TaskMetadata

logger = structlog.get_logger()

FAILURE_LOG = "failures.jsonl"

# Campos extras gravados em cada parte junto com os arrays do histórico
RECORD_FIELDS = ("episode", "sparse_return", "training_return")

COMPLETED = "completed"
SKIPPED = "skipped"
LOCKED = "locked"
FAILED = "failed"


@dataclass
class TaskResult:
    """Resultado de uma tarefa de coleta."""

    task_id: str
    status: str
    streams: int = 0
    transitions: int = 0
    attempts: int = 1
    error: Optional[str] = None
    traceback: Optional[str] = None


@dataclass
class CollectionSummary:
    """Totais de uma execução do manifesto."""

    results: List[TaskResult] = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(1 for r in self.results if r.status == status)

    @property
    def failed(self) -> List[TaskResult]:
        return [r for r in self.results if r.status == FAILED]

    @property
    def ok(self) -> bool:
        return not self.failed


def _make_teammate(task: CollectTask, layout: LayoutSpec, timeout_s: float, attempts: int):
    if task.teammate_spec is not None:
        return make_policy(task.teammate_spec, layout, agent_index=1)
    # import tardio: o protocolo externo só é necessário para refs "external:"
    from app.core.evaluation.adapters import ExternalTeammate

    return ExternalTeammate.connect(task.teammate_ref, layout, timeout_s=timeout_s, attempts=attempts)


def _make_collection_ego(layout: LayoutSpec, task: CollectTask, cfg: CollectorConfig, stream_index: int) -> EgoPolicy:
    stream = ("stream", stream_index)
    if cfg.ego == "random":
        return RandomEgo(task.seed, stream)
    schedule = AnnealSchedule(n_episodes=cfg.episodes_per_stream, shaping_horizon=cfg.shaping_horizon)
    return AnnealedExpertEgo(layout, task.seed, schedule, stream=stream)


def _records_to_arrays(records: Sequence[EpisodeRecord]) -> Dict[str, np.ndarray]:
    return {
        "episode": np.asarray([r.episode for r in records], dtype=np.int32),
        "sparse_return": np.asarray([r.sparse_return for r in records], dtype=np.float64),
        "training_return": np.asarray([r.training_return for r in records], dtype=np.float64),
    }


def _arrays_to_records(arrays: Dict[str, np.ndarray]) -> List[dict]:
    return [
        {"episode": int(e), "sparse_return": float(s), "training_return": float(r)}
        for e, s, r in zip(arrays["episode"], arrays["sparse_return"], arrays["training_return"])
    ]


def _stream_records(repo: ArtifactRepository, task_id: str, stream: int, num_blocks: int) -> List[dict]:
    parts = [repo.read_part(task_id, stream, b, RECORD_FIELDS) for b in range(num_blocks)]
    return _arrays_to_records({name: np.concatenate([p[name] for p in parts]) for name in RECORD_FIELDS})


def _blocks(cfg: CollectorConfig) -> List[range]:
    size = cfg.save_interval
    return [
        range(start, min(start + size, cfg.episodes_per_stream))
        for start in range(0, cfg.episodes_per_stream, size)
    ]


def collect_task(
    task: CollectTask,
    out_root: Union[str, Path],
    cfg: CollectorConfig,
    resume: bool = True,
    external_timeout_s: float = 30.0,
    external_attempts: int = 5,
) -> TaskResult:
    """
    Executa uma tarefa de coleta completa.

    Args:
        task: Linha do manifesto
        out_root: Diretório de saída
        cfg: Configuração da coleta
        resume: Reaproveitar partes gravadas por uma execução interrompida

    Returns:
        TaskResult com status "completed" ou "skipped"

    Raises:
        TaskLockedError: Outro worker detém a trava da tarefa
        LayoutError: Layout desconhecido
    """
    repo = ArtifactRepository(out_root)
    if repo.is_complete(task.task_id):
        logger.info("task_skipped", task_id=task.task_id, reason="complete")
        return TaskResult(task.task_id, SKIPPED)

    layout = load_layout(task.layout)
    with repo.lock(task.task_id):
        logger.info(
            "task_started",
            task_id=task.task_id,
            layout=layout.name,
            teammate=task.teammate_kind,
            streams=cfg.num_streams,
            resume=resume,
        )
        if not resume:
            repo.clear_parts(task.task_id)

        teammate = _make_teammate(task, layout, external_timeout_s, external_attempts)
        blocks = _blocks(cfg)
        reused = 0
        field_names: Optional[List[str]] = None
        # só as partes ficam em disco; nenhum fluxo é mantido em memória entre iterações
        for s in range(cfg.num_streams):
            missing = [b for b in range(len(blocks)) if not (resume and repo.has_part(task.task_id, s, b))]
            reused += len(blocks) - len(missing)
            if missing:
                ego = _make_collection_ego(layout, task, cfg, s)
                for b in missing:
                    history, records = rollout_stream(
                        layout, teammate, ego, cfg, task.seed, s, episodes=blocks[b]
                    )
                    repo.write_part(task.task_id, s, b, {**history.fields(), **_records_to_arrays(records)})
                    field_names = list(history.fields())
                ego.close()

        if field_names is None:
            with np.load(repo.part_path(task.task_id, 0, 0)) as part:
                field_names = [name for name in part.files if name not in RECORD_FIELDS]
        streams_records = [_stream_records(repo, task.task_id, s, len(blocks)) for s in range(cfg.num_streams)]
        shapes = repo.assemble_history(task.task_id, field_names, cfg.num_streams, len(blocks))
        T = cfg.history_length
        if shapes["obs"][1] != T:
            raise ValueError(f"Histórico montado com T={shapes['obs'][1]}, esperado {T}")
        metadata = TaskMetadata(
            task_id=task.task_id,
            layout=layout.name,
            split=task.split,
            track=task.track,
            seed=task.seed,
            teammate_family=task.teammate_family,
            teammate_kind=task.teammate_kind,
            spec_string=task.teammate_spec.spec_string if task.teammate_spec else None,
            num_streams=cfg.num_streams,
            episodes_per_stream=cfg.episodes_per_stream,
            recorded_steps_per_episode=cfg.recorded_steps_per_episode,
            T=T,
            obs_shape=list(shapes["obs"][2:]),
            ego=cfg.ego,
        )
        repo.write_final(task.task_id, streams_records, metadata)
        close = getattr(teammate, "close", None)
        if close is not None:
            close()

    logger.info("task_completed", task_id=task.task_id, streams=cfg.num_streams, reused_parts=reused)
    return TaskResult(task.task_id, COMPLETED, streams=cfg.num_streams, transitions=cfg.num_streams * T)


def run_task_with_retries(
    task: CollectTask,
    out_root: Union[str, Path],
    cfg: CollectorConfig,
    retries: int = 2,
    resume: bool = True,
    external_timeout_s: float = 30.0,
    external_attempts: int = 5,
) -> TaskResult:
    """
    Executa `collect_task` com novas tentativas para falhas transitórias.

    Erros de validação (ValueError) e trava ocupada não são repetidos. Nunca
    levanta: falhas viram TaskResult com status "failed" ou "locked".
    """
    attempts = 0
    retrying = Retrying(
        stop=stop_after_attempt(retries + 1),
        wait=wait_fixed(0.5),
        retry=retry_if_not_exception_type((TaskLockedError, ValueError)),
        reraise=True,
    )
    try:
        for attempt in retrying:
            with attempt:
                attempts = attempt.retry_state.attempt_number
                if attempts > 1:
                    logger.warning("task_retry", task_id=task.task_id, attempt=attempts)
                # sempre retoma a partir das partes após a primeira tentativa
                result = collect_task(
                    task, out_root, cfg,
                    resume=resume or attempts > 1,
                    external_timeout_s=external_timeout_s,
                    external_attempts=external_attempts,
                )
        result.attempts = attempts
        return result
    except TaskLockedError as e:
        logger.warning("task_locked", task_id=task.task_id, error=str(e))
        return TaskResult(task.task_id, LOCKED, attempts=attempts, error=str(e))
    except Exception as e:
        logger.error("task_failed", task_id=task.task_id, error=str(e), attempts=attempts)
        return TaskResult(
            task.task_id, FAILED, attempts=attempts, error=f"{type(e).__name__}: {e}",
            traceback=traceback.format_exc(),
        )


def run_collection(
    tasks: Sequence[CollectTask],
    out_root: Union[str, Path],
    cfg: CollectorConfig,
    workers: int = 1,
    retries: int = 2,
    resume: bool = True,
    fail_fast: bool = False,
    external_timeout_s: float = 30.0,
    external_attempts: int = 5,
) -> CollectionSummary:
    """
    Executa um manifesto de coleta, em paralelo por tarefa.

    Falhas são acrescentadas a `<out>/failures.jsonl`; trava ocupada é
    reportada sem contar como falha.
    """
    out_root = Path(out_root)
    failures = JsonlRepository(FailureRecord, out_root / FAILURE_LOG)
    summary = CollectionSummary()
    kwargs = dict(
        retries=retries,
        resume=resume,
        external_timeout_s=external_timeout_s,
        external_attempts=external_attempts,
    )

    def record(result: TaskResult) -> bool:
        summary.results.append(result)
        if result.status == FAILED:
            failures.append(
                FailureRecord(
                    task_id=result.task_id,
                    error=result.error or "",
                    attempts=result.attempts,
                    traceback=result.traceback,
                )
            )
            return fail_fast
        return False

    logger.info("collection_started", tasks=len(tasks), workers=workers, out=str(out_root))
    if workers <= 1:
        for task in tasks:
            if record(run_task_with_retries(task, out_root, cfg, **kwargs)):
                break
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(run_task_with_retries, task, out_root, cfg, **kwargs): task
                for task in tasks
            }
            for future in as_completed(futures):
                if record(future.result()):
                    for pending in futures:
                        pending.cancel()
                    break

    # ordem do manifesto, independente da ordem de conclusão
    order = {task.task_id: i for i, task in enumerate(tasks)}
    summary.results.sort(key=lambda r: order.get(r.task_id, len(order)))
    logger.info(
        "collection_finished",
        completed=summary.count(COMPLETED),
        skipped=summary.count(SKIPPED),
        locked=summary.count(LOCKED),
        failed=summary.count(FAILED),
    )
    return summary
