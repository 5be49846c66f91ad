"""
Amostradores de lotes para treino de políticas condicionadas ao histórico.

Lote AD: janelas de L passos consecutivos (podem atravessar episódios) com
ação e recompensa anteriores deslocadas de um passo.
Lote DPT: uma consulta rotulada pelo especialista e K transições de contexto
sorteadas sem reposição do mesmo histórico.
"""

import queue
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Generic, Iterator, List, Optional, Sequence, TypeVar

import numpy as np
import structlog

from app.core.dataset.store import DatasetStore
from app.core.exceptions import StoreError
from app.schemas.dataset import DatasetIndexEntry

logger = structlog.get_logger()

BatchType = TypeVar("BatchType")


@dataclass
class ADBatch:
    obs: np.ndarray  # (B, L, 5, 5, C)
    prev_actions: np.ndarray  # (B, L)
    prev_rewards: np.ndarray
    target_actions: np.ndarray
    dones: np.ndarray
    attention_mask: np.ndarray
    prev_teammate_actions: Optional[np.ndarray] = None
    # origem de cada linha, para auditoria
    history_ids: Optional[np.ndarray] = None
    starts: Optional[np.ndarray] = None


@dataclass
class DPTBatch:
    query_obs: np.ndarray  # (B, 5, 5, C)
    query_target: np.ndarray  # (B,)
    context_obs: np.ndarray  # (B, K, 5, 5, C)
    context_actions: np.ndarray
    context_next_obs: np.ndarray
    context_rewards: np.ndarray
    context_teammate_actions: Optional[np.ndarray] = None
    history_ids: Optional[np.ndarray] = None
    query_steps: Optional[np.ndarray] = None
    context_steps: Optional[np.ndarray] = None


def _candidates(
    store: DatasetStore,
    history_ids: Optional[Sequence[int]],
    layout: Optional[str],
) -> List[DatasetIndexEntry]:
    entries = [store.entry(i) for i in history_ids] if history_ids is not None else store.entries()
    if layout is not None:
        entries = [e for e in entries if e.layout == layout]
    if not entries:
        raise StoreError("Nenhum histórico disponível para amostragem")
    shapes = {tuple(e.obs_shape) for e in entries}
    if len(shapes) > 1:
        raise StoreError(f"Formas de observação heterogêneas {sorted(shapes)}; filtre por layout")
    return entries


def sample_ad_batch(
    store: DatasetStore,
    batch_size: int,
    context_length: int,
    rng: np.random.Generator,
    with_teammate: bool = False,
    history_ids: Optional[Sequence[int]] = None,
    layout: Optional[str] = None,
) -> ADBatch:
    """
    Sorteia pares (histórico, início) uniformemente.

    Janelas que passam do fim do histórico são completadas com máscara 0;
    no passo 0 do histórico prev_actions e prev_rewards são zero.

    Raises:
        StoreError: Store vazio, histórico com T < 1 ou sem ações do parceiro
    """
    entries = _candidates(store, history_ids, layout)
    if any(e.T < 1 for e in entries):
        raise StoreError("Histórico com T < 1 não pode ser amostrado")
    if with_teammate and not all(e.has_teammate_actions for e in entries):
        raise StoreError("Histórico sem teammate_actions em lote com with_teammate")

    B, L = batch_size, context_length
    obs_shape = tuple(entries[0].obs_shape)
    batch = ADBatch(
        obs=np.zeros((B, L) + obs_shape, dtype=np.float32),
        prev_actions=np.zeros((B, L), dtype=np.int32),
        prev_rewards=np.zeros((B, L), dtype=np.float32),
        target_actions=np.zeros((B, L), dtype=np.int32),
        dones=np.zeros((B, L), dtype=np.uint8),
        attention_mask=np.zeros((B, L), dtype=np.uint8),
        prev_teammate_actions=np.zeros((B, L), dtype=np.int32) if with_teammate else None,
        history_ids=np.zeros(B, dtype=np.int64),
        starts=np.zeros(B, dtype=np.int64),
    )
    for b in range(B):
        entry = entries[int(rng.integers(len(entries)))]
        start = int(rng.integers(entry.T))
        end = min(start + L, entry.T)
        n = end - start
        # um passo a mais à esquerda para os campos deslocados
        lead = 1 if start > 0 else 0
        window = store.read_slice(entry.history_id, start - lead, end)

        batch.history_ids[b], batch.starts[b] = entry.history_id, start
        batch.obs[b, :n] = window.obs[lead:]
        batch.target_actions[b, :n] = window.actions[lead:]
        batch.dones[b, :n] = window.dones[lead:]
        batch.attention_mask[b, :n] = 1
        shift = slice(0, n - 1 + lead)
        dest = slice(1 - lead, n)
        batch.prev_actions[b, dest] = window.actions[shift]
        batch.prev_rewards[b, dest] = window.rewards[shift]
        if with_teammate:
            batch.prev_teammate_actions[b, dest] = window.teammate_actions[shift]
    return batch


def context_candidates(dones: np.ndarray) -> np.ndarray:
    """Passos t com próximo passo no mesmo episódio (t+1 < T e dones[t] == 0)."""
    T = len(dones)
    valid = np.flatnonzero(dones[: max(T - 1, 0)] == 0)
    return valid.astype(np.int64)


def sample_dpt_batch(
    store: DatasetStore,
    batch_size: int,
    context_size: int,
    rng: np.random.Generator,
    with_teammate: bool = False,
    history_ids: Optional[Sequence[int]] = None,
    layout: Optional[str] = None,
) -> DPTBatch:
    """
    Sorteia consultas rotuladas pelo especialista com contexto do mesmo histórico.

    Raises:
        StoreError: Histórico sem expert_actions ou K maior que as transições disponíveis
    """
    entries = _candidates(store, history_ids, layout)
    missing = [e.history_id for e in entries if not e.has_expert_actions]
    if missing:
        raise StoreError(f"Históricos sem expert_actions: {missing[:5]}")
    if with_teammate and not all(e.has_teammate_actions for e in entries):
        raise StoreError("Histórico sem teammate_actions em lote com with_teammate")

    B, K = batch_size, context_size
    obs_shape = tuple(entries[0].obs_shape)
    batch = DPTBatch(
        query_obs=np.zeros((B,) + obs_shape, dtype=np.float32),
        query_target=np.zeros(B, dtype=np.int32),
        context_obs=np.zeros((B, K) + obs_shape, dtype=np.float32),
        context_actions=np.zeros((B, K), dtype=np.int32),
        context_next_obs=np.zeros((B, K) + obs_shape, dtype=np.float32),
        context_rewards=np.zeros((B, K), dtype=np.float32),
        context_teammate_actions=np.zeros((B, K), dtype=np.int32) if with_teammate else None,
        history_ids=np.zeros(B, dtype=np.int64),
        query_steps=np.zeros(B, dtype=np.int64),
        context_steps=np.zeros((B, K), dtype=np.int64),
    )
    # candidatos de contexto calculados uma vez por histórico
    valid_by_history: Dict[int, np.ndarray] = {}
    for b in range(B):
        entry = entries[int(rng.integers(len(entries)))]
        hid = entry.history_id
        valid = valid_by_history.get(hid)
        if valid is None:
            valid = context_candidates(store.read_field(hid, "dones", 0, entry.T))
            valid_by_history[hid] = valid
        if K > len(valid):
            raise StoreError(f"K={K} excede as {len(valid)} transições disponíveis no histórico {hid}")
        t = int(rng.integers(entry.T))
        steps = rng.choice(valid, size=K, replace=False) if K else np.zeros(0, dtype=np.int64)

        batch.history_ids[b], batch.query_steps[b] = hid, t
        batch.query_obs[b] = store.read_rows(hid, "obs", [t])[0]
        batch.query_target[b] = store.read_rows(hid, "expert_actions", [t])[0]
        batch.context_steps[b] = steps
        batch.context_obs[b] = store.read_rows(hid, "obs", steps)
        batch.context_actions[b] = store.read_rows(hid, "actions", steps)
        batch.context_next_obs[b] = store.read_rows(hid, "obs", steps + 1)
        batch.context_rewards[b] = store.read_rows(hid, "rewards", steps)
        if with_teammate:
            batch.context_teammate_actions[b] = store.read_rows(hid, "teammate_actions", steps)
    return batch


_DONE = object()


class BatchPrefetcher(Generic[BatchType]):
    """
    Produz lotes em uma thread de fundo para uma fila limitada.

    Um único produtor chama `sample_fn` em sequência, então a ordem dos lotes
    é a mesma de chamadas diretas com o mesmo rng.
    """

    def __init__(self, sample_fn: Callable[[], BatchType], num_batches: int, depth: int = 5):
        if depth < 1:
            raise ValueError("depth deve ser ≥ 1")
        self.sample_fn = sample_fn
        self.num_batches = num_batches
        self.queue: "queue.Queue" = queue.Queue(maxsize=depth)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._produce, name="batch-prefetch", daemon=True)
        self._thread.start()

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _produce(self) -> None:
        try:
            for _ in range(self.num_batches):
                if self._stop.is_set() or not self._put(self.sample_fn()):
                    return
        except Exception as e:
            logger.error("prefetch_error", error=str(e))
            self._put(e)
            return
        self._put(_DONE)

    def __iter__(self) -> Iterator[BatchType]:
        while True:
            item = self.queue.get()
            if item is _DONE:
                return
            if isinstance(item, Exception):
                raise item
            yield item

    def close(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)

    def __enter__(self) -> "BatchPrefetcher[BatchType]":
        return self

    def __exit__(self, *exc):
        self.close()
        return False
