"""
Armazenamento de históricos: store.bin (chunks gzip ao longo do tempo) e
index.jsonl (uma entrada por histórico).

Um único escritor por store; leitores leem apenas os chunks que cobrem a
janela pedida, com cache LRU limitado em bytes.
"""

import os
import threading
from pathlib import Path
from typing import BinaryIO, Dict, List, Optional, Sequence, Union

import numpy as np
import structlog
from prometheus_client import CollectorRegistry, Counter

from app.core.dataset.cache import ChunkCache
from app.core.dataset.container import (
    RecordHeader,
    decode_chunk,
    encode_file_header,
    encode_record,
    read_file_header,
    scan_records,
)
from app.core.exceptions import StoreError
from app.core.history.history import FIELD_DTYPES, LearningHistory
from app.repositories.base import JsonlRepository
from app.schemas.dataset import DatasetIndexEntry, DatasetStats

logger = structlog.get_logger()

STORE_FILE = "store.bin"
INDEX_FILE = "index.jsonl"
DEFAULT_CHUNK_LENGTH = 1000
DEFAULT_COMPRESSION_LEVEL = 6
DEFAULT_CACHE_BYTES = 512 * 1024 * 1024


class StoreMetrics:
    """Contadores prometheus de um store (registro próprio por instância)."""

    def __init__(self):
        self.registry = CollectorRegistry()
        self._decompressions = Counter(
            "aht_store_chunk_decompressions", "Chunks descomprimidos", registry=self.registry
        )
        self._cache_hits = Counter("aht_store_cache_hits", "Acertos no cache de chunks", registry=self.registry)
        self._bytes_written = Counter("aht_store_bytes_written", "Bytes gravados em store.bin", registry=self.registry)

    def record_decompression(self) -> None:
        self._decompressions.inc()

    def record_cache_hit(self) -> None:
        self._cache_hits.inc()

    def record_write(self, n_bytes: int) -> None:
        self._bytes_written.inc(n_bytes)

    def _value(self, name: str) -> int:
        return int(self.registry.get_sample_value(f"{name}_total") or 0)

    @property
    def decompressions(self) -> int:
        return self._value("aht_store_chunk_decompressions")

    @property
    def cache_hits(self) -> int:
        return self._value("aht_store_cache_hits")

    @property
    def bytes_written(self) -> int:
        return self._value("aht_store_bytes_written")


class DatasetStore:
    """
    Container de históricos de aprendizado.

    Attributes:
        root: Diretório com store.bin e index.jsonl
        chunk_length: Passos por chunk (lido do arquivo quando já existe)
        compression_level: Nível gzip dos novos registros
        metrics: Contadores de descompressão, cache e escrita
    """

    def __init__(
        self,
        root: Union[str, Path],
        chunk_length: int = DEFAULT_CHUNK_LENGTH,
        compression_level: int = DEFAULT_COMPRESSION_LEVEL,
        cache_bytes: int = DEFAULT_CACHE_BYTES,
    ):
        if chunk_length <= 0:
            raise StoreError("chunk_length deve ser positivo")
        self.root = Path(root)
        self.store_path = self.root / STORE_FILE
        self.index = JsonlRepository(DatasetIndexEntry, self.root / INDEX_FILE)
        self.chunk_length = chunk_length
        self.compression_level = compression_level
        self.cache = ChunkCache(cache_bytes)
        self.metrics = StoreMetrics()
        self._records: Dict[int, RecordHeader] = {}
        self._entries: Dict[int, DatasetIndexEntry] = {}
        self._reader: Optional[BinaryIO] = None
        self._lock = threading.Lock()
        self._load()

    # ------------------------------------------------------------------
    # Abertura
    # ------------------------------------------------------------------

    def _load(self) -> None:
        if self.store_path.exists() and self.store_path.stat().st_size > 0:
            with self.store_path.open("rb") as fh:
                header = read_file_header(fh)
                self.chunk_length = header.chunk_length
                for record in scan_records(fh):
                    self._records[record.history_id] = record
        for entry in self.index.iter_all():
            if entry.history_id not in self._records:
                raise StoreError(f"Índice referencia histórico ausente em store.bin: {entry.history_id}")
            self._entries[entry.history_id] = entry
        logger.debug("store_opened", root=str(self.root), histories=len(self._entries))

    def close(self) -> None:
        with self._lock:
            if self._reader is not None:
                self._reader.close()
                self._reader = None

    def __enter__(self) -> "DatasetStore":
        return self

    def __exit__(self, *exc):
        self.close()
        return False

    # ------------------------------------------------------------------
    # Índice
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> List[DatasetIndexEntry]:
        return [self._entries[i] for i in sorted(self._entries)]

    def entry(self, history_id: int) -> DatasetIndexEntry:
        try:
            return self._entries[history_id]
        except KeyError:
            raise StoreError(f"Histórico desconhecido: {history_id}") from None

    def record(self, history_id: int) -> RecordHeader:
        self.entry(history_id)
        return self._records[history_id]

    def next_history_id(self) -> int:
        return max(self._records, default=-1) + 1

    # ------------------------------------------------------------------
    # Escrita
    # ------------------------------------------------------------------

    def write_history(self, entry: DatasetIndexEntry, history: LearningHistory) -> int:
        """
        Acrescenta um histórico ao store e sua linha ao índice.

        Raises:
            StoreError: history_id duplicado, entrada inconsistente ou dtype divergente
        """
        if entry.history_id in self._records:
            raise StoreError(f"history_id duplicado: {entry.history_id}")
        if entry.T != history.length or entry.obs_shape != list(history.obs_shape):
            raise StoreError(
                f"Entrada inconsistente: T={entry.T} obs_shape={entry.obs_shape}, "
                f"histórico T={history.length} obs_shape={list(history.obs_shape)}"
            )
        if entry.has_teammate_actions != (history.teammate_actions is not None):
            raise StoreError("has_teammate_actions não corresponde ao histórico")
        if entry.has_expert_actions != (history.expert_actions is not None):
            raise StoreError("has_expert_actions não corresponde ao histórico")

        fields = history.fields()
        for name, array in fields.items():
            if array.dtype != FIELD_DTYPES[name]:
                raise StoreError(f"dtype de '{name}' é {array.dtype}, esperado {FIELD_DTYPES[name]}")

        self.root.mkdir(parents=True, exist_ok=True)
        with self._lock:
            new_file = not self.store_path.exists() or self.store_path.stat().st_size == 0
            with self.store_path.open("ab") as fh:
                if new_file:
                    fh.write(encode_file_header(self.chunk_length))
                start = fh.tell()
                data, record = encode_record(
                    entry.history_id, fields, self.chunk_length, self.compression_level, start
                )
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            self._records[entry.history_id] = record
            self.metrics.record_write(len(data))

        self.index.append(entry)
        self._entries[entry.history_id] = entry
        logger.info(
            "history_written",
            history_id=entry.history_id,
            task_id=entry.task_id,
            T=entry.T,
            bytes=len(data),
        )
        return entry.history_id

    # ------------------------------------------------------------------
    # Leitura
    # ------------------------------------------------------------------

    def _read_bytes(self, offset: int, size: int) -> bytes:
        with self._lock:
            if self._reader is None:
                self._reader = self.store_path.open("rb")
            self._reader.seek(offset)
            return self._reader.read(size)

    def _chunk(self, record: RecordHeader, name: str, index: int) -> np.ndarray:
        key = (record.history_id, name, index)
        cached = self.cache.get(key)
        if cached is not None:
            self.metrics.record_cache_hit()
            return cached
        field = record.field(name)
        entry = field.chunks[index]
        data = self._read_bytes(entry.offset, entry.compressed_size)
        array = decode_chunk(data, entry, field, f"histórico {record.history_id}/{name}/{index}")
        self.metrics.record_decompression()
        self.cache.put(key, array)
        return array

    def read_field(self, history_id: int, name: str, t0: int, t1: int) -> np.ndarray:
        """Janela [t0, t1) de um campo, descomprimindo só os chunks necessários."""
        record = self.record(history_id)
        field = record.field(name)
        if t1 <= t0:
            return np.zeros((0,) + field.shape, dtype=field.dtype)
        first, last = t0 // self.chunk_length, (t1 - 1) // self.chunk_length
        pieces = [self._chunk(record, name, i) for i in range(first, last + 1)]
        base = first * self.chunk_length
        return np.concatenate(pieces)[t0 - base:t1 - base]

    def read_rows(self, history_id: int, name: str, steps: Sequence[int]) -> np.ndarray:
        """
        Passos avulsos de um campo, descomprimindo só os chunks que os contêm.

        Raises:
            StoreError: Passo fora de [0, T)
        """
        record = self.record(history_id)
        field = record.field(name)
        steps = np.asarray(steps, dtype=np.int64)
        out = np.zeros((len(steps),) + field.shape, dtype=field.dtype)
        if not len(steps):
            return out
        if steps.min() < 0 or steps.max() >= record.T:
            raise StoreError(f"Passos fora de [0, {record.T}) no histórico {history_id}")
        chunk_ids = steps // self.chunk_length
        for index in np.unique(chunk_ids):
            rows = chunk_ids == index
            chunk = self._chunk(record, name, int(index))
            out[rows] = chunk[steps[rows] - int(index) * self.chunk_length]
        return out

    def read_slice(self, history_id: int, t0: int, t1: int) -> LearningHistory:
        """
        Histórico parcial com os passos [t0, t1).

        Raises:
            StoreError: Histórico desconhecido ou janela fora de 0 ≤ t0 < t1 ≤ T
            CorruptChunkError: Chunk com checksum divergente
        """
        record = self.record(history_id)
        if not (0 <= t0 < t1 <= record.T):
            raise StoreError(f"Janela [{t0}, {t1}) fora de [0, {record.T}] no histórico {history_id}")
        values = {name: self.read_field(history_id, name, t0, t1) for name in record.field_names}
        return LearningHistory.from_arrays(values)

    def read_history(self, history_id: int) -> LearningHistory:
        return self.read_slice(history_id, 0, self.record(history_id).T)

    # ------------------------------------------------------------------
    # Estatísticas
    # ------------------------------------------------------------------

    def disk_bytes(self) -> int:
        return sum(p.stat().st_size for p in (self.store_path, self.index.path) if p.exists())

    def stats(self) -> DatasetStats:
        """Estatísticas calculadas a partir do índice."""
        entries = self.entries()
        lengths = [e.T for e in entries]
        return DatasetStats(
            histories=len(entries),
            transitions=sum(lengths),
            min_T=min(lengths, default=0),
            max_T=max(lengths, default=0),
            layouts=len({e.layout for e in entries}),
            teammates=len({(e.task_id, e.teammate_kind) for e in entries}),
            with_expert_actions=sum(e.has_expert_actions for e in entries),
            disk_bytes=self.disk_bytes(),
        )

    def scan_stats(self) -> DatasetStats:
        """Mesmas estatísticas recalculadas a partir dos cabeçalhos de store.bin."""
        if not self.store_path.exists():
            return DatasetStats(disk_bytes=self.disk_bytes())
        with self.store_path.open("rb") as fh:
            read_file_header(fh)
            records = list(scan_records(fh))
        lengths = [r.T for r in records]
        entries = self._entries
        return DatasetStats(
            histories=len(records),
            transitions=sum(lengths),
            min_T=min(lengths, default=0),
            max_T=max(lengths, default=0),
            layouts=len({entries[r.history_id].layout for r in records if r.history_id in entries}),
            teammates=len({
                (entries[r.history_id].task_id, entries[r.history_id].teammate_kind)
                for r in records if r.history_id in entries
            }),
            with_expert_actions=sum("expert_actions" in r.field_names for r in records),
            disk_bytes=self.disk_bytes(),
        )


def chunks_touched(t0: int, t1: int, chunk_length: int) -> int:
    """Quantidade de chunks que cobrem [t0, t1)."""
    if t1 <= t0:
        return 0
    return (t1 - 1) // chunk_length - t0 // chunk_length + 1

