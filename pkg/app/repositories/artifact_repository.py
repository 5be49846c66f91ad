"""
Repositório de artefatos das tarefas de coleta.

Estrutura de uma tarefa em `<out>/tasks/<task_id>/`:
    .lock                         trava exclusiva do worker (contém o pid)
    parts/s<fluxo>_b<bloco>.npz    blocos gravados incrementalmente
    history.npz                   campos empilhados (S, T, ...)
    episodes.json                 retornos por fluxo e episódio
    metadata.json                 TaskMetadata

Os .npz são comprimidos (deflate) e gravados fatia a fatia, então montar
history.npz ocupa a memória de um fluxo, não a da tarefa inteira.
"""

import os
import shutil
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson
import structlog

from app.core.exceptions import TaskLockedError
from app.schemas.common import dumps
from app.schemas.manifest import TaskMetadata

logger = structlog.get_logger()

# Data fixa nas entradas zip para que o mesmo conteúdo gere os mesmos bytes
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)

COMPLETION_FILES = ("history.npz", "episodes.json", "metadata.json")


class NpzWriter:
    """
    Grava um .npz determinístico campo a campo, em fatias ao longo do primeiro eixo.

    O arquivo só aparece no destino ao sair do contexto sem erro.
    """

    def __init__(self, path: Union[str, Path], compression: int = zipfile.ZIP_DEFLATED):
        self.path = Path(path)
        self.compression = compression
        self._tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        self._archive: Optional[zipfile.ZipFile] = None

    def __enter__(self) -> "NpzWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._archive = zipfile.ZipFile(self._tmp, "w")
        return self

    def __exit__(self, exc_type, exc, tb):
        self._archive.close()
        self._archive = None
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            self._tmp.unlink(missing_ok=True)
        return False

    def write_field(
        self,
        name: str,
        dtype: np.dtype,
        shape: Sequence[int],
        pieces: Iterable[np.ndarray],
    ) -> None:
        """
        Grava `name.npy` com a forma final `shape`, consumindo uma fatia por vez.

        Raises:
            ValueError: Fatia com dtype ou forma divergente, ou total de linhas != shape[0]
        """
        dtype, shape = np.dtype(dtype), tuple(int(n) for n in shape)
        if not shape:
            raise ValueError(f"Campo {name}: arrays 0-d não são suportados")
        info = zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_EPOCH)
        info.external_attr = 0o644 << 16
        info.compress_type = self.compression
        rows = 0
        with self._archive.open(info, "w", force_zip64=True) as fh:
            header = {"descr": np.lib.format.dtype_to_descr(dtype), "fortran_order": False, "shape": shape}
            np.lib.format.write_array_header_1_0(fh, header)
            for piece in pieces:
                piece = np.ascontiguousarray(piece)
                if piece.dtype != dtype or piece.shape[1:] != shape[1:]:
                    raise ValueError(
                        f"Campo {name}: fatia {piece.dtype}{piece.shape}, esperado {dtype}(n,)+{shape[1:]}"
                    )
                rows += len(piece)
                fh.write(piece.tobytes())
        if rows != shape[0]:
            raise ValueError(f"Campo {name}: {rows} linhas gravadas, esperado {shape[0]}")


def save_npz(path: Union[str, Path], arrays: Dict[str, np.ndarray]) -> None:
    """Grava um .npz determinístico (sem carimbo de tempo) de forma atômica."""
    with NpzWriter(path) as writer:
        for name in sorted(arrays):
            array = arrays[name]
            writer.write_field(name, array.dtype, array.shape, [array])


def load_npz(path: Union[str, Path], names: Optional[Sequence[str]] = None) -> Dict[str, np.ndarray]:
    with np.load(path, allow_pickle=False) as data:
        return {name: data[name] for name in (names if names is not None else data.files)}


@dataclass
class _NpyEntry:
    fh: IO[bytes]
    offset: int
    shape: Tuple[int, ...]
    dtype: np.dtype

    @property
    def row_bytes(self) -> int:
        return int(np.prod(self.shape[1:], dtype=np.int64)) * self.dtype.itemsize


class NpzRowReader:
    """
    Lê linhas avulsas (primeiro eixo) de um .npz sem carregar os arrays inteiros.

    Ler linhas em ordem crescente só descomprime cada entrada uma vez; voltar
    atrás recomeça a descompressão da entrada.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._archive = zipfile.ZipFile(self.path)
        self._entries: Dict[str, _NpyEntry] = {}
        try:
            for info in self._archive.infolist():
                fh = self._archive.open(info)
                version = np.lib.format.read_magic(fh)
                if version == (1, 0):
                    shape, fortran, dtype = np.lib.format.read_array_header_1_0(fh)
                else:
                    shape, fortran, dtype = np.lib.format.read_array_header_2_0(fh)
                if fortran or not shape:
                    raise ValueError(f"{self.path}:{info.filename} não é um array C com eixo de linhas")
                self._entries[info.filename[: -len(".npy")]] = _NpyEntry(fh, fh.tell(), shape, dtype)
        except Exception:
            self.close()
            raise

    @property
    def names(self) -> List[str]:
        return sorted(self._entries)

    def shape(self, name: str) -> Tuple[int, ...]:
        return self._entries[name].shape

    def dtype(self, name: str) -> np.dtype:
        return self._entries[name].dtype

    def __len__(self) -> int:
        return min((e.shape[0] for e in self._entries.values()), default=0)

    def row(self, name: str, index: int) -> np.ndarray:
        entry = self._entries[name]
        if not 0 <= index < entry.shape[0]:
            raise IndexError(f"Linha {index} fora de [0, {entry.shape[0]}) em {name}")
        size = entry.row_bytes
        entry.fh.seek(entry.offset + index * size)
        data = entry.fh.read(size)
        if len(data) != size:
            raise ValueError(f"{self.path}:{name} truncado na linha {index}")
        return np.frombuffer(data, dtype=entry.dtype).reshape(entry.shape[1:])

    def rows(self, index: int) -> Dict[str, np.ndarray]:
        return {name: self.row(name, index) for name in self.names}

    def close(self) -> None:
        for entry in self._entries.values():
            entry.fh.close()
        self._entries.clear()
        self._archive.close()

    def __enter__(self) -> "NpzRowReader":
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_json(path: Union[str, Path], obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(dumps(obj, indent=True))
    os.replace(tmp, path)


def pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def lock_holder(path: Path) -> Optional[int]:
    """Pid gravado na trava, ou None se ilegível."""
    try:
        pid = int(path.read_text().strip())
    except (OSError, ValueError):
        return None
    return pid if pid > 0 else None


class TaskLock:
    """
    Trava por arquivo criado com O_EXCL; liberada ao sair do contexto.

    Uma trava cujo pid não existe mais (worker morto) é removida e
    adquirida de novo uma vez. Conteúdo ilegível conta como trava ocupada.
    """

    def __init__(self, path: Path, task_id: str):
        self.path = path
        self.task_id = task_id
        self._held = False

    def _create(self) -> int:
        return os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)

    def _reclaim_stale(self) -> bool:
        pid = lock_holder(self.path)
        if pid is None or pid_alive(pid):
            return False
        logger.warning("stale_lock_removed", task_id=self.task_id, pid=pid, path=str(self.path))
        self.path.unlink(missing_ok=True)
        return True

    def __enter__(self) -> "TaskLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = self._create()
        except FileExistsError as e:
            if not self._reclaim_stale():
                raise TaskLockedError(f"Tarefa {self.task_id} travada por outro worker ({self.path})") from e
            try:
                fd = self._create()
            except FileExistsError as again:
                raise TaskLockedError(f"Tarefa {self.task_id} travada por outro worker ({self.path})") from again
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        self._held = True
        return self

    def __exit__(self, exc_type, exc, tb):
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False
        return False


class ArtifactRepository:
    """
    Acesso aos diretórios de tarefas de coleta.

    Attributes:
        root: Diretório de saída (`--out`)
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def task_dir(self, task_id: str) -> Path:
        return self.root / "tasks" / task_id

    def parts_dir(self, task_id: str) -> Path:
        return self.task_dir(task_id) / "parts"

    def lock(self, task_id: str) -> TaskLock:
        return TaskLock(self.task_dir(task_id) / ".lock", task_id)

    def is_locked(self, task_id: str) -> bool:
        return (self.task_dir(task_id) / ".lock").exists()

    def is_complete(self, task_id: str) -> bool:
        """Concluída se e somente se os três artefatos finais existem e são legíveis."""
        base = self.task_dir(task_id)
        if not all((base / name).exists() for name in COMPLETION_FILES):
            return False
        try:
            TaskMetadata.model_validate(orjson.loads((base / "metadata.json").read_bytes()))
            orjson.loads((base / "episodes.json").read_bytes())
            with zipfile.ZipFile(base / "history.npz") as archive:
                return archive.testzip() is None
        except Exception as e:
            logger.warning("task_artifacts_invalid", task_id=task_id, error=str(e))
            return False

    # ------------------------------------------------------------------
    # Partes incrementais
    # ------------------------------------------------------------------

    def part_path(self, task_id: str, stream: int, block: int) -> Path:
        return self.parts_dir(task_id) / f"s{stream:05d}_b{block:04d}.npz"

    def has_part(self, task_id: str, stream: int, block: int) -> bool:
        return self.part_path(task_id, stream, block).exists()

    def write_part(self, task_id: str, stream: int, block: int, arrays: Dict[str, np.ndarray]) -> Path:
        path = self.part_path(task_id, stream, block)
        save_npz(path, arrays)
        logger.debug("part_flushed", task_id=task_id, stream=stream, block=block)
        return path

    def read_part(
        self, task_id: str, stream: int, block: int, names: Optional[Sequence[str]] = None
    ) -> Dict[str, np.ndarray]:
        return load_npz(self.part_path(task_id, stream, block), names)

    def read_stream(self, task_id: str, stream: int, num_blocks: int, name: str) -> np.ndarray:
        """Um campo de um fluxo, concatenado a partir das suas partes."""
        return np.concatenate(
            [self.read_part(task_id, stream, b, [name])[name] for b in range(num_blocks)]
        )

    def clear_parts(self, task_id: str) -> None:
        shutil.rmtree(self.parts_dir(task_id), ignore_errors=True)

    # ------------------------------------------------------------------
    # Artefatos finais
    # ------------------------------------------------------------------

    def assemble_history(
        self,
        task_id: str,
        names: Sequence[str],
        num_streams: int,
        num_blocks: int,
    ) -> Dict[str, Tuple[int, ...]]:
        """
        Monta history.npz a partir das partes, um campo e um fluxo por vez.

        Returns:
            Forma (S, T, ...) de cada campo gravado

        Raises:
            ValueError: Partes de fluxos diferentes com tamanhos divergentes
        """
        layouts = {}
        for name in names:
            lengths, tail, dtype = 0, None, None
            for b in range(num_blocks):
                with NpzRowReader(self.part_path(task_id, 0, b)) as part:
                    shape = part.shape(name)
                    dtype = part.dtype(name)
                lengths += shape[0]
                tail = shape[1:]
            layouts[name] = (dtype, (num_streams, lengths) + tail)

        with NpzWriter(self.task_dir(task_id) / "history.npz") as writer:
            for name in sorted(names):
                dtype, shape = layouts[name]
                pieces = (
                    self.read_stream(task_id, s, num_blocks, name)[None]
                    for s in range(num_streams)
                )
                writer.write_field(name, dtype, shape, pieces)
        logger.debug("history_assembled", task_id=task_id, streams=num_streams, fields=len(names))
        return {name: shape for name, (_, shape) in layouts.items()}

    def write_final(
        self,
        task_id: str,
        episodes: List[List[dict]],
        metadata: TaskMetadata,
    ) -> None:
        """Grava os artefatos json após history.npz; metadata.json por último marca a conclusão."""
        base = self.task_dir(task_id)
        write_json(base / "episodes.json", {"streams": episodes})
        write_json(base / "metadata.json", metadata.model_dump(mode="json"))
        self.clear_parts(task_id)
        logger.info("task_artifacts_written", task_id=task_id, streams=len(episodes))

    def open_history(self, task_id: str) -> NpzRowReader:
        """Leitor de fluxos avulsos de history.npz."""
        return NpzRowReader(self.task_dir(task_id) / "history.npz")

    def read_history(self, task_id: str) -> Dict[str, np.ndarray]:
        return load_npz(self.task_dir(task_id) / "history.npz")

    def read_episodes(self, task_id: str) -> List[List[dict]]:
        return orjson.loads((self.task_dir(task_id) / "episodes.json").read_bytes())["streams"]

    def read_metadata(self, task_id: str) -> TaskMetadata:
        return TaskMetadata.model_validate(orjson.loads((self.task_dir(task_id) / "metadata.json").read_bytes()))

    def completed_tasks(self) -> List[str]:
        tasks_root = self.root / "tasks"
        if not tasks_root.exists():
            return []
        return sorted(p.name for p in tasks_root.iterdir() if p.is_dir() and self.is_complete(p.name))

    def metadata_or_none(self, task_id: str) -> Optional[TaskMetadata]:
        return self.read_metadata(task_id) if self.is_complete(task_id) else None
