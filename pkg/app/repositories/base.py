"""
Repositório base sobre arquivos JSONL.
"""

import os
from pathlib import Path
from typing import Generic, Iterable, Iterator, List, Type, TypeVar, Union

import orjson
import structlog
from pydantic import BaseModel, ValidationError

from app.core.exceptions import ManifestError
from app.schemas.common import dumps

logger = structlog.get_logger()

SchemaType = TypeVar("SchemaType", bound=BaseModel)


class JsonlRepository(Generic[SchemaType]):
    """
    Repositório de registros JSONL validados por um schema.

    Attributes:
        schema: Classe pydantic de cada linha
        path: Arquivo JSONL
    """

    def __init__(self, schema: Type[SchemaType], path: Union[str, Path]):
        """
        Inicializa o repositório.

        Args:
            schema: Classe do schema
            path: Caminho do arquivo
        """
        self.schema = schema
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def iter_all(self) -> Iterator[SchemaType]:
        """
        Percorre as linhas do arquivo.

        Raises:
            ManifestError: Linha inválida (com o número da linha)
        """
        if not self.path.exists():
            return
        with self.path.open("rb") as fh:
            for number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield self.schema.model_validate(orjson.loads(line))
                except (orjson.JSONDecodeError, ValidationError) as e:
                    raise ManifestError(f"{self.path}:{number}: {e}") from e

    def get_all(self) -> List[SchemaType]:
        return list(self.iter_all())

    def count(self) -> int:
        return sum(1 for _ in self.iter_all())

    def append(self, record: SchemaType) -> None:
        """Acrescenta uma linha e força a gravação em disco."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("ab") as fh:
            fh.write(dumps(record.model_dump(mode="json")) + b"\n")
            fh.flush()
            os.fsync(fh.fileno())

    def write_all(self, records: Iterable[SchemaType]) -> int:
        """Reescreve o arquivo inteiro de forma atômica."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        count = 0
        with tmp.open("wb") as fh:
            for record in records:
                fh.write(dumps(record.model_dump(mode="json")) + b"\n")
                count += 1
        os.replace(tmp, self.path)
        logger.debug("jsonl_written", path=str(self.path), records=count)
        return count
