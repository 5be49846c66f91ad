"""
Serviço de geração de parceiros.
"""

from pathlib import Path
from typing import List, Sequence, Union

import structlog

from app.core.teammates.params import Family
from app.core.teammates.sampling import SPLITS, sample_population
from app.repositories.base import JsonlRepository
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()


def parse_families(values: Sequence[str]) -> List[Family]:
    """
    Converte rótulos ("H1".."H4" ou "all") em famílias.

    Raises:
        ValueError: Família desconhecida
    """
    if not values or "all" in values:
        return list(Family)
    families = []
    for value in values:
        try:
            families.append(Family(value.upper()))
        except ValueError as e:
            raise ValueError(f"Família desconhecida: {value} (use H1..H4 ou all)") from e
    return families


class TeammateService:
    """Amostra populações de parceiros e as grava em JSONL."""

    def sample(
        self,
        families: Sequence[Family],
        split: str,
        count: int,
        prefix: str = "aht",
    ) -> List[TeammateSpec]:
        """
        Raises:
            ValueError: Partição inválida ou count negativo
        """
        if split not in SPLITS:
            raise ValueError(f"Partição inválida: {split} (use {', '.join(SPLITS)})")
        if count < 0:
            raise ValueError(f"count deve ser ≥ 0, recebido {count}")
        return sample_population(families, split, count, prefix=prefix)

    def write(self, specs: Sequence[TeammateSpec], path: Union[str, Path]) -> Path:
        repo = JsonlRepository(TeammateSpec, path)
        repo.write_all(specs)
        logger.info("teammates_written", path=str(repo.path), count=len(specs))
        return repo.path

    def read(self, path: Union[str, Path]) -> List[TeammateSpec]:
        return JsonlRepository(TeammateSpec, path).get_all()
