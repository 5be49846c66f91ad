"""
Schemas dos manifestos JSONL (coleta e benchmark) e do log de falhas.
"""

from datetime import datetime, timezone
from typing import Optional

from pydantic import Field, model_validator

from app.schemas.common import BaseSchema
from app.schemas.layout import Split, Track
from app.schemas.teammate import TeammateSpec

EXTERNAL_PREFIX = "external:"


def is_external_ref(ref: Optional[str]) -> bool:
    return ref is not None and ref.startswith(EXTERNAL_PREFIX)


class _TeammateRef(BaseSchema):
    """Parceiro roteirizado (spec) ou política externa ("external:<endpoint>")."""

    teammate_spec: Optional[TeammateSpec] = Field(default=None, description="Parceiro roteirizado")
    teammate_ref: Optional[str] = Field(default=None, description="Referência externa")

    @model_validator(mode="after")
    def validate_teammate(self):
        if (self.teammate_spec is None) == (self.teammate_ref is None):
            raise ValueError("Informe exatamente um entre teammate_spec e teammate_ref")
        if self.teammate_ref is not None and not is_external_ref(self.teammate_ref):
            raise ValueError(f"Referência de parceiro inválida: {self.teammate_ref}")
        return self

    @property
    def teammate_family(self) -> str:
        return self.teammate_spec.family.value if self.teammate_spec else "external"

    @property
    def teammate_kind(self) -> str:
        return self.teammate_spec.kind if self.teammate_spec else self.teammate_ref


class CollectTask(_TeammateRef):
    """Uma linha do manifesto de coleta."""

    task_id: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.\-]+$")
    layout: str
    split: Split = "train"
    track: Track = "teammate"
    seed: int = Field(..., ge=0, lt=2**64)


class BenchmarkEntry(_TeammateRef):
    """Uma linha do manifesto de avaliação."""

    track: Track
    split: Split = "test"
    layout: str
    seed: int = Field(..., ge=0, lt=2**64)


class FailureRecord(BaseSchema):
    """Registro do log de falhas da coleta."""

    task_id: str
    error: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    attempts: int = 1
    traceback: Optional[str] = None


class TaskMetadata(BaseSchema):
    """metadata.json de uma tarefa concluída (sem carimbo de tempo)."""

    task_id: str
    layout: str
    split: Split
    track: Track
    seed: int
    teammate_family: str
    teammate_kind: str
    spec_string: Optional[str] = None
    num_streams: int
    episodes_per_stream: int
    recorded_steps_per_episode: int
    T: int
    obs_shape: list
    ego: str
