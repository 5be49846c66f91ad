"""
Schemas do índice do armazenamento de históricos.
"""

from typing import List

from pydantic import Field, field_validator

from app.core.kitchen.types import N_ACTIONS
from app.schemas.common import BaseSchema
from app.schemas.layout import Split, Track


class DatasetIndexEntry(BaseSchema):
    """Uma linha de index.jsonl: os campos de localização e de conteúdo de um histórico."""

    history_id: int = Field(..., ge=0)
    task_id: str
    env_idx: int = Field(..., ge=0, description="Fluxo de origem dentro da tarefa")
    T: int = Field(..., ge=0, description="Passos do histórico")
    obs_shape: List[int] = Field(..., min_length=3, max_length=3)
    action_dim: int = N_ACTIONS
    track: Track
    split: Split
    layout: str
    teammate_family: str
    teammate_kind: str
    h5_group: str
    has_teammate_actions: bool
    has_expert_actions: bool

    @field_validator("action_dim")
    @classmethod
    def validate_action_dim(cls, v: int) -> int:
        if v != N_ACTIONS:
            raise ValueError(f"action_dim deve ser {N_ACTIONS}")
        return v


def history_group(history_id: int) -> str:
    """Caminho lógico do grupo de um histórico."""
    return f"/histories/{history_id:06d}"


class DatasetStats(BaseSchema):
    """Estatísticas do `dataset inspect`."""

    histories: int = 0
    transitions: int = 0
    min_T: int = 0
    max_T: int = 0
    layouts: int = 0
    teammates: int = 0
    with_expert_actions: int = 0
    disk_bytes: int = 0
