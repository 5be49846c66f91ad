"""
Histórico de aprendizado: séries temporais de um fluxo de coleta.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np

from app.core.kitchen.types import N_ACTIONS

# Ordem e dtypes canônicos dos campos armazenados
FIELD_DTYPES: Dict[str, np.dtype] = {
    "obs": np.dtype("<f4"),
    "actions": np.dtype("<i4"),
    "rewards": np.dtype("<f4"),
    "dones": np.dtype("u1"),
    "teammate_actions": np.dtype("<i4"),
    "expert_actions": np.dtype("<i4"),
}
REQUIRED_FIELDS = ("obs", "actions", "rewards", "dones")
OPTIONAL_FIELDS = ("teammate_actions", "expert_actions")


@dataclass
class LearningHistory:
    """
    Trajetória multi-episódio do agente ego contra um parceiro fixo.

    Attributes:
        obs: (T, 5, 5, C) float32
        actions: (T,) int32 em 0..5
        rewards: (T,) float32 (recompensa esparsa)
        dones: (T,) uint8, 1 no último passo registrado de cada episódio
        teammate_actions: (T,) int32 ou None
        expert_actions: (T,) int32 ou None
    """

    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    teammate_actions: Optional[np.ndarray] = None
    expert_actions: Optional[np.ndarray] = None
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in REQUIRED_FIELDS + OPTIONAL_FIELDS:
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, np.ascontiguousarray(value, dtype=FIELD_DTYPES[name]))
        self.validate()

    def validate(self):
        T = len(self.actions)
        if self.obs.ndim != 4 or self.obs.shape[0] != T:
            raise ValueError(f"obs deve ter forma (T, 5, 5, C), recebido {self.obs.shape}")
        for name in ("rewards", "dones") + OPTIONAL_FIELDS:
            value = getattr(self, name)
            if value is not None and value.shape != (T,):
                raise ValueError(f"Campo {name} com forma {value.shape}, esperado ({T},)")
        for name in ("actions", "teammate_actions", "expert_actions"):
            value = getattr(self, name)
            if value is not None and len(value) and (value.min() < 0 or value.max() >= N_ACTIONS):
                raise ValueError(f"Campo {name} com ação fora de 0..{N_ACTIONS - 1}")

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def obs_shape(self) -> tuple:
        return tuple(self.obs.shape[1:])

    def fields(self) -> Dict[str, np.ndarray]:
        """Campos presentes, na ordem canônica."""
        return {
            name: getattr(self, name)
            for name in REQUIRED_FIELDS + OPTIONAL_FIELDS
            if getattr(self, name) is not None
        }

    def slice(self, t0: int, t1: int) -> "LearningHistory":
        values = {name: array[t0:t1] for name, array in self.fields().items()}
        return LearningHistory(**values, meta=dict(self.meta))

    def with_expert(self, expert_actions: np.ndarray) -> "LearningHistory":
        return replace(self, expert_actions=expert_actions)

    def episode_returns(self) -> np.ndarray:
        """Retorno esparso de cada episódio delimitado por `dones`."""
        ends = np.flatnonzero(self.dones)
        if not len(ends):
            return np.zeros(0, dtype=np.float64)
        cumulative = np.concatenate([[0.0], np.cumsum(self.rewards, dtype=np.float64)])
        starts = np.concatenate([[0], ends[:-1] + 1])
        return cumulative[ends + 1] - cumulative[starts]

    def equals(self, other: "LearningHistory") -> bool:
        mine, theirs = self.fields(), other.fields()
        return mine.keys() == theirs.keys() and all(
            np.array_equal(mine[name], theirs[name]) for name in mine
        )

    @classmethod
    def concat(cls, parts: Sequence["LearningHistory"]) -> "LearningHistory":
        if not parts:
            raise ValueError("Nenhuma parte para concatenar")
        names = parts[0].fields().keys()
        values = {name: np.concatenate([getattr(p, name) for p in parts]) for name in names}
        return cls(**values, meta=dict(parts[0].meta))

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "LearningHistory":
        return cls(**{name: arrays[name] for name in REQUIRED_FIELDS + OPTIONAL_FIELDS if name in arrays})
