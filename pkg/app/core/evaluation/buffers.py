"""
Buffers de contexto para políticas condicionadas ao histórico.

StepContextBuffer recebe uma transição a cada passo; EpisodeContextBuffer só
expõe transições de episódios já encerrados.
"""

from typing import Dict, Optional, Tuple

import numpy as np

FieldSpec = Dict[str, Tuple[Tuple[int, ...], np.dtype]]


class TransitionRing:
    """
    Anel de capacidade fixa sobre arrays numpy, um por campo.

    Inserção O(1); ao encher, descarta sempre o mais antigo.
    """

    def __init__(self, capacity: int, fields: FieldSpec):
        if capacity <= 0:
            raise ValueError("capacity deve ser > 0")
        self.capacity = int(capacity)
        self._data = {
            name: np.zeros((self.capacity,) + tuple(shape), dtype=dtype)
            for name, (shape, dtype) in fields.items()
        }
        self._head = 0  # próxima posição de escrita
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def field_names(self) -> Tuple[str, ...]:
        return tuple(self._data)

    def push(self, **values) -> None:
        for name, array in self._data.items():
            array[self._head] = values[name]
        self._head = (self._head + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def extend(self, values: Dict[str, np.ndarray]) -> None:
        """Acrescenta m transições de uma vez (equivale a m chamadas de push)."""
        m = len(next(iter(values.values())))
        if m == 0:
            return
        keep = min(m, self.capacity)
        positions = (self._head + (m - keep) + np.arange(keep)) % self.capacity
        for name, array in self._data.items():
            array[positions] = np.asarray(values[name])[m - keep:]
        self._head = (self._head + m) % self.capacity
        self._size = min(self._size + m, self.capacity)

    def ordered(self) -> Dict[str, np.ndarray]:
        """Cópia do conteúdo, do mais antigo ao mais novo."""
        positions = (self._head - self._size + np.arange(self._size)) % self.capacity
        return {name: array[positions] for name, array in self._data.items()}

    def clear(self) -> None:
        self._head = 0
        self._size = 0


class StepContextBuffer:
    """
    Contexto por passo: (obs, ação anterior, recompensa anterior[, ação anterior do parceiro]).

    Attributes:
        capacity: K transições
        with_teammate: Mantém prev_teammate_action
    """

    def __init__(self, capacity: int, obs_shape: Tuple[int, ...], with_teammate: bool = False):
        fields: FieldSpec = {
            "obs": (tuple(obs_shape), np.dtype("<f4")),
            "prev_action": ((), np.dtype("<i4")),
            "prev_reward": ((), np.dtype("<f4")),
        }
        if with_teammate:
            fields["prev_teammate_action"] = ((), np.dtype("<i4"))
        self.with_teammate = with_teammate
        self.ring = TransitionRing(capacity, fields)

    @property
    def capacity(self) -> int:
        return self.ring.capacity

    def __len__(self) -> int:
        return len(self.ring)

    def push_step(
        self,
        obs: np.ndarray,
        prev_action: int,
        prev_reward: float,
        prev_teammate_action: Optional[int] = None,
    ) -> None:
        values = {"obs": obs, "prev_action": prev_action, "prev_reward": prev_reward}
        if self.with_teammate:
            values["prev_teammate_action"] = prev_teammate_action if prev_teammate_action is not None else 0
        self.ring.push(**values)

    def snapshot(self) -> Dict[str, np.ndarray]:
        return self.ring.ordered()

    def clear(self) -> None:
        self.ring.clear()


class EpisodeContextBuffer:
    """
    Contexto por episódio: acumula o episódio corrente e só o publica no
    anel em `commit_episode`.
    """

    def __init__(self, capacity: int, obs_shape: Tuple[int, ...], with_teammate: bool = False):
        fields: FieldSpec = {
            "obs": (tuple(obs_shape), np.dtype("<f4")),
            "action": ((), np.dtype("<i4")),
            "next_obs": (tuple(obs_shape), np.dtype("<f4")),
            "reward": ((), np.dtype("<f4")),
        }
        if with_teammate:
            fields["teammate_action"] = ((), np.dtype("<i4"))
        self.with_teammate = with_teammate
        self.ring = TransitionRing(capacity, fields)
        self._current = {name: [] for name in fields}

    @property
    def capacity(self) -> int:
        return self.ring.capacity

    def __len__(self) -> int:
        return len(self.ring)

    @property
    def pending(self) -> int:
        return len(self._current["action"])

    def add_transition(
        self,
        obs: np.ndarray,
        action: int,
        next_obs: np.ndarray,
        reward: float,
        teammate_action: Optional[int] = None,
    ) -> None:
        self._current["obs"].append(np.asarray(obs, dtype=np.float32))
        self._current["action"].append(int(action))
        self._current["next_obs"].append(np.asarray(next_obs, dtype=np.float32))
        self._current["reward"].append(float(reward))
        if self.with_teammate:
            self._current["teammate_action"].append(int(teammate_action or 0))

    def commit_episode(self) -> None:
        """Move o episódio corrente para o anel; sem efeito se vazio."""
        if not self.pending:
            return
        self.ring.extend({name: np.asarray(values) for name, values in self._current.items()})
        for values in self._current.values():
            values.clear()

    def snapshot(self) -> Dict[str, np.ndarray]:
        return self.ring.ordered()

    def clear(self) -> None:
        self.ring.clear()
        for values in self._current.values():
            values.clear()


def push_step(buf: StepContextBuffer, transition: Dict) -> None:
    buf.push_step(**transition)


def commit_episode(buf: EpisodeContextBuffer) -> None:
    buf.commit_episode()
