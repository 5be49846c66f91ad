"""
Políticas do agente ego usadas na coleta e na avaliação.

Toda política recebe a observação do ego e o estado global; apenas as
políticas roteirizadas (oráculos) leem o estado.
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import decode_observation
from app.core.kitchen.rng import NamePart, make_rng
from app.core.kitchen.types import N_ACTIONS, Action, GameState
from app.core.teammates.common import PolicyContext
from app.core.teammates.h4_utility_greedy import DEFAULT_H4, act_h4
from app.core.teammates.memory import PolicyMemory
from app.core.teammates.nav import compute_nav_tables
from app.core.teammates.params import H4Params
from app.core.teammates.policy import ScriptedTeammate
from app.schemas.teammate import TeammateSpec

EGO_INDEX = 0


class EgoPolicy(ABC):
    """Interface do ego: observação (e estado) entra, ação sai."""

    name = "ego"

    def reset(self, episode: int) -> None:
        """Início de episódio."""

    @abstractmethod
    def act(self, obs: np.ndarray, state: GameState) -> int:
        ...

    def observe(self, obs, action: int, reward: float, next_obs, done: bool, teammate_action: int) -> None:
        """Retorno do ambiente após cada passo (políticas condicionadas ao histórico)."""

    def close(self) -> None:
        """Libera recursos externos."""


class RandomEgo(EgoPolicy):
    """Uniforme sobre as seis ações."""

    name = "random"

    def __init__(self, seed: int, stream: Tuple[NamePart, ...] = ()):
        self.seed = seed
        self.stream = tuple(stream)
        self.rng = make_rng(seed, *self.stream, "ego", 0)

    def reset(self, episode: int) -> None:
        self.rng = make_rng(self.seed, *self.stream, "ego", episode)

    def act(self, obs: np.ndarray, state: GameState) -> int:
        return int(self.rng.integers(N_ACTIONS))


class StayEgo(EgoPolicy):
    """Fica parado para sempre (linha de base para famílias autônomas)."""

    name = "stay"

    def act(self, obs: np.ndarray, state: GameState) -> int:
        return int(Action.STAY)


class ScriptedEgo(EgoPolicy):
    """Família H roteirizada no papel de ego (acesso privilegiado ao estado)."""

    name = "scripted"

    def __init__(self, spec: TeammateSpec, layout: LayoutSpec, stream: Tuple[NamePart, ...] = ()):
        self.policy = ScriptedTeammate(spec, layout, agent_index=EGO_INDEX)
        self.stream = ("ego",) + tuple(stream)

    def reset(self, episode: int) -> None:
        self.policy.reset(episode, *self.stream)

    def act(self, obs: np.ndarray, state: GameState) -> int:
        return int(self.policy.act(state))


class AnnealedExpertEgo(EgoPolicy):
    """
    Mistura H4 (pesos padrão) com ações aleatórias.

    No episódio e, com probabilidade ε(e) a ação é uniforme; caso contrário é a
    do especialista. O especialista é sempre consultado para manter a memória.
    """

    name = "annealed"

    def __init__(
        self,
        layout: LayoutSpec,
        seed: int,
        schedule,
        stream: Tuple[NamePart, ...] = (),
        params: H4Params = DEFAULT_H4,
    ):
        self.ctx = PolicyContext.build(layout, EGO_INDEX)
        self.seed = seed
        self.schedule = schedule
        self.stream = tuple(stream)
        self.params = params
        self.memory = PolicyMemory()
        self.epsilon = schedule.epsilon(0)
        self.rng = make_rng(seed, *self.stream, "ego", 0)

    def reset(self, episode: int) -> None:
        self.memory = PolicyMemory()
        self.epsilon = self.schedule.epsilon(episode)
        self.rng = make_rng(self.seed, *self.stream, "ego", episode)

    def act(self, obs: np.ndarray, state: GameState) -> int:
        expert = int(act_h4(state, self.params, self.memory, self.rng, self.ctx))
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(N_ACTIONS))
        return expert


class ObservationH4Expert:
    """
    Especialista H4 que decide só a partir da observação.

    Reconstrói a janela 5×5 e roda H4 com memória nova; tabelas de navegação
    são reaproveitadas entre janelas iguais.
    """

    def __init__(self, layout: LayoutSpec, params: H4Params = DEFAULT_H4):
        self.layout = layout
        self.params = params
        self.rng = make_rng(0, "relabel")
        self._contexts: Dict[bytes, PolicyContext] = {}
        self._answers: Dict[bytes, int] = {}

    def _context(self, local: LayoutSpec) -> PolicyContext:
        key = local.tiles.tobytes() + local.dispenser_index.tobytes()
        ctx = self._contexts.get(key)
        if ctx is None:
            ctx = PolicyContext(layout=local, nav=compute_nav_tables(local), agent_index=EGO_INDEX)
            self._contexts[key] = ctx
        return ctx

    def __call__(self, obs: np.ndarray) -> int:
        key = obs.tobytes()
        answer = self._answers.get(key)
        if answer is None:
            local, state, _ = decode_observation(obs, self.layout)
            answer = int(act_h4(state, self.params, PolicyMemory(), self.rng, self._context(local)))
            self._answers[key] = answer
        return answer


def make_ego(kind: str, layout: LayoutSpec, seed: int, stream=(), schedule=None,
             spec: Optional[TeammateSpec] = None) -> EgoPolicy:
    """Fábrica de egos locais ("random", "stay", "annealed", "scripted")."""
    if kind == "random":
        return RandomEgo(seed, stream)
    if kind == "stay":
        return StayEgo()
    if kind == "annealed":
        if schedule is None:
            raise ValueError("Ego 'annealed' exige um AnnealSchedule")
        return AnnealedExpertEgo(layout, seed, schedule, stream)
    if kind == "scripted":
        if spec is None:
            raise ValueError("Ego 'scripted' exige um TeammateSpec")
        return ScriptedEgo(spec, layout, stream)
    raise ValueError(f"Ego desconhecido: {kind}")
