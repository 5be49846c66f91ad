"""
Adaptadores de ego e de parceiro para a avaliação.
"""

from typing import Optional, Tuple

import numpy as np
import structlog

from app.core.evaluation.buffers import EpisodeContextBuffer, StepContextBuffer
from app.core.evaluation.protocol import PolicyClient
from app.core.history.egos import AnnealedExpertEgo, EgoPolicy, RandomEgo, StayEgo
from app.core.history.rollout import AnnealSchedule
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import VIEW_SIZE, observe
from app.core.kitchen.rng import NamePart
from app.core.kitchen.types import N_ACTIONS, GameState
from app.schemas.manifest import EXTERNAL_PREFIX

logger = structlog.get_logger()

BUFFER_KINDS = ("step", "episode")
EGO_KINDS = ("random", "stay", "h4")


class GeneratorEgo(EgoPolicy):
    """Uniforme sobre as seis ações usando um gerador fornecido."""

    name = "random"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def act(self, obs: np.ndarray, state: GameState) -> int:
        return int(self.rng.integers(N_ACTIONS))


def random_ego(rng: np.random.Generator) -> EgoPolicy:
    return GeneratorEgo(rng)


def expert_ego(layout: LayoutSpec, seed: int, stream: Tuple[NamePart, ...] = ()) -> EgoPolicy:
    """H4 com pesos padrão no papel de ego (ε ≡ 0)."""
    return AnnealedExpertEgo(layout, seed, AnnealSchedule(n_episodes=1, constant=0.0), stream=stream)


class ExternalEgo(EgoPolicy):
    """
    Ego servido por um processo externo.

    Mantém o buffer de contexto da instância e o envia junto com a observação
    corrente a cada consulta. O buffer é criado vazio por instância e
    atravessa os episódios.
    """

    name = "external"

    def __init__(
        self,
        client: PolicyClient,
        obs_shape: Tuple[int, ...],
        context_k: int = 2000,
        buffer: str = "step",
        with_teammate: bool = False,
    ):
        if buffer not in BUFFER_KINDS:
            raise ValueError(f"Tipo de buffer inválido: {buffer}")
        self.client = client
        self.buffer_kind = buffer
        if buffer == "step":
            self.buffer = StepContextBuffer(context_k, obs_shape, with_teammate)
        else:
            self.buffer = EpisodeContextBuffer(context_k, obs_shape, with_teammate)
        self._prev = (0, 0.0, 0)

    def reset(self, episode: int) -> None:
        self.client.reset(episode)

    def act(self, obs: np.ndarray, state: GameState) -> int:
        if self.buffer_kind == "step":
            prev_action, prev_reward, prev_teammate = self._prev
            self.buffer.push_step(obs, prev_action, prev_reward, prev_teammate)
        return self.client.act(obs, self.buffer.snapshot())

    def observe(self, obs, action: int, reward: float, next_obs, done: bool, teammate_action: int) -> None:
        self._prev = (int(action), float(reward), int(teammate_action))
        if self.buffer_kind == "episode":
            self.buffer.add_transition(obs, action, next_obs, reward, teammate_action)
            if done:
                self.buffer.commit_episode()

    def close(self) -> None:
        self.client.close()


class ExternalTeammate:
    """Parceiro servido por um processo externo; recebe a própria observação."""

    family = "external"

    def __init__(self, client: PolicyClient, layout: LayoutSpec, agent_index: int = 1):
        self.client = client
        self.layout = layout
        self.agent_index = agent_index

    @classmethod
    def connect(
        cls,
        ref: str,
        layout: LayoutSpec,
        agent_index: int = 1,
        timeout_s: float = 30.0,
        attempts: int = 5,
    ) -> "ExternalTeammate":
        endpoint = ref[len(EXTERNAL_PREFIX):] if ref.startswith(EXTERNAL_PREFIX) else ref
        return cls(PolicyClient(endpoint, timeout_s=timeout_s, attempts=attempts), layout, agent_index)

    def reset(self, episode: int = 0, *stream) -> None:
        self.client.reset(episode, agent=self.agent_index)

    def act(self, state: GameState, rng: Optional[np.random.Generator] = None) -> int:
        obs = observe(state, self.agent_index, self.layout)
        return self.client.act(obs, agent=self.agent_index)

    def close(self) -> None:
        self.client.close()


def make_ego_adapter(
    kind: str,
    layout: LayoutSpec,
    seed: int,
    instance: int = 0,
    context_k: int = 2000,
    buffer: str = "step",
    with_teammate: bool = False,
    timeout_s: float = 30.0,
    attempts: int = 5,
) -> EgoPolicy:
    """
    Fábrica de egos de avaliação: "random", "stay", "h4" ou "external:<endpoint>".

    Raises:
        ValueError: Tipo desconhecido
        ExternalPolicyError: Endpoint externo inacessível
    """
    stream: Tuple[NamePart, ...] = ("eval", instance)
    if kind == "random":
        return RandomEgo(seed, stream)
    if kind == "stay":
        return StayEgo()
    if kind == "h4":
        return expert_ego(layout, seed, stream)
    if kind.startswith(EXTERNAL_PREFIX):
        client = PolicyClient(kind[len(EXTERNAL_PREFIX):], timeout_s=timeout_s, attempts=attempts)
        obs_shape = (VIEW_SIZE, VIEW_SIZE, layout.channels)
        return ExternalEgo(client, obs_shape, context_k=context_k, buffer=buffer, with_teammate=with_teammate)
    raise ValueError(f"Ego desconhecido: {kind} (use {', '.join(EGO_KINDS)} ou external:<endpoint>)")
