"""
Coleta de históricos de aprendizado por fluxo.

Cada episódio usa sub-fluxos de rng derivados de (seed da tarefa, fluxo,
episódio), então qualquer bloco de episódios pode ser gerado isoladamente e
a retomada a partir de partes salvas reproduz a coleta completa.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.history.egos import EgoPolicy
from app.core.history.history import LearningHistory
from app.core.kitchen.env import EnvConfig, KitchenEnv, shaping_coefficient
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import VIEW_SIZE
from app.core.kitchen.rng import NamePart
from app.core.teammates.policy import ScriptedTeammate

logger = structlog.get_logger()


class CollectorConfig(BaseModel):
    """Configuração da coleta (padrões da escala completa do benchmark)."""

    model_config = ConfigDict(frozen=True)

    num_streams: int = Field(default=1024, ge=1, description="Fluxos paralelos por tarefa")
    recorded_steps_per_episode: int = Field(default=100, ge=1, description="Prefixo registrado")
    episodes_per_stream: int = Field(default=146, ge=1, description="Episódios por fluxo")
    save_interval: int = Field(default=10, ge=1, description="Episódios entre gravações parciais")
    simulate_full_episodes: bool = Field(
        default=False, description="Simula o episódio até o fim mesmo sem registrar"
    )
    shaping_horizon: int = Field(default=15_000_000, gt=0, description="Passos até o shaping zerar")
    ego: str = Field(default="annealed", description="Ego da coleta: annealed ou random")

    @field_validator("ego")
    @classmethod
    def validate_ego(cls, v: str) -> str:
        if v not in ("annealed", "random"):
            raise ValueError(f"Ego de coleta inválido: {v}")
        return v

    @property
    def history_length(self) -> int:
        return self.episodes_per_stream * self.recorded_steps_per_episode


class AnnealSchedule(BaseModel):
    """
    ε por episódio, linear de 1 a 0 ao longo do fluxo, e α(t) do shaping.

    `constant` fixa ε (útil para egos puramente aleatórios ou especialistas).
    """

    model_config = ConfigDict(frozen=True)

    n_episodes: int = Field(..., ge=1)
    shaping_horizon: int = Field(default=15_000_000, gt=0)
    constant: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    def epsilon(self, episode: int) -> float:
        if self.constant is not None:
            return self.constant
        if self.n_episodes <= 1:
            return 1.0
        return max(0.0, 1.0 - episode / (self.n_episodes - 1))

    def alpha(self, t: int) -> float:
        return shaping_coefficient(t, self.shaping_horizon)


@dataclass(frozen=True)
class EpisodeRecord:
    """Resumo de um episódio: retorno esparso registrado e retorno de treino."""

    episode: int
    sparse_return: float
    training_return: float


def _steps_simulated(layout: LayoutSpec, cfg: CollectorConfig) -> int:
    if cfg.simulate_full_episodes:
        return layout.episode_length
    return cfg.recorded_steps_per_episode


def rollout_episode(
    env: KitchenEnv,
    ego: EgoPolicy,
    teammate: ScriptedTeammate,
    episode: int,
    cfg: CollectorConfig,
    teammate_stream: Tuple[NamePart, ...],
    global_step: int,
) -> Tuple[dict, EpisodeRecord]:
    """Executa um episódio e devolve os arrays do prefixo registrado."""
    recorded = cfg.recorded_steps_per_episode
    simulated = _steps_simulated(env.layout, cfg)
    obs_buf = np.zeros((recorded, VIEW_SIZE, VIEW_SIZE, env.layout.channels), dtype=np.float32)
    actions = np.zeros(recorded, dtype=np.int32)
    rewards = np.zeros(recorded, dtype=np.float32)
    dones = np.zeros(recorded, dtype=np.uint8)
    teammate_actions = np.zeros(recorded, dtype=np.int32)

    state = env.reset(episode)
    ego.reset(episode)
    teammate.reset(episode, *teammate_stream)
    sparse, training = 0.0, 0.0
    obs = env.observe(0)
    for t in range(simulated):
        a0 = int(ego.act(obs, state))
        a1 = int(teammate.act(state))
        outcome = env.step((a0, a1))
        next_obs = env.observe(0)
        alpha = shaping_coefficient(global_step + t, cfg.shaping_horizon)
        training += outcome.reward_sparse + alpha * outcome.reward_shaped
        if t < recorded:
            obs_buf[t] = obs
            actions[t] = a0
            rewards[t] = outcome.reward_sparse
            teammate_actions[t] = a1
            dones[t] = int(t == recorded - 1 or outcome.done)
            sparse += outcome.reward_sparse
        ego.observe(obs, a0, outcome.reward_sparse, next_obs, outcome.done, a1)
        state, obs = outcome.next_state, next_obs
        if outcome.done:
            break

    arrays = {
        "obs": obs_buf,
        "actions": actions,
        "rewards": rewards,
        "dones": dones,
        "teammate_actions": teammate_actions,
    }
    return arrays, EpisodeRecord(episode, sparse, training)


def rollout_stream(
    layout: LayoutSpec,
    teammate: ScriptedTeammate,
    ego: EgoPolicy,
    cfg: CollectorConfig,
    seed: int,
    stream_index: int,
    episodes: Optional[range] = None,
    on_episode: Optional[Callable[[EpisodeRecord], None]] = None,
) -> Tuple[LearningHistory, List[EpisodeRecord]]:
    """
    Registra um fluxo (ou um bloco de episódios dele).

    Args:
        layout: Layout da tarefa
        teammate: Parceiro fixo (agente 1)
        ego: Política do ego (agente 0)
        cfg: Configuração da coleta
        seed: Seed da tarefa
        stream_index: Índice do fluxo dentro da tarefa
        episodes: Faixa de episódios (padrão: todos)

    Returns:
        (LearningHistory, resumos dos episódios)

    Raises:
        ValueError: Prefixo registrado maior que o episódio do layout
    """
    if cfg.recorded_steps_per_episode > layout.episode_length:
        raise ValueError(
            f"recorded_steps_per_episode={cfg.recorded_steps_per_episode} excede "
            f"episode_length={layout.episode_length} de '{layout.name}'"
        )
    episodes = episodes if episodes is not None else range(cfg.episodes_per_stream)
    stream: Tuple[NamePart, ...] = ("stream", stream_index)
    env = KitchenEnv(layout, EnvConfig(seed=seed, shaping_horizon=cfg.shaping_horizon), stream=stream)
    simulated = _steps_simulated(layout, cfg)

    parts, records = [], []
    for episode in episodes:
        arrays, record = rollout_episode(
            env, ego, teammate, episode, cfg, (seed,) + stream, episode * simulated
        )
        parts.append(arrays)
        records.append(record)
        if on_episode is not None:
            on_episode(record)

    if not parts:
        empty = np.zeros((0, VIEW_SIZE, VIEW_SIZE, layout.channels), dtype=np.float32)
        history = LearningHistory(empty, np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))
    else:
        history = LearningHistory.from_arrays(
            {name: np.concatenate([p[name] for p in parts]) for name in parts[0]}
        )
    logger.debug(
        "stream_rolled_out",
        layout=layout.name,
        stream=stream_index,
        episodes=len(records),
        transitions=history.length,
    )
    return history, records
