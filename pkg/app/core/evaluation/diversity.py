"""
Diversidade comportamental: distância de Hamming entre políticas.

d_H(A, B) = fração dos estados amostrados em que A e B escolhem ações
diferentes. Cada estado tem um sub-fluxo de rng próprio, compartilhado por
todas as políticas consultadas, então d_H(π, π) = 0 mesmo para π estocástica.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.history.egos import RandomEgo
from app.core.kitchen.env import EnvConfig, KitchenEnv
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.rng import make_rng
from app.core.kitchen.types import GameState
from app.core.teammates.memory import PolicyMemory
from app.core.teammates.policy import ScriptedTeammate
from app.schemas.report import DiversityReport
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()


@dataclass(frozen=True)
class StateSample:
    layout: LayoutSpec
    state: GameState


StatePolicy = Callable[[StateSample, np.random.Generator], int]


def sample_states(
    layouts: Sequence[LayoutSpec],
    teammates: Sequence[TeammateSpec],
    n_states: int,
    seed: int,
    episode_len: int = 100,
) -> List[StateSample]:
    """
    Estados visitados por rollouts com agente 0 aleatório e parceiros
    alternados por episódio como agente 1.

    Raises:
        ValueError: n_states ≤ 0, sem layouts ou sem parceiros
    """
    if n_states <= 0:
        raise ValueError(f"n_states deve ser positivo, recebido {n_states}")
    if not layouts or not teammates:
        raise ValueError("sample_states exige ao menos um layout e um parceiro")

    samples: List[StateSample] = []
    stream = ("diversity",)
    episode = 0
    while len(samples) < n_states:
        layout = layouts[episode % len(layouts)]
        spec = teammates[episode % len(teammates)]
        env = KitchenEnv(layout, EnvConfig(seed=seed, horizon=episode_len), stream=stream)
        ego = RandomEgo(seed, stream)
        mate = ScriptedTeammate(spec, layout, agent_index=1)
        state = env.reset(episode)
        ego.reset(episode)
        mate.reset(episode, seed, *stream)
        for _ in range(episode_len):
            samples.append(StateSample(layout, state))
            if len(samples) >= n_states:
                break
            outcome = env.step((ego.act(None, state), int(mate.act(state))))
            state = outcome.next_state
            if outcome.done:
                break
        episode += 1

    logger.debug("states_sampled", n_states=len(samples), episodes=episode)
    return samples


def spec_policy(spec: TeammateSpec, agent_index: int = 1) -> StatePolicy:
    """Consulta sem memória de um parceiro roteirizado (memória nova por estado)."""
    bound: Dict[str, ScriptedTeammate] = {}

    def query(sample: StateSample, rng: np.random.Generator) -> int:
        policy = bound.get(sample.layout.name)
        if policy is None:
            policy = bound[sample.layout.name] = ScriptedTeammate(spec, sample.layout, agent_index)
        policy.memory = PolicyMemory()
        return int(policy.act(sample.state, rng=rng))

    return query


def policy_actions(policy: StatePolicy, states: Sequence[StateSample], seed: int) -> np.ndarray:
    return np.fromiter(
        (policy(sample, make_rng(seed, "hamming", i)) for i, sample in enumerate(states)),
        dtype=np.int32,
        count=len(states),
    )


def hamming_distance(
    pa: StatePolicy,
    pb: StatePolicy,
    states: Sequence[StateSample],
    seed: int = 0,
) -> float:
    """
    Fração de estados em que as ações diferem.

    Raises:
        ValueError: Amostra vazia
    """
    if not states:
        raise ValueError("hamming_distance exige ao menos um estado")
    return float(np.mean(policy_actions(pa, states, seed) != policy_actions(pb, states, seed)))


def pairwise_distances(policies: Sequence[StatePolicy], states: Sequence[StateSample], seed: int = 0) -> np.ndarray:
    if not states:
        raise ValueError("pairwise_distances exige ao menos um estado")
    actions = np.stack([policy_actions(p, states, seed) for p in policies]) if policies else np.zeros((0, len(states)))
    return (actions[:, None, :] != actions[None, :, :]).mean(axis=2)


def family_mean_distance(
    pairwise: np.ndarray,
    policy_families: Sequence[str],
    families: Optional[Sequence[str]] = None,
) -> Tuple[List[str], np.ndarray]:
    """
    d̄_H(F_A, F_B): média de d_H sobre todos os pares (a ∈ F_A, b ∈ F_B).

    Para F_A = F_B os pares incluem a diagonal.

    Raises:
        ValueError: Família sem políticas
    """
    if families is None:
        families = list(dict.fromkeys(policy_families))
    members = {f: [i for i, pf in enumerate(policy_families) if pf == f] for f in families}
    empty = [f for f, idx in members.items() if not idx]
    if empty:
        raise ValueError(f"Famílias sem políticas: {empty}")
    matrix = np.zeros((len(families), len(families)), dtype=np.float64)
    for a, fa in enumerate(families):
        for b, fb in enumerate(families):
            matrix[a, b] = pairwise[np.ix_(members[fa], members[fb])].mean()
    return list(families), matrix


def diversity_report(
    specs: Sequence[TeammateSpec],
    layouts: Sequence[LayoutSpec],
    n_states: int,
    seed: int = 0,
    episode_len: int = 100,
) -> DiversityReport:
    """Amostra estados, calcula a matriz par a par e as médias por família."""
    states = sample_states(layouts, specs, n_states, seed, episode_len)
    pairwise = pairwise_distances([spec_policy(s) for s in specs], states, seed)
    policy_families = [s.family.value for s in specs]
    families, family_matrix = family_mean_distance(pairwise, policy_families)
    logger.info("diversity_computed", policies=len(specs), n_states=len(states), families=families)
    return DiversityReport(
        n_states=len(states),
        layouts=[layout.name for layout in layouts],
        seed=seed,
        policies=[s.spec_string for s in specs],
        policy_families=policy_families,
        pairwise=pairwise.tolist(),
        families=families,
        family_mean=family_matrix.tolist(),
    )
