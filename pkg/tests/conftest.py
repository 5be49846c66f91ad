"""
Configuração global de testes.

Define fixtures compartilhadas para todos os testes.
"""

from typing import Callable, Optional

import numpy as np
import pytest

from app.core.dataset.store import DatasetStore
from app.core.history.history import LearningHistory
from app.core.kitchen.layout import LayoutSpec, load_layout, parse_layout
from app.core.teammates.params import Family
from app.core.teammates.sampling import canonical_spec_string, sample_params
from app.schemas.dataset import DatasetIndexEntry, history_group

# Três células de piso em linha: dispensers 0 (acima) e 1 (esquerda), panela,
# balcão de entrega, pilha de pratos e botão de receita.
TINY_GRID = "#0#P#\n1...S\n#B#L#\n"
TINY_CHANNELS = 35


@pytest.fixture
def tiny_layout() -> LayoutSpec:
    """Layout mínimo com n=2 e uma única receita [0, 0, 0]."""
    return parse_layout(TINY_GRID, {"recipes": [[0, 0, 0]]}, name="tiny")


@pytest.fixture
def coord_simple() -> LayoutSpec:
    return load_layout("coord_simple")


@pytest.fixture
def specs_by_family():
    """Um parceiro de teste por família."""
    return {
        family: sample_params(family, "test", canonical_spec_string(family, "test", "fixture", 0))
        for family in Family
    }


@pytest.fixture
def history_factory() -> Callable[..., LearningHistory]:
    """Históricos sintéticos com episódios de comprimento fixo."""

    def make(
        T: int,
        channels: int = 8,
        episode_len: int = 10,
        seed: int = 0,
        with_teammate: bool = True,
        with_expert: bool = False,
    ) -> LearningHistory:
        rng = np.random.default_rng(seed)
        dones = np.zeros(T, dtype=np.uint8)
        dones[episode_len - 1::episode_len] = 1
        if T:
            dones[-1] = 1
        return LearningHistory(
            obs=rng.random((T, 5, 5, channels), dtype=np.float32),
            actions=rng.integers(0, 6, T),
            rewards=rng.choice([0.0, 20.0, -20.0, -5.0], size=T),
            dones=dones,
            teammate_actions=rng.integers(0, 6, T) if with_teammate else None,
            expert_actions=rng.integers(0, 6, T) if with_expert else None,
        )

    return make


def index_entry(history_id: int, history: LearningHistory, layout: str = "coord_simple",
                task_id: Optional[str] = None) -> DatasetIndexEntry:
    return DatasetIndexEntry(
        history_id=history_id,
        task_id=task_id or f"task-{history_id}",
        env_idx=history_id,
        T=history.length,
        obs_shape=list(history.obs_shape),
        track="teammate",
        split="train",
        layout=layout,
        teammate_family="H4",
        teammate_kind="utility_greedy",
        h5_group=history_group(history_id),
        has_teammate_actions=history.teammate_actions is not None,
        has_expert_actions=history.expert_actions is not None,
    )


@pytest.fixture
def entry_factory():
    return index_entry


@pytest.fixture
def filled_store(tmp_path, history_factory):
    """Store com chunks de 16 passos e três históricos de tamanhos diferentes."""
    store = DatasetStore(tmp_path / "store", chunk_length=16)
    histories = {}
    for history_id, T in enumerate((50, 64, 33)):
        history = history_factory(T, seed=history_id, with_expert=True)
        store.write_history(index_entry(history_id, history), history)
        histories[history_id] = history
    yield store, histories
    store.close()
