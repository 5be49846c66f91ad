"""
Filtragem de fluxos por pontuação de qualidade.

score = R̄_fim + (R̄_fim − R̄_início), com janelas de w episódios,
w = min(N, max(5, ⌊0.1·N⌋)).
"""

import math
from typing import List, Sequence, Tuple, TypeVar

import numpy as np
import structlog

logger = structlog.get_logger()

T = TypeVar("T")

MIN_WINDOW = 5
WINDOW_FRACTION = 0.1


def window_size(n_episodes: int) -> int:
    return min(n_episodes, max(MIN_WINDOW, math.floor(WINDOW_FRACTION * n_episodes)))


def quality_score(episode_returns: Sequence[float]) -> float:
    """
    Pontuação que premia desempenho final alto e melhora ao longo do fluxo.

    Raises:
        ValueError: Sequência vazia
    """
    returns = np.asarray(episode_returns, dtype=np.float64)
    n = len(returns)
    if n < 1:
        raise ValueError("quality_score exige ao menos um episódio")
    w = window_size(n)
    start = float(returns[:w].mean())
    end = float(returns[n - w:].mean())
    return end + (end - start)


def rank_streams(scores: Sequence[float]) -> List[int]:
    """Índices ordenados por pontuação decrescente, empate por índice crescente."""
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def filter_streams(histories: Sequence[Tuple[T, Sequence[float]]], k: int) -> List[Tuple[int, T]]:
    """
    Mantém os k fluxos de maior pontuação.

    Args:
        histories: Pares (histórico, retornos por episódio), na ordem dos fluxos
        k: Quantidade de fluxos mantidos

    Returns:
        Pares (índice original, histórico) em ordem de pontuação

    Raises:
        ValueError: k ≤ 0 ou maior que o número de fluxos
    """
    if k <= 0:
        raise ValueError(f"k deve ser positivo, recebido {k}")
    if k > len(histories):
        raise ValueError(f"k={k} excede o número de fluxos ({len(histories)})")
    scores = [quality_score(returns) for _, returns in histories]
    keep = rank_streams(scores)[:k]
    logger.info(
        "streams_filtered",
        total=len(histories),
        kept=k,
        best_score=scores[keep[0]],
        cutoff_score=scores[keep[-1]],
    )
    return [(i, histories[i][0]) for i in keep]
