"""
Métricas de avaliação: ganho de adaptação e agregação por família.
"""

from typing import Sequence, Tuple

import numpy as np

from app.core.exceptions import InsufficientEpisodesError

GAIN_WINDOW = 20


def adaptation_gain(returns: Sequence[float], window: int = GAIN_WINDOW) -> float:
    """
    Δ = média dos últimos `window` episódios − média dos primeiros `window`.

    Raises:
        InsufficientEpisodesError: Menos de 2·window episódios
    """
    values = np.asarray(returns, dtype=np.float64)
    if len(values) < 2 * window:
        raise InsufficientEpisodesError(
            f"adaptation_gain exige ao menos {2 * window} episódios, recebido {len(values)}"
        )
    return float(values[-window:].mean() - values[:window].mean())


def instance_means(returns_by_instance: Sequence[Sequence[float]]) -> np.ndarray:
    return np.asarray([np.mean(r) for r in returns_by_instance], dtype=np.float64)


def family_aggregate(returns_by_instance: Sequence[Sequence[float]]) -> Tuple[float, float]:
    """
    Média ± desvio-padrão populacional sobre as médias das instâncias.

    O desvio é calculado entre instâncias, nunca sobre episódios agrupados.
    """
    if not returns_by_instance:
        return 0.0, 0.0
    means = instance_means(returns_by_instance)
    return float(means.mean()), float(means.std(ddof=0))


def adaptation_curve(returns_by_instance: Sequence[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray]:
    """Média e desvio por índice de episódio entre instâncias."""
    matrix = np.asarray(returns_by_instance, dtype=np.float64)
    if matrix.size == 0:
        return np.zeros(0), np.zeros(0)
    return matrix.mean(axis=0), matrix.std(axis=0, ddof=0)
