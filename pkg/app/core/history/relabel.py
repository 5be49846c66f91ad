"""
Rotulagem de ações de especialista sobre históricos registrados.
"""

from typing import Callable, Optional

import numpy as np
import structlog

from app.core.history.egos import ObservationH4Expert
from app.core.history.history import LearningHistory
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import VIEW_SIZE

logger = structlog.get_logger()

ObservationPolicy = Callable[[np.ndarray], int]


def relabel_expert(
    history: LearningHistory,
    expert: Optional[ObservationPolicy],
    layout: LayoutSpec,
) -> LearningHistory:
    """
    Preenche expert_actions[t] = expert(obs[t]); demais campos inalterados.

    Raises:
        ValueError: Forma de observação incompatível com o layout
    """
    expected = (VIEW_SIZE, VIEW_SIZE, layout.channels)
    if history.obs_shape != expected:
        raise ValueError(f"Observações {history.obs_shape} incompatíveis com {expected} de '{layout.name}'")
    expert = expert or ObservationH4Expert(layout)

    labels = np.fromiter((int(expert(o)) for o in history.obs), dtype=np.int32, count=history.length)

    logger.debug("history_relabeled", layout=layout.name, transitions=history.length)
    return history.with_expert(labels)
