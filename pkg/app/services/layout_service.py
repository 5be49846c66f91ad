"""
Serviço de layouts.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import structlog

from app.core.kitchen.env import EnvConfig, KitchenEnv
from app.core.kitchen.layout import LAYOUT_NAMES, channel_count, load_layout
from app.core.kitchen.observation import VIEW_SIZE
from app.schemas.layout import LayoutSummary

logger = structlog.get_logger()


@dataclass(frozen=True)
class ChannelCheck:
    """Resultado da verificação de canais de um layout."""

    layout: str
    expected: int
    observed: int

    @property
    def ok(self) -> bool:
        return self.expected == self.observed


class LayoutService:
    """Listagem e verificação dos layouts distribuídos."""

    def list_layouts(self, names: Optional[Sequence[str]] = None) -> List[LayoutSummary]:
        """
        Resumo de cada layout.

        Raises:
            LayoutError: Nome desconhecido
        """
        return [load_layout(name).summary() for name in (names or LAYOUT_NAMES)]

    def check(self, names: Optional[Sequence[str]] = None) -> List[ChannelCheck]:
        """
        Compara a última dimensão de observe() com a fórmula de canais.

        Raises:
            LayoutError: Nome desconhecido
        """
        results = []
        for name in names or LAYOUT_NAMES:
            layout = load_layout(name)
            env = KitchenEnv(layout, EnvConfig(seed=0), stream=("check",))
            env.reset(0)
            obs = env.observe(0)
            observed = int(obs.shape[-1]) if obs.shape[:2] == (VIEW_SIZE, VIEW_SIZE) else -1
            result = ChannelCheck(
                layout=name,
                expected=channel_count(layout.n_ingredients, layout.has_delivery_indicator),
                observed=observed,
            )
            if not result.ok:
                logger.warning("layout_channel_mismatch", layout=name, expected=result.expected, observed=observed)
            results.append(result)
        logger.info("layouts_checked", layouts=len(results), failed=sum(not r.ok for r in results))
        return results
