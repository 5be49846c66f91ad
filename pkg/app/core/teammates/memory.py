"""
Memória de política e tipos de intenção.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, Optional

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import recipe_visible
from app.core.kitchen.types import GameState


class IntentType(IntEnum):
    """Micro-objetivos candidatos; a ordem define o desempate do argmax."""

    DELIVER = 0
    PICKUP_COOKED = 1
    GET_PLATE = 2
    ADD_INGREDIENT = 3
    FETCH_INGREDIENT = 4
    STAGE_ON_COUNTER = 5
    START_COOKING = 6
    PRESS_L = 7


@dataclass
class PolicyMemory:
    """
    Estado interno de um parceiro roteirizado durante um episódio.

    Attributes:
        known_recipe: Receita conhecida (None se desconhecida)
        recipe_age: Passos desde a última leitura de um indicador ativo
        current_intent: Intenção em execução
        scratch: Dados auxiliares de cada família
    """

    known_recipe: Optional[int] = None
    recipe_age: int = 0
    current_intent: Optional[IntentType] = None
    scratch: Dict[str, Any] = field(default_factory=dict)

    def observe(self, state: GameState, layout: LayoutSpec):
        """Atualiza a crença sobre a receita a partir do estado."""
        if state.delivered_correctly():
            self.known_recipe = None
        if recipe_visible(state, layout):
            self.known_recipe = state.target_recipe
            self.recipe_age = 0
        else:
            self.recipe_age += 1

    def recipe_stale(self, refresh_interval: Optional[int]) -> bool:
        if self.known_recipe is None:
            return True
        return refresh_interval is not None and self.recipe_age > refresh_interval
