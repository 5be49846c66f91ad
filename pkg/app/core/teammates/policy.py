"""
Ligação entre um TeammateSpec e a função de ação da sua família.
"""

from typing import Callable, Dict, Optional

import numpy as np
import structlog

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.rng import make_rng
from app.core.kitchen.types import Action, GameState
from app.core.teammates.common import PolicyContext
from app.core.teammates.h1_recipe_aware import act_h1
from app.core.teammates.h2_territory import act_h2
from app.core.teammates.h3_assembly_line import act_h3
from app.core.teammates.h4_utility_greedy import act_h4
from app.core.teammates.memory import PolicyMemory
from app.core.teammates.params import AnyParams, Family
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()

ActFn = Callable[[GameState, AnyParams, PolicyMemory, np.random.Generator, PolicyContext], Action]

ACTORS: Dict[Family, ActFn] = {
    Family.H1: act_h1,
    Family.H2: act_h2,
    Family.H3: act_h3,
    Family.H4: act_h4,
}


class ScriptedTeammate:
    """
    Parceiro roteirizado com memória própria.

    A memória é reiniciada a cada episódio; o sub-fluxo de política é
    derivado de (seed do spec, "policy", episódio) salvo quando um rng
    explícito é passado para `act`.
    """

    def __init__(self, spec: TeammateSpec, layout: LayoutSpec, agent_index: int = 1):
        self.spec = spec
        self.params = spec.typed_params
        self.ctx = PolicyContext.build(layout, agent_index)
        self._act = ACTORS[spec.family]
        self.memory = PolicyMemory()
        self._rng: Optional[np.random.Generator] = None

    @property
    def family(self) -> Family:
        return self.spec.family

    def reset(self, episode: int = 0, *stream) -> None:
        self.memory = PolicyMemory()
        self._rng = make_rng(self.spec.seed, *stream, "policy", episode)

    def act(self, state: GameState, rng: Optional[np.random.Generator] = None) -> Action:
        if rng is None:
            if self._rng is None:
                self.reset()
            rng = self._rng
        return self._act(state, self.params, self.memory, rng, self.ctx)


def make_policy(spec: TeammateSpec, layout: LayoutSpec, agent_index: int = 1) -> ScriptedTeammate:
    """Instancia o parceiro do spec para o layout e a posição de agente dados."""
    logger.debug("teammate_bound", family=spec.family.value, kind=spec.kind, layout=layout.name)
    return ScriptedTeammate(spec, layout, agent_index)
