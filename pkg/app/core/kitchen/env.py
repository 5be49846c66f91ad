"""
Dinâmica do ambiente: reset, step, colisões e coeficiente de shaping.

`reset` e `step` são funções puras dos seus argumentos; `KitchenEnv` apenas
encadeia chamadas mantendo os sub-fluxos de rng nomeados de um episódio.
"""

from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from app.core.exceptions import LayoutError
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import observe
from app.core.kitchen.recipe import encode_recipe, strip_status, with_status
from app.core.kitchen.rng import NamePart, make_rng
from app.core.kitchen.types import (
    BUTTON_PRESS,
    DELIVERY_CORRECT,
    DELIVERY_WRONG,
    DIRECTION_DELTAS,
    MOVE_ACTIONS,
    Action,
    AgentState,
    Cell,
    Direction,
    GameState,
    Item,
    ItemKind,
    PotState,
    RewardEvent,
    StepOutcome,
    TileKind,
)

logger = structlog.get_logger()

COOK_TIME = 20
BUTTON_VISIBLE_STEPS = 10
POT_CAPACITY = 3

# Recompensas de shaping (não entram na recompensa esparsa)
SHAPED_REWARDS: Dict[str, float] = {
    "ingredient_pickup": 1.0,
    "place_in_pot": 3.0,
    "plate_pickup": 1.0,
    "cooked_dish_pickup": 5.0,
}


class EnvConfig(BaseModel):
    """Configuração do processo de decisão."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=0.99, ge=0.0, lt=1.0, description="Fator de desconto")
    horizon: Optional[int] = Field(
        default=None, gt=0, description="Passos por episódio (None = do layout)"
    )
    shaping_horizon: int = Field(
        default=15_000_000, gt=0, description="Passos até o shaping zerar"
    )
    seed: int = Field(default=0, ge=0, lt=2**64)

    def resolve_horizon(self, layout: LayoutSpec) -> int:
        return self.horizon or layout.episode_length


def shaping_coefficient(t: int, H: int) -> float:
    """α(t) = max(0, 1 − t/H)."""
    if H <= 0:
        raise ValueError("Horizonte de shaping deve ser positivo")
    return max(0.0, 1.0 - t / H)


def resolve_collisions(current: Sequence[Cell], proposed: Sequence[Cell]) -> List[Cell]:
    """
    Reverte iterativamente agentes em conflito.

    Conflitos são destinos iguais ou troca de posições no mesmo passo; o
    processo repete até nenhum conflito restar.
    """
    result = list(proposed)
    n = len(result)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for j in range(i + 1, n):
                same_cell = result[i] == result[j]
                swap = (
                    result[i] == current[j]
                    and result[j] == current[i]
                    and result[i] != current[i]
                )
                if not (same_cell or swap):
                    continue
                for k in (i, j):
                    if result[k] != current[k]:
                        result[k] = current[k]
                        changed = True
    return result


def _empty_pot(n_ingredients: int) -> PotState:
    return PotState(contents=(0,) * n_ingredients)


def reset(layout: LayoutSpec, cfg: EnvConfig, rng: np.random.Generator) -> GameState:
    """
    Estado inicial: agentes sorteados nas regiões de início e receita sorteada.

    Raises:
        LayoutError: Região de início sem célula disponível
    """
    first_region = layout.start_regions[0]
    if not first_region:
        raise LayoutError(f"Região de início vazia para o agente 0 em '{layout.name}'")
    first = first_region[int(rng.integers(len(first_region)))]

    second_region = [cell for cell in layout.start_regions[1] if cell != first]
    if not second_region:
        raise LayoutError(f"Região de início vazia para o agente 1 em '{layout.name}'")
    second = second_region[int(rng.integers(len(second_region)))]

    recipe = layout.recipe_pool[int(rng.integers(len(layout.recipe_pool)))]
    pots = {cell: _empty_pot(layout.n_ingredients) for cell in layout.cells_by_kind[TileKind.POT]}

    return GameState(
        agents=(AgentState(first, Direction.UP), AgentState(second, Direction.UP)),
        pots=pots,
        counters={},
        target_recipe=recipe,
        button_visible_timer=0,
        t=0,
    )


class _Transition:
    """Cópias mutáveis do estado durante a resolução de um passo."""

    def __init__(self, state: GameState, layout: LayoutSpec, rng: np.random.Generator):
        self.layout = layout
        self.rng = rng
        self.agents = list(state.agents)
        self.pots = dict(state.pots)
        self.counters = dict(state.counters)
        self.target_recipe = state.target_recipe
        self.button_visible_timer = state.button_visible_timer
        self.events: List[RewardEvent] = []
        self.shaped = 0.0

    def tick(self):
        for cell, pot in self.pots.items():
            if pot.cooking_timer > 0:
                timer = pot.cooking_timer - 1
                self.pots[cell] = PotState(pot.contents, timer, cooked=timer == 0)
        self.button_visible_timer = max(0, self.button_visible_timer - 1)

    def move(self, joint: Sequence[int]):
        current = [agent.position for agent in self.agents]
        proposed: List[Cell] = []
        directions: List[Direction] = []
        for agent, action in zip(self.agents, joint):
            if action in MOVE_ACTIONS:
                direction = Direction(int(action))
                dy, dx = DIRECTION_DELTAS[direction]
                target = (agent.position[0] + dy, agent.position[1] + dx)
                proposed.append(target if self.layout.is_floor(target) else agent.position)
                directions.append(direction)
            else:
                proposed.append(agent.position)
                directions.append(agent.direction)
        final = resolve_collisions(current, proposed)
        self.agents = [
            replace(agent, position=cell, direction=direction)
            for agent, cell, direction in zip(self.agents, final, directions)
        ]

    def interact(self, index: int):
        agent = self.agents[index]
        cell = agent.facing
        kind = self.layout.tile(cell)
        held = agent.inventory
        new_held = held

        if kind == TileKind.DISPENSER and held is None:
            new_held = Item.of_ingredient(int(self.layout.dispenser_index[cell]))
            self.shaped += SHAPED_REWARDS["ingredient_pickup"]
        elif kind == TileKind.PLATE_PILE and held is None:
            new_held = Item.plate()
            self.shaped += SHAPED_REWARDS["plate_pickup"]
        elif kind == TileKind.POT:
            new_held = self._interact_pot(cell, held)
        elif kind == TileKind.COUNTER:
            on_counter = self.counters.get(cell)
            if held is None and on_counter is not None:
                new_held = self.counters.pop(cell)
            elif held is not None and on_counter is None:
                self.counters[cell] = held
                new_held = None
        elif kind == TileKind.SERVING and held is not None and held.kind == ItemKind.DISH:
            if strip_status(held.recipe) == self.target_recipe:
                self.events.append(RewardEvent(index, DELIVERY_CORRECT))
                pool = self.layout.recipe_pool
                self.target_recipe = pool[int(self.rng.integers(len(pool)))]
            else:
                self.events.append(RewardEvent(index, DELIVERY_WRONG))
            new_held = None
        elif kind == TileKind.RECIPE_BUTTON:
            self.events.append(RewardEvent(index, BUTTON_PRESS))
            self.button_visible_timer = BUTTON_VISIBLE_STEPS

        if new_held is not held:
            self.agents[index] = replace(agent, inventory=new_held)

    def _interact_pot(self, cell: Cell, held: Optional[Item]) -> Optional[Item]:
        pot = self.pots[cell]
        if held is not None and held.kind == ItemKind.INGREDIENT:
            if pot.is_idle and pot.total < POT_CAPACITY:
                contents = list(pot.contents)
                contents[held.ingredient] += 1
                full = sum(contents) == POT_CAPACITY
                timer = COOK_TIME if full and not self.layout.explicit_cook else 0
                self.pots[cell] = PotState(tuple(contents), timer, False)
                self.shaped += SHAPED_REWARDS["place_in_pot"]
                return None
        elif held is not None and held.kind == ItemKind.PLATE:
            if pot.cooked:
                packed = with_status(encode_recipe(pot.contents, target=False))
                self.pots[cell] = _empty_pot(len(pot.contents))
                self.shaped += SHAPED_REWARDS["cooked_dish_pickup"]
                return Item.dish(packed)
        elif held is None and self.layout.explicit_cook:
            if pot.is_idle and pot.total == POT_CAPACITY:
                self.pots[cell] = PotState(pot.contents, COOK_TIME, False)
        return held


def step(
    state: GameState,
    a: Sequence[int],
    rng: np.random.Generator,
    layout: LayoutSpec,
    cfg: Optional[EnvConfig] = None,
) -> StepOutcome:
    """
    Avança um passo.

    Ordem: timers decrementam, movimentos são resolvidos com
    `resolve_collisions`, depois as interações na ordem dos agentes.

    Args:
        state: Estado atual (t < horizonte)
        a: Ação conjunta (ego, parceiro)
        rng: Sub-fluxo "recipe" (renovação da receita após entrega correta)
        layout: Layout do episódio
        cfg: Configuração (horizonte)

    Returns:
        StepOutcome com o próximo estado e recompensas
    """
    horizon = (cfg or EnvConfig()).resolve_horizon(layout)
    if state.t >= horizon:
        raise ValueError(f"Episódio encerrado em t={state.t}")

    joint = tuple(int(action) for action in a)
    transition = _Transition(state, layout, rng)
    transition.tick()
    transition.move(joint)
    for index, action in enumerate(joint):
        if action == Action.INTERACT:
            transition.interact(index)

    next_state = GameState(
        agents=(transition.agents[0], transition.agents[1]),
        pots=transition.pots,
        counters=transition.counters,
        target_recipe=transition.target_recipe,
        button_visible_timer=transition.button_visible_timer,
        t=state.t + 1,
        episode_return_events=tuple(transition.events),
    )
    return StepOutcome(
        next_state=next_state,
        reward_sparse=sum(event.value for event in transition.events),
        reward_shaped=transition.shaped,
        done=next_state.t >= horizon,
    )


class KitchenEnv:
    """
    Ambiente sequencial sobre as funções puras.

    Cada episódio usa sub-fluxos derivados de (seed, stream, episódio), de
    modo que qualquer episódio pode ser reproduzido isoladamente.
    """

    def __init__(
        self,
        layout: LayoutSpec,
        cfg: Optional[EnvConfig] = None,
        stream: Tuple[NamePart, ...] = (),
    ):
        self.layout = layout
        self.cfg = cfg or EnvConfig()
        self.stream = tuple(stream)
        self.horizon = self.cfg.resolve_horizon(layout)
        self.state: Optional[GameState] = None
        self._recipe_rng: Optional[np.random.Generator] = None

    def reset(self, episode: int = 0) -> GameState:
        reset_rng = make_rng(self.cfg.seed, *self.stream, "reset", episode)
        self._recipe_rng = make_rng(self.cfg.seed, *self.stream, "recipe", episode)
        self.state = reset(self.layout, self.cfg, reset_rng)
        return self.state

    def step(self, joint: Sequence[int]) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset() deve ser chamado antes de step()")
        outcome = step(self.state, joint, self._recipe_rng, self.layout, self.cfg)
        self.state = outcome.next_state
        return outcome

    def observe(self, agent: int) -> np.ndarray:
        return observe(self.state, agent, self.layout)
