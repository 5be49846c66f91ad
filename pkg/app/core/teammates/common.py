"""
Infraestrutura compartilhada pelas famílias de parceiros.

Consultas sobre a cozinha (panelas compatíveis, ingredientes necessários),
alvos viáveis por intenção, navegação e o desbloqueio de corredores.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.observation import recipe_visible
from app.core.kitchen.recipe import decode_recipe, strip_status
from app.core.kitchen.types import (
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
    TileKind,
)
from app.core.teammates.memory import IntentType, PolicyMemory
from app.core.teammates.nav import NavTables, build_nav_tables

STUCK_LIMIT = 2

# Tipos de tile naturais de cada intenção (usados para d_i de intenções inviáveis)
INTENT_TILES: Dict[IntentType, Tuple[TileKind, ...]] = {
    IntentType.DELIVER: (TileKind.SERVING,),
    IntentType.PICKUP_COOKED: (TileKind.POT,),
    IntentType.GET_PLATE: (TileKind.PLATE_PILE,),
    IntentType.ADD_INGREDIENT: (TileKind.POT,),
    IntentType.FETCH_INGREDIENT: (TileKind.DISPENSER,),
    IntentType.STAGE_ON_COUNTER: (TileKind.COUNTER,),
    IntentType.START_COOKING: (TileKind.POT,),
    IntentType.PRESS_L: (TileKind.RECIPE_BUTTON,),
}


@dataclass(eq=False)
class PolicyContext:
    """Layout, tabelas de navegação e índice do agente controlado."""

    layout: LayoutSpec
    nav: NavTables
    agent_index: int = 1

    @classmethod
    def build(cls, layout: LayoutSpec, agent_index: int = 1) -> "PolicyContext":
        return cls(layout=layout, nav=build_nav_tables(layout), agent_index=agent_index)

    def me(self, state: GameState) -> AgentState:
        return state.agents[self.agent_index]

    def partner(self, state: GameState) -> AgentState:
        return state.agents[1 - self.agent_index]


# =========================================================================
# Consultas sobre a cozinha
# =========================================================================

def pot_needs(pot: PotState, recipe: int, n: int) -> Optional[Tuple[int, ...]]:
    """Ingredientes que faltam para a receita; None se a panela está contaminada."""
    target = decode_recipe(recipe, n)
    missing = tuple(t - c for t, c in zip(target, pot.contents))
    if any(m < 0 for m in missing):
        return None
    return missing


def pot_accepts(pot: PotState, ingredient: int, recipe: Optional[int], n: int) -> bool:
    """
    Panela ociosa e não cheia que aceita o ingrediente.

    Panelas contaminadas (conteúdo fora da receita) aceitam qualquer
    ingrediente para que cozinhem e sejam descartadas.
    """
    if recipe is None or not pot.is_idle or pot.total >= 3:
        return False
    missing = pot_needs(pot, recipe, n)
    return missing is None or missing[ingredient] > 0


def accepting_pots(state: GameState, ingredient: int, recipe: Optional[int], n: int) -> Tuple[Cell, ...]:
    return tuple(
        cell for cell, pot in sorted(state.pots.items())
        if pot_accepts(pot, ingredient, recipe, n)
    )


def needed_ingredients(state: GameState, recipe: Optional[int], n: int) -> Tuple[int, ...]:
    """Ingredientes aceitos por alguma panela ociosa."""
    if recipe is None:
        return ()
    return tuple(
        i for i in range(n)
        if any(pot_accepts(pot, i, recipe, n) for pot in state.pots.values())
    )


def any_pot_busy(state: GameState) -> bool:
    """Alguma panela cozinhando ou pronta."""
    return any(pot.cooking_timer > 0 or pot.cooked for pot in state.pots.values())


def cooked_pots(state: GameState) -> Tuple[Cell, ...]:
    return tuple(cell for cell, pot in sorted(state.pots.items()) if pot.cooked)


def is_correct_dish(item: Optional[Item], recipe: Optional[int]) -> bool:
    return (
        item is not None
        and item.kind == ItemKind.DISH
        and recipe is not None
        and strip_status(item.recipe) == recipe
    )


def item_useful(item: Item, state: GameState, recipe: Optional[int], n: int) -> bool:
    """Item que ainda serve para alguma intenção produtiva."""
    if item.kind == ItemKind.DISH:
        return recipe is None or strip_status(item.recipe) == recipe
    if item.kind == ItemKind.PLATE:
        return any_pot_busy(state)
    return recipe is None or bool(accepting_pots(state, item.ingredient, recipe, n))


def empty_counters(state: GameState, ctx: PolicyContext) -> Tuple[Cell, ...]:
    return tuple(
        cell for cell in ctx.layout.cells_by_kind[TileKind.COUNTER]
        if cell not in state.counters and ctx.nav.access.get(cell)
    )


def counters_with(state: GameState, predicate) -> Tuple[Cell, ...]:
    return tuple(cell for cell, item in sorted(state.counters.items()) if predicate(item))


# =========================================================================
# Alvos por intenção
# =========================================================================

def intent_targets(
    intent: IntentType,
    state: GameState,
    ctx: PolicyContext,
    mem: PolicyMemory,
    refresh_interval: Optional[int] = None,
) -> Tuple[Cell, ...]:
    """
    Tiles-alvo viáveis da intenção para o agente do contexto.

    Tupla vazia significa pré-condição não satisfeita (v_i = 0).
    """
    layout = ctx.layout
    n = layout.n_ingredients
    held = ctx.me(state).inventory
    recipe = mem.known_recipe

    if intent == IntentType.DELIVER:
        if is_correct_dish(held, recipe):
            return layout.cells_by_kind[TileKind.SERVING]
        return ()
    if intent == IntentType.PICKUP_COOKED:
        if held is not None and held.kind == ItemKind.PLATE:
            return cooked_pots(state)
        return ()
    if intent == IntentType.GET_PLATE:
        if held is None and any_pot_busy(state):
            return layout.cells_by_kind[TileKind.PLATE_PILE]
        return ()
    if intent == IntentType.ADD_INGREDIENT:
        if held is not None and held.kind == ItemKind.INGREDIENT:
            return accepting_pots(state, held.ingredient, recipe, n)
        return ()
    if intent == IntentType.FETCH_INGREDIENT:
        if held is not None:
            return ()
        cells = []
        for ingredient in needed_ingredients(state, recipe, n):
            cells.extend(layout.dispensers_of(ingredient))
        return tuple(sorted(set(cells)))
    if intent == IntentType.STAGE_ON_COUNTER:
        if held is not None and not item_useful(held, state, recipe, n):
            return empty_counters(state, ctx)
        return ()
    if intent == IntentType.START_COOKING:
        if layout.explicit_cook and held is None:
            return tuple(
                cell for cell, pot in sorted(state.pots.items())
                if pot.is_idle and pot.total == 3
            )
        return ()
    if intent == IntentType.PRESS_L:
        if (
            layout.has_button
            and mem.recipe_stale(refresh_interval)
            and not recipe_visible(state, layout)
        ):
            return layout.cells_by_kind[TileKind.RECIPE_BUTTON]
        return ()
    raise ValueError(f"Intenção desconhecida: {intent}")


def nearest_target(
    ctx: PolicyContext,
    origin: Cell,
    targets: Sequence[Cell],
) -> Tuple[Optional[Cell], Optional[int]]:
    """Alvo de menor distância (empate: menor célula); (None, None) se inalcançável."""
    best: Tuple[Optional[Cell], Optional[int]] = (None, None)
    for tile in targets:
        d = ctx.nav.tile_distance(origin, tile)
        if d is None:
            continue
        if best[1] is None or (d, tile) < (best[1], best[0]):
            best = (tile, d)
    return best


def natural_distance(intent: IntentType, ctx: PolicyContext, origin: Cell) -> Optional[int]:
    tiles = []
    for kind in INTENT_TILES[intent]:
        tiles.extend(ctx.layout.cells_by_kind[kind])
    return nearest_target(ctx, origin, tiles)[1]


# =========================================================================
# Navegação
# =========================================================================

def draw_once(mem: PolicyMemory, key: str, probability: float, rng: np.random.Generator) -> bool:
    """Sorteio mantido até `mem.scratch[key]` ser descartado."""
    if key not in mem.scratch:
        mem.scratch[key] = bool(rng.random() < probability)
    return mem.scratch[key]


def move_target(agent: AgentState, action: int) -> Optional[Cell]:
    if action not in MOVE_ACTIONS:
        return None
    dy, dx = DIRECTION_DELTAS[Direction(int(action))]
    return (agent.position[0] + dy, agent.position[1] + dx)


def random_move(state: GameState, ctx: PolicyContext, rng: np.random.Generator) -> Action:
    """Movimento aleatório para uma célula de piso livre (STAY se nenhuma)."""
    me = ctx.me(state)
    partner = ctx.partner(state).position
    options = [
        action for action in MOVE_ACTIONS
        if ctx.layout.is_floor(move_target(me, action)) and move_target(me, action) != partner
    ]
    if not options:
        return Action.STAY
    return options[int(rng.integers(len(options)))]


def finish(
    action: int,
    state: GameState,
    ctx: PolicyContext,
    mem: PolicyMemory,
    rng: np.random.Generator,
) -> Action:
    """
    Registra a ação e aplica o desbloqueio: após STUCK_LIMIT movimentos
    bloqueados seguidos, troca o movimento por um aleatório.
    """
    me = ctx.me(state)
    last_move = mem.scratch.get("last_move")
    last_pos = mem.scratch.get("last_pos")
    blocked = (
        last_move is not None
        and last_pos == me.position
        and ctx.layout.is_floor(move_target(me, last_move))
    )
    stuck = mem.scratch.get("stuck", 0) + 1 if blocked else 0

    action = Action(int(action))
    if stuck >= STUCK_LIMIT and action in MOVE_ACTIONS:
        action = random_move(state, ctx, rng)
        stuck = 0

    mem.scratch["stuck"] = stuck
    mem.scratch["last_pos"] = me.position
    mem.scratch["last_move"] = action if action in MOVE_ACTIONS else None
    return action


def go_to_tile(state: GameState, ctx: PolicyContext, tile: Cell) -> Action:
    return ctx.nav.step_to_tile(ctx.me(state), tile)


def go_to_cell(state: GameState, ctx: PolicyContext, cell: Cell) -> Action:
    return ctx.nav.step_toward(ctx.me(state).position, cell)
