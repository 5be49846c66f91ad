"""
H1: agente consciente da receita.

Prioridade: (1) entregar pratos na mão, (2) empratar sopas prontas,
(3) colocar ingredientes compatíveis com a receita conhecida, (4) consultar
a receita quando desconhecida ou velha. Não busca ingredientes em
dispensers: só trabalha com ingredientes deixados nos balcões.
"""

from typing import Optional, Sequence

import numpy as np

from app.core.kitchen.recipe import strip_status
from app.core.kitchen.types import Action, Cell, GameState, ItemKind, TileKind
from app.core.teammates.common import (
    PolicyContext,
    accepting_pots,
    any_pot_busy,
    cooked_pots,
    counters_with,
    draw_once,
    empty_counters,
    finish,
    go_to_tile,
    intent_targets,
    needed_ingredients,
)
from app.core.teammates.memory import IntentType, PolicyMemory
from app.core.teammates.params import H1Params


def _pick(
    ctx: PolicyContext,
    origin: Cell,
    targets: Sequence[Cell],
    p: H1Params,
    mem: PolicyMemory,
) -> Optional[Cell]:
    """Alvo que minimiza dist_weight·d − inertia·1[alvo anterior]."""
    best, best_cost = None, None
    previous = mem.scratch.get("last_target")
    for tile in targets:
        d = ctx.nav.tile_distance(origin, tile)
        if d is None:
            continue
        cost = p.dist_weight * d - (p.inertia if tile == previous else 0.0)
        if best_cost is None or (cost, tile) < (best_cost, best):
            best, best_cost = tile, cost
    return best


def _go(state, ctx, mem, rng, p, intent: IntentType, targets: Sequence[Cell]) -> Optional[Action]:
    tile = _pick(ctx, ctx.me(state).position, targets, p, mem)
    if tile is None:
        return None
    mem.current_intent = intent
    mem.scratch["last_target"] = tile
    return finish(go_to_tile(state, ctx, tile), state, ctx, mem, rng)


def _working_recipe(mem: PolicyMemory, ctx: PolicyContext, p: H1Params, rng) -> Optional[int]:
    """Receita conhecida ou, sem adesão estrita, a receita padrão do layout."""
    if mem.known_recipe is not None:
        mem.scratch.pop("assume_default", None)
        return mem.known_recipe
    if draw_once(mem, "assume_default", 1.0 - p.strict_recipe, rng):
        return ctx.layout.recipe_pool[0]
    return None


def act_h1(
    state: GameState,
    p: H1Params,
    mem: PolicyMemory,
    rng: np.random.Generator,
    ctx: PolicyContext,
) -> Action:
    """
    Um passo do agente consciente da receita.

    Args:
        state: Estado global (acesso privilegiado)
        p: Parâmetros H1
        mem: Memória do episódio
        rng: Sub-fluxo de política
        ctx: Contexto (layout, navegação, índice do agente)

    Returns:
        Ação escolhida
    """
    mem.observe(state, ctx.layout)
    if rng.random() < p.idle_prob:
        return finish(Action.STAY, state, ctx, mem, rng)

    layout = ctx.layout
    n = layout.n_ingredients
    held = ctx.me(state).inventory
    recipe = _working_recipe(mem, ctx, p, rng)

    # (1) pratos na mão
    if held is not None and held.kind == ItemKind.DISH and recipe is not None:
        if strip_status(held.recipe) == recipe:
            action = _go(state, ctx, mem, rng, p, IntentType.DELIVER, layout.cells_by_kind[TileKind.SERVING])
        else:
            action = _go(state, ctx, mem, rng, p, IntentType.STAGE_ON_COUNTER, empty_counters(state, ctx))
        if action is not None:
            return action

    # (2) sopas prontas (ou cozinhando, com busca antecipada de prato)
    cooked = cooked_pots(state)
    if cooked or any_pot_busy(state):
        early = bool(cooked) or draw_once(mem, "early_plate", p.plate_timing, rng)
        if early and held is None:
            action = _go(state, ctx, mem, rng, p, IntentType.GET_PLATE, layout.cells_by_kind[TileKind.PLATE_PILE])
            if action is not None:
                return action
        if cooked and held is not None and held.kind == ItemKind.PLATE:
            action = _go(state, ctx, mem, rng, p, IntentType.PICKUP_COOKED, cooked)
            if action is not None:
                return action
    else:
        mem.scratch.pop("early_plate", None)

    # (3) ingredientes compatíveis com a receita
    if recipe is not None:
        if held is not None and held.kind == ItemKind.INGREDIENT:
            pots = accepting_pots(state, held.ingredient, recipe, n)
            if pots:
                action = _go(state, ctx, mem, rng, p, IntentType.ADD_INGREDIENT, pots)
            else:
                action = _go(state, ctx, mem, rng, p, IntentType.STAGE_ON_COUNTER, empty_counters(state, ctx))
            if action is not None:
                return action
        if held is None:
            needed = set(needed_ingredients(state, recipe, n))
            wrong = draw_once(mem, "wrong_ingredient", p.wrong_ingredient_prob, rng)
            if wrong:
                staged = counters_with(
                    state, lambda item: item.kind == ItemKind.INGREDIENT and item.ingredient not in needed
                )
            else:
                staged = counters_with(
                    state, lambda item: item.kind == ItemKind.INGREDIENT and item.ingredient in needed
                )
            action = _go(state, ctx, mem, rng, p, IntentType.FETCH_INGREDIENT, staged)
            if action is not None:
                return action
    if held is not None and held.kind == ItemKind.INGREDIENT:
        mem.scratch.pop("wrong_ingredient", None)

    # (4) consultar a receita
    press_targets = intent_targets(IntentType.PRESS_L, state, ctx, mem, p.refresh_interval)
    if press_targets:
        if draw_once(mem, "press_decision", p.press_L_when_unknown, rng):
            action = _go(state, ctx, mem, rng, p, IntentType.PRESS_L, press_targets)
            if action is not None:
                return action
    else:
        mem.scratch.pop("press_decision", None)

    mem.current_intent = None
    return finish(Action.STAY, state, ctx, mem, rng)
