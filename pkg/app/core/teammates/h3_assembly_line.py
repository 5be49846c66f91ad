"""
H3: agente de linha de montagem.

O papel define as intenções admitidas: o corredor (runner) só lida com
ingredientes, o empratador (plater) só com pratos e entregas e o flexível
alterna para empratador quando alguma panela está cozinhando ou pronta.
Itens fora do papel são deixados na célula de passagem (handoff).
"""

from typing import List, Optional, Tuple

import numpy as np

from app.core.kitchen.env import COOK_TIME
from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.recipe import decode_recipe
from app.core.kitchen.types import N_ACTIONS, Action, Cell, GameState, ItemKind, TileKind
from app.core.teammates.common import (
    PolicyContext,
    any_pot_busy,
    draw_once,
    empty_counters,
    finish,
    go_to_tile,
    intent_targets,
    is_correct_dish,
    nearest_target,
)
from app.core.teammates.memory import IntentType, PolicyMemory
from app.core.teammates.params import H3Params

RUNNER, PLATER, FLEXIBLE = range(3)
POT_ADJACENT, CENTRAL, NEAR_TEAMMATE = range(3)

Candidate = Tuple[IntentType, Tuple[Cell, ...]]


def effective_role(state: GameState, p: H3Params, ctx: PolicyContext) -> int:
    """Papel do passo; o flexível vira empratador com panela ocupada ou prato na mão."""
    if p.role_mode != FLEXIBLE:
        return p.role_mode
    held = ctx.me(state).inventory
    if any_pot_busy(state) or (held is not None and held.kind != ItemKind.INGREDIENT):
        return PLATER
    return RUNNER


def handoff_cell(state: GameState, p: H3Params, ctx: PolicyContext) -> Optional[Cell]:
    """
    Balcão livre usado para passar itens ao parceiro.

    Estilo 0: mais próximo (Manhattan) de uma panela; 1: mais próximo do
    centroide do piso; 2: mais próximo do parceiro. Empates por distância de
    navegação e depois pela célula.
    """
    layout = ctx.layout
    origin = ctx.me(state).position
    if p.handoff_style == POT_ADJACENT:
        anchors = [tuple(map(float, cell)) for cell in layout.cells_by_kind[TileKind.POT]]
    elif p.handoff_style == CENTRAL:
        floor = np.asarray(layout.floor_cells, dtype=float)
        anchors = [tuple(floor.mean(axis=0))] if len(floor) else []
    else:
        anchors = [tuple(map(float, ctx.partner(state).position))]
    if not anchors:
        return None

    best, best_key = None, None
    for cell in empty_counters(state, ctx):
        d_nav = ctx.nav.tile_distance(origin, cell)
        if d_nav is None:
            continue
        d_anchor = min(abs(cell[0] - ay) + abs(cell[1] - ax) for ay, ax in anchors)
        key = (d_anchor, d_nav, cell)
        if best_key is None or key < best_key:
            best, best_key = cell, key
    return best


def prestage_targets(recipe: int, layout: LayoutSpec) -> Tuple[Cell, ...]:
    """Dispensadores dos ingredientes com contagem positiva na receita."""
    counts = decode_recipe(recipe, layout.n_ingredients)
    cells = {cell for ingredient, n in enumerate(counts) if n > 0 for cell in layout.dispensers_of(ingredient)}
    return tuple(sorted(cells))


def _runner_candidates(state, p: H3Params, mem, rng, ctx) -> List[Candidate]:
    layout = ctx.layout
    held = ctx.me(state).inventory
    handoff = handoff_cell(state, p, ctx)
    stage = (IntentType.STAGE_ON_COUNTER, (handoff,) if handoff is not None else ())
    start = (IntentType.START_COOKING, intent_targets(IntentType.START_COOKING, state, ctx, mem))
    out: List[Candidate] = []

    if start[1] and draw_once(mem, "eager_start", p.start_cook_bias, rng):
        out.append(start)
    if held is not None:
        if held.kind == ItemKind.INGREDIENT:
            out.append((IntentType.ADD_INGREDIENT, intent_targets(IntentType.ADD_INGREDIENT, state, ctx, mem)))
        out.append(stage)
        return out

    out.append((IntentType.FETCH_INGREDIENT, intent_targets(IntentType.FETCH_INGREDIENT, state, ctx, mem)))
    out.append(start)
    if mem.known_recipe is not None and draw_once(mem, "prestage", p.prestage_bias, rng):
        # adiantar um ingrediente da receita para a passagem
        out.append((IntentType.FETCH_INGREDIENT, prestage_targets(mem.known_recipe, layout)))
    out.append((IntentType.PRESS_L, intent_targets(IntentType.PRESS_L, state, ctx, mem)))
    return out


def _plater_candidates(state, p: H3Params, mem, rng, ctx) -> List[Candidate]:
    layout = ctx.layout
    held = ctx.me(state).inventory
    handoff = handoff_cell(state, p, ctx)
    stage = (IntentType.STAGE_ON_COUNTER, (handoff,) if handoff is not None else ())
    press = (IntentType.PRESS_L, intent_targets(IntentType.PRESS_L, state, ctx, mem))
    out: List[Candidate] = []

    if held is not None:
        if held.kind == ItemKind.DISH:
            if is_correct_dish(held, mem.known_recipe):
                out.append((IntentType.DELIVER, layout.cells_by_kind[TileKind.SERVING]))
            elif mem.known_recipe is None:
                out.append(press)
        elif held.kind == ItemKind.PLATE:
            out.append((IntentType.PICKUP_COOKED, intent_targets(IntentType.PICKUP_COOKED, state, ctx, mem)))
            if any_pot_busy(state):
                return out
        out.append(stage)
        return out

    threshold = p.plate_urgency * COOK_TIME
    ready_soon = any(
        pot.cooked or (0 < pot.cooking_timer <= threshold) for pot in state.pots.values()
    )
    if ready_soon:
        out.append((IntentType.GET_PLATE, layout.cells_by_kind[TileKind.PLATE_PILE]))
    out.append(press)
    return out


def act_h3(
    state: GameState,
    p: H3Params,
    mem: PolicyMemory,
    rng: np.random.Generator,
    ctx: PolicyContext,
) -> Action:
    """
    Um passo do agente de linha de montagem.

    Ruído na ordem: hesitação (STAY), ação aleatória e abandono da intenção
    corrente. Sem abandono, a intenção corrente é mantida enquanto viável.
    """
    mem.observe(state, ctx.layout)
    if rng.random() < p.hesitation_prob:
        return finish(Action.STAY, state, ctx, mem, rng)
    if rng.random() < p.wrong_action_prob:
        return finish(Action(int(rng.integers(N_ACTIONS))), state, ctx, mem, rng)
    if mem.current_intent is not None and rng.random() < p.task_abandon_prob:
        mem.current_intent = None

    if effective_role(state, p, ctx) == RUNNER:
        candidates = _runner_candidates(state, p, mem, rng, ctx)
    else:
        candidates = _plater_candidates(state, p, mem, rng, ctx)

    origin = ctx.me(state).position
    feasible = []
    for intent, targets in candidates:
        tile, _ = nearest_target(ctx, origin, targets)
        if tile is not None:
            feasible.append((intent, tile))

    if not feasible:
        mem.current_intent = None
        mem.scratch.pop("eager_start", None)
        mem.scratch.pop("prestage", None)
        return finish(Action.STAY, state, ctx, mem, rng)

    chosen = next((c for c in feasible if c[0] == mem.current_intent), feasible[0])
    intent, tile = chosen
    if intent != IntentType.START_COOKING:
        mem.scratch.pop("eager_start", None)
    if intent == IntentType.STAGE_ON_COUNTER:
        mem.scratch.pop("prestage", None)
    mem.current_intent = intent
    return finish(go_to_tile(state, ctx, tile), state, ctx, mem, rng)
