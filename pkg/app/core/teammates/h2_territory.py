"""
H2: agente territorial.

Modos de comportamento: 0 normal, 1 bloqueador, 2 acumulador, 3 preguiçoso,
4 invasor e 5 misto (sorteia um dos modos 0–4 a cada MIXED_SWITCH_INTERVAL
passos).
"""

import math
from typing import Optional, Sequence

import numpy as np

from app.core.kitchen.types import MOVE_ACTIONS, Action, Cell, GameState, TileKind
from app.core.teammates.common import (
    PolicyContext,
    cooked_pots,
    empty_counters,
    finish,
    go_to_cell,
    go_to_tile,
    intent_targets,
    move_target,
    nearest_target,
)
from app.core.teammates.h4_utility_greedy import DEFAULT_H4, WEIGHT_FIELDS, utility
from app.core.teammates.memory import IntentType, PolicyMemory
from app.core.teammates.nav import chokepoint
from app.core.teammates.params import H2Params

NORMAL, BLOCKER, HOARDER, LAZY, INVADER, MIXED = range(6)
BLOCKER_STAY_PROB = 0.7
MIXED_SWITCH_INTERVAL = 25

VERTICAL, HORIZONTAL, FUNCTIONAL = range(3)

PREP_TILES = (TileKind.POT, TileKind.DISPENSER)
SERVICE_TILES = (TileKind.SERVING, TileKind.PLATE_PILE)


def in_territory(cell: Cell, owner: int, p: H2Params, ctx: PolicyContext) -> bool:
    """
    Pertinência de um tile ao território do agente `owner`.

    Vertical: agente 0 à esquerda de ⌈W/2⌉; horizontal: agente 0 acima de
    ⌈H/2⌉; as ⌊shared_margin⌋ linhas/colunas de cada lado do corte são
    compartilhadas. Funcional: panelas e dispensers do agente 0, balcão de
    serviço e pratos do agente 1, demais tiles compartilhados.
    """
    layout = ctx.layout
    if p.split_mode == FUNCTIONAL:
        kind = layout.tile(cell)
        if kind in PREP_TILES:
            return owner == 0
        if kind in SERVICE_TILES:
            return owner == 1
        return True
    if p.split_mode == VERTICAL:
        coordinate, size = cell[1], layout.width
    else:
        coordinate, size = cell[0], layout.height
    split = math.ceil(size / 2)
    margin = int(p.shared_margin)
    if split - margin <= coordinate < split + margin:
        return True
    return (coordinate < split) == (owner == 0)


def urgency(intent: IntentType, state: GameState) -> float:
    """Urgência da intenção em [0, 1) para a regra de resgate."""
    if intent in (IntentType.DELIVER, IntentType.PICKUP_COOKED):
        return 0.9
    if intent == IntentType.GET_PLATE:
        return 0.6 if cooked_pots(state) else 0.3
    return 0.0


def _territorial_choice(state, p: H2Params, mem, rng, ctx, owner: int):
    origin = ctx.me(state).position
    allow_outside = rng.random() >= p.strictness
    best, best_score = (None, None), float("-inf")
    for intent in IntentType:
        targets = intent_targets(intent, state, ctx, mem)
        if not targets:
            continue
        if not (allow_outside or urgency(intent, state) >= p.rescue_threshold):
            targets = tuple(t for t in targets if in_territory(t, owner, p, ctx))
        tile, distance = nearest_target(ctx, origin, targets)
        if tile is None:
            continue
        score = utility(
            getattr(DEFAULT_H4, WEIGHT_FIELDS[intent]),
            1.0,
            distance,
            DEFAULT_H4.dist_weight,
            DEFAULT_H4.inertia,
            mem.current_intent == intent,
        )
        if score > best_score:
            best, best_score = (intent, tile), score
    return best


def _hoarder_target(state: GameState, ctx: PolicyContext) -> Optional[Cell]:
    held = ctx.me(state).inventory
    origin = ctx.me(state).position
    if held is not None:
        return nearest_target(ctx, origin, empty_counters(state, ctx))[0]
    sources: Sequence[Cell] = (
        ctx.layout.cells_by_kind[TileKind.DISPENSER] + ctx.layout.cells_by_kind[TileKind.PLATE_PILE]
    )
    return nearest_target(ctx, origin, sources)[0]


def _mode(state: GameState, p: H2Params, mem: PolicyMemory, rng: np.random.Generator) -> int:
    if p.behavior_mode != MIXED:
        return p.behavior_mode
    since = mem.scratch.get("mixed_since")
    if since is None or state.t - since >= MIXED_SWITCH_INTERVAL or state.t < since:
        mem.scratch["mixed_mode"] = int(rng.integers(MIXED))
        mem.scratch["mixed_since"] = state.t
    return mem.scratch["mixed_mode"]


def act_h2(
    state: GameState,
    p: H2Params,
    mem: PolicyMemory,
    rng: np.random.Generator,
    ctx: PolicyContext,
) -> Action:
    """
    Um passo do agente territorial.

    Intenções fora do território só são admitidas quando um sorteio supera
    `strictness` ou quando a urgência atinge `rescue_threshold`.
    """
    mem.observe(state, ctx.layout)
    mode = _mode(state, p, mem, rng)
    me = ctx.me(state)

    if mode == LAZY and rng.random() >= p.action_probability:
        return finish(Action.STAY, state, ctx, mem, rng)

    if mode == BLOCKER:
        choke = chokepoint(ctx.layout)
        if choke is None:
            return finish(Action.STAY, state, ctx, mem, rng)
        if me.position == choke:
            if rng.random() < BLOCKER_STAY_PROB:
                return finish(Action.STAY, state, ctx, mem, rng)
            return finish(MOVE_ACTIONS[int(rng.integers(len(MOVE_ACTIONS)))], state, ctx, mem, rng)
        return finish(go_to_cell(state, ctx, choke), state, ctx, mem, rng)

    if mode == HOARDER:
        tile = _hoarder_target(state, ctx)
        held = me.inventory
        mem.current_intent = (
            IntentType.STAGE_ON_COUNTER if held is not None
            else IntentType.FETCH_INGREDIENT
        )
        if tile is None:
            return finish(Action.STAY, state, ctx, mem, rng)
        return finish(go_to_tile(state, ctx, tile), state, ctx, mem, rng)

    owner = ctx.agent_index if mode != INVADER else 1 - ctx.agent_index
    intent, tile = _territorial_choice(state, p, mem, rng, ctx, owner)
    mem.current_intent = intent
    if intent is None:
        return finish(Action.STAY, state, ctx, mem, rng)

    action = go_to_tile(state, ctx, tile)
    if move_target(me, action) == ctx.partner(state).position and rng.random() < p.yield_bias:
        action = Action.STAY
    mem.scratch["last_target"] = tile
    return finish(action, state, ctx, mem, rng)
