"""
H4: agente guloso por utilidade.

score(i) = w_i·v_i − dist_weight·d_i + inertia·1[i == intenção anterior]
"""

from typing import Dict, Optional

import numpy as np

from app.core.kitchen.types import Action, GameState
from app.core.teammates.common import (
    PolicyContext,
    finish,
    go_to_tile,
    intent_targets,
    natural_distance,
    nearest_target,
)
from app.core.teammates.memory import IntentType, PolicyMemory
from app.core.teammates.params import H4Params

WEIGHT_FIELDS: Dict[IntentType, str] = {
    IntentType.DELIVER: "w_deliver",
    IntentType.PICKUP_COOKED: "w_pickup_cooked",
    IntentType.GET_PLATE: "w_get_plate",
    IntentType.ADD_INGREDIENT: "w_add_ingredient",
    IntentType.FETCH_INGREDIENT: "w_fetch_ingredient",
    IntentType.STAGE_ON_COUNTER: "w_stage_on_counter",
    IntentType.START_COOKING: "w_start_cooking",
    IntentType.PRESS_L: "w_press_L",
}

DEFAULT_H4 = H4Params()


def utility(
    weight: float,
    value: float,
    distance: Optional[float],
    dist_weight: float,
    inertia: float,
    is_previous: bool,
) -> float:
    """Fórmula de utilidade; distância None (inalcançável) vale −∞."""
    if distance is None:
        return float("-inf")
    return weight * value - dist_weight * distance + (inertia if is_previous else 0.0)


def score_intent(
    i: IntentType,
    state: GameState,
    p: H4Params,
    mem: PolicyMemory,
    ctx: PolicyContext,
) -> float:
    """
    Pontua uma intenção para o agente do contexto.

    v_i = 1 quando a pré-condição vale (alvos viáveis existem); d_i é a
    distância até o alvo viável mais próximo ou, para intenções inviáveis,
    até o tile natural da intenção.
    """
    origin = ctx.me(state).position
    targets = intent_targets(i, state, ctx, mem)
    if targets:
        _, distance = nearest_target(ctx, origin, targets)
        value = 1.0
    else:
        distance = natural_distance(i, ctx, origin)
        value = 0.0
    return utility(
        getattr(p, WEIGHT_FIELDS[i]),
        value,
        distance,
        p.dist_weight,
        p.inertia,
        mem.current_intent == i,
    )


def choose_intent(state: GameState, p: H4Params, mem: PolicyMemory, ctx: PolicyContext):
    """Melhor intenção viável e seu alvo; (None, None) se nenhuma."""
    origin = ctx.me(state).position
    best = (None, None)
    best_score = float("-inf")
    for intent in IntentType:
        targets = intent_targets(intent, state, ctx, mem)
        if not targets:
            continue
        tile, distance = nearest_target(ctx, origin, targets)
        if tile is None:
            continue
        score = utility(
            getattr(p, WEIGHT_FIELDS[intent]),
            1.0,
            distance,
            p.dist_weight,
            p.inertia,
            mem.current_intent == intent,
        )
        if score > best_score:
            best, best_score = (intent, tile), score
    return best


def act_h4(
    state: GameState,
    p: H4Params,
    mem: PolicyMemory,
    rng: np.random.Generator,
    ctx: PolicyContext,
) -> Action:
    """Executa um passo da intenção de maior utilidade (STAY se nenhuma viável)."""
    mem.observe(state, ctx.layout)
    intent, tile = choose_intent(state, p, mem, ctx)
    mem.current_intent = intent
    if intent is None:
        return finish(Action.STAY, state, ctx, mem, rng)
    return finish(go_to_tile(state, ctx, tile), state, ctx, mem, rng)
