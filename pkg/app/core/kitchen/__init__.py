"""
Ambiente de cozinha cooperativa para dois agentes com observação parcial.
"""

from app.core.kitchen.env import (
    BUTTON_VISIBLE_STEPS,
    COOK_TIME,
    EnvConfig,
    KitchenEnv,
    reset,
    resolve_collisions,
    shaping_coefficient,
    step,
)
from app.core.kitchen.layout import (
    LAYOUT_NAMES,
    LayoutSpec,
    channel_count,
    list_layouts,
    load_layout,
    parse_layout,
)
from app.core.kitchen.observation import decode_observation, observe, recipe_visible
from app.core.kitchen.recipe import decode_recipe, encode_recipe
from app.core.kitchen.rng import make_rng, spec_seed
from app.core.kitchen.types import (
    Action,
    AgentState,
    Direction,
    GameState,
    Item,
    ItemKind,
    PotState,
    StepOutcome,
    TileKind,
)

__all__ = [
    "Action",
    "AgentState",
    "BUTTON_VISIBLE_STEPS",
    "COOK_TIME",
    "Direction",
    "EnvConfig",
    "GameState",
    "Item",
    "ItemKind",
    "KitchenEnv",
    "LAYOUT_NAMES",
    "LayoutSpec",
    "PotState",
    "StepOutcome",
    "TileKind",
    "channel_count",
    "decode_observation",
    "decode_recipe",
    "encode_recipe",
    "list_layouts",
    "load_layout",
    "make_rng",
    "observe",
    "parse_layout",
    "recipe_visible",
    "reset",
    "resolve_collisions",
    "shaping_coefficient",
    "spec_seed",
    "step",
]
