"""
Codificação da observação parcial 5×5×C centrada no agente.

Ordem dos blocos de canais: [posição 1, direção 4, inventário 2+n] do
observador e depois do parceiro, terreno estático 6, dispensers n, objetos
dinâmicos 2+n, receita 2+n, timer da panela 1 e indicador de entrega 1
(opcional). Vetores de item (2+n) usam [prato, cozido, contagens...].
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.recipe import decode_recipe, encode_recipe, is_cooked, with_status
from app.core.kitchen.types import (
    AgentState,
    Cell,
    Direction,
    GameState,
    Item,
    ItemKind,
    PotState,
    TileKind,
)

VIEW_RADIUS = 2
VIEW_SIZE = 2 * VIEW_RADIUS + 1

TERRAIN_KINDS: Tuple[TileKind, ...] = (
    TileKind.COUNTER,
    TileKind.SERVING,
    TileKind.POT,
    TileKind.RECIPE_STATIC,
    TileKind.RECIPE_BUTTON,
    TileKind.PLATE_PILE,
)


@dataclass(frozen=True)
class ChannelLayout:
    """Offsets de cada bloco de canais para um dado n."""

    n_ingredients: int
    has_delivery_indicator: bool

    @property
    def item_size(self) -> int:
        return 2 + self.n_ingredients

    @property
    def agent_size(self) -> int:
        return 5 + self.item_size

    def agent_offset(self, slot: int) -> int:
        return slot * self.agent_size

    @property
    def terrain(self) -> int:
        return 2 * self.agent_size

    @property
    def dispensers(self) -> int:
        return self.terrain + len(TERRAIN_KINDS)

    @property
    def dynamic(self) -> int:
        return self.dispensers + self.n_ingredients

    @property
    def recipe(self) -> int:
        return self.dynamic + self.item_size

    @property
    def pot_timer(self) -> int:
        return self.recipe + self.item_size

    @property
    def delivery(self) -> Optional[int]:
        return self.pot_timer + 1 if self.has_delivery_indicator else None

    @property
    def total(self) -> int:
        return self.pot_timer + 1 + int(self.has_delivery_indicator)


def channel_layout(layout: LayoutSpec) -> ChannelLayout:
    return ChannelLayout(layout.n_ingredients, layout.has_delivery_indicator)


def recipe_visible(state: GameState, layout: LayoutSpec) -> bool:
    """A receita alvo está exposta em algum indicador ativo."""
    return layout.has_static_indicator or (layout.has_button and state.button_visible_timer > 0)


def item_vector(item: Optional[Item], n_ingredients: int) -> np.ndarray:
    vector = np.zeros(2 + n_ingredients, dtype=np.float32)
    if item is None:
        return vector
    if item.kind == ItemKind.INGREDIENT:
        vector[2 + item.ingredient] = 1.0
    elif item.kind == ItemKind.PLATE:
        vector[0] = 1.0
    else:
        vector[0] = 1.0
        vector[1] = 1.0 if is_cooked(item.recipe) else 0.0
        vector[2:] = decode_recipe(item.recipe, n_ingredients)
    return vector


def _pot_vector(pot: PotState, n_ingredients: int) -> np.ndarray:
    vector = np.zeros(2 + n_ingredients, dtype=np.float32)
    vector[1] = 1.0 if pot.cooked else 0.0
    vector[2:] = pot.contents
    return vector


@lru_cache(maxsize=64)
def _static_planes(layout: LayoutSpec) -> np.ndarray:
    """Terreno + dispensers com borda de zeros de VIEW_RADIUS células."""
    n = layout.n_ingredients
    planes = np.zeros(
        (layout.height + 2 * VIEW_RADIUS, layout.width + 2 * VIEW_RADIUS, len(TERRAIN_KINDS) + n),
        dtype=np.float32,
    )
    inner = planes[VIEW_RADIUS:-VIEW_RADIUS, VIEW_RADIUS:-VIEW_RADIUS]
    for channel, kind in enumerate(TERRAIN_KINDS):
        inner[:, :, channel] = layout.tiles == kind
    for ingredient in range(n):
        inner[:, :, len(TERRAIN_KINDS) + ingredient] = layout.dispenser_index == ingredient
    planes.setflags(write=False)
    return planes


def _window_cell(cell: Cell, center: Cell) -> Optional[Cell]:
    dy = cell[0] - center[0] + VIEW_RADIUS
    dx = cell[1] - center[1] + VIEW_RADIUS
    if 0 <= dy < VIEW_SIZE and 0 <= dx < VIEW_SIZE:
        return (dy, dx)
    return None


def _write_agent(obs: np.ndarray, offset: int, agent: AgentState, center: Cell, n: int):
    local = _window_cell(agent.position, center)
    if local is None:
        return
    obs[local[0], local[1], offset] = 1.0
    obs[local[0], local[1], offset + 1 + int(agent.direction)] = 1.0
    obs[local[0], local[1], offset + 5:offset + 7 + n] = item_vector(agent.inventory, n)


def observe(state: GameState, agent: int, layout: LayoutSpec) -> np.ndarray:
    """
    Observação (5, 5, C) do agente `agent`; células fora do grid são zero.
    """
    if agent not in (0, 1):
        raise ValueError(f"Agente inválido: {agent}")
    n = layout.n_ingredients
    ch = channel_layout(layout)
    obs = np.zeros((VIEW_SIZE, VIEW_SIZE, ch.total), dtype=np.float32)

    center = state.agents[agent].position
    y, x = center
    obs[:, :, ch.terrain:ch.dynamic] = _static_planes(layout)[y:y + VIEW_SIZE, x:x + VIEW_SIZE]

    _write_agent(obs, ch.agent_offset(0), state.agents[agent], center, n)
    _write_agent(obs, ch.agent_offset(1), state.agents[1 - agent], center, n)

    for cell, item in state.counters.items():
        local = _window_cell(cell, center)
        if local is not None:
            obs[local[0], local[1], ch.dynamic:ch.recipe] = item_vector(item, n)

    for cell, pot in state.pots.items():
        local = _window_cell(cell, center)
        if local is not None:
            obs[local[0], local[1], ch.dynamic:ch.recipe] = _pot_vector(pot, n)
            obs[local[0], local[1], ch.pot_timer] = float(pot.cooking_timer)

    recipe_counts = np.asarray(decode_recipe(state.target_recipe, n), dtype=np.float32)
    indicator_cells = list(layout.cells_by_kind[TileKind.RECIPE_STATIC])
    if state.button_visible_timer > 0:
        indicator_cells += layout.cells_by_kind[TileKind.RECIPE_BUTTON]
    for cell in indicator_cells:
        local = _window_cell(cell, center)
        if local is not None:
            obs[local[0], local[1], ch.recipe + 2:ch.pot_timer] = recipe_counts

    if ch.delivery is not None and state.delivered_correctly():
        for cell in layout.cells_by_kind[TileKind.SERVING]:
            local = _window_cell(cell, center)
            if local is not None:
                obs[local[0], local[1], ch.delivery] = 1.0

    return obs


def _decode_item(vector: np.ndarray) -> Optional[Item]:
    counts = tuple(int(round(v)) for v in vector[2:])
    if vector[0] > 0.5:
        if vector[1] > 0.5:
            return Item.dish(with_status(encode_recipe(counts, target=False)))
        return Item.plate()
    if sum(counts) == 1:
        return Item.of_ingredient(counts.index(1))
    return None


def decode_observation(
    obs: np.ndarray,
    layout: LayoutSpec,
) -> Tuple[LayoutSpec, GameState, Optional[int]]:
    """
    Reconstrói layout e estado locais (janela 5×5) a partir de uma observação.

    O observador fica no centro; o parceiro fora da janela recebe a posição
    sentinela (-1, -1). Células fora do grid original aparecem como piso.

    Returns:
        (layout local, estado local, receita visível ou None)
    """
    ch = channel_layout(layout)
    if obs.shape != (VIEW_SIZE, VIEW_SIZE, ch.total):
        raise ValueError(
            f"Formato de observação {obs.shape} incompatível com {(VIEW_SIZE, VIEW_SIZE, ch.total)}"
        )
    n = layout.n_ingredients
    tiles = np.zeros((VIEW_SIZE, VIEW_SIZE), dtype=np.int8)
    dispensers = np.full((VIEW_SIZE, VIEW_SIZE), -1, dtype=np.int8)
    terrain = obs[:, :, ch.terrain:ch.dispensers]
    dispenser_planes = obs[:, :, ch.dispensers:ch.dynamic]
    for y in range(VIEW_SIZE):
        for x in range(VIEW_SIZE):
            hits = np.flatnonzero(terrain[y, x] > 0.5)
            if hits.size:
                tiles[y, x] = TERRAIN_KINDS[int(hits[0])]
                continue
            ingredient = np.flatnonzero(dispenser_planes[y, x] > 0.5)
            if ingredient.size:
                tiles[y, x] = TileKind.DISPENSER
                dispensers[y, x] = int(ingredient[0])

    local_layout = LayoutSpec(
        name=f"{layout.name}:window",
        width=VIEW_SIZE,
        height=VIEW_SIZE,
        tiles=tiles,
        dispenser_index=dispensers,
        n_ingredients=n,
        recipe_pool=layout.recipe_pool,
        has_delivery_indicator=layout.has_delivery_indicator,
        episode_length=layout.episode_length,
        start_regions=((), ()),
        explicit_cook=layout.explicit_cook,
        track=layout.track,
        split=layout.split,
    )

    def decode_agent(slot: int) -> Optional[AgentState]:
        offset = ch.agent_offset(slot)
        hits = np.argwhere(obs[:, :, offset] > 0.5)
        if not len(hits):
            return None
        cy, cx = (int(v) for v in hits[0])
        direction = Direction(int(np.argmax(obs[cy, cx, offset + 1:offset + 5])))
        inventory = _decode_item(obs[cy, cx, offset + 5:offset + 7 + n])
        return AgentState((cy, cx), direction, inventory)

    me = decode_agent(0) or AgentState((VIEW_RADIUS, VIEW_RADIUS), Direction.UP)
    partner = decode_agent(1) or AgentState((-1, -1), Direction.UP)

    pots: Dict[Cell, PotState] = {}
    counters: Dict[Cell, Item] = {}
    for cell in local_layout.cells_by_kind[TileKind.POT]:
        vector = obs[cell[0], cell[1], ch.dynamic:ch.recipe]
        timer = int(round(float(obs[cell[0], cell[1], ch.pot_timer])))
        contents = tuple(int(round(v)) for v in vector[2:])
        pots[cell] = PotState(contents, timer, cooked=bool(vector[1] > 0.5))
    for cell in local_layout.cells_by_kind[TileKind.COUNTER]:
        item = _decode_item(obs[cell[0], cell[1], ch.dynamic:ch.recipe])
        if item is not None:
            counters[cell] = item

    recipe: Optional[int] = None
    button_visible = 0
    for kind in (TileKind.RECIPE_STATIC, TileKind.RECIPE_BUTTON):
        for cell in local_layout.cells_by_kind[kind]:
            counts = tuple(int(round(v)) for v in obs[cell[0], cell[1], ch.recipe + 2:ch.pot_timer])
            if sum(counts) == 3:
                recipe = encode_recipe(counts)
                if kind == TileKind.RECIPE_BUTTON:
                    button_visible = 1

    state = GameState(
        agents=(me, partner),
        pots=pots,
        counters=counters,
        target_recipe=recipe if recipe is not None else 0,
        button_visible_timer=button_visible,
        t=0,
    )
    return local_layout, state, recipe
