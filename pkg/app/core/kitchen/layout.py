"""
Layouts de cozinha: parsing do formato texto, validação e registro.

Formato: grid retangular UTF-8, um caractere por célula, acompanhado de um
sidecar JSON (LayoutMeta) com o mesmo nome-base.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import orjson
import structlog

from app.core.exceptions import LayoutError, RecipeError
from app.core.kitchen.recipe import recipe_from_ingredients
from app.core.kitchen.types import Cell, TileKind
from app.schemas.layout import LayoutMeta, LayoutSummary

logger = structlog.get_logger()

LAYOUTS_DIR = Path(__file__).parent / "layouts"

# Ordem canônica da tabela de layouts
LAYOUT_NAMES: Tuple[str, ...] = (
    "coord_simple",
    "coord_ring",
    "test_simple",
    "test_wide",
    "demo_simple",
    "demo_wide",
    "asymm_both",
    "asymm_right",
    "cramped_up",
    "cramped_down",
)

TILE_CHARS: Dict[str, TileKind] = {
    ".": TileKind.FLOOR,
    "a": TileKind.FLOOR,
    "b": TileKind.FLOOR,
    "#": TileKind.COUNTER,
    "P": TileKind.POT,
    "B": TileKind.PLATE_PILE,
    "S": TileKind.SERVING,
    "R": TileKind.RECIPE_STATIC,
    "L": TileKind.RECIPE_BUTTON,
}

BASE_CHANNELS = 25
CHANNELS_PER_INGREDIENT = 5


def channel_count(n_ingredients: int, has_delivery_indicator: bool) -> int:
    """C = 25 + 5n (+1 com indicador de entrega)."""
    return BASE_CHANNELS + CHANNELS_PER_INGREDIENT * n_ingredients + int(has_delivery_indicator)


@dataclass(eq=False)
class LayoutSpec:
    """
    Descrição estática de uma cozinha.

    Attributes:
        tiles: Grid (H, W) de TileKind
        dispenser_index: Grid (H, W) com o ingrediente de cada dispenser (-1 fora)
        recipe_pool: Receitas alvo empacotadas
        start_regions: Células de início de cada agente
    """

    name: str
    width: int
    height: int
    tiles: np.ndarray
    dispenser_index: np.ndarray
    n_ingredients: int
    recipe_pool: Tuple[int, ...]
    has_delivery_indicator: bool
    episode_length: int
    start_regions: Tuple[Tuple[Cell, ...], Tuple[Cell, ...]]
    explicit_cook: bool = False
    track: str = "teammate"
    split: str = "train"
    cells_by_kind: Dict[TileKind, Tuple[Cell, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        by_kind: Dict[TileKind, List[Cell]] = {kind: [] for kind in TileKind}
        for y in range(self.height):
            for x in range(self.width):
                by_kind[TileKind(int(self.tiles[y, x]))].append((y, x))
        self.cells_by_kind = {kind: tuple(cells) for kind, cells in by_kind.items()}

    @property
    def channels(self) -> int:
        return channel_count(self.n_ingredients, self.has_delivery_indicator)

    @property
    def floor_cells(self) -> Tuple[Cell, ...]:
        return self.cells_by_kind[TileKind.FLOOR]

    @property
    def has_button(self) -> bool:
        return bool(self.cells_by_kind[TileKind.RECIPE_BUTTON])

    @property
    def has_static_indicator(self) -> bool:
        return bool(self.cells_by_kind[TileKind.RECIPE_STATIC])

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.height and 0 <= cell[1] < self.width

    def tile(self, cell: Cell) -> TileKind:
        if not self.in_bounds(cell):
            return TileKind.COUNTER
        return TileKind(int(self.tiles[cell]))

    def is_floor(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.tiles[cell] == TileKind.FLOOR

    def dispensers_of(self, ingredient: int) -> Tuple[Cell, ...]:
        """Dispensers que fornecem o ingrediente, em ordem lexicográfica."""
        return tuple(
            cell for cell in self.cells_by_kind[TileKind.DISPENSER]
            if self.dispenser_index[cell] == ingredient
        )

    def summary(self) -> LayoutSummary:
        if self.has_button:
            indicator = "button"
        elif self.has_static_indicator:
            indicator = "static"
        else:
            indicator = "none"
        if self.has_delivery_indicator:
            indicator += "+delivery"
        return LayoutSummary(
            name=self.name,
            width=self.width,
            height=self.height,
            n_ingredients=self.n_ingredients,
            n_recipes=len(self.recipe_pool),
            channels=self.channels,
            indicator=indicator,
            track=self.track,
            split=self.split,
        )


def parse_layout(
    text: str,
    meta: Union[LayoutMeta, Dict],
    name: str = "custom",
) -> LayoutSpec:
    """
    Converte um grid texto + metadados em LayoutSpec validado.

    Args:
        text: Grid no formato canônico
        meta: LayoutMeta ou dict equivalente
        name: Nome do layout

    Returns:
        LayoutSpec validado

    Raises:
        LayoutError: Grid não retangular, caractere desconhecido, receita
            inválida ou dispenser fora de 0..n-1
    """
    if not isinstance(meta, LayoutMeta):
        meta = LayoutMeta.model_validate(meta)

    rows = [line.rstrip("\r") for line in text.splitlines()]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise LayoutError(f"Layout '{name}' vazio")

    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise LayoutError(f"Layout '{name}' não é retangular")
    height = len(rows)

    tiles = np.zeros((height, width), dtype=np.int8)
    dispensers = np.full((height, width), -1, dtype=np.int8)
    starts: Tuple[List[Cell], List[Cell]] = ([], [])

    for y, row in enumerate(rows):
        for x, char in enumerate(row):
            if char.isdigit():
                tiles[y, x] = TileKind.DISPENSER
                dispensers[y, x] = int(char)
                continue
            kind = TILE_CHARS.get(char)
            if kind is None:
                raise LayoutError(f"Caractere desconhecido '{char}' em ({y}, {x}) no layout '{name}'")
            tiles[y, x] = kind
            if char == "a":
                starts[0].append((y, x))
            elif char == "b":
                starts[1].append((y, x))

    border = np.concatenate([tiles[0, :], tiles[-1, :], tiles[:, 0], tiles[:, -1]])
    if np.any(border == TileKind.FLOOR):
        raise LayoutError(f"Borda do layout '{name}' contém piso")

    if not meta.recipes:
        raise LayoutError(f"Layout '{name}' sem receitas")

    used = [int(i) for i in dispensers[dispensers >= 0]]
    used += [int(i) for recipe in meta.recipes for i in recipe]
    derived_n = max(used) + 1 if used else 1
    n_ingredients = meta.n_ingredients or derived_n
    if dispensers.max() >= n_ingredients:
        raise LayoutError(
            f"Dispenser com índice {int(dispensers.max())} >= n={n_ingredients} no layout '{name}'"
        )

    pool: List[int] = []
    for recipe in meta.recipes:
        if len(recipe) != 3:
            raise LayoutError(f"Receita {recipe} do layout '{name}' não soma 3 ingredientes")
        try:
            pool.append(recipe_from_ingredients(recipe, n_ingredients))
        except RecipeError as e:
            raise LayoutError(f"Receita {recipe} inválida no layout '{name}': {e}") from e

    floor = [(y, x) for y in range(height) for x in range(width) if tiles[y, x] == TileKind.FLOOR]
    regions = tuple(tuple(cells) if cells else tuple(floor) for cells in starts)

    return LayoutSpec(
        name=name,
        width=width,
        height=height,
        tiles=tiles,
        dispenser_index=dispensers,
        n_ingredients=n_ingredients,
        recipe_pool=tuple(pool),
        has_delivery_indicator=meta.has_delivery_indicator,
        episode_length=meta.episode_length,
        start_regions=regions,
        explicit_cook=meta.explicit_cook,
        track=meta.track,
        split=meta.split,
    )


@lru_cache(maxsize=None)
def load_layout(name: str, directory: Optional[str] = None) -> LayoutSpec:
    """
    Carrega um layout distribuído com o pacote (ou de `directory`).

    Raises:
        LayoutError: Layout desconhecido
    """
    base = Path(directory) if directory else LAYOUTS_DIR
    grid_path = base / f"{name}.txt"
    meta_path = base / f"{name}.json"
    if not grid_path.exists() or not meta_path.exists():
        raise LayoutError(f"Layout desconhecido: {name}")

    meta = LayoutMeta.model_validate(orjson.loads(meta_path.read_bytes()))
    layout = parse_layout(grid_path.read_text(encoding="utf-8"), meta, name=name)
    logger.debug("layout_loaded", layout=name, channels=layout.channels)
    return layout


def list_layouts() -> List[LayoutSpec]:
    """Layouts distribuídos, na ordem canônica."""
    return [load_layout(name) for name in LAYOUT_NAMES]


def layouts_for(track: str, split: Optional[str] = None) -> List[str]:
    """Nomes dos layouts de uma trilha (e partição, se informada)."""
    return [
        layout.name for layout in list_layouts()
        if layout.track == track and (split is None or layout.split == split)
    ]


def resolve_layouts(names: Sequence[str]) -> List[LayoutSpec]:
    return [load_layout(name) for name in names]
