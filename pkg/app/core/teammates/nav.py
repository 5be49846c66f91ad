"""
Tabelas de navegação pré-computadas por BFS.

Índices de célula são y * width + x; distâncias -1 marcam pares inalcançáveis.
"""

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import structlog

from app.core.kitchen.layout import LayoutSpec
from app.core.kitchen.types import DIRECTION_DELTAS, Action, AgentState, Cell, Direction

logger = structlog.get_logger()

UNREACHABLE = -1

_OPPOSITE: Dict[Direction, Action] = {
    Direction.UP: Action.DOWN,
    Direction.DOWN: Action.UP,
    Direction.LEFT: Action.RIGHT,
    Direction.RIGHT: Action.LEFT,
}


@dataclass(eq=False)
class NavTables:
    """
    Matrizes de distância e próxima ação entre todas as células.

    Attributes:
        dist: (N, N) passos entre células de piso, -1 se inalcançável
        next_action: (N, N) primeira ação do caminho mínimo (STAY no destino)
        access: Para cada célula não-piso, as células de piso adjacentes
            com a direção que encara a célula
    """

    width: int
    height: int
    dist: np.ndarray
    next_action: np.ndarray
    access: Dict[Cell, Tuple[Tuple[Cell, Direction], ...]]

    def index(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def distance(self, src: Cell, dst: Cell) -> Optional[int]:
        value = int(self.dist[self.index(src), self.index(dst)])
        return None if value == UNREACHABLE else value

    def step_toward(self, src: Cell, dst: Cell) -> Action:
        return Action(int(self.next_action[self.index(src), self.index(dst)]))

    def best_access(self, src: Cell, tile: Cell) -> Optional[Tuple[Cell, Direction, int]]:
        """Célula de acesso mais próxima do tile (empate: menor célula)."""
        best = None
        for cell, facing in self.access.get(tile, ()):
            d = self.distance(src, cell)
            if d is None:
                continue
            if best is None or (d, cell) < (best[2], best[0]):
                best = (cell, facing, d)
        return best

    def tile_distance(self, src: Cell, tile: Cell) -> Optional[int]:
        """Passos até poder interagir com o tile, contando a interação."""
        best = self.best_access(src, tile)
        return None if best is None else best[2] + 1

    def step_to_tile(self, agent: AgentState, tile: Cell) -> Action:
        """Próxima ação para alcançar, encarar e interagir com o tile."""
        best = self.best_access(agent.position, tile)
        if best is None:
            return Action.STAY
        cell, facing, _ = best
        if agent.position != cell:
            return self.step_toward(agent.position, cell)
        if agent.direction != facing:
            # mover contra célula não-piso apenas gira o agente
            return Action(int(facing))
        return Action.INTERACT


def _bfs_from(layout: LayoutSpec, target: Cell, dist: np.ndarray, next_action: np.ndarray):
    width = layout.width
    t = target[0] * width + target[1]
    dist[t, t] = 0
    queue = deque([target])
    while queue:
        u = queue.popleft()
        ui = u[0] * width + u[1]
        for direction, (dy, dx) in DIRECTION_DELTAS.items():
            v = (u[0] + dy, u[1] + dx)
            if not layout.is_floor(v):
                continue
            vi = v[0] * width + v[1]
            if dist[vi, t] != UNREACHABLE:
                continue
            dist[vi, t] = dist[ui, t] + 1
            next_action[vi, t] = _OPPOSITE[direction]
            queue.append(v)


def compute_nav_tables(layout: LayoutSpec) -> NavTables:
    """
    BFS a partir de cada célula de piso; consultas O(1) depois.

    Args:
        layout: Layout validado

    Returns:
        NavTables do layout
    """
    size = layout.width * layout.height
    dist = np.full((size, size), UNREACHABLE, dtype=np.int32)
    next_action = np.full((size, size), int(Action.STAY), dtype=np.int8)
    for cell in layout.floor_cells:
        _bfs_from(layout, cell, dist, next_action)

    access: Dict[Cell, Tuple[Tuple[Cell, Direction], ...]] = {}
    for y in range(layout.height):
        for x in range(layout.width):
            if layout.is_floor((y, x)):
                continue
            entries = []
            for direction, (dy, dx) in DIRECTION_DELTAS.items():
                neighbor = (y - dy, x - dx)
                if layout.is_floor(neighbor):
                    entries.append((neighbor, direction))
            access[(y, x)] = tuple(sorted(entries))

    logger.debug("nav_tables_built", layout=layout.name, floor_cells=len(layout.floor_cells))
    return NavTables(layout.width, layout.height, dist, next_action, access)


@lru_cache(maxsize=128)
def build_nav_tables(layout: LayoutSpec) -> NavTables:
    """Tabelas de navegação em cache por layout."""
    return compute_nav_tables(layout)


@lru_cache(maxsize=128)
def chokepoint(layout: LayoutSpec) -> Optional[Cell]:
    """Célula de piso com maior betweenness nos caminhos mínimos (empate: menor)."""
    nav = build_nav_tables(layout)
    floor = layout.floor_cells
    counts = {cell: 0 for cell in floor}
    for src in floor:
        for dst in floor:
            if src == dst or nav.distance(src, dst) is None:
                continue
            cell = src
            while True:
                dy, dx = DIRECTION_DELTAS[Direction(int(nav.step_toward(cell, dst)))]
                cell = (cell[0] + dy, cell[1] + dx)
                if cell == dst:
                    break
                counts[cell] += 1
    if not counts:
        return None
    return min(counts, key=lambda c: (-counts[c], c))
