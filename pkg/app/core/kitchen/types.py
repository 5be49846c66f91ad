"""
Tipos de domínio da cozinha cooperativa.

Estados são dataclasses imutáveis por convenção: `step` sempre devolve um
novo GameState e nunca altera o recebido.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Optional, Tuple

Cell = Tuple[int, int]


class Action(IntEnum):
    """Ações individuais, codificação estável 0..5."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    STAY = 4
    INTERACT = 5


class Direction(IntEnum):
    """Orientação do agente (ordem do one-hot na observação)."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


N_ACTIONS = len(Action)
MOVE_ACTIONS: Tuple[Action, ...] = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)

DIRECTION_DELTAS: Dict[Direction, Cell] = {
    Direction.UP: (-1, 0),
    Direction.DOWN: (1, 0),
    Direction.LEFT: (0, -1),
    Direction.RIGHT: (0, 1),
}

JointAction = Tuple[int, int]


class TileKind(IntEnum):
    """
    Tipos de célula do grid.

    COUNTER cobre parede e balcão: é intransitável e pode receber itens.
    """

    FLOOR = 0
    COUNTER = 1
    POT = 2
    DISPENSER = 3
    PLATE_PILE = 4
    SERVING = 5
    RECIPE_STATIC = 6
    RECIPE_BUTTON = 7


class ItemKind(IntEnum):
    INGREDIENT = 0
    PLATE = 1
    DISH = 2


@dataclass(frozen=True)
class Item:
    """Item em inventário ou sobre um balcão."""

    kind: ItemKind
    ingredient: int = -1
    recipe: int = 0  # receita empacotada com bits de status (apenas pratos)

    @classmethod
    def of_ingredient(cls, index: int) -> "Item":
        return cls(kind=ItemKind.INGREDIENT, ingredient=index)

    @classmethod
    def plate(cls) -> "Item":
        return cls(kind=ItemKind.PLATE)

    @classmethod
    def dish(cls, packed: int) -> "Item":
        return cls(kind=ItemKind.DISH, recipe=packed)


@dataclass(frozen=True)
class AgentState:
    position: Cell
    direction: Direction
    inventory: Optional[Item] = None

    @property
    def facing(self) -> Cell:
        """Célula à frente do agente."""
        dy, dx = DIRECTION_DELTAS[self.direction]
        return (self.position[0] + dy, self.position[1] + dx)


@dataclass(frozen=True)
class PotState:
    """Panela: contagens por ingrediente, timer de cozimento e flag de pronto."""

    contents: Tuple[int, ...]
    cooking_timer: int = 0
    cooked: bool = False

    @property
    def total(self) -> int:
        return sum(self.contents)

    @property
    def is_idle(self) -> bool:
        """Panela aceitando ingredientes (não cozinhando nem pronta)."""
        return self.cooking_timer == 0 and not self.cooked


# Eventos de recompensa esparsa
DELIVERY_CORRECT = "delivery_correct"
DELIVERY_WRONG = "delivery_wrong"
BUTTON_PRESS = "button_press"

EVENT_VALUES: Dict[str, int] = {
    DELIVERY_CORRECT: 20,
    DELIVERY_WRONG: -20,
    BUTTON_PRESS: -5,
}


@dataclass(frozen=True)
class RewardEvent:
    agent: int
    kind: str

    @property
    def value(self) -> int:
        return EVENT_VALUES[self.kind]


@dataclass(frozen=True)
class GameState:
    """
    Estado global completo do ambiente.

    Attributes:
        agents: Par de AgentState (agente 0 é o ego)
        pots: Mapa célula -> PotState
        counters: Mapa célula -> Item sobre balcões
        target_recipe: Receita alvo empacotada (bits de status zerados)
        button_visible_timer: Passos restantes de visibilidade após o botão
        t: Índice do passo
        episode_return_events: Eventos de recompensa do último passo
    """

    agents: Tuple[AgentState, AgentState]
    pots: Dict[Cell, PotState]
    counters: Dict[Cell, Item]
    target_recipe: int
    button_visible_timer: int = 0
    t: int = 0
    episode_return_events: Tuple[RewardEvent, ...] = field(default_factory=tuple)

    def delivered_correctly(self) -> bool:
        """Indica se houve entrega correta no último passo."""
        return any(e.kind == DELIVERY_CORRECT for e in self.episode_return_events)


@dataclass(frozen=True)
class StepOutcome:
    next_state: GameState
    reward_sparse: int
    reward_shaped: float
    done: bool
