"""
Amostragem determinística de parâmetros com partições treino/teste disjuntas.

Cada campo é sorteado, na ordem de declaração do modelo, do intervalo da
partição. O seed vem do SHA256 da string canônica do parceiro, então a mesma
string sempre gera os mesmos parâmetros.
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np
import structlog

from app.core.kitchen.rng import make_rng, spec_seed
from app.core.teammates.params import PARAM_MODELS, Family, variant_label
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()

SPLITS = ("train", "test")


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusivo

    def draw(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class Choice:
    options: Tuple[int, ...]

    def draw(self, rng: np.random.Generator) -> int:
        return int(self.options[int(rng.integers(len(self.options)))])


Distribution = Union[Uniform, IntRange, Choice]
SplitRange = Tuple[Distribution, Distribution]

UNIT = Uniform(0.0, 1.0)
NOISE = Uniform(0.0, 0.2)


def _same(dist: Distribution) -> SplitRange:
    return (dist, dist)


# (treino, teste) por campo; dimensões disjuntas marcadas em HELD_OUT
SPLIT_RANGES: Dict[Family, Dict[str, SplitRange]] = {
    Family.H1: {
        "press_L_when_unknown": _same(UNIT),
        "refresh_interval": (IntRange(50, 124), IntRange(125, 200)),
        "strict_recipe": _same(UNIT),
        "plate_timing": _same(UNIT),
        "dist_weight": _same(Uniform(0.1, 1.0)),
        "inertia": _same(UNIT),
        "idle_prob": _same(NOISE),
        "wrong_ingredient_prob": (Uniform(0.0, 0.5), Uniform(0.5, 1.0)),
    },
    Family.H2: {
        "split_mode": _same(Choice((0, 1, 2))),
        "strictness": _same(UNIT),
        "shared_margin": (Uniform(0.0, 1.5), Uniform(1.5, 3.0)),
        "rescue_threshold": _same(UNIT),
        "yield_bias": _same(UNIT),
        "behavior_mode": (Choice((1, 2, 3)), Choice((0, 4, 5))),
        "action_probability": _same(UNIT),
    },
    Family.H3: {
        "role_mode": (Choice((0, 2)), Choice((1,))),
        "handoff_style": _same(Choice((0, 1, 2))),
        "plate_urgency": (Uniform(0.0, 0.6), Uniform(0.6, 1.0)),
        "prestage_bias": _same(UNIT),
        "start_cook_bias": _same(UNIT),
        "hesitation_prob": _same(NOISE),
        "wrong_action_prob": _same(NOISE),
        "task_abandon_prob": _same(NOISE),
    },
    Family.H4: {
        "w_deliver": _same(Uniform(5.0, 20.0)),
        "w_pickup_cooked": _same(Uniform(3.0, 15.0)),
        "w_get_plate": _same(Uniform(2.0, 10.0)),
        "w_add_ingredient": _same(Uniform(3.0, 12.0)),
        "w_fetch_ingredient": _same(Uniform(2.0, 10.0)),
        "w_stage_on_counter": _same(Uniform(0.5, 5.0)),
        "w_start_cooking": _same(Uniform(3.0, 15.0)),
        "w_press_L": _same(Uniform(1.0, 8.0)),
        "dist_weight": (Uniform(0.1, 0.8), Uniform(0.8, 1.5)),
        "inertia": (Uniform(0.0, 0.5), Uniform(0.5, 1.0)),
    },
}

HELD_OUT: Dict[Family, Tuple[str, ...]] = {
    family: tuple(name for name, (train, test) in ranges.items() if train != test)
    for family, ranges in SPLIT_RANGES.items()
}


def canonical_spec_string(family: Family, split: str, prefix: str, index: int) -> str:
    """String canônica usada como semente: "<prefixo>/<família>/<partição>/<índice>"."""
    return f"{prefix}/{Family(family).value}/{split}/{index}"


def sample_params(family: Family, split: str, spec_string: str) -> TeammateSpec:
    """
    Sorteia os parâmetros de um parceiro.

    Args:
        family: Família H1–H4
        split: "train" ou "test"
        spec_string: String canônica (determina o seed)

    Returns:
        TeammateSpec validado

    Raises:
        ValueError: Família ou partição inválida
    """
    family = Family(family)
    if split not in SPLITS:
        raise ValueError(f"Partição inválida: {split}")

    slot = SPLITS.index(split)
    rng = make_rng(spec_seed(spec_string), "params")
    values = {
        name: SPLIT_RANGES[family][name][slot].draw(rng)
        for name in PARAM_MODELS[family].model_fields
    }
    params = PARAM_MODELS[family](**values)
    return TeammateSpec(
        family=family,
        kind=variant_label(family, params),
        params=params.model_dump(),
        spec_string=spec_string,
    )


def sample_population(
    families: Sequence[Family],
    split: str,
    count: int,
    prefix: str = "aht",
) -> list:
    """`count` parceiros por família, em ordem (família, índice)."""
    specs = [
        sample_params(family, split, canonical_spec_string(family, split, prefix, index))
        for family in families
        for index in range(count)
    ]
    logger.info("teammates_sampled", split=split, families=[Family(f).value for f in families], total=len(specs))
    return specs
