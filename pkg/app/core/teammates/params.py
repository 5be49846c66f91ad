"""
Registros de parâmetros das famílias de parceiros H1–H4.

Nomes, faixas e padrões seguem as tabelas de parâmetros de cada família;
a validação pydantic garante que todo campo fica dentro da sua faixa.
"""

from enum import Enum
from typing import Dict, Type, Union

from pydantic import BaseModel, ConfigDict, Field


class Family(str, Enum):
    """Famílias de parceiros roteirizados, em ordem de cooperabilidade."""

    H1 = "H1"
    H2 = "H2"
    H3 = "H3"
    H4 = "H4"


class _Params(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class H1Params(_Params):
    """Agente consciente da receita."""

    press_L_when_unknown: float = Field(default=0.8, ge=0.0, le=1.0)
    refresh_interval: int = Field(default=100, ge=50, le=200)
    strict_recipe: float = Field(default=1.0, ge=0.0, le=1.0)
    plate_timing: float = Field(default=0.5, ge=0.0, le=1.0)
    dist_weight: float = Field(default=0.5, ge=0.1, le=1.0)
    inertia: float = Field(default=0.3, ge=0.0, le=1.0)
    idle_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    wrong_ingredient_prob: float = Field(default=0.0, ge=0.0, le=1.0)


class H2Params(_Params):
    """Agente territorial."""

    split_mode: int = Field(default=0, ge=0, le=2)
    strictness: float = Field(default=1.0, ge=0.0, le=1.0)
    shared_margin: float = Field(default=0.0, ge=0.0, le=3.0)
    rescue_threshold: float = Field(default=1.0, ge=0.0, le=1.0)
    yield_bias: float = Field(default=0.5, ge=0.0, le=1.0)
    behavior_mode: int = Field(default=0, ge=0, le=5)
    action_probability: float = Field(default=1.0, ge=0.0, le=1.0)


class H3Params(_Params):
    """Agente de linha de montagem."""

    role_mode: int = Field(default=2, ge=0, le=2)
    handoff_style: int = Field(default=0, ge=0, le=2)
    plate_urgency: float = Field(default=0.5, ge=0.0, le=1.0)
    prestage_bias: float = Field(default=0.0, ge=0.0, le=1.0)
    start_cook_bias: float = Field(default=0.5, ge=0.0, le=1.0)
    hesitation_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    wrong_action_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    task_abandon_prob: float = Field(default=0.0, ge=0.0, le=1.0)


class H4Params(_Params):
    """Agente guloso por utilidade (padrões da tabela de pesos)."""

    w_deliver: float = Field(default=10.0, ge=5.0, le=20.0)
    w_pickup_cooked: float = Field(default=8.0, ge=3.0, le=15.0)
    w_get_plate: float = Field(default=5.0, ge=2.0, le=10.0)
    w_add_ingredient: float = Field(default=6.0, ge=3.0, le=12.0)
    w_fetch_ingredient: float = Field(default=4.0, ge=2.0, le=10.0)
    w_stage_on_counter: float = Field(default=2.0, ge=0.5, le=5.0)
    w_start_cooking: float = Field(default=7.0, ge=3.0, le=15.0)
    w_press_L: float = Field(default=3.0, ge=1.0, le=8.0)
    dist_weight: float = Field(default=0.5, ge=0.1, le=1.5)
    inertia: float = Field(default=0.3, ge=0.0, le=1.0)


AnyParams = Union[H1Params, H2Params, H3Params, H4Params]

PARAM_MODELS: Dict[Family, Type[_Params]] = {
    Family.H1: H1Params,
    Family.H2: H2Params,
    Family.H3: H3Params,
    Family.H4: H4Params,
}

# Rótulos de variante usados em TeammateSpec.kind
H2_BEHAVIORS = ("normal", "blocker", "hoarder", "lazy", "invader", "mixed")
H3_ROLES = ("runner", "plater", "flexible")


def variant_label(family: Family, params: AnyParams) -> str:
    """Rótulo legível da variante (ex.: "assembly_line-plater")."""
    if family == Family.H1:
        return "recipe_aware"
    if family == Family.H2:
        return f"territory-{H2_BEHAVIORS[params.behavior_mode]}"
    if family == Family.H3:
        return f"assembly_line-{H3_ROLES[params.role_mode]}"
    return "utility_greedy"
