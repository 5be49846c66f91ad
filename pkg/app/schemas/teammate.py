"""
Schema de especificação de parceiros roteirizados.
"""

from typing import Any, Dict

from pydantic import Field, model_validator

from app.core.kitchen.rng import spec_seed
from app.core.teammates.params import PARAM_MODELS, AnyParams, Family
from app.schemas.common import BaseSchema


class TeammateSpec(BaseSchema):
    """
    Parceiro totalmente determinado por família, parâmetros e string canônica.

    O seed não é armazenado: deriva sempre de `spec_string`.
    """

    family: Family = Field(..., description="Família H1–H4")
    kind: str = Field(..., description="Rótulo da variante")
    params: Dict[str, Any] = Field(..., description="Parâmetros da família")
    spec_string: str = Field(..., min_length=1, description="String canônica de seeding")

    @model_validator(mode="after")
    def validate_params(self) -> "TeammateSpec":
        # normaliza e valida as faixas com o modelo da família
        typed = PARAM_MODELS[self.family].model_validate(self.params)
        self.params = typed.model_dump()
        return self

    @property
    def seed(self) -> int:
        return spec_seed(self.spec_string)

    @property
    def typed_params(self) -> AnyParams:
        return PARAM_MODELS[self.family].model_validate(self.params)
