"""
Schemas de metadados de layout (arquivo sidecar JSON).
"""

from typing import List, Literal, Optional

from pydantic import Field

from app.schemas.common import BaseSchema

Track = Literal["teammate", "layout"]
Split = Literal["train", "test"]


class LayoutMeta(BaseSchema):
    """Metadados que acompanham o grid de um layout."""

    description: str = Field(default="", description="Descrição curta do layout")
    recipes: List[List[int]] = Field(..., description="Receitas como listas de ingredientes")
    episode_length: int = Field(default=400, gt=0, description="Passos por episódio")
    has_delivery_indicator: bool = Field(default=False, description="Canal de entrega correta")
    n_ingredients: Optional[int] = Field(default=None, ge=1, le=10, description="n explícito")
    explicit_cook: bool = Field(default=False, description="Cozimento exige interação explícita")
    track: Track = Field(default="teammate", description="Trilha de avaliação do layout")
    split: Split = Field(default="train", description="Partição do layout na trilha")


class LayoutSummary(BaseSchema):
    """Linha de listagem de layouts."""

    name: str
    width: int
    height: int
    n_ingredients: int
    n_recipes: int
    channels: int
    indicator: str
    track: Track
    split: Split
