"""
Schemas para relatórios de avaliação e de diversidade.
"""

from typing import List, Optional

from pydantic import Field

from app.schemas.common import BaseSchema


class InstanceResult(BaseSchema):
    """Retornos de um ego contra uma instância fixa de parceiro."""

    instance: int = Field(..., ge=0, description="Índice da instância no grupo")
    layout: str
    track: str
    teammate_family: str
    teammate_kind: str
    spec_string: Optional[str] = None
    seed: int
    returns: List[float] = Field(..., description="Retorno esparso não descontado por episódio")
    mean: float
    adaptation_gain: Optional[float] = Field(default=None, description="Nulo com menos de 40 episódios")


class GroupSummary(BaseSchema):
    """Agregado de uma família de parceiros em um layout."""

    layout: str
    track: str
    teammate_family: str
    instances: int
    mean: float = Field(..., description="Média das médias das instâncias")
    std: float = Field(..., description="Desvio-padrão das médias das instâncias")
    curve_mean: List[float] = Field(default_factory=list, description="Retorno médio por episódio")
    curve_std: List[float] = Field(default_factory=list)
    adaptation_gain: Optional[float] = Field(default=None, description="Ganho da curva média")


class EvalReport(BaseSchema):
    """Relatório completo de uma execução de `eval`."""

    ego: str
    episodes_per_instance: int
    instances_per_group: int
    episode_len: int
    seed: int
    results: List[InstanceResult] = Field(default_factory=list)
    groups: List[GroupSummary] = Field(default_factory=list)

    def group(self, layout: str, family: str) -> Optional[GroupSummary]:
        for g in self.groups:
            if g.layout == layout and g.teammate_family == family:
                return g
        return None


class DiversityReport(BaseSchema):
    """Distâncias de Hamming entre políticas e médias entre famílias."""

    n_states: int
    layouts: List[str]
    seed: int
    policies: List[str] = Field(..., description="Rótulo de cada política (spec_string)")
    policy_families: List[str]
    pairwise: List[List[float]]
    families: List[str]
    family_mean: List[List[float]]
