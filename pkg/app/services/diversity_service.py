"""
Serviço de diversidade comportamental.
"""

from pathlib import Path
from typing import Optional, Sequence, Union

import pandas as pd
import structlog

from app.core.evaluation.diversity import diversity_report
from app.core.kitchen.layout import LAYOUT_NAMES, resolve_layouts
from app.repositories.artifact_repository import write_json
from app.schemas.report import DiversityReport
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()

DIVERSITY_DIR = "diversity"


class DiversityService:
    """Calcula as matrizes de Hamming e as grava em CSV e JSON."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def compute(
        self,
        specs: Sequence[TeammateSpec],
        n_states: int,
        seed: int = 0,
        layouts: Optional[Sequence[str]] = None,
        episode_len: int = 100,
    ) -> DiversityReport:
        """
        Raises:
            ValueError: n_states ≤ 0 ou nenhuma política
            LayoutError: Layout desconhecido
        """
        if not specs:
            raise ValueError("Nenhuma política para comparar")
        names = list(layouts) if layouts else [LAYOUT_NAMES[0]]
        report = diversity_report(specs, resolve_layouts(names), n_states, seed=seed, episode_len=episode_len)
        self.write(report)
        return report

    def write(self, report: DiversityReport) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(report.pairwise, index=report.policies, columns=report.policies).to_csv(
            self.out_dir / "pairwise.csv", index_label="policy"
        )
        pd.DataFrame(report.family_mean, index=report.families, columns=report.families).to_csv(
            self.out_dir / "family_mean.csv", index_label="family"
        )
        write_json(self.out_dir / "diversity.json", report.model_dump(mode="json"))
        logger.info("diversity_written", out=str(self.out_dir), policies=len(report.policies))
        return self.out_dir
