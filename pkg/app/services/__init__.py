"""
Camada de serviços: um serviço por grupo de subcomandos.
"""

from app.services.collection_service import CollectionService
from app.services.dataset_service import DatasetService
from app.services.diversity_service import DiversityService
from app.services.evaluation_service import EvaluationService
from app.services.layout_service import LayoutService
from app.services.manifest_service import ManifestService
from app.services.teammate_service import TeammateService

__all__ = [
    "CollectionService",
    "DatasetService",
    "DiversityService",
    "EvaluationService",
    "LayoutService",
    "ManifestService",
    "TeammateService",
]
