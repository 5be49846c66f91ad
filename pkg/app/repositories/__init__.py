"""
Repositórios para acesso aos arquivos do pipeline.

Implementam o padrão Repository sobre JSONL e diretórios de artefatos.
"""

from app.repositories.artifact_repository import ArtifactRepository
from app.repositories.base import JsonlRepository

__all__ = [
    "ArtifactRepository",
    "JsonlRepository",
]
