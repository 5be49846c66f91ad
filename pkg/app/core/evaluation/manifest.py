"""
Manifestos das trilhas de avaliação.

Trilha 1 ("teammate"): layouts de treino × parceiros de teste.
Trilha 2 ("layout"): layouts de teste × parceiros de teste.
"""

import re
from typing import List, Optional, Sequence

import structlog

from app.core.exceptions import ManifestError
from app.core.kitchen.layout import layouts_for, load_layout
from app.core.kitchen.rng import derive_key
from app.core.teammates.sampling import SPLITS
from app.schemas.manifest import BenchmarkEntry, CollectTask
from app.schemas.teammate import TeammateSpec

logger = structlog.get_logger()

TRACKS = ("teammate", "layout")
# partição dos layouts avaliados em cada trilha
TRACK_LAYOUT_SPLIT = {"teammate": "train", "layout": "test"}


def spec_split(spec: TeammateSpec) -> Optional[str]:
    """Partição codificada na string canônica "<prefixo>/<família>/<partição>/<índice>"."""
    parts = spec.spec_string.split("/")
    if len(parts) >= 2 and parts[-2] in SPLITS:
        return parts[-2]
    return None


def entry_seed(seed: int, *names) -> int:
    return derive_key(seed, *names) % (2**63)


def build_track_manifest(
    track: str,
    teammates: Sequence[TeammateSpec],
    seed: int = 0,
    layouts: Optional[Sequence[str]] = None,
) -> List[BenchmarkEntry]:
    """
    Todas as combinações (layout da trilha, parceiro de teste).

    Raises:
        ManifestError: Trilha desconhecida ou parceiro da partição de treino
    """
    if track not in TRACKS:
        raise ManifestError(f"Trilha desconhecida: {track}")
    for spec in teammates:
        if spec_split(spec) == "train":
            raise ManifestError(f"Parceiro de treino em manifesto de avaliação: {spec.spec_string}")
    names = list(layouts) if layouts is not None else layouts_for(track, TRACK_LAYOUT_SPLIT[track])
    entries = [
        BenchmarkEntry(
            track=track,
            split="test",
            layout=name,
            teammate_spec=spec,
            seed=entry_seed(seed, "eval", name, spec.spec_string),
        )
        for name in names
        for spec in teammates
    ]
    validate_track(entries)
    logger.info("track_manifest_built", track=track, layouts=len(names), entries=len(entries))
    return entries


def validate_track(entries: Sequence[BenchmarkEntry]) -> None:
    """
    Garante a separação das trilhas.

    Raises:
        ManifestError: Layout fora da partição da trilha ou parceiro de treino
    """
    for number, entry in enumerate(entries, start=1):
        layout = load_layout(entry.layout)
        expected = TRACK_LAYOUT_SPLIT[entry.track]
        if layout.track != entry.track or layout.split != expected:
            raise ManifestError(
                f"Entrada {number}: layout '{entry.layout}' ({layout.track}/{layout.split}) "
                f"não pertence à trilha {entry.track}/{expected}"
            )
        if entry.teammate_spec is not None and spec_split(entry.teammate_spec) == "train":
            raise ManifestError(f"Entrada {number}: parceiro de treino {entry.teammate_spec.spec_string}")


def build_collect_manifest(
    teammates: Sequence[TeammateSpec],
    layouts: Sequence[str],
    seed: int = 0,
    track: str = "teammate",
    split: str = "train",
) -> List[CollectTask]:
    """Uma tarefa de coleta por (layout, parceiro), com task_id e seed derivados."""
    tasks = []
    for name in layouts:
        load_layout(name)
        for spec in teammates:
            label = re.sub(r"[^A-Za-z0-9_.\-]", "-", spec.spec_string)
            tasks.append(
                CollectTask(
                    task_id=f"{name}__{label}",
                    layout=name,
                    split=split,
                    track=track,
                    teammate_spec=spec,
                    seed=entry_seed(seed, "collect", name, spec.spec_string),
                )
            )
    logger.info("collect_manifest_built", layouts=len(layouts), tasks=len(tasks))
    return tasks
