#!/usr/bin/env python3
"""
Gera os manifestos da escala de bancada: 2 layouts × 4 famílias.

Uso:
    python scripts/build_desk_manifest.py --out runs/desk --seed 0
"""

import argparse
import sys
from pathlib import Path

# Adicionar diretório raiz ao path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.core.teammates.params import Family
from app.schemas.manifest import BenchmarkEntry, CollectTask
from app.services import ManifestService, TeammateService

DESK_LAYOUTS = ("coord_simple", "coord_ring")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--out", default="runs/desk")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--count", type=int, default=1, help="Parceiros por família")
    args = parser.parse_args()

    out = Path(args.out)
    teammates = TeammateService()
    manifests = ManifestService()

    print("=" * 60)
    print("Manifestos de bancada")
    print("=" * 60)

    train = teammates.sample(list(Family), "train", args.count, prefix="desk")
    test = teammates.sample(list(Family), "test", args.count, prefix="desk")
    teammates.write(train, out / "teammates" / "train.jsonl")
    teammates.write(test, out / "teammates" / "test.jsonl")
    print(f"  {len(train)} parceiros de treino, {len(test)} de teste")

    tasks = manifests.build_collect(train, seed=args.seed, layouts=DESK_LAYOUTS)
    manifests.write(tasks, CollectTask, out / "manifests" / "collect.jsonl")
    print(f"  {len(tasks)} tarefas de coleta")

    entries = manifests.build_track("teammate", test, seed=args.seed, layouts=DESK_LAYOUTS)
    manifests.write(entries, BenchmarkEntry, out / "manifests" / "teammate.jsonl")
    print(f"  {len(entries)} entradas de avaliação")

    print("=" * 60)
    print(f"Concluído em {out}")
    print("=" * 60)


if __name__ == "__main__":
    main()
