"""
Geradores pseudoaleatórios baseados em contador (Philox).

Cada sorteio consome um sub-fluxo nomeado derivado de (seed, nomes); incluir
novos sorteios em um fluxo nunca perturba os demais.
"""

import hashlib
from typing import Union

import numpy as np

NamePart = Union[str, int]


def derive_key(seed: int, *names: NamePart) -> int:
    """Chave de 128 bits a partir do seed e do caminho do sub-fluxo."""
    path = "/".join(str(part) for part in names)
    digest = hashlib.sha256(f"{int(seed)}:{path}".encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def make_rng(seed: int, *names: NamePart) -> np.random.Generator:
    """
    Cria o gerador do sub-fluxo `names` do seed.

    Args:
        seed: Seed raiz (64 bits)
        names: Componentes do nome do sub-fluxo (ex.: "reset", 3)

    Returns:
        Generator numpy sobre Philox
    """
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *names)))


def spec_seed(spec_string: str) -> int:
    """Primeiros 8 bytes (little-endian) do SHA256 da string canônica."""
    digest = hashlib.sha256(spec_string.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
