"""
Codificação de receitas em inteiros.

Cada tipo de ingrediente ocupa dois bits (contagem 0..3); os dois bits menos
significativos ficam reservados para status de prato (cozido e com prato).
"""

from typing import Sequence, Tuple

from app.core.exceptions import RecipeError

COOKED_BIT = 0b01
PLATE_BIT = 0b10
STATUS_MASK = COOKED_BIT | PLATE_BIT
INGREDIENTS_PER_RECIPE = 3
MAX_COUNT = 3


def encode_recipe(counts: Sequence[int], target: bool = True) -> int:
    """
    Empacota contagens por ingrediente.

    Args:
        counts: Contagem de cada tipo de ingrediente (0..3)
        target: Exige soma exatamente 3 (receita alvo)

    Returns:
        Receita empacotada com bits de status zerados
    """
    packed = 0
    for index, count in enumerate(counts):
        count = int(count)
        if count < 0 or count > MAX_COUNT:
            raise RecipeError(f"Contagem inválida para ingrediente {index}: {count}")
        packed |= count << (2 + 2 * index)
    if target and sum(int(c) for c in counts) != INGREDIENTS_PER_RECIPE:
        raise RecipeError(
            f"Receita alvo deve somar {INGREDIENTS_PER_RECIPE} ingredientes: {list(counts)}"
        )
    return packed


def decode_recipe(packed: int, n_ingredients: int) -> Tuple[int, ...]:
    """Extrai as contagens por ingrediente ignorando os bits de status."""
    return tuple((packed >> (2 + 2 * i)) & 0b11 for i in range(n_ingredients))


def recipe_from_ingredients(ingredients: Sequence[int], n_ingredients: int) -> int:
    """Converte uma lista de ingredientes (ex.: [0, 0, 0]) em receita alvo."""
    counts = [0] * n_ingredients
    for ingredient in ingredients:
        if ingredient < 0 or ingredient >= n_ingredients:
            raise RecipeError(f"Ingrediente {ingredient} fora de 0..{n_ingredients - 1}")
        counts[ingredient] += 1
    return encode_recipe(counts, target=True)


def with_status(packed: int, cooked: bool = True, plated: bool = True) -> int:
    """Liga os bits de status de prato."""
    return (packed & ~STATUS_MASK) | (COOKED_BIT if cooked else 0) | (PLATE_BIT if plated else 0)


def strip_status(packed: int) -> int:
    return packed & ~STATUS_MASK


def is_cooked(packed: int) -> bool:
    return bool(packed & COOKED_BIT)


def is_plated(packed: int) -> bool:
    return bool(packed & PLATE_BIT)
