"""
Exceções de domínio do pipeline de benchmark.

Todas derivam de ValueError ou RuntimeError para que chamadores genéricos
continuem funcionando; a CLI converte qualquer uma delas em código de saída 1.
"""


class LayoutError(ValueError):
    """Arquivo de layout ou metadados inválidos."""


class RecipeError(ValueError):
    """Contagens de receita fora das regras de codificação."""


class ManifestError(ValueError):
    """Entrada de manifesto inválida ou referência desconhecida."""


class StoreError(ValueError):
    """Operação inválida sobre o armazenamento de históricos."""


class CorruptChunkError(StoreError):
    """Chunk com checksum divergente ou tamanho inconsistente."""


class InsufficientEpisodesError(ValueError):
    """Sequência de retornos curta demais para a métrica pedida."""


class ExternalPolicyError(RuntimeError):
    """Falha de comunicação com uma política externa."""


class TaskLockedError(RuntimeError):
    """Tarefa de coleta já em execução por outro worker."""
