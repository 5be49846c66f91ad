"""
Configurações do pipeline usando Pydantic BaseSettings.

Carrega variáveis de ambiente (prefixo AHT_) e do arquivo .env; flags da CLI
têm precedência sobre ambas.
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Configurações centralizadas do benchmark.

    Todas as configurações podem ser sobrescritas via variáveis de ambiente
    `AHT_<NOME>` ou arquivo .env na raiz do projeto.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="AHT_",
        case_sensitive=False,
        extra="ignore",
    )

    # =========================================================================
    # Aplicação
    # =========================================================================
    APP_NAME: str = "aht-bench"
    VERSION: str = "1.0.0"
    SEED: int = Field(default=0, ge=0, lt=2**64, description="Seed raiz de toda a aleatoriedade")
    WORKERS: int = Field(default=1, ge=1, le=512, description="Processos de coleta")
    OUT_DIR: str = Field(default="runs", description="Diretório raiz das saídas (--out)")

    # =========================================================================
    # Armazenamento de históricos
    # =========================================================================
    STORE_CHUNK_LENGTH: int = Field(default=1000, ge=1, description="Passos por chunk")
    STORE_COMPRESSION_LEVEL: int = Field(default=6, ge=0, le=9, description="Nível gzip")
    STORE_CACHE_BYTES: int = Field(
        default=512 * 1024 * 1024, ge=0, description="Cache de chunks descomprimidos"
    )
    PREFETCH_DEPTH: int = Field(default=5, ge=1, description="Profundidade da fila de prefetch")

    # =========================================================================
    # Coleta
    # =========================================================================
    COLLECT_STREAMS: int = Field(default=1024, ge=1, description="Fluxos por tarefa")
    COLLECT_EPISODES: int = Field(default=146, ge=1, description="Episódios por fluxo")
    COLLECT_RECORDED_STEPS: int = Field(default=100, ge=1, description="Passos registrados por episódio")
    COLLECT_SAVE_INTERVAL: int = Field(default=10, ge=1, description="Episódios entre gravações")
    COLLECT_RETRIES: int = Field(default=2, ge=0, le=10, description="Novas tentativas por tarefa")
    COLLECT_FAIL_FAST: bool = Field(default=False, description="Abortar no primeiro erro")

    # =========================================================================
    # Avaliação
    # =========================================================================
    EVAL_EPISODES: int = Field(default=100, ge=1, description="Episódios por instância")
    EVAL_INSTANCES: int = Field(default=5, ge=1, description="Instâncias por família")
    EVAL_EPISODE_LENGTH: int = Field(default=100, ge=1, description="Passos por episódio")
    CONTEXT_K: int = Field(default=2000, ge=1, description="Capacidade do buffer de contexto")

    # =========================================================================
    # Políticas externas
    # =========================================================================
    EXTERNAL_TIMEOUT_S: float = Field(default=30.0, gt=0, description="Timeout por requisição")
    EXTERNAL_CONNECT_ATTEMPTS: int = Field(default=5, ge=1, description="Tentativas de conexão")

    # =========================================================================
    # Logging
    # =========================================================================
    LOG_LEVEL: str = Field(default="INFO", description="Nível de log")
    LOG_FORMAT: str = Field(default="console", description="Formato do log: json ou console")

    # =========================================================================
    # Validadores
    # =========================================================================
    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"LOG_LEVEL deve ser um de: {valid_levels}")
        return v.upper()

    @field_validator("LOG_FORMAT")
    @classmethod
    def validate_log_format(cls, v):
        if v.lower() not in ("json", "console"):
            raise ValueError("LOG_FORMAT deve ser 'json' ou 'console'")
        return v.lower()


@lru_cache()
def get_settings() -> Settings:
    """
    Retorna instância cacheada das configurações.

    Returns:
        Settings: Configurações do pipeline
    """
    return Settings()


# Instância global para importação conveniente
settings = get_settings()
