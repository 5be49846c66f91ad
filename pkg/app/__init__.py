"""
Benchmark de trabalho em equipe ad hoc com aprendizado em contexto.

Ambiente de cozinha para dois agentes, suíte de parceiros roteirizados,
coleta e filtragem de históricos de aprendizado, armazenamento em chunks e
protocolo de avaliação online.
"""

__version__ = "1.0.0"
__author__ = "AHT Benchmark Team"
