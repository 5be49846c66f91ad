"""
Avaliação online multi-episódio, métricas de adaptação e diversidade.
"""
