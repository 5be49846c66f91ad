"""
Parceiros roteirizados H1–H4, navegação pré-computada e amostragem de parâmetros.

Importe os submódulos diretamente (`app.core.teammates.policy`, ...).
"""
