"""
Tarefas de coleta executadas em processos de trabalho.
"""
