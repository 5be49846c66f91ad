"""
Pipeline de históricos: coleta por fluxo, filtragem e rotulagem de especialista.
"""
