"""
Armazenamento de históricos em chunks comprimidos e amostradores de lotes.
"""
