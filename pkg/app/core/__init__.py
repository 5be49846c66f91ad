"""
Lógica central: ambiente, parceiros, históricos, dataset e avaliação.
"""
