"""
Schemas Pydantic dos registros externos (sidecars, manifestos, índice, relatórios).

Os módulos são importados diretamente (`app.schemas.teammate` etc.).
"""
