"""
Schemas comuns reutilizáveis e codificação JSON determinística.
"""

from typing import Any

import orjson
from pydantic import BaseModel, ConfigDict

# Chaves ordenadas: a mesma entrada produz sempre os mesmos bytes
JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


class BaseSchema(BaseModel):
    """Base schema com configuração comum."""

    model_config = ConfigDict(
        from_attributes=True,
        populate_by_name=True,
        str_strip_whitespace=True,
    )

    def to_json(self) -> bytes:
        """Serializa em JSON compacto com chaves ordenadas."""
        return dumps(self.model_dump(mode="json"))


def dumps(obj: Any, indent: bool = False) -> bytes:
    option = JSON_OPTIONS | (orjson.OPT_INDENT_2 if indent else 0)
    return orjson.dumps(obj, option=option)


def loads(data: Any) -> Any:
    return orjson.loads(data)
