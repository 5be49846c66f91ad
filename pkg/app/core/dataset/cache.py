"""
Cache LRU de chunks descomprimidos, limitado em bytes.
"""

import threading
from collections import OrderedDict
from typing import Hashable, Optional

import numpy as np


class ChunkCache:
    """
    LRU por bytes ocupados.

    Um chunk maior que a capacidade nunca é armazenado. Seguro para um
    produtor de prefetch e um consumidor simultâneos.
    """

    def __init__(self, max_bytes: int):
        self.max_bytes = max_bytes
        self.current_bytes = 0
        self._items: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    def get(self, key: Hashable) -> Optional[np.ndarray]:
        with self._lock:
            value = self._items.get(key)
            if value is not None:
                self._items.move_to_end(key)
            return value

    def put(self, key: Hashable, value: np.ndarray) -> None:
        size = value.nbytes
        if size > self.max_bytes:
            return
        with self._lock:
            if key in self._items:
                self.current_bytes -= self._items.pop(key).nbytes
            self._items[key] = value
            self.current_bytes += size
            while self.current_bytes > self.max_bytes:
                _, evicted = self._items.popitem(last=False)
                self.current_bytes -= evicted.nbytes

    def clear(self) -> None:
        with self._lock:
            self._items.clear()
            self.current_bytes = 0
