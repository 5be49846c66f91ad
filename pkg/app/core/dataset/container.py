"""
Formato binário de store.bin.

    cabeçalho do arquivo (16 bytes, little-endian):
        magic "AHTSTORE" | versão u16 | codec u8 | reservado u8 | chunk_length u32

    registro de histórico (um por escrita, apenas acrescentado):
        "HIST" | history_id u64 | T u64 | n_campos u8
        por campo:
            len(nome) u8 | nome ASCII | dtype u8 | ndim u8 | dims u32 × ndim | n_chunks u32
            por chunk: offset u64 | bytes comprimidos u64 | bytes brutos u64 | crc32 u32
        dados dos chunks, na ordem dos campos e dos chunks

`dims` exclui o eixo de tempo. Offsets são absolutos no arquivo e
estritamente crescentes; o crc32 é do conteúdo descomprimido.
"""

import gzip
import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO, Dict, Iterator, List, Tuple

import numpy as np

from app.core.exceptions import CorruptChunkError, StoreError

MAGIC = b"AHTSTORE"
RECORD_MAGIC = b"HIST"
FORMAT_VERSION = 1
CODEC_GZIP = 1

_FILE_HEADER = struct.Struct("<8sHBBI")
_RECORD_HEADER = struct.Struct("<4sQQB")
_CHUNK_ENTRY = struct.Struct("<QQQI")

DTYPE_CODES: Dict[int, np.dtype] = {
    1: np.dtype("<f4"),
    2: np.dtype("<i4"),
    3: np.dtype("u1"),
}
CODE_OF_DTYPE = {dtype: code for code, dtype in DTYPE_CODES.items()}


@dataclass(frozen=True)
class ChunkEntry:
    offset: int
    compressed_size: int
    raw_size: int
    crc32: int


@dataclass(frozen=True)
class FieldHeader:
    name: str
    dtype: np.dtype
    shape: Tuple[int, ...]
    chunks: Tuple[ChunkEntry, ...]

    @property
    def row_bytes(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) * self.dtype.itemsize


@dataclass(frozen=True)
class RecordHeader:
    history_id: int
    T: int
    fields: Tuple[FieldHeader, ...]
    end: int

    def field(self, name: str) -> FieldHeader:
        for f in self.fields:
            if f.name == name:
                return f
        raise StoreError(f"Histórico {self.history_id} sem o campo '{name}'")

    @property
    def field_names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.fields)


@dataclass(frozen=True)
class StoreHeader:
    version: int
    codec: int
    chunk_length: int


def encode_file_header(chunk_length: int) -> bytes:
    return _FILE_HEADER.pack(MAGIC, FORMAT_VERSION, CODEC_GZIP, 0, chunk_length)


def read_file_header(fh: BinaryIO) -> StoreHeader:
    raw = fh.read(_FILE_HEADER.size)
    if len(raw) != _FILE_HEADER.size:
        raise StoreError("store.bin truncado (cabeçalho)")
    magic, version, codec, _, chunk_length = _FILE_HEADER.unpack(raw)
    if magic != MAGIC:
        raise StoreError("store.bin com magic inválido")
    if version != FORMAT_VERSION:
        raise StoreError(f"Versão de formato não suportada: {version}")
    if codec != CODEC_GZIP:
        raise StoreError(f"Codec desconhecido: {codec}")
    return StoreHeader(version=version, codec=codec, chunk_length=chunk_length)


def chunk_bounds(T: int, chunk_length: int) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk_length, T)) for start in range(0, T, chunk_length)]


def compress_chunk(raw: bytes, level: int) -> bytes:
    # mtime fixo: mesmos dados, mesmos bytes
    return gzip.compress(raw, compresslevel=level, mtime=0)


def encode_record(
    history_id: int,
    fields: Dict[str, np.ndarray],
    chunk_length: int,
    level: int,
    start_offset: int,
) -> Tuple[bytes, RecordHeader]:
    """
    Serializa um histórico a partir da posição `start_offset` do arquivo.

    Raises:
        StoreError: dtype sem código ou comprimentos inconsistentes
    """
    lengths = {len(array) for array in fields.values()}
    if len(lengths) != 1:
        raise StoreError(f"Campos com comprimentos diferentes: {sorted(lengths)}")
    T = lengths.pop()

    compressed: List[Tuple[str, np.ndarray, List[Tuple[bytes, int, int]]]] = []
    for name, array in fields.items():
        if array.dtype not in CODE_OF_DTYPE:
            raise StoreError(f"dtype não suportado em '{name}': {array.dtype}")
        array = np.ascontiguousarray(array)
        chunks = []
        for t0, t1 in chunk_bounds(T, chunk_length):
            raw = array[t0:t1].tobytes()
            chunks.append((compress_chunk(raw, level), len(raw), zlib.crc32(raw)))
        compressed.append((name, array, chunks))

    header_size = _RECORD_HEADER.size
    for name, array, chunks in compressed:
        header_size += 1 + len(name.encode("ascii")) + 2 + 4 * (array.ndim - 1) + 4
        header_size += _CHUNK_ENTRY.size * len(chunks)

    offset = start_offset + header_size
    header = bytearray(_RECORD_HEADER.pack(RECORD_MAGIC, history_id, T, len(compressed)))
    payload = bytearray()
    field_headers = []
    for name, array, chunks in compressed:
        encoded_name = name.encode("ascii")
        header += struct.pack("<B", len(encoded_name)) + encoded_name
        header += struct.pack("<BB", CODE_OF_DTYPE[array.dtype], array.ndim - 1)
        header += struct.pack(f"<{array.ndim - 1}I", *array.shape[1:])
        header += struct.pack("<I", len(chunks))
        entries = []
        for data, raw_size, crc in chunks:
            entry = ChunkEntry(offset, len(data), raw_size, crc)
            header += _CHUNK_ENTRY.pack(entry.offset, entry.compressed_size, entry.raw_size, entry.crc32)
            payload += data
            offset += len(data)
            entries.append(entry)
        field_headers.append(FieldHeader(name, array.dtype, tuple(array.shape[1:]), tuple(entries)))

    if len(header) != header_size:
        raise StoreError("Tamanho de cabeçalho inconsistente")
    record = RecordHeader(history_id=history_id, T=T, fields=tuple(field_headers), end=offset)
    return bytes(header + payload), record


def _read_exact(fh: BinaryIO, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise StoreError("store.bin truncado")
    return data


def read_record_header(fh: BinaryIO) -> RecordHeader:
    magic, history_id, T, n_fields = _RECORD_HEADER.unpack(_read_exact(fh, _RECORD_HEADER.size))
    if magic != RECORD_MAGIC:
        raise StoreError(f"Registro com magic inválido em {fh.tell() - _RECORD_HEADER.size}")
    fields = []
    end = fh.tell()
    last_offset = -1
    for _ in range(n_fields):
        (name_len,) = struct.unpack("<B", _read_exact(fh, 1))
        name = _read_exact(fh, name_len).decode("ascii")
        code, ndim = struct.unpack("<BB", _read_exact(fh, 2))
        if code not in DTYPE_CODES:
            raise StoreError(f"Código de dtype desconhecido: {code}")
        shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
        (n_chunks,) = struct.unpack("<I", _read_exact(fh, 4))
        entries = []
        for _ in range(n_chunks):
            entry = ChunkEntry(*_CHUNK_ENTRY.unpack(_read_exact(fh, _CHUNK_ENTRY.size)))
            if entry.offset <= last_offset:
                raise StoreError("Offsets de chunks não crescentes")
            last_offset = entry.offset
            end = entry.offset + entry.compressed_size
            entries.append(entry)
        fields.append(FieldHeader(name, DTYPE_CODES[code], tuple(shape), tuple(entries)))

    record = RecordHeader(history_id=history_id, T=T, fields=tuple(fields), end=max(end, fh.tell()))
    for f in record.fields:
        if sum(c.raw_size for c in f.chunks) != T * f.row_bytes:
            raise StoreError(f"Chunks de '{f.name}' inconsistentes com T={T}")
    return record


def scan_records(fh: BinaryIO) -> Iterator[RecordHeader]:
    """Percorre os registros a partir do fim do cabeçalho do arquivo."""
    fh.seek(0, 2)
    size = fh.tell()
    position = _FILE_HEADER.size
    while position < size:
        fh.seek(position)
        record = read_record_header(fh)
        yield record
        position = record.end


def decode_chunk(data: bytes, entry: ChunkEntry, field: FieldHeader, where: str) -> np.ndarray:
    """
    Descomprime e valida um chunk.

    Raises:
        CorruptChunkError: Falha de descompressão, tamanho ou crc32
    """
    try:
        raw = gzip.decompress(data)
    except (OSError, EOFError, zlib.error) as e:
        raise CorruptChunkError(f"Chunk corrompido em {where}: {e}") from e
    if len(raw) != entry.raw_size or zlib.crc32(raw) != entry.crc32:
        raise CorruptChunkError(f"Checksum divergente em {where}")
    return np.frombuffer(raw, dtype=field.dtype).reshape((-1,) + field.shape)
