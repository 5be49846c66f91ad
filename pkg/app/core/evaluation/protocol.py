"""
Protocolo de políticas externas: frames binários com prefixo de tamanho.

    frame    = tamanho u32 LE | payload
    payload  = tamanho do cabeçalho u32 LE | cabeçalho JSON | arrays brutos

O cabeçalho lista os arrays ({"name", "dtype", "shape"}) na ordem em que seus
bytes aparecem. Requisições: "reset", "act" (observação + snapshot do buffer
de contexto) e "close". A resposta de "act" traz {"action": int}.

Endpoints: "host:port", "tcp://host:port" ou "unix:/caminho".
"""

import socket
import socketserver
import struct
import threading
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import orjson
import structlog
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from app.core.exceptions import ExternalPolicyError
from app.core.kitchen.rng import make_rng
from app.core.kitchen.types import N_ACTIONS

logger = structlog.get_logger()

_U32 = struct.Struct("<I")
MAX_FRAME_BYTES = 1 << 31

Arrays = Dict[str, np.ndarray]
Handler = Callable[[dict, Arrays], dict]


def encode_message(header: dict, arrays: Optional[Arrays] = None) -> bytes:
    arrays = arrays or {}
    described = dict(header)
    described["arrays"] = [
        {"name": name, "dtype": np.asarray(a).dtype.str, "shape": list(np.shape(a))}
        for name, a in arrays.items()
    ]
    head = orjson.dumps(described, option=orjson.OPT_SORT_KEYS)
    body = b"".join(np.ascontiguousarray(a).tobytes() for a in arrays.values())
    return _U32.pack(len(head)) + head + body


def decode_message(payload: bytes) -> Tuple[dict, Arrays]:
    if len(payload) < _U32.size:
        raise ExternalPolicyError("Mensagem truncada")
    (head_len,) = _U32.unpack_from(payload)
    header = orjson.loads(payload[_U32.size:_U32.size + head_len])
    offset = _U32.size + head_len
    arrays: Arrays = {}
    for spec in header.pop("arrays", []):
        dtype = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        size = count * dtype.itemsize
        if offset + size > len(payload):
            raise ExternalPolicyError(f"Array '{spec['name']}' truncado")
        if count == 0:
            arrays[spec["name"]] = np.zeros(spec["shape"], dtype=dtype)
            continue
        arrays[spec["name"]] = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(spec["shape"])
        offset += size
    return header, arrays


def _recv_exact(sock: socket.socket, size: int) -> bytes:
    chunks = bytearray()
    while len(chunks) < size:
        data = sock.recv(size - len(chunks))
        if not data:
            raise ConnectionError("Conexão encerrada pelo par")
        chunks += data
    return bytes(chunks)


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(_U32.pack(len(payload)) + payload)


def recv_frame(sock: socket.socket) -> bytes:
    (size,) = _U32.unpack(_recv_exact(sock, _U32.size))
    if size > MAX_FRAME_BYTES:
        raise ExternalPolicyError(f"Frame grande demais: {size} bytes")
    return _recv_exact(sock, size)


def parse_endpoint(endpoint: str) -> Tuple[int, object]:
    """Família de socket e endereço de um endpoint."""
    if endpoint.startswith("unix:"):
        return socket.AF_UNIX, endpoint[len("unix:"):]
    address = endpoint[len("tcp://"):] if endpoint.startswith("tcp://") else endpoint
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ExternalPolicyError(f"Endpoint inválido: {endpoint}")
    return socket.AF_INET, (host or "127.0.0.1", int(port))


class PolicyClient:
    """
    Cliente de uma política externa.

    A conexão é tentada `attempts` vezes com espera exponencial.

    Raises:
        ExternalPolicyError: Endpoint inacessível, resposta inválida ou timeout
    """

    def __init__(self, endpoint: str, timeout_s: float = 30.0, attempts: int = 5):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        family, address = parse_endpoint(endpoint)
        try:
            for attempt in Retrying(
                stop=stop_after_attempt(attempts),
                wait=wait_exponential(multiplier=0.1, max=2.0),
                retry=retry_if_exception_type(OSError),
                reraise=True,
            ):
                with attempt:
                    sock = socket.socket(family, socket.SOCK_STREAM)
                    sock.settimeout(timeout_s)
                    try:
                        sock.connect(address)
                    except OSError:
                        sock.close()
                        raise
        except OSError as e:
            logger.error("external_policy_unreachable", endpoint=endpoint, error=str(e))
            raise ExternalPolicyError(f"Endpoint inacessível: {endpoint} ({e})") from e
        self._sock = sock
        logger.info("external_policy_connected", endpoint=endpoint)

    def request(self, header: dict, arrays: Optional[Arrays] = None) -> Tuple[dict, Arrays]:
        try:
            send_frame(self._sock, encode_message(header, arrays))
            response, payload = decode_message(recv_frame(self._sock))
        except (OSError, ConnectionError) as e:
            raise ExternalPolicyError(f"Falha de comunicação com {self.endpoint}: {e}") from e
        if "error" in response:
            raise ExternalPolicyError(f"Política externa respondeu erro: {response['error']}")
        return response, payload

    def reset(self, episode: int, **extra) -> None:
        self.request({"type": "reset", "episode": int(episode), **extra})

    def act(self, obs: np.ndarray, context: Optional[Arrays] = None, **extra) -> int:
        arrays = {"obs": np.asarray(obs, dtype=np.float32)}
        for name, value in (context or {}).items():
            arrays[f"context.{name}"] = value
        response, _ = self.request({"type": "act", **extra}, arrays)
        action = response.get("action")
        if not isinstance(action, int) or not 0 <= action < N_ACTIONS:
            raise ExternalPolicyError(f"Ação inválida recebida: {action!r}")
        return action

    def close(self) -> None:
        try:
            send_frame(self._sock, encode_message({"type": "close"}))
        except OSError:
            pass
        finally:
            self._sock.close()


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        while True:
            try:
                header, arrays = decode_message(recv_frame(self.request))
            except (ConnectionError, OSError):
                return
            if header.get("type") == "close":
                return
            try:
                response = self.server.policy_handler(header, arrays)
            except Exception as e:
                logger.error("policy_handler_error", error=str(e))
                response = {"error": str(e)}
            send_frame(self.request, encode_message(response))


class _ThreadingTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class PolicyServer:
    """
    Servidor de referência: atende o protocolo com uma função `handler`.

    Usado para testes locais e como ponto de partida para políticas neurais.
    """

    def __init__(self, handler: Handler, host: str = "127.0.0.1", port: int = 0):
        self._server = _ThreadingTCPServer((host, port), _FrameHandler)
        self._server.policy_handler = handler
        self._thread = threading.Thread(target=self._server.serve_forever, name="policy-server", daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "PolicyServer":
        self._thread.start()
        logger.info("policy_server_started", endpoint=self.endpoint)
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "PolicyServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()
        return False


def random_policy_handler(seed: int = 0) -> Handler:
    """Handler uniforme sobre as seis ações; reinicia o rng a cada "reset"."""
    state = {"rng": make_rng(seed, "external", 0)}

    def handle(header: dict, arrays: Arrays) -> dict:
        if header.get("type") == "reset":
            state["rng"] = make_rng(seed, "external", int(header.get("episode", 0)))
            return {"ok": True}
        return {"action": int(state["rng"].integers(N_ACTIONS))}

    return handle


def constant_policy_handler(action: int) -> Handler:
    def handle(header: dict, arrays: Arrays) -> dict:
        return {"ok": True} if header.get("type") == "reset" else {"action": int(action)}

    return handle
