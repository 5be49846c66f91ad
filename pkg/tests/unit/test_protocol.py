"""
Testes do protocolo de políticas externas e dos adaptadores.
"""

import socket

import numpy as np
import pytest

from app.core.evaluation.adapters import ExternalEgo, ExternalTeammate, make_ego_adapter
from app.core.evaluation.protocol import (
    PolicyClient,
    PolicyServer,
    constant_policy_handler,
    decode_message,
    encode_message,
    parse_endpoint,
    random_policy_handler,
)
from app.core.exceptions import ExternalPolicyError
from app.core.history.egos import RandomEgo, StayEgo
from app.core.kitchen.env import EnvConfig, KitchenEnv


def free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class RecordingHandler:
    """Handler que guarda as requisições recebidas."""

    def __init__(self, action: int = 3):
        self.action = action
        self.requests = []

    def __call__(self, header, arrays):
        self.requests.append((header, {k: np.array(v) for k, v in arrays.items()}))
        return {"ok": True} if header.get("type") == "reset" else {"action": self.action}


class TestMessages:
    """Testes da codificação de mensagens."""

    def test_header_and_arrays_preserved(self):
        arrays = {
            "obs": np.arange(75, dtype=np.float32).reshape(5, 5, 3),
            "actions": np.array([1, 2, 3], dtype=np.int32),
            "empty": np.zeros((0, 4), dtype=np.float32),
        }
        header, decoded = decode_message(encode_message({"type": "act", "episode": 2}, arrays))
        assert header == {"type": "act", "episode": 2}
        assert list(decoded) == ["obs", "actions", "empty"]
        for name, array in arrays.items():
            assert decoded[name].dtype == array.dtype
            np.testing.assert_array_equal(decoded[name], array)

    def test_truncated_payload(self):
        payload = encode_message({"type": "act"}, {"obs": np.ones(10, dtype=np.float32)})
        with pytest.raises(ExternalPolicyError):
            decode_message(payload[:-4])
        with pytest.raises(ExternalPolicyError):
            decode_message(b"\x01")

    @pytest.mark.parametrize("endpoint, expected", [
        ("127.0.0.1:5000", (socket.AF_INET, ("127.0.0.1", 5000))),
        ("tcp://localhost:7", (socket.AF_INET, ("localhost", 7))),
        (":9000", (socket.AF_INET, ("127.0.0.1", 9000))),
        ("unix:/tmp/policy.sock", (socket.AF_UNIX, "/tmp/policy.sock")),
    ])
    def test_parse_endpoint(self, endpoint, expected):
        assert parse_endpoint(endpoint) == expected

    @pytest.mark.parametrize("endpoint", ["localhost", "host:port", "tcp://"])
    def test_invalid_endpoint(self, endpoint):
        with pytest.raises(ExternalPolicyError):
            parse_endpoint(endpoint)


class TestClientServer:
    """Testes de ida e volta com o servidor de referência."""

    def test_constant_policy(self):
        with PolicyServer(constant_policy_handler(4)) as server:
            client = PolicyClient(server.endpoint, timeout_s=5, attempts=3)
            client.reset(0)
            assert client.act(np.zeros((5, 5, 40))) == 4
            client.close()

    def test_random_policy_restarts_on_reset(self):
        with PolicyServer(random_policy_handler(seed=7)) as server:
            client = PolicyClient(server.endpoint, timeout_s=5)
            obs = np.zeros((5, 5, 40))
            client.reset(3)
            first = [client.act(obs) for _ in range(8)]
            client.reset(3)
            second = [client.act(obs) for _ in range(8)]
            client.close()
        assert first == second
        assert all(0 <= a <= 5 for a in first)

    def test_handler_error_reported(self):
        def broken(header, arrays):
            raise RuntimeError("sem modelo")

        with PolicyServer(broken) as server:
            client = PolicyClient(server.endpoint, timeout_s=5)
            with pytest.raises(ExternalPolicyError):
                client.act(np.zeros((5, 5, 40)))
            client.close()

    def test_invalid_action_rejected(self):
        with PolicyServer(constant_policy_handler(9)) as server:
            client = PolicyClient(server.endpoint, timeout_s=5)
            with pytest.raises(ExternalPolicyError):
                client.act(np.zeros((5, 5, 40)))
            client.close()

    def test_unreachable_endpoint(self):
        with pytest.raises(ExternalPolicyError):
            PolicyClient(f"127.0.0.1:{free_port()}", timeout_s=1, attempts=1)


class TestExternalAdapters:
    """Testes dos adaptadores de ego e parceiro externos."""

    def run_steps(self, ego, layout, steps: int):
        env = KitchenEnv(layout, EnvConfig(seed=0))
        state = env.reset(0)
        ego.reset(0)
        obs = env.observe(0)
        actions = []
        for t in range(steps):
            a0 = ego.act(obs, state)
            outcome = env.step((a0, 0))
            next_obs = env.observe(0)
            done = t == steps - 1
            ego.observe(obs, a0, outcome.reward_sparse, next_obs, done, 0)
            state, obs = outcome.next_state, next_obs
            actions.append(a0)
        return actions

    def test_step_buffer_grows_each_step(self, coord_simple):
        handler = RecordingHandler(action=2)
        with PolicyServer(handler) as server:
            ego = make_ego_adapter(f"external:{server.endpoint}", coord_simple, seed=0, context_k=3)
            assert isinstance(ego, ExternalEgo)
            assert self.run_steps(ego, coord_simple, 5) == [2] * 5
            ego.close()
        acts = [arrays for header, arrays in handler.requests if header["type"] == "act"]
        assert [len(a["context.obs"]) for a in acts] == [1, 2, 3, 3, 3]
        assert acts[0]["context.prev_action"].tolist() == [0]
        assert acts[1]["context.prev_action"].tolist() == [0, 2]
        assert acts[0]["obs"].shape == (5, 5, coord_simple.channels)

    def test_episode_buffer_waits_for_commit(self, coord_simple):
        handler = RecordingHandler(action=1)
        with PolicyServer(handler) as server:
            ego = make_ego_adapter(f"external:{server.endpoint}", coord_simple, seed=0,
                                   buffer="episode", with_teammate=True)
            self.run_steps(ego, coord_simple, 4)
            self.run_steps(ego, coord_simple, 2)
            ego.close()
        acts = [arrays for header, arrays in handler.requests if header["type"] == "act"]
        assert [len(a["context.action"]) for a in acts] == [0, 0, 0, 0, 4, 4]
        assert "context.teammate_action" in acts[-1]

    def test_external_teammate(self, coord_simple):
        handler = RecordingHandler(action=5)
        with PolicyServer(handler) as server:
            mate = ExternalTeammate.connect(f"external:{server.endpoint}", coord_simple, timeout_s=5)
            env = KitchenEnv(coord_simple, EnvConfig(seed=0))
            state = env.reset(0)
            mate.reset(0)
            assert mate.act(state) == 5
            mate.close()
        header, arrays = handler.requests[-1]
        assert header["agent"] == 1
        assert arrays["obs"].shape == (5, 5, coord_simple.channels)


class TestEgoFactory:
    """Testes da fábrica de egos de avaliação."""

    def test_local_kinds(self, coord_simple):
        assert isinstance(make_ego_adapter("random", coord_simple, seed=0), RandomEgo)
        assert isinstance(make_ego_adapter("stay", coord_simple, seed=0), StayEgo)

    def test_expert_ego_acts(self, coord_simple):
        ego = make_ego_adapter("h4", coord_simple, seed=0)
        env = KitchenEnv(coord_simple, EnvConfig(seed=0))
        state = env.reset(0)
        ego.reset(0)
        assert 0 <= ego.act(env.observe(0), state) <= 5

    def test_unknown_kind(self, coord_simple):
        with pytest.raises(ValueError):
            make_ego_adapter("transformer", coord_simple, seed=0)

    def test_unknown_buffer(self, coord_simple):
        with PolicyServer(constant_policy_handler(0)) as server:
            with pytest.raises(ValueError):
                make_ego_adapter(f"external:{server.endpoint}", coord_simple, seed=0, buffer="ring")
