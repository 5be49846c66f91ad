"""
Testes unitários do ambiente de cozinha.
"""

import numpy as np
import pytest

from app.core.exceptions import LayoutError, RecipeError
from app.core.kitchen.env import (
    BUTTON_VISIBLE_STEPS,
    COOK_TIME,
    EnvConfig,
    KitchenEnv,
    reset,
    resolve_collisions,
    shaping_coefficient,
    step,
)
from app.core.kitchen.layout import LAYOUT_NAMES, channel_count, layouts_for, load_layout, parse_layout
from app.core.kitchen.observation import channel_layout, decode_observation, observe, recipe_visible
from app.core.kitchen.recipe import (
    decode_recipe,
    encode_recipe,
    is_cooked,
    is_plated,
    recipe_from_ingredients,
    strip_status,
    with_status,
)
from app.core.kitchen.rng import derive_key, make_rng, spec_seed
from app.core.kitchen.types import Action, AgentState, Direction, GameState, Item, ItemKind, PotState

from tests.conftest import TINY_CHANNELS, TINY_GRID

EXPECTED_CHANNELS = dict(zip(LAYOUT_NAMES, (40, 40, 41, 46, 40, 45, 35, 35, 35, 35)))

POT = (0, 3)
TARGET = encode_recipe((3, 0))


def make_state(
    ego: AgentState,
    pot: PotState = PotState((0, 0)),
    timer: int = 0,
    partner: tuple = (1, 1),
) -> GameState:
    return GameState(
        agents=(ego, AgentState(partner, Direction.UP)),
        pots={POT: pot},
        counters={},
        target_recipe=TARGET,
        button_visible_timer=timer,
    )


def interact(state, layout, rng=None):
    return step(state, (Action.INTERACT, Action.STAY), rng or make_rng(0, "recipe"), layout)


class TestRecipe:
    """Testes da codificação de receitas."""

    def test_encode_decode(self):
        packed = encode_recipe((1, 2, 0))
        assert decode_recipe(packed, 3) == (1, 2, 0)
        assert packed & 0b11 == 0

    def test_status_bits(self):
        dish = with_status(encode_recipe((3, 0)))
        assert is_cooked(dish) and is_plated(dish)
        assert strip_status(dish) == encode_recipe((3, 0))

    def test_target_must_sum_three(self):
        with pytest.raises(RecipeError):
            encode_recipe((1, 1))

    def test_recipe_from_ingredients(self):
        assert recipe_from_ingredients([1, 1, 0], 2) == encode_recipe((1, 2))
        with pytest.raises(RecipeError):
            recipe_from_ingredients([0, 0, 5], 2)


class TestLayouts:
    """Testes de parsing e do registro de layouts."""

    def test_channel_formula(self):
        assert channel_count(3, False) == 40
        assert channel_count(4, True) == 46

    @pytest.mark.parametrize("name", LAYOUT_NAMES)
    def test_observation_channels_match_table(self, name):
        layout = load_layout(name)
        env = KitchenEnv(layout, EnvConfig(seed=1))
        env.reset(0)
        assert env.observe(0).shape == (5, 5, EXPECTED_CHANNELS[name])
        assert layout.channels == EXPECTED_CHANNELS[name]

    def test_coord_simple_summary(self):
        summary = load_layout("coord_simple").summary()
        assert summary.n_ingredients == 3
        assert summary.channels == 40
        assert summary.indicator == "button"

    def test_unknown_layout(self):
        with pytest.raises(LayoutError):
            load_layout("does_not_exist")

    def test_track_registry(self):
        assert layouts_for("teammate", "train") == list(LAYOUT_NAMES[:6])
        assert layouts_for("layout", "test") == ["asymm_right", "cramped_down"]

    def test_non_rectangular_grid(self):
        with pytest.raises(LayoutError):
            parse_layout("#####\n#..#\n#####\n", {"recipes": [[0, 0, 0]]})

    def test_unknown_character(self):
        with pytest.raises(LayoutError):
            parse_layout("#####\n#.?.#\n#####\n", {"recipes": [[0, 0, 0]]})

    def test_floor_on_border(self):
        with pytest.raises(LayoutError):
            parse_layout("#0#P#\n....S\n#B#L#\n", {"recipes": [[0, 0, 0]]})

    def test_dispenser_out_of_range(self):
        with pytest.raises(LayoutError):
            parse_layout(TINY_GRID, {"recipes": [[0, 0, 0]], "n_ingredients": 1})

    def test_tiny_layout(self, tiny_layout):
        assert tiny_layout.n_ingredients == 2
        assert tiny_layout.channels == TINY_CHANNELS
        assert tiny_layout.floor_cells == ((1, 1), (1, 2), (1, 3))


class TestDynamics:
    """Testes de reset, step e colisões."""

    def test_reset_is_deterministic(self, coord_simple):
        a = reset(coord_simple, EnvConfig(), make_rng(7, "reset", 0))
        b = reset(coord_simple, EnvConfig(), make_rng(7, "reset", 0))
        assert a == b
        assert a.agents[0].position != a.agents[1].position
        assert a.agents[0].position in coord_simple.start_regions[0]
        assert a.target_recipe in coord_simple.recipe_pool

    def test_step_does_not_mutate_state(self, tiny_layout):
        state = make_state(AgentState((1, 2), Direction.UP))
        before = (state.agents, dict(state.pots), state.t)
        step(state, (Action.RIGHT, Action.STAY), make_rng(0), tiny_layout)
        assert (state.agents, dict(state.pots), state.t) == before

    def test_swap_is_reverted(self):
        assert resolve_collisions([(1, 1), (1, 2)], [(1, 2), (1, 1)]) == [(1, 1), (1, 2)]

    def test_same_target_reverts_both(self):
        assert resolve_collisions([(1, 1), (1, 3)], [(1, 2), (1, 2)]) == [(1, 1), (1, 3)]

    def test_chain_is_resolved_iteratively(self):
        # o agente 1 fica parado, então o agente 0 também precisa voltar
        assert resolve_collisions([(1, 1), (1, 2)], [(1, 2), (1, 2)]) == [(1, 1), (1, 2)]

    def test_moving_into_counter_only_turns(self, tiny_layout):
        state = make_state(AgentState((1, 2), Direction.LEFT))
        outcome = step(state, (Action.UP, Action.STAY), make_rng(0), tiny_layout)
        agent = outcome.next_state.agents[0]
        assert agent.position == (1, 2)
        assert agent.direction == Direction.UP

    def test_done_at_horizon(self, tiny_layout):
        env = KitchenEnv(tiny_layout, EnvConfig(horizon=3))
        env.reset(0)
        dones = [env.step((Action.STAY, Action.STAY)).done for _ in range(3)]
        assert dones == [False, False, True]
        with pytest.raises(ValueError):
            env.step((Action.STAY, Action.STAY))

    def test_shaping_coefficient(self):
        assert shaping_coefficient(0, 100) == 1.0
        assert shaping_coefficient(50, 100) == 0.5
        assert shaping_coefficient(150, 100) == 0.0


class TestRewards:
    """Testes das recompensas esparsas e dos timers."""

    def test_correct_delivery(self, tiny_layout):
        dish = Item.dish(with_status(TARGET))
        state = make_state(AgentState((1, 3), Direction.RIGHT, dish))
        outcome = interact(state, tiny_layout)
        assert outcome.reward_sparse == 20
        assert outcome.next_state.agents[0].inventory is None
        assert outcome.next_state.delivered_correctly()

    def test_wrong_delivery(self, tiny_layout):
        dish = Item.dish(with_status(encode_recipe((2, 1))))
        state = make_state(AgentState((1, 3), Direction.RIGHT, dish))
        outcome = interact(state, tiny_layout)
        assert outcome.reward_sparse == -20
        assert outcome.next_state.agents[0].inventory is None

    def test_button_costs_and_reveals_for_ten_steps(self, tiny_layout):
        state = make_state(AgentState((1, 3), Direction.DOWN))
        outcome = interact(state, tiny_layout)
        assert outcome.reward_sparse == -5
        state = outcome.next_state
        visible = 0
        for _ in range(BUTTON_VISIBLE_STEPS + 5):
            if recipe_visible(state, tiny_layout):
                visible += 1
            state = step(state, (Action.STAY, Action.STAY), make_rng(0), tiny_layout).next_state
        assert visible == BUTTON_VISIBLE_STEPS == 10

    def test_third_ingredient_starts_twenty_step_cook(self, tiny_layout):
        state = make_state(AgentState((1, 3), Direction.UP, Item.of_ingredient(0)), PotState((2, 0)))
        outcome = interact(state, tiny_layout)
        assert outcome.reward_sparse == 0
        assert outcome.reward_shaped > 0
        pot = outcome.next_state.pots[POT]
        assert pot.contents == (3, 0)
        assert pot.cooking_timer == COOK_TIME == 20

        state = outcome.next_state
        for _ in range(COOK_TIME - 1):
            state = step(state, (Action.STAY, Action.STAY), make_rng(0), tiny_layout).next_state
        assert not state.pots[POT].cooked
        state = step(state, (Action.STAY, Action.STAY), make_rng(0), tiny_layout).next_state
        assert state.pots[POT].cooked

    def test_full_pot_rejects_ingredient(self, tiny_layout):
        held = Item.of_ingredient(1)
        state = make_state(AgentState((1, 3), Direction.UP, held), PotState((3, 0), 5))
        outcome = interact(state, tiny_layout)
        assert outcome.next_state.agents[0].inventory == held
        assert outcome.next_state.pots[POT].contents == (3, 0)

    def test_plate_takes_cooked_soup(self, tiny_layout):
        state = make_state(AgentState((1, 3), Direction.UP, Item.plate()), PotState((3, 0), 0, True))
        outcome = interact(state, tiny_layout)
        dish = outcome.next_state.agents[0].inventory
        assert dish.kind == ItemKind.DISH
        assert strip_status(dish.recipe) == TARGET
        assert outcome.next_state.pots[POT].total == 0

    def test_explicit_cook_requires_interaction(self):
        layout = parse_layout(TINY_GRID, {"recipes": [[0, 0, 0]], "explicit_cook": True}, name="tiny_cook")
        state = make_state(AgentState((1, 3), Direction.UP, Item.of_ingredient(0)), PotState((2, 0)))
        state = interact(state, layout).next_state
        assert state.pots[POT].cooking_timer == 0
        state = interact(state, layout).next_state
        assert state.pots[POT].cooking_timer == COOK_TIME


class TestObservation:
    """Testes da observação parcial."""

    def test_out_of_grid_cells_are_zero(self, tiny_layout):
        state = make_state(AgentState((1, 1), Direction.UP), partner=(1, 3))
        obs = observe(state, 0, tiny_layout)
        # agente na coluna 1: as colunas locais 0 ficam fora do grid
        assert not obs[:, 0, :].any()
        assert obs[2, 2, 0] == 1.0

    def test_delivery_indicator_lights_serving_tiles(self):
        layout = parse_layout(
            TINY_GRID, {"recipes": [[0, 0, 0]], "has_delivery_indicator": True}, name="tiny_delivery"
        )
        assert layout.channels == TINY_CHANNELS + 1
        state = make_state(AgentState((1, 3), Direction.RIGHT, Item.dish(with_status(TARGET))))
        next_state = interact(state, layout).next_state
        obs = observe(next_state, 0, layout)
        delivery = channel_layout(layout).delivery
        assert obs[2, 3, delivery] == 1.0
        assert obs[..., delivery].sum() == 1.0

    def test_invalid_agent(self, tiny_layout):
        with pytest.raises(ValueError):
            observe(make_state(AgentState((1, 2), Direction.UP)), 2, tiny_layout)

    def test_decode_observation_recovers_local_state(self, tiny_layout):
        ego = AgentState((1, 2), Direction.RIGHT, Item.of_ingredient(1))
        state = make_state(ego, PotState((1, 1), 0))
        obs = observe(state, 0, tiny_layout)
        local, decoded, _ = decode_observation(obs, tiny_layout)
        assert decoded.agents[0].position == (2, 2)
        assert decoded.agents[0].direction == Direction.RIGHT
        assert decoded.agents[0].inventory == Item.of_ingredient(1)
        assert decoded.agents[1].position == (2, 1)
        assert decoded.pots[(1, 3)].contents == (1, 1)
        np.testing.assert_array_equal(observe(decoded, 0, local)[..., :TINY_CHANNELS], obs)


class TestRng:
    """Testes dos sub-fluxos nomeados."""

    def test_streams_are_reproducible_and_independent(self):
        a = make_rng(3, "reset", 1).integers(0, 1 << 30, 8)
        b = make_rng(3, "reset", 1).integers(0, 1 << 30, 8)
        c = make_rng(3, "reset", 2).integers(0, 1 << 30, 8)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_key_and_spec_seed_width(self):
        assert 0 <= derive_key(0, "x") < 2**128
        assert 0 <= spec_seed("aht/H1/test/0") < 2**64
        assert spec_seed("a") != spec_seed("b")
