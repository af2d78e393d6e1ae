import math

import pytest
from hypothesis import given, settings, strategies as st

from twr_qos.config import SCHEMES, ConfigError, ScenarioConfig, db_to_linear, emit_config, parse_config


def test_defaults_are_the_reference_scenario():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert cfg.budgets == pytest.approx((10 ** 0.9, 10 ** 0.9, 10 ** 0.6))
    assert cfg.weights.a == 0.6 and cfg.weights.b == pytest.approx(0.4)


def test_source_power_alone_sets_b_and_the_relay():
    cfg = parse_config("power_a_db = 12")
    assert (cfg.power_b_db, cfg.power_r_db) == (12.0, 9.0)


def test_comments_blank_lines_and_lists():
    cfg = parse_config("# scenario\n\nprotocols = direct, two_phase  # two\nseed = 5\n")
    assert cfg.protocols == ("direct", "two_phase") and cfg.seed == 5


def test_minus_infinity_is_a_zero_budget():
    assert db_to_linear(-math.inf) == 0.0
    cfg = parse_config("power_r_db = -inf")
    assert cfg.budgets[2] == 0.0


@pytest.mark.parametrize(
    "text, field, line",
    [
        ("relay_distance = 2.5", "relay_distance", 1),
        ("\nweights = 0.7 0.7", "weights", 2),
        ("theta_a = 0", "theta_a", 1),
        ("samples = ten", "samples", 1),
        ("protocols = four_phase", "protocols", 1),
        ("colour = red", "colour", 1),
        ("seed = 1\nseed = 2", "seed", 2),
        ("power_a_db = inf", "power_a_db", 1),
    ],
)
def test_invalid_documents_name_the_field_and_line(text, field, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.field == field
    assert err.value.line == line


def test_missing_equals_sign():
    with pytest.raises(ConfigError) as err:
        parse_config("seed 3")
    assert err.value.line == 1


configs = st.builds(
    ScenarioConfig,
    relay_distance=st.floats(0.05, 1.95),
    path_loss_exponent=st.floats(2.0, 5.0),
    power_a_db=st.floats(-10, 40),
    power_b_db=st.floats(-10, 40) | st.just(-math.inf),
    power_r_db=st.floats(-10, 40),
    weight_a=st.floats(0, 1),
    theta_a=st.floats(1e-4, 1e3),
    theta_b=st.floats(1e-4, 1e3),
    samples=st.integers(1, 10**6),
    seed=st.integers(0, 2**31),
    protocols=st.lists(st.sampled_from(SCHEMES), min_size=1, max_size=4, unique=True).map(tuple),
)


@given(configs)
@settings(max_examples=60, deadline=None)
def test_emit_parse_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == cfg
