import math

import pytest

from kljn.core import (
    Cable,
    ConfigError,
    DefenseMode,
    NoiseSpec,
    ResistorPair,
    SessionConfig,
    Units,
    hash64,
    hash_extend,
    validate_config,
)


def make_config(**overrides):
    base = dict(
        pair=ResistorPair(1000.0, 10000.0),
        cable=Cable(100.0),
        noise=NoiseSpec(t_eff=1e9, bandwidth=5000.0),
        bits=100,
        samples_per_bit=10000,
        defense=DefenseMode.NONE,
        seed=7,
    )
    base.update(overrides)
    return SessionConfig(**base)


def test_reference_config_is_valid():
    cfg = make_config()
    assert validate_config(cfg) is cfg


def test_validate_is_idempotent_and_identity():
    cfg = make_config()
    once = validate_config(cfg)
    twice = validate_config(once)
    assert twice is cfg


def test_equal_resistors_rejected():
    cfg = make_config(pair=ResistorPair(1000.0, 1000.0))
    with pytest.raises(ConfigError, match=r"r_low < r_high violated"):
        validate_config(cfg)


def test_zero_bandwidth_rejected():
    cfg = make_config(noise=NoiseSpec(t_eff=1e9, bandwidth=0.0))
    with pytest.raises(ConfigError, match=r"bandwidth > 0 violated"):
        validate_config(cfg)


def test_all_violations_are_aggregated():
    cfg = make_config(
        pair=ResistorPair(-1.0, -2.0),
        cable=Cable(-5.0, temperature=-1.0),
        noise=NoiseSpec(t_eff=0.0, beta=0.0, bandwidth=0.0),
        bits=0,
        samples_per_bit=99,
        seed=-1,
    )
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    text = str(err.value)
    for needle in (
        "r_low > 0",
        "r_low < r_high",
        "r_c >= 0",
        "cable temperature >= 0",
        "t_eff > 0",
        "beta > 0",
        "bandwidth > 0",
        "bits >= 1",
        "samples_per_bit >= 100",
        "seed in [0, 2^64)",
    ):
        assert needle in text
    assert len(err.value.problems) >= 10


def test_nan_fields_are_caught():
    cfg = make_config(pair=ResistorPair(float("nan"), 10000.0))
    with pytest.raises(ConfigError, match=r"r_low > 0 violated"):
        validate_config(cfg)


def test_equilibration_excludes_beta_offset():
    cfg = make_config(
        defense=DefenseMode.EQUILIBRATION,
        noise=NoiseSpec(t_eff=1e9, beta=1.05, bandwidth=5000.0),
    )
    with pytest.raises(ConfigError, match=r"equilibration requires beta = 1"):
        validate_config(cfg)
    ok = make_config(defense=DefenseMode.EQUILIBRATION)
    assert validate_config(ok) is ok


def test_alpha_in_unit_interval():
    pair = ResistorPair(1000.0, 10000.0)
    assert pair.alpha() == pytest.approx(0.1)
    assert 0.0 < pair.alpha() < 1.0


def test_normalized_units_fix_the_prefactor():
    noise = NoiseSpec(t_eff=1e9, bandwidth=5000.0, units=Units.NORMALIZED)
    # 4 k T_eff df == 1 by definition: a resistor at t_eff has msv == R.
    assert noise.four_k_df() * noise.t_eff == pytest.approx(1.0, rel=1e-15)
    assert noise.source_msv(10000.0, 1e9) == pytest.approx(10000.0, rel=1e-15)


def test_si_units_use_exact_boltzmann():
    noise = NoiseSpec(t_eff=1e9, bandwidth=5000.0, units=Units.SI)
    assert noise.source_msv(1e4, 1e9) == pytest.approx(2.761298e-6, rel=1e-12)


def test_hash64_is_deterministic_and_chains():
    assert hash64(1) == 17525493022739835425
    assert hash64(1, 2) == 16424394857094944517
    assert hash64(1, 2, 3) == 16299856255350999488
    assert hash_extend(hash64(1, 2), 3) == hash64(1, 2, 3)
    assert hash64(2, 1) != hash64(1, 2)


def test_hash64_masks_to_64_bits():
    assert 0 <= hash64(2**64 + 5, 17) < 2**64
    assert hash64(2**64 + 5) == hash64(5)
