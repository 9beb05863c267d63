import math

import numpy as np
import pytest

from kljn.noisegen import (
    NoiseStream,
    PHILOX_BLOCK,
    band_limited_stream,
    brickwall_lowpass,
    gaussian_stream,
    johnson_msv,
)

# Statistics of Gaussian moment estimators at sample size N: the bounds
# below are 4 sigma of each estimator unless noted.
N_MOMENTS = 1_000_000


def test_johnson_formula_reference_value():
    # Direct evaluation of 4 k T R df with k = 1.380649e-23.
    msv = johnson_msv(1e4, 1e9, 5e3)
    assert msv == pytest.approx(2.761298e-6, rel=1e-12)
    assert math.sqrt(msv) == pytest.approx(1.66e-3, rel=1e-2)


def test_johnson_zero_resistance():
    assert johnson_msv(0.0, 1e9, 5e3) == 0.0


def test_johnson_domain_errors():
    with pytest.raises(ValueError):
        johnson_msv(-1.0, 300.0, 1e3)
    with pytest.raises(ValueError):
        johnson_msv(1.0, -300.0, 1e3)
    with pytest.raises(ValueError):
        johnson_msv(1.0, 300.0, 0.0)


def test_golden_sequences_pin_the_generator():
    # Philox keyed by the seed, one 64-bit word per sample, inverse CDF.
    got = gaussian_stream(12345, 8, 1.0)
    expected = [
        0.3755659303684783,
        0.752975220589774,
        0.7941167416429904,
        -0.9961168670579049,
        -0.9905903729800274,
        0.9092032148429001,
        1.3878693469990138,
        -1.530823932639873,
    ]
    assert got.tolist() == expected

    got2 = gaussian_stream(987654321, 4, 2.5)
    expected2 = [
        -3.6363244085248416,
        0.23275267548594383,
        -1.8919774280394561,
        1.354855842581286,
    ]
    assert got2.tolist() == expected2


def test_determinism_same_arguments():
    a = gaussian_stream(42, 1000, 0.5)
    b = gaussian_stream(42, 1000, 0.5)
    assert np.array_equal(a, b)


def test_sigma_zero_gives_exact_zeros():
    x = gaussian_stream(9, 257, 0.0)
    assert x.shape == (257,)
    assert not x.any()


def test_sigma_scales_linearly():
    base = gaussian_stream(5, 64, 1.0)
    scaled = gaussian_stream(5, 64, 3.0)
    assert np.allclose(scaled, 3.0 * base, rtol=0, atol=0)


def test_block_offsets_decompose_the_stream():
    whole = gaussian_stream(77, 40, 1.0)
    parts = [
        gaussian_stream(77, 12, 1.0, offset=0),
        gaussian_stream(77, 12, 1.0, offset=12),
        gaussian_stream(77, 16, 1.0, offset=24),
    ]
    assert np.array_equal(np.concatenate(parts), whole)


def test_offset_must_be_block_aligned():
    with pytest.raises(ValueError):
        gaussian_stream(1, 4, 1.0, offset=2)
    assert PHILOX_BLOCK == 4


def test_noise_stream_draws_continue_the_sequence():
    stream = NoiseStream(seed=3, sigma=1.5)
    a = stream.draw(10)
    b = stream.draw(30)
    assert stream.position == 40
    assert np.array_equal(np.concatenate([a, b]), gaussian_stream(3, 40, 1.5))


def test_noise_streams_with_equal_seed_sigma_are_identical():
    xs = NoiseStream(seed=11, sigma=2.0).draw(100)
    ys = NoiseStream(seed=11, sigma=2.0).draw(100)
    assert np.array_equal(xs, ys)


def test_moments_within_four_sigma():
    x = gaussian_stream(2024, N_MOMENTS, 1.0)
    n = N_MOMENTS
    mean = x.mean()
    var = x.var()
    skew = np.mean(x**3)
    kurt = np.mean(x**4) / var**2 - 3.0  # standardized excess kurtosis
    assert abs(mean) < 4.0 / math.sqrt(n)
    assert abs(var - 1.0) < 4.0 * math.sqrt(2.0 / n)
    assert abs(skew) < 4.0 * math.sqrt(6.0 / n)
    assert abs(kurt) < 4.0 * math.sqrt(24.0 / n)


def test_variance_and_kurtosis_match_spec_bands():
    # bands are ~3 sigma of the raw variance and fourth-moment estimators
    x = gaussian_stream(7777, N_MOMENTS, 1.0)
    assert abs(x.var() - 1.0) < 0.005
    assert abs(np.mean(x**4) - 3.0) < 0.03


def test_different_seeds_are_uncorrelated():
    n = N_MOMENTS
    x = gaussian_stream(1, n, 1.0)
    y = gaussian_stream(2, n, 1.0)
    corr = float(np.mean(x * y))
    assert abs(corr) < 4.0 / math.sqrt(n)


def test_brickwall_reduces_power_by_the_band_fraction():
    x = gaussian_stream(8, 1 << 16, 1.0)
    for os in (2, 4):
        y = brickwall_lowpass(x, os)
        # kept fraction of the band carries 1/os of the white power
        assert y.var() == pytest.approx(1.0 / os, rel=0.1)


def test_brickwall_kills_out_of_band_power():
    x = gaussian_stream(12, 8192, 1.0)
    y = brickwall_lowpass(x, 4, block=8192)
    spec = np.abs(np.fft.rfft(y)) ** 2
    cut = 8192 // 8
    in_band = spec[: cut + 1].mean()
    out_band = spec[cut + 1 :].mean()
    assert out_band < 1e-20 * in_band


def test_band_limited_stream_preserves_in_band_power():
    y = band_limited_stream(99, 1 << 16, 2.0, oversample=4)
    # total power should match the nominal sigma^2 after filtering
    assert y.var() == pytest.approx(4.0, rel=0.1)


def test_count_zero_and_errors():
    assert gaussian_stream(1, 0, 1.0).shape == (0,)
    with pytest.raises(ValueError):
        gaussian_stream(1, -1, 1.0)
    with pytest.raises(ValueError):
        gaussian_stream(1, 4, -0.5)
