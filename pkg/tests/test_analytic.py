import json
import math

import numpy as np
import pytest
from scipy.special import ndtr

from kljn.analytic import (
    AnalyticReport,
    BetaStatistic,
    beta_null,
    beta_null_closed_form,
    beta_paper,
    build_report,
    delta_ks,
    delta_ks_paper_eq12,
    delta_msv_two_temp,
    delta_p,
    delta_p_paper_eq7,
    discrepancies,
    equilibrium_msv_diff,
    heating_powers,
    loop_moments,
    normal_cdf,
    power_flows,
    predict_attack_snr,
    predicted_success,
)
from kljn.circuit import Arrangement, simulate_trace_full
from kljn.core import Attack, Cable, NoiseSpec, ResistorPair, Units

PAIR = ResistorPair(1000.0, 10000.0)
RC = 100.0
NOISE = NoiseSpec(t_eff=1e9, bandwidth=5000.0, units=Units.NORMALIZED)
T = NOISE.t_eff


def random_pair_rc(rng, rc_cap=None):
    r_low = 10 ** rng.uniform(2.0, 4.0)
    r_high = r_low * 10 ** rng.uniform(0.3, 2.0)
    r_c = 10 ** rng.uniform(-1.0, 2.5)
    if rc_cap is not None:
        r_c = min(r_c, rc_cap * r_low)
    return ResistorPair(r_low, r_high), r_c


# ------------------------------------------------------------- leak formulas


def test_delta_ks_reference():
    assert delta_ks(PAIR, RC, NOISE) == pytest.approx(
        0.7304601899196493, rel=1e-12
    )


def test_delta_ks_ideal_cable():
    assert delta_ks(PAIR, 0.0, NOISE) == 0.0


def test_delta_ks_near_square_law():
    half = delta_ks(PAIR, 50.0, NOISE)
    assert half == pytest.approx(0.18427141131426467, rel=1e-12)
    ratio = delta_ks(PAIR, RC, NOISE) / half
    # almost quadratic; the loop-sum shift in the denominator explains
    # the deviation from exactly 4
    assert ratio == pytest.approx(3.964045126207288, rel=1e-12)


def test_heating_powers_reference_and_ratio():
    p_hc, p_lc = heating_powers(PAIR, RC, NOISE)
    assert p_hc == pytest.approx(8.116224332440549e-3, rel=1e-12)
    assert p_lc == pytest.approx(8.116224332440549e-4, rel=1e-12)
    assert p_lc / p_hc == PAIR.alpha()  # exact identity
    assert heating_powers(PAIR, 0.0, NOISE) == (0.0, 0.0)


def test_power_flows_reduce_to_printed_equal_temperature_forms():
    p_hl, p_lh = power_flows(PAIR, RC, T, T, NOISE)
    p_hc, p_lc = heating_powers(PAIR, RC, NOISE)
    assert p_hl == pytest.approx(p_hc, rel=1e-12)
    assert p_lh == pytest.approx(p_lc, rel=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(50):
        pair, r_c = random_pair_rc(rng)
        t = T * rng.uniform(0.2, 2.0)
        got_hl, got_lh = power_flows(pair, r_c, t, t, NOISE)
        s = pair.r_high + r_c + pair.r_low
        pref = NOISE.four_k_df() * t
        assert got_hl == pytest.approx(
            pref * pair.r_high * r_c / s**2, rel=1e-12
        )
        assert got_lh == pytest.approx(
            pref * pair.r_low * r_c / s**2, rel=1e-12
        )


def test_power_flows_vanish_on_ideal_cable():
    assert power_flows(PAIR, 0.0, T, T, NOISE) == (0.0, 0.0)


def test_delta_p_reference_and_printed_eq7():
    assert delta_p(PAIR, RC, T, T, NOISE) == pytest.approx(
        7.304601899196494e-3, rel=1e-12
    )
    assert delta_p_paper_eq7(PAIR, RC, NOISE) == pytest.approx(
        8.927846765684604e-3, rel=1e-12
    )


def test_delta_p_is_flow_difference():
    rng = np.random.default_rng(2)
    for _ in range(100):
        pair, r_c = random_pair_rc(rng)
        t_h = T * rng.uniform(0.2, 2.0)
        t_l = T * rng.uniform(0.2, 2.0)
        p_hl, p_lh = power_flows(pair, r_c, t_h, t_l, NOISE)
        assert delta_p(pair, r_c, t_h, t_l, NOISE) == pytest.approx(
            p_hl - p_lh, rel=1e-12, abs=1e-18
        )


def test_delta_p_zero_cases():
    assert delta_p(PAIR, 0.0, T, T, NOISE) == 0.0
    b = beta_null(PAIR, RC)
    # machine precision relative to the undefended statistic's scale
    scale = delta_p(PAIR, RC, T, T, NOISE)
    assert abs(delta_p(PAIR, RC, T, b * T, NOISE)) < 1e-12 * scale


# ------------------------------------------------- two-temperature identity


def test_msv_identity_with_net_power():
    # the central derived identity: msv difference = r_c * net power
    rng = np.random.default_rng(3)
    for _ in range(100):
        pair, r_c = random_pair_rc(rng)
        t_h = T * rng.uniform(0.2, 2.0)
        t_l = T * rng.uniform(0.2, 2.0)
        lhs = delta_msv_two_temp(pair, r_c, t_h, t_l, NOISE)
        rhs = r_c * delta_p(pair, r_c, t_h, t_l, NOISE)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-18)


def test_msv_two_temp_reduces_to_delta_ks():
    assert delta_msv_two_temp(PAIR, RC, T, T, NOISE) == pytest.approx(
        0.7304601899196493, rel=1e-12
    )


def test_msv_two_temp_null_at_derived_beta():
    b = beta_null(PAIR, RC, BetaStatistic.MSV_DIFFERENCE)
    assert abs(delta_msv_two_temp(PAIR, RC, T, b * T, NOISE)) < 1e-13


def test_printed_eq12_reduces_and_nulls_at_paper_beta():
    assert delta_ks_paper_eq12(PAIR, RC, 1.0, NOISE) == pytest.approx(
        0.7304601899196493, rel=1e-12
    )
    b = beta_paper(PAIR, RC)
    assert abs(delta_ks_paper_eq12(PAIR, RC, b, NOISE)) < 1e-15


def test_derived_form_disagrees_at_paper_beta():
    # the adjudicated residual: Eq. 11's offset does not null the derived
    # end-voltage difference
    b = beta_paper(PAIR, RC)
    resid = delta_msv_two_temp(PAIR, RC, T, b * T, NOISE)
    assert resid == pytest.approx(-0.723227910811534, rel=1e-12)


def test_delta_p_affine_decreasing_in_beta():
    rng = np.random.default_rng(4)
    for _ in range(50):
        pair, r_c = random_pair_rc(rng)
        s = pair.r_high + r_c + pair.r_low
        slope_expected = (
            -NOISE.four_k_df() * T * pair.r_low * (r_c + 2 * pair.r_high) / s**2
        )
        f = lambda b: delta_p(pair, r_c, T, b * T, NOISE)
        b1, b2, b3 = 0.5, 1.25, 2.0
        s12 = (f(b2) - f(b1)) / (b2 - b1)
        s23 = (f(b3) - f(b2)) / (b3 - b2)
        assert s12 == pytest.approx(slope_expected, rel=1e-9)
        assert s23 == pytest.approx(slope_expected, rel=1e-9)
        assert s12 < 0


# ----------------------------------------------------------------- offsets


def test_beta_paper_reference():
    assert beta_paper(PAIR, RC) == pytest.approx(1.0891089108910892, rel=1e-12)
    assert beta_paper(PAIR, 0.0) == 1.0


def test_beta_paper_above_one_for_ordered_pair():
    rng = np.random.default_rng(5)
    for _ in range(100):
        pair, r_c = random_pair_rc(rng)
        assert beta_paper(pair, r_c) > 1.0


def test_beta_null_reference_and_ideal_cable():
    b = beta_null(PAIR, RC)
    assert b == pytest.approx(1.044776119402985, rel=1e-12)
    assert beta_null(PAIR, 0.0) == 1.0
    assert beta_null(PAIR, 0.0, BetaStatistic.MSV_DIFFERENCE) == 1.0


def test_beta_null_both_statistics_share_one_root():
    rng = np.random.default_rng(6)
    for _ in range(100):
        pair, r_c = random_pair_rc(rng)
        b_power = beta_null(pair, r_c, BetaStatistic.NET_POWER)
        b_msv = beta_null(pair, r_c, BetaStatistic.MSV_DIFFERENCE)
        closed = beta_null_closed_form(pair, r_c)
        assert b_power == pytest.approx(b_msv, rel=1e-12)
        assert b_power == pytest.approx(closed, rel=1e-12)
        assert b_power > 1.0


def test_beta_null_tends_to_one_for_small_cable():
    for r_c in (10.0, 1.0, 0.1, 0.01):
        assert abs(beta_null(PAIR, r_c) - 1.0) < 1.1 * r_c / PAIR.r_low


# ------------------------------------------------------------- equilibrium


def test_equilibrium_reference_value():
    got = equilibrium_msv_diff(PAIR, RC, T, NOISE)
    assert got == pytest.approx(81.08108108108108, rel=1e-12)
    assert equilibrium_msv_diff(PAIR, 0.0, T, NOISE) == 0.0


def test_equilibrium_matches_parallel_resistance_oracle():
    # oracle: equilibrium node msv is 4kTdf * (R_end || (R_c + R_other))
    rng = np.random.default_rng(7)
    for _ in range(50):
        pair, r_c = random_pair_rc(rng)
        t = T * rng.uniform(0.2, 2.0)
        pref = NOISE.four_k_df() * t
        s = pair.r_high + r_c + pair.r_low
        node_h = pref * pair.r_high * (r_c + pair.r_low) / s
        node_l = pref * pair.r_low * (r_c + pair.r_high) / s
        assert equilibrium_msv_diff(pair, r_c, t, NOISE) == pytest.approx(
            node_h - node_l, rel=1e-12
        )


def test_equilibrium_reproduced_by_simulator():
    arr = Arrangement(
        PAIR.r_high, PAIR.r_low, Cable(RC, temperature=T), T, T
    )
    full = simulate_trace_full(arr, NOISE, 300_000, seed=42)
    expected = 81.08108108108108
    assert abs(full.stats.msv_diff - expected) < 4 * full.errors.se_msv_diff


# ------------------------------------------------------------ SNR predictor


def test_second_law_snr_reference():
    snr = predict_attack_snr(PAIR, RC, T, T, NOISE, Attack.SECOND_LAW)
    assert snr == pytest.approx(0.012817938067809407, rel=1e-9)
    assert predicted_success(snr, 10_000) == pytest.approx(0.90004, abs=1e-4)
    assert predicted_success(snr, 1_000) == pytest.approx(0.65739, abs=1e-4)
    assert predicted_success(snr, 40_000) == pytest.approx(0.99482, abs=1e-4)


def test_snr_zero_on_ideal_cable():
    for attack in Attack:
        snr = predict_attack_snr(PAIR, 0.0, T, T, NOISE, attack)
        assert snr == 0.0
        assert predicted_success(snr, 10_000) == 0.5


def test_snrs_coincide_on_noiseless_cable():
    # On a noiseless cable the end msv difference equals r_c times the net
    # power statistic sample by sample, so the two attacks carry exactly the
    # same per-sample SNR.  (The published claim of strict second-law
    # dominance is refuted by this identity; see docs/derivations.md.)
    rng = np.random.default_rng(8)
    for _ in range(100):
        pair, r_c = random_pair_rc(rng)
        t_h = T * rng.uniform(0.5, 1.5)
        t_l = T * rng.uniform(0.5, 1.5)
        sl = predict_attack_snr(pair, r_c, t_h, t_l, NOISE, Attack.SECOND_LAW)
        bsy = predict_attack_snr(pair, r_c, t_h, t_l, NOISE, Attack.BSY)
        # equality is exact in exact arithmetic; the BSY variance expression
        # cancels catastrophically for small r_c, leaving ~1e-7 float noise
        assert sl == pytest.approx(bsy, rel=1e-6)


def test_loop_moments_power_consistency():
    m = loop_moments(PAIR.r_high, T, PAIR.r_low, T, RC, 0.0, NOISE.four_k_df())
    assert m.cov_ai + m.cov_bi == pytest.approx(
        delta_p(PAIR, RC, T, T, NOISE), rel=1e-12
    )
    assert m.msv_a - m.msv_b == pytest.approx(
        delta_ks(PAIR, RC, NOISE), rel=1e-9
    )


def test_normal_cdf_accuracy():
    xs = np.linspace(-8.0, 8.0, 161)
    for x in xs:
        assert abs(normal_cdf(float(x)) - float(ndtr(x))) < 1e-10


# ------------------------------------------------------------------ report


def test_report_fields_and_serialization_order():
    report = build_report(PAIR, Cable(RC), NOISE)
    data = report.as_dict()
    assert list(data.keys()) == [
        "delta_ks",
        "p_hc",
        "p_lc",
        "p_hl",
        "p_lh",
        "delta_p",
        "delta_p_paper_eq7",
        "delta_msv_two_temp",
        "delta_ks_paper_eq12",
        "beta_paper",
        "beta_null_power",
        "beta_null_msv",
        "snr_second_law",
        "snr_bsy",
    ]
    assert all(math.isfinite(v) for v in data.values())
    round_trip = json.loads(json.dumps(data))
    assert round_trip == data


def test_discrepancy_report_is_exhaustive_and_named():
    report = build_report(PAIR, Cable(RC), NOISE)
    notes = discrepancies(report)
    assert len(notes) == 1  # at beta = 1 only the net power forms disagree
    assert "Eq. 7" in notes[0]

    offset = NoiseSpec(
        t_eff=1e9, beta=beta_paper(PAIR, RC), bandwidth=5000.0,
        units=Units.NORMALIZED,
    )
    report_beta = build_report(PAIR, Cable(RC), offset)
    notes_beta = discrepancies(report_beta)
    assert len(notes_beta) == 2
    assert any("Eq. 7" in n for n in notes_beta)
    assert any("Eq. 12" in n and "Eq. 11" in n for n in notes_beta)


def test_no_spurious_discrepancies_on_ideal_cable():
    report = build_report(PAIR, Cable(0.0), NOISE)
    assert discrepancies(report) == []
    assert report.beta_null_power == 1.0
    assert report.delta_ks == 0.0
    assert report.delta_p == 0.0
