"""Desk-scale laboratory for the KLJN resistor-noise key exchange.

Simulates the two-party Johnson-noise loop over a lumped resistive cable,
implements the passive power-flow and end-voltage eavesdropping attacks,
the temperature-offset and equilibration defenses, and evaluates every
closed-form loop statistic analytically for cross-checking the Monte Carlo.
"""

from .core import (
    Attack,
    Cable,
    ConfigError,
    DefenseMode,
    K_BOLTZMANN,
    NoiseSpec,
    ResistorPair,
    SessionConfig,
    Units,
    hash64,
    validate_config,
)
from .noisegen import NoiseStream, gaussian_stream, johnson_msv
from .circuit import (
    Arrangement,
    EmptyTraceError,
    LoopSample,
    TraceStats,
    simulate_trace,
    simulate_trace_full,
    solve_loop_sample,
    trace_statistics,
)
from .analytic import (
    AnalyticReport,
    BetaStatistic,
    beta_null,
    beta_paper,
    build_report,
    delta_ks,
    delta_msv_two_temp,
    delta_p,
    equilibrium_msv_diff,
    heating_powers,
    normal_cdf,
    power_flows,
    predict_attack_snr,
    predicted_success,
)
from .protocol import (
    BitRound,
    Choice,
    LoopClass,
    SessionResult,
    Thresholds,
    apply_defense,
    classify_arrangement,
    derive_thresholds,
    run_session,
)
from .eavesdropper import (
    AttackRecord,
    Guess,
    SuccessEstimate,
    attack_guess,
    bsy_statistic,
    estimate_success,
    second_law_statistic,
    wilson_interval,
)

__version__ = "0.1.0"
