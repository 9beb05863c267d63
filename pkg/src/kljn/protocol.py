"""The key-exchange session engine.

Per bit period, Alice and Bob each connect a fair-coin choice from the
public resistor pair; the loop is simulated for one bit's worth of samples;
both parties classify the loop from the mean-square current (identical at
both ends, so the honest measurement carries no positional asymmetry) and
infer the other's bit from the class plus their own choice.  Rounds where
the choices differ (LH/HL) are the secure ones and contribute key bits.

Key bit convention (fixed): the key bit is Bob's resistor bit, L = 0 and
H = 1; Alice's key holds her inference of Bob's bit, Bob's key holds his
own record.

Seeding (fixed, reproducible): round seeds derive from the session seed via
the splitmix64 chain of :func:`kljn.core.hash64`:

* source streams:  hash64(session_seed, round_index, stream_id), stream ids
  0 = end A (Alice), 1 = end B (Bob), 2 = cable;
* resistor choices: bit 0 and bit 1 of hash64(session_seed, round_index, 3);
* Eve's tie-breaks: hash64(session_seed, round_index, 4, attack_index).

Each round is a pure function of (config, round index), so rounds may be
evaluated concurrently and results are independent of interleaving.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, TextIO

from . import analytic
from .circuit import Arrangement, TraceStats, simulate_trace
from .core import (
    Attack,
    Cable,
    ConfigError,
    DefenseMode,
    NoiseSpec,
    ResistorPair,
    SessionConfig,
    hash64,
    validate_config,
)
from .eavesdropper import (
    AttackRecord,
    Guess,
    SuccessEstimate,
    attack_guess,
    bsy_statistic,
    estimate_success,
    second_law_statistic,
)

_DOMAIN_CHOICES = 3
_DOMAIN_TIE = 4

ROUNDS_CSV_COLUMNS = (
    "index",
    "alice_choice",
    "bob_choice",
    "secure",
    "msv_a",
    "msv_b",
    "msv_i",
    "power_stat",
    "msv_diff",
    "sl_guess_correct",
    "bsy_guess_correct",
)


class Choice(enum.Enum):
    L = "L"
    H = "H"


class Inference(enum.Enum):
    L = "L"
    H = "H"
    INDETERMINATE = "indeterminate"


class LoopClass(enum.Enum):
    LL = "LL"
    MIXED = "MIXED"
    HH = "HH"


@dataclass(frozen=True)
class Thresholds:
    """Analytic mean-square current levels and the decision boundaries.

    Levels are ordered ``level_ll > level_mixed > level_hh`` (a smaller
    total loop resistance passes more current); boundaries sit at the
    geometric means of adjacent levels, equalizing relative margins since
    the estimator noise scales with the level itself.
    """

    level_ll: float
    level_mixed: float
    level_hh: float
    boundary_low: float
    boundary_high: float


@dataclass(frozen=True)
class BitRound:
    index: int
    alice_choice: Choice
    bob_choice: Choice
    secure: bool
    stats: TraceStats
    alice_inferred_bob: Inference
    bob_inferred_alice: Inference


@dataclass(frozen=True)
class SessionResult:
    rounds: List[BitRound]
    secure_fraction: float
    alice_key: List[int]
    bob_key: List[int]
    key_mismatches: int
    attack_records: Dict[Attack, List[AttackRecord]]
    attack_estimates: Dict[Attack, SuccessEstimate]


@dataclass(frozen=True)
class DefensePlan:
    """Resolved defense: effective offset, cable state and temperature rule."""

    mode: DefenseMode
    beta: float
    cable: Cable
    t_eff: float

    def temperature_for(self, choice: Choice) -> float:
        """Generator temperature a party applies given only its own choice."""
        if choice is Choice.L:
            return self.beta * self.t_eff
        return self.t_eff


def apply_defense(cfg: SessionConfig) -> DefensePlan:
    """Resolve the configured defense into a per-party temperature rule.

    NONE and CUSTOM_BETA apply ``noise.beta`` as given (1.0 by default);
    PAPER_BETA and NULL_BETA compute the offset from the resistances;
    EQUILIBRATION keeps ``beta = 1`` and heats the cable to ``t_eff``.
    """
    cfg = validate_config(cfg)
    mode = cfg.defense
    if mode in (DefenseMode.NONE, DefenseMode.CUSTOM_BETA):
        beta = cfg.noise.beta
        cable = cfg.cable
    elif mode is DefenseMode.PAPER_BETA:
        beta = analytic.beta_paper(cfg.pair, cfg.cable.r_c)
        cable = cfg.cable
    elif mode is DefenseMode.NULL_BETA:
        beta = analytic.beta_null(cfg.pair, cfg.cable.r_c)
        cable = cfg.cable
    elif mode is DefenseMode.EQUILIBRATION:
        if cfg.noise.beta != 1.0:
            raise ConfigError(
                ["defense equilibration requires beta = 1; modes are exclusive"]
            )
        beta = 1.0
        cable = replace(cfg.cable, temperature=cfg.noise.t_eff)
    else:  # pragma: no cover - enum is closed
        raise ConfigError([f"unknown defense mode {mode!r}"])
    return DefensePlan(mode=mode, beta=beta, cable=cable, t_eff=cfg.noise.t_eff)


def _class_msv_i(r_1, t_1, r_2, t_2, cable: Cable, noise: NoiseSpec) -> float:
    s = r_1 + cable.r_c + r_2
    total = (
        noise.source_msv(r_1, t_1)
        + noise.source_msv(r_2, t_2)
        + noise.source_msv(cable.r_c, cable.temperature)
    )
    return total / (s * s)


def derive_thresholds(
    pair: ResistorPair, cable: Cable, noise: NoiseSpec
) -> Thresholds:
    """Analytic ``<i_c^2>`` per loop class plus geometric-mean boundaries.

    ``noise.beta`` and ``cable.temperature`` must already reflect the active
    defense (the session engine passes the resolved plan's values), since a
    party running its low resistor runs at the offset temperature.
    """
    t_h = noise.t_eff
    t_l = noise.beta * noise.t_eff
    level_ll = _class_msv_i(pair.r_low, t_l, pair.r_low, t_l, cable, noise)
    level_mixed = _class_msv_i(pair.r_high, t_h, pair.r_low, t_l, cable, noise)
    level_hh = _class_msv_i(pair.r_high, t_h, pair.r_high, t_h, cable, noise)
    if not level_ll > level_mixed > level_hh:
        raise ConfigError(
            [
                "degenerate classification levels "
                f"({level_ll}, {level_mixed}, {level_hh}); "
                "loop classes are indistinguishable"
            ]
        )
    return Thresholds(
        level_ll=level_ll,
        level_mixed=level_mixed,
        level_hh=level_hh,
        boundary_low=math.sqrt(level_ll * level_mixed),
        boundary_high=math.sqrt(level_mixed * level_hh),
    )


def classify_arrangement(msv_i: float, th: Thresholds) -> LoopClass:
    """Three-way threshold decision on the measured mean-square current."""
    if msv_i > th.boundary_low:
        return LoopClass.LL
    if msv_i < th.boundary_high:
        return LoopClass.HH
    return LoopClass.MIXED


def infer_other(own: Choice, cls: LoopClass) -> Inference:
    """What the loop class implies about the other party's resistor."""
    if cls is LoopClass.MIXED:
        return Inference.H if own is Choice.L else Inference.L
    if cls is LoopClass.LL:
        return Inference.L if own is Choice.L else Inference.INDETERMINATE
    return Inference.H if own is Choice.H else Inference.INDETERMINATE


def _choice_bit(choice: Choice) -> int:
    return 1 if choice is Choice.H else 0


def run_session(cfg: SessionConfig) -> SessionResult:
    """Run the full session: a pure, reproducible function of the config."""
    cfg = validate_config(cfg)
    plan = apply_defense(cfg)
    eff_noise = replace(cfg.noise, beta=plan.beta)
    thresholds = derive_thresholds(cfg.pair, plan.cable, eff_noise)
    r_of = {Choice.L: cfg.pair.r_low, Choice.H: cfg.pair.r_high}

    rounds: List[BitRound] = []
    alice_key: List[int] = []
    bob_key: List[int] = []
    records: Dict[Attack, List[AttackRecord]] = {
        Attack.SECOND_LAW: [],
        Attack.BSY: [],
    }

    for idx in range(cfg.bits):
        word = hash64(cfg.seed, idx, _DOMAIN_CHOICES)
        alice = Choice.H if word & 1 else Choice.L
        bob = Choice.H if word & 2 else Choice.L
        arr = Arrangement(
            r_a=r_of[alice],
            r_b=r_of[bob],
            cable=plan.cable,
            t_a=plan.temperature_for(alice),
            t_b=plan.temperature_for(bob),
        )
        stats = simulate_trace(
            arr,
            eff_noise,
            cfg.samples_per_bit,
            seed=hash64(cfg.seed, idx),
            batches=0,
        )
        cls = classify_arrangement(stats.msv_i, thresholds)
        alice_inf = infer_other(alice, cls)
        bob_inf = infer_other(bob, cls)
        secure = alice != bob
        rounds.append(
            BitRound(idx, alice, bob, secure, stats, alice_inf, bob_inf)
        )

        if not secure:
            continue

        # Key bit = Bob's resistor bit.  An indeterminate inference still
        # has to yield a bit; falling back to Alice's own bit records it as
        # a guaranteed mismatch instead of hiding the failure.
        if alice_inf is Inference.INDETERMINATE:
            alice_key.append(_choice_bit(alice))
        else:
            alice_key.append(1 if alice_inf is Inference.H else 0)
        bob_key.append(_choice_bit(bob))

        a_has_high = alice is Choice.H
        for attack_index, (attack, statistic) in enumerate(
            (
                (Attack.SECOND_LAW, second_law_statistic(stats)),
                (Attack.BSY, bsy_statistic(stats)),
            )
        ):
            guess = attack_guess(
                statistic, hash64(cfg.seed, idx, _DOMAIN_TIE, attack_index)
            )
            correct = (guess is Guess.A_HAS_HIGH) == a_has_high
            records[attack].append(
                AttackRecord(attack, idx, statistic, guess, correct)
            )

    estimates = {
        attack: estimate_success(recs)
        for attack, recs in records.items()
        if recs
    }
    mismatches = sum(1 for a, b in zip(alice_key, bob_key) if a != b)
    return SessionResult(
        rounds=rounds,
        secure_fraction=len(alice_key) / len(rounds),
        alice_key=alice_key,
        bob_key=bob_key,
        key_mismatches=mismatches,
        attack_records=records,
        attack_estimates=estimates,
    )


def session_summary(cfg: SessionConfig, result: SessionResult) -> dict:
    """JSON-ready summary of one session."""
    plan = apply_defense(cfg)
    summary = {
        "bits": len(result.rounds),
        "secure_rounds": len(result.alice_key),
        "secure_fraction": result.secure_fraction,
        "key_mismatches": result.key_mismatches,
        "defense": {
            "mode": plan.mode.value,
            "beta": plan.beta,
            "cable_temperature": plan.cable.temperature,
        },
        "attacks": {
            attack.value: {
                "attack": est.attack.value,
                "n_secure": est.n_secure,
                "n_correct": est.n_correct,
                "p_hat": est.p_hat,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
            }
            for attack, est in result.attack_estimates.items()
        },
        "seed": cfg.seed,
    }
    if plan.mode in (DefenseMode.PAPER_BETA, DefenseMode.NULL_BETA):
        summary["beta_adjudication"] = (
            "Eq. 11 nulls the printed Eq. 12 leak only; the derived "
            "end-voltage statistics share the single null beta* = "
            "R_H (R_c + 2 R_L) / (R_L (R_c + 2 R_H)). Monte Carlo "
            "adjudicates the derived algebra."
        )
    return summary


def summary_json(cfg: SessionConfig, result: SessionResult) -> str:
    return json.dumps(session_summary(cfg, result), sort_keys=True, indent=2)


def write_rounds_csv(fileobj: TextIO, result: SessionResult) -> None:
    """Per-round CSV with the fixed column order ROUNDS_CSV_COLUMNS."""
    by_round: Dict[Attack, Dict[int, AttackRecord]] = {
        attack: {r.round_index: r for r in recs}
        for attack, recs in result.attack_records.items()
    }
    fileobj.write(",".join(ROUNDS_CSV_COLUMNS) + "\n")
    for rnd in result.rounds:
        sl = by_round.get(Attack.SECOND_LAW, {}).get(rnd.index)
        bsy = by_round.get(Attack.BSY, {}).get(rnd.index)
        row = [
            str(rnd.index),
            rnd.alice_choice.value,
            rnd.bob_choice.value,
            "1" if rnd.secure else "0",
            repr(rnd.stats.msv_a),
            repr(rnd.stats.msv_b),
            repr(rnd.stats.msv_i),
            repr(rnd.stats.power_stat),
            repr(rnd.stats.msv_diff),
            "" if sl is None else ("1" if sl.correct else "0"),
            "" if bsy is None else ("1" if bsy.correct else "0"),
        ]
        fileobj.write(",".join(row) + "\n")
