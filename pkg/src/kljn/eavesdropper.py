"""Eve's passive statistics, per-round guesses and success estimation.

Eve sees only the cable observables (end voltages and loop current); every
function here consumes the accumulated trace statistics, never source EMFs,
resistor choices or temperatures.  Ground-truth choices enter only when the
harness scores a guess after the fact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

from .core import Attack
from .circuit import TraceStats

#: z for the 95% Wilson interval, pinned.
WILSON_Z = 1.959964


class Guess(enum.Enum):
    A_HAS_HIGH = "a_has_high"
    B_HAS_HIGH = "b_has_high"


@dataclass(frozen=True)
class AttackRecord:
    attack: Attack
    round_index: int
    statistic: float
    guess: Guess
    correct: bool


@dataclass(frozen=True)
class SuccessEstimate:
    attack: Attack
    n_secure: int
    n_correct: int
    p_hat: float
    ci_low: float
    ci_high: float


def second_law_statistic(stats: TraceStats) -> float:
    """Net power statistic ``<(u_ca + u_cb) i_c>`` for one round.

    Positive current flows out of end A, so the statistic is positive in
    expectation when end A holds the larger resistor.
    """
    if stats.n < 1:
        raise ValueError("statistics require at least one sample")
    return stats.power_stat

def bsy_statistic(stats: TraceStats) -> float:
    """End mean-square voltage difference ``<u_ca^2> - <u_cb^2>``."""
    if stats.n < 1:
        raise ValueError("statistics require at least one sample")
    return stats.msv_diff


def attack_guess(statistic: float, tie_seed: int = 0) -> Guess:
    """Sign decision rule: positive means end A holds the larger resistor.

    An exactly zero statistic (the ideal-line case) falls back to a
    deterministic fair coin derived from ``tie_seed``, which the session
    engine derives per round.
    """
    if statistic > 0:
        return Guess.A_HAS_HIGH
    if statistic < 0:
        return Guess.B_HAS_HIGH
    return Guess.A_HAS_HIGH if tie_seed & 1 == 0 else Guess.B_HAS_HIGH


def wilson_interval(n_correct: int, n: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion; valid at small n."""
    if n < 1:
        raise ValueError("wilson_interval requires n >= 1")
    p_hat = n_correct / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p_hat + z2 / (2.0 * n)) / denom
    margin = (z / denom) * math.sqrt(
        p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)
    )
    return max(0.0, center - margin), min(1.0, center + margin)


def estimate_success(records: Sequence[AttackRecord]) -> SuccessEstimate:
    """Aggregate per-round guesses into p_hat with a 95% Wilson interval."""
    if not records:
        raise ValueError("estimate_success requires at least one record")
    attack = records[0].attack
    if any(r.attack is not attack for r in records):
        raise ValueError("estimate_success requires records of one attack")
    n = len(records)
    n_correct = sum(1 for r in records if r.correct)
    lo, hi = wilson_interval(n_correct, n)
    return SuccessEstimate(
        attack=attack,
        n_secure=n,
        n_correct=n_correct,
        p_hat=n_correct / n,
        ci_low=lo,
        ci_high=hi,
    )
