"""Shared domain types, unit handling and configuration validation.

Two unit systems are supported and must never be mixed within a session:

* ``SI``: volts, amperes, ohms, kelvin, hertz; Johnson noise follows
  ``<U^2> = 4 k T R df`` with the exact 2019 SI Boltzmann constant.
* ``NORMALIZED``: the prefactor ``4 k T_eff df`` is defined to equal 1, so
  a resistor at the reference temperature has mean-square source voltage
  numerically equal to its resistance.  All closed forms then become exact
  rationals of the resistances, which keeps test oracles exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

# Exact 2019 SI definition, J/K.
K_BOLTZMANN = 1.380649e-23

_MASK64 = (1 << 64) - 1
_HASH_INIT = 0x243F6A8885A308D3  # first 64 bits of pi's fraction


def _splitmix64(x: int) -> int:
    """One splitmix64 scramble round of a 64-bit word."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def hash_extend(state: int, *values: int) -> int:
    """Fold ``values`` into a running 64-bit hash state.

    ``hash_extend(hash64(a, b), c) == hash64(a, b, c)``, which is what lets
    per-round seeds be derived incrementally (session seed, round index,
    stream id) while remaining a single documented function.
    """
    h = state & _MASK64
    for v in values:
        h = _splitmix64(h ^ _splitmix64(v & _MASK64))
    return h


def hash64(*values: int) -> int:
    """Deterministic 64-bit hash of a tuple of integers (splitmix64 chain)."""
    return hash_extend(_HASH_INIT, *values)


class Units(enum.Enum):
    SI = "si"
    NORMALIZED = "normalized"


class DefenseMode(enum.Enum):
    NONE = "none"
    PAPER_BETA = "paper-beta"
    NULL_BETA = "null-beta"
    CUSTOM_BETA = "custom-beta"
    EQUILIBRATION = "equilibration"


class Attack(enum.Enum):
    SECOND_LAW = "second_law"
    BSY = "bsy"


class ConfigError(ValueError):
    """Raised when validation finds one or more violated invariants."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ResistorPair:
    """The public two-element resistor set, ohms, with r_low < r_high."""

    r_low: float
    r_high: float

    def alpha(self) -> float:
        """Resistance ratio r_low / r_high, in (0, 1) for a valid pair."""
        return self.r_low / self.r_high

    def violations(self):
        out = []
        if not self.r_low > 0:
            out.append(f"r_low > 0 violated (got {self.r_low})")
        if not self.r_low < self.r_high:
            out.append(
                f"r_low < r_high violated (got {self.r_low}, {self.r_high})"
            )
        if not math.isfinite(self.r_high):
            out.append(f"r_high finite violated (got {self.r_high})")
        return out


@dataclass(frozen=True)
class Cable:
    """Lumped cable: one series resistance, optionally at its own temperature.

    ``temperature = 0`` models the usual noiseless wire (generator noise
    temperatures are far above ambient); a positive value adds a Johnson
    noise source in series with the cable resistance.
    """

    r_c: float
    temperature: float = 0.0

    def violations(self):
        out = []
        if not self.r_c >= 0:
            out.append(f"r_c >= 0 violated (got {self.r_c})")
        if not math.isfinite(self.r_c):
            out.append(f"r_c finite violated (got {self.r_c})")
        if not self.temperature >= 0:
            out.append(
                f"cable temperature >= 0 violated (got {self.temperature})"
            )
        return out


@dataclass(frozen=True)
class NoiseSpec:
    """Generator noise parameters and the session's unit system.

    ``beta`` multiplies the noise temperature of whichever generator drives
    the smaller resistor; ``beta = 1`` is the symmetric default.  The
    simulation step is the Nyquist rate of the noise band (critical
    sampling), so ``bandwidth`` fixes the physical meaning of one sample;
    ``oversample > 1`` generates at a multiple of the Nyquist rate and
    brick-wall filters back to the band (realism experiments only).
    """

    t_eff: float = 1e9
    beta: float = 1.0
    bandwidth: float = 5000.0
    oversample: int = 1
    units: Units = Units.NORMALIZED

    def violations(self):
        out = []
        if not self.t_eff > 0:
            out.append(f"t_eff > 0 violated (got {self.t_eff})")
        if not math.isfinite(self.t_eff):
            out.append(f"t_eff finite violated (got {self.t_eff})")
        if not self.beta > 0:
            out.append(f"beta > 0 violated (got {self.beta})")
        if not math.isfinite(self.beta):
            out.append(f"beta finite violated (got {self.beta})")
        if not self.bandwidth > 0:
            out.append(f"bandwidth > 0 violated (got {self.bandwidth})")
        if not math.isfinite(self.bandwidth):
            out.append(f"bandwidth finite violated (got {self.bandwidth})")
        if not (isinstance(self.oversample, int) and self.oversample >= 1):
            out.append(f"oversample >= 1 violated (got {self.oversample})")
        if not isinstance(self.units, Units):
            out.append(f"units must be a Units value (got {self.units!r})")
        return out

    def four_k_df(self) -> float:
        """Prefactor p such that a source mean square is ``p * T * R``.

        SI: ``4 k * bandwidth``.  NORMALIZED: ``1 / t_eff`` so that
        ``4 k T_eff df == 1`` by definition.
        """
        if self.units is Units.NORMALIZED:
            return 1.0 / self.t_eff
        return 4.0 * K_BOLTZMANN * self.bandwidth

    def source_msv(self, r: float, t: float) -> float:
        """Mean-square source EMF of resistance ``r`` at temperature ``t``."""
        return self.four_k_df() * t * r

    def source_sigma(self, r: float, t: float) -> float:
        """Per-sample standard deviation of the source EMF."""
        return math.sqrt(self.source_msv(r, t))


@dataclass(frozen=True)
class SessionConfig:
    """Everything a key-exchange session needs, immutable once validated."""

    pair: ResistorPair
    cable: Cable
    noise: NoiseSpec
    bits: int = 2000
    samples_per_bit: int = 10000
    defense: DefenseMode = DefenseMode.NONE
    seed: int = 1

    def violations(self):
        out = []
        out.extend(self.pair.violations())
        out.extend(self.cable.violations())
        out.extend(self.noise.violations())
        if not (isinstance(self.bits, int) and self.bits >= 1):
            out.append(f"bits >= 1 violated (got {self.bits})")
        if not (
            isinstance(self.samples_per_bit, int)
            and self.samples_per_bit >= 100
        ):
            out.append(
                f"samples_per_bit >= 100 violated (got {self.samples_per_bit})"
            )
        if not isinstance(self.defense, DefenseMode):
            out.append(f"defense must be a DefenseMode (got {self.defense!r})")
        elif self.defense is DefenseMode.EQUILIBRATION and self.noise.beta != 1.0:
            out.append(
                "defense equilibration requires beta = 1 "
                f"(got beta = {self.noise.beta}); modes are exclusive"
            )
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            out.append(f"seed in [0, 2^64) violated (got {self.seed})")
        return out


def validate_config(cfg: SessionConfig) -> SessionConfig:
    """Check every invariant of ``cfg`` and return it unchanged.

    All violations are aggregated into one :class:`ConfigError` so a bad
    config reports everything that is wrong, not just the first field.
    Validating an already valid config returns the identical object.
    """
    problems = cfg.violations()
    if problems:
        raise ConfigError(problems)
    return cfg
