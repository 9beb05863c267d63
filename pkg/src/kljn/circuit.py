"""Exact per-sample solution of the single noise loop and trace statistics.

The network is one series loop: Alice's resistor (end A), the lumped cable
resistance with an optional series noise EMF, and Bob's resistor (end B).
Sign convention, fixed globally: positive loop current flows out of end A
into the cable toward end B, and positive cable EMF drives current from A
to B.  End voltages are node voltages, so they do not depend on where the
cable EMF sits inside the branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .core import Cable, NoiseSpec, hash_extend
from .noisegen import PHILOX_BLOCK, band_limited_stream, gaussian_stream

#: Stream ids hashed into per-stream seeds: end A source, end B source,
#: cable source.  Column order of dumped traces: u_ca, u_cb, i_c.
STREAM_A, STREAM_B, STREAM_CABLE = 0, 1, 2
TRACE_COLUMNS = ("u_ca", "u_cb", "i_c")

_CHUNK = 1 << 21  # samples per accumulation chunk, multiple of PHILOX_BLOCK


class EmptyTraceError(ValueError):
    """Raised when statistics are requested for zero samples."""


@dataclass(frozen=True)
class Arrangement:
    """One bit period's loop: resistances at both ends plus the cable.

    ``t_a`` and ``t_b`` are the generator noise temperatures in kelvin;
    the cable's own temperature lives on :class:`kljn.core.Cable`.
    """

    r_a: float
    r_b: float
    cable: Cable
    t_a: float
    t_b: float

    def __post_init__(self):
        if self.r_a < 0 or self.r_b < 0:
            raise ValueError(
                f"end resistances >= 0 violated (got {self.r_a}, {self.r_b})"
            )
        if not self.loop_sum() > 0:
            raise ValueError(f"loop_sum > 0 violated (got {self.loop_sum()})")
        if self.t_a < 0 or self.t_b < 0:
            raise ValueError(
                f"temperatures >= 0 violated (got {self.t_a}, {self.t_b})"
            )

    def loop_sum(self) -> float:
        return self.r_a + self.cable.r_c + self.r_b


@dataclass(frozen=True)
class LoopSample:
    """One solved sample: source EMFs, end voltages and loop current."""

    u_a: float
    u_b: float
    u_w: float
    u_ca: float
    u_cb: float
    i_c: float


@dataclass(frozen=True)
class TraceStats:
    """Single-pass mean accumulations over one trace of n samples."""

    n: int
    msv_a: float
    msv_b: float
    msv_i: float
    power_stat: float
    msv_diff: float


@dataclass(frozen=True)
class TraceErrors:
    """Batch-means standard errors for the TraceStats fields."""

    n_batches: int
    se_msv_a: float
    se_msv_b: float
    se_msv_i: float
    se_power_stat: float
    se_msv_diff: float


@dataclass(frozen=True)
class TraceResult:
    stats: TraceStats
    errors: Optional[TraceErrors]
    samples: Optional[np.ndarray]  # shape (n, 3), columns TRACE_COLUMNS


def _solve_arrays(u_a, u_b, u_w, r_a, r_b, r_c):
    # u_cb is formed by walking the cable branch from end A so that the
    # r_c = 0, u_w = 0 degeneracy gives u_cb bit-identical to u_ca.
    i_c = (u_a - u_b + u_w) / (r_a + r_c + r_b)
    u_ca = u_a - i_c * r_a
    u_cb = u_ca - (i_c * r_c - u_w)
    return u_ca, u_cb, i_c


def solve_loop_sample(
    u_a: float, u_b: float, u_w: float, arr: Arrangement
) -> LoopSample:
    """Solve one Kirchhoff loop sample for the given source EMFs.

    ``i_c = (u_a - u_b + u_w) / (r_a + r_c + r_b)``, ``u_ca = u_a - i_c r_a``
    and ``u_cb = u_b + i_c r_b`` (computed via the cable branch, exactly
    equivalent), satisfying ``u_ca - u_cb = i_c r_c - u_w``.
    """
    u_ca, u_cb, i_c = _solve_arrays(
        u_a, u_b, u_w, arr.r_a, arr.r_b, arr.cable.r_c
    )
    return LoopSample(u_a, u_b, u_w, u_ca, u_cb, i_c)


def _as_columns(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        a = np.asarray(samples, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != 3:
            raise ValueError("expected an (n, 3) array of (u_ca, u_cb, i_c)")
        return a
    rows = [(s.u_ca, s.u_cb, s.i_c) for s in samples]
    if not rows:
        return np.empty((0, 3), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def trace_statistics(
    samples: Union[Sequence[LoopSample], np.ndarray],
) -> TraceStats:
    """Means of the squared/product observables over a sample sequence.

    Accepts a sequence of :class:`LoopSample` or an ``(n, 3)`` array with
    columns ``(u_ca, u_cb, i_c)``.  Sums use numpy's pairwise accumulation.
    """
    cols = _as_columns(samples)
    n = cols.shape[0]
    if n == 0:
        raise EmptyTraceError("trace_statistics requires at least one sample")
    u_ca, u_cb, i_c = cols[:, 0], cols[:, 1], cols[:, 2]
    msv_a = float(np.sum(u_ca * u_ca)) / n
    msv_b = float(np.sum(u_cb * u_cb)) / n
    msv_i = float(np.sum(i_c * i_c)) / n
    power = float(np.sum((u_ca + u_cb) * i_c)) / n
    return TraceStats(n, msv_a, msv_b, msv_i, power, msv_a - msv_b)


def _batch_bounds(n: int, batches: int):
    # Batch starts are kept on PHILOX_BLOCK boundaries so each batch can be
    # regenerated independently.
    batches = max(1, min(batches, n))
    raw = [
        (b * n // batches) // PHILOX_BLOCK * PHILOX_BLOCK
        for b in range(batches)
    ]
    raw.append(n)
    return [
        (raw[k], raw[k + 1]) for k in range(batches) if raw[k + 1] > raw[k]
    ]


def simulate_trace_full(
    arr: Arrangement,
    noise: NoiseSpec,
    n_samples: int,
    seed: int,
    batches: int = 100,
    keep_samples: bool = False,
) -> TraceResult:
    """Simulate one trace; return stats, batch-means errors and samples.

    Three independent source streams are generated with per-sample variances
    ``4 k T_a r_a df``, ``4 k T_b r_b df`` and ``4 k T_cable r_c df`` (unit
    system per ``noise.units``), the loop is solved per sample, and the
    statistic means are accumulated chunk by chunk.  Stream seeds are
    ``hash_extend(seed, stream_id)`` for stream ids 0 (end A), 1 (end B),
    2 (cable), so a protocol round seed expands to the documented
    ``hash64(session_seed, round_index, stream_id)`` scheme.

    ``batches`` equal slices of the trace give batch-means standard errors;
    pass ``batches=0`` to skip error estimation.
    """
    if n_samples < 1:
        raise EmptyTraceError(f"n_samples >= 1 violated (got {n_samples})")

    r_a, r_b, r_c = arr.r_a, arr.r_b, arr.cable.r_c
    sig_a = noise.source_sigma(r_a, arr.t_a)
    sig_b = noise.source_sigma(r_b, arr.t_b)
    sig_w = noise.source_sigma(r_c, arr.cable.temperature)
    seeds = tuple(
        hash_extend(seed, sid) for sid in (STREAM_A, STREAM_B, STREAM_CABLE)
    )

    if noise.oversample > 1:
        return _oversampled_trace(
            arr, noise, n_samples, seeds, (sig_a, sig_b, sig_w),
            batches, keep_samples,
        )

    bounds = _batch_bounds(n_samples, batches) if batches else [(0, n_samples)]
    nb = len(bounds)
    sums = np.zeros((nb, 4))  # per batch: sum a^2, b^2, i^2, (a+b)i
    counts = np.zeros(nb)
    kept = np.empty((n_samples, 3)) if keep_samples else None

    for b, (lo, hi) in enumerate(bounds):
        pos = lo
        while pos < hi:
            m = min(_CHUNK, hi - pos)
            u_a = gaussian_stream(seeds[0], m, sig_a, offset=pos)
            u_b = gaussian_stream(seeds[1], m, sig_b, offset=pos)
            u_w = gaussian_stream(seeds[2], m, sig_w, offset=pos)
            u_ca, u_cb, i_c = _solve_arrays(u_a, u_b, u_w, r_a, r_b, r_c)
            sums[b, 0] += np.sum(u_ca * u_ca)
            sums[b, 1] += np.sum(u_cb * u_cb)
            sums[b, 2] += np.sum(i_c * i_c)
            sums[b, 3] += np.sum((u_ca + u_cb) * i_c)
            if kept is not None:
                kept[pos:pos + m, 0] = u_ca
                kept[pos:pos + m, 1] = u_cb
                kept[pos:pos + m, 2] = i_c
            pos += m
        counts[b] = hi - lo

    totals = sums.sum(axis=0) / n_samples
    stats = TraceStats(
        n=n_samples,
        msv_a=float(totals[0]),
        msv_b=float(totals[1]),
        msv_i=float(totals[2]),
        power_stat=float(totals[3]),
        msv_diff=float(totals[0] - totals[1]),
    )

    errors = None
    if batches and nb >= 2:
        means = sums / counts[:, None]
        diff = means[:, 0] - means[:, 1]
        ses = np.std(means, axis=0, ddof=1) / np.sqrt(nb)
        se_diff = float(np.std(diff, ddof=1) / np.sqrt(nb))
        errors = TraceErrors(
            n_batches=nb,
            se_msv_a=float(ses[0]),
            se_msv_b=float(ses[1]),
            se_msv_i=float(ses[2]),
            se_power_stat=float(ses[3]),
            se_msv_diff=se_diff,
        )
    return TraceResult(stats=stats, errors=errors, samples=kept)


def _oversampled_trace(arr, noise, n, seeds, sigmas, batches, keep_samples):
    # Realism mode: streams are brick-wall filtered white noise at
    # oversample times the Nyquist step.  Excluded from acceptance checks.
    u_a = band_limited_stream(seeds[0], n, sigmas[0], noise.oversample)
    u_b = band_limited_stream(seeds[1], n, sigmas[1], noise.oversample)
    u_w = band_limited_stream(seeds[2], n, sigmas[2], noise.oversample)
    u_ca, u_cb, i_c = _solve_arrays(
        u_a, u_b, u_w, arr.r_a, arr.r_b, arr.cable.r_c
    )
    cols = np.column_stack([u_ca, u_cb, i_c])
    stats = trace_statistics(cols)
    errors = None
    if batches and n >= 2 * batches:
        parts = np.array_split(cols, batches)
        means = np.array(
            [
                [
                    np.mean(p[:, 0] ** 2),
                    np.mean(p[:, 1] ** 2),
                    np.mean(p[:, 2] ** 2),
                    np.mean((p[:, 0] + p[:, 1]) * p[:, 2]),
                ]
                for p in parts
            ]
        )
        ses = np.std(means, axis=0, ddof=1) / np.sqrt(len(parts))
        se_diff = float(
            np.std(means[:, 0] - means[:, 1], ddof=1) / np.sqrt(len(parts))
        )
        errors = TraceErrors(
            len(parts), float(ses[0]), float(ses[1]), float(ses[2]),
            float(ses[3]), se_diff,
        )
    return TraceResult(stats, errors, cols if keep_samples else None)


def simulate_trace(
    arr: Arrangement,
    noise: NoiseSpec,
    n_samples: int,
    seed: int,
    batches: int = 100,
) -> TraceStats:
    """Accumulated statistics of one simulated trace (see simulate_trace_full)."""
    return simulate_trace_full(arr, noise, n_samples, seed, batches=batches).stats


def write_trace(fileobj, samples: np.ndarray) -> None:
    """Debug dump: CSV of (u_ca, u_cb, i_c) rows in fixed column order."""
    cols = _as_columns(samples)
    fileobj.write(",".join(TRACE_COLUMNS) + "\n")
    for row in cols:
        fileobj.write(
            f"{float(row[0])!r},{float(row[1])!r},{float(row[2])!r}\n"
        )
