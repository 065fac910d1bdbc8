"""The three processes of the construction.

* the migration chain Y_t (branching with randomly controlled migration),
* the stopped-at-zero chain Y^o_t whose zero-hitting time is the cycle
  lifetime T_u,
* the alternating regenerative process Z_t assembled from i.i.d. down-periods
  and stopped cycles through the renewal clock N(t) and the offset sigma(t).

Scalar operations (`step_migration`, `simulate_path`, `assemble_regenerative`)
follow the definitions literally and serve as the reference path; the
`*_marginals` / `run_stopped_cycles` engines run many replications as numpy
populations and are the ones the experiment drivers use.  A single trajectory
is inherently serial; replications are independent and each owns its stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream
from .samplers import (DownPeriodLaw, IntegerLaw, MigrationParams,
                       OffspringLaw)

DEFAULT_CYCLE_CAP = 10_000_000


@dataclass(frozen=True)
class ProcessConfig:
    """Offspring + migration + (optional) down-period law + initial state."""

    offspring: OffspringLaw
    migration: MigrationParams
    down_period: DownPeriodLaw | None = None
    y0: int = 0

    def __post_init__(self):
        if self.y0 < 0:
            raise ValueError("initial population must be nonnegative")

    @property
    def b(self) -> float:
        return self.offspring.b

    @property
    def theta(self) -> float:
        return self.migration.theta(self.b)

    @property
    def beta(self) -> float:
        """Up-period tail exponent (1 - theta) vee 0 in the theta regime."""
        return max(1.0 - self.theta, 0.0)


@dataclass
class CycleRecord:
    """One stopped-at-zero trajectory from a positive initial level."""

    lifetime: int
    path: np.ndarray            # values on [0, lifetime]
    initial_level: int
    truncated: bool = False

    def __post_init__(self):
        path = np.asarray(self.path, dtype=np.int64)
        if path[0] != self.initial_level or self.initial_level <= 0:
            raise ValueError("cycle must start at its positive initial level")
        if (path < 0).any():
            raise ValueError("cycle values must be nonnegative")
        if not self.truncated:
            if path[-1] != 0 or (path[1:-1] == 0).any():
                raise ValueError("cycle must stay positive until its terminal zero")
        self.path = path


@dataclass
class RenewalSkeleton:
    """Alternating renewal structure: down durations, cycle lifetimes, cycles."""

    down_durations: list[int] = field(default_factory=list)
    up_durations: list[int] = field(default_factory=list)
    cycles: list[CycleRecord] = field(default_factory=list)

    @property
    def partial_sums(self) -> np.ndarray:
        """S_n = sum of the first n regeneration periods T_d + T_u (S_0 = 0)."""
        periods = np.asarray(self.down_durations, dtype=np.int64) + \
            np.asarray(self.up_durations, dtype=np.int64)
        return np.concatenate(([0], np.cumsum(periods)))

    def renewal_count(self, t: int) -> int:
        """N(t) = max{n >= 0 : S_n <= t}, the completed regenerations by t."""
        s = self.partial_sums
        return int(np.searchsorted(s, t, side="right") - 1)


def sigma_offset(skeleton: RenewalSkeleton, t: int) -> int:
    """t - S_N(t) - T_d,N(t)+1: negative while down, in [0, T_u) while up."""
    n = skeleton.renewal_count(t)
    s = skeleton.partial_sums
    if n >= len(skeleton.down_durations):
        raise IndexError("skeleton too short for the requested time")
    return int(t - s[n] - skeleton.down_durations[n])


@dataclass(frozen=True)
class RegenerativeConfig:
    """Cycle generator + generalized down-period law + simulation horizon.

    The initial level of each cycle is drawn from the migration model's
    immigration-at-zero law conditioned to be positive; the assembler
    therefore requires that law to put mass on positive integers.
    """

    process: ProcessConfig
    down_period: DownPeriodLaw
    horizon: int
    cycle_cap: int = DEFAULT_CYCLE_CAP

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.cycle_cap < self.horizon:
            raise ValueError("cycle cap must be >= horizon")
        if self.initial_law.p_zero >= 1.0:
            raise ValueError("regenerative assembly requires "
                             "P{initial level > 0} > 0")

    @property
    def initial_law(self) -> IntegerLaw:
        return self.process.migration.immigration_zero


# ---------------------------------------------------------------------------
# Vectorized population stepping
# ---------------------------------------------------------------------------

def _step_positive(y: np.ndarray, config: ProcessConfig,
                   stream: RngStream) -> np.ndarray:
    """One generation of the migration recurrence for strictly positive y.

    Family emigration subtracts the offspring of the first famE families;
    in aggregate this equals branching the remaining y - famE families (or
    minus the branch total of the deficit when famE > y), which is the same
    sum of the same draws regrouped.
    """
    g = stream.generator
    mig = config.migration
    off = config.offspring
    n = y.size
    out = np.empty(n, dtype=np.int64)

    u = g.random(n)
    emigrate = u < mig.p
    immigrate = u >= mig.p + mig.q
    plain = ~emigrate & ~immigrate

    grow = plain | immigrate
    if grow.any():
        out[grow] = off.sample_sum(y[grow], stream)
    if immigrate.any():
        out[immigrate] += mig.immigration_plus.sample(stream, int(immigrate.sum()))
    if emigrate.any():
        k = int(emigrate.sum())
        fam = np.asarray(mig.family_emigration.sample(stream, k), dtype=np.int64)
        ind = np.asarray(mig.individual_emigration.sample(stream, k), dtype=np.int64)
        net = y[emigrate] - fam
        kept = off.sample_sum(np.maximum(net, 0), stream)
        deficit = off.sample_sum(np.maximum(-net, 0), stream)
        out[emigrate] = np.maximum(kept - deficit - ind, 0)
    return out


def _step_zero(n: int, migration: MigrationParams,
               stream: RngStream) -> np.ndarray:
    """One generation from state zero: M_t^o = I_t^o with probability r."""
    g = stream.generator
    out = np.zeros(n, dtype=np.int64)
    jump = g.random(n) < migration.r
    if jump.any():
        out[jump] = migration.immigration_zero.sample(stream, int(jump.sum()))
    return out


def step_migration(current_y: int, config: ProcessConfig,
                   stream: RngStream) -> int:
    """max{sum of Y_t offspring + M_t, 0}, with M_t^o active only at zero."""
    if current_y < 0:
        raise ValueError("state must be nonnegative")
    y = np.array([current_y], dtype=np.int64)
    if current_y > 0:
        return int(_step_positive(y, config, stream)[0])
    return int(_step_zero(1, config.migration, stream)[0])


# ---------------------------------------------------------------------------
# The migration chain Y_t
# ---------------------------------------------------------------------------

def simulate_path(config: ProcessConfig, horizon: int,
                  stream: RngStream) -> np.ndarray:
    """One trajectory of Y_t for t = 0..horizon starting at y0."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    path = np.empty(horizon + 1, dtype=np.int64)
    path[0] = config.y0
    for t in range(horizon):
        path[t + 1] = step_migration(int(path[t]), config, stream)
    return path


def migration_marginals(config: ProcessConfig, record_times, n_paths: int,
                        stream: RngStream) -> dict[int, np.ndarray]:
    """Marginal samples of Y_t at each requested time, n_paths replications."""
    record_times = sorted(set(int(t) for t in record_times))
    if record_times and record_times[0] < 0:
        raise ValueError("record times must be nonnegative")
    horizon = record_times[-1] if record_times else 0
    y = np.full(n_paths, config.y0, dtype=np.int64)
    wanted = set(record_times)
    out: dict[int, np.ndarray] = {}
    if 0 in wanted:
        out[0] = y.copy()
    for t in range(horizon):
        nxt = np.zeros(n_paths, dtype=np.int64)
        pos = y > 0
        if pos.any():
            nxt[pos] = _step_positive(y[pos], config, stream)
        zero = ~pos
        if zero.any():
            nxt[zero] = _step_zero(int(zero.sum()), config.migration, stream)
        y = nxt
        if t + 1 in wanted:
            out[t + 1] = y.copy()
    return out


# ---------------------------------------------------------------------------
# Stopped-at-zero cycles
# ---------------------------------------------------------------------------

def simulate_stopped_cycle(config: ProcessConfig, initial_level: int,
                           cap: int, stream: RngStream) -> CycleRecord:
    """Run Y^o from a positive level until the first zero or the step cap."""
    if initial_level < 1:
        raise ValueError("initial level must be positive")
    values = [initial_level]
    y = initial_level
    for _ in range(cap):
        y = int(_step_positive(np.array([y], dtype=np.int64), config, stream)[0])
        values.append(y)
        if y == 0:
            return CycleRecord(lifetime=len(values) - 1,
                               path=np.array(values, dtype=np.int64),
                               initial_level=initial_level)
    return CycleRecord(lifetime=cap, path=np.array(values, dtype=np.int64),
                       initial_level=initial_level, truncated=True)


@dataclass
class CycleBatch:
    """Vectorized result of many stopped cycles."""

    lifetimes: np.ndarray                       # cap value where truncated
    truncated: np.ndarray                       # bool per cycle
    marginals: dict[int, np.ndarray]            # time -> value per cycle (0 if dead)
    initial_levels: np.ndarray


def run_stopped_cycles(config: ProcessConfig, initial_levels, cap: int,
                       stream: RngStream, record_times=()) -> CycleBatch:
    """Many independent stopped cycles, stepped as one shrinking population.

    Absorbed cycles are compacted out of the working arrays so the cost is
    proportional to the number of still-alive cycle-steps, which for critical
    cycles decays like 1/t.
    """
    init = np.asarray(initial_levels, dtype=np.int64)
    if (init < 1).any():
        raise ValueError("initial levels must be positive")
    n = init.size
    record_times = sorted(set(int(t) for t in record_times))
    lifetimes = np.zeros(n, dtype=np.int64)
    marginals = {t: np.zeros(n, dtype=np.int64) for t in record_times}
    if 0 in marginals:
        marginals[0] = init.copy()

    idx = np.arange(n)
    y = init.copy()
    for t in range(1, cap + 1):
        y = _step_positive(y, config, stream)
        died = y == 0
        if died.any():
            lifetimes[idx[died]] = t
            keep = ~died
            idx = idx[keep]
            y = y[keep]
        if t in marginals and idx.size:
            marginals[t][idx] = y
        if idx.size == 0:
            break
    truncated = np.zeros(n, dtype=bool)
    if idx.size:
        truncated[idx] = True
        lifetimes[idx] = cap
    return CycleBatch(lifetimes=lifetimes, truncated=truncated,
                      marginals=marginals, initial_levels=init)


# ---------------------------------------------------------------------------
# The regenerative process Z_t
# ---------------------------------------------------------------------------

def build_renewal_skeleton(regen: RegenerativeConfig,
                           stream: RngStream) -> RenewalSkeleton:
    """Alternate down-period draws and stopped cycles until the partial sums
    pass the horizon; cycle truncation at the cap is flagged, not hidden."""
    skel = RenewalSkeleton()
    total = 0
    while total <= regen.horizon:
        t_d = regen.down_period.sample(stream)
        level = int(regen.initial_law.sample_positive(stream, 1)[0])
        cycle = simulate_stopped_cycle(regen.process, level,
                                       regen.cycle_cap, stream)
        skel.down_durations.append(int(t_d))
        skel.up_durations.append(int(cycle.lifetime))
        skel.cycles.append(cycle)
        total += int(t_d) + int(cycle.lifetime)
    return skel


def assemble_regenerative(regen: RegenerativeConfig, stream: RngStream,
                          skeleton: RenewalSkeleton | None = None) -> np.ndarray:
    """Z_t for t = 0..horizon: the (N(t)+1)-th cycle read at offset sigma(t),
    zero during down-periods."""
    if skeleton is None:
        skeleton = build_renewal_skeleton(regen, stream)
    z = np.zeros(regen.horizon + 1, dtype=np.int64)
    for t in range(regen.horizon + 1):
        s = sigma_offset(skeleton, t)
        if s >= 0:
            cycle = skeleton.cycles[skeleton.renewal_count(t)]
            z[t] = cycle.path[s]
    return z


def regenerative_marginals(regen: RegenerativeConfig, record_times,
                           n_paths: int, stream: RngStream) -> dict[int, np.ndarray]:
    """Marginal samples of Z_t at each requested time over n_paths replications.

    Equivalent to assembling each replication from its skeleton; implemented
    as one population with a per-replication down-period countdown so that
    time spent at zero costs a decrement, not a cycle simulation.
    """
    record_times = sorted(set(int(t) for t in record_times))
    horizon = record_times[-1] if record_times else 0
    proc = regen.process
    init_law = regen.initial_law

    down = np.asarray(regen.down_period.sample(stream, n_paths), dtype=np.int64)
    y = np.zeros(n_paths, dtype=np.int64)
    out: dict[int, np.ndarray] = {}
    if 0 in record_times:
        out[0] = y.copy()
    for t in range(horizon):
        in_down = down > 0
        restart = down == 1
        down[in_down] -= 1
        if restart.any():
            y[restart] = init_law.sample_positive(stream, int(restart.sum()))
        live = ~in_down
        if live.any():
            stepped = _step_positive(y[live], proc, stream)
            ended = stepped == 0
            if ended.any():
                fresh = np.asarray(
                    regen.down_period.sample(stream, int(ended.sum())),
                    dtype=np.int64)
                ends_idx = np.flatnonzero(live)[ended]
                down[ends_idx] = fresh
            y[live] = stepped
        if t + 1 in record_times:
            out[t + 1] = y.copy()
    return out
