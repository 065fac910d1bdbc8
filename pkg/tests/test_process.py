"""Process mechanics: the migration recurrence, stopped cycles, and the
renewal-clock assembly of the regenerative process."""

import numpy as np
import pytest

from branchregen import (CycleRecord, ProcessConfig, RegenerativeConfig,
                         RenewalSkeleton, RngStream, assemble_regenerative,
                         build_renewal_skeleton, ks_two_sample,
                         migration_marginals, regenerative_marginals,
                         run_stopped_cycles, sigma_offset, simulate_path,
                         simulate_stopped_cycle, step_migration)
from branchregen.process import simulate_stopped_cycle as _cycle
from branchregen.samplers import (Constant, DownPeriodLaw, Geometric,
                                  MigrationParams, OffspringLaw)
from branchregen.stats import EmpiricalDistribution


def stream(index=0):
    return RngStream(777, index)


def pure_critical(offspring=None, izero=None):
    mig = MigrationParams(p=0.0, q=1.0, r=0.0,
                          immigration_zero=izero or Constant(1))
    return ProcessConfig(offspring or OffspringLaw.shifted_geometric(), mig)


# ---------------------------------------------------------------------------
# Single-step recurrence
# ---------------------------------------------------------------------------

def test_step_from_zero_with_certain_immigration():
    mig = MigrationParams(p=0.0, q=0.0, r=1.0, immigration_plus=Constant(1),
                          immigration_zero=Constant(5))
    proc = ProcessConfig(OffspringLaw.binary(), mig)
    assert step_migration(0, proc, stream()) == 5


def test_step_from_zero_without_immigration_stays():
    assert step_migration(0, pure_critical(), stream()) == 0


def test_step_rejects_negative_state():
    with pytest.raises(ValueError):
        step_migration(-1, pure_critical(), stream())


def test_barrier_keeps_states_nonnegative():
    # certain heavy emigration: max{., 0} must absorb the overshoot
    mig = MigrationParams(p=1.0, q=0.0, r=0.0,
                          family_emigration=Constant(3),
                          individual_emigration=Constant(10))
    proc = ProcessConfig(OffspringLaw.binary(), mig)
    for _ in range(50):
        assert step_migration(1, proc, stream()) >= 0


def test_pure_critical_chain_is_a_martingale():
    proc = ProcessConfig(OffspringLaw.shifted_geometric(),
                         MigrationParams(p=0.0, q=1.0, r=0.0), y0=50)
    marg = migration_marginals(proc, [30], 20000, stream(1))
    # E[Y_t] = y0 without migration; std of the mean ~ sqrt(2b t y0 / n)
    assert np.mean(marg[30]) == pytest.approx(50.0, abs=1.5)


def test_theta_and_beta_properties():
    mig = MigrationParams(p=0.0, q=0.7, r=0.3, immigration_plus=Constant(2))
    proc = ProcessConfig(OffspringLaw.shifted_geometric(), mig)
    assert proc.b == 1.0
    assert proc.theta == pytest.approx(0.6)
    assert proc.beta == pytest.approx(0.4)


# ---------------------------------------------------------------------------
# Stopped cycles
# ---------------------------------------------------------------------------

def test_cycle_record_validation():
    with pytest.raises(ValueError):   # must start at its initial level
        CycleRecord(lifetime=1, path=np.array([2, 0]), initial_level=1)
    with pytest.raises(ValueError):   # no interior zeros
        CycleRecord(lifetime=3, path=np.array([1, 0, 1, 0]), initial_level=1)
    with pytest.raises(ValueError):   # must end at zero unless truncated
        CycleRecord(lifetime=2, path=np.array([1, 2, 3]), initial_level=1)
    ok = CycleRecord(lifetime=2, path=np.array([1, 2, 3]), initial_level=1,
                     truncated=True)
    assert ok.truncated


def test_simulate_stopped_cycle_terminates_or_truncates():
    proc = pure_critical()
    cyc = simulate_stopped_cycle(proc, 1, cap=100000, stream=stream(2))
    assert cyc.path[0] == 1
    if cyc.truncated:
        assert cyc.lifetime == 100000
    else:
        assert cyc.path[-1] == 0
        assert (cyc.path[1:-1] > 0).all()
    with pytest.raises(ValueError):
        simulate_stopped_cycle(proc, 0, cap=10, stream=stream())


def test_batch_cycles_match_scalar_engine_in_law():
    proc = pure_critical()
    batch = run_stopped_cycles(proc, np.full(4000, 3), cap=5000, stream=stream(3),
                               record_times=(8,))
    scalar = np.array([_cycle(proc, 3, 5000, stream(4).child(i)).lifetime
                       for i in range(1500)])
    ks = ks_two_sample(EmpiricalDistribution(batch.lifetimes),
                       EmpiricalDistribution(scalar))
    assert ks < 0.05
    # recorded marginal is zero exactly for the cycles dead by that time
    dead = batch.lifetimes <= 8
    assert (batch.marginals[8][dead] == 0).all()
    assert (batch.marginals[8][~dead] > 0).all()


def test_batch_cycle_truncation_flag():
    proc = pure_critical()
    batch = run_stopped_cycles(proc, np.full(500, 50), cap=10, stream=stream(5))
    assert (batch.lifetimes[batch.truncated] == 10).all()
    assert batch.truncated.any()


# ---------------------------------------------------------------------------
# Renewal skeleton arithmetic
# ---------------------------------------------------------------------------

def _const_cycle(lifetime):
    path = np.concatenate([np.arange(1, lifetime + 1)[::-1], [0]])
    return CycleRecord(lifetime=lifetime, path=path,
                       initial_level=int(path[0]))


def test_sigma_offset_hand_arithmetic():
    # T_d = 2, T_u = 3 throughout: S_1 = 5, S_2 = 10
    skel = RenewalSkeleton(down_durations=[2, 2, 2],
                           up_durations=[3, 3, 3],
                           cycles=[_const_cycle(3)] * 3)
    assert np.array_equal(skel.partial_sums, [0, 5, 10, 15])
    assert skel.renewal_count(4) == 0
    assert skel.renewal_count(5) == 1
    assert sigma_offset(skel, 0) == -2          # down
    assert sigma_offset(skel, 2) == 0           # first cycle step
    assert sigma_offset(skel, 4) == 2
    assert sigma_offset(skel, 6) == -1          # second down period
    assert sigma_offset(skel, 7) == 0
    with pytest.raises(IndexError):
        sigma_offset(skel, 15)


def test_assemble_from_hand_skeleton():
    skel = RenewalSkeleton(down_durations=[2, 2], up_durations=[3, 3],
                           cycles=[_const_cycle(3), _const_cycle(3)])
    regen = RegenerativeConfig(pure_critical(izero=Geometric(2.0)),
                               DownPeriodLaw.geometric(0.5), horizon=9)
    z = assemble_regenerative(regen, stream(6), skeleton=skel)
    assert np.array_equal(z, [0, 0, 3, 2, 1, 0, 0, 3, 2, 1])


def test_build_skeleton_covers_horizon():
    regen = RegenerativeConfig(pure_critical(izero=Geometric(2.0)),
                               DownPeriodLaw.geometric(0.5), horizon=200)
    skel = build_renewal_skeleton(regen, stream(7))
    assert skel.partial_sums[-1] > 200
    assert all(d >= 1 for d in skel.down_durations)
    assert all(c.path[-1] == 0 for c in skel.cycles if not c.truncated)


def test_regenerative_config_validation():
    proc = pure_critical(izero=Constant(0))
    with pytest.raises(ValueError):   # initial law must allow positive levels
        RegenerativeConfig(proc, DownPeriodLaw.geometric(0.5), horizon=10)
    with pytest.raises(ValueError):
        RegenerativeConfig(pure_critical(izero=Geometric(1.0)),
                           DownPeriodLaw.geometric(0.5), horizon=0)
    with pytest.raises(ValueError):   # cap below horizon
        RegenerativeConfig(pure_critical(izero=Geometric(1.0)),
                           DownPeriodLaw.geometric(0.5), horizon=10,
                           cycle_cap=5)


# ---------------------------------------------------------------------------
# Population engines vs the scalar reference path
# ---------------------------------------------------------------------------

def test_migration_marginals_match_scalar_paths_in_law():
    mig = MigrationParams(p=0.0, q=0.7, r=0.3, immigration_plus=Geometric(1.0),
                          immigration_zero=Geometric(2.0))
    proc = ProcessConfig(OffspringLaw.shifted_geometric(), mig)
    marg = migration_marginals(proc, [40], 8000, stream(8))[40]
    scalar = np.array([simulate_path(proc, 40, stream(9).child(i))[-1]
                       for i in range(1500)])
    ks = ks_two_sample(EmpiricalDistribution(marg),
                       EmpiricalDistribution(scalar))
    assert ks < 0.05


def test_regenerative_marginals_match_assembled_paths_in_law():
    mig = MigrationParams(p=0.0, q=0.7, r=0.3, immigration_plus=Geometric(1.0),
                          immigration_zero=Geometric(2.0))
    proc = ProcessConfig(OffspringLaw.shifted_geometric(), mig)
    regen = RegenerativeConfig(proc, DownPeriodLaw.geometric(0.4), horizon=60)
    marg = regenerative_marginals(regen, [60], 8000, stream(10))[60]
    scalar = np.array([assemble_regenerative(regen, stream(11).child(i))[60]
                       for i in range(1200)])
    ks = ks_two_sample(EmpiricalDistribution(marg),
                       EmpiricalDistribution(scalar))
    assert ks < 0.06


def test_marginals_are_deterministic_per_stream():
    proc = pure_critical(izero=Geometric(2.0))
    a = migration_marginals(proc, [10, 20], 500, stream(12))
    b = migration_marginals(proc, [10, 20], 500, stream(12))
    assert np.array_equal(a[10], b[10]) and np.array_equal(a[20], b[20])


def test_record_time_validation():
    proc = pure_critical()
    with pytest.raises(ValueError):
        migration_marginals(proc, [-1, 5], 10, stream())
    with pytest.raises(ValueError):
        simulate_path(proc, 0, stream())
    with pytest.raises(ValueError):
        run_stopped_cycles(proc, [0, 2], cap=10, stream=stream())
