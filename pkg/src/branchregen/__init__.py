"""Simulation and numerical verification of critical branching processes
with randomly controlled migration, embedded in alternating regenerative
processes."""

from .rng import RngStream
from .samplers import (Constant, DownPeriodLaw, Geometric, HeavyTail,
                       MigrationParams, OffspringLaw, Poisson, Tabulated)
from .process import (CycleRecord, ProcessConfig, RegenerativeConfig,
                      RenewalSkeleton, assemble_regenerative,
                      build_renewal_skeleton, migration_marginals,
                      regenerative_marginals, run_stopped_cycles,
                      sigma_offset, simulate_path, simulate_stopped_cycle,
                      step_migration)
from .limits import (C_INFINITE, LimitLaw, beta_function, brt_cdf_conditional,
                     brt_cdf_unconditional, gamma_cdf, incomplete_beta_ratio,
                     invert_laplace_cdf, is_infinite_c, log_scale_limit_cdf,
                     lt1, lt2, main_limit_cdf, main_limit_cdf_conditional,
                     m_f, phi_laplace, stationary_cdf_estimate)
from .quadrature import QuadratureError, QuadratureSpec, quad_singular
from .stats import (ConvergenceReport, EmpiricalDistribution,
                    classify_recurrence, compute_theta, convergence_study,
                    ks_distance, ks_two_sample, marginal_at,
                    tail_exponent_estimate)
from .config import (ConfigError, ExperimentConfig, parse_config,
                     render_config)
from .experiments import (CheckResult, ResultRecord, emit_outputs,
                          run_experiment)

__version__ = "0.1.0"
