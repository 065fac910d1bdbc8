"""Empirical distribution handling, tail-exponent estimation, and the
convergence-study driver that compares simulated marginals against their
analytic limit laws.

Distances are Kolmogorov-Smirnov throughout: the laws under study have an
atom at zero in several regimes, and the KS statistic against a CDF handle
remains exact in that case as long as both one-sided gaps are evaluated at
the sample points.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .samplers import MigrationParams
from .process import ProcessConfig


# ---------------------------------------------------------------------------
# Empirical distributions and KS distances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalDistribution:
    """A sorted sample with O(log n) ECDF evaluation."""

    values: np.ndarray

    def __init__(self, values):
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def cdf(self, x):
        """Right-continuous ECDF: fraction of the sample <= x."""
        pos = np.searchsorted(self.values, np.asarray(x, dtype=float),
                              side="right")
        out = pos / self.values.size
        return float(out) if np.isscalar(x) else out

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))


def ks_distance(sample: EmpiricalDistribution, cdf) -> float:
    """sup_x |F_n(x) - F(x)| against an analytic CDF handle.

    Both one-sided deviations are checked at every sample point, which is
    where the supremum of the difference against a (possibly atomic) CDF is
    attained.
    """
    n = sample.size
    f = np.asarray(cdf(sample.values), dtype=float)
    if f.shape != sample.values.shape:
        raise ValueError("cdf handle must evaluate elementwise")
    ranks = np.arange(1, n + 1) / n
    d_plus = np.max(ranks - f)
    # lower gap: compare the left limits.  F may share an atom with the
    # sample (e.g. mass at zero), so evaluate it just below each point and
    # use the pre-tie empirical level.
    f_below = np.asarray(cdf(np.nextafter(sample.values, -np.inf)),
                         dtype=float)
    pre_tie = np.searchsorted(sample.values, sample.values, side="left") / n
    d_minus = np.max(f_below - pre_tie)
    return float(max(d_plus, d_minus, 0.0))


def ks_two_sample(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """sup_x |F_a(x) - F_b(x)| over the pooled sample points."""
    pooled = np.concatenate([a.values, b.values])
    return float(np.max(np.abs(a.cdf(pooled) - b.cdf(pooled))))


# ---------------------------------------------------------------------------
# Criticality parameter and regime classification
# ---------------------------------------------------------------------------

def compute_theta(migration: MigrationParams, b: float) -> float:
    """theta = (net mean migration while positive) / b."""
    if b <= 0:
        raise ValueError("b must be positive")
    return migration.mean_plus / b


def classify_recurrence(theta: float) -> str:
    """State classification of the zero level by the migration index."""
    if theta > 1.0:
        return "non-recurrent"
    if theta == 1.0:
        return "boundary"
    if theta >= 0.0:
        return "null-recurrent"
    return "positive-recurrent"


# ---------------------------------------------------------------------------
# Tail exponent estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailEstimate:
    """Result of a survival-tail power-law fit on a duration sample."""

    exponent: float
    stderr: float
    hill_exponent: float
    n_tail: int
    power_tail_plausible: bool


def tail_exponent_estimate(durations, tail_fraction: float = 0.1,
                           min_tail: int = 200,
                           n_censored: int = 0) -> TailEstimate:
    """Fit P{T > t} ~ t^-kappa on the upper tail of an integer sample.

    Primary estimate: least-squares slope of log survival against log t over
    the upper ``tail_fraction`` of the sorted sample.  A Hill estimate over
    the same exceedances is reported as a cross-check, and the fit is
    flagged implausible when the slopes of the lower and upper halves of the
    fitting range disagree strongly (curvature, i.e. not a power tail).

    ``n_censored`` counts additional observations right-censored above every
    value in ``durations`` (e.g. capped simulations).  They enter the
    survival estimate as exceedances of everything, which removes the
    downward plunge of the empirical tail just below the cap that would
    otherwise bias the slope.
    """
    if n_censored < 0:
        raise ValueError("n_censored must be nonnegative")
    arr = np.sort(np.asarray(durations, dtype=float))
    n = arr.size
    k = max(int(n * tail_fraction), min_tail)
    if k >= n:
        raise ValueError("sample too small for the requested tail fraction")
    tail = arr[n - k:]
    if tail[0] <= 0:
        raise ValueError("durations must be positive")

    # survival just below each upper order statistic
    surv = (np.arange(k, 0, -1) + n_censored) / (n + n_censored)
    log_t = np.log(tail)
    log_s = np.log(surv)
    # collapse ties so repeated integer durations don't overweight a point
    uniq, idx = np.unique(log_t, return_index=True)
    log_t, log_s = uniq, log_s[idx]
    if log_t.size < 5:
        raise ValueError("tail support too short for a slope fit")

    slope, intercept = np.polyfit(log_t, log_s, 1)
    resid = log_s - (slope * log_t + intercept)
    denom = np.sum((log_t - log_t.mean()) ** 2)
    dof = max(log_t.size - 2, 1)
    stderr = math.sqrt(np.sum(resid ** 2) / dof / denom)

    half = log_t.size // 2
    slope_lo = np.polyfit(log_t[:half], log_s[:half], 1)[0]
    slope_hi = np.polyfit(log_t[half:], log_s[half:], 1)[0]
    plausible = abs(slope_hi - slope_lo) <= max(0.35, 6.0 * stderr)

    threshold = arr[n - k - 1]
    hill = float(np.mean(np.log(tail) - math.log(threshold)))
    hill_exp = 1.0 / hill if hill > 0 else math.inf

    return TailEstimate(exponent=float(-slope), stderr=float(stderr),
                        hill_exponent=float(hill_exp), n_tail=int(k),
                        power_tail_plausible=bool(plausible))


# ---------------------------------------------------------------------------
# Marginal summaries under the theorem scalings
# ---------------------------------------------------------------------------

_SCALINGS = ("identity", "linear", "log")


@dataclass(frozen=True)
class MarginalSummary:
    """Scaled marginal sample at one horizon, with its zero/survival split."""

    time: int
    scaling: str
    sample: EmpiricalDistribution
    survival_fraction: float
    n_raw: int


def marginal_at(values, time: int, scaling: str,
                b: float = 1.0) -> MarginalSummary:
    """Package raw marginal values under a theorem scaling.

    ``identity`` keeps the values; ``linear`` divides by b*t; ``log`` maps
    positive values to log(value)/log(t) and drops zeros (the log scaling is
    only defined on survival, and the zero mass is reported separately).
    """
    if scaling not in _SCALINGS:
        raise ValueError(f"unknown scaling {scaling!r}")
    if time <= 1:
        raise ValueError("time must exceed 1")
    raw = np.asarray(values, dtype=float)
    if raw.size == 0:
        raise ValueError("empty marginal")
    survival = float(np.mean(raw > 0))
    if scaling == "identity":
        scaled = raw
    elif scaling == "linear":
        scaled = raw / (b * time)
    else:
        pos = raw[raw > 0]
        if pos.size == 0:
            raise ValueError("log scaling needs at least one positive value")
        scaled = np.log(pos) / math.log(time)
    return MarginalSummary(time=int(time), scaling=scaling,
                           sample=EmpiricalDistribution(scaled),
                           survival_fraction=survival, n_raw=int(raw.size))


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HorizonResult:
    time: int
    ks: float
    survival_fraction: float
    n_effective: int


@dataclass
class ConvergenceReport:
    """KS distance against a limit CDF across increasing horizons."""

    label: str
    scaling: str
    horizons: list = field(default_factory=list)

    def add(self, result: HorizonResult):
        self.horizons.append(result)

    @property
    def final_ks(self) -> float:
        if not self.horizons:
            raise ValueError("report is empty")
        return self.horizons[-1].ks

    def is_decreasing(self, slack: float = 0.0) -> bool:
        """Whether KS distances trend downward (up to additive slack)."""
        ks = [h.ks for h in self.horizons]
        return all(b <= a + slack for a, b in zip(ks, ks[1:]))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "scaling": self.scaling,
            "horizons": [
                {"time": h.time, "ks": h.ks,
                 "survival_fraction": h.survival_fraction,
                 "n_effective": h.n_effective}
                for h in self.horizons
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ConvergenceReport":
        report = cls(label=data["label"], scaling=data["scaling"])
        for row in data["horizons"]:
            report.add(HorizonResult(time=int(row["time"]),
                                     ks=float(row["ks"]),
                                     survival_fraction=float(
                                         row["survival_fraction"]),
                                     n_effective=int(row["n_effective"])))
        return report

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["label", "scaling", "time", "ks",
                         "survival_fraction", "n_effective"])
        for h in self.horizons:
            writer.writerow([self.label, self.scaling, h.time,
                             repr(h.ks), repr(h.survival_fraction),
                             h.n_effective])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ConvergenceReport":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("csv has no data rows")
        report = None
        for row in rows[1:]:
            label, scaling, time, ks, surv, n_eff = row
            if report is None:
                report = cls(label=label, scaling=scaling)
            report.add(HorizonResult(time=int(time), ks=float(ks),
                                     survival_fraction=float(surv),
                                     n_effective=int(n_eff)))
        return report


def convergence_study(marginals: dict, limit_cdf, scaling: str,
                      label: str, b: float = 1.0,
                      conditional: bool = False) -> ConvergenceReport:
    """Compare marginal samples at several horizons against one limit CDF.

    ``marginals`` maps horizon -> raw marginal values.  With
    ``conditional=True`` the comparison restricts to positive values before
    scaling (the conditional-on-survival statements); otherwise zeros stay in
    the sample and must be matched by an atom in the limit CDF.  The log
    scaling is intrinsically conditional.
    """
    report = ConvergenceReport(label=label, scaling=scaling)
    for time in sorted(marginals):
        raw = np.asarray(marginals[time], dtype=float)
        survival = float(np.mean(raw > 0))
        if conditional or scaling == "log":
            raw = raw[raw > 0]
        summary = marginal_at(raw, time, scaling, b=b)
        ks = ks_distance(summary.sample, limit_cdf)
        report.add(HorizonResult(time=int(time), ks=ks,
                                 survival_fraction=survival,
                                 n_effective=summary.sample.size))
    return report


def describe_process(config: ProcessConfig) -> dict:
    """Scalar diagnostics of a process configuration."""
    theta = config.theta
    return {
        "b": config.b,
        "theta": theta,
        "mean_migration_plus": config.migration.mean_plus,
        "recurrence": classify_recurrence(theta),
        "p_leave_zero": config.migration.p_leave_zero,
    }
