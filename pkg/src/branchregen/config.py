"""Experiment configuration: YAML grammar, validation, and the mapping from
config blocks to the process/regenerative dataclasses.

The grammar is versioned by a ``schema_version`` key (currently 1) and is
documented in the repository README.  ``parse_config`` validates the whole
document and reports *all* violations it finds, not just the first, so a
config can be repaired in one pass.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import yaml

from .limits import C_INFINITE, is_infinite_c
from .process import DEFAULT_CYCLE_CAP, ProcessConfig
from .samplers import (Constant, DownPeriodLaw, Geometric, HeavyTail,
                       IntegerLaw, MigrationParams, OffspringLaw, Poisson,
                       Tabulated)

SCHEMA_VERSION = 1

EXPERIMENT_NAMES = (
    "theorem-old-I", "theorem-old-II", "theorem-old-III",
    "cycle-lifetime",
    "theorem-main-Ia", "theorem-main-Ib", "theorem-main-II",
    "theorem-main-III",
    "theorem-rho-cycle", "theorem-rho-II",
    "custom",
)

DEFAULT_TOLERANCES = {
    "ks": 0.05,
    "mean_abs": 0.03,
    "atom": 0.03,
    "tail_exponent": 0.1,
    "max_truncated_fraction": 0.001,
}

_FORMATS = ("json", "csv", "plot")


class ConfigError(ValueError):
    """Carries every violation found while validating a config document."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {v}" for v in self.violations))


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully validated experiment: what to run, how long, and where."""

    experiment: str
    seed: int
    replications: int
    horizons: tuple[int, ...]
    process: ProcessConfig
    down_period: DownPeriodLaw
    c_regime: object                  # 0.0, a positive float, or C_INFINITE
    cycle_cap: int = DEFAULT_CYCLE_CAP
    workers: int = 1
    output_dir: str = "results"
    formats: tuple[str, ...] = ("json", "csv")
    trajectory_dump: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def digest(self) -> str:
        """Stable hash of everything that determines the results."""
        payload = {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "replications": self.replications,
            "horizons": list(self.horizons),
            "process": _describe_process(self.process),
            "down_period": _describe_down(self.down_period),
            "c_regime": ("infinite" if is_infinite_c(self.c_regime)
                         else float(self.c_regime)),
            "cycle_cap": self.cycle_cap,
            "tolerances": self.tolerances,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# Component-law (de)serialization
# ---------------------------------------------------------------------------

def _build_integer_law(block, where: str, violations) -> IntegerLaw:
    if block is None:
        return Constant(0)
    if not isinstance(block, dict) or "kind" not in block:
        violations.append(f"{where}: expected a mapping with a 'kind' key")
        return Constant(0)
    kind = block["kind"]
    try:
        if kind == "constant":
            return Constant(int(block.get("value", 0)))
        if kind == "tabulated":
            return Tabulated(tuple(int(s) for s in block["support"]),
                             tuple(float(p) for p in block["probs"]))
        if kind == "poisson":
            return Poisson(float(block["rate"]))
        if kind == "geometric":
            return Geometric(float(block["mean"]))
        if kind == "heavy-tail":
            return HeavyTail(float(block["exponent"]),
                             float(block.get("scale", 1.0)))
        violations.append(f"{where}: unknown integer-law kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        violations.append(f"{where}: {exc}")
    return Constant(0)


def _describe_integer_law(law: IntegerLaw) -> dict:
    if isinstance(law, Constant):
        return {"kind": "constant", "value": law.value}
    if isinstance(law, Tabulated):
        return {"kind": "tabulated", "support": list(law.support),
                "probs": list(law.probs)}
    if isinstance(law, Poisson):
        return {"kind": "poisson", "rate": law.rate}
    if isinstance(law, Geometric):
        return {"kind": "geometric", "mean": law.mean_value}
    if isinstance(law, HeavyTail):
        return {"kind": "heavy-tail", "exponent": law.exponent,
                "scale": law.scale}
    raise TypeError(f"unserializable law {type(law).__name__}")


def _build_offspring(block, violations) -> OffspringLaw:
    fallback = OffspringLaw.binary()
    if not isinstance(block, dict) or "kind" not in block:
        violations.append("process.offspring: expected a mapping with 'kind'")
        return fallback
    kind = block["kind"]
    try:
        if kind == "tabulated":
            return OffspringLaw.tabulated(block["support"], block["probs"])
        if kind == "geometric":
            return OffspringLaw.geometric(float(block["b"]))
        return OffspringLaw(kind)
    except (KeyError, TypeError, ValueError) as exc:
        violations.append(f"process.offspring: {exc}")
        return fallback


def _describe_offspring(law: OffspringLaw) -> dict:
    out = {"kind": law.kind}
    if law.kind == "tabulated":
        out["support"] = list(law.support)
        out["probs"] = list(law.probs)
    elif law.kind == "geometric":
        out["b"] = law.b_value
    return out


def _describe_process(proc: ProcessConfig) -> dict:
    mig = proc.migration
    return {
        "y0": proc.y0,
        "offspring": _describe_offspring(proc.offspring),
        "migration": {
            "p": mig.p, "q": mig.q, "r": mig.r,
            "immigration_plus": _describe_integer_law(mig.immigration_plus),
            "immigration_zero": _describe_integer_law(mig.immigration_zero),
            "family_emigration": _describe_integer_law(mig.family_emigration),
            "individual_emigration": _describe_integer_law(
                mig.individual_emigration),
        },
    }


def _describe_down(law: DownPeriodLaw) -> dict:
    if law.kind == "geometric":
        return {"kind": "geometric", "pi0": law.pi0}
    return {"kind": "heavy-tail", "alpha": law.alpha, "scale": law.scale}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML experiment document.

    Returns the validated config, or raises ``ConfigError`` listing every
    violation found.
    """
    violations: list[str] = []
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"])
    if not isinstance(doc, dict):
        raise ConfigError(["document must be a mapping"])

    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        violations.append(f"schema_version must be {SCHEMA_VERSION}, "
                          f"got {version!r}")

    experiment = doc.get("experiment", "custom")
    if experiment not in EXPERIMENT_NAMES:
        violations.append(f"unknown experiment {experiment!r}; expected one "
                          f"of {', '.join(EXPERIMENT_NAMES)}")
        experiment = "custom"

    seed = _intval(doc, "seed", 0, violations, minimum=0)
    replications = _intval(doc, "replications", 10_000, violations, minimum=1)
    workers = _intval(doc, "workers", 1, violations, minimum=1)
    cycle_cap = _intval(doc, "cycle_cap", DEFAULT_CYCLE_CAP, violations,
                        minimum=1)

    horizons_raw = doc.get("horizons", [1000])
    horizons: tuple[int, ...] = ()
    if (not isinstance(horizons_raw, (list, tuple)) or not horizons_raw
            or any(not isinstance(h, int) or h < 2 for h in horizons_raw)):
        violations.append("horizons must be a nonempty list of integers >= 2")
    else:
        horizons = tuple(sorted(set(int(h) for h in horizons_raw)))

    process = _parse_process(doc.get("process"), violations)
    down = _parse_down_period(doc.get("down_period"), process, violations)
    c_regime = _parse_c_regime(doc.get("c_regime", "zero"), violations)

    out_block = doc.get("output") or {}
    output_dir = str(out_block.get("directory", "results"))
    formats_raw = out_block.get("formats", ["json", "csv"])
    if (not isinstance(formats_raw, (list, tuple))
            or any(f not in _FORMATS for f in formats_raw)):
        violations.append(f"output.formats entries must be among {_FORMATS}")
        formats_raw = ["json"]
    trajectory_dump = bool(out_block.get("trajectory_dump", False))

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_block = doc.get("tolerances") or {}
    if not isinstance(tol_block, dict):
        violations.append("tolerances must be a mapping")
    else:
        for key, value in tol_block.items():
            if key not in DEFAULT_TOLERANCES:
                violations.append(f"tolerances: unknown key {key!r}")
            elif not isinstance(value, (int, float)) or value <= 0:
                violations.append(f"tolerances.{key} must be positive")
            else:
                tolerances[key] = float(value)

    if cycle_cap < (max(horizons) if horizons else 1):
        violations.append("cycle_cap must be >= the largest horizon")

    if process is not None and down is not None:
        _validate_regime(experiment, process, down, c_regime, violations)

    if violations:
        raise ConfigError(violations)

    return ExperimentConfig(
        experiment=experiment, seed=seed, replications=replications,
        horizons=horizons, process=process, down_period=down,
        c_regime=c_regime, cycle_cap=cycle_cap, workers=workers,
        output_dir=output_dir, formats=tuple(formats_raw),
        trajectory_dump=trajectory_dump, tolerances=tolerances)


def _intval(doc, key, default, violations, minimum):
    value = doc.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        violations.append(f"{key} must be an integer >= {minimum}")
        return default
    return value


def _parse_process(block, violations) -> ProcessConfig | None:
    if not isinstance(block, dict):
        violations.append("missing 'process' block")
        return None
    offspring = _build_offspring(block.get("offspring"), violations)
    mig_block = block.get("migration")
    if not isinstance(mig_block, dict):
        violations.append("process.migration: expected a mapping")
        return None
    try:
        p = float(mig_block.get("p", 0.0))
        q = float(mig_block.get("q", 0.0))
        r = float(mig_block.get("r", 0.0))
    except (TypeError, ValueError):
        violations.append("process.migration: p, q, r must be numbers")
        return None
    laws = {
        name: _build_integer_law(mig_block.get(name),
                                 f"process.migration.{name}", violations)
        for name in ("immigration_plus", "immigration_zero",
                     "family_emigration", "individual_emigration")
    }
    try:
        migration = MigrationParams(p=p, q=q, r=r, **laws)
    except ValueError as exc:
        violations.append(f"process.migration: {exc}")
        return None
    y0 = block.get("y0", 0)
    if not isinstance(y0, int) or y0 < 0:
        violations.append("process.y0 must be a nonnegative integer")
        y0 = 0
    return ProcessConfig(offspring=offspring, migration=migration, y0=y0)


def _parse_down_period(block, process, violations) -> DownPeriodLaw | None:
    if block is None:
        block = {"kind": "native"}
    if not isinstance(block, dict) or "kind" not in block:
        violations.append("down_period: expected a mapping with 'kind'")
        return None
    kind = block["kind"]
    try:
        if kind == "native":
            if process is None:
                return None
            return DownPeriodLaw.native(process.migration)
        if kind == "geometric":
            return DownPeriodLaw.geometric(float(block["pi0"]))
        if kind == "heavy-tail":
            return DownPeriodLaw.heavy_tail(float(block["alpha"]),
                                            float(block.get("scale", 1.0)))
        violations.append(f"down_period: unknown kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        violations.append(f"down_period: {exc}")
    return None


def _parse_c_regime(block, violations):
    if block == "zero":
        return 0.0
    if block == "infinite":
        return C_INFINITE
    if isinstance(block, dict) and set(block) == {"finite"}:
        value = block["finite"]
        if not isinstance(value, (int, float)) or value <= 0:
            violations.append("c_regime.finite must be a positive number")
            return 0.0
        return float(value)
    violations.append("c_regime must be 'zero', 'infinite', or {finite: value}")
    return 0.0


# ---------------------------------------------------------------------------
# Named-experiment regime validation
# ---------------------------------------------------------------------------

def effective_up_tail_exponent(process: ProcessConfig) -> float:
    """Tail exponent of the cycle lifetime: (1 - theta) vee 0, except that a
    heavy immigration-at-zero law with exponent rho dominates when
    theta + rho < 1."""
    beta = process.beta
    izero = process.migration.immigration_zero
    if isinstance(izero, HeavyTail) and process.theta + izero.exponent < 1.0:
        return izero.exponent
    return beta


def check_c_regime(process: ProcessConfig, down: DownPeriodLaw,
                   c_regime) -> str | None:
    """Consistency of the declared c against the tail exponents.

    Finite-mean down-periods, or a down-tail heavier-exponent (alpha > beta),
    force c = 0; alpha < beta forces c = infinity; only alpha = beta admits a
    finite positive c.  Returns a violation message or None.
    """
    beta = effective_up_tail_exponent(process)
    if down.finite_mean or (down.kind == "heavy-tail" and down.alpha > beta):
        if is_infinite_c(c_regime) or float(c_regime) != 0.0:
            return ("c_regime must be 'zero': the down-period tail is "
                    "strictly lighter than the up-period tail")
        return None
    if down.kind == "heavy-tail" and down.alpha < beta:
        if not is_infinite_c(c_regime):
            return ("c_regime must be 'infinite': the down-period tail is "
                    "strictly heavier than the up-period tail")
        return None
    # alpha == beta: any declared regime is admissible in principle, but a
    # nonzero finite c is the generic case.
    return None


def _validate_regime(experiment: str, process: ProcessConfig,
                     down: DownPeriodLaw, c_regime, violations):
    theta = process.theta
    izero = process.migration.immigration_zero
    heavy_zero = isinstance(izero, HeavyTail)

    def need(cond, msg):
        if not cond:
            violations.append(f"{experiment}: {msg}")

    if experiment == "custom":
        return
    if experiment == "theorem-old-I":
        need(theta > 0, f"requires theta > 0, got theta = {theta:g}")
    elif experiment == "theorem-old-II":
        need(theta == 0, f"requires theta = 0, got theta = {theta:g}")
        need(math.isfinite(process.migration.immigration_plus.mean),
             "requires finite-variance immigration while positive")
    elif experiment == "theorem-old-III":
        need(theta < 0, f"requires theta < 0, got theta = {theta:g}")
    elif experiment == "cycle-lifetime":
        need(theta >= 0, f"requires theta >= 0, got theta = {theta:g}")
    elif experiment == "theorem-main-Ia":
        need(0 < theta < 0.5,
             f"requires 0 < theta < 1/2, got theta = {theta:g}")
        need(not is_infinite_c(c_regime),
             "requires a finite c (use theorem-main-Ib for c = infinity)")
    elif experiment == "theorem-main-Ib":
        need(0 < theta < 0.5,
             f"requires 0 < theta < 1/2, got theta = {theta:g}")
        need(is_infinite_c(c_regime), "requires c_regime 'infinite'")
        need(down.kind == "heavy-tail",
             "requires a heavy-tailed down-period law")
    elif experiment == "theorem-main-II":
        need(theta == 0, f"requires theta = 0, got theta = {theta:g}")
    elif experiment == "theorem-main-III":
        need(theta < 0, f"requires theta < 0, got theta = {theta:g}")
    elif experiment == "theorem-rho-cycle":
        need(heavy_zero,
             "requires heavy-tailed immigration at zero")
        need(theta < 0.5, f"requires theta < 1/2, got theta = {theta:g}")
    elif experiment == "theorem-rho-II":
        need(heavy_zero, "requires heavy-tailed immigration at zero")
        need(theta < 0.5, f"requires theta < 1/2, got theta = {theta:g}")
        if heavy_zero:
            need(theta + izero.exponent < 1.0,
                 "requires theta + rho < 1")

    err = check_c_regime(process, down, c_regime)
    if err is not None:
        violations.append(f"{experiment}: {err}")


# ---------------------------------------------------------------------------
# Round trip back to YAML (used by list-experiments and tests)
# ---------------------------------------------------------------------------

def render_config(config: ExperimentConfig) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "seed": config.seed,
        "replications": config.replications,
        "horizons": list(config.horizons),
        "workers": config.workers,
        "cycle_cap": config.cycle_cap,
        "c_regime": ("infinite" if is_infinite_c(config.c_regime)
                     else ("zero" if float(config.c_regime) == 0.0
                           else {"finite": float(config.c_regime)})),
        "process": _describe_process(config.process),
        "down_period": _describe_down(config.down_period),
        "output": {"directory": config.output_dir,
                   "formats": list(config.formats),
                   "trajectory_dump": config.trajectory_dump},
        "tolerances": config.tolerances,
    }
    return yaml.safe_dump(doc, sort_keys=False)
