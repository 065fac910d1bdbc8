"""Distribution descriptors and exact samplers for the migration model.

Covers the four ingredient families of the construction: critical offspring
laws (mean one, variance 2b), the (p, q, r)-switched migration components,
down-period laws (geometric or with a pure power tail in the normal domain of
attraction of a positive stable law), and the heavy-tailed positive integer
sampler used both for down-periods and for immigration at zero.

All samplers are pure functions of (law, stream); batch variants are
vectorized with numpy and are the ones used by the simulation engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream

_PMF_TOL = 1e-12


# ---------------------------------------------------------------------------
# Nonnegative-integer component laws (immigration / emigration ingredients)
# ---------------------------------------------------------------------------

class IntegerLaw:
    """Base class for the nonnegative-integer ingredient laws."""

    mean: float
    # largest attainable value, or None when the support is unbounded
    max_value: int | None = None

    def sample(self, stream: RngStream, size: int | None = None):
        raise NotImplementedError

    @property
    def p_zero(self) -> float:
        raise NotImplementedError

    def sample_positive(self, stream: RngStream, size: int) -> np.ndarray:
        """Draws conditioned on being positive (redraw-the-zeros)."""
        if self.p_zero >= 1.0:
            raise ValueError("law has no mass on positive integers")
        out = np.asarray(self.sample(stream, size), dtype=np.int64)
        bad = out == 0
        while bad.any():
            out[bad] = self.sample(stream, int(bad.sum()))
            bad = out == 0
        return out


@dataclass(frozen=True)
class Constant(IntegerLaw):
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("constant law value must be nonnegative")

    @property
    def mean(self) -> float:
        return float(self.value)

    @property
    def max_value(self) -> int:
        return self.value

    @property
    def p_zero(self) -> float:
        return 1.0 if self.value == 0 else 0.0

    def sample(self, stream, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value, dtype=np.int64)


@dataclass(frozen=True)
class Tabulated(IntegerLaw):
    """Finite-support pmf over nonnegative integers."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        pr = np.asarray(self.probs, dtype=float)
        if sup.size == 0 or sup.size != pr.size:
            raise ValueError("support and probs must be nonempty and equal length")
        if (sup < 0).any():
            raise ValueError("support must be nonnegative integers")
        if (pr < 0).any() or abs(pr.sum() - 1.0) > _PMF_TOL:
            raise ValueError("pmf must be nonnegative and sum to 1 within 1e-12")

    def _arrays(self):
        return (np.asarray(self.support, dtype=np.int64),
                np.asarray(self.probs, dtype=float))

    @property
    def mean(self) -> float:
        sup, pr = self._arrays()
        return float(sup @ pr)

    @property
    def max_value(self) -> int:
        return int(max(self.support))

    @property
    def p_zero(self) -> float:
        sup, pr = self._arrays()
        return float(pr[sup == 0].sum())

    def sample(self, stream, size=None):
        sup, pr = self._arrays()
        draw = stream.generator.choice(sup, size=size, p=pr)
        if size is None:
            return int(draw)
        return draw.astype(np.int64)


@dataclass(frozen=True)
class Poisson(IntegerLaw):
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("Poisson rate must be nonnegative")

    @property
    def mean(self) -> float:
        return self.rate

    max_value = None

    @property
    def p_zero(self) -> float:
        return math.exp(-self.rate)

    def sample(self, stream, size=None):
        draw = stream.generator.poisson(self.rate, size=size)
        return int(draw) if size is None else draw.astype(np.int64)


@dataclass(frozen=True)
class Geometric(IntegerLaw):
    """Geometric law on {0, 1, 2, ...} with the given mean:
    P{k} = (1/(1+m)) (m/(1+m))^k."""

    mean_value: float

    def __post_init__(self):
        if self.mean_value <= 0:
            raise ValueError("geometric mean must be positive")

    @property
    def mean(self) -> float:
        return self.mean_value

    max_value = None

    @property
    def p_zero(self) -> float:
        return 1.0 / (1.0 + self.mean_value)

    def sample(self, stream, size=None):
        draw = stream.generator.geometric(1.0 / (1.0 + self.mean_value),
                                          size=size) - 1
        return int(draw) if size is None else np.asarray(draw, dtype=np.int64)


@dataclass(frozen=True)
class HeavyTail(IntegerLaw):
    """Positive integer law with exact power tail P{T > t} = scale * t^-exponent.

    Sampled by inversion, T = ceil((scale/U)^(1/exponent)) with U uniform on
    (0, 1].  The exponent lies in (1/2, 1], the normal-domain-of-attraction
    range for positive stable laws; the slowly varying factor is the constant
    ``scale`` so the tail is known exactly.
    """

    exponent: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError("tail exponent must lie in (1/2, 1]")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError("tail scale must lie in (0, 1]")

    @property
    def mean(self) -> float:
        return math.inf

    max_value = None
    p_zero = 0.0

    def sample(self, stream, size=None):
        return sample_heavy_tail_integer(self.exponent, stream, size=size,
                                         scale=self.scale)


def sample_heavy_tail_integer(exponent: float, stream: RngStream,
                              size: int | None = None, scale: float = 1.0):
    """ceil((scale/U)^(1/exponent)) for U uniform on (0, 1].

    Gives P{T > t} = scale * t^-exponent exactly at integer t with
    t^exponent >= scale.  Used for down-periods and heavy-tailed immigration
    at zero; exponents outside (1/2, 1] are rejected.
    """
    if not 0.5 < exponent <= 1.0:
        raise ValueError("tail exponent must lie in (1/2, 1]")
    u = 1.0 - stream.generator.random(size)  # uniform on (0, 1]
    t = np.ceil((scale / u) ** (1.0 / exponent))
    if size is None:
        return int(t)
    return t.astype(np.int64)


# ---------------------------------------------------------------------------
# Offspring laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffspringLaw:
    """A critical offspring distribution: mean exactly 1, variance 2b.

    ``kind`` selects the sampling route:

    * ``binary``            P{0} = P{2} = 1/2           (b = 1/2)
    * ``shifted-geometric`` P{k} = 2^-(k+1), k >= 0     (b = 1)
    * ``unit-poisson``      Poisson(1)                  (b = 1/2)
    * ``geometric``         linear-fractional with any b: P{0} = b/(1+b),
                            P{k} = (1/(1+b)^2)(b/(1+b))^(k-1) for k >= 1
    * ``tabulated``         arbitrary finite pmf with mean 1

    The limit theory only constrains the mean and variance, so these
    built-ins are chosen to cover distinct b values.  Every built-in has all
    moments finite, so the moment conditions of each theta regime hold
    automatically.
    """

    kind: str
    support: tuple[int, ...] = ()
    probs: tuple[float, ...] = ()
    b_value: float = 0.0

    _KINDS = ("binary", "shifted-geometric", "unit-poisson", "geometric",
              "tabulated")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown offspring kind {self.kind!r}")
        if self.kind == "geometric" and self.b_value <= 0:
            raise ValueError("geometric offspring requires b_value > 0")
        if self.kind == "tabulated":
            law = Tabulated(self.support, self.probs)
            if abs(law.mean - 1.0) > _PMF_TOL:
                raise ValueError("tabulated offspring law must have mean 1")
        if self.variance <= 0 or not math.isfinite(self.variance):
            raise ValueError("offspring variance must be positive and finite")

    # -- constructors -------------------------------------------------------

    @classmethod
    def binary(cls) -> "OffspringLaw":
        return cls("binary")

    @classmethod
    def shifted_geometric(cls) -> "OffspringLaw":
        return cls("shifted-geometric")

    @classmethod
    def unit_poisson(cls) -> "OffspringLaw":
        return cls("unit-poisson")

    @classmethod
    def geometric(cls, b: float) -> "OffspringLaw":
        """Linear-fractional critical law with the requested b."""
        return cls("geometric", b_value=float(b))

    @classmethod
    def tabulated(cls, support, probs) -> "OffspringLaw":
        return cls("tabulated", tuple(int(s) for s in support),
                   tuple(float(p) for p in probs))

    # -- moments ------------------------------------------------------------

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def variance(self) -> float:
        if self.kind == "binary":
            return 1.0
        if self.kind == "shifted-geometric":
            return 2.0
        if self.kind == "unit-poisson":
            return 1.0
        if self.kind == "geometric":
            return 2.0 * self.b_value
        sup = np.asarray(self.support, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        return float((sup - 1.0) ** 2 @ pr)

    @property
    def b(self) -> float:
        """Half the offspring variance, the natural scale in Z_t/(bt)."""
        return self.variance / 2.0

    # Finite support or sub-exponential tails in every supported kind, so
    # E X^2 log(1+X), E X^2 log^2(1+X) and E X^(1-theta) are all finite.
    finite_x2_log = True
    finite_x2_log2 = True

    def finite_power_moment(self, order: float) -> bool:
        return True

    # -- sampling -----------------------------------------------------------

    def sample(self, stream: RngStream, size: int | None = None):
        g = stream.generator
        if self.kind == "binary":
            draw = 2 * g.integers(0, 2, size=size)
        elif self.kind == "shifted-geometric":
            draw = g.geometric(0.5, size=size) - 1
        elif self.kind == "unit-poisson":
            draw = g.poisson(1.0, size=size)
        elif self.kind == "geometric":
            s = 1.0 / (1.0 + self.b_value)
            nonzero = g.random(size) < s
            draw = np.where(nonzero, g.geometric(s, size=size), 0)
            if size is None:
                return int(draw)
        else:
            return Tabulated(self.support, self.probs).sample(stream, size)
        if size is None:
            return int(draw)
        return np.asarray(draw, dtype=np.int64)

    def sample_sum(self, counts: np.ndarray, stream: RngStream) -> np.ndarray:
        """Sum of counts[i] iid offspring draws, one total per entry.

        Uses the closed summation law of each kind (binomial, negative
        binomial, Poisson, multinomial) so large populations cost O(1) draws.
        """
        counts = np.asarray(counts, dtype=np.int64)
        g = stream.generator
        out = np.zeros(counts.shape, dtype=np.int64)
        pos = counts > 0
        if not pos.any():
            return out
        n = counts[pos]
        if self.kind == "binary":
            out[pos] = 2 * g.binomial(n, 0.5)
        elif self.kind == "shifted-geometric":
            out[pos] = g.negative_binomial(n, 0.5)
        elif self.kind == "unit-poisson":
            out[pos] = g.poisson(n.astype(float))
        elif self.kind == "geometric":
            # families with nonzero offspring, then their shifted-geometric
            # totals through the negative binomial closure
            s = 1.0 / (1.0 + self.b_value)
            k = g.binomial(n, s)
            total = k.astype(np.int64)
            live = k > 0
            if live.any():
                total[live] += g.negative_binomial(k[live], s)
            out[pos] = total
        else:
            sup = np.asarray(self.support, dtype=np.int64)
            cells = g.multinomial(n, np.asarray(self.probs, dtype=float))
            out[pos] = cells @ sup
        return out


# ---------------------------------------------------------------------------
# Migration parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MigrationParams:
    """The (p, q, r) switch plus the component laws of the migration term.

    While the process is positive, each generation sees emigration of
    ``family_emigration`` families plus ``individual_emigration`` individuals
    with probability p, no migration with probability q, or immigration of
    ``immigration_plus`` with probability r.  At zero, ``immigration_zero``
    enters with probability r.  Emigration laws must be a.s. bounded;
    ``immigration_plus`` must have finite mean; ``immigration_zero`` is
    either finite-mean or the heavy-tail variant with exponent in (1/2, 1].
    """

    p: float
    q: float
    r: float
    immigration_plus: IntegerLaw = field(default_factory=lambda: Constant(0))
    immigration_zero: IntegerLaw = field(default_factory=lambda: Constant(0))
    family_emigration: IntegerLaw = field(default_factory=lambda: Constant(0))
    individual_emigration: IntegerLaw = field(default_factory=lambda: Constant(0))

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if abs(self.p + self.q + self.r - 1.0) > _PMF_TOL:
            raise ValueError("probabilities must sum to 1")
        for name in ("family_emigration", "individual_emigration"):
            if getattr(self, name).max_value is None:
                raise ValueError(f"{name} must have bounded support")
        if self.r > 0 and not math.isfinite(self.immigration_plus.mean):
            raise ValueError("immigration_plus must have finite mean")
        izero = self.immigration_zero
        if (self.r > 0 and not math.isfinite(izero.mean)
                and not isinstance(izero, HeavyTail)):
            raise ValueError("immigration_zero must be finite-mean or heavy-tail")

    @property
    def mean_plus(self) -> float:
        """E M_t^+ = r E[I+] - p (E[famE] + E[indE]), using E X = 1."""
        emig = self.family_emigration.mean + self.individual_emigration.mean
        return self.r * self.immigration_plus.mean - self.p * emig

    def theta(self, b: float) -> float:
        """The migration-to-reproduction balance E M_t^+ / b."""
        if b <= 0:
            raise ValueError("b must be positive")
        return self.mean_plus / b

    @property
    def p_leave_zero(self) -> float:
        """P{M_t^o != 0} = r P{I_t^o > 0}, the native geometric parameter."""
        return self.r * (1.0 - self.immigration_zero.p_zero)


# ---------------------------------------------------------------------------
# Down-period laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DownPeriodLaw:
    """Distribution of the zero-stay duration T_d (always >= 1).

    ``geometric``:  P{T_d = k} = (1 - pi0)^(k-1) pi0, the law induced by the
    migration model itself with pi0 = P{M_t^o != 0}.
    ``heavy-tail``: exact power tail with exponent alpha in (1/2, 1], via the
    same inversion sampler as the heavy immigration law.
    """

    kind: str
    pi0: float = 0.0
    alpha: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "geometric":
            if not 0.0 < self.pi0 <= 1.0:
                raise ValueError("geometric pi0 must lie in (0, 1]")
        elif self.kind == "heavy-tail":
            if not 0.5 < self.alpha <= 1.0:
                raise ValueError("heavy-tail alpha must lie in (1/2, 1]")
            if not 0.0 < self.scale <= 1.0:
                raise ValueError("heavy-tail scale must lie in (0, 1]")
        else:
            raise ValueError(f"unknown down-period kind {self.kind!r}")

    @classmethod
    def geometric(cls, pi0: float) -> "DownPeriodLaw":
        return cls("geometric", pi0=pi0)

    @classmethod
    def heavy_tail(cls, alpha: float, scale: float = 1.0) -> "DownPeriodLaw":
        return cls("heavy-tail", alpha=alpha, scale=scale)

    @classmethod
    def native(cls, migration: MigrationParams) -> "DownPeriodLaw":
        """The geometric law the migration model induces at zero."""
        return cls.geometric(migration.p_leave_zero)

    @property
    def mean(self) -> float:
        if self.kind == "geometric":
            return 1.0 / self.pi0
        return math.inf if self.alpha <= 1.0 else 1.0 / (self.alpha - 1.0)

    @property
    def finite_mean(self) -> bool:
        return self.kind == "geometric"

    def survival(self, t: float) -> float:
        """P{T_d > t} for integer t >= 0."""
        if self.kind == "geometric":
            return (1.0 - self.pi0) ** math.floor(t)
        return min(1.0, self.scale * t ** -self.alpha) if t > 0 else 1.0

    def sample(self, stream: RngStream, size: int | None = None):
        if self.kind == "geometric":
            draw = stream.generator.geometric(self.pi0, size=size)
            if size is None:
                return int(draw)
            return np.asarray(draw, dtype=np.int64)
        return sample_heavy_tail_integer(self.alpha, stream, size=size,
                                         scale=self.scale)


# ---------------------------------------------------------------------------
# Operation wrappers
# ---------------------------------------------------------------------------

def sample_offspring(law: OffspringLaw, stream: RngStream) -> int:
    return law.sample(stream)


def sample_down_period(law: DownPeriodLaw, stream: RngStream) -> int:
    return law.sample(stream)


def sample_migration_plus(params: MigrationParams, offspring_draws,
                          stream: RngStream,
                          offspring_law: OffspringLaw | None = None) -> int:
    """One draw of M_t^+ given the current generation's family offspring.

    Family emigration removes the offspring of the first famE simulated
    families; when famE exceeds the available families, the missing offspring
    values are drawn fresh from ``offspring_law`` (the max{., 0} barrier of
    the recurrence absorbs any overshoot downstream).
    """
    g = stream.generator
    u = g.random()
    if u < params.p:
        fam = params.family_emigration.sample(stream)
        ind = params.individual_emigration.sample(stream)
        avail = list(offspring_draws[:fam])
        missing = fam - len(avail)
        if missing > 0:
            if offspring_law is None:
                raise ValueError("family emigration exceeded available "
                                 "families; pass offspring_law for the excess")
            avail.extend(offspring_law.sample(stream) for _ in range(missing))
        return -int(sum(avail)) - int(ind)
    if u < params.p + params.q:
        return 0
    return int(params.immigration_plus.sample(stream))


def sample_migration_zero(params: MigrationParams, stream: RngStream) -> int:
    """One draw of M_t^o: 0 with probability 1 - r, else a fresh I_t^o."""
    if stream.generator.random() < params.r:
        return int(params.immigration_zero.sample(stream))
    return 0
