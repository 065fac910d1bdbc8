"""Numerical evaluation of the analytic limit laws.

Implements the Beta-weighted regenerative mixture CDFs, the exponential-Beta
limit laws of the migration theorems, the Gamma and (shifted) uniform limits,
the Laplace transforms arising when immigration at zero is heavy-tailed, and
the numerical machinery they need: regularized incomplete Beta (real and
complex argument), singular-endpoint quadrature, and Abate-Whitt Euler
inversion of Laplace transforms of CDFs.

All evaluators are pure and reentrant.  CDFs only; no densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .process import CycleRecord
from .quadrature import QuadratureSpec, quad_singular


# ---------------------------------------------------------------------------
# The c = infinity regime marker
# ---------------------------------------------------------------------------

class _InfiniteC:
    """Symbolic marker for the c = infinity regime.

    The regenerative limit branches structurally on c, so the infinite case
    is a distinct value rather than a float; unconditional evaluators reject
    it and point at their conditional variants.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "C_INFINITE"


C_INFINITE = _InfiniteC()


def is_infinite_c(c) -> bool:
    return isinstance(c, _InfiniteC)


def _check_finite_c(c, conditional_name: str) -> float:
    if is_infinite_c(c):
        raise ValueError(f"c = infinity is the conditional regime; "
                         f"use {conditional_name}")
    c = float(c)
    if c < 0:
        raise ValueError("c must be nonnegative")
    return c


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def beta_function(a: float, b: float) -> float:
    """B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b), for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError("Beta function requires positive arguments")
    return math.exp(sp.betaln(a, b))


def incomplete_beta_ratio(x, a: float, b: float):
    """Regularized incomplete Beta I_x(a, b) = B_x(a, b) / B(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("incomplete Beta requires positive parameters")
    x_arr = np.asarray(x, dtype=float)
    if (x_arr < 0).any() or (x_arr > 1).any():
        raise ValueError("x must lie in [0, 1]")
    out = sp.betainc(a, b, x_arr)
    return float(out) if np.isscalar(x) else out


def _incomplete_beta_ratio_complex(x: complex, a: float, b: float) -> complex:
    """I_x(a, b) continued off [0, 1]: x^a/B(a,b) * int u^(a-1)(1-xu)^(b-1) du.

    Valid whenever the segment [0, x] avoids the cut [1, inf), which holds
    for x = lambda/(lambda+1) with Re(lambda) > 0 as used on the Laplace
    inversion contour.
    """
    if x == 0:
        return 0.0 + 0.0j
    integral = quad_singular(lambda u: (1.0 - x * u) ** (b - 1.0),
                             QuadratureSpec(a, 1.0, tol=1e-12))
    return x ** a * integral / beta_function(a, b)


def gamma_cdf(x, theta: float):
    """Regularized lower incomplete gamma: the Gamma(theta, 1) CDF."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    x_arr = np.maximum(np.asarray(x, dtype=float), 0.0)
    out = sp.gammainc(theta, x_arr)
    return float(out) if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# Regenerative mixture CDFs
# ---------------------------------------------------------------------------

def brt_cdf_unconditional(x: float, d_cdf, beta: float, gamma: float,
                          c) -> float:
    """(c + G(x))/(c + 1) with G the Beta(1-beta, beta)-weighted mixture of
    the cycle limit law D read at x u^-gamma."""
    c = _check_finite_c(c, "brt_cdf_conditional")
    if not 0.5 < beta < 1.0:
        raise ValueError("beta must lie in (1/2, 1)")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if x < 0:
        return 0.0
    g = _beta_mixture(x, d_cdf, gamma, a=1.0 - beta, b=beta)
    return (c + g) / (c + 1.0)


def brt_cdf_conditional(x: float, d_cdf, alpha: float, beta: float,
                        gamma: float) -> float:
    """The c = infinity branch: mixture with weight u^-beta (1-u)^(alpha-1),
    normalized by B(1-beta, alpha)."""
    if not 0.5 < beta < 1.0:
        raise ValueError("beta must lie in (1/2, 1)")
    if not 0.5 < alpha <= 1.0:
        raise ValueError("alpha must lie in (1/2, 1]")
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if x < 0:
        return 0.0
    return _beta_mixture(x, d_cdf, gamma, a=1.0 - beta, b=alpha)


def _beta_mixture(x: float, d_cdf, gamma: float, a: float, b: float) -> float:
    def smooth(u):
        with np.errstate(divide="ignore", over="ignore"):
            arg = np.where(u > 0, x * u ** -gamma, np.inf)
        return np.asarray(d_cdf(arg), dtype=float)

    return quad_singular(smooth, QuadratureSpec(a, b)) / beta_function(a, b)


def main_limit_cdf(x: float, theta: float, c) -> float:
    """Unconditional limit of Z_t/(bt) for 0 < theta < 1/2, finite c:
    1 - (1/((c+1) B(theta, 1-theta))) int e^(-x/y) y^(theta-1) (1-y)^(-theta) dy.

    (The proof line shows e^(x/u); only the minus sign yields a CDF and the
    Beta-Gamma cross-check at c = 0 confirms it.)
    """
    c = _check_finite_c(c, "main_limit_cdf_conditional")
    if not 0.0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    if x < 0:
        return 0.0
    integral = quad_singular(lambda y: np.exp(-x / y),
                             QuadratureSpec(theta, 1.0 - theta))
    return 1.0 - integral / ((c + 1.0) * beta_function(theta, 1.0 - theta))


def main_limit_cdf_conditional(x: float, theta: float, alpha: float) -> float:
    """Conditional limit for c = infinity:
    1 - (1/B(theta, alpha)) int e^(-x/y) y^(theta-1) (1-y)^(alpha-1) dy."""
    if not 0.0 < theta < 0.5:
        raise ValueError("theta must lie in (0, 1/2)")
    if not 0.5 < alpha <= 1.0:
        raise ValueError("alpha must lie in (1/2, 1]")
    if x < 0:
        return 0.0
    integral = quad_singular(lambda y: np.exp(-x / y),
                             QuadratureSpec(theta, alpha))
    return 1.0 - integral / beta_function(theta, alpha)


def log_scale_limit_cdf(x, c) -> float:
    """(c + x)/(c + 1) on [0, 1]; c = 0 is the unit uniform limit."""
    c = _check_finite_c(c, "the conditional uniform limit")
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return (c + x) / (c + 1.0)


def m_f(t: float, tail) -> float:
    """Integrated survival function int_0^t (1 - F(x)) dx."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0
    return t * quad_singular(lambda u: np.asarray(tail(t * u), dtype=float),
                             QuadratureSpec(1.0, 1.0))


def cdf_mean(cdf, x_max: float = 45.0, tol: float = 1e-8) -> float:
    """Mean of a law on [0, inf) by integrating its survival function.

    The survival integrand is integrated on [0, x_max]; the laws this is
    applied to have exponentially dominated tails there, so the truncation
    is below the requested tolerance for x_max around 40+.
    """
    def smooth(u):
        xs = x_max * u
        return np.array([1.0 - cdf(float(x)) for x in np.atleast_1d(xs)])

    return x_max * quad_singular(smooth, QuadratureSpec(1.0, 1.0, tol=tol))


# ---------------------------------------------------------------------------
# Section-5 Laplace transforms (heavy-tailed immigration at zero)
# ---------------------------------------------------------------------------

def _check_rho_theta(theta: float, rho: float):
    if not 0.5 < rho < 1.0:
        raise ValueError("rho must lie in (1/2, 1)")
    if theta + rho >= 1.0:
        raise ValueError("requires theta + rho < 1")
    if theta >= 0.5:
        raise ValueError("theta must be below 1/2")


def phi_laplace(lam, theta: float, rho: float):
    """Laplace transform of the conditional cycle limit when the
    immigration-at-zero tail exponent rho dominates (theta + rho < 1).

    Accepts complex lam with positive real part (used on the inversion
    contour); real lam must be nonnegative.
    """
    _check_rho_theta(theta, rho)
    if not isinstance(lam, complex):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if lam == 0:
            return 1.0
    term2 = (lam ** rho * (1.0 - theta - rho)
             * beta_function(1.0 - rho, 1.0 - theta)
             / (1.0 + lam) ** (theta + rho))
    if theta == 0.0:
        result = 1.0 - term2
    else:
        integral = quad_singular(lambda y: (1.0 + lam * y) ** (-(theta + 1.0)),
                                 QuadratureSpec(1.0, 1.0 - rho))
        result = 1.0 - term2 - lam * theta * integral
    return result


def _double_mixture_integral(lam, theta: float, rho: float, b_exp: float):
    """int int u^(1-rho) (1-u)^(b_exp-1) (1+lam*y*u)^(-theta-1) (1-y)^(-rho) dy du."""
    def outer(us):
        vals = []
        for u in np.atleast_1d(us):
            inner = quad_singular(
                lambda y: (1.0 + lam * y * u) ** (-(theta + 1.0)),
                QuadratureSpec(1.0, 1.0 - rho, tol=1e-11))
            vals.append(inner)
        return np.asarray(vals)

    return quad_singular(outer, QuadratureSpec(2.0 - rho, b_exp, tol=1e-11))


def lt1(lam, theta: float, rho: float, c):
    """Transform of the regenerative limit for finite c as printed:

    (1/(c+1)) (1 - I_{lam/(lam+1)}(rho, 1-theta-rho)/(lam+1)^theta
               - (lam theta / B(1-rho, rho)) * double mixture integral).

    Equals the Beta(1-rho, rho) mixture of phi(lam*u) over (c+1); note the
    value 1/(c+1) at lam = 0, i.e. the formula carries the continuous
    component of mass 1/(c+1) while the remaining c/(c+1) sits in an atom at
    zero contributed by the down-time.
    """
    c = _check_finite_c(c, "lt2")
    _check_rho_theta(theta, rho)
    if not isinstance(lam, complex):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if lam == 0:
            return 1.0 / (c + 1.0)
    x = lam / (lam + 1.0)
    if isinstance(lam, complex):
        i_term = _incomplete_beta_ratio_complex(x, rho, 1.0 - theta - rho)
    else:
        i_term = incomplete_beta_ratio(x, rho, 1.0 - theta - rho)
    result = 1.0 - i_term / (lam + 1.0) ** theta
    if theta != 0.0:
        dbl = _double_mixture_integral(lam, theta, rho, b_exp=rho)
        result = result - lam * theta * dbl / beta_function(1.0 - rho, rho)
    return result / (c + 1.0)


def _c_lambda(lam, alpha: float, theta: float, rho: float):
    """Normalizer of the conditional transform's incomplete-Beta term.

    The printed constant misplaces a factor (alpha+1-theta-rho): expanding
    the Beta(1-rho, alpha) mixture of phi gives
    1/C = (lam+1)^(alpha-theta-rho) lam^(rho-alpha)
          * (alpha+1-theta-rho) B(1-theta, alpha+1-rho),
    which also reproduces the theta = 0 closed form C = (lam/(lam+1))^(alpha-rho).
    """
    return (lam ** (alpha - rho)
            / ((lam + 1.0) ** (alpha - theta - rho)
               * (alpha + 1.0 - theta - rho)
               * beta_function(1.0 - theta, alpha + 1.0 - rho)))


def lt2(lam, theta: float, rho: float, alpha: float):
    """Transform of the conditional regenerative limit for c = infinity:

    1 - I_{lam/(lam+1)}(alpha, 1-theta-rho)/C_lambda(alpha, theta, rho)
      - (lam theta / B(1-rho, alpha)) * double mixture integral.
    """
    _check_rho_theta(theta, rho)
    if not 0.5 < alpha <= 1.0:
        raise ValueError("alpha must lie in (1/2, 1]")
    if not isinstance(lam, complex):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        if lam == 0:
            return 1.0
    x = lam / (lam + 1.0)
    if isinstance(lam, complex):
        i_term = _incomplete_beta_ratio_complex(x, alpha, 1.0 - theta - rho)
    else:
        i_term = incomplete_beta_ratio(x, alpha, 1.0 - theta - rho)
    result = 1.0 - i_term / _c_lambda(lam, alpha, theta, rho)
    if theta != 0.0:
        dbl = _double_mixture_integral(lam, theta, rho, b_exp=alpha)
        result = result - lam * theta * dbl / beta_function(1.0 - rho, alpha)
    return result


# ---------------------------------------------------------------------------
# Laplace inversion (Abate-Whitt Euler summation)
# ---------------------------------------------------------------------------

class InversionError(RuntimeError):
    """Raised when the Euler sum shows oscillatory divergence."""


def _euler_weights(m: int):
    xi = np.zeros(2 * m + 1)
    xi[0] = 0.5
    xi[1:m + 1] = 1.0
    xi[2 * m] = 2.0 ** -m
    for k in range(1, m):
        xi[2 * m - k] = xi[2 * m - k + 1] + 2.0 ** -m * sp.comb(m, k)
    k = np.arange(2 * m + 1)
    eta = np.where(k % 2 == 0, xi, -xi)
    nodes = m * math.log(10.0) / 3.0 + 1j * math.pi * k
    return eta, nodes


def invert_laplace_cdf(transform, x_grid, terms: int = 40) -> np.ndarray:
    """CDF values on x_grid from the transform E e^(-lam Z).

    Uses the Euler-accelerated Bromwich sum on L{H}(s) = transform(s)/s.
    ``transform`` must accept complex s with positive real part.  Raw values
    straying far outside [0, 1] indicate a divergent oscillation and raise;
    mild quadrature noise is clipped and the output monotonized.
    """
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or (np.diff(xs) <= 0).any() or xs[0] <= 0:
        raise ValueError("x_grid must be increasing and positive")
    m = max(terms // 2, 6)
    eta, nodes = _euler_weights(m)
    scale = 10.0 ** (m / 3.0)
    out = np.empty(xs.size)
    for i, x in enumerate(xs):
        s = nodes / x
        vals = np.array([transform(complex(sk)) / sk for sk in s])
        out[i] = scale / x * np.sum(eta * vals.real)
    if not np.all(np.isfinite(out)) or (out < -0.3).any() or (out > 1.3).any():
        raise InversionError("Euler summation diverged; transform is not a "
                             "completely monotone CDF transform at this precision")
    out = np.clip(out, 0.0, 1.0)
    return np.maximum.accumulate(out)


# ---------------------------------------------------------------------------
# Cycle-occupation stationary estimator (theta < 0 regime)
# ---------------------------------------------------------------------------

def stationary_occupation_values(cycles, downs, conditional: bool) -> np.ndarray:
    """Pooled occupation sample: each cycle's values on [0, T_u) plus, when
    unconditional, one zero per down-period step."""
    if len(cycles) == 0:
        raise ValueError("need at least one cycle")
    for cyc in cycles:
        if cyc.truncated:
            raise ValueError("truncated cycles cannot enter the stationary "
                             "estimate")
    parts = [np.asarray(c.path[:c.lifetime], dtype=np.int64) for c in cycles]
    if not conditional:
        total_down = int(np.sum(np.asarray(downs, dtype=np.int64)))
        parts.append(np.zeros(total_down, dtype=np.int64))
    return np.concatenate(parts)


def stationary_cdf_estimate(cycles, downs, x: float,
                            conditional: bool = False) -> float:
    """Monte Carlo occupation estimate of the stationary CDF at x."""
    pooled = stationary_occupation_values(cycles, downs, conditional)
    return float(np.mean(pooled <= x))


# ---------------------------------------------------------------------------
# Parameterized limit laws
# ---------------------------------------------------------------------------

@dataclass
class LimitLaw:
    """A named analytic limiting distribution exposing cdf(x).

    ``cdf`` accepts scalars or 1-D arrays and returns values in [0, 1].
    """

    kind: str
    cdf: callable
    params: dict = field(default_factory=dict)

    def describe(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    # -- factories ----------------------------------------------------------

    @classmethod
    def gamma(cls, theta: float) -> "LimitLaw":
        return cls("gamma", lambda x: gamma_cdf(x, theta), {"theta": theta})

    @classmethod
    def exponential(cls) -> "LimitLaw":
        return cls.gamma(1.0)

    @classmethod
    def unit_uniform(cls) -> "LimitLaw":
        return cls("unit-uniform",
                   lambda x: np.clip(np.asarray(x, dtype=float), 0.0, 1.0),
                   {})

    @classmethod
    def down_shifted_uniform(cls, c) -> "LimitLaw":
        c = _check_finite_c(c, "unit_uniform")

        def cdf(x):
            x_arr = np.asarray(x, dtype=float)
            out = np.where(x_arr < 0, 0.0,
                           (c + np.clip(x_arr, 0.0, 1.0)) / (c + 1.0))
            return float(out) if np.isscalar(x) else out

        return cls("down-shifted-uniform", cdf, {"c": c})

    @classmethod
    def exp_beta_mixture(cls, theta: float, c) -> "LimitLaw":
        c = _check_finite_c(c, "exp_beta_mixture_conditional")
        cdf = _vectorize_scalar(lambda x: main_limit_cdf(x, theta, c))
        return cls("exp-beta-mixture", cdf, {"theta": theta, "c": c})

    @classmethod
    def exp_beta_mixture_conditional(cls, theta: float,
                                     alpha: float) -> "LimitLaw":
        cdf = _vectorize_scalar(
            lambda x: main_limit_cdf_conditional(x, theta, alpha))
        return cls("exp-beta-mixture-conditional", cdf,
                   {"theta": theta, "alpha": alpha})

    @classmethod
    def brt_generic(cls, d_cdf, beta: float, gamma: float, c=None,
                    alpha: float | None = None) -> "LimitLaw":
        if alpha is not None:
            cdf = _vectorize_scalar(
                lambda x: brt_cdf_conditional(x, d_cdf, alpha, beta, gamma))
            return cls("brt-generic-conditional", cdf,
                       {"alpha": alpha, "beta": beta, "gamma": gamma})
        cdf = _vectorize_scalar(
            lambda x: brt_cdf_unconditional(x, d_cdf, beta, gamma, c))
        return cls("brt-generic", cdf,
                   {"beta": beta, "gamma": gamma, "c": c})

    @classmethod
    def from_transform(cls, transform, x_grid, terms: int = 40,
                       label: str = "transform-defined") -> "LimitLaw":
        """Tabulate the CDF by numerical inversion, interpolate in between."""
        xs = np.asarray(x_grid, dtype=float)
        values = invert_laplace_cdf(transform, xs, terms=terms)

        def cdf(x):
            x_arr = np.asarray(x, dtype=float)
            out = np.interp(x_arr, xs, values, left=0.0)
            return float(out) if np.isscalar(x) else out

        return cls(label, cdf, {"grid_min": float(xs[0]),
                                "grid_max": float(xs[-1]),
                                "terms": terms})


def _vectorize_scalar(f):
    def cdf(x):
        if np.isscalar(x):
            return f(float(x))
        return np.array([f(float(v)) for v in np.asarray(x, dtype=float)])

    return cdf
